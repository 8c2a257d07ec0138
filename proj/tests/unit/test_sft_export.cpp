// Copyright 2026 The MoveTok Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "doctest.h"
#include "helpers.hpp"
#include "sft_export.hpp"

using namespace movetok;
using namespace movetok::testing;

namespace {

constexpr std::int64_t kThursday = 20454;

Trajectory three_days() {
  return make_traj({{16, 1, 1}, {18, 1, 1}, {36, 0, 0},
                    {16, 1, 1, 1}, {30, 2, 2, 1}, {40, 0, 0, 1},
                    {17, 1, 1, 2}, {30, 2, 2, 2}, {31, 2, 2, 2}},
                   kThursday);
}

}  // namespace

TEST_CASE("trajectory text") {
  auto t = make_traj({{17, 1, 2}, {44, 0, 0}}, kThursday);
  CHECK(trajectory_text(t) ==
        "At Thursday 08:30, visited location cell_1_2; At Thursday 22:00, visited location cell_0_0");
  t.points[0].tokens = LocationTokenSeq{{1, 2, 3, 4}};
  CHECK(trajectory_text(t).rfind("At Thursday 08:30, visited location <a_1><b_2><c_3><d_4>;", 0) == 0);
}

TEST_CASE("prediction records") {
  const auto periods = PeriodPartition::standard();
  const auto t = make_traj({{16, 1, 1}, {18, 1, 1}, {36, 0, 0}}, kThursday);
  const auto r = prediction_record(t, periods, std::vector<double>{0.5, -1});
  CHECK(r.instruction.find("This is a user trajectory prediction task.") == 0);
  CHECK(r.instruction.find("Ground-truth trajectory text (always correct): At Thursday 08:00, visited location "
                           "cell_1_1; At Thursday 09:00, visited location cell_1_1\n") != std::string::npos);
  CHECK(r.instruction.find("<traj_data>") == std::string::npos);
  CHECK(r.instruction.find("<sequence>") != std::string::npos);
  CHECK(r.output ==
        "Summary of the spatio-temporal trajectory features:\n"
        "- Most frequently visited locations (visited more than once): cell_1_1\n"
        "- Probability of visits by time period (rounded to 5%): night (22:00-06:00): 0%, morning "
        "(06:00-12:00): 100%, afternoon (12:00-18:00): 0%, evening (18:00-22:00): 0%\n"
        "Next location index: cell_0_0");
  CHECK(r.sequence_embedding == std::vector<double>{0.5, -1});
  CHECK_THROWS_AS(prediction_record(make_traj({{1, 0, 0}}), periods, std::nullopt), Error);
}

TEST_CASE("generation records") {
  const auto periods = PeriodPartition::standard();
  const auto r = generation_record(three_days(), periods, std::nullopt);
  REQUIRE(r);
  CHECK(r->instruction.find("<history_text>") == std::string::npos);
  CHECK(r->instruction.find("At Friday 15:00, visited location cell_2_2") != std::string::npos);
  CHECK(r->output.rfind("Summary of the trajectory preferences for this user:\n", 0) == 0);
  CHECK(r->output.find("afternoon: No location was visited more than once") != std::string::npos);
  CHECK(r->output.find("\nAt Saturday 08:30, visited location cell_1_1\nAt Saturday 15:00") != std::string::npos);
  const auto no_future = make_traj({{16, 1, 1}}, kThursday);
  CHECK_FALSE(generation_record(no_future, periods, std::nullopt));
}

TEST_CASE("shifted baseline") {
  const auto t = three_days();
  const auto b = shifted_baseline(day_slice(t, 0, 2), day_slice(t, 2, 1));
  CHECK(b.window_start_day == kThursday + 2);
  REQUIRE(b.points.size() == 3);
  CHECK(b.points[0].day == 0);
  CHECK(b.points[0].weekday == 5);
  CHECK(b.points[1].cell == GridCell{2, 2});
}

TEST_CASE("reflection records") {
  const auto periods = PeriodPartition::standard();
  const auto s = reflection_record(three_days(), periods, std::nullopt, RefineOptions{});
  REQUIRE(s);
  CHECK(s->scenarios.count(ScenarioLabel::kWeekendUser) == 1);
  const auto& in = s->record.instruction;
  CHECK(in.rfind("Please answer the following questions step by step.", 0) == 0);
  CHECK(in.find("outputting your reasoning process between <think> and </think>") != std::string::npos);
  CHECK(in.find("Given Modification Steps: add a trajectory point, delete a trajectory point") != std::string::npos);
  CHECK(in.find("1. Given historical behavior data: At Thursday 08:00") != std::string::npos);
  CHECK(in.find("2. Previously generated user trajectory data for the next day: At Saturday 08:00") !=
        std::string::npos);
  CHECK(in.find("4. Statistical spatiotemporal features of real data for the next day: Summary of the "
                "spatio-temporal trajectory features:") != std::string::npos);
  for (const char* slot : {"[data1]", "[data2]", "[data3]", "[data4]", "[constraint]"})
    CHECK(in.find(slot) == std::string::npos);
  const auto& out = s->record.output;
  CHECK(out.rfind("<think>The previously generated trajectory mismatches ", 0) == 0);
  CHECK(out.find("</think><answer>Modification steps:") != std::string::npos);
  CHECK(out.find("Final trajectory for the next day:\n") != std::string::npos);
  CHECK(out.size() > 9);
  CHECK(out.substr(out.size() - 9) == "</answer>");
  CHECK(s->refine.satisfied);
  CHECK(apply_edits(s->baseline, s->refine.edits) == s->refine.final);
}

TEST_CASE("reflection of an already matching baseline") {
  const auto periods = PeriodPartition::standard();
  const auto t = three_days();
  const auto s = reflection_record(t, periods, day_slice(t, 2, 1), RefineOptions{});
  REQUIRE(s);
  CHECK(s->refine.edits.empty());
  CHECK(s->record.output.find("Modification steps: none, the generated trajectory already matches the features.") !=
        std::string::npos);
}

TEST_CASE("sequence embeddings file") {
  const auto dir = scratch_dir("seq_emb");
  write_file(dir / "e.jsonl",
                  "{\"user_id\":\"u\",\"window_start_day\":5,\"values\":[1,2]}\n"
                  "{\"user_id\":7,\"window_start_day\":5,\"values\":[3,4]}\n");
  const auto m = load_sequence_embeddings(dir / "e.jsonl");
  CHECK(m.at({"u", 5}) == std::vector<double>{1, 2});
  CHECK(m.at({"7", 5}) == std::vector<double>{3, 4});
  write_file(dir / "bad.jsonl",
                  "{\"user_id\":\"u\",\"window_start_day\":5,\"values\":[1,2]}\n"
                  "{\"user_id\":\"v\",\"window_start_day\":5,\"values\":[1]}\n");
  CHECK_THROWS_AS(load_sequence_embeddings(dir / "bad.jsonl"), Error);
}
