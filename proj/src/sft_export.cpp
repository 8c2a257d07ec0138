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

#include "sft_export.hpp"

#include "eval_metrics.hpp"

namespace movetok {
namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size()))
    s.replace(at, from.size(), to);
}

std::string point_lines(const Trajectory& t) {
  std::string out;
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    const TrajPoint& p = t.points[i];
    if (i) out += "\n";
    out += "At " + format_slot_time(p.weekday, p.slot) + ", visited location " + location_label(p);
  }
  return out;
}

constexpr const char* kModificationSteps =
    "add a trajectory point, delete a trajectory point, or modify the time and/or location of an "
    "existing point";

}  // namespace

std::string trajectory_text(const Trajectory& t) {
  std::string out;
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    const TrajPoint& p = t.points[i];
    if (i) out += "; ";
    out += "At " + format_slot_time(p.weekday, p.slot) + ", visited location " + location_label(p);
  }
  return out;
}

std::map<WindowKey, std::vector<double>> load_sequence_embeddings(const std::filesystem::path& path) {
  std::map<WindowKey, std::vector<double>> out;
  std::optional<std::size_t> dim;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    const std::string where = path.string() + ":" + std::to_string(line);
    if (!j.contains("user_id") || !j.contains("window_start_day") || !j.contains("values"))
      fail(ErrorKind::kData, where + ": sequence embedding needs user_id, window_start_day and values");
    const Json& uid = j["user_id"];
    WindowKey key{uid.is_string() ? uid.get<std::string>() : uid.dump(), j["window_start_day"].get<std::int64_t>()};
    auto values = j["values"].get<std::vector<double>>();
    if (values.empty() || !all_finite(values)) fail(ErrorKind::kData, where + ": invalid embedding values");
    if (dim && *dim != values.size()) fail(ErrorKind::kData, where + ": embedding dimension mismatch");
    dim = values.size();
    if (!out.emplace(key, std::move(values)).second)
      fail(ErrorKind::kData, where + ": duplicate sequence embedding for " + key.first);
  });
  return out;
}

std::string prediction_template() {
  return "This is a user trajectory prediction task. Your goal is to predict the next location index "
         "using both an authoritative trajectory text and a possibly noisy sequence embedding.\n"
         "Provided:\n"
         "- Ground-truth trajectory text (always correct): <traj_data>\n"
         "- Sequence embedding of the trajectory (auxiliary signal): <sequence>\n"
         "Conflict/irrelevance handling:\n"
         "- If any embedding-based interpretation contradicts the trajectory text or reflects a "
         "trajectory largely unrelated to the text, disregard the embedding interpretation and rely on "
         "the text.\n"
         "- Only incorporate embedding cues that align with the text.\n"
         "Tasks:\n"
         "1. Based on the trajectory text and your analysis of the sequence embedding (ignore it if "
         "inconsistent with the text), produce the user's spatio-temporal trajectory features, filling "
         "the template exactly:\n"
         "Summary of the spatio-temporal trajectory features:\n"
         "- Most frequently visited locations (visited more than once): [Output at most the first three "
         "(if any)]\n"
         "- Probability of visits by time period (rounded to 5%): [list all periods with probability "
         "values, even if 0%]\n"
         "2. Using these features and the inputs(if sequence embedding appears inconsistent with the "
         "textual trajectory, ignore it), predict the user's next location index.\n"
         "Output only the completed feature block and the final prediction. Do not include explanations.";
}

std::string generation_template() {
  return "The user's original trajectory data contains weekday, timestamp, and location index "
         "information. Below is the encoded vector of the user's trajectory sequence for the past two "
         "days:\n"
         "<sequence>\n"
         "In addition, there also has a special text format description of the user's historical "
         "trajectory as supplementary information: <history_text>.\n"
         "You need to first carefully interpret both the encoded trajectory sequence (embedding) and the "
         "historical textual trajectory description, and then complete the following two tasks:\n"
         "Step 1: Generate 'Summary of the trajectory preferences for this user' strictly in the "
         "following format:\n"
         "Summary of the trajectory preferences for this user:\n"
         "- Most frequently visited locations (visited more than once): [Output at most the first three "
         "(if any)]\n"
         "- Probability of visits by time period (rounded to 5%): [list all periods with probability "
         "values, even if 0%]\n"
         "- Frequently visited locations during each time period: [list per period; if none, explicitly "
         "say 'No location was visited more than once'].\n"
         "Step 2: Based on both the summary and the encoded vector together with the historical textual "
         "trajectory description, generate the user's trajectory activity for the next day. Each data "
         "point in the generated trajectory should be in the format: At [time], visited location "
         "[location index].";
}

std::string reasoning_preamble() {
  return "Please answer the following questions step by step. You need to think and reason before "
         "answering, outputting your reasoning process between <think> and </think>, and providing your "
         "final answer between <answer> and </answer>.\n"
         "Input: Historical trajectory data, initial generated trajectory, spatiotemporal constraints.\n"
         "Task: Modify the initial trajectory data based on the historical data and the spatiotemporal "
         "constraints of the scene. Ensure that the modified trajectory conforms to the given statistical "
         "spatiotemporal characteristics and uses the minimum modification step size.";
}

std::string reflection_template() {
  return "You are an intelligent assistant skilled at asking questions and thinking. Please solve the "
         "following problem step by step. First, you should think through the reasoning process and then "
         "provide the answer to the user. The reasoning process and answer are contained in the <think> "
         "</think> and <answer> </answer> tags, respectively, i.e., <think>reasoning process here "
         "</think><answer>answer here </answer>.\n\n"
         "You need to complete the following trajectory modification task:\n\n"
         "Input:\n"
         "Completely known input:\n"
         "1. Given two days of historical behavior data\n"
         "2. Previously generated user trajectory data for the next day\n"
         "3. Statistical spatiotemporal features of historical behavior data\n"
         "4. Statistical spatiotemporal features of real data for the next day\n"
         "5. Given Modification Steps: [constraint], and then K trajectory modifications (the specific "
         "value of K is determined by your own analysis).\n\n"
         "Task Requirements: Based on fully known inputs, modify and improve previously generated "
         "trajectory data for the next day, using the given modification steps, and ensure that the "
         "modified trajectory data is maximally consistent with the Statistical spatiotemporal features "
         "of real data for the next day. The analytical support should only be derived from fully known "
         "inputs.The final output should include a summary of the modification steps and the "
         "corresponding reasons, as well as the final user trajectory for the next day after the "
         "modification steps. Be careful not to analyze <a_x><b_x><c_x><d_x> separately. "
         "<a_x><b_x><c_x><d_x> together form a whole to describe a specific location. Do not add or "
         "generate new <a_x><b_x><c_x><d_x> when modifying. When modifying a previous future trajectory, "
         "only locations that have appeared in history and previously generated future trajectories, as "
         "well as locations that have appeared in the spatiotemporal features corresponding to the given "
         "future day's real trajectory data, can be used. For the time modification, you can generate "
         "timestamps that are not in the historical sequence or previously generated future tracks.Note "
         "that deleting a track, adding a track, or modifying a track (either location, time, or both) is "
         "considered a single operation. Please complete the reasoning analysis based on this,using as "
         "few modification steps as possible.\n\n"
         "Specific input data is as follows:\n"
         "Fully known input:\n"
         "1. Given historical behavior data: [data1]\n"
         "2. Previously generated user trajectory data for the next day: [data2]\n"
         "3. Statistical spatiotemporal features of historical behavior data: [data3]\n"
         "4. Statistical spatiotemporal features of real data for the next day: [data4]";
}

InstructionRecord prediction_record(const Trajectory& t, const PeriodPartition& periods,
                                    const std::optional<std::vector<double>>& embedding) {
  if (t.points.size() < 2) fail(ErrorKind::kData, "prediction sample needs at least two points");
  Trajectory context = t;
  const TrajPoint answer = context.points.back();
  context.points.pop_back();

  std::string instruction = prediction_template();
  replace_all(instruction, "<traj_data>", trajectory_text(context));
  SummaryOptions so;
  so.heading = SummaryHeading::kFeatures;
  so.include_period_frequent = false;
  std::string output = render_summary(extract_features(context, periods), periods, so);
  output += "\nNext location index: " + location_label(answer);
  return {std::move(instruction), "", std::move(output), embedding};
}

std::optional<InstructionRecord> generation_record(const Trajectory& t, const PeriodPartition& periods,
                                                   const std::optional<std::vector<double>>& embedding) {
  const Trajectory history = day_slice(t, 0, 2);
  const Trajectory future = day_slice(t, 2, 1);
  if (history.points.empty() || future.points.empty()) return std::nullopt;

  std::string instruction = generation_template();
  replace_all(instruction, "<history_text>", trajectory_text(history));
  SummaryOptions so;
  so.heading = SummaryHeading::kPreferences;
  std::string output = render_summary(extract_features(history, periods), periods, so);
  output += "\n" + point_lines(future);
  return InstructionRecord{std::move(instruction), "", std::move(output), embedding};
}

Trajectory shifted_baseline(const Trajectory& history, const Trajectory& future) {
  Trajectory b = day_slice(history, 1, 1);
  b.window_start_day = future.window_start_day;
  const int wd = weekday_of_day(future.window_start_day);
  for (auto& p : b.points) p.weekday = wd;
  return b;
}

std::optional<ReflectionSample> reflection_record(const Trajectory& t, const PeriodPartition& periods,
                                                  const std::optional<Trajectory>& baseline,
                                                  const RefineOptions& options) {
  const Trajectory history = day_slice(t, 0, 2);
  const Trajectory future = day_slice(t, 2, 1);
  if (history.points.empty() || future.points.empty()) return std::nullopt;
  ReflectionSample s;
  s.baseline = baseline ? *baseline : shifted_baseline(history, future);
  if (s.baseline.points.empty()) return std::nullopt;
  s.scenarios = classify_scenario(history, future, periods);

  const StatFeatureSet target = extract_features(future, periods);
  const StatFeatureSet hist_features = extract_features(history, periods);
  const std::vector<Location> allowed = collect_allowed_locations({&history, &s.baseline}, target);
  s.refine = refine_loop(s.baseline, target, allowed, periods, options);

  std::string instruction = reflection_template();
  replace_all(instruction, "[constraint]", kModificationSteps);
  replace_all(instruction, "[data1]", trajectory_text(history));
  replace_all(instruction, "[data2]", trajectory_text(s.baseline));
  replace_all(instruction, "[data3]", render_summary(hist_features, periods));
  replace_all(instruction, "[data4]", render_summary(target, periods));
  instruction = reasoning_preamble() + "\n\n" + instruction;

  const std::vector<std::string> names = feature_names(periods, true);
  const auto start = feature_matches(extract_features(s.baseline, periods), target, true);
  std::string open;
  for (std::size_t k = 0; k < start.size(); ++k)
    if (!start[k]) open += (open.empty() ? "" : ", ") + names[k];

  std::string think = "The previously generated trajectory mismatches " +
                      std::to_string(s.refine.initial_mismatches) + " of " + std::to_string(names.size()) +
                      " statistical features of the next day's real data";
  think += open.empty() ? "." : ": " + open + ".";
  for (std::size_t i = 0; i < s.refine.edits.size(); ++i)
    think += "\nStep " + std::to_string(i + 1) + ": " + s.refine.edits[i].justification + ".";
  think += s.refine.satisfied ? "\nAll features match after " + std::to_string(s.refine.edits.size()) +
                                    " modification steps."
                              : "\nStopped with features still unmatched: " + s.refine.diagnostic + ".";

  std::string answer = "Modification steps:";
  if (s.refine.edits.empty()) answer += " none, the generated trajectory already matches the features.";
  for (std::size_t i = 0; i < s.refine.edits.size(); ++i)
    answer += "\n" + std::to_string(i + 1) + ". " + s.refine.edits[i].justification + ".";
  answer += "\nFinal trajectory for the next day:\n" + point_lines(s.refine.final);

  s.record = {std::move(instruction), "", "<think>" + think + "</think><answer>" + answer + "</answer>",
              std::nullopt};
  return s;
}

}  // namespace movetok
