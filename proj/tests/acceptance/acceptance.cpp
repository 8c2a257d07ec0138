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

// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria, capped at 1.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "commands.hpp"
#include "eval_metrics.hpp"
#include "geo_profile.hpp"
#include "mobility_stats.hpp"
#include "reward_edit.hpp"
#include "rq_codebook.hpp"
#include "sft_export.hpp"
#include "token_align.hpp"
#include "traj_pipeline.hpp"
#include "../unit/oracles.hpp"

using namespace movetok;
namespace fs = std::filesystem;

namespace {

fs::path g_data;

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CodebookStack random_stack(const RQConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  CodebookStack s;
  s.config = cfg;
  s.encoder = Mlp(cfg.encoder_dims, rng);
  s.decoder = Mlp(cfg.decoder_dims(), rng);
  for (int l = 0; l < cfg.n_layers; ++l) {
    CodebookMatrix cb(cfg.codebook_size, cfg.code_dim);
    for (Eigen::Index i = 0; i < cb.size(); ++i) cb.data()[i] = rng.normal() * 0.5;
    s.codebooks.push_back(cb);
  }
  return s;
}

// ---------------------------------------------------------------------------

Outcome rq_telescoping() {
  Outcome o;
  RQConfig cfg;
  cfg.n_layers = 4;
  cfg.codebook_size = 64;
  cfg.code_dim = 8;
  cfg.encoder_dims = {16, 32, 8};
  const CodebookStack stack = random_stack(cfg, 1);
  Rng rng(2);
  double worst = 0;
  std::size_t argmin_checks = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(16);
    for (auto& x : v) x = rng.normal();
    const LocationEncoding e = encode_location(v, stack);
    Eigen::VectorXd gap = e.latent - e.final_residual;
    for (const auto& c : e.codewords) gap -= c;
    worst = std::max(worst, gap.cwiseAbs().maxCoeff());
    for (int l = 0; l < cfg.n_layers; ++l) {
      const Eigen::VectorXd& r = e.residuals[static_cast<std::size_t>(l)];
      const CodebookMatrix& cb = stack.codebooks[static_cast<std::size_t>(l)];
      int best = 0;
      double best_d = INFINITY;
      for (int k = 0; k < cfg.codebook_size; ++k) {
        double d = 0;
        for (int j = 0; j < cfg.code_dim; ++j) d += (r[j] - cb(k, j)) * (r[j] - cb(k, j));
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      const auto q = quantize_layer({r.data(), static_cast<std::size_t>(r.size())}, cb);
      o.expect(q.index == best, "argmin mismatch at vector " + std::to_string(i));
      o.expect(e.tokens.indices[static_cast<std::size_t>(l)] == best, "encoding index mismatch");
      ++argmin_checks;
    }
  }
  o.expect(worst < 1e-5, "telescoping gap " + fmt("%.3g", worst));
  if (o.pass) o.detail = "max gap " + fmt("%.2g", worst) + ", " + std::to_string(argmin_checks) + " argmin checks";
  return o;
}

Outcome rq_training() {
  Outcome o;
  Rng rng(64);
  constexpr int kDim = 16;
  std::vector<std::vector<double>> corpus;
  for (int c = 0; c < 64; ++c) {
    std::vector<double> center(kDim);
    for (auto& x : center) x = rng.normal() * 3;
    for (int k = 0; k < 16; ++k) {
      auto v = center;
      for (auto& x : v) x += 0.05 * rng.normal();
      corpus.push_back(v);
    }
  }
  RQConfig cfg;
  cfg.n_layers = 2;
  cfg.codebook_size = 64;
  cfg.code_dim = 8;
  cfg.encoder_dims = {kDim, 64, 8};
  cfg.batch_size = 128;
  cfg.epochs = 30;
  cfg.learning_rate = 1e-2;
  cfg.weight_decay = 0.0;
  cfg.seed = 7;
  const TrainResult a = train_rqvae(corpus, cfg);
  const TrainResult b = train_rqvae(corpus, cfg);
  const double ratio = a.epochs.back().recon_mse / a.initial_mse;
  o.expect(ratio < 0.10, "final/initial MSE " + fmt("%.4f", ratio));
  o.expect(sha256_hex(serialize_stack(a.stack)) == sha256_hex(serialize_stack(b.stack)), "runs differ");
  if (o.pass) o.detail = "final/initial MSE " + fmt("%.4f", ratio) + ", digests equal";
  return o;
}

Outcome config_defaults() {
  Outcome o;
  const RQConfig c;
  o.expect(c.n_layers == 4 && c.codebook_size == 512 && c.code_dim == 64, "codebook shape");
  o.expect(c.encoder_dims == std::vector<int>{2048, 1024, 512, 256, 128, 64}, "encoder dims");
  o.expect(c.learning_rate == 1e-3 && c.batch_size == 1024, "optimizer");
  const PipelineConfig p;
  o.expect(p.cell_size_m == 500.0 && p.slot_minutes == 30 && p.window_days == 3, "grid and window");
  o.expect(p.min_points == 5 && p.max_points == 145, "length filters");
  const auto bc = command_defaults("build-codebook");
  o.expect(bc["n_layers"] == 4 && bc["codebook_size"] == 512 && bc["code_dim"] == 64, "cli codebook shape");
  o.expect(bc["encoder_dims"] == Json::array({2048, 1024, 512, 256, 128, 64}), "cli encoder dims");
  o.expect(bc["learning_rate"] == 1e-3 && bc["batch_size"] == 1024, "cli optimizer");
  const auto pp = command_defaults("preprocess");
  o.expect(pp["cell_size"] == 500.0 && pp["slot_minutes"] == 30 && pp["window_days"] == 3, "cli grid and window");
  o.expect(pp["min_points"] == 5 && pp["max_points"] == 145, "cli length filters");
  if (o.pass) o.detail = "4x512x64, [2048..64], lr 1e-3, batch 1024, 500 m, 30 min, 3 days, 5..145";
  return o;
}

// ---------------------------------------------------------------------------

struct Toy {
  EmbeddingTable table;
  std::vector<AlignSample> samples;
  CooccurrenceModel pmi;
  Projector projector;
};

Toy align_toy(std::uint64_t seed, bool perturb) {
  Rng rng(seed);
  HashedSubwordEmbedder embedder(6, seed);
  Toy t;
  t.table = init_token_embeddings(codeword_tokens(2, 5), embedder);
  if (perturb)
    for (Eigen::Index i = 0; i < t.table.vectors.size(); ++i) t.table.vectors.data()[i] += 0.1 * rng.normal();
  std::vector<GridLocation> grid;
  for (int i = 0; i < 6; ++i) {
    LocationTokenSeq tok{{static_cast<int>(rng.index(5)), static_cast<int>(rng.index(5))}};
    std::vector<double> target(4);
    for (auto& x : target) x = rng.normal();
    t.samples.push_back({tok, target});
    grid.push_back({tok, i / 2, i % 2});
  }
  t.pmi = build_pmi(grid, 1);
  t.projector = make_projector(6, 4, seed);
  return t;
}

Outcome alignment() {
  Outcome o;
  double worst = 0;
  // Each term alone: main with both weights zero, the others by difference.
  for (int term = 0; term < 3; ++term) {
    for (std::uint64_t seed : {3u, 4u, 5u}) {
      Toy t = align_toy(seed, true);
      AlignConfig on;
      on.lambda_prior = term == 1 ? 0.8 : 0.0;
      on.lambda_coh = term == 2 ? 0.9 : 0.0;
      AlignConfig off;
      off.lambda_prior = 0;
      off.lambda_coh = 0;
      auto value = [&] {
        const double v = align_loss(t.table, t.samples, t.projector, t.pmi, on).total;
        return term == 0 ? v : v - align_loss(t.table, t.samples, t.projector, t.pmi, off).total;
      };
      const auto g_on = align_gradients(t.table, t.samples, t.projector, t.pmi, on);
      const auto g_off = align_gradients(t.table, t.samples, t.projector, t.pmi, off);
      RowMatrix ge = g_on.embeddings;
      Eigen::MatrixXd gw = g_on.weight;
      if (term != 0) {
        ge -= g_off.embeddings;
        gw -= g_off.weight;
      }
      auto check = [&](double* params, const double* analytic, Eigen::Index n) {
        constexpr double h = 1e-6;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double keep = params[i];
          params[i] = keep + h;
          const double up = value();
          params[i] = keep - h;
          const double down = value();
          params[i] = keep;
          const double fd = (up - down) / (2 * h);
          const double err = std::abs(fd - analytic[i]) / std::max({std::abs(fd), std::abs(analytic[i]), 1e-7});
          worst = std::max(worst, err);
        }
      };
      check(t.table.vectors.data(), ge.data(), ge.size());
      if (term == 0) check(t.projector.weight.data(), gw.data(), gw.size());
    }
  }
  o.expect(worst < 1e-4, "FD relative error " + fmt("%.3g", worst));

  const Toy fresh = align_toy(9, false);
  AlignConfig cfg;
  const double prior = align_loss(fresh.table, fresh.samples, fresh.projector, fresh.pmi, cfg).prior;
  o.expect(prior == 0.0, "prior at init " + fmt("%.3g", prior));

  Rng rng(11);
  bool symmetric = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::set<std::string>> windows(12);
    for (auto& w : windows)
      for (int k = 0; k < 4; ++k) w.insert("t" + std::to_string(rng.index(6)));
    const auto m = cooccurrence_from_windows(windows);
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) {
        const std::string ta = "t" + std::to_string(a);
        const std::string tb = "t" + std::to_string(b);
        symmetric = symmetric && m.pmi(ta, tb) == m.pmi(tb, ta) && m.pair_count(ta, tb) == m.pair_count(tb, ta);
      }
  }
  o.expect(symmetric, "PMI asymmetric");
  if (o.pass) o.detail = "max FD rel. error " + fmt("%.2g", worst) + ", prior 0 at init, PMI symmetric";
  return o;
}

// ---------------------------------------------------------------------------

Outcome metrics() {
  Outcome o;
  std::mt19937_64 g(500);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> size(1, 10);
  double worst = 0;
  for (int i = 0; i < 500; ++i) {
    const auto n = static_cast<std::size_t>(size(g));
    auto dist = [&] {
      std::vector<double> p(n);
      double s = 0;
      for (auto& x : p) s += (x = u(g) < 0.25 ? 0.0 : u(g));
      if (s == 0) p[0] = s = 1;
      for (auto& x : p) x /= s;
      return p;
    };
    const auto p = dist();
    const auto q = dist();
    worst = std::max(worst, std::abs(tvd(p, q) - testing::oracle_tvd(p, q)));
    worst = std::max(worst, std::abs(jsd(p, q) - testing::oracle_jsd2(p, q)));

    auto seq = [&] {
      std::vector<std::string> s(static_cast<std::size_t>(size(g)));
      for (auto& t : s) t = std::to_string(static_cast<int>(u(g) * 4));
      return s;
    };
    const auto c = seq();
    const auto r = seq();
    worst = std::max(worst, std::abs(bleu(c, r) - testing::oracle_bleu(c, r, 4)));
    worst = std::max(worst, std::abs(bleu(c, r, {2}) - testing::oracle_bleu(c, r, 2)));

    std::vector<std::vector<std::string>> ranks(static_cast<std::size_t>(size(g)));
    std::vector<std::string> truths;
    for (auto& rk : ranks) {
      rk = seq();
      truths.push_back(std::to_string(static_cast<int>(u(g) * 4)));
    }
    const int k = size(g);
    worst = std::max(worst, std::abs(hit_rate_at_k(ranks, truths, k) - testing::oracle_hit_rate(ranks, truths, k)));
  }
  o.expect(worst <= 1e-9, "oracle gap " + fmt("%.3g", worst));
  const double t = tvd(std::vector<double>{0.7, 0.3}, std::vector<double>{0.5, 0.5});
  const double j = jsd(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0});
  o.expect(std::abs(t - 0.2) < 1e-4, "tvd worked value " + fmt("%.6f", t));
  o.expect(std::abs(j - 0.5579) < 1e-4, "jsd worked value " + fmt("%.6f", j));
  if (o.pass) o.detail = "max oracle gap " + fmt("%.2g", worst) + ", tvd " + fmt("%.4f", t) + ", jsd " + fmt("%.4f", j);
  return o;
}

Outcome rewards() {
  Outcome o;
  const auto periods = PeriodPartition::standard();
  std::size_t checked = 0;
  for_each_jsonl(g_data / "edit_fixtures.jsonl", [&](std::size_t, const Json& j) {
    const Trajectory t = trajectory_from_json(j["target"]);
    const RewardBreakdown r = compute_reward(t, t, periods);
    o.expect(r.matched_features == r.feature_count && r.feature_count == 11, "reward(t,t) features");
    o.expect(r.r_distribution == 11.0 && r.r_length == 0.0 && r.total == 11.0, "reward(t,t) totals");
    ++checked;
  });
  o.expect(reward_length(8, 10) == -0.2, "r_length(8,10) " + fmt("%.17g", reward_length(8, 10)));
  o.expect(group_advantages(std::vector<double>{0, 2}) == std::vector<double>{-1, 1}, "advantages of [0,2]");
  std::mt19937_64 g(1000);
  std::normal_distribution<double> n(0, 4);
  std::uniform_int_distribution<std::size_t> size(2, 16);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> r(size(g));
    for (auto& x : r) x = std::round(n(g) * 4) / 4;
    const auto a = group_advantages(r);
    worst = std::max(worst, std::abs(std::accumulate(a.begin(), a.end(), 0.0)));
  }
  o.expect(worst <= 1e-9, "advantage sum " + fmt("%.3g", worst));
  if (o.pass)
    o.detail = "(11, 0) on " + std::to_string(checked) + " targets, r_length -0.2, [0,2] -> [-1,1], max sum " +
               fmt("%.2g", worst);
  return o;
}

Outcome edit_engine() {
  Outcome o;
  const auto periods = PeriodPartition::standard();
  std::size_t fixtures = 0;
  std::size_t satisfiable = 0;
  std::size_t depth1 = 0;
  std::size_t within_2x = 0;
  std::size_t total_edits = 0;
  std::size_t total_min = 0;
  for_each_jsonl(g_data / "edit_fixtures.jsonl", [&](std::size_t, const Json& j) {
    const std::string name = j["fixture"].get<std::string>();
    const Trajectory base = trajectory_from_json(j["baseline"]);
    const Trajectory goal = trajectory_from_json(j["target"]);
    std::vector<Location> allowed;
    for (const auto& rc : j["locations"]) allowed.push_back(Location{{rc[0].get<int>(), rc[1].get<int>()}, std::nullopt});
    const StatFeatureSet target = extract_features(goal, periods);
    const std::vector<int> alphabet = oracle_slot_alphabet(base, periods);
    ++fixtures;
    o.expect(base.points.size() <= 6, name + " baseline too long");

    RefineOptions ro;
    ro.budget = 10;
    ro.slot_alphabet = alphabet;
    const RefineResult r = refine_loop(base, target, allowed, periods, ro);
    const Trajectory replay = apply_edits(base, r.edits);
    o.expect(trajectory_to_json(replay).dump() == trajectory_to_json(r.final).dump(), name + " replay differs");

    const auto best = minimal_edit_oracle(base, target, allowed, periods, alphabet, 3);
    if (!best) return;
    ++satisfiable;
    const auto count = static_cast<int>(r.edits.size());
    o.expect(r.satisfied, name + " unsatisfied though the oracle needs " + std::to_string(*best));
    o.expect(count >= *best, name + " beats the oracle");
    if (*best <= 1) {
      ++depth1;
      o.expect(count == *best, name + " uses " + std::to_string(count) + " edits, oracle " + std::to_string(*best));
    }
    if (r.satisfied && count <= 2 * std::max(*best, 1)) ++within_2x;
    total_edits += static_cast<std::size_t>(count);
    total_min += static_cast<std::size_t>(*best);
  });
  o.expect(fixtures >= 50, "only " + std::to_string(fixtures) + " fixtures");
  const std::string stats = std::to_string(fixtures) + " fixtures, " + std::to_string(satisfiable) +
                            " oracle-satisfiable, " + std::to_string(depth1) + " at depth <= 1, edits " +
                            std::to_string(total_edits) + " vs oracle " + std::to_string(total_min) + ", " +
                            std::to_string(within_2x) + " within 2x";
  o.detail = o.pass ? stats : o.detail + "; " + stats;
  return o;
}

// ---------------------------------------------------------------------------

Trajectory day_traj(std::int64_t start, const std::vector<std::array<int, 4>>& pts) {
  Trajectory t;
  t.user_id = "s";
  t.window_start_day = start;
  for (const auto& [slot, row, col, day] : pts) {
    TrajPoint p;
    p.day = day;
    p.weekday = weekday_of_day(start + day);
    p.slot = slot;
    p.cell = {row, col};
    t.points.push_back(p);
  }
  return t;
}

Outcome scenarios() {
  Outcome o;
  const auto periods = PeriodPartition::standard();
  constexpr std::int64_t thu = 20454;
  o.expect(weekday_of_day(thu) == 3, "fixture day is not a Thursday");
  auto has = [&](const Trajectory& h, const Trajectory& f, ScenarioLabel l) {
    return classify_scenario(h, f, periods).count(l) == 1;
  };
  // 8 of 10 trips at night.
  const auto h = day_traj(thu - 3, {{46, 0, 0, 0}, {2, 0, 0, 0}, {30, 1, 1, 0}, {45, 0, 0, 1}, {3, 0, 0, 1}, {20, 1, 1, 1}});
  const auto f = day_traj(thu - 1, {{1, 0, 0, 0}, {4, 0, 0, 0}, {10, 0, 0, 0}, {47, 0, 0, 0}});
  o.expect(has(h, f, ScenarioLabel::kLateNightCommuter), "8/10 night not late-night");
  const auto h3 = day_traj(thu - 3, {{1, 0, 0, 0}, {30, 1, 1, 1}});
  const auto f3 = day_traj(thu - 1, {{2, 0, 0, 0}, {3, 0, 0, 0}});
  o.expect(!has(h3, f3, ScenarioLabel::kLateNightCommuter), "3/4 night labeled late-night");
  // Thursday and Friday history, Saturday future.
  const auto hw = day_traj(thu, {{20, 0, 0, 0}, {30, 1, 1, 1}});
  o.expect(has(hw, day_traj(thu + 2, {{20, 0, 0, 0}}), ScenarioLabel::kWeekendUser), "Thu+Fri->Sat not weekend");
  o.expect(!has(day_traj(thu - 1, {{20, 0, 0, 0}, {30, 1, 1, 1}}), day_traj(thu + 1, {{20, 0, 0, 0}}),
                ScenarioLabel::kWeekendUser),
           "Wed+Thu->Fri labeled weekend");
  // Top three of the history: A, B, C.
  const auto ht = day_traj(thu, {{20, 0, 0, 0}, {22, 0, 0, 0}, {24, 1, 1, 0}, {30, 1, 1, 1}, {32, 2, 2, 1}});
  const auto same = day_traj(thu + 2, {{20, 0, 0, 0}, {24, 1, 1, 0}, {30, 2, 2, 0}});
  const auto extra = day_traj(thu + 2, {{20, 0, 0, 0}, {24, 1, 1, 0}, {30, 2, 2, 0}, {34, 7, 7, 0}});
  const auto dropped = day_traj(thu + 2, {{20, 0, 0, 0}, {24, 1, 1, 0}});
  o.expect(!has(ht, same, ScenarioLabel::kTempPlanNew) && !has(ht, same, ScenarioLabel::kTempPlanCancelled),
           "unchanged plan labeled temporary");
  o.expect(has(ht, extra, ScenarioLabel::kTempPlanNew) && !has(ht, extra, ScenarioLabel::kTempPlanCancelled),
           "new place not labeled");
  o.expect(has(ht, dropped, ScenarioLabel::kTempPlanCancelled) && !has(ht, dropped, ScenarioLabel::kTempPlanNew),
           "dropped place not labeled");
  if (o.pass) o.detail = "late-night 8/10 yes and 3/4 no, weekend, top-3 new and cancelled";
  return o;
}

Outcome sft_phrases() {
  Outcome o;
  const auto loaded = load_profiles(g_data / "profiles.jsonl", true);
  std::map<std::string, LocationProfile> profiles;
  for (const auto& p : loaded.profiles) profiles.emplace(p.location_id, p);
  const auto geo = export_bidirectional_pairs({{"L000", LocationTokenSeq{{1, 2, 3, 4}}}}, profiles);
  o.expect(geo.size() == 2, "geo pair count");
  o.expect(geo[0].output == "<a_1><b_2><c_3><d_4>", "loc2id answer");
  bool phrase = false;
  for (const auto& r : geo) phrase = phrase || instruction_record_to_line(r).find("Its Location index is :") != std::string::npos;
  o.expect(phrase, "missing 'Its Location index is :'");

  const auto periods = PeriodPartition::standard();
  const auto t = day_traj(20454, {{16, 1, 1, 0}, {18, 1, 1, 0}, {36, 0, 0, 0}, {16, 1, 1, 1}, {30, 2, 2, 1},
                                  {40, 0, 0, 1}, {17, 1, 1, 2}, {30, 2, 2, 2}, {31, 2, 2, 2}});
  const auto pred = prediction_record(t, periods, std::nullopt);
  const auto gen = generation_record(t, periods, std::nullopt);
  const auto refl = reflection_record(t, periods, std::nullopt, RefineOptions{});
  o.expect(gen && refl, "generation or reflection record missing");
  if (!gen || !refl) return o;
  const std::string all = instruction_record_to_line(pred) + instruction_record_to_line(*gen) +
                          instruction_record_to_line(refl->record);
  auto contains = [](const std::string& s, const std::string& p) { return s.find(p) != std::string::npos; };
  o.expect(contains(pred.output, "Summary of the spatio-temporal trajectory features"), "summary heading");
  o.expect(contains(gen->output, "No location was visited more than once"), "no-location phrase");
  o.expect(contains(refl->record.instruction, "Summary of the spatio-temporal trajectory features"), "reflection features");
  o.expect(contains(refl->record.instruction, "outputting your reasoning process between"), "reasoning preamble");
  o.expect(contains(refl->record.output, "<think>") && contains(refl->record.output, "</answer>"), "think/answer tags");
  o.expect(contains(all, "Summary of the trajectory preferences for this user"), "preferences heading");
  if (o.pass) o.detail = "loc2id/id2loc, summary, preferences and reflection phrases present";
  return o;
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> pipeline_digests(const fs::path& dir) {
  const fs::path keep = fs::current_path();
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::current_path(dir);
  const std::string visits = (g_data / "visits.jsonl").string();
  const std::string city = (g_data / "city.json").string();
  const std::string profiles = (g_data / "profiles.jsonl").string();
  run_command("preprocess", {{"visits", visits}, {"city", city}});
  run_command("build-codebook", {{"profiles", profiles}});
  run_command("tokenize", {{"codebook", "codebook.bin"}, {"profiles", profiles}, {"trajectories", "trajectories.jsonl"}, {"city", city}});
  run_command("export-sft", {{"location_tokens", "location_tokens.jsonl"}, {"profiles", profiles},
                             {"trajectories", "trajectories_tokenized.jsonl"}});
  run_command("evaluate", {{"generated", "trajectories_tokenized.jsonl"}, {"truth", "trajectories_tokenized.jsonl"}});
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(".")) out[e.path().filename().string()] = sha256_file(e.path());
  fs::current_path(keep);
  return out;
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "movetok_acceptance";
  const auto a = pipeline_digests(root / "run_a");
  const auto b = pipeline_digests(root / "run_b");
  o.expect(a.size() >= 15, "only " + std::to_string(a.size()) + " artifacts");
  for (const auto& [file, digest] : a) {
    auto it = b.find(file);
    o.expect(it != b.end() && it->second == digest, file + " differs between runs");
  }
  o.expect(a.size() == b.size(), "artifact sets differ");
  if (o.pass) o.detail = std::to_string(a.size()) + " artifacts digest-identical";
  fs::remove_all(root);
  return o;
}

struct Criterion {
  const char* name;
  double limit_s;  // 0 means no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  g_data = argc > 1 ? fs::path(argv[1]) : fs::path(MOVETOK_TEST_DATA);
  g_data = fs::absolute(g_data);
  const std::vector<Criterion> criteria = {
      {"rq-telescoping", 10, rq_telescoping},
      {"rq-training", 120, rq_training},
      {"config-defaults", 0, config_defaults},
      {"alignment-gradients", 0, alignment},
      {"metrics-oracle", 0, metrics},
      {"reward-identities", 0, rewards},
      {"edit-engine-oracle", 60, edit_engine},
      {"scenario-predicates", 0, scenarios},
      {"sft-phrases", 0, sft_phrases},
      {"pipeline-determinism", 300, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0 && secs >= c.limit_s) o.expect(false, "took " + fmt("%.1f", secs) + " s");
    std::printf("%s %-22s %s [%.2f s%s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                c.limit_s > 0 ? (", limit " + fmt("%.0f", c.limit_s) + " s").c_str() : "");
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
