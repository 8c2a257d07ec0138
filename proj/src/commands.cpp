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

#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>

#include "eval_metrics.hpp"
#include "geo_profile.hpp"
#include "mobility_stats.hpp"
#include "reward_edit.hpp"
#include "rq_codebook.hpp"
#include "sft_export.hpp"
#include "token_align.hpp"
#include "traj_pipeline.hpp"

namespace movetok {
namespace {

namespace fs = std::filesystem;

// Lookahead size for the refinement run inside export-sft.
constexpr std::size_t kExportLookaheadNodeLimit = 200000;

OrderedJson common_defaults() {
  OrderedJson j;
  j["seed"] = 42;
  j["strict"] = false;
  j["out_dir"] = ".";
  return j;
}

OrderedJson defaults_for(std::string_view command) {
  OrderedJson j = common_defaults();
  if (command == "preprocess") {
    const PipelineConfig p;
    j["visits"] = nullptr;
    j["city"] = nullptr;
    j["cell_size"] = p.cell_size_m;
    j["slot_minutes"] = p.slot_minutes;
    j["window_days"] = p.window_days;
    j["stride_days"] = p.stride_days;
    j["min_points"] = p.min_points;
    j["max_points"] = p.max_points;
    j["dedup"] = p.dedup_consecutive;
  } else if (command == "build-codebook") {
    const RQConfig c;
    j["embeddings"] = nullptr;
    j["profiles"] = nullptr;
    j["semantic_dim"] = kDefaultSemanticDim;
    j["n_layers"] = c.n_layers;
    j["codebook_size"] = c.codebook_size;
    j["code_dim"] = c.code_dim;
    j["encoder_dims"] = c.encoder_dims;
    j["alpha"] = c.alpha;
    j["learning_rate"] = c.learning_rate;
    j["batch_size"] = c.batch_size;
    j["weight_decay"] = c.weight_decay;
    j["epochs"] = c.epochs;
  } else if (command == "tokenize") {
    j["codebook"] = nullptr;
    j["embeddings"] = nullptr;
    j["profiles"] = nullptr;
    j["trajectories"] = nullptr;
    j["city"] = nullptr;
    j["cell_size"] = PipelineConfig{}.cell_size_m;
  } else if (command == "align") {
    const AlignConfig a;
    j["codebook"] = nullptr;
    j["location_tokens"] = nullptr;
    j["embeddings"] = nullptr;
    j["profiles"] = nullptr;
    j["base_table"] = nullptr;
    j["embedding_dim"] = 64;
    j["lambda_prior"] = a.lambda_prior;
    j["lambda_coh"] = a.lambda_coh;
    j["learning_rate"] = a.learning_rate;
    j["epochs"] = a.epochs;
    j["radius"] = a.neighborhood_radius_cells;
    j["pmi_floor"] = a.pmi_floor;
  } else if (command == "export-sft") {
    const RefineOptions r;
    j["location_tokens"] = nullptr;
    j["profiles"] = nullptr;
    j["trajectories"] = nullptr;
    j["sequence_embeddings"] = nullptr;
    j["baselines"] = nullptr;
    j["periods"] = nullptr;
    j["scenario"] = nullptr;
    j["budget"] = r.budget;
    j["lookahead"] = r.lookahead;
    j["lookahead_node_limit"] = kExportLookaheadNodeLimit;
  } else if (command == "evaluate") {
    const BleuOptions b;
    j["generated"] = nullptr;
    j["truth"] = nullptr;
    j["per_user"] = false;
    j["corpus_bleu"] = false;
    j["bleu_max_n"] = b.max_n;
    j["bleu_smoothing"] = "none";
    j["bleu_epsilon"] = b.epsilon;
  } else if (command == "reward") {
    j["generated"] = nullptr;
    j["truth"] = nullptr;
    j["periods"] = nullptr;
  } else if (command == "refine") {
    const RefineOptions r;
    j["baseline"] = nullptr;
    j["target"] = nullptr;
    j["history"] = nullptr;
    j["periods"] = nullptr;
    j["slot_alphabet"] = nullptr;
    j["budget"] = r.budget;
    j["lookahead"] = r.lookahead;
    j["lookahead_node_limit"] = r.lookahead_node_limit;
  } else {
    fail(ErrorKind::kUsage, "unknown command '" + std::string(command) + "'");
  }
  return j;
}

bool compatible(const OrderedJson& def, const Json& v) {
  if (def.is_null()) return true;
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  return v.type() == def.type();
}

// Resolved options plus the record of files read and written.
class Run {
 public:
  Run(std::string_view command, const Json& options) : command_(command), config_(defaults_for(command)) {
    if (!options.is_object()) fail(ErrorKind::kUsage, "options must be a JSON object");
    for (const auto& [key, value] : options.items()) {
      if (!config_.contains(key))
        fail(ErrorKind::kUsage, "unknown option '" + key + "' for " + command_);
      if (value.is_null()) continue;
      if (!compatible(config_[key], value))
        fail(ErrorKind::kUsage, "option '" + key + "' has the wrong type (expected " +
                                    std::string(config_[key].type_name()) + ")");
      config_[key] = OrderedJson::parse(value.dump());
    }
    out_dir_ = str("out_dir");
  }

  const OrderedJson& config() const { return config_; }
  bool has(const char* key) const { return !config_.at(key).is_null(); }

  template <typename T>
  T get(const char* key) const {
    try {
      return config_.at(key).get<T>();
    } catch (const OrderedJson::exception&) {
      fail(ErrorKind::kUsage, "option '" + std::string(key) + "' has an invalid value");
    }
  }
  std::string str(const char* key) const { return get<std::string>(key); }
  std::uint64_t seed() const {
    const auto s = get<std::int64_t>("seed");
    if (s < 0) fail(ErrorKind::kUsage, "seed must be non-negative");
    return static_cast<std::uint64_t>(s);
  }
  bool strict() const { return get<bool>("strict"); }

  // Input path option; records the file digest for the manifest.
  fs::path input(const char* key) {
    const fs::path p = str(key);
    if (!fs::exists(p)) fail(ErrorKind::kIo, "input '" + std::string(key) + "' not found: " + p.string());
    OrderedJson rec;
    rec["path"] = p.string();
    rec["sha256"] = sha256_file(p);
    inputs_[key] = std::move(rec);
    return p;
  }
  fs::path require(const char* key, const std::string& why) {
    if (!has(key)) fail(ErrorKind::kUsage, command_ + " needs --" + flag(key) + " (" + why + ")");
    return input(key);
  }

  void output(const std::string& name, const std::string& file, std::string_view bytes) {
    write_file(fs::path(out_dir_) / file, bytes);
    OrderedJson rec;
    rec["path"] = file;
    rec["sha256"] = sha256_hex(bytes);
    outputs_[name] = std::move(rec);
  }

  OrderedJson finish(OrderedJson report) {
    OrderedJson m;
    m["command"] = command_;
    m["version"] = kVersion;
    m["config"] = config_;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    const std::string file = command_ + ".manifest.json";
    write_file(fs::path(out_dir_) / file, m.dump(2) + "\n");
    report["outputs"] = outputs_;
    report["manifest"] = (fs::path(out_dir_) / file).string();
    return report;
  }

  static std::string flag(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
  }

 private:
  std::string command_;
  OrderedJson config_;
  std::string out_dir_;
  OrderedJson inputs_ = OrderedJson::object();
  OrderedJson outputs_ = OrderedJson::object();
};

CityConfig load_city(Run& run) {
  if (!run.has("city")) fail(ErrorKind::kUsage, "a city config (--city) is required");
  const OrderedJson& c = run.config()["city"];
  if (c.is_string()) {
    const fs::path p = run.input("city");
    Json j;
    try {
      j = Json::parse(read_file(p));
    } catch (const Json::parse_error& e) {
      fail(ErrorKind::kData, p.string() + ": " + e.what());
    }
    return CityConfig::from_json(j);
  }
  return CityConfig::from_json(Json::parse(c.dump()));
}

PeriodPartition load_periods(const Run& run) {
  if (!run.has("periods")) return PeriodPartition::standard();
  return PeriodPartition::from_json(Json::parse(run.config()["periods"].dump()));
}

std::string json_lines(const std::vector<OrderedJson>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

std::string records_to_jsonl(const std::vector<InstructionRecord>& records) {
  std::string out;
  for (const auto& r : records) out += instruction_record_to_line(r) + "\n";
  return out;
}

struct VectorCorpus {
  std::vector<std::string> ids;  // sorted
  std::vector<std::vector<double>> vectors;
  std::string source;
};

// Semantic vectors from --embeddings, or fallback-encoded from --profiles.
VectorCorpus load_vectors(Run& run, std::optional<std::size_t> dim) {
  if (run.has("embeddings") == run.has("profiles"))
    fail(ErrorKind::kUsage, "give exactly one of --embeddings or --profiles");
  VectorCorpus c;
  if (run.has("embeddings")) {
    const auto m = import_embeddings(run.input("embeddings"), dim);
    for (const auto& [id, v] : m) {
      c.ids.push_back(id);
      c.vectors.push_back(v.values);
    }
    c.source = "imported";
  } else {
    const std::size_t d = dim.value_or(kDefaultSemanticDim);
    const auto loaded = load_profiles(run.input("profiles"), run.strict());
    std::map<std::string, const LocationProfile*> by_id;
    for (const auto& p : loaded.profiles) by_id[p.location_id] = &p;
    for (const auto& [id, p] : by_id) {
      c.ids.push_back(id);
      c.vectors.push_back(encode_profile_fallback(*p, d, run.seed()).values);
    }
    c.source = "fallback";
  }
  if (c.vectors.empty()) fail(ErrorKind::kData, "no location vectors were loaded");
  return c;
}

struct LocationTokenRecord {
  std::string location_id;
  LocationTokenSeq tokens;
  std::optional<GridCell> cell;
};

std::vector<LocationTokenRecord> load_location_tokens(const fs::path& path) {
  std::vector<LocationTokenRecord> out;
  for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    const std::string where = path.string() + ":" + std::to_string(line);
    if (!j.contains("location_id") || !j.contains("tokens") || !j["tokens"].is_string())
      fail(ErrorKind::kData, where + ": record needs location_id and tokens");
    LocationTokenRecord r;
    r.location_id = j["location_id"].is_string() ? j["location_id"].get<std::string>() : j["location_id"].dump();
    r.tokens = parse_token_seq(j["tokens"].get<std::string>());
    if (j.contains("row") && j.contains("col")) r.cell = GridCell{j["row"].get<int>(), j["col"].get<int>()};
    out.push_back(std::move(r));
  });
  return out;
}

std::map<WindowKey, Trajectory> by_window(const std::vector<Trajectory>& ts, const std::string& what) {
  std::map<WindowKey, Trajectory> out;
  for (const auto& t : ts)
    if (!out.emplace(WindowKey{t.user_id, t.window_start_day}, t).second)
      fail(ErrorKind::kData, "duplicate " + what + " window " + t.user_id + "@" + std::to_string(t.window_start_day));
  return out;
}

RefineOptions refine_options(const Run& run) {
  RefineOptions o;
  o.budget = run.get<int>("budget");
  o.lookahead = run.get<int>("lookahead");
  o.lookahead_node_limit = run.get<std::size_t>("lookahead_node_limit");
  if (o.lookahead < 1) fail(ErrorKind::kUsage, "lookahead must be at least 1");
  return o;
}

OrderedJson cmd_preprocess(Run& run) {
  PipelineConfig cfg;
  cfg.cell_size_m = run.get<double>("cell_size");
  cfg.slot_minutes = run.get<int>("slot_minutes");
  cfg.window_days = run.get<int>("window_days");
  cfg.stride_days = run.get<int>("stride_days");
  cfg.min_points = run.get<int>("min_points");
  cfg.max_points = run.get<int>("max_points");
  cfg.dedup_consecutive = run.get<bool>("dedup");
  cfg.validate();
  const fs::path visits_path = run.require("visits", "raw visit records");
  const CityConfig city = load_city(run);

  const VisitLoadResult loaded = load_raw_visits(visits_path, run.strict());
  const PreprocessResult res = preprocess_visits(loaded.visits, city, cfg, run.strict());
  run.output("trajectories", "trajectories.jsonl", trajectories_to_jsonl(res.trajectories));

  OrderedJson report;
  report["visits"] = loaded.visits.size();
  report["skipped_records"] = loaded.skipped.size();
  report["skipped_out_of_bounds"] = res.skipped.size();
  report["trajectories"] = res.trajectories.size();
  OrderedJson warnings = OrderedJson::array();
  if (loaded.visits.empty()) warnings.push_back("input contains no visits");
  for (const auto& d : loaded.skipped)
    warnings.push_back("line " + std::to_string(d.line) + ": " + d.message);
  for (const auto& d : res.skipped) warnings.push_back(d.message);
  report["warnings"] = std::move(warnings);
  return report;
}

OrderedJson cmd_build_codebook(Run& run) {
  RQConfig cfg;
  cfg.n_layers = run.get<int>("n_layers");
  cfg.codebook_size = run.get<int>("codebook_size");
  cfg.code_dim = run.get<int>("code_dim");
  cfg.encoder_dims = run.get<std::vector<int>>("encoder_dims");
  cfg.alpha = run.get<double>("alpha");
  cfg.learning_rate = run.get<double>("learning_rate");
  cfg.batch_size = run.get<int>("batch_size");
  cfg.weight_decay = run.get<double>("weight_decay");
  cfg.epochs = run.get<int>("epochs");
  cfg.seed = run.seed();
  cfg.validate();
  const auto semantic_dim = run.get<std::size_t>("semantic_dim");
  if (static_cast<std::size_t>(cfg.input_dim()) != semantic_dim)
    fail(ErrorKind::kUsage, "encoder input dimension " + std::to_string(cfg.input_dim()) +
                                " differs from semantic_dim " + std::to_string(semantic_dim));

  const VectorCorpus corpus = load_vectors(run, semantic_dim);
  OrderedJson epochs = OrderedJson::array();
  const TrainResult trained = train_rqvae(corpus.vectors, cfg, [&](const EpochStats& e) {
    OrderedJson j;
    j["epoch"] = e.epoch;
    j["rec_loss"] = e.rec_loss;
    j["rq_loss"] = e.rq_loss;
    j["total_loss"] = e.total_loss;
    j["recon_mse"] = e.recon_mse;
    j["reseeded"] = e.reseeded;
    epochs.push_back(std::move(j));
  });
  run.output("codebook", "codebook.bin", serialize_stack(trained.stack));

  OrderedJson report;
  report["vectors"] = corpus.vectors.size();
  report["source"] = corpus.source;
  report["initial_mse"] = trained.initial_mse;
  report["final_mse"] = trained.epochs.empty() ? trained.initial_mse : trained.epochs.back().recon_mse;
  report["epochs"] = std::move(epochs);
  report["codebook"] = OrderedJson::parse(report_to_json(codebook_report(trained.stack, corpus.vectors)).dump());
  run.output("report", "codebook_report.json", report.dump(2) + "\n");
  report.erase("epochs");
  report["codebook"].erase("usage");
  return report;
}

OrderedJson cmd_tokenize(Run& run) {
  const CodebookStack stack = load_stack(run.require("codebook", "artifact from build-codebook"));
  const VectorCorpus corpus = load_vectors(run, static_cast<std::size_t>(stack.config.input_dim()));

  std::optional<CityConfig> city;
  if (run.has("city")) city = load_city(run);
  std::map<std::string, GridCell> cells;
  if (city) {
    if (!run.has("profiles"))
      fail(ErrorKind::kUsage, "placing locations on the grid needs --profiles for their centers");
    const auto loaded = load_profiles(run.input("profiles"), run.strict());
    for (const auto& p : loaded.profiles) {
      try {
        cells[p.location_id] = assign_grid(p.center_lat, p.center_lon, *city, run.get<double>("cell_size"));
      } catch (const Error&) {
        if (run.strict()) throw;
      }
    }
  }

  std::vector<OrderedJson> rows;
  std::map<GridCell, std::pair<std::string, LocationTokenSeq>> cell_tokens;
  std::set<LocationTokenSeq> distinct;
  for (std::size_t i = 0; i < corpus.ids.size(); ++i) {
    const LocationEncoding enc = encode_location(corpus.vectors[i], stack);
    distinct.insert(enc.tokens);
    OrderedJson r;
    r["location_id"] = corpus.ids[i];
    r["tokens"] = enc.tokens.render();
    r["indices"] = enc.tokens.indices;
    if (auto it = cells.find(corpus.ids[i]); it != cells.end()) {
      r["row"] = it->second.row;
      r["col"] = it->second.col;
      cell_tokens.emplace(it->second, std::make_pair(corpus.ids[i], enc.tokens));  // lowest id wins
    }
    rows.push_back(std::move(r));
  }
  run.output("location_tokens", "location_tokens.jsonl", json_lines(rows));

  OrderedJson report;
  report["locations"] = corpus.ids.size();
  report["distinct_sequences"] = distinct.size();
  report["collision_rate"] = 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(corpus.ids.size());
  if (run.has("trajectories")) {
    if (!city) fail(ErrorKind::kUsage, "tokenizing trajectories needs --city and --profiles");
    std::vector<Trajectory> ts = load_trajectories(run.input("trajectories"));
    std::size_t tagged = 0;
    std::size_t untagged = 0;
    for (auto& t : ts) {
      for (auto& p : t.points) {
        auto it = cell_tokens.find(p.cell);
        if (it == cell_tokens.end()) {
          p.tokens.reset();
          ++untagged;
        } else {
          p.tokens = it->second.second;
          ++tagged;
        }
      }
    }
    run.output("trajectories", "trajectories_tokenized.jsonl", trajectories_to_jsonl(ts));
    report["tokenized_points"] = tagged;
    report["untokenized_points"] = untagged;
  }
  return report;
}

OrderedJson cmd_align(Run& run) {
  const CodebookStack stack = load_stack(run.require("codebook", "artifact from build-codebook"));
  const auto locs = load_location_tokens(run.require("location_tokens", "output of tokenize"));
  const VectorCorpus corpus = load_vectors(run, static_cast<std::size_t>(stack.config.input_dim()));
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < corpus.ids.size(); ++i) row_of[corpus.ids[i]] = i;

  AlignConfig cfg;
  cfg.lambda_prior = run.get<double>("lambda_prior");
  cfg.lambda_coh = run.get<double>("lambda_coh");
  cfg.learning_rate = run.get<double>("learning_rate");
  cfg.epochs = run.get<int>("epochs");
  cfg.seed = run.seed();
  cfg.neighborhood_radius_cells = run.get<int>("radius");
  cfg.pmi_floor = run.get<double>("pmi_floor");
  cfg.validate();

  std::vector<AlignSample> dataset;
  std::vector<GridLocation> grid;
  for (const auto& l : locs) {
    auto it = row_of.find(l.location_id);
    if (it == row_of.end()) fail(ErrorKind::kData, "no semantic vector for location " + l.location_id);
    dataset.push_back(AlignSample{l.tokens, corpus.vectors[it->second]});
    if (l.cell) grid.push_back(GridLocation{l.tokens, l.cell->row, l.cell->col});
  }
  if (dataset.empty()) fail(ErrorKind::kData, "location token file is empty");
  if (grid.empty())
    fail(ErrorKind::kData, "location tokens carry no grid cells; run tokenize with --city and --profiles");
  const CooccurrenceModel pmi = build_pmi(grid, cfg.neighborhood_radius_cells, cfg.pmi_floor);

  const std::vector<std::string> tokens = codeword_tokens(stack.config.n_layers, stack.config.codebook_size);
  std::unique_ptr<SubwordEmbedder> embedder;
  if (run.has("base_table")) {
    embedder = std::make_unique<TableSubwordEmbedder>(TableSubwordEmbedder::load(run.input("base_table")));
  } else {
    embedder = std::make_unique<HashedSubwordEmbedder>(run.get<int>("embedding_dim"), run.seed());
  }
  const EmbeddingTable table = init_token_embeddings(tokens, *embedder);
  const AlignResult res = optimize_embeddings(table, dataset, pmi, cfg);
  run.output("embeddings", "token_embeddings.bin", serialize_embeddings(res.table, &res.projector));

  auto loss_json = [](const AlignLoss& l) {
    OrderedJson j;
    j["total"] = l.total;
    j["main"] = l.main;
    j["prior"] = l.prior;
    j["coh"] = l.coh;
    return j;
  };
  OrderedJson report;
  report["tokens"] = tokens.size();
  report["samples"] = dataset.size();
  report["pmi_edges"] = pmi.edges().size();
  report["initial"] = loss_json(res.initial);
  report["final"] = loss_json(res.final);
  OrderedJson full = report;
  OrderedJson hist = OrderedJson::array();
  for (const auto& l : res.history) hist.push_back(loss_json(l));
  full["history"] = std::move(hist);
  run.output("report", "align_report.json", full.dump(2) + "\n");
  return report;
}

OrderedJson cmd_export_sft(Run& run) {
  const bool geo = run.has("location_tokens") || run.has("profiles");
  if (!geo && !run.has("trajectories"))
    fail(ErrorKind::kUsage, "export-sft needs --location-tokens with --profiles, or --trajectories");
  OrderedJson report;
  if (geo) {
    const auto locs = load_location_tokens(run.require("location_tokens", "output of tokenize"));
    const auto loaded = load_profiles(run.require("profiles", "location profiles"), run.strict());
    std::map<std::string, LocationProfile> profiles;
    for (const auto& p : loaded.profiles) profiles.emplace(p.location_id, p);
    std::vector<TokenizedLocation> tl;
    for (const auto& l : locs) tl.push_back(TokenizedLocation{l.location_id, l.tokens});
    const auto records = export_bidirectional_pairs(tl, profiles);
    run.output("geo", "sft_geo.jsonl", records_to_jsonl(records));
    report["geo_records"] = records.size();
  }
  if (run.has("trajectories")) {
    const PeriodPartition periods = load_periods(run);
    const auto ts = load_trajectories(run.input("trajectories"));
    std::map<WindowKey, std::vector<double>> seq;
    if (run.has("sequence_embeddings")) seq = load_sequence_embeddings(run.input("sequence_embeddings"));
    std::map<WindowKey, Trajectory> baselines;
    if (run.has("baselines")) baselines = by_window(load_trajectories(run.input("baselines")), "baseline");
    std::optional<std::string> scenario;
    if (run.has("scenario")) scenario = run.str("scenario");
    const RefineOptions ro = refine_options(run);

    std::vector<InstructionRecord> pred, gen, refl;
    std::size_t satisfied = 0;
    std::size_t skipped = 0;
    for (const auto& t : ts) {
      std::optional<std::vector<double>> emb;
      if (auto it = seq.find({t.user_id, t.window_start_day}); it != seq.end()) emb = it->second;
      if (t.points.size() >= 2) pred.push_back(prediction_record(t, periods, emb));
      if (auto g = generation_record(t, periods, emb)) gen.push_back(std::move(*g));
      std::optional<Trajectory> base;
      if (auto it = baselines.find({t.user_id, t.window_start_day + 2}); it != baselines.end()) base = it->second;
      auto r = reflection_record(t, periods, base, ro);
      if (!r) {
        ++skipped;
        continue;
      }
      if (scenario) {
        bool hit = false;
        for (auto l : r->scenarios) hit = hit || scenario_name(l) == *scenario;
        if (!hit) continue;
      }
      satisfied += r->refine.satisfied ? 1 : 0;
      refl.push_back(std::move(r->record));
    }
    run.output("prediction", "sft_prediction.jsonl", records_to_jsonl(pred));
    run.output("generation", "sft_generation.jsonl", records_to_jsonl(gen));
    run.output("reflection", "sft_reflection.jsonl", records_to_jsonl(refl));
    report["prediction_records"] = pred.size();
    report["generation_records"] = gen.size();
    report["reflection_records"] = refl.size();
    report["reflection_satisfied"] = satisfied;
    report["reflection_skipped"] = skipped;
  }
  return report;
}

OrderedJson cmd_evaluate(Run& run) {
  const auto generated = load_trajectories(run.require("generated", "generated trajectories"));
  const auto truth = load_trajectories(run.require("truth", "ground-truth trajectories"));
  EvalOptions o;
  o.per_user = run.get<bool>("per_user");
  o.corpus_bleu = run.get<bool>("corpus_bleu");
  o.bleu.max_n = run.get<int>("bleu_max_n");
  o.bleu.epsilon = run.get<double>("bleu_epsilon");
  const std::string smoothing = run.str("bleu_smoothing");
  if (smoothing == "epsilon") {
    o.bleu.smoothing = BleuSmoothing::kEpsilon;
  } else if (smoothing != "none") {
    fail(ErrorKind::kUsage, "bleu_smoothing must be 'none' or 'epsilon'");
  }
  const EvalReport rep = evaluate_generation(generated, truth, o);
  const OrderedJson j = report_to_json(rep);
  run.output("report", "eval_report.jsonl", j.dump() + "\n");
  run.output("plot", "eval_plot.json", plot_data_to_json(rep.plot).dump(2) + "\n");
  return j;
}

OrderedJson cmd_reward(Run& run) {
  const PeriodPartition periods = load_periods(run);
  const auto generated = load_trajectories(run.require("generated", "generated trajectories"));
  const auto truth = by_window(load_trajectories(run.require("truth", "ground-truth trajectories")), "truth");

  std::map<WindowKey, std::vector<std::size_t>> groups;
  std::vector<RewardBreakdown> rewards;
  std::vector<std::string> ids;
  for (const auto& g : generated) {
    const WindowKey key{g.user_id, g.window_start_day};
    auto it = truth.find(key);
    if (it == truth.end())
      fail(ErrorKind::kData, "no ground truth for " + g.user_id + "@" + std::to_string(g.window_start_day));
    auto& members = groups[key];
    ids.push_back(g.user_id + "@" + std::to_string(g.window_start_day) + "#" + std::to_string(members.size()));
    members.push_back(rewards.size());
    rewards.push_back(compute_reward(g, it->second, periods));
  }
  std::vector<std::optional<double>> adv(rewards.size());
  for (const auto& [key, members] : groups) {
    if (members.size() < 2) continue;
    std::vector<double> totals;
    for (auto m : members) totals.push_back(rewards[m].total);
    const auto a = group_advantages(totals);
    for (std::size_t i = 0; i < members.size(); ++i) adv[members[i]] = a[i];
  }
  std::vector<OrderedJson> rows;
  double sum = 0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    OrderedJson r;
    r["sample_id"] = ids[i];
    const auto rj = reward_to_json(rewards[i]);
    for (const auto& [k, v] : rj.items()) r[k] = v;
    if (adv[i]) r["advantage"] = *adv[i];
    rows.push_back(std::move(r));
    sum += rewards[i].total;
  }
  run.output("rewards", "rewards.jsonl", json_lines(rows));
  OrderedJson report;
  report["samples"] = rewards.size();
  report["groups"] = groups.size();
  report["feature_count"] = feature_count(periods, false);
  report["mean_total"] = rewards.empty() ? 0.0 : sum / static_cast<double>(rewards.size());
  return report;
}

OrderedJson cmd_refine(Run& run) {
  const PeriodPartition periods = load_periods(run);
  const auto baselines = load_trajectories(run.require("baseline", "generated next-day trajectories"));
  const auto targets = by_window(load_trajectories(run.require("target", "ground-truth next-day trajectories")), "target");
  std::map<WindowKey, Trajectory> history;
  if (run.has("history")) history = by_window(load_trajectories(run.input("history")), "history");
  RefineOptions ro = refine_options(run);
  if (run.has("slot_alphabet")) ro.slot_alphabet = run.get<std::vector<int>>("slot_alphabet");

  std::vector<OrderedJson> rows;
  std::size_t satisfied = 0;
  std::size_t edits = 0;
  for (const auto& b : baselines) {
    const WindowKey key{b.user_id, b.window_start_day};
    auto it = targets.find(key);
    if (it == targets.end())
      fail(ErrorKind::kData, "no target for " + b.user_id + "@" + std::to_string(b.window_start_day));
    const StatFeatureSet target = extract_features(it->second, periods);
    std::vector<const Trajectory*> sources{&b};
    if (auto h = history.find({b.user_id, b.window_start_day - 2}); h != history.end())
      sources.insert(sources.begin(), &h->second);
    const RefineResult r = refine_loop(b, target, collect_allowed_locations(sources, target), periods, ro);
    OrderedJson row;
    row["user_id"] = b.user_id;
    row["window_start_day"] = b.window_start_day;
    const auto rj = refine_result_to_json(r);
    for (const auto& [k, v] : rj.items()) row[k] = v;
    rows.push_back(std::move(row));
    satisfied += r.satisfied ? 1 : 0;
    edits += r.edits.size();
  }
  run.output("refined", "refine.jsonl", json_lines(rows));
  OrderedJson report;
  report["samples"] = rows.size();
  report["satisfied"] = satisfied;
  report["edits"] = edits;
  return report;
}

using Handler = std::function<OrderedJson(Run&)>;

const std::map<std::string, Handler, std::less<>>& handlers() {
  static const std::map<std::string, Handler, std::less<>> h = {
      {"preprocess", cmd_preprocess}, {"build-codebook", cmd_build_codebook},
      {"tokenize", cmd_tokenize},     {"align", cmd_align},
      {"export-sft", cmd_export_sft}, {"evaluate", cmd_evaluate},
      {"reward", cmd_reward},         {"refine", cmd_refine},
  };
  return h;
}

}  // namespace

const std::vector<CommandInfo>& command_list() {
  static const std::vector<CommandInfo> list = {
      {"preprocess", "Raw visits to windowed trajectories"},
      {"build-codebook", "Train the residual-quantized codebook stack"},
      {"tokenize", "Assign Location IDs to locations and trajectory points"},
      {"align", "Align codeword-token embeddings with the semantic space"},
      {"export-sft", "Write instruction-tuning corpora"},
      {"evaluate", "Compare generated and ground-truth trajectories"},
      {"reward", "Feature-matching rewards and group advantages"},
      {"refine", "Minimal-edit refinement toward target features"},
  };
  return list;
}

OrderedJson command_defaults(std::string_view command) { return defaults_for(command); }

OrderedJson run_command(std::string_view command, const Json& options) {
  auto it = handlers().find(command);
  if (it == handlers().end()) fail(ErrorKind::kUsage, "unknown command '" + std::string(command) + "'");
  Run run(command, options);
  return run.finish(it->second(run));
}

}  // namespace movetok
