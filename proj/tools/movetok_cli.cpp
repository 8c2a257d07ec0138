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

// Command-line front end over the movetok C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "movetok/movetok.h"

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kGlobalKeys[] = {"seed", "strict", "out_dir"};

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d = {
      {"visits", "Raw visit records (JSONL)"},
      {"city", "City grid config (JSON file)"},
      {"cell_size", "Grid cell edge in meters"},
      {"slot_minutes", "Time slot width in minutes"},
      {"window_days", "Days per trajectory window"},
      {"stride_days", "Window stride in days"},
      {"min_points", "Fewest points a window may hold"},
      {"max_points", "Most points a window may hold"},
      {"dedup", "Collapse consecutive visits to one cell within a slot"},
      {"embeddings", "Precomputed semantic vectors (JSONL)"},
      {"profiles", "Location profiles (JSONL)"},
      {"semantic_dim", "Semantic vector dimension"},
      {"n_layers", "Number of residual codebooks"},
      {"codebook_size", "Codewords per codebook"},
      {"code_dim", "Codeword dimension"},
      {"encoder_dims", "Encoder layer widths, comma-separated"},
      {"alpha", "Commitment weight"},
      {"learning_rate", "Optimizer step size"},
      {"batch_size", "Minibatch size"},
      {"weight_decay", "AdamW weight decay"},
      {"epochs", "Training epochs"},
      {"codebook", "Codebook artifact from build-codebook"},
      {"trajectories", "Trajectory file from preprocess or tokenize"},
      {"location_tokens", "Location ID file from tokenize"},
      {"base_table", "Base subword embedding table (JSONL)"},
      {"embedding_dim", "Hashed subword embedding width"},
      {"lambda_prior", "Prior loss weight"},
      {"lambda_coh", "Coherence loss weight"},
      {"radius", "Neighborhood radius in grid cells"},
      {"pmi_floor", "PMI values below this are dropped"},
      {"sequence_embeddings", "Per-window sequence vectors (JSONL)"},
      {"baselines", "Baseline next-day trajectories for reflection records"},
      {"periods", "Time periods: JSON array or file"},
      {"scenario", "Keep only reflection records with this scenario label"},
      {"budget", "Edit budget per trajectory"},
      {"lookahead", "Edit sequence depth tried when no single edit helps"},
      {"lookahead_node_limit", "Search nodes allowed per lookahead"},
      {"generated", "Generated trajectories"},
      {"truth", "Ground-truth trajectories"},
      {"per_user", "Average metrics per user first"},
      {"corpus_bleu", "Pool BLEU counts over the corpus"},
      {"bleu_max_n", "Highest BLEU n-gram order"},
      {"bleu_smoothing", "none or epsilon"},
      {"bleu_epsilon", "Epsilon for zero n-gram matches"},
      {"baseline", "Trajectories to refine"},
      {"target", "Trajectories whose features are the target"},
      {"history", "Two-day histories supplying extra candidate locations"},
      {"slot_alphabet", "Slots an edit may use, comma-separated"},
  };
  return d;
}

std::string type_of(const std::string& key, const Json& def) {
  if (key == "slot_alphabet") return "LIST";
  if (key == "scenario") return "TEXT";
  if (key == "periods") return "JSON|PATH";
  if (def.is_null()) return "PATH";
  if (def.is_number_integer()) return "INT";
  if (def.is_number()) return "NUM";
  if (def.is_array()) return "LIST";
  return "TEXT";
}

int exit_code(mt_status s) {
  switch (s) {
    case MT_OK: return 0;
    case MT_ERR_USAGE: return 1;
    case MT_ERR_DATA:
    case MT_ERR_IO: return 2;
    default: return 3;
  }
}

struct ApiError {
  mt_status status;
  std::string message;
};

std::string take(char* s) {
  std::unique_ptr<char, void (*)(char*)> owned(s, mt_string_free);
  return s ? std::string(s) : std::string();
}

Json call_json(mt_status (*fn)(const char*, char**), const char* arg) {
  char* out = nullptr;
  const mt_status s = fn(arg, &out);
  if (s != MT_OK) throw ApiError{s, mt_last_error()};
  return Json::parse(take(out));
}

std::string flag_name(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return "--" + key;
}

std::string default_text(const Json& v) {
  if (v.is_null()) return "none";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x.dump();
    return s;
  }
  return v.dump();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ApiError{MT_ERR_IO, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ApiError{MT_ERR_USAGE, what + ": " + e.what()};
  }
}

// Converts a flag string to the JSON type of the option's default.
Json convert(const std::string& key, const Json& def, const std::string& raw) {
  if (key == "periods") {
    const std::string text = !raw.empty() && raw.front() == '[' ? raw : read_text(raw);
    return parse_json_text(text, "--periods");
  }
  if (def.is_array() || key == "slot_alphabet") {
    Json arr = Json::array();
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
        arr.push_back(v);
      } catch (const std::exception&) {
        throw ApiError{MT_ERR_USAGE, flag_name(key) + " expects a comma-separated integer list"};
      }
    }
    return arr;
  }
  if (def.is_number_integer()) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(raw, &used);
      if (used == raw.size()) return v;
    } catch (const std::exception&) {
    }
    throw ApiError{MT_ERR_USAGE, flag_name(key) + " expects an integer"};
  }
  if (def.is_number()) {
    try {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (used == raw.size()) return v;
    } catch (const std::exception&) {
    }
    throw ApiError{MT_ERR_USAGE, flag_name(key) + " expects a number"};
  }
  return raw;
}

struct CommandFlags {
  std::string name;
  std::string summary;
  Json defaults;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> bools;
};

// Options from --config: top-level keys apply to every command that accepts
// them, and an object under a command's name applies to that command only.
Json config_layer(const std::string& path, const std::string& command, const std::vector<CommandFlags>& all) {
  const Json cfg = parse_json_text(read_text(path), path);
  if (!cfg.is_object()) throw ApiError{MT_ERR_USAGE, path + ": config must be a JSON object"};
  std::set<std::string> commands;
  std::set<std::string> known;
  for (const auto& c : all) {
    commands.insert(c.name);
    for (const auto& [k, v] : c.defaults.items()) known.insert(k);
  }
  const Json* mine = nullptr;
  for (const auto& c : all)
    if (c.name == command) mine = &c.defaults;
  Json out = Json::object();
  for (const auto& [k, v] : cfg.items()) {
    if (commands.count(k)) {
      if (!v.is_object()) throw ApiError{MT_ERR_USAGE, path + ": section '" + k + "' must be an object"};
      continue;
    }
    if (!known.count(k)) throw ApiError{MT_ERR_USAGE, path + ": unknown option '" + k + "'"};
    if (mine->contains(k)) out[k] = v;
  }
  if (cfg.contains(command))
    for (const auto& [k, v] : cfg[command].items()) out[k] = v;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"movetok: mobility tokenization, preprocessing and evaluation pipeline"};
  app.set_version_flag("--version", std::string(mt_version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::string seed;
  std::string config_path;
  std::string out_dir;
  bool strict = false;
  app.add_option("--seed", seed, "Random seed (default 42)")->type_name("INT");
  app.add_option("--config", config_path, "JSON config file; flags override it")->type_name("PATH");
  app.add_flag("--strict", strict, "Fail on the first malformed record");
  app.add_option("--out-dir", out_dir, "Directory for outputs and the run manifest (default .)")->type_name("PATH");

  std::vector<CommandFlags> commands;
  try {
    const Json list = call_json([](const char*, char** out) { return mt_command_list(out); }, nullptr);
    for (const auto& c : list) {
      CommandFlags cf;
      cf.name = c["name"].get<std::string>();
      cf.summary = c["summary"].get<std::string>();
      cf.defaults = call_json(mt_command_defaults, cf.name.c_str());
      commands.push_back(std::move(cf));
    }
  } catch (const ApiError& e) {
    std::cerr << "error: " << e.message << "\n";
    return exit_code(e.status);
  }
  const std::set<std::string> globals(std::begin(kGlobalKeys), std::end(kGlobalKeys));
  for (auto& cf : commands) {
    cf.app = app.add_subcommand(cf.name, cf.summary);
    for (const auto& [key, def] : cf.defaults.items()) {
      if (globals.count(key)) continue;
      auto d = descriptions().find(key);
      const std::string help =
          (d == descriptions().end() ? key : d->second) + " (default " + default_text(def) + ")";
      if (def.is_boolean()) {
        cf.bools[key] = def.get<bool>();
        cf.app->add_flag(flag_name(key) + ",!--no-" + flag_name(key).substr(2), cf.bools[key], help);
      } else {
        cf.app->add_option(flag_name(key), cf.values[key], help)->type_name(type_of(key, def));
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    CommandFlags* cf = nullptr;
    for (auto& c : commands)
      if (c.app->parsed()) cf = &c;
    Json options = config_path.empty() ? Json::object() : config_layer(config_path, cf->name, commands);
    if (!seed.empty()) options["seed"] = convert("seed", cf->defaults["seed"], seed);
    if (strict) options["strict"] = true;
    if (!out_dir.empty()) options["out_dir"] = out_dir;
    for (const auto& [key, raw] : cf->values)
      if (cf->app->count(flag_name(key)) > 0) options[key] = convert(key, cf->defaults[key], raw);
    for (const auto& [key, v] : cf->bools)
      if (cf->app->count(flag_name(key)) + cf->app->count("--no-" + flag_name(key).substr(2)) > 0) options[key] = v;

    char* report = nullptr;
    const mt_status s = mt_run_command(cf->name.c_str(), options.dump().c_str(), &report);
    if (s != MT_OK) throw ApiError{s, mt_last_error()};
    const Json rep = Json::parse(take(report));
    if (rep.contains("warnings"))
      for (const auto& w : rep["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
    std::cout << rep.dump(2) << "\n";
    return 0;
  } catch (const ApiError& e) {
    std::cerr << "error: " << e.message << "\n";
    return exit_code(e.status);
  }
}
