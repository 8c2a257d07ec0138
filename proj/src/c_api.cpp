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

#include "movetok/movetok.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "commands.hpp"
#include "eval_metrics.hpp"
#include "mobility_stats.hpp"
#include "reward_edit.hpp"
#include "rq_codebook.hpp"
#include "traj_pipeline.hpp"

struct mt_codebook {
  movetok::CodebookStack stack;
};

namespace {

using movetok::ErrorKind;

thread_local std::string g_last_error;

mt_status to_status(ErrorKind k) {
  switch (k) {
    case ErrorKind::kUsage: return MT_ERR_USAGE;
    case ErrorKind::kData: return MT_ERR_DATA;
    case ErrorKind::kNumeric: return MT_ERR_NUMERIC;
    case ErrorKind::kIo: return MT_ERR_IO;
  }
  return MT_ERR_INTERNAL;
}

template <typename F>
mt_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return MT_OK;
  } catch (const movetok::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const movetok::Json::exception& e) {
    g_last_error = e.what();
    return MT_ERR_DATA;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MT_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) movetok::fail(ErrorKind::kUsage, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

movetok::Json parse(const char* text, const char* what) {
  need(text, what);
  try {
    return movetok::Json::parse(text);
  } catch (const movetok::Json::parse_error& e) {
    movetok::fail(ErrorKind::kData, std::string(what) + ": " + e.what());
  }
}

movetok::PeriodPartition periods_from(const char* periods_json) {
  if (periods_json == nullptr) return movetok::PeriodPartition::standard();
  return movetok::PeriodPartition::from_json(parse(periods_json, "periods"));
}

void encode_one(const movetok::CodebookStack& stack, const double* v, size_t dim, int32_t* out) {
  const auto enc = movetok::encode_location(std::span<const double>(v, dim), stack);
  for (std::size_t i = 0; i < enc.tokens.indices.size(); ++i) out[i] = enc.tokens.indices[i];
}

std::span<const double> span_of(const double* p, size_t n) {
  if (n > 0) need(p, "distribution");
  return {p, n};
}

}  // namespace

extern "C" {

const char* mt_version(void) { return movetok::kVersion; }

const char* mt_last_error(void) { return g_last_error.c_str(); }

void mt_string_free(char* s) { std::free(s); }

mt_status mt_codebook_load(const char* path, mt_codebook** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto cb = std::make_unique<mt_codebook>();
    cb->stack = movetok::load_stack(path);
    *out = cb.release();
  });
}

void mt_codebook_free(mt_codebook* cb) { delete cb; }

mt_status mt_codebook_info(const mt_codebook* cb, size_t* n_layers, size_t* codebook_size, size_t* input_dim) {
  return guard([&] {
    need(cb, "codebook");
    const auto& c = cb->stack.config;
    if (n_layers) *n_layers = static_cast<size_t>(c.n_layers);
    if (codebook_size) *codebook_size = static_cast<size_t>(c.codebook_size);
    if (input_dim) *input_dim = static_cast<size_t>(c.input_dim());
  });
}

mt_status mt_encode(const mt_codebook* cb, const double* vector, size_t dim, int32_t* indices) {
  return guard([&] {
    need(cb, "codebook");
    need(vector, "vector");
    need(indices, "indices");
    encode_one(cb->stack, vector, dim, indices);
  });
}

mt_status mt_encode_batch(const mt_codebook* cb, const double* vectors, size_t count, size_t dim,
                          int32_t* indices) {
  return guard([&] {
    need(cb, "codebook");
    if (count == 0) return;
    need(vectors, "vectors");
    need(indices, "indices");
    const auto layers = static_cast<size_t>(cb->stack.config.n_layers);
    for (size_t i = 0; i < count; ++i) encode_one(cb->stack, vectors + i * dim, dim, indices + i * layers);
  });
}

mt_status mt_tvd(const double* p, const double* q, size_t n, double* out) {
  return guard([&] {
    need(out, "out");
    *out = movetok::tvd(span_of(p, n), span_of(q, n));
  });
}

mt_status mt_kl(const double* p, const double* q, size_t n, double* out) {
  return guard([&] {
    need(out, "out");
    *out = movetok::kl_divergence(span_of(p, n), span_of(q, n));
  });
}

mt_status mt_jsd(const double* p, const double* q, size_t n, double* out) {
  return guard([&] {
    need(out, "out");
    *out = movetok::jsd(span_of(p, n), span_of(q, n));
  });
}

mt_status mt_bleu(const char* const* candidate, size_t candidate_len, const char* const* reference,
                  size_t reference_len, int max_n, int smoothing, double epsilon, double* out) {
  return guard([&] {
    need(out, "out");
    auto seq = [](const char* const* xs, size_t n) {
      movetok::TokenSeq s;
      if (n > 0) need(xs, "token array");
      for (size_t i = 0; i < n; ++i) {
        need(xs[i], "token");
        s.emplace_back(xs[i]);
      }
      return s;
    };
    movetok::BleuOptions o;
    o.max_n = max_n;
    o.epsilon = epsilon;
    if (smoothing == 1) {
      o.smoothing = movetok::BleuSmoothing::kEpsilon;
    } else if (smoothing != 0) {
      movetok::fail(ErrorKind::kUsage, "smoothing must be 0 or 1");
    }
    *out = movetok::bleu(seq(candidate, candidate_len), seq(reference, reference_len), o);
  });
}

mt_status mt_hit_rate(const char* rankings_json, const char* truths_json, int k, double* out) {
  return guard([&] {
    need(out, "out");
    const auto rankings = parse(rankings_json, "rankings").get<std::vector<std::vector<std::string>>>();
    const auto truths = parse(truths_json, "truths").get<std::vector<std::string>>();
    *out = movetok::hit_rate_at_k(rankings, truths, k);
  });
}

mt_status mt_features(const char* trajectory_json, const char* periods_json, char** features_json) {
  return guard([&] {
    need(features_json, "out");
    const auto periods = periods_from(periods_json);
    const auto t = movetok::trajectory_from_json(parse(trajectory_json, "trajectory"));
    *features_json = dup_string(movetok::features_to_json(movetok::extract_features(t, periods), periods).dump());
  });
}

mt_status mt_reward(const char* generated_json, const char* truth_json, const char* periods_json,
                    char** reward_json) {
  return guard([&] {
    need(reward_json, "out");
    const auto periods = periods_from(periods_json);
    const auto g = movetok::trajectory_from_json(parse(generated_json, "generated"));
    const auto t = movetok::trajectory_from_json(parse(truth_json, "truth"));
    *reward_json = dup_string(movetok::reward_to_json(movetok::compute_reward(g, t, periods)).dump());
  });
}

mt_status mt_group_advantages(const double* rewards, size_t n, double* advantages) {
  return guard([&] {
    need(advantages, "advantages");
    const auto a = movetok::group_advantages(span_of(rewards, n));
    std::copy(a.begin(), a.end(), advantages);
  });
}

mt_status mt_run_command(const char* command, const char* options_json, char** report_json) {
  return guard([&] {
    need(command, "command");
    need(report_json, "out");
    const movetok::Json options = options_json ? parse(options_json, "options") : movetok::Json::object();
    *report_json = dup_string(movetok::run_command(command, options).dump(2));
  });
}

mt_status mt_command_defaults(const char* command, char** defaults_json) {
  return guard([&] {
    need(command, "command");
    need(defaults_json, "out");
    *defaults_json = dup_string(movetok::command_defaults(command).dump());
  });
}

mt_status mt_command_list(char** list_json) {
  return guard([&] {
    need(list_json, "out");
    movetok::OrderedJson j = movetok::OrderedJson::array();
    for (const auto& c : movetok::command_list()) j.push_back({{"name", c.name}, {"summary", c.summary}});
    *list_json = dup_string(j.dump());
  });
}

}  // extern "C"
