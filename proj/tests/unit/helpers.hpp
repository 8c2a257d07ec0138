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

#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>

#include "rq_codebook.hpp"
#include "traj_pipeline.hpp"

namespace movetok::testing {

struct P {
  int slot;
  int row;
  int col;
  int day = 0;
};

// Points are taken in the given order; weekday follows from the day offset.
inline Trajectory make_traj(std::initializer_list<P> pts, std::int64_t start_day = 20457,
                            std::string user = "u") {
  Trajectory t;
  t.user_id = std::move(user);
  t.window_start_day = start_day;
  t.city = "test";
  for (const auto& p : pts) {
    TrajPoint q;
    q.day = p.day;
    q.weekday = weekday_of_day(start_day + p.day);
    q.slot = p.slot;
    q.cell = {p.row, p.col};
    t.points.push_back(q);
  }
  return t;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("movetok_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path data_path(const std::string& file) {
  return std::filesystem::path(MOVETOK_TEST_DATA) / file;
}

// Untrained stack with Gaussian codewords.
inline CodebookStack random_stack(const RQConfig& cfg, std::uint64_t seed) {
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
  s.validate();
  return s;
}

}  // namespace movetok::testing
