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

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "traj_pipeline.hpp"

namespace movetok {

/// A discrete distribution over string labels.
struct Distribution {
  std::vector<std::string> labels;
  std::vector<double> probs;

  static Distribution from_counts(const std::map<std::string, double>& counts);
  void validate() const;  // finite, non-negative, sums to 1 within 1e-9
};

/// Both distributions expressed over the sorted union of their labels.
struct AlignedDistributions {
  std::vector<std::string> labels;
  std::vector<double> p;
  std::vector<double> q;
};

AlignedDistributions align_supports(const Distribution& p, const Distribution& q);

double tvd(std::span<const double> p, std::span<const double> q);
// Infinite when q has zero mass where p does not.
double kl_divergence(std::span<const double> p, std::span<const double> q, double log_base = 2.0);
// Square root of the Jensen-Shannon divergence.
double jsd(std::span<const double> p, std::span<const double> q, double log_base = 2.0);

double tvd(const Distribution& p, const Distribution& q);
double jsd(const Distribution& p, const Distribution& q, double log_base = 2.0);

double hit_rate_at_k(const std::vector<std::vector<std::string>>& rankings,
                     const std::vector<std::string>& truths, int k);

enum class BleuSmoothing { kNone, kEpsilon };

struct BleuOptions {
  int max_n = 4;
  BleuSmoothing smoothing = BleuSmoothing::kNone;
  double epsilon = 0.1;  // numerator used for zero matches in epsilon mode
};

using TokenSeq = std::vector<std::string>;

/// Sentence BLEU with uniform weights. An order at which neither sequence
/// has any n-gram contributes precision 1.
double bleu(const TokenSeq& candidate, const TokenSeq& reference, const BleuOptions& options = {});

/// Corpus BLEU: clipped counts and lengths are pooled before combining.
double corpus_bleu(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references,
                   const BleuOptions& options = {});

struct ChannelMetrics {
  double bleu = 0;
  double tvd = 0;
  double jsd = 0;
};

struct EvalOptions {
  BleuOptions bleu;
  bool corpus_bleu = false;
  bool per_user = false;  // average per-pair distances instead of pooling
};

struct EvalPlotData {
  std::array<double, kSlotsPerDay> time_generated{};
  std::array<double, kSlotsPerDay> time_truth{};
  std::vector<std::string> location_labels;
  std::vector<double> location_generated;
  std::vector<double> location_truth;
};

struct EvalReport {
  ChannelMetrics time;
  ChannelMetrics location;
  std::size_t pairs = 0;
  std::size_t generated_points = 0;
  std::size_t truth_points = 0;
  EvalPlotData plot;
};

// Label of a point on the location channel: its tokens if present, else its cell.
std::string location_label(const TrajPoint& p);
std::string slot_label(int slot);

/// Compares generated and ground-truth trajectories paired by
/// (user_id, window_start_day).
EvalReport evaluate_generation(const std::vector<Trajectory>& generated,
                               const std::vector<Trajectory>& truth, const EvalOptions& options = {});

OrderedJson report_to_json(const EvalReport& r);
OrderedJson plot_data_to_json(const EvalPlotData& d);

}  // namespace movetok
