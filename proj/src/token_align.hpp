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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "geo_profile.hpp"
#include "rq_codebook.hpp"

namespace movetok {

inline constexpr std::uint32_t kEmbeddingTableFormatVersion = 1;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Maps a surface-string piece to a base-vocabulary embedding.
class SubwordEmbedder {
 public:
  virtual ~SubwordEmbedder() = default;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd embed(std::string_view piece) const = 0;
};

// Deterministic stand-in for an LLM vocabulary: signed hashing of the
// piece's boundary-marked character trigrams, unit norm.
class HashedSubwordEmbedder final : public SubwordEmbedder {
 public:
  HashedSubwordEmbedder(int dim, std::uint64_t seed);
  int dim() const override { return dim_; }
  Eigen::VectorXd embed(std::string_view piece) const override;

 private:
  int dim_;
  std::uint64_t seed_;
};

// Imported {piece, values} table. Pieces missing from the table are embedded
// as the mean of their characters; a missing character is an error.
class TableSubwordEmbedder final : public SubwordEmbedder {
 public:
  explicit TableSubwordEmbedder(std::map<std::string, Eigen::VectorXd> table);
  static TableSubwordEmbedder load(const std::filesystem::path& path);
  int dim() const override { return dim_; }
  Eigen::VectorXd embed(std::string_view piece) const override;

 private:
  std::map<std::string, Eigen::VectorXd> table_;
  int dim_ = 0;
};

// "<a_12>" -> {"<", "a", "_", "12", ">"}: letter runs, digit runs, and
// every other byte on its own.
std::vector<std::string> split_token_pieces(std::string_view token);

// Every codeword token of a stack, layer-major.
std::vector<std::string> codeword_tokens(int n_layers, int codebook_size);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> tokens, RowMatrix initial);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  int dim() const { return static_cast<int>(initial_.cols()); }
  std::optional<std::size_t> find(std::string_view token) const;

  RowMatrix vectors;  // current embeddings, one row per token
  const RowMatrix& initial() const { return initial_; }

 private:
  std::vector<std::string> tokens_;
  RowMatrix initial_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Each token starts at the mean embedding of its surface pieces.
EmbeddingTable init_token_embeddings(const std::vector<std::string>& tokens,
                                     const SubwordEmbedder& embedder);

struct PmiEdge {
  std::string a;
  std::string b;
  double pmi = 0.0;
};

struct CooccurrenceModel {
  // Keys are ordered pairs with first < second, so counts are symmetric.
  std::map<std::pair<std::string, std::string>, std::int64_t> pair_counts;
  std::map<std::string, std::int64_t> token_counts;
  std::int64_t total_windows = 0;
  double pmi_floor = 0.0;

  std::int64_t pair_count(const std::string& t, const std::string& u) const;
  // Clipped from below at pmi_floor; pairs that never co-occur get the floor.
  double pmi(const std::string& t, const std::string& u) const;
  // Pairs whose clipped PMI is strictly positive, in lexicographic order.
  std::vector<PmiEdge> edges() const;
};

CooccurrenceModel cooccurrence_from_windows(const std::vector<std::set<std::string>>& windows,
                                            double pmi_floor = 0.0);

struct GridLocation {
  LocationTokenSeq tokens;
  int row = 0;
  int col = 0;
};

/// One window per occupied cell, covering all cells within Chebyshev
/// distance radius of it. A window holds the tokens of every Location ID
/// found in it.
CooccurrenceModel build_pmi(const std::vector<GridLocation>& locations, int radius,
                            double pmi_floor = 0.0);

struct AlignConfig {
  double lambda_prior = 0.1;
  double lambda_coh = 0.01;
  double learning_rate = 1e-2;
  int epochs = 200;
  std::uint64_t seed = 42;
  int neighborhood_radius_cells = 1;
  double pmi_floor = 0.0;

  void validate() const;
};

struct Projector {
  Eigen::MatrixXd weight;  // target_dim x embedding_dim
  Eigen::VectorXd bias;
};

Projector make_projector(int embedding_dim, int target_dim, std::uint64_t seed);

struct AlignSample {
  LocationTokenSeq tokens;
  std::vector<double> target;
};

struct AlignLoss {
  double total = 0.0;
  double main = 0.0;
  double prior = 0.0;
  double coh = 0.0;
};

struct AlignGradients {
  AlignLoss loss;
  RowMatrix embeddings;
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

AlignLoss align_loss(const EmbeddingTable& table, const std::vector<AlignSample>& batch,
                     const Projector& projector, const CooccurrenceModel& pmi,
                     const AlignConfig& cfg);

AlignGradients align_gradients(const EmbeddingTable& table, const std::vector<AlignSample>& batch,
                               const Projector& projector, const CooccurrenceModel& pmi,
                               const AlignConfig& cfg);

struct AlignResult {
  EmbeddingTable table;
  Projector projector;
  AlignLoss initial;
  AlignLoss final;
  std::vector<AlignLoss> history;  // loss before each step
};

/// Full-batch Adam on embeddings and projector. The returned state is the
/// lowest-loss state visited, so the final loss never exceeds the initial.
AlignResult optimize_embeddings(const EmbeddingTable& table, const std::vector<AlignSample>& dataset,
                                const CooccurrenceModel& pmi, const AlignConfig& cfg,
                                std::optional<Projector> projector = std::nullopt);

std::string serialize_embeddings(const EmbeddingTable& table, const Projector* projector);
std::pair<EmbeddingTable, std::optional<Projector>> deserialize_embeddings(std::string_view bytes);

struct InstructionRecord {
  std::string instruction;
  std::string input;
  std::string output;
  // Opaque sequence vector standing in for the literal "<sequence>" placeholder.
  std::optional<std::vector<double>> sequence_embedding;

  bool operator==(const InstructionRecord&) const = default;
};

std::string instruction_record_to_line(const InstructionRecord& r);
InstructionRecord instruction_record_from_line(std::string_view line);

std::string loc2id_prompt(std::string_view profile_text);
std::string id2loc_prompt(std::string_view rendered_tokens);

struct TokenizedLocation {
  std::string location_id;
  LocationTokenSeq tokens;
};

/// Two records per location (loc2id then id2loc), ordered by location_id.
std::vector<InstructionRecord> export_bidirectional_pairs(
    const std::vector<TokenizedLocation>& locations,
    const std::map<std::string, LocationProfile>& profiles);

}  // namespace movetok
