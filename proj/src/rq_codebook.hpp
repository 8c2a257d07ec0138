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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "mlp.hpp"

namespace movetok {

inline constexpr std::uint32_t kCodebookFormatVersion = 1;

struct RQConfig {
  int n_layers = 4;
  int codebook_size = 512;
  int code_dim = 64;
  // First entry is the semantic vector dimension, last must equal code_dim.
  std::vector<int> encoder_dims = {2048, 1024, 512, 256, 128, 64};
  double alpha = 0.25;
  double learning_rate = 1e-3;
  int batch_size = 1024;
  double weight_decay = 0.01;
  int epochs = 20;
  std::uint64_t seed = 42;

  int input_dim() const { return encoder_dims.empty() ? 0 : encoder_dims.front(); }
  std::vector<int> decoder_dims() const { return {encoder_dims.rbegin(), encoder_dims.rend()}; }
  void validate() const;

  bool operator==(const RQConfig&) const = default;
};

// One codeword per row.
using CodebookMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Discrete Location ID: one codeword index per quantization layer.
struct LocationTokenSeq {
  std::vector<int> indices;

  /// "<a_3><b_17><c_0><d_511>"; layer prefixes are consecutive letters.
  std::string render() const;

  auto operator<=>(const LocationTokenSeq&) const = default;
};

std::string token_name(std::size_t layer, int index);
LocationTokenSeq parse_token_seq(std::string_view rendered);

struct CodebookStack {
  RQConfig config;
  std::vector<CodebookMatrix> codebooks;  // n_layers x (codebook_size x code_dim)
  Mlp encoder;
  Mlp decoder;

  void validate() const;
};

struct LayerQuantization {
  int index = 0;
  Eigen::VectorXd residual;  // input residual minus the chosen codeword
};

/// Nearest codeword by squared L2 distance; ties go to the lowest index.
LayerQuantization quantize_layer(std::span<const double> residual,
                                 const CodebookMatrix& codebook);

struct LocationEncoding {
  LocationTokenSeq tokens;
  Eigen::VectorXd latent;                 // encoder output r_0
  std::vector<Eigen::VectorXd> residuals;  // residual entering each layer
  std::vector<Eigen::VectorXd> codewords;  // codeword chosen at each layer
  Eigen::VectorXd quantized_sum;
  Eigen::VectorXd final_residual;
};

LocationEncoding encode_location(std::span<const double> vector, const CodebookStack& stack);

/// Residual quantization loss summed over layers. The value does not depend
/// on where stop-gradients sit; they only matter for the training gradients.
double rq_loss(std::span<const Eigen::VectorXd> residuals,
               std::span<const Eigen::VectorXd> codewords, double alpha);

/// Squared reconstruction error ||E - decoder(E_hat)||^2.
double rec_loss(std::span<const double> original, const Eigen::VectorXd& quantized_sum,
                const Mlp& decoder);

// Loss terms a gradient evaluation includes.
struct GradientTerms {
  bool reconstruction = true;
  bool codebook = true;    // ||sg[r] - v||^2, reaches codewords only
  bool commitment = true;  // alpha ||r - sg[v]||^2, reaches the encoder only
};

struct StackGradients {
  MlpGradients encoder;
  MlpGradients decoder;
  std::vector<CodebookMatrix> codebooks;
  double rec_loss = 0.0;  // batch means of per-sample sums
  double rq_loss = 0.0;
  std::vector<std::vector<int>> codes;        // [layer][sample]
  std::vector<Eigen::MatrixXd> layer_inputs;  // [layer] code_dim x batch
};

/// Gradients of the batch-mean loss. Quantization is treated as identity on
/// the backward pass, so the reconstruction gradient reaches the encoder
/// unchanged. When fixed_codes is given the nearest-codeword search is
/// skipped and those indices are used instead.
StackGradients batch_gradients(const CodebookStack& stack, const Eigen::MatrixXd& batch,
                               const GradientTerms& terms = {},
                               const std::vector<std::vector<int>>* fixed_codes = nullptr);

struct EpochStats {
  int epoch = 0;
  double rec_loss = 0.0;
  double rq_loss = 0.0;
  double total_loss = 0.0;
  double recon_mse = 0.0;  // full-corpus, per coordinate, after the epoch
  int reseeded = 0;
};

struct TrainResult {
  CodebookStack stack;
  double initial_mse = 0.0;  // after initialization, before any update
  std::vector<EpochStats> epochs;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch AdamW training of encoder, codebooks and decoder. Codebooks are
/// seeded k-means++ style from the first batch; codewords unused for a whole
/// epoch are moved onto a random residual from the epoch's last batch.
TrainResult train_rqvae(const std::vector<std::vector<double>>& corpus, const RQConfig& config,
                        const EpochCallback& on_epoch = {});

/// Mean squared reconstruction error per coordinate over a corpus.
double reconstruction_mse(const CodebookStack& stack, const Eigen::MatrixXd& corpus);

struct CodebookReport {
  std::vector<std::vector<std::int64_t>> usage;  // [layer][codeword]
  std::vector<int> used_codewords;               // per layer
  std::size_t vectors = 0;
  std::size_t distinct_sequences = 0;
  double collision_rate = 0.0;  // 1 - distinct / vectors
};

CodebookReport codebook_report(const CodebookStack& stack,
                               const std::vector<std::vector<double>>& corpus);
Json report_to_json(const CodebookReport& report);

std::string serialize_stack(const CodebookStack& stack);
CodebookStack deserialize_stack(std::string_view bytes);
void save_stack(const CodebookStack& stack, const std::filesystem::path& path);
CodebookStack load_stack(const std::filesystem::path& path);

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& corpus);

}  // namespace movetok
