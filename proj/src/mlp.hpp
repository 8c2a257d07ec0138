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

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"

namespace movetok {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

// Activations recorded by a batched forward pass; needed for backward().
struct MlpTrace {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
};

using MlpGradients = std::vector<DenseLayer>;

// Fully connected network with ReLU between layers and a linear output.
// Batched calls take one sample per column.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<int>& dims, Rng& rng);
  explicit Mlp(std::vector<DenseLayer> layers);

  static Mlp identity(int dim);

  int input_dim() const;
  int output_dim() const;
  std::vector<int> dims() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, MlpTrace* trace = nullptr) const;

  // Adds parameter gradients into grads and returns dLoss/dInput.
  Eigen::MatrixXd backward(const MlpTrace& trace, const Eigen::MatrixXd& grad_out,
                           MlpGradients& grads) const;

  MlpGradients zero_gradients() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
};

// Decoupled weight decay Adam over a fixed list of parameter blocks.
class AdamW {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  AdamW() = default;
  AdamW(std::vector<std::size_t> block_sizes, Options options);

  // params[i] and grads[i] must match the sizes given at construction.
  void step(std::span<const std::span<double>> params,
            std::span<const std::span<const double>> grads);

 private:
  Options options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long long t_ = 0;
};

}  // namespace movetok
