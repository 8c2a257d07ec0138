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

#include "mlp.hpp"

#include <cmath>

namespace movetok {

Mlp::Mlp(const std::vector<int>& dims, Rng& rng) {
  if (dims.size() < 2) fail(ErrorKind::kUsage, "network needs at least two dimensions");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const int in = dims[i];
    const int out = dims[i + 1];
    if (in <= 0 || out <= 0) fail(ErrorKind::kUsage, "network dimensions must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        layer.weight(r, c) = rng.uniform(-bound, bound);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = rng.uniform(-bound, bound);
    layers_.push_back(std::move(layer));
  }
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].bias.size() != layers_[i].weight.rows())
      fail(ErrorKind::kData, "layer bias does not match weight rows");
    if (i > 0 && layers_[i].weight.cols() != layers_[i - 1].weight.rows())
      fail(ErrorKind::kData, "consecutive layer shapes do not chain");
  }
}

Mlp Mlp::identity(int dim) {
  std::vector<DenseLayer> layers;
  layers.push_back({Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)});
  return Mlp(std::move(layers));
}

int Mlp::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

std::vector<int> Mlp::dims() const {
  std::vector<int> d;
  if (layers_.empty()) return d;
  d.push_back(input_dim());
  for (const auto& l : layers_) d.push_back(static_cast<int>(l.weight.rows()));
  return d;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd m = x;
  return forward(m, nullptr).col(0);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, MlpTrace* trace) const {
  if (x.rows() != input_dim()) {
    fail(ErrorKind::kData, "network input has dimension " + std::to_string(x.rows()) +
                               ", expected " + std::to_string(input_dim()));
  }
  if (trace) {
    trace->inputs.clear();
    trace->pre_activations.clear();
  }
  Eigen::MatrixXd h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd z = layers_[i].weight * h;
    z.colwise() += layers_[i].bias;
    if (trace) {
      trace->inputs.push_back(h);
      trace->pre_activations.push_back(z);
    }
    h = (i + 1 < layers_.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(const MlpTrace& trace, const Eigen::MatrixXd& grad_out,
                              MlpGradients& grads) const {
  Eigen::MatrixXd g = grad_out;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    if (k + 1 < layers_.size()) {
      g = g.cwiseProduct(
          (trace.pre_activations[k].array() > 0.0).cast<double>().matrix());
    }
    grads[k].weight.noalias() += g * trace.inputs[k].transpose();
    grads[k].bias += g.rowwise().sum();
    g = layers_[k].weight.transpose() * g;
  }
  return g;
}

MlpGradients Mlp::zero_gradients() const {
  MlpGradients g;
  g.reserve(layers_.size());
  for (const auto& l : layers_) {
    g.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                 Eigen::VectorXd::Zero(l.bias.size())});
  }
  return g;
}

AdamW::AdamW(std::vector<std::size_t> block_sizes, Options options) : options_(options) {
  for (std::size_t n : block_sizes) {
    m_.emplace_back(n, 0.0);
    v_.emplace_back(n, 0.0);
  }
}

void AdamW::step(std::span<const std::span<double>> params,
                 std::span<const std::span<const double>> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    fail(ErrorKind::kUsage, "optimizer parameter list changed between steps");
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  const double lr = options_.learning_rate;
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    auto g = grads[b];
    auto& m = m_[b];
    auto& v = v_[b];
    if (p.size() != m.size() || g.size() != m.size())
      fail(ErrorKind::kUsage, "optimizer block size mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] -= lr * options_.weight_decay * p[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g[i];
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + options_.eps);
    }
  }
}

}  // namespace movetok
