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

#include "rq_codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace movetok {
namespace {

constexpr char kCodebookMagic[] = "MTCB";

int nearest_codeword(const double* r, const CodebookMatrix& codebook) {
  const Eigen::Index dim = codebook.cols();
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < codebook.rows(); ++k) {
    const double* v = codebook.data() + k * dim;
    double d = 0.0;
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double diff = r[j] - v[j];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

// k-means++ seeding over the columns of points. Degenerate inputs (fewer
// distinct points than k) fall back to jittered copies of random points.
CodebookMatrix seed_codebook(const Eigen::MatrixXd& points, int k, Rng& rng) {
  const Eigen::Index n = points.cols();
  const Eigen::Index dim = points.rows();
  CodebookMatrix cb(k, dim);
  Eigen::VectorXd nearest_d2 =
      Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  const double scale = std::max(1e-6, std::sqrt(points.squaredNorm() / std::max<Eigen::Index>(1, n * dim)));
  for (int c = 0; c < k; ++c) {
    Eigen::Index pick = 0;
    const double total = c == 0 ? 0.0 : nearest_d2.sum();
    if (c == 0 || !(total > 0.0)) {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
      cb.row(c) = points.col(pick).transpose();
      if (c > 0) {
        for (Eigen::Index j = 0; j < dim; ++j) cb(c, j) += 1e-3 * scale * rng.normal();
      }
    } else {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= nearest_d2(i);
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
      cb.row(c) = points.col(pick).transpose();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest_d2(i) = std::min(nearest_d2(i), (points.col(i) - cb.row(c).transpose()).squaredNorm());
    }
  }
  return cb;
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) fail(ErrorKind::kNumeric, std::string("non-finite values in ") + what);
}

std::vector<std::span<double>> parameter_blocks(CodebookStack& s) {
  std::vector<std::span<double>> out;
  for (Mlp* net : {&s.encoder, &s.decoder}) {
    for (auto& l : net->layers()) {
      out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
      out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
  }
  for (auto& cb : s.codebooks) out.emplace_back(cb.data(), static_cast<std::size_t>(cb.size()));
  return out;
}

std::vector<std::span<const double>> gradient_blocks(const StackGradients& g) {
  std::vector<std::span<const double>> out;
  for (const MlpGradients* net : {&g.encoder, &g.decoder}) {
    for (const auto& l : *net) {
      out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
      out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
  }
  for (const auto& cb : g.codebooks) out.emplace_back(cb.data(), static_cast<std::size_t>(cb.size()));
  return out;
}

void write_mlp(ByteWriter& w, const Mlp& net) {
  w.put_u32(static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    w.put_u32(static_cast<std::uint32_t>(l.weight.rows()));
    w.put_u32(static_cast<std::uint32_t>(l.weight.cols()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.put_f64(l.weight(r, c));
    w.put_f64s({l.bias.data(), static_cast<std::size_t>(l.bias.size())});
  }
}

Mlp read_mlp(ByteReader& r) {
  const std::uint32_t n = r.u32();
  std::vector<DenseLayer> layers;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    DenseLayer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index a = 0; a < l.weight.rows(); ++a)
      for (Eigen::Index b = 0; b < l.weight.cols(); ++b) l.weight(a, b) = r.f64();
    r.f64s({l.bias.data(), static_cast<std::size_t>(l.bias.size())});
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

}  // namespace

void RQConfig::validate() const {
  if (n_layers < 1) fail(ErrorKind::kUsage, "n_layers must be at least 1");
  if (n_layers > 26) fail(ErrorKind::kUsage, "n_layers above 26 cannot be rendered as tokens");
  if (codebook_size < 2) fail(ErrorKind::kUsage, "codebook_size must be at least 2");
  if (code_dim < 1) fail(ErrorKind::kUsage, "code_dim must be positive");
  if (encoder_dims.size() < 2) fail(ErrorKind::kUsage, "encoder_dims needs at least two entries");
  for (int d : encoder_dims)
    if (d < 1) fail(ErrorKind::kUsage, "encoder_dims entries must be positive");
  if (encoder_dims.back() != code_dim)
    fail(ErrorKind::kUsage, "last encoder dimension must equal code_dim");
  if (!(alpha >= 0.0)) fail(ErrorKind::kUsage, "alpha must be non-negative");
  if (!(learning_rate > 0.0)) fail(ErrorKind::kUsage, "learning_rate must be positive");
  if (batch_size < 1) fail(ErrorKind::kUsage, "batch_size must be positive");
  if (!(weight_decay >= 0.0)) fail(ErrorKind::kUsage, "weight_decay must be non-negative");
  if (epochs < 0) fail(ErrorKind::kUsage, "epochs must be non-negative");
}

std::string token_name(std::size_t layer, int index) {
  return "<" + std::string(1, static_cast<char>('a' + layer)) + "_" + std::to_string(index) + ">";
}

std::string LocationTokenSeq::render() const {
  std::string out;
  for (std::size_t i = 0; i < indices.size(); ++i) out += token_name(i, indices[i]);
  return out;
}

LocationTokenSeq parse_token_seq(std::string_view s) {
  LocationTokenSeq seq;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t layer = seq.indices.size();
    const std::string prefix = "<" + std::string(1, static_cast<char>('a' + layer)) + "_";
    if (s.substr(pos, prefix.size()) != prefix)
      fail(ErrorKind::kData, "malformed location token sequence '" + std::string(s) + "'");
    pos += prefix.size();
    const std::size_t close = s.find('>', pos);
    if (close == std::string_view::npos || close == pos)
      fail(ErrorKind::kData, "malformed location token sequence '" + std::string(s) + "'");
    int value = 0;
    for (std::size_t i = pos; i < close; ++i) {
      if (s[i] < '0' || s[i] > '9' || value > 100000000)
        fail(ErrorKind::kData, "malformed location token sequence '" + std::string(s) + "'");
      value = value * 10 + (s[i] - '0');
    }
    seq.indices.push_back(value);
    pos = close + 1;
  }
  return seq;
}

void CodebookStack::validate() const {
  config.validate();
  if (codebooks.size() != static_cast<std::size_t>(config.n_layers))
    fail(ErrorKind::kData, "codebook count does not match n_layers");
  for (const auto& cb : codebooks) {
    if (cb.rows() != config.codebook_size || cb.cols() != config.code_dim)
      fail(ErrorKind::kData, "codebook shape does not match config");
    if (!cb.allFinite()) fail(ErrorKind::kData, "non-finite codeword");
  }
  if (encoder.dims() != config.encoder_dims)
    fail(ErrorKind::kData, "encoder shape does not match config");
  if (decoder.dims() != config.decoder_dims())
    fail(ErrorKind::kData, "decoder shape does not match config");
}

LayerQuantization quantize_layer(std::span<const double> residual,
                                 const CodebookMatrix& codebook) {
  if (static_cast<Eigen::Index>(residual.size()) != codebook.cols()) {
    fail(ErrorKind::kData, "residual dimension " + std::to_string(residual.size()) +
                               " does not match codeword dimension " +
                               std::to_string(codebook.cols()));
  }
  if (codebook.rows() == 0) fail(ErrorKind::kData, "empty codebook");
  if (!all_finite(residual)) fail(ErrorKind::kNumeric, "non-finite residual");
  LayerQuantization out;
  out.index = nearest_codeword(residual.data(), codebook);
  out.residual = Eigen::Map<const Eigen::VectorXd>(residual.data(),
                                                   static_cast<Eigen::Index>(residual.size())) -
                 codebook.row(out.index).transpose();
  return out;
}

LocationEncoding encode_location(std::span<const double> vector, const CodebookStack& stack) {
  if (static_cast<int>(vector.size()) != stack.encoder.input_dim()) {
    fail(ErrorKind::kData, "semantic vector has dimension " + std::to_string(vector.size()) +
                               ", codebook expects " +
                               std::to_string(stack.encoder.input_dim()));
  }
  if (!all_finite(vector)) fail(ErrorKind::kNumeric, "non-finite semantic vector");
  LocationEncoding enc;
  enc.latent = stack.encoder.forward(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
      vector.data(), static_cast<Eigen::Index>(vector.size()))));
  enc.quantized_sum = Eigen::VectorXd::Zero(enc.latent.size());
  Eigen::VectorXd r = enc.latent;
  for (const auto& cb : stack.codebooks) {
    enc.residuals.push_back(r);
    LayerQuantization q = quantize_layer({r.data(), static_cast<std::size_t>(r.size())}, cb);
    enc.tokens.indices.push_back(q.index);
    enc.codewords.emplace_back(cb.row(q.index).transpose());
    enc.quantized_sum += enc.codewords.back();
    r = std::move(q.residual);
  }
  enc.final_residual = std::move(r);
  return enc;
}

double rq_loss(std::span<const Eigen::VectorXd> residuals,
               std::span<const Eigen::VectorXd> codewords, double alpha) {
  if (residuals.size() != codewords.size())
    fail(ErrorKind::kData, "rq_loss needs one codeword per residual");
  double total = 0.0;
  for (std::size_t n = 0; n < residuals.size(); ++n) {
    if (residuals[n].size() != codewords[n].size())
      fail(ErrorKind::kData, "rq_loss dimension mismatch at layer " + std::to_string(n));
    const double d2 = (residuals[n] - codewords[n]).squaredNorm();
    total += d2 + alpha * d2;
  }
  return total;
}

double rec_loss(std::span<const double> original, const Eigen::VectorXd& quantized_sum,
                const Mlp& decoder) {
  if (quantized_sum.size() != decoder.input_dim())
    fail(ErrorKind::kData, "quantized vector does not match decoder input");
  if (static_cast<int>(original.size()) != decoder.output_dim())
    fail(ErrorKind::kData, "original vector does not match decoder output");
  const Eigen::VectorXd recon = decoder.forward(quantized_sum);
  return (Eigen::Map<const Eigen::VectorXd>(original.data(),
                                            static_cast<Eigen::Index>(original.size())) -
          recon)
      .squaredNorm();
}

StackGradients batch_gradients(const CodebookStack& stack, const Eigen::MatrixXd& batch,
                               const GradientTerms& terms,
                               const std::vector<std::vector<int>>* fixed_codes) {
  const Eigen::Index b = batch.cols();
  if (b == 0) fail(ErrorKind::kData, "empty batch");
  const double inv_b = 1.0 / static_cast<double>(b);
  const double alpha = stack.config.alpha;

  StackGradients g;
  g.encoder = stack.encoder.zero_gradients();
  g.decoder = stack.decoder.zero_gradients();

  MlpTrace enc_trace;
  Eigen::MatrixXd r = stack.encoder.forward(batch, &enc_trace);
  Eigen::MatrixXd grad_latent = Eigen::MatrixXd::Zero(r.rows(), b);
  Eigen::MatrixXd quantized = Eigen::MatrixXd::Zero(r.rows(), b);

  for (std::size_t layer = 0; layer < stack.codebooks.size(); ++layer) {
    const CodebookMatrix& cb = stack.codebooks[layer];
    g.layer_inputs.push_back(r);
    g.codebooks.push_back(CodebookMatrix::Zero(cb.rows(), cb.cols()));
    std::vector<int> codes(static_cast<std::size_t>(b));
    for (Eigen::Index i = 0; i < b; ++i) {
      const int k = fixed_codes ? (*fixed_codes)[layer][static_cast<std::size_t>(i)]
                                : nearest_codeword(r.col(i).data(), cb);
      codes[static_cast<std::size_t>(i)] = k;
      const Eigen::VectorXd diff = r.col(i) - cb.row(k).transpose();  // r - v
      g.rq_loss += (1.0 + alpha) * diff.squaredNorm() * inv_b;
      if (terms.codebook) g.codebooks[layer].row(k) -= 2.0 * inv_b * diff.transpose();
      if (terms.commitment) grad_latent.col(i) += 2.0 * alpha * inv_b * diff;
      quantized.col(i) += cb.row(k).transpose();
      r.col(i) = diff;
    }
    g.codes.push_back(std::move(codes));
  }

  MlpTrace dec_trace;
  const Eigen::MatrixXd recon = stack.decoder.forward(quantized, &dec_trace);
  const Eigen::MatrixXd err = recon - batch;
  g.rec_loss = err.squaredNorm() * inv_b;
  if (terms.reconstruction) {
    const Eigen::MatrixXd grad_quantized =
        stack.decoder.backward(dec_trace, (2.0 * inv_b) * err, g.decoder);
    // Straight-through: the encoder sees the quantized-sum gradient directly.
    grad_latent += grad_quantized;
  }
  stack.encoder.backward(enc_trace, grad_latent, g.encoder);
  return g;
}

double reconstruction_mse(const CodebookStack& stack, const Eigen::MatrixXd& corpus) {
  if (corpus.cols() == 0) return 0.0;
  double sum = 0.0;
  constexpr Eigen::Index kChunk = 1024;
  for (Eigen::Index start = 0; start < corpus.cols(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, corpus.cols() - start);
    const Eigen::MatrixXd x = corpus.middleCols(start, n);
    Eigen::MatrixXd r = stack.encoder.forward(x);
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(r.rows(), n);
    for (const auto& cb : stack.codebooks) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const int k = nearest_codeword(r.col(i).data(), cb);
        q.col(i) += cb.row(k).transpose();
        r.col(i) -= cb.row(k).transpose();
      }
    }
    sum += (stack.decoder.forward(q) - x).squaredNorm();
  }
  return sum / static_cast<double>(corpus.size());
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& corpus) {
  if (corpus.empty()) return {};
  const std::size_t dim = corpus.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(corpus.size()));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].size() != dim)
      fail(ErrorKind::kData, "corpus vector " + std::to_string(i) + " has dimension " +
                                 std::to_string(corpus[i].size()) + ", expected " +
                                 std::to_string(dim));
    for (std::size_t j = 0; j < dim; ++j)
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = corpus[i][j];
  }
  return m;
}

TrainResult train_rqvae(const std::vector<std::vector<double>>& corpus, const RQConfig& config,
                        const EpochCallback& on_epoch) {
  config.validate();
  if (corpus.empty()) fail(ErrorKind::kData, "cannot train a codebook on an empty corpus");
  const Eigen::MatrixXd data = to_matrix(corpus);
  if (data.rows() != config.input_dim()) {
    fail(ErrorKind::kData, "corpus dimension " + std::to_string(data.rows()) +
                               " does not match encoder input " +
                               std::to_string(config.input_dim()));
  }
  check_finite(data, "training corpus");

  Rng rng(config.seed);
  const std::size_t n = corpus.size();
  const std::size_t batch_size = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), n);
  auto gather = [&](const std::vector<std::size_t>& order, std::size_t start, std::size_t count) {
    Eigen::MatrixXd x(data.rows(), static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i)
      x.col(static_cast<Eigen::Index>(i)) = data.col(static_cast<Eigen::Index>(order[start + i]));
    return x;
  };

  TrainResult result;
  CodebookStack& stack = result.stack;
  stack.config = config;
  stack.encoder = Mlp(config.encoder_dims, rng);
  stack.decoder = Mlp(config.decoder_dims(), rng);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  {
    Eigen::MatrixXd residuals = stack.encoder.forward(gather(order, 0, batch_size));
    for (int layer = 0; layer < config.n_layers; ++layer) {
      stack.codebooks.push_back(seed_codebook(residuals, config.codebook_size, rng));
      const CodebookMatrix& cb = stack.codebooks.back();
      for (Eigen::Index i = 0; i < residuals.cols(); ++i) {
        const int k = nearest_codeword(residuals.col(i).data(), cb);
        residuals.col(i) -= cb.row(k).transpose();
      }
    }
  }
  result.initial_mse = reconstruction_mse(stack, data);
  if (!std::isfinite(result.initial_mse))
    fail(ErrorKind::kNumeric, "non-finite reconstruction error at initialization");

  std::vector<std::size_t> block_sizes;
  for (auto s : parameter_blocks(stack)) block_sizes.push_back(s.size());
  AdamW optimizer(block_sizes, {.learning_rate = config.learning_rate,
                                .weight_decay = config.weight_decay});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    std::vector<std::vector<std::int64_t>> usage(
        static_cast<std::size_t>(config.n_layers),
        std::vector<std::int64_t>(static_cast<std::size_t>(config.codebook_size), 0));
    EpochStats stats;
    stats.epoch = epoch;
    std::vector<Eigen::MatrixXd> last_inputs;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t count = std::min(batch_size, n - start);
      const Eigen::MatrixXd x = gather(order, start, count);
      StackGradients g = batch_gradients(stack, x);
      if (!std::isfinite(g.rec_loss) || !std::isfinite(g.rq_loss)) {
        fail(ErrorKind::kNumeric, "loss became non-finite in epoch " + std::to_string(epoch) +
                                      " (rec " + format_double(g.rec_loss) + ", rq " +
                                      format_double(g.rq_loss) + ")");
      }
      const double w = static_cast<double>(count) / static_cast<double>(n);
      stats.rec_loss += w * g.rec_loss;
      stats.rq_loss += w * g.rq_loss;
      for (std::size_t l = 0; l < g.codes.size(); ++l)
        for (int k : g.codes[l]) ++usage[l][static_cast<std::size_t>(k)];
      const auto params = parameter_blocks(stack);
      const auto grads = gradient_blocks(g);
      optimizer.step(params, grads);
      last_inputs = std::move(g.layer_inputs);
    }
    for (int layer = 0; layer < config.n_layers; ++layer) {
      const Eigen::MatrixXd& pool = last_inputs[static_cast<std::size_t>(layer)];
      for (int k = 0; k < config.codebook_size; ++k) {
        if (usage[static_cast<std::size_t>(layer)][static_cast<std::size_t>(k)] > 0) continue;
        const auto pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(pool.cols())));
        stack.codebooks[static_cast<std::size_t>(layer)].row(k) = pool.col(pick).transpose();
        ++stats.reseeded;
      }
    }
    stats.total_loss = stats.rec_loss + stats.rq_loss;
    stats.recon_mse = reconstruction_mse(stack, data);
    if (!std::isfinite(stats.recon_mse))
      fail(ErrorKind::kNumeric, "reconstruction error became non-finite in epoch " +
                                    std::to_string(epoch));
    result.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

CodebookReport codebook_report(const CodebookStack& stack,
                               const std::vector<std::vector<double>>& corpus) {
  CodebookReport report;
  const auto layers = static_cast<std::size_t>(stack.config.n_layers);
  report.usage.assign(layers, std::vector<std::int64_t>(
                                  static_cast<std::size_t>(stack.config.codebook_size), 0));
  std::set<LocationTokenSeq> distinct;
  for (const auto& v : corpus) {
    const LocationEncoding enc = encode_location(v, stack);
    for (std::size_t l = 0; l < layers; ++l)
      ++report.usage[l][static_cast<std::size_t>(enc.tokens.indices[l])];
    distinct.insert(enc.tokens);
  }
  for (const auto& u : report.usage)
    report.used_codewords.push_back(
        static_cast<int>(std::count_if(u.begin(), u.end(), [](std::int64_t c) { return c > 0; })));
  report.vectors = corpus.size();
  report.distinct_sequences = distinct.size();
  report.collision_rate =
      corpus.empty() ? 0.0
                     : 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(corpus.size());
  return report;
}

Json report_to_json(const CodebookReport& report) {
  Json j;
  j["vectors"] = report.vectors;
  j["distinct_sequences"] = report.distinct_sequences;
  j["collision_rate"] = report.collision_rate;
  j["used_codewords"] = report.used_codewords;
  j["usage"] = report.usage;
  return j;
}

std::string serialize_stack(const CodebookStack& stack) {
  stack.validate();
  ByteWriter w;
  w.put_raw(std::string_view(kCodebookMagic, 4));
  w.put_u32(kCodebookFormatVersion);
  const RQConfig& c = stack.config;
  w.put_i32(c.n_layers);
  w.put_i32(c.codebook_size);
  w.put_i32(c.code_dim);
  w.put_u32(static_cast<std::uint32_t>(c.encoder_dims.size()));
  for (int d : c.encoder_dims) w.put_i32(d);
  w.put_f64(c.alpha);
  w.put_f64(c.learning_rate);
  w.put_i32(c.batch_size);
  w.put_f64(c.weight_decay);
  w.put_i32(c.epochs);
  w.put_u64(c.seed);
  for (const auto& cb : stack.codebooks)
    w.put_f64s({cb.data(), static_cast<std::size_t>(cb.size())});
  write_mlp(w, stack.encoder);
  write_mlp(w, stack.decoder);
  return w.bytes();
}

CodebookStack deserialize_stack(std::string_view bytes) {
  ByteReader r(bytes, "codebook artifact");
  if (r.raw(4) != std::string_view(kCodebookMagic, 4))
    fail(ErrorKind::kData, "not a codebook artifact (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCodebookFormatVersion) {
    fail(ErrorKind::kData, "unsupported codebook artifact version " + std::to_string(version) +
                               " (expected " + std::to_string(kCodebookFormatVersion) + ")");
  }
  CodebookStack s;
  RQConfig& c = s.config;
  c.n_layers = r.i32();
  c.codebook_size = r.i32();
  c.code_dim = r.i32();
  const std::uint32_t n_dims = r.u32();
  if (n_dims > 64) fail(ErrorKind::kData, "codebook artifact: implausible encoder depth");
  c.encoder_dims.clear();
  for (std::uint32_t i = 0; i < n_dims; ++i) c.encoder_dims.push_back(r.i32());
  c.alpha = r.f64();
  c.learning_rate = r.f64();
  c.batch_size = r.i32();
  c.weight_decay = r.f64();
  c.epochs = r.i32();
  c.seed = r.u64();
  c.validate();
  for (int l = 0; l < c.n_layers; ++l) {
    CodebookMatrix cb(c.codebook_size, c.code_dim);
    r.f64s({cb.data(), static_cast<std::size_t>(cb.size())});
    s.codebooks.push_back(std::move(cb));
  }
  s.encoder = read_mlp(r);
  s.decoder = read_mlp(r);
  r.expect_end();
  s.validate();
  return s;
}

void save_stack(const CodebookStack& stack, const std::filesystem::path& path) {
  write_file(path, serialize_stack(stack));
}

CodebookStack load_stack(const std::filesystem::path& path) {
  return deserialize_stack(read_file(path));
}

}  // namespace movetok
