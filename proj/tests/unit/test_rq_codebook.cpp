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

#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "rq_codebook.hpp"

using namespace movetok;

namespace {

RQConfig tiny_config() {
  RQConfig c;
  c.n_layers = 3;
  c.codebook_size = 8;
  c.code_dim = 3;
  c.encoder_dims = {5, 6, 3};
  c.alpha = 0.25;
  return c;
}

Eigen::MatrixXd random_batch(int dim, int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd b(dim, n);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
  return b;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

// Central differences of f over a handful of entries of `params`.
template <typename F>
void check_gradient(double* params, const double* analytic, std::size_t n, F&& f, std::uint64_t seed) {
  Rng rng(seed);
  constexpr double h = 1e-6;
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t i = rng.index(n);
    const double keep = params[i];
    params[i] = keep + h;
    const double up = f();
    params[i] = keep - h;
    const double down = f();
    params[i] = keep;
    const double fd = (up - down) / (2 * h);
    CHECK(rel_err(fd, analytic[i]) < 1e-4);
  }
}

}  // namespace

TEST_CASE("quantize_layer picks the nearest codeword, lowest index on ties") {
  CodebookMatrix cb(4, 2);
  cb << 1, 0, 0, 1, -1, 0, 1, 0;
  const std::vector<double> r{0.9, 0.1};
  const auto q = quantize_layer(r, cb);
  CHECK(q.index == 0);
  CHECK(q.residual(0) == doctest::Approx(-0.1));
  CHECK(q.residual(1) == doctest::Approx(0.1));

  CodebookMatrix tie(3, 1);
  tie << 2, -1, 1;
  const std::vector<double> zero{0.0};
  CHECK(quantize_layer(zero, tie).index == 1);
  const std::vector<double> half{0.5};
  CHECK(quantize_layer(half, tie).index == 2);
  const std::vector<double> mid{0.0};
  CodebookMatrix sym(2, 1);
  sym << 1, -1;
  CHECK(quantize_layer(mid, sym).index == 0);
  const std::vector<double> wrong{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(quantize_layer(wrong, cb), Error);
}

TEST_CASE("quantize_layer agrees with brute force") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    CodebookMatrix cb(16, 4);
    for (Eigen::Index i = 0; i < cb.size(); ++i) cb.data()[i] = static_cast<double>(rng.index(5)) - 2.0;
    std::vector<double> r(4);
    for (auto& x : r) x = static_cast<double>(rng.index(5)) - 2.0;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 16; ++k) {
      double d = 0;
      for (int j = 0; j < 4; ++j) d += (r[j] - cb(k, j)) * (r[j] - cb(k, j));
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    CHECK(quantize_layer(r, cb).index == best);
  }
}

TEST_CASE("residual cascade telescopes") {
  const auto stack = testing::random_stack(tiny_config(), 3);
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(5);
    for (auto& x : v) x = rng.normal();
    const auto enc = encode_location(v, stack);
    REQUIRE(enc.tokens.indices.size() == 3);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
    for (const auto& c : enc.codewords) sum += c;
    CHECK((enc.latent - sum - enc.final_residual).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((enc.quantized_sum - sum).cwiseAbs().maxCoeff() < 1e-12);
    for (std::size_t l = 0; l + 1 < enc.residuals.size(); ++l)
      CHECK((enc.residuals[l] - enc.codewords[l] - enc.residuals[l + 1]).cwiseAbs().maxCoeff() < 1e-12);
  }
  const std::vector<double> wrong(4, 0.0);
  CHECK_THROWS_AS(encode_location(wrong, stack), Error);
}

TEST_CASE("rq_loss value and batch loss agree") {
  const auto stack = testing::random_stack(tiny_config(), 4);
  const Eigen::MatrixXd batch = random_batch(5, 6, 1);
  const auto g = batch_gradients(stack, batch);
  double rq = 0;
  double rec = 0;
  for (Eigen::Index i = 0; i < batch.cols(); ++i) {
    const std::vector<double> v(batch.col(i).data(), batch.col(i).data() + 5);
    const auto enc = encode_location(v, stack);
    double by_hand = 0;
    for (std::size_t l = 0; l < enc.codewords.size(); ++l)
      by_hand += 1.25 * (enc.residuals[l] - enc.codewords[l]).squaredNorm();
    CHECK(rq_loss(enc.residuals, enc.codewords, 0.25) == doctest::Approx(by_hand).epsilon(1e-12));
    rq += by_hand / 6;
    rec += rec_loss(v, enc.quantized_sum, stack.decoder) / 6;
  }
  CHECK(g.rq_loss == doctest::Approx(rq).epsilon(1e-12));
  CHECK(g.rec_loss == doctest::Approx(rec).epsilon(1e-12));
}

TEST_CASE("batch gradients match finite differences term by term") {
  const CodebookStack base = testing::random_stack(tiny_config(), 8);
  const Eigen::MatrixXd batch = random_batch(5, 4, 2);
  const auto ref = batch_gradients(base, batch);
  const auto codes = ref.codes;
  const double inv_b = 1.0 / 4.0;

  // Codeword sum per sample under fixed codes.
  auto quantized = [&](const CodebookStack& s) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(3, 4);
    for (std::size_t l = 0; l < s.codebooks.size(); ++l)
      for (Eigen::Index i = 0; i < 4; ++i) q.col(i) += s.codebooks[l].row(codes[l][i]).transpose();
    return q;
  };

  SUBCASE("decoder, reconstruction term") {
    CodebookStack s = base;
    GradientTerms terms{true, false, false};
    const auto g = batch_gradients(s, batch, terms, &codes);
    const Eigen::MatrixXd q = quantized(s);
    auto f = [&] { return (s.decoder.forward(q) - batch).squaredNorm() * inv_b; };
    for (std::size_t k = 0; k < s.decoder.layers().size(); ++k) {
      auto& layer = s.decoder.layers()[k];
      check_gradient(layer.weight.data(), g.decoder[k].weight.data(), layer.weight.size(), f, k);
      check_gradient(layer.bias.data(), g.decoder[k].bias.data(), layer.bias.size(), f, k + 10);
    }
  }

  SUBCASE("encoder, straight-through reconstruction term") {
    CodebookStack s = base;
    GradientTerms terms{true, false, false};
    const auto g = batch_gradients(s, batch, terms, &codes);
    const Eigen::MatrixXd offset = quantized(s) - s.encoder.forward(batch);
    auto f = [&] { return (s.decoder.forward(Eigen::MatrixXd(s.encoder.forward(batch) + offset)) - batch).squaredNorm() * inv_b; };
    for (std::size_t k = 0; k < s.encoder.layers().size(); ++k) {
      auto& layer = s.encoder.layers()[k];
      check_gradient(layer.weight.data(), g.encoder[k].weight.data(), layer.weight.size(), f, k + 20);
      check_gradient(layer.bias.data(), g.encoder[k].bias.data(), layer.bias.size(), f, k + 30);
    }
  }

  SUBCASE("encoder, commitment term") {
    CodebookStack s = base;
    GradientTerms terms{false, false, true};
    const auto g = batch_gradients(s, batch, terms, &codes);
    auto f = [&] {
      Eigen::MatrixXd r = s.encoder.forward(batch);
      double total = 0;
      for (std::size_t l = 0; l < s.codebooks.size(); ++l)
        for (Eigen::Index i = 0; i < 4; ++i) {
          const Eigen::VectorXd d = r.col(i) - s.codebooks[l].row(codes[l][i]).transpose();
          total += 0.25 * d.squaredNorm() * inv_b;
          r.col(i) = d;
        }
      return total;
    };
    for (std::size_t k = 0; k < s.encoder.layers().size(); ++k) {
      auto& layer = s.encoder.layers()[k];
      check_gradient(layer.weight.data(), g.encoder[k].weight.data(), layer.weight.size(), f, k + 40);
    }
  }

  SUBCASE("codebooks, codebook term with residuals held fixed") {
    CodebookStack s = base;
    GradientTerms terms{false, true, false};
    const auto g = batch_gradients(s, batch, terms, &codes);
    auto f = [&] {
      double total = 0;
      for (std::size_t l = 0; l < s.codebooks.size(); ++l)
        for (Eigen::Index i = 0; i < 4; ++i)
          total += (ref.layer_inputs[l].col(i) - s.codebooks[l].row(codes[l][i]).transpose()).squaredNorm() * inv_b;
      return total;
    };
    for (std::size_t l = 0; l < s.codebooks.size(); ++l)
      check_gradient(s.codebooks[l].data(), g.codebooks[l].data(), s.codebooks[l].size(), f, l + 50);
  }
}

TEST_CASE("token rendering round-trips") {
  const LocationTokenSeq t{{3, 17, 0, 511}};
  CHECK(t.render() == "<a_3><b_17><c_0><d_511>");
  CHECK(parse_token_seq(t.render()) == t);
  CHECK(token_name(1, 5) == "<b_5>");
  CHECK_THROWS_AS(parse_token_seq("<b_1><a_2>"), Error);
  CHECK_THROWS_AS(parse_token_seq("<a_>"), Error);
}

TEST_CASE("config validation") {
  RQConfig c;
  CHECK_NOTHROW(c.validate());
  c.encoder_dims.back() = 32;
  CHECK_THROWS_AS(c.validate(), Error);
  c = RQConfig{};
  c.codebook_size = 1;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("training is deterministic and lowers reconstruction error") {
  Rng rng(12);
  std::vector<std::vector<double>> corpus;
  for (int c = 0; c < 8; ++c) {
    std::vector<double> center(6);
    for (auto& x : center) x = rng.normal() * 2;
    for (int k = 0; k < 8; ++k) {
      auto v = center;
      for (auto& x : v) x += 0.05 * rng.normal();
      corpus.push_back(v);
    }
  }
  RQConfig cfg;
  cfg.n_layers = 2;
  cfg.codebook_size = 8;
  cfg.code_dim = 4;
  cfg.encoder_dims = {6, 16, 4};
  cfg.batch_size = 16;
  cfg.epochs = 15;
  cfg.learning_rate = 1e-2;
  cfg.seed = 3;
  const auto a = train_rqvae(corpus, cfg);
  const auto b = train_rqvae(corpus, cfg);
  CHECK(serialize_stack(a.stack) == serialize_stack(b.stack));
  REQUIRE(a.epochs.size() == 15);
  CHECK(a.epochs.back().recon_mse < a.initial_mse);

  cfg.seed = 4;
  CHECK(serialize_stack(train_rqvae(corpus, cfg).stack) != serialize_stack(a.stack));

  std::vector<std::vector<double>> ragged = corpus;
  ragged[3].pop_back();
  CHECK_THROWS_AS(train_rqvae(ragged, cfg), Error);
}

TEST_CASE("artifact round-trip and corruption") {
  const auto stack = testing::random_stack(tiny_config(), 21);
  const std::string bytes = serialize_stack(stack);
  const auto back = deserialize_stack(bytes);
  CHECK(serialize_stack(back) == bytes);
  CHECK(back.config == stack.config);

  std::string truncated = bytes.substr(0, bytes.size() - 3);
  CHECK_THROWS_AS(deserialize_stack(truncated), Error);
  std::string bad_magic = bytes;
  bad_magic[0] ^= 0x55;
  CHECK_THROWS_AS(deserialize_stack(bad_magic), Error);

  const auto dir = testing::scratch_dir("stack");
  save_stack(stack, dir / "cb.bin");
  CHECK(serialize_stack(load_stack(dir / "cb.bin")) == bytes);
  try {
    load_stack(dir / "missing.bin");
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIo);
  }
}

TEST_CASE("codebook report counts usage and collisions") {
  const auto stack = testing::random_stack(tiny_config(), 6);
  std::vector<std::vector<double>> corpus{{1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, {-1, 0, 2, 1, 0}};
  const auto rep = codebook_report(stack, corpus);
  CHECK(rep.vectors == 3);
  CHECK(rep.distinct_sequences <= 2);
  CHECK(rep.collision_rate == doctest::Approx(1.0 - static_cast<double>(rep.distinct_sequences) / 3.0));
  for (const auto& layer : rep.usage) {
    std::int64_t total = 0;
    for (auto u : layer) total += u;
    CHECK(total == 3);
  }
}
