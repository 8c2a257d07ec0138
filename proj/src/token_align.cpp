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

#include "token_align.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "mlp.hpp"

namespace movetok {
namespace {

constexpr char kEmbeddingMagic[] = "MTET";

struct ResolvedSample {
  std::vector<std::size_t> rows;
  Eigen::Map<const Eigen::VectorXd> target;
};

std::vector<ResolvedSample> resolve(const EmbeddingTable& table,
                                    const std::vector<AlignSample>& batch,
                                    const Projector& projector) {
  if (batch.empty()) fail(ErrorKind::kData, "alignment batch is empty");
  if (projector.weight.cols() != table.dim())
    fail(ErrorKind::kData, "projector input does not match embedding dimension");
  std::vector<ResolvedSample> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const AlignSample& s = batch[i];
    if (s.tokens.indices.empty())
      fail(ErrorKind::kData, "alignment sample " + std::to_string(i) + " has no tokens");
    if (static_cast<Eigen::Index>(s.target.size()) != projector.weight.rows()) {
      fail(ErrorKind::kData, "alignment sample " + std::to_string(i) + " target has dimension " +
                                 std::to_string(s.target.size()) + ", projector outputs " +
                                 std::to_string(projector.weight.rows()));
    }
    std::vector<std::size_t> rows;
    for (std::size_t l = 0; l < s.tokens.indices.size(); ++l) {
      const std::string name = token_name(l, s.tokens.indices[l]);
      auto row = table.find(name);
      if (!row) fail(ErrorKind::kData, "token " + name + " is not in the embedding table");
      rows.push_back(*row);
    }
    out.push_back({std::move(rows), Eigen::Map<const Eigen::VectorXd>(
                                        s.target.data(), static_cast<Eigen::Index>(s.target.size()))});
  }
  return out;
}

struct ResolvedEdge {
  std::size_t a;
  std::size_t b;
  double pmi;
};

std::vector<ResolvedEdge> resolve_edges(const EmbeddingTable& table, const CooccurrenceModel& pmi) {
  std::vector<ResolvedEdge> out;
  for (const PmiEdge& e : pmi.edges()) {
    auto a = table.find(e.a);
    auto b = table.find(e.b);
    if (!a || !b)
      fail(ErrorKind::kData, "co-occurrence pair (" + e.a + ", " + e.b + ") not in embedding table");
    out.push_back({*a, *b, e.pmi});
  }
  return out;
}

AlignGradients evaluate(const EmbeddingTable& table, const std::vector<AlignSample>& batch,
                        const Projector& projector, const CooccurrenceModel& pmi,
                        const AlignConfig& cfg, bool with_gradients) {
  const auto samples = resolve(table, batch, projector);
  const auto edges = resolve_edges(table, pmi);
  AlignGradients g;
  if (with_gradients) {
    g.embeddings = RowMatrix::Zero(table.vectors.rows(), table.vectors.cols());
    g.weight = Eigen::MatrixXd::Zero(projector.weight.rows(), projector.weight.cols());
    g.bias = Eigen::VectorXd::Zero(projector.bias.size());
  }

  const double inv_b = 1.0 / static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ResolvedSample& s = samples[i];
    Eigen::VectorXd z = Eigen::VectorXd::Zero(table.dim());
    for (std::size_t r : s.rows) z += table.vectors.row(static_cast<Eigen::Index>(r)).transpose();
    z /= static_cast<double>(s.rows.size());
    const Eigen::VectorXd y_hat = projector.weight * z + projector.bias;
    const double n_hat = y_hat.norm();
    const double n_y = s.target.norm();
    if (!(n_hat > 0.0))
      fail(ErrorKind::kNumeric, "projected embedding of sample " + std::to_string(i) + " has zero norm");
    if (!(n_y > 0.0))
      fail(ErrorKind::kData, "target vector of sample " + std::to_string(i) + " has zero norm");
    const double cos = y_hat.dot(s.target) / (n_hat * n_y);
    const double hinge = 1.0 - cos;
    if (hinge <= 0.0) continue;
    g.loss.main += hinge * inv_b;
    if (!with_gradients) continue;
    const Eigen::VectorXd d_yhat =
        -inv_b * (s.target / (n_hat * n_y) - cos * y_hat / (n_hat * n_hat));
    g.weight.noalias() += d_yhat * z.transpose();
    g.bias += d_yhat;
    const Eigen::VectorXd dz = projector.weight.transpose() * d_yhat / static_cast<double>(s.rows.size());
    for (std::size_t r : s.rows) g.embeddings.row(static_cast<Eigen::Index>(r)) += dz.transpose();
  }

  const double inv_m = 1.0 / static_cast<double>(table.size());
  const RowMatrix drift = table.vectors - table.initial();
  g.loss.prior = drift.squaredNorm() * inv_m;
  if (with_gradients) g.embeddings += (2.0 * cfg.lambda_prior * inv_m) * drift;

  if (!edges.empty()) {
    const double inv_e = 1.0 / static_cast<double>(edges.size());
    for (const ResolvedEdge& e : edges) {
      const Eigen::RowVectorXd diff = table.vectors.row(static_cast<Eigen::Index>(e.a)) -
                                      table.vectors.row(static_cast<Eigen::Index>(e.b));
      g.loss.coh += e.pmi * diff.squaredNorm() * inv_e;
      if (with_gradients) {
        const Eigen::RowVectorXd d = (2.0 * cfg.lambda_coh * e.pmi * inv_e) * diff;
        g.embeddings.row(static_cast<Eigen::Index>(e.a)) += d;
        g.embeddings.row(static_cast<Eigen::Index>(e.b)) -= d;
      }
    }
  }
  g.loss.total = g.loss.main + cfg.lambda_prior * g.loss.prior + cfg.lambda_coh * g.loss.coh;
  return g;
}

void write_matrix(ByteWriter& w, const RowMatrix& m) {
  w.put_f64s({m.data(), static_cast<std::size_t>(m.size())});
}

}  // namespace

HashedSubwordEmbedder::HashedSubwordEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 1) fail(ErrorKind::kUsage, "subword embedding dimension must be positive");
}

Eigen::VectorXd HashedSubwordEmbedder::embed(std::string_view piece) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  const std::string marked = "^" + std::string(piece) + "$";
  for (std::size_t i = 0; i + 3 <= marked.size(); ++i) {
    const std::uint64_t h = fnv1a64(std::string_view(marked).substr(i, 3), seed_);
    v(static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_))) += (h >> 63) ? -1.0 : 1.0;
  }
  // Whole-piece feature keeps short pieces such as "<" distinguishable.
  const std::uint64_t h = fnv1a64(marked, seed_ ^ 0x9e37);
  v(static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_))) += (h >> 63) ? -1.0 : 1.0;
  const double n = v.norm();
  if (n > 0.0) v /= n;
  return v;
}

TableSubwordEmbedder::TableSubwordEmbedder(std::map<std::string, Eigen::VectorXd> table)
    : table_(std::move(table)) {
  if (table_.empty()) fail(ErrorKind::kData, "subword table is empty");
  dim_ = static_cast<int>(table_.begin()->second.size());
  for (const auto& [piece, v] : table_) {
    if (v.size() != dim_) fail(ErrorKind::kData, "subword table has mixed dimensions at '" + piece + "'");
  }
}

TableSubwordEmbedder TableSubwordEmbedder::load(const std::filesystem::path& path) {
  std::map<std::string, Eigen::VectorXd> table;
  for_each_jsonl(path, [&](std::size_t line, const Json& r) {
    const std::string at = path.string() + ":" + std::to_string(line) + ": ";
    if (!r.is_object() || !r.contains("piece") || !r["piece"].is_string() ||
        !r.contains("values") || !r["values"].is_array())
      fail(ErrorKind::kData, at + "expected {piece, values}");
    std::vector<double> values;
    for (const Json& x : r["values"]) {
      if (!x.is_number()) fail(ErrorKind::kData, at + "non-numeric value");
      values.push_back(x.get<double>());
    }
    if (!all_finite(values)) fail(ErrorKind::kData, at + "non-finite value");
    const auto piece = r["piece"].get<std::string>();
    if (!table.emplace(piece, Eigen::Map<Eigen::VectorXd>(values.data(),
                                                          static_cast<Eigen::Index>(values.size())))
             .second)
      fail(ErrorKind::kData, at + "duplicate piece '" + piece + "'");
  });
  return TableSubwordEmbedder(std::move(table));
}

Eigen::VectorXd TableSubwordEmbedder::embed(std::string_view piece) const {
  if (auto it = table_.find(std::string(piece)); it != table_.end()) return it->second;
  if (piece.empty()) fail(ErrorKind::kData, "cannot embed an empty piece");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_);
  for (char c : piece) {
    auto it = table_.find(std::string(1, c));
    if (it == table_.end())
      fail(ErrorKind::kData, "subword table has no entry for '" + std::string(1, c) +
                                 "' (needed by piece '" + std::string(piece) + "')");
    sum += it->second;
  }
  return sum / static_cast<double>(piece.size());
}

std::vector<std::string> split_token_pieces(std::string_view token) {
  std::vector<std::string> pieces;
  std::size_t i = 0;
  while (i < token.size()) {
    const auto c = static_cast<unsigned char>(token[i]);
    std::size_t j = i + 1;
    if (std::isalpha(c)) {
      while (j < token.size() && std::isalpha(static_cast<unsigned char>(token[j]))) ++j;
    } else if (std::isdigit(c)) {
      while (j < token.size() && std::isdigit(static_cast<unsigned char>(token[j]))) ++j;
    }
    pieces.emplace_back(token.substr(i, j - i));
    i = j;
  }
  return pieces;
}

std::vector<std::string> codeword_tokens(int n_layers, int codebook_size) {
  std::vector<std::string> out;
  for (int l = 0; l < n_layers; ++l)
    for (int k = 0; k < codebook_size; ++k) out.push_back(token_name(static_cast<std::size_t>(l), k));
  return out;
}

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, RowMatrix initial)
    : vectors(initial), tokens_(std::move(tokens)), initial_(std::move(initial)) {
  if (static_cast<Eigen::Index>(tokens_.size()) != initial_.rows())
    fail(ErrorKind::kData, "embedding table row count does not match token count");
  if (!initial_.allFinite()) fail(ErrorKind::kData, "non-finite initial embedding");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second)
      fail(ErrorKind::kData, "duplicate token '" + tokens_[i] + "' in embedding table");
  }
}

std::optional<std::size_t> EmbeddingTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EmbeddingTable init_token_embeddings(const std::vector<std::string>& tokens,
                                     const SubwordEmbedder& embedder) {
  if (tokens.empty()) fail(ErrorKind::kData, "no tokens to initialize");
  RowMatrix init(static_cast<Eigen::Index>(tokens.size()), embedder.dim());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto pieces = split_token_pieces(tokens[i]);
    if (pieces.empty()) fail(ErrorKind::kData, "empty token at position " + std::to_string(i));
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(embedder.dim());
    for (const auto& p : pieces) {
      Eigen::VectorXd e = embedder.embed(p);
      if (e.size() != embedder.dim()) fail(ErrorKind::kData, "subword embedding has wrong dimension");
      sum += e;
    }
    init.row(static_cast<Eigen::Index>(i)) = (sum / static_cast<double>(pieces.size())).transpose();
  }
  return EmbeddingTable(tokens, std::move(init));
}

std::int64_t CooccurrenceModel::pair_count(const std::string& t, const std::string& u) const {
  auto key = t < u ? std::make_pair(t, u) : std::make_pair(u, t);
  auto it = pair_counts.find(key);
  return it == pair_counts.end() ? 0 : it->second;
}

double CooccurrenceModel::pmi(const std::string& t, const std::string& u) const {
  const std::int64_t joint = pair_count(t, u);
  if (joint == 0 || total_windows == 0) return pmi_floor;
  const double n = static_cast<double>(total_windows);
  const double pt = static_cast<double>(token_counts.at(t)) / n;
  const double pu = static_cast<double>(token_counts.at(u)) / n;
  const double raw = std::log((static_cast<double>(joint) / n) / (pt * pu));
  return std::max(raw, pmi_floor);
}

std::vector<PmiEdge> CooccurrenceModel::edges() const {
  std::vector<PmiEdge> out;
  if (pmi_floor > 0.0) {
    for (auto a = token_counts.begin(); a != token_counts.end(); ++a)
      for (auto b = std::next(a); b != token_counts.end(); ++b)
        out.push_back({a->first, b->first, pmi(a->first, b->first)});
    return out;
  }
  for (const auto& [key, count] : pair_counts) {
    const double w = pmi(key.first, key.second);
    if (w > 0.0) out.push_back({key.first, key.second, w});
  }
  return out;
}

CooccurrenceModel cooccurrence_from_windows(const std::vector<std::set<std::string>>& windows,
                                            double pmi_floor) {
  if (windows.empty()) fail(ErrorKind::kData, "no co-occurrence windows");
  CooccurrenceModel m;
  m.pmi_floor = pmi_floor;
  m.total_windows = static_cast<std::int64_t>(windows.size());
  for (const auto& w : windows) {
    for (auto a = w.begin(); a != w.end(); ++a) {
      ++m.token_counts[*a];
      for (auto b = std::next(a); b != w.end(); ++b) ++m.pair_counts[{*a, *b}];
    }
  }
  return m;
}

CooccurrenceModel build_pmi(const std::vector<GridLocation>& locations, int radius,
                            double pmi_floor) {
  if (locations.empty()) fail(ErrorKind::kData, "cannot build co-occurrence from zero locations");
  if (radius < 0) fail(ErrorKind::kUsage, "neighborhood radius must be non-negative");
  std::map<std::pair<int, int>, std::set<std::string>> by_cell;
  for (const auto& loc : locations) {
    auto& bucket = by_cell[{loc.row, loc.col}];
    for (std::size_t l = 0; l < loc.tokens.indices.size(); ++l)
      bucket.insert(token_name(l, loc.tokens.indices[l]));
  }
  std::vector<std::set<std::string>> windows;
  for (const auto& [cell, unused] : by_cell) {
    std::set<std::string> w;
    for (int dr = -radius; dr <= radius; ++dr) {
      for (int dc = -radius; dc <= radius; ++dc) {
        auto it = by_cell.find({cell.first + dr, cell.second + dc});
        if (it != by_cell.end()) w.insert(it->second.begin(), it->second.end());
      }
    }
    windows.push_back(std::move(w));
  }
  return cooccurrence_from_windows(windows, pmi_floor);
}

void AlignConfig::validate() const {
  if (!(lambda_prior >= 0.0) || !(lambda_coh >= 0.0))
    fail(ErrorKind::kUsage, "alignment loss weights must be non-negative");
  if (!(learning_rate > 0.0)) fail(ErrorKind::kUsage, "alignment learning rate must be positive");
  if (epochs < 0) fail(ErrorKind::kUsage, "alignment epochs must be non-negative");
  if (neighborhood_radius_cells < 0) fail(ErrorKind::kUsage, "neighborhood radius must be non-negative");
}

Projector make_projector(int embedding_dim, int target_dim, std::uint64_t seed) {
  Rng rng(seed);
  Mlp net({embedding_dim, target_dim}, rng);
  return {net.layers()[0].weight, Eigen::VectorXd::Zero(target_dim)};
}

AlignLoss align_loss(const EmbeddingTable& table, const std::vector<AlignSample>& batch,
                     const Projector& projector, const CooccurrenceModel& pmi,
                     const AlignConfig& cfg) {
  return evaluate(table, batch, projector, pmi, cfg, false).loss;
}

AlignGradients align_gradients(const EmbeddingTable& table, const std::vector<AlignSample>& batch,
                               const Projector& projector, const CooccurrenceModel& pmi,
                               const AlignConfig& cfg) {
  return evaluate(table, batch, projector, pmi, cfg, true);
}

AlignResult optimize_embeddings(const EmbeddingTable& table, const std::vector<AlignSample>& dataset,
                                const CooccurrenceModel& pmi, const AlignConfig& cfg,
                                std::optional<Projector> projector) {
  cfg.validate();
  if (dataset.empty()) fail(ErrorKind::kData, "alignment dataset is empty");
  AlignResult result{table, projector ? *projector
                                      : make_projector(table.dim(),
                                                       static_cast<int>(dataset.front().target.size()),
                                                       cfg.seed),
                     {}, {}, {}};
  EmbeddingTable work = table;
  Projector proj = result.projector;
  AdamW adam({static_cast<std::size_t>(work.vectors.size()), static_cast<std::size_t>(proj.weight.size()),
              static_cast<std::size_t>(proj.bias.size())},
             {.learning_rate = cfg.learning_rate, .weight_decay = 0.0});

  double best = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
    AlignGradients g = align_gradients(work, dataset, proj, pmi, cfg);
    if (!std::isfinite(g.loss.total))
      fail(ErrorKind::kNumeric, "alignment loss became non-finite at step " + std::to_string(epoch));
    if (epoch == 0) result.initial = g.loss;
    if (g.loss.total < best) {
      best = g.loss.total;
      result.table.vectors = work.vectors;
      result.projector = proj;
      result.final = g.loss;
    }
    if (epoch == cfg.epochs) break;
    result.history.push_back(g.loss);
    const std::span<double> params[] = {
        {work.vectors.data(), static_cast<std::size_t>(work.vectors.size())},
        {proj.weight.data(), static_cast<std::size_t>(proj.weight.size())},
        {proj.bias.data(), static_cast<std::size_t>(proj.bias.size())}};
    const std::span<const double> grads[] = {
        {g.embeddings.data(), static_cast<std::size_t>(g.embeddings.size())},
        {g.weight.data(), static_cast<std::size_t>(g.weight.size())},
        {g.bias.data(), static_cast<std::size_t>(g.bias.size())}};
    adam.step(params, grads);
  }
  return result;
}

std::string serialize_embeddings(const EmbeddingTable& table, const Projector* projector) {
  ByteWriter w;
  w.put_raw(std::string_view(kEmbeddingMagic, 4));
  w.put_u32(kEmbeddingTableFormatVersion);
  w.put_u64(table.size());
  w.put_u32(static_cast<std::uint32_t>(table.dim()));
  for (const auto& t : table.tokens()) w.put_string(t);
  write_matrix(w, table.vectors);
  write_matrix(w, table.initial());
  w.put_u32(projector ? 1 : 0);
  if (projector) {
    w.put_u32(static_cast<std::uint32_t>(projector->weight.rows()));
    w.put_u32(static_cast<std::uint32_t>(projector->weight.cols()));
    for (Eigen::Index r = 0; r < projector->weight.rows(); ++r)
      for (Eigen::Index c = 0; c < projector->weight.cols(); ++c) w.put_f64(projector->weight(r, c));
    w.put_f64s({projector->bias.data(), static_cast<std::size_t>(projector->bias.size())});
  }
  return w.bytes();
}

std::pair<EmbeddingTable, std::optional<Projector>> deserialize_embeddings(std::string_view bytes) {
  ByteReader r(bytes, "embedding table artifact");
  if (r.raw(4) != std::string_view(kEmbeddingMagic, 4))
    fail(ErrorKind::kData, "not an embedding table artifact (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kEmbeddingTableFormatVersion)
    fail(ErrorKind::kData, "unsupported embedding table version " + std::to_string(version));
  const std::uint64_t n = r.u64();
  const std::uint32_t dim = r.u32();
  if (n > (1u << 24) || dim > (1u << 20)) fail(ErrorKind::kData, "implausible embedding table shape");
  std::vector<std::string> tokens;
  for (std::uint64_t i = 0; i < n; ++i) tokens.push_back(r.string());
  RowMatrix vectors(static_cast<Eigen::Index>(n), dim);
  RowMatrix initial(static_cast<Eigen::Index>(n), dim);
  r.f64s({vectors.data(), static_cast<std::size_t>(vectors.size())});
  r.f64s({initial.data(), static_cast<std::size_t>(initial.size())});
  EmbeddingTable table(std::move(tokens), std::move(initial));
  table.vectors = std::move(vectors);
  std::optional<Projector> projector;
  if (r.u32() == 1) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    Projector p{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index a = 0; a < p.weight.rows(); ++a)
      for (Eigen::Index b = 0; b < p.weight.cols(); ++b) p.weight(a, b) = r.f64();
    r.f64s({p.bias.data(), static_cast<std::size_t>(p.bias.size())});
    projector = std::move(p);
  }
  r.expect_end();
  return {std::move(table), std::move(projector)};
}

std::string instruction_record_to_line(const InstructionRecord& r) {
  OrderedJson j;
  j["instruction"] = r.instruction;
  j["input"] = r.input;
  j["output"] = r.output;
  if (r.sequence_embedding) j["sequence_embedding"] = *r.sequence_embedding;
  return j.dump();
}

InstructionRecord instruction_record_from_line(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::kData, std::string("malformed instruction record: ") + e.what());
  }
  for (const char* key : {"instruction", "input", "output"}) {
    if (!j.contains(key) || !j[key].is_string())
      fail(ErrorKind::kData, std::string("instruction record lacks string field '") + key + "'");
  }
  InstructionRecord r{j["instruction"].get<std::string>(), j["input"].get<std::string>(),
                      j["output"].get<std::string>(), std::nullopt};
  if (j.contains("sequence_embedding")) r.sequence_embedding = j["sequence_embedding"].get<std::vector<double>>();
  return r;
}

std::string loc2id_prompt(std::string_view profile_text) {
  return "Your task is to infer the corresponding Location index based on the geographic "
         "location information: " +
         std::string(profile_text) + "\n Its Location index is :";
}

std::string id2loc_prompt(std::string_view rendered_tokens) {
  return "Your goal is to learn and remember the geographic location information represented "
         "by the Location index.\n The geographic information of Location index " +
         std::string(rendered_tokens) + " is :";
}

std::vector<InstructionRecord> export_bidirectional_pairs(
    const std::vector<TokenizedLocation>& locations,
    const std::map<std::string, LocationProfile>& profiles) {
  std::vector<const TokenizedLocation*> sorted;
  for (const auto& l : locations) sorted.push_back(&l);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->location_id < b->location_id; });
  std::vector<InstructionRecord> out;
  for (const TokenizedLocation* loc : sorted) {
    auto it = profiles.find(loc->location_id);
    if (it == profiles.end())
      fail(ErrorKind::kData, "location " + loc->location_id + " has tokens but no profile");
    if (loc->tokens.indices.empty())
      fail(ErrorKind::kData, "location " + loc->location_id + " has no tokens");
    const std::string text = render_profile_text(it->second);
    const std::string ids = loc->tokens.render();
    out.push_back({loc2id_prompt(text), "", ids, std::nullopt});
    out.push_back({id2loc_prompt(ids), "", text, std::nullopt});
  }
  return out;
}

}  // namespace movetok
