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

#include "eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

namespace movetok {
namespace {

void check_probs(std::span<const double> p, const char* what) {
  double sum = 0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0)
      fail(ErrorKind::kData, std::string(what) + " has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    fail(ErrorKind::kData, std::string(what) + " does not sum to 1 (sum " + format_double(sum) + ")");
}

void check_pair(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty())
    fail(ErrorKind::kData, "distributions must share a non-empty support");
  check_probs(p, "P");
  check_probs(q, "Q");
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const TokenSeq& s, int n) {
  NgramCounts out;
  const std::size_t len = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + len <= s.size(); ++i)
    ++out[std::vector<std::string>(s.begin() + static_cast<std::ptrdiff_t>(i),
                                   s.begin() + static_cast<std::ptrdiff_t>(i + len))];
  return out;
}

struct OrderStats {
  std::size_t matched = 0;    // clipped
  std::size_t candidate = 0;  // candidate n-gram total
  std::size_t reference = 0;  // reference n-gram total
};

OrderStats order_stats(const TokenSeq& cand, const TokenSeq& ref, int n) {
  OrderStats st;
  const NgramCounts c = ngrams(cand, n);
  const NgramCounts r = ngrams(ref, n);
  for (const auto& [g, k] : c) {
    st.candidate += k;
    if (auto it = r.find(g); it != r.end()) st.matched += std::min(k, it->second);
  }
  for (const auto& [g, k] : r) st.reference += k;
  return st;
}

double combine(const std::vector<OrderStats>& orders, std::size_t cand_len, std::size_t ref_len,
               const BleuOptions& o) {
  double log_sum = 0;
  const double w = 1.0 / static_cast<double>(o.max_n);
  for (const OrderStats& st : orders) {
    if (st.candidate == 0 && st.reference == 0) continue;  // log 1
    double p;
    if (st.matched > 0) {
      p = static_cast<double>(st.matched) / static_cast<double>(st.candidate);
    } else if (o.smoothing == BleuSmoothing::kEpsilon) {
      p = o.epsilon / static_cast<double>(std::max<std::size_t>(st.candidate, 1));
    } else {
      return 0.0;
    }
    log_sum += w * std::log(p);
  }
  const double c = static_cast<double>(cand_len);
  const double r = static_cast<double>(ref_len);
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum);
}

void check_bleu_options(const BleuOptions& o) {
  if (o.max_n < 1) fail(ErrorKind::kUsage, "BLEU max_n must be at least 1");
  if (o.smoothing == BleuSmoothing::kEpsilon && !(o.epsilon > 0))
    fail(ErrorKind::kUsage, "BLEU epsilon must be positive");
}

TokenSeq slot_sequence(const Trajectory& t) {
  TokenSeq s;
  for (const auto& p : t.points) s.push_back(slot_label(p.slot));
  return s;
}

TokenSeq location_sequence(const Trajectory& t) {
  TokenSeq s;
  for (const auto& p : t.points) s.push_back(location_label(p));
  return s;
}

Distribution normalized(const std::map<std::string, double>& counts) {
  return Distribution::from_counts(counts);
}

std::pair<double, double> distances(const std::map<std::string, double>& a,
                                    const std::map<std::string, double>& b) {
  const Distribution p = normalized(a);
  const Distribution q = normalized(b);
  return {tvd(p, q), jsd(p, q)};
}

}  // namespace

Distribution Distribution::from_counts(const std::map<std::string, double>& counts) {
  double total = 0;
  for (const auto& [label, c] : counts) {
    if (!std::isfinite(c) || c < 0) fail(ErrorKind::kData, "negative or non-finite count for " + label);
    total += c;
  }
  if (!(total > 0)) fail(ErrorKind::kData, "distribution has no mass");
  Distribution d;
  for (const auto& [label, c] : counts) {
    d.labels.push_back(label);
    d.probs.push_back(c / total);
  }
  return d;
}

void Distribution::validate() const {
  if (labels.size() != probs.size()) fail(ErrorKind::kData, "label and probability counts differ");
  if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size())
    fail(ErrorKind::kData, "duplicate distribution label");
  check_probs(probs, "distribution");
}

AlignedDistributions align_supports(const Distribution& p, const Distribution& q) {
  p.validate();
  q.validate();
  std::map<std::string, std::pair<double, double>> merged;
  for (std::size_t i = 0; i < p.labels.size(); ++i) merged[p.labels[i]].first = p.probs[i];
  for (std::size_t i = 0; i < q.labels.size(); ++i) merged[q.labels[i]].second = q.probs[i];
  AlignedDistributions out;
  for (const auto& [label, pq] : merged) {
    out.labels.push_back(label);
    out.p.push_back(pq.first);
    out.q.push_back(pq.second);
  }
  return out;
}

double tvd(std::span<const double> p, std::span<const double> q) {
  check_pair(p, q);
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

double kl_divergence(std::span<const double> p, std::span<const double> q, double log_base) {
  check_pair(p, q);
  if (!(log_base > 0) || log_base == 1.0) fail(ErrorKind::kUsage, "invalid logarithm base");
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0) continue;
    if (q[i] == 0) return std::numeric_limits<double>::infinity();
    s += p[i] * std::log(p[i] / q[i]);
  }
  return s / std::log(log_base);
}

double jsd(std::span<const double> p, std::span<const double> q, double log_base) {
  check_pair(p, q);
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  const double d = 0.5 * kl_divergence(p, m, log_base) + 0.5 * kl_divergence(q, m, log_base);
  return std::sqrt(std::max(0.0, d));
}

double tvd(const Distribution& p, const Distribution& q) {
  const AlignedDistributions a = align_supports(p, q);
  return tvd(a.p, a.q);
}

double jsd(const Distribution& p, const Distribution& q, double log_base) {
  const AlignedDistributions a = align_supports(p, q);
  return jsd(a.p, a.q, log_base);
}

double hit_rate_at_k(const std::vector<std::vector<std::string>>& rankings,
                     const std::vector<std::string>& truths, int k) {
  if (k < 1) fail(ErrorKind::kUsage, "k must be at least 1");
  if (rankings.empty()) fail(ErrorKind::kData, "hit rate needs at least one sample");
  if (rankings.size() != truths.size()) fail(ErrorKind::kData, "rankings and truths differ in count");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto& r = rankings[i];
    if (r.empty()) fail(ErrorKind::kData, "empty ranking for sample " + std::to_string(i));
    const std::size_t top = std::min(r.size(), static_cast<std::size_t>(k));
    if (std::find(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(top), truths[i]) !=
        r.begin() + static_cast<std::ptrdiff_t>(top))
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double bleu(const TokenSeq& candidate, const TokenSeq& reference, const BleuOptions& options) {
  check_bleu_options(options);
  if (candidate.empty()) fail(ErrorKind::kData, "BLEU candidate is empty");
  if (reference.empty()) fail(ErrorKind::kData, "BLEU reference is empty");
  std::vector<OrderStats> orders;
  for (int n = 1; n <= options.max_n; ++n) orders.push_back(order_stats(candidate, reference, n));
  return combine(orders, candidate.size(), reference.size(), options);
}

double corpus_bleu(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references,
                   const BleuOptions& options) {
  check_bleu_options(options);
  if (candidates.empty()) fail(ErrorKind::kData, "corpus BLEU needs at least one pair");
  if (candidates.size() != references.size())
    fail(ErrorKind::kData, "candidate and reference counts differ");
  std::vector<OrderStats> orders(static_cast<std::size_t>(options.max_n));
  std::size_t c = 0;
  std::size_t r = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].empty()) fail(ErrorKind::kData, "BLEU candidate is empty");
    if (references[i].empty()) fail(ErrorKind::kData, "BLEU reference is empty");
    c += candidates[i].size();
    r += references[i].size();
    for (int n = 1; n <= options.max_n; ++n) {
      const OrderStats st = order_stats(candidates[i], references[i], n);
      OrderStats& acc = orders[static_cast<std::size_t>(n - 1)];
      acc.matched += st.matched;
      acc.candidate += st.candidate;
      acc.reference += st.reference;
    }
  }
  return combine(orders, c, r, options);
}

std::string location_label(const TrajPoint& p) {
  if (p.tokens) return p.tokens->render();
  return "cell_" + std::to_string(p.cell.row) + "_" + std::to_string(p.cell.col);
}

std::string slot_label(int slot) { return "slot_" + std::to_string(slot); }

EvalReport evaluate_generation(const std::vector<Trajectory>& generated,
                               const std::vector<Trajectory>& truth, const EvalOptions& options) {
  using Key = std::pair<std::string, std::int64_t>;
  auto key_of = [](const Trajectory& t) { return Key{t.user_id, t.window_start_day}; };
  auto describe = [](const Key& k) { return k.first + "@" + std::to_string(k.second); };

  std::map<Key, const Trajectory*> gen_by_key;
  for (const auto& t : generated) {
    if (!gen_by_key.emplace(key_of(t), &t).second)
      fail(ErrorKind::kData, "duplicate generated window " + describe(key_of(t)));
  }
  std::map<Key, const Trajectory*> truth_by_key;
  for (const auto& t : truth) {
    if (!truth_by_key.emplace(key_of(t), &t).second)
      fail(ErrorKind::kData, "duplicate ground-truth window " + describe(key_of(t)));
  }
  if (truth_by_key.empty()) fail(ErrorKind::kData, "evaluation cohort is empty");
  for (const auto& [k, t] : gen_by_key)
    if (!truth_by_key.count(k)) fail(ErrorKind::kData, "no ground truth for " + describe(k));

  EvalReport rep;
  std::vector<TokenSeq> gen_slots, truth_slots, gen_locs, truth_locs;
  std::map<std::string, double> time_g, time_t, loc_g, loc_t;
  ChannelMetrics time_avg, loc_avg;
  for (const auto& [k, t] : truth_by_key) {
    auto it = gen_by_key.find(k);
    if (it == gen_by_key.end()) fail(ErrorKind::kData, "no generated trajectory for " + describe(k));
    const Trajectory& g = *it->second;
    if (g.points.empty() || t->points.empty())
      fail(ErrorKind::kData, "empty trajectory in pair " + describe(k));
    gen_slots.push_back(slot_sequence(g));
    truth_slots.push_back(slot_sequence(*t));
    gen_locs.push_back(location_sequence(g));
    truth_locs.push_back(location_sequence(*t));
    rep.generated_points += g.points.size();
    rep.truth_points += t->points.size();

    std::map<std::string, double> tg, tt, lg, lt;
    for (const auto& p : g.points) {
      rep.plot.time_generated[static_cast<std::size_t>(p.slot)] += 1;
      tg[slot_label(p.slot)] += 1;
      lg[location_label(p)] += 1;
    }
    for (const auto& p : t->points) {
      rep.plot.time_truth[static_cast<std::size_t>(p.slot)] += 1;
      tt[slot_label(p.slot)] += 1;
      lt[location_label(p)] += 1;
    }
    for (const auto& [l, c] : tg) time_g[l] += c;
    for (const auto& [l, c] : tt) time_t[l] += c;
    for (const auto& [l, c] : lg) loc_g[l] += c;
    for (const auto& [l, c] : lt) loc_t[l] += c;
    if (options.per_user) {
      const auto [t_tvd, t_jsd] = distances(tg, tt);
      const auto [l_tvd, l_jsd] = distances(lg, lt);
      time_avg.tvd += t_tvd;
      time_avg.jsd += t_jsd;
      loc_avg.tvd += l_tvd;
      loc_avg.jsd += l_jsd;
    }
    ++rep.pairs;
  }

  const double n = static_cast<double>(rep.pairs);
  if (options.per_user) {
    rep.time.tvd = time_avg.tvd / n;
    rep.time.jsd = time_avg.jsd / n;
    rep.location.tvd = loc_avg.tvd / n;
    rep.location.jsd = loc_avg.jsd / n;
  } else {
    std::tie(rep.time.tvd, rep.time.jsd) = distances(time_g, time_t);
    std::tie(rep.location.tvd, rep.location.jsd) = distances(loc_g, loc_t);
  }
  if (options.corpus_bleu) {
    rep.time.bleu = corpus_bleu(gen_slots, truth_slots, options.bleu);
    rep.location.bleu = corpus_bleu(gen_locs, truth_locs, options.bleu);
  } else {
    for (std::size_t i = 0; i < gen_slots.size(); ++i) {
      rep.time.bleu += bleu(gen_slots[i], truth_slots[i], options.bleu);
      rep.location.bleu += bleu(gen_locs[i], truth_locs[i], options.bleu);
    }
    rep.time.bleu /= n;
    rep.location.bleu /= n;
  }

  std::set<std::string> labels;
  for (const auto& [l, c] : loc_g) labels.insert(l);
  for (const auto& [l, c] : loc_t) labels.insert(l);
  for (const auto& l : labels) {
    rep.plot.location_labels.push_back(l);
    rep.plot.location_generated.push_back(loc_g.count(l) ? loc_g[l] : 0.0);
    rep.plot.location_truth.push_back(loc_t.count(l) ? loc_t[l] : 0.0);
  }
  return rep;
}

OrderedJson report_to_json(const EvalReport& r) {
  auto channel = [](const ChannelMetrics& c) {
    OrderedJson j;
    j["bleu"] = c.bleu;
    j["tvd"] = c.tvd;
    j["jsd"] = c.jsd;
    return j;
  };
  OrderedJson j;
  j["time"] = channel(r.time);
  j["location"] = channel(r.location);
  j["pairs"] = r.pairs;
  j["generated_points"] = r.generated_points;
  j["truth_points"] = r.truth_points;
  return j;
}

OrderedJson plot_data_to_json(const EvalPlotData& d) {
  OrderedJson j;
  j["time_buckets"] = kSlotsPerDay;
  j["time_generated"] = d.time_generated;
  j["time_truth"] = d.time_truth;
  j["location_labels"] = d.location_labels;
  j["location_generated"] = d.location_generated;
  j["location_truth"] = d.location_truth;
  return j;
}

}  // namespace movetok
