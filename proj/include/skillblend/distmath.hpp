#pragma once

// Probability-vector arithmetic over the skill roster. All logs are natural.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "skillblend/core.hpp"

namespace skillblend {

namespace detail {
inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::invalid_input, std::string(what) + ": non-finite entry");
  }
}
}  // namespace detail

inline SkillDistribution softmax(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::invalid_input, "softmax: empty input");
  detail::require_finite(scores, "softmax");
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - peak);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return SkillDistribution{std::move(out)};
}

// sum_i p_i * ln((p_i + eps) / (q_i + eps)), terms with p_i == 0 contribute 0.
// Negative round-off is clamped to 0. With eps == 0 and q_i == 0 < p_i the
// result is +inf.
inline double kl_divergence(const SkillDistribution& p, const SkillDistribution& q, double epsilon) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::invalid_input, "kl_divergence: length mismatch (" + std::to_string(p.size()) +
                                              " vs " + std::to_string(q.size()) + ")");
  }
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::invalid_input, "kl_divergence: epsilon must be >= 0");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.probs[i];
    if (pi == 0.0) continue;
    sum += pi * std::log((pi + epsilon) / (q.probs[i] + epsilon));
  }
  return sum < 0.0 ? 0.0 : sum;
}

inline double entropy(const SkillDistribution& p) {
  double h = 0.0;
  for (double pi : p.probs) {
    if (pi > 0.0) h -= pi * std::log(pi);
  }
  return h < 0.0 ? 0.0 : h;
}

// Index of the first maximal entry.
inline std::size_t stable_argmax(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::invalid_input, "stable_argmax: empty input");
  detail::require_finite(v, "stable_argmax");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

struct Histogram {
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
  std::size_t out_of_range = 0;

  std::size_t total() const {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

// Bins are [e_i, e_{i+1}) except the last, which is closed on the right.
inline Histogram histogram(std::span<const double> values, std::span<const double> edges) {
  if (edges.size() < 2) throw Error(ErrorCode::invalid_input, "histogram: need at least 2 edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw Error(ErrorCode::invalid_input, "histogram: edges not strictly ascending");
  }
  Histogram h{std::vector<double>(edges.begin(), edges.end()), std::vector<std::size_t>(edges.size() - 1, 0), 0};
  for (double v : values) {
    if (!(v >= edges.front()) || v > edges.back()) {
      ++h.out_of_range;
      continue;
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
    if (bin >= h.counts.size()) bin = h.counts.size() - 1;
    ++h.counts[bin];
  }
  return h;
}

// `bins` equal-width bins spanning [lo, hi].
inline std::vector<double> linear_edges(double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw Error(ErrorCode::invalid_input, "linear_edges: bad range");
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  edges.back() = hi;
  return edges;
}

}  // namespace skillblend
