#include "tsqrf/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsqrf/parallel.hpp"

namespace tsqrf {
namespace {

/// Accumulates dense per-row weights and compresses them in row order.
class DenseAccumulator {
 public:
  explicit DenseAccumulator(std::size_t n) : weights_(n, 0.0), touched_(n, 0) {}

  void add(std::uint32_t row, double w) {
    if (!touched_[row]) {
      touched_[row] = 1;
      rows_.push_back(row);
    }
    weights_[row] += w;
  }

  WeightVector finish(double scale) {
    std::sort(rows_.begin(), rows_.end());
    WeightVector out;
    out.entries.reserve(rows_.size());
    for (auto r : rows_) {
      out.entries.push_back({r, weights_[r] * scale});
      weights_[r] = 0.0;
      touched_[r] = 0;
    }
    rows_.clear();
    for (const auto& e : out.entries) out.total += e.weight;
    return out;
  }

 private:
  std::vector<double> weights_;
  std::vector<std::uint8_t> touched_;
  std::vector<std::uint32_t> rows_;
};

struct SupportPoint {
  double y;
  double weight;
};

std::vector<SupportPoint> sorted_support(const WeightVector& weights, std::span<const double> responses) {
  std::vector<SupportPoint> support;
  support.reserve(weights.entries.size());
  for (const auto& e : weights.entries) {
    if (e.weight > 0.0) support.push_back({responses[e.row], e.weight});
  }
  std::sort(support.begin(), support.end(),
            [](const SupportPoint& a, const SupportPoint& b) { return a.y < b.y; });
  return support;
}

double invert(const std::vector<SupportPoint>& support, double total, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1)");
  if (!(total > 0.0) || support.empty()) throw UncoveredQuery();
  const double target = tau * total;
  double cumulative = 0.0;
  std::size_t i = 0;
  while (i < support.size()) {
    const double y = support[i].y;
    // pool tied responses before comparing
    while (i < support.size() && support[i].y == y) cumulative += support[i++].weight;
    if (cumulative >= target) return y;
  }
  // cumulative == total up to rounding
  return support.back().y;
}

}  // namespace

double WeightVector::at(std::uint32_t row) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), row,
                             [](const Entry& e, std::uint32_t r) { return e.row < r; });
  return it != entries.end() && it->row == row ? it->weight : 0.0;
}

double WeightVector::max_weight() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.weight);
  return m;
}

WeightVector tree_weights(const Tree& tree, std::span<const double> x) {
  const TreeNode& leaf = tree.node(tree.leaf_of(x));
  WeightVector out;
  if (leaf.samples.empty()) return out;
  const double w = 1.0 / static_cast<double>(leaf.samples.size());
  out.entries.reserve(leaf.samples.size());
  for (auto r : leaf.samples) out.entries.push_back({r, w});
  out.total = w * static_cast<double>(leaf.samples.size());
  return out;
}

WeightVector forest_weights(const Forest& forest, std::span<const double> x) {
  if (x.size() != forest.lag_order()) {
    throw std::invalid_argument("query has " + std::to_string(x.size()) + " components, forest expects " +
                                std::to_string(forest.lag_order()));
  }
  DenseAccumulator acc(forest.data().size());
  for (const Tree& tree : forest.trees()) {
    const TreeNode& leaf = tree.node(tree.leaf_of(x));
    if (leaf.samples.empty()) continue;
    const double w = 1.0 / static_cast<double>(leaf.samples.size());
    for (auto r : leaf.samples) acc.add(r, w);
  }
  return acc.finish(1.0 / static_cast<double>(forest.size()));
}

double weighted_quantile(const WeightVector& weights, std::span<const double> responses, double tau) {
  return invert(sorted_support(weights, responses), weights.total, tau);
}

std::vector<double> weighted_quantiles(const WeightVector& weights, std::span<const double> responses,
                                       std::span<const double> taus) {
  const auto support = sorted_support(weights, responses);
  std::vector<double> out;
  out.reserve(taus.size());
  for (double tau : taus) out.push_back(invert(support, weights.total, tau));
  return out;
}

QuantileMatrix predict_quantiles(const Forest& forest, const LagDataset& queries, std::span<const double> taus,
                                 std::size_t threads) {
  if (queries.lag_order() != forest.lag_order()) {
    throw std::invalid_argument("queries have " + std::to_string(queries.lag_order()) +
                                " lags, forest expects " + std::to_string(forest.lag_order()));
  }
  for (double tau : taus) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1)");
  }
  QuantileMatrix out;
  out.rows = queries.size();
  out.cols = taus.size();
  out.values.assign(out.rows * out.cols, std::numeric_limits<double>::quiet_NaN());
  out.covered.assign(out.rows, 0);
  const auto& responses = forest.data().responses();
  parallel_for(out.rows, threads, [&](std::size_t r) {
    const WeightVector w = forest_weights(forest, queries.x(r));
    if (!(w.total > 0.0)) return;
    const auto q = weighted_quantiles(w, responses, taus);
    std::copy(q.begin(), q.end(), out.values.begin() + static_cast<std::ptrdiff_t>(r * out.cols));
    out.covered[r] = 1;
  });
  return out;
}

ScoreDiagnostic score_diagnostic(const WeightVector& weights, std::span<const double> responses, double q_hat,
                                 double tau) {
  ScoreDiagnostic d;
  for (const auto& e : weights.entries) {
    d.score += e.weight * (tau - (responses[e.row] <= q_hat ? 1.0 : 0.0));
    d.bound = std::max(d.bound, e.weight);
  }
  return d;
}

ScoreDiagnostic score_diagnostic(const Forest& forest, std::span<const double> x, double q_hat, double tau) {
  return score_diagnostic(forest_weights(forest, x), forest.data().responses(), q_hat, tau);
}

WeightVector exhaustive_forest_weights(const LagDataset& data, std::size_t s, const TreeBuilder& build,
                                       std::span<const double> x) {
  const auto all = enumerate_double_samples(data.size(), s);
  DenseAccumulator acc(data.size());
  for (const DoubleSample& ds : all) {
    const Tree tree = build(ds);
    const TreeNode& leaf = tree.node(tree.leaf_of(x));
    if (leaf.samples.empty()) continue;
    const double w = 1.0 / static_cast<double>(leaf.samples.size());
    for (auto r : leaf.samples) acc.add(r, w);
  }
  return acc.finish(1.0 / static_cast<double>(all.size()));
}

}  // namespace tsqrf
