#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "tsqrf/forest.hpp"

namespace tsqrf {

/// Sparse nonnegative weights over training rows, sorted by row.
struct WeightVector {
  struct Entry {
    std::uint32_t row;
    double weight;
  };
  std::vector<Entry> entries;
  double total = 0.0;

  double at(std::uint32_t row) const;
  double max_weight() const;
};

/// Raised when no tree puts any I-row in the query's leaf.
class UncoveredQuery : public std::runtime_error {
 public:
  UncoveredQuery() : std::runtime_error("no tree covered the query point") {}
};

/// 1/(leaf I-count) on each I-row of the leaf holding x; empty if the leaf
/// holds none.
WeightVector tree_weights(const Tree& tree, std::span<const double> x);

/// Mean of tree_weights over all trees of the forest.
WeightVector forest_weights(const Forest& forest, std::span<const double> x);

/// inf{ y : sum_t w_t (tau - 1{y_t <= y}) <= 0 }, found as the smallest
/// supported response whose cumulative weight (ties pooled) reaches
/// tau * total. Throws UncoveredQuery when total is zero.
double weighted_quantile(const WeightVector& weights, std::span<const double> responses, double tau);

/// Same inversion for several levels, sorting the support once.
std::vector<double> weighted_quantiles(const WeightVector& weights, std::span<const double> responses,
                                       std::span<const double> taus);

/// Row-major estimates; rows that no tree covered are NaN with covered = 0.
struct QuantileMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> covered;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

/// Quantile estimates for each query row and level. Weights are computed once
/// per query; queries are spread over `threads` workers.
QuantileMatrix predict_quantiles(const Forest& forest, const LagDataset& queries,
                                 std::span<const double> taus, std::size_t threads = 1);

struct ScoreDiagnostic {
  double score = 0.0;  // sum_t w_t (tau - 1{y_t <= q_hat})
  double bound = 0.0;  // max_t w_t
};

ScoreDiagnostic score_diagnostic(const WeightVector& weights, std::span<const double> responses,
                                 double q_hat, double tau);
ScoreDiagnostic score_diagnostic(const Forest& forest, std::span<const double> x, double q_hat, double tau);

/// Builds the tree for one double sample (used by the exhaustive average).
using TreeBuilder = std::function<Tree(const DoubleSample&)>;

/// Weights averaged over every element of A_s for tiny N (<= 12); the
/// reference that forest_weights approximates with B sampled trees.
WeightVector exhaustive_forest_weights(const LagDataset& data, std::size_t s, const TreeBuilder& build,
                                       std::span<const double> x);

}  // namespace tsqrf
