#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tsqrf/estimator.hpp"
#include "tsqrf/forest.hpp"
#include "tsqrf/series.hpp"
#include "tsqrf/synth.hpp"

namespace tsqrf::testing {

/// inf{ y : sum_t w_t (tau - 1{y_t <= y}) <= 0 } by scanning every response.
inline double brute_force_quantile(std::span<const double> w, std::span<const double> y, double tau) {
  double best = std::numeric_limits<double>::infinity();
  for (double cand : y) {
    double score = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) score += w[t] * (tau - (y[t] <= cand ? 1.0 : 0.0));
    if (score <= 0.0) best = std::min(best, cand);
  }
  return best;
}

inline WeightVector dense_to_weights(std::span<const double> w) {
  WeightVector out;
  for (std::size_t t = 0; t < w.size(); ++t) {
    if (w[t] != 0.0) out.entries.push_back({static_cast<std::uint32_t>(t), w[t]});
  }
  for (const auto& e : out.entries) out.total += e.weight;
  return out;
}

/// Lag pairs of a simulated path.
inline LagDataset simulated_pairs(Model model, std::size_t pairs, std::uint64_t seed,
                                  ErrorDist error = ErrorDist::Normal) {
  const DgpSpec spec{model, error};
  return embed(simulate_path(spec, pairs + spec.p(), kDefaultBurnIn, seed), spec.p());
}

/// Rows of `rows` that reach node `target` when routed from the root.
inline std::vector<std::vector<std::uint32_t>> route_rows(const Tree& tree, const LagDataset& data,
                                                          std::span<const std::uint32_t> rows) {
  std::vector<std::vector<std::uint32_t>> at(tree.nodes().size());
  for (auto r : rows) {
    std::size_t id = 0;
    at[id].push_back(r);
    while (!tree.node(id).is_leaf) {
      const TreeNode& n = tree.node(id);
      id = data.x(r, n.direction) <= n.threshold ? n.left : n.right;
      at[id].push_back(r);
    }
  }
  return at;
}

/// Empty string when the tree honours the J-fraction and leaf-occupancy
/// contract; otherwise a description of the first violation.
inline std::string structural_violation(const Tree& tree, const LagDataset& data, const ForestConfig& config) {
  const auto j_at = route_rows(tree, data, tree.double_sample().a_j);
  const auto i_at = route_rows(tree, data, tree.double_sample().a_i);
  const std::size_t k = config.min_leaf_k;
  for (std::size_t id = 0; id < tree.nodes().size(); ++id) {
    const TreeNode& n = tree.node(id);
    const std::size_t n_i = i_at[id].size();
    if (n.is_leaf) {
      std::vector<std::uint32_t> held = n.samples;
      std::sort(held.begin(), held.end());
      std::vector<std::uint32_t> routed = i_at[id];
      std::sort(routed.begin(), routed.end());
      if (held != routed) return "leaf " + std::to_string(id) + " holds rows that do not route to it";
      switch (n.flag) {
        case LeafFlag::kRegular:
          if (n_i < k || n_i > 2 * k - 1) return "regular leaf with " + std::to_string(n_i) + " I-rows";
          break;
        case LeafFlag::kUndersized:
          if (n_i >= k || id != 0) return "undersized flag on a non-root or full leaf";
          break;
        case LeafFlag::kUnsplittable:
          if (n_i < 2 * k) return "unsplittable flag with fewer than 2k I-rows";
          break;
      }
      continue;
    }
    const std::size_t n_j = j_at[id].size();
    const auto need =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(config.omega * static_cast<double>(n_j))));
    for (std::uint32_t child : {n.left, n.right}) {
      if (j_at[child].size() < need) return "child " + std::to_string(child) + " breaks the J-fraction";
      if (i_at[child].size() < k) return "child " + std::to_string(child) + " has fewer than k I-rows";
    }
  }
  return {};
}

}  // namespace tsqrf::testing
