#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tsqrf/random.hpp"
#include "tsqrf/series.hpp"

namespace tsqrf {

/// Growth parameters for honest double-sample forests.
///
/// A tree draws a subsample of s = max(2, round(subsample_fraction * N))
/// training rows and splits it into an I-half of floor(s/2) rows (leaf
/// estimation) and a J-half of ceil(s/2) rows (split placement). Every split
/// sends at least ceil(omega * parent J-count) J-rows and at least
/// `min_leaf_k` I-rows to each child; nodes with fewer than 2k I-rows are not
/// split further.
struct ForestConfig {
  std::size_t num_trees = 2000;
  double subsample_fraction = 0.5;
  double omega = 0.05;
  std::size_t min_leaf_k = 5;
  /// Poisson mean for the number of candidate directions per node;
  /// 0 selects min(ceil(sqrt(p)) + 1, p).
  std::size_t mtry_mean = 0;
  /// Levels whose pseudo-outcomes drive the split criterion.
  std::vector<double> tau_levels{0.1, 0.5, 0.9};
  std::uint64_t seed = 42;

  /// Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
  /// Subsample size for N training rows; throws when it exceeds N.
  std::size_t subsample_size(std::size_t n) const;
  std::size_t resolved_mtry_mean(std::size_t p) const;
};

/// Disjoint (I, J) index halves of one subsample, both sorted ascending.
/// Indices are 0-based rows of the training LagDataset.
struct DoubleSample {
  std::vector<std::uint32_t> a_i;
  std::vector<std::uint32_t> a_j;

  friend bool operator==(const DoubleSample&, const DoubleSample&) = default;
};

/// |A_s| = N! / (floor(s/2)! ceil(s/2)! (N-s)!).
std::uint64_t double_sample_count(std::size_t n, std::size_t s);

/// Every ordered (I, J) pair for s out of N rows, ordered lexicographically
/// by I and then by J. Oracle use only: throws when N > 12.
std::vector<DoubleSample> enumerate_double_samples(std::size_t n, std::size_t s);

/// Uniform random s-subset of [0, N) split uniformly into halves.
DoubleSample draw_double_sample(std::size_t n, std::size_t s, Rng& rng);

/// mtry = min(max(poisson_draw, 1), p).
std::size_t clamp_mtry(std::size_t poisson_draw, std::size_t p);

/// Draws mtry as above and returns that many distinct 0-based directions,
/// sorted ascending.
std::vector<std::size_t> choose_split_directions(std::size_t p, std::size_t mean, Rng& rng);

struct Split {
  std::size_t direction = 0;  // 0-based lag column
  double threshold = 0.0;     // x[direction] <= threshold goes left
  double delta = 0.0;
};

/// Criterion value of a candidate partition of the J-rows: for each level
/// tau, pseudo-outcomes rho = 1{y > q_parent(tau)} - (1 - tau) are summed per
/// child and the criterion adds (sum rho)^2 / child size over both children
/// and all levels. `goes_left[i]` refers to `j_rows[i]`.
double split_criterion(std::span<const std::uint32_t> j_rows, const std::vector<bool>& goes_left,
                       const LagDataset& data, std::span<const double> tau_levels);

/// Best admissible split of a node, or nullopt. Candidate thresholds are the
/// node's J-row coordinates; ties prefer the smaller direction, then the
/// smaller threshold. Reads responses of J-rows only.
std::optional<Split> best_split(std::span<const std::uint32_t> j_rows,
                                std::span<const std::uint32_t> i_rows, const LagDataset& data,
                                std::span<const std::size_t> directions,
                                const ForestConfig& config);

enum class LeafFlag : std::uint8_t {
  kRegular = 0,     // between k and 2k-1 I-rows
  kUndersized = 1,  // fewer than k I-rows (root only)
  kUnsplittable = 2 // 2k or more I-rows but no admissible split
};

struct TreeNode {
  bool is_leaf = true;
  std::uint32_t direction = 0;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  LeafFlag flag = LeafFlag::kRegular;
  std::vector<std::uint32_t> samples;  // I-rows, leaves only

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class Tree {
 public:
  Tree() = default;
  Tree(std::size_t lag_order, std::vector<TreeNode> nodes, DoubleSample double_sample,
       std::uint64_t seed);

  std::size_t lag_order() const { return lag_order_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(std::size_t id) const { return nodes_[id]; }
  const DoubleSample& double_sample() const { return double_sample_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t num_leaves() const;

  /// Descends x[direction] <= threshold to the left. Throws on a dimension
  /// mismatch.
  std::size_t leaf_of(std::span<const double> x) const;

  /// Node-array equality, ignoring leaf contents and seed.
  bool same_structure(const Tree& other) const;

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  std::size_t lag_order_ = 0;
  std::vector<TreeNode> nodes_;
  DoubleSample double_sample_;
  std::uint64_t seed_ = 0;
};

/// Grows one honest tree; a pure function of its arguments.
Tree grow_tree(const LagDataset& data, const DoubleSample& ds, const ForestConfig& config,
               std::uint64_t seed);

/// Single split at (direction, threshold) with the I-rows of `ds` in leaves.
Tree make_stump(const LagDataset& data, const DoubleSample& ds, std::size_t direction,
                double threshold);

class Forest {
 public:
  Forest(std::shared_ptr<const LagDataset> data, ForestConfig config, std::vector<Tree> trees);

  const LagDataset& data() const { return *data_; }
  std::shared_ptr<const LagDataset> data_ptr() const { return data_; }
  const ForestConfig& config() const { return config_; }
  const std::vector<Tree>& trees() const { return trees_; }
  std::size_t size() const { return trees_.size(); }
  std::size_t lag_order() const { return data_->lag_order(); }

 private:
  std::shared_ptr<const LagDataset> data_;
  ForestConfig config_;
  std::vector<Tree> trees_;
};

/// Tree b uses seed derive_seed(config.seed, b) for its double sample, so
/// the result does not depend on `threads`.
Forest fit_forest(std::shared_ptr<const LagDataset> data, const ForestConfig& config,
                  std::size_t threads = 1);
Forest fit_forest(const LagDataset& data, const ForestConfig& config, std::size_t threads = 1);

/// Axis-aligned box [lower, upper] of the leaf holding x; unbounded sides are
/// +-infinity.
struct LeafBox {
  std::vector<double> lower;
  std::vector<double> upper;
};
LeafBox leaf_box(const Tree& tree, std::span<const double> x);

/// Euclidean diameter of `box` clipped to [range_lo, range_hi].
double clipped_diameter(const LeafBox& box, std::span<const double> range_lo,
                        std::span<const double> range_hi);

struct DiameterStats {
  std::vector<double> tree_mean;  // per tree, over probes
  std::vector<double> tree_max;
  double mean = 0.0;  // over all (tree, probe) pairs
  double max = 0.0;
};

/// Leaf diameters at each probe (rows of `probes`), clipped to the empirical
/// covariate range of the forest's training data.
DiameterStats leaf_diameter_stats(const Forest& forest, const LagDataset& probes);

}  // namespace tsqrf
