#include "tsqrf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "tsqrf/parallel.hpp"

namespace tsqrf {

// ---------------------------------------------------------------------------
// Configuration

void ForestConfig::validate() const {
  if (num_trees == 0) throw std::invalid_argument("num_trees must be positive");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw std::invalid_argument("subsample_fraction must lie in (0, 1]");
  }
  if (!(omega > 0.0 && omega <= 0.2)) throw std::invalid_argument("omega must lie in (0, 0.2]");
  if (min_leaf_k == 0) throw std::invalid_argument("min_leaf_k must be at least 1");
  if (tau_levels.empty()) throw std::invalid_argument("tau_levels must not be empty");
  for (double tau : tau_levels) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau_levels must lie in (0, 1)");
  }
}

std::size_t ForestConfig::subsample_size(std::size_t n) const {
  const auto s = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(subsample_fraction * n)));
  if (s > n) {
    throw std::invalid_argument("subsample size " + std::to_string(s) + " exceeds " +
                                std::to_string(n) + " training pairs");
  }
  return s;
}

std::size_t ForestConfig::resolved_mtry_mean(std::size_t p) const {
  if (mtry_mean > 0) return mtry_mean;
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
  return std::min(root + 1, p);
}

// ---------------------------------------------------------------------------
// Double samples

std::uint64_t double_sample_count(std::size_t n, std::size_t s) {
  if (s > n) return 0;
  // C(n, s) * C(s, floor(s/2)), each built incrementally to stay exact
  auto binomial = [](std::size_t a, std::size_t b) {
    std::uint64_t r = 1;
    for (std::size_t i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  return binomial(n, s) * binomial(s, s / 2);
}

namespace {

/// Advances `comb` (sorted, values < n) to the next combination in
/// lexicographic order; false after the last one.
bool next_combination(std::vector<std::size_t>& comb, std::size_t n) {
  const std::size_t k = comb.size();
  for (std::size_t i = k; i-- > 0;) {
    if (comb[i] < n - k + i) {
      ++comb[i];
      for (std::size_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::vector<std::size_t> first_combination(std::size_t k) {
  std::vector<std::size_t> c(k);
  std::iota(c.begin(), c.end(), std::size_t{0});
  return c;
}

}  // namespace

std::vector<DoubleSample> enumerate_double_samples(std::size_t n, std::size_t s) {
  if (n > 12) throw std::invalid_argument("oracle enumeration capped at N <= 12");
  if (s < 2 || s > n) throw std::invalid_argument("enumeration requires 2 <= s <= N");
  const std::size_t i_size = s / 2;
  const std::size_t j_size = s - i_size;

  std::vector<DoubleSample> out;
  out.reserve(static_cast<std::size_t>(double_sample_count(n, s)));
  auto i_comb = first_combination(i_size);
  do {
    std::vector<std::uint32_t> rest;
    for (std::size_t v = 0, c = 0; v < n; ++v) {
      if (c < i_size && i_comb[c] == v) {
        ++c;
      } else {
        rest.push_back(static_cast<std::uint32_t>(v));
      }
    }
    auto j_comb = first_combination(j_size);
    do {
      DoubleSample ds;
      for (std::size_t v : i_comb) ds.a_i.push_back(static_cast<std::uint32_t>(v));
      for (std::size_t pos : j_comb) ds.a_j.push_back(rest[pos]);
      out.push_back(std::move(ds));
    } while (next_combination(j_comb, rest.size()));
  } while (next_combination(i_comb, n));
  return out;
}

DoubleSample draw_double_sample(std::size_t n, std::size_t s, Rng& rng) {
  if (s < 2 || s > n) throw std::invalid_argument("double sample requires 2 <= s <= N");
  if (n > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("too many rows");
  std::vector<std::uint32_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::uint32_t{0});
  // partial Fisher-Yates: the first s slots become a uniform ordered s-tuple
  for (std::size_t i = 0; i < s; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  const std::size_t i_size = s / 2;
  DoubleSample ds;
  ds.a_i.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(i_size));
  ds.a_j.assign(pool.begin() + static_cast<std::ptrdiff_t>(i_size),
                pool.begin() + static_cast<std::ptrdiff_t>(s));
  std::sort(ds.a_i.begin(), ds.a_i.end());
  std::sort(ds.a_j.begin(), ds.a_j.end());
  return ds;
}

// ---------------------------------------------------------------------------
// Split search

std::size_t clamp_mtry(std::size_t poisson_draw, std::size_t p) {
  return std::min(std::max<std::size_t>(poisson_draw, 1), p);
}

std::vector<std::size_t> choose_split_directions(std::size_t p, std::size_t mean, Rng& rng) {
  if (p == 0 || mean == 0) throw std::invalid_argument("choose_split_directions: p and m must be positive");
  std::poisson_distribution<std::size_t> poisson(static_cast<double>(mean));
  const std::size_t mtry = clamp_mtry(poisson(rng), p);
  std::vector<std::size_t> dirs(p);
  std::iota(dirs.begin(), dirs.end(), std::size_t{0});
  for (std::size_t i = 0; i < mtry; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, p - 1);
    std::swap(dirs[i], dirs[pick(rng)]);
  }
  dirs.resize(mtry);
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

namespace {

/// Smallest value whose cumulative count reaches tau * n.
double sorted_quantile(const std::vector<double>& sorted, double tau) {
  const double target = tau * static_cast<double>(sorted.size());
  std::size_t count = static_cast<std::size_t>(std::ceil(target));
  count = std::clamp<std::size_t>(count, 1, sorted.size());
  return sorted[count - 1];
}

/// Pseudo-outcomes laid out row-major as [j_row][level].
std::vector<double> pseudo_outcomes(std::span<const std::uint32_t> j_rows, const LagDataset& data,
                                    std::span<const double> tau_levels) {
  std::vector<double> ys;
  ys.reserve(j_rows.size());
  for (auto r : j_rows) ys.push_back(data.y(r));
  std::sort(ys.begin(), ys.end());
  const std::size_t levels = tau_levels.size();
  std::vector<double> rho(j_rows.size() * levels);
  for (std::size_t l = 0; l < levels; ++l) {
    const double q = sorted_quantile(ys, tau_levels[l]);
    const double offset = 1.0 - tau_levels[l];
    for (std::size_t i = 0; i < j_rows.size(); ++i) {
      rho[i * levels + l] = (data.y(j_rows[i]) > q ? 1.0 : 0.0) - offset;
    }
  }
  return rho;
}

std::size_t min_child_j(double omega, std::size_t parent_j) {
  return static_cast<std::size_t>(std::ceil(omega * static_cast<double>(parent_j)));
}

}  // namespace

double split_criterion(std::span<const std::uint32_t> j_rows, const std::vector<bool>& goes_left,
                       const LagDataset& data, std::span<const double> tau_levels) {
  const std::size_t levels = tau_levels.size();
  const std::vector<double> rho = pseudo_outcomes(j_rows, data, tau_levels);
  std::vector<double> left(levels, 0.0), right(levels, 0.0);
  std::size_t n_left = 0;
  for (std::size_t i = 0; i < j_rows.size(); ++i) {
    auto& side = goes_left[i] ? left : right;
    n_left += goes_left[i] ? 1 : 0;
    for (std::size_t l = 0; l < levels; ++l) side[l] += rho[i * levels + l];
  }
  const std::size_t n_right = j_rows.size() - n_left;
  double delta = 0.0;
  for (std::size_t l = 0; l < levels; ++l) {
    if (n_left > 0) delta += left[l] * left[l] / static_cast<double>(n_left);
    if (n_right > 0) delta += right[l] * right[l] / static_cast<double>(n_right);
  }
  return delta;
}

std::optional<Split> best_split(std::span<const std::uint32_t> j_rows,
                                std::span<const std::uint32_t> i_rows, const LagDataset& data,
                                std::span<const std::size_t> directions,
                                const ForestConfig& config) {
  const std::size_t k = config.min_leaf_k;
  const std::size_t n_j = j_rows.size();
  const std::size_t n_i = i_rows.size();
  if (n_i < 2 * k || n_j < 2) return std::nullopt;

  const std::span<const double> taus(config.tau_levels);
  const std::size_t levels = taus.size();
  const std::vector<double> rho = pseudo_outcomes(j_rows, data, taus);
  std::vector<double> total(levels, 0.0);
  for (std::size_t i = 0; i < n_j; ++i) {
    for (std::size_t l = 0; l < levels; ++l) total[l] += rho[i * levels + l];
  }
  const std::size_t need_j = std::max<std::size_t>(1, min_child_j(config.omega, n_j));

  std::optional<Split> best;
  std::vector<std::size_t> order(n_j);
  std::vector<double> i_coord(n_i);
  std::vector<double> left_sum(levels);

  for (std::size_t dir : directions) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return data.x(j_rows[a], dir) < data.x(j_rows[b], dir);
    });
    for (std::size_t i = 0; i < n_i; ++i) i_coord[i] = data.x(i_rows[i], dir);
    std::sort(i_coord.begin(), i_coord.end());

    std::fill(left_sum.begin(), left_sum.end(), 0.0);
    std::size_t i_left = 0;
    for (std::size_t pos = 0; pos + 1 < n_j; ++pos) {
      const std::size_t row = order[pos];
      for (std::size_t l = 0; l < levels; ++l) left_sum[l] += rho[row * levels + l];
      const double zeta = data.x(j_rows[row], dir);
      const double next = data.x(j_rows[order[pos + 1]], dir);
      if (!(zeta < next)) continue;  // threshold must separate distinct values

      const std::size_t n_left = pos + 1;
      const std::size_t n_right = n_j - n_left;
      if (n_left < need_j || n_right < need_j) continue;
      while (i_left < n_i && i_coord[i_left] <= zeta) ++i_left;
      if (i_left < k || n_i - i_left < k) continue;

      double delta = 0.0;
      for (std::size_t l = 0; l < levels; ++l) {
        const double right_sum = total[l] - left_sum[l];
        delta += left_sum[l] * left_sum[l] / static_cast<double>(n_left) +
                 right_sum * right_sum / static_cast<double>(n_right);
      }
      if (!best || delta > best->delta) best = Split{dir, zeta, delta};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Trees

Tree::Tree(std::size_t lag_order, std::vector<TreeNode> nodes, DoubleSample double_sample,
           std::uint64_t seed)
    : lag_order_(lag_order), nodes_(std::move(nodes)), double_sample_(std::move(double_sample)), seed_(seed) {
  if (nodes_.empty()) throw std::invalid_argument("tree must have a root node");
  for (const auto& node : nodes_) {
    if (node.is_leaf) continue;
    if (node.direction >= lag_order_ || node.left >= nodes_.size() || node.right >= nodes_.size()) {
      throw std::invalid_argument("tree node references out of range");
    }
  }
}

std::size_t Tree::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf; }));
}

std::size_t Tree::leaf_of(std::span<const double> x) const {
  if (x.size() != lag_order_) {
    throw std::invalid_argument("query has " + std::to_string(x.size()) + " components, tree expects " +
                                std::to_string(lag_order_));
  }
  std::size_t id = 0;
  while (!nodes_[id].is_leaf) {
    const TreeNode& n = nodes_[id];
    id = x[n.direction] <= n.threshold ? n.left : n.right;
  }
  return id;
}

bool Tree::same_structure(const Tree& other) const {
  if (nodes_.size() != other.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& a = nodes_[i];
    const TreeNode& b = other.nodes_[i];
    if (a.is_leaf != b.is_leaf) return false;
    if (!a.is_leaf && (a.direction != b.direction || a.threshold != b.threshold || a.left != b.left ||
                       a.right != b.right)) {
      return false;
    }
  }
  return true;
}

Tree grow_tree(const LagDataset& data, const DoubleSample& ds, const ForestConfig& config,
               std::uint64_t seed) {
  if (data.empty()) throw std::invalid_argument("cannot grow a tree on an empty dataset");
  const std::size_t p = data.lag_order();
  const std::size_t k = config.min_leaf_k;
  const std::size_t mtry_mean = config.resolved_mtry_mean(p);
  Rng rng(seed);

  struct Pending {
    std::uint32_t node;
    std::vector<std::uint32_t> j_rows;
    std::vector<std::uint32_t> i_rows;
  };

  std::vector<TreeNode> nodes(1);
  std::vector<Pending> stack;
  stack.push_back({0, ds.a_j, ds.a_i});

  while (!stack.empty()) {
    Pending item = std::move(stack.back());
    stack.pop_back();

    const std::size_t n_i = item.i_rows.size();
    std::optional<Split> split;
    if (n_i >= 2 * k) {
      const auto dirs = choose_split_directions(p, mtry_mean, rng);
      split = best_split(item.j_rows, item.i_rows, data, dirs, config);
    }
    if (!split) {
      TreeNode& leaf = nodes[item.node];
      leaf.is_leaf = true;
      leaf.samples = std::move(item.i_rows);
      if (n_i < k) {
        leaf.flag = LeafFlag::kUndersized;
      } else if (n_i >= 2 * k) {
        leaf.flag = LeafFlag::kUnsplittable;
      } else {
        leaf.flag = LeafFlag::kRegular;
      }
      continue;
    }

    Pending left{static_cast<std::uint32_t>(nodes.size()), {}, {}};
    Pending right{static_cast<std::uint32_t>(nodes.size() + 1), {}, {}};
    for (auto r : item.j_rows) {
      (data.x(r, split->direction) <= split->threshold ? left : right).j_rows.push_back(r);
    }
    for (auto r : item.i_rows) {
      (data.x(r, split->direction) <= split->threshold ? left : right).i_rows.push_back(r);
    }
    TreeNode& parent = nodes[item.node];
    parent.is_leaf = false;
    parent.direction = static_cast<std::uint32_t>(split->direction);
    parent.threshold = split->threshold;
    parent.left = left.node;
    parent.right = right.node;
    nodes.emplace_back();
    nodes.emplace_back();
    // right first so the left subtree is numbered and grown first
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }
  return Tree(p, std::move(nodes), ds, seed);
}

Tree make_stump(const LagDataset& data, const DoubleSample& ds, std::size_t direction, double threshold) {
  if (direction >= data.lag_order()) throw std::invalid_argument("stump direction out of range");
  std::vector<TreeNode> nodes(3);
  nodes[0].is_leaf = false;
  nodes[0].direction = static_cast<std::uint32_t>(direction);
  nodes[0].threshold = threshold;
  nodes[0].left = 1;
  nodes[0].right = 2;
  for (auto r : ds.a_i) {
    nodes[data.x(r, direction) <= threshold ? 1 : 2].samples.push_back(r);
  }
  return Tree(data.lag_order(), std::move(nodes), ds, 0);
}

// ---------------------------------------------------------------------------
// Forests

Forest::Forest(std::shared_ptr<const LagDataset> data, ForestConfig config, std::vector<Tree> trees)
    : data_(std::move(data)), config_(std::move(config)), trees_(std::move(trees)) {
  if (!data_ || data_->empty()) throw std::invalid_argument("forest needs a non-empty dataset");
  for (const Tree& tree : trees_) {
    if (tree.lag_order() != data_->lag_order()) throw std::invalid_argument("tree lag order mismatch");
    for (const TreeNode& node : tree.nodes()) {
      for (auto r : node.samples) {
        if (r >= data_->size()) throw std::invalid_argument("leaf row index out of range");
      }
    }
  }
}

Forest fit_forest(std::shared_ptr<const LagDataset> data, const ForestConfig& config, std::size_t threads) {
  config.validate();
  if (!data || data->empty()) throw std::invalid_argument("cannot fit a forest on an empty dataset");
  const std::size_t n = data->size();
  const std::size_t s = config.subsample_size(n);
  std::vector<Tree> trees(config.num_trees);
  parallel_for(config.num_trees, threads, [&](std::size_t b) {
    const std::uint64_t tree_seed = derive_seed(config.seed, b);
    Rng rng(tree_seed);
    const DoubleSample ds = draw_double_sample(n, s, rng);
    trees[b] = grow_tree(*data, ds, config, derive_seed(tree_seed, 1));
  });
  return Forest(std::move(data), config, std::move(trees));
}

Forest fit_forest(const LagDataset& data, const ForestConfig& config, std::size_t threads) {
  return fit_forest(std::make_shared<const LagDataset>(data), config, threads);
}

// ---------------------------------------------------------------------------
// Leaf geometry

LeafBox leaf_box(const Tree& tree, std::span<const double> x) {
  const std::size_t p = tree.lag_order();
  if (x.size() != p) throw std::invalid_argument("leaf_box: dimension mismatch");
  LeafBox box{std::vector<double>(p, -std::numeric_limits<double>::infinity()),
              std::vector<double>(p, std::numeric_limits<double>::infinity())};
  std::size_t id = 0;
  while (!tree.node(id).is_leaf) {
    const TreeNode& n = tree.node(id);
    if (x[n.direction] <= n.threshold) {
      box.upper[n.direction] = std::min(box.upper[n.direction], n.threshold);
      id = n.left;
    } else {
      box.lower[n.direction] = std::max(box.lower[n.direction], n.threshold);
      id = n.right;
    }
  }
  return box;
}

double clipped_diameter(const LeafBox& box, std::span<const double> range_lo, std::span<const double> range_hi) {
  double sq = 0.0;
  for (std::size_t j = 0; j < box.lower.size(); ++j) {
    const double lo = std::max(box.lower[j], range_lo[j]);
    const double hi = std::min(box.upper[j], range_hi[j]);
    if (hi > lo) sq += (hi - lo) * (hi - lo);
  }
  return std::sqrt(sq);
}

DiameterStats leaf_diameter_stats(const Forest& forest, const LagDataset& probes) {
  const LagDataset& data = forest.data();
  const std::size_t p = data.lag_order();
  if (probes.lag_order() != p) throw std::invalid_argument("probe dimension mismatch");
  std::vector<double> lo(p, std::numeric_limits<double>::infinity());
  std::vector<double> hi(p, -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t j = 0; j < p; ++j) {
      lo[j] = std::min(lo[j], data.x(r, j));
      hi[j] = std::max(hi[j], data.x(r, j));
    }
  }

  DiameterStats stats;
  double sum = 0.0;
  std::size_t count = 0;
  for (const Tree& tree : forest.trees()) {
    double tree_sum = 0.0;
    double tree_max = 0.0;
    for (std::size_t r = 0; r < probes.size(); ++r) {
      const double d = clipped_diameter(leaf_box(tree, probes.x(r)), lo, hi);
      tree_sum += d;
      tree_max = std::max(tree_max, d);
    }
    const double tree_mean = probes.empty() ? 0.0 : tree_sum / static_cast<double>(probes.size());
    stats.tree_mean.push_back(tree_mean);
    stats.tree_max.push_back(tree_max);
    sum += tree_sum;
    count += probes.size();
    stats.max = std::max(stats.max, tree_max);
  }
  stats.mean = count == 0 ? 0.0 : sum / static_cast<double>(count);
  return stats;
}

}  // namespace tsqrf
