// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "oracles.hpp"
#include "tsqrf/eval.hpp"

namespace tsqrf {
namespace {

using testing::brute_force_quantile;
using testing::dense_to_weights;
using testing::simulated_pairs;
using testing::structural_violation;

// Pinned tolerances and bounds.
constexpr double kMseLevelLo = 0.03;
constexpr double kMseLevelHi = 0.10;
constexpr double kSdBiasShrink = 0.25;
constexpr double kTrainMedianLo = 0.40;
constexpr double kTrainMedianHi = 0.60;
constexpr double kTestUpperLo = 0.94;
constexpr double kTestUpperHi = 1.00;

struct Outcome {
  bool pass;
  std::string detail;
};

/// Every tree grown anywhere in this suite is checked against the contract.
struct TreeAudit {
  std::size_t trees = 0;
  std::string first_violation;

  void check(const Tree& tree, const LagDataset& data, const ForestConfig& config) {
    ++trees;
    if (!first_violation.empty()) return;
    first_violation = structural_violation(tree, data, config);
  }
  void check(const Forest& forest) {
    for (const Tree& t : forest.trees()) check(t, forest.data(), forest.config());
  }
};

TreeAudit audit;

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
  return buf;
}

// All weak orderings of n items as rank vectors.
std::vector<std::vector<double>> weak_orderings(std::size_t n) {
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> v(n, 0);
  while (true) {
    std::vector<bool> used(n, false);
    std::size_t top = 0;
    for (auto x : v) {
      used[x] = true;
      top = std::max(top, x);
    }
    if (std::all_of(used.begin(), used.begin() + static_cast<std::ptrdiff_t>(top + 1), [](bool b) { return b; })) {
      out.emplace_back(v.begin(), v.end());
    }
    std::size_t i = 0;
    while (i < n && ++v[i] == n) v[i++] = 0;
    if (i == n) break;
  }
  return out;
}

Outcome criterion_1() {
  std::size_t cases = 0, mismatches = 0;
  auto compare = [&](std::span<const double> w, std::span<const double> y, double tau) {
    ++cases;
    if (weighted_quantile(dense_to_weights(w), y, tau) != brute_force_quantile(w, y, tau)) ++mismatches;
  };

  // exhaustive: supports up to 6 points, dyadic weights and levels, all tie patterns
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto orders = weak_orderings(n);
    const std::size_t levels = n <= 5 ? 3 : 2;  // weights {0, 1/4, 1/2} or {1/4, 1/2}
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) combos *= levels;
    std::vector<double> w(n);
    for (std::size_t code = 0; code < combos; ++code) {
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i, c /= levels) w[i] = (levels == 3 ? c % 3 : 1 + c % 2) * 0.25;
      if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) continue;
      for (const auto& y : orders) {
        for (int k = 1; k < 8; ++k) compare(w, y, k / 8.0);
      }
    }
  }

  // randomized
  Rng rng(1);
  std::uniform_real_distribution<double> u;
  std::uniform_int_distribution<int> size(1, 60);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = size(rng);
    std::vector<double> w(n), y(n);
    for (auto& v : w) v = u(rng) < 0.2 ? 0.0 : u(rng);
    for (auto& v : y) v = std::floor(u(rng) * 20.0) - 10.0 + (u(rng) < 0.5 ? 0.0 : u(rng));
    w[0] = 0.5;
    compare(w, y, std::max(1e-9, u(rng)));
  }
  return {mismatches == 0, std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches"};
}

Outcome criterion_2() {
  // appendix listing, 1-based
  const std::vector<std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>> table{
      {{1, 2}, {3, 4}}, {{1, 2}, {3, 5}}, {{1, 2}, {4, 5}}, {{1, 3}, {2, 4}}, {{1, 3}, {2, 5}}, {{1, 3}, {4, 5}},
      {{1, 4}, {2, 3}}, {{1, 4}, {2, 5}}, {{1, 4}, {3, 5}}, {{1, 5}, {2, 3}}, {{1, 5}, {2, 4}}, {{1, 5}, {3, 4}},
      {{2, 3}, {1, 4}}, {{2, 3}, {1, 5}}, {{2, 3}, {4, 5}}, {{2, 4}, {1, 3}}, {{2, 4}, {1, 5}}, {{2, 4}, {3, 5}},
      {{2, 5}, {1, 3}}, {{2, 5}, {1, 4}}, {{2, 5}, {3, 4}}, {{3, 4}, {1, 2}}, {{3, 4}, {1, 5}}, {{3, 4}, {2, 5}},
      {{3, 5}, {1, 2}}, {{3, 5}, {1, 4}}, {{3, 5}, {2, 4}}, {{4, 5}, {1, 2}}, {{4, 5}, {1, 3}}, {{4, 5}, {2, 3}}};
  const auto all = enumerate_double_samples(5, 4);
  bool listing = all.size() == table.size();
  for (std::size_t i = 0; listing && i < all.size(); ++i) {
    auto i_set = all[i].a_i, j_set = all[i].a_j;
    for (auto& v : i_set) ++v;
    for (auto& v : j_set) ++v;
    listing = i_set == table[i].first && j_set == table[i].second;
  }
  auto factorial = [](std::uint64_t n) {
    std::uint64_t r = 1;
    for (std::uint64_t i = 2; i <= n; ++i) r *= i;
    return r;
  };
  std::size_t checked = 0;
  bool counts = true;
  for (std::size_t n = 2; n <= 8; ++n) {
    for (std::size_t s = 2; s <= n; ++s) {
      const std::uint64_t formula = factorial(n) / (factorial(s / 2) * factorial((s + 1) / 2) * factorial(n - s));
      counts = counts && enumerate_double_samples(n, s).size() == formula && double_sample_count(n, s) == formula;
      ++checked;
    }
  }
  return {listing && counts, std::to_string(all.size()) + " elements in table order; " + std::to_string(checked) +
                                 " (N, s) counts match the closed form"};
}

Outcome criterion_3() {
  std::size_t trees = 0, differing = 0;
  const Model models[] = {Model::A, Model::B, Model::C, Model::D};
  for (int i = 0; i < 50; ++i) {
    const Model m = models[i % 4];
    const LagDataset d = simulated_pairs(m, 200 + 10 * i, 3000 + i, i % 2 ? ErrorDist::Laplace : ErrorDist::Normal);
    ForestConfig c;
    c.min_leaf_k = 1 + i % 6;
    Rng rng(derive_seed(77, i));
    for (int b = 0; b < 4; ++b) {
      const auto ds = draw_double_sample(d.size(), c.subsample_size(d.size()), rng);
      std::vector<double> y = d.responses();
      std::vector<double> vals;
      for (auto r : ds.a_i) vals.push_back(y[r]);
      std::shuffle(vals.begin(), vals.end(), rng);
      for (std::size_t q = 0; q < ds.a_i.size(); ++q) y[ds.a_i[q]] = vals[q];
      const LagDataset permuted = d.with_responses(y);
      const Tree original = grow_tree(d, ds, c, derive_seed(i, b));
      const Tree regrown = grow_tree(permuted, ds, c, derive_seed(i, b));
      audit.check(original, d, c);
      audit.check(regrown, permuted, c);
      ++trees;
      if (!original.same_structure(regrown)) ++differing;
    }
  }
  return {differing == 0, std::to_string(trees) + " trees over 50 datasets, " + std::to_string(differing) +
                              " structural differences"};
}

Outcome criterion_5() {
  std::size_t checks = 0, violations = 0;
  double worst = 0.0;
  Rng rng(5);
  const Model models[] = {Model::A, Model::B, Model::C, Model::D};
  for (int f = 0; f < 4; ++f) {
    const LagDataset d = simulated_pairs(models[f], 600, 500 + f);
    ForestConfig c;
    c.num_trees = 200;
    c.seed = 900 + f;
    const Forest forest = fit_forest(d, c);
    audit.check(forest);
    const LagDataset q = simulated_pairs(models[f], 25, 600 + f);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (std::size_t r = 0; r < q.size(); ++r) {
      const double tau = u(rng);
      const WeightVector w = forest_weights(forest, q.x(r));
      const double qh = weighted_quantile(w, d.responses(), tau);
      const ScoreDiagnostic diag = score_diagnostic(w, d.responses(), qh, tau);
      ++checks;
      worst = std::max(worst, std::abs(diag.score) / diag.bound);
      if (std::abs(diag.score) > diag.bound) ++violations;
    }
  }
  return {violations == 0 && checks == 100,
          std::to_string(checks) + " queries, max |score|/bound = " + fmt("%.4f", worst)};
}

SimulationResult simulate(Model model, std::vector<std::size_t> lengths, std::vector<double> taus,
                          std::vector<Method> methods, std::size_t replicates, std::size_t trees, bool train,
                          bool test) {
  SimulationGrid g;
  g.models = {model};
  g.errors = {ErrorDist::Normal};
  g.train_lengths = std::move(lengths);
  g.taus = std::move(taus);
  g.methods = std::move(methods);
  g.replicates = replicates;
  g.forest.num_trees = trees;
  g.evaluate_train = train;
  g.evaluate_test = test;
  g.test_length = 500;
  return run_simulation(g);
}

Outcome criterion_6() {
  const auto r = simulate(Model::C, {500, 2000}, {0.5}, {Method::Tsqrf}, 10, 200, true, false);
  const MetricsRow& small = r.rows[0];
  const MetricsRow& large = r.rows[1];
  const double shrink = 1.0 - large.sdbias / small.sdbias;
  const bool pass = large.mse < small.mse && shrink >= kSdBiasShrink;
  return {pass, fmt("MSE %.4f -> %.4f, SDBias %.4f -> %.4f", small.mse, large.mse, small.sdbias, large.sdbias) +
                    fmt(" (shrink %.0f%%)", 100.0 * shrink)};
}

Outcome criterion_7() {
  const auto r = simulate(Model::A, {1000}, {0.01, 0.5, 0.99}, {Method::Tsqrf}, 20, 500, true, false);
  const double mse = r.rows[1].mse;
  const double low = r.rows[0].mbias;
  const double high = r.rows[2].mbias;
  const bool pass = mse >= kMseLevelLo && mse <= kMseLevelHi && low > 0.0 && high < 0.0;
  return {pass, fmt("MSE(0.5) = %.4f, MBias(0.01) = %.4f, MBias(0.99) = %.4f", mse, low, high)};
}

Outcome criterion_8() {
  const auto r = simulate(Model::C, {1000}, {0.1, 0.5, 0.9}, {Method::Tsqrf, Method::Wnw}, 10, 200, false, true);
  int wins = 0;
  std::string detail;
  for (std::size_t t = 0; t < 3; ++t) {
    const double forest = r.rows[2 * t].mse;
    const double kernel = r.rows[2 * t + 1].mse;
    wins += forest < kernel;
    detail += (t ? ", " : "") + fmt("tau %.1f: %.4f vs %.4f", r.rows[2 * t].tau, forest, kernel);
  }
  return {wins >= 2, std::to_string(wins) + "/3 levels won (" + detail + ")"};
}

Outcome criterion_9() {
  const Series path = simulate_path({Model::B, ErrorDist::Normal}, 1465, kDefaultBurnIn, 1465);
  CoverageStudy study;
  study.taus = {0.5, 0.975};
  study.methods = {Method::Tsqrf};
  const auto rows = run_coverage_study(path, 976, study);
  double train_median = NAN, test_upper = NAN;
  for (const auto& row : rows) {
    if (row.split == DataSplit::Train && row.tau == 0.5) train_median = row.theta;
    if (row.split == DataSplit::Test && row.tau == 0.975) test_upper = row.theta;
  }
  const bool pass = train_median >= kTrainMedianLo && train_median <= kTrainMedianHi && test_upper >= kTestUpperLo &&
                    test_upper <= kTestUpperHi;
  return {pass, fmt("train theta(0.5) = %.3f, test theta(0.975) = %.3f", train_median, test_upper)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_10() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "tsqrf_acceptance_threads";
  fs::remove_all(root);
  std::ostringstream sink;
  auto bench = [&](const std::string& threads) {
    return cli::run({"bench", "--models", "a,c", "--errors", "normal,laplace", "--T", "300", "--test-T", "100", "--R",
                     "4", "--trees", "50", "--seed", "2024", "--threads", threads, "--out-dir",
                     (root / threads).string()},
                    sink, sink);
  };
  if (bench("1") != 0 || bench("4") != 0) return {false, "bench failed: " + sink.str()};
  std::size_t identical = 0;
  for (const char* f : {"report_train.csv", "report_test.csv", "report.json", "bias_samples.csv"}) {
    const std::string a = slurp(root / "1" / f);
    identical += !a.empty() && a == slurp(root / "4" / f);
  }
  fs::remove_all(root);
  return {identical == 4, std::to_string(identical) + "/4 report files byte-identical (1 vs 4 threads)"};
}

Outcome criterion_11() {
  double half = 0.0, eighth = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    const LagDataset d = simulated_pairs(Model::B, 2000, 11000 + seed);
    const LagDataset probes = simulated_pairs(Model::B, 200, 12000 + seed);
    ForestConfig c;
    c.num_trees = 50;
    c.seed = seed;
    c.subsample_fraction = 0.5;
    const Forest f_half = fit_forest(d, c);
    c.subsample_fraction = 0.125;
    const Forest f_eighth = fit_forest(d, c);
    audit.check(f_half);
    audit.check(f_eighth);
    half += leaf_diameter_stats(f_half, probes).mean / 10.0;
    eighth += leaf_diameter_stats(f_eighth, probes).mean / 10.0;
  }
  return {half < eighth, fmt("mean leaf diameter s=T/2: %.4f, s=T/8: %.4f", half, eighth)};
}

Outcome criterion_4() {
  // evaluated after the other criteria
  return {audit.trees > 0 && audit.first_violation.empty(),
          std::to_string(audit.trees) + " trees audited" +
              (audit.first_violation.empty() ? "" : ", first violation: " + audit.first_violation)};
}

}  // namespace
}  // namespace tsqrf

int main() {
  using namespace tsqrf;
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "weighted quantile equals the brute-force infimum", criterion_1},
      {2, "double-sample enumeration", criterion_2},
      {3, "honesty under permuted I responses", criterion_3},
      {5, "score bound at random queries", criterion_5},
      {6, "consistency trend, model c", criterion_6},
      {7, "level reproduction, model a", criterion_7},
      {8, "forest beats kernel baseline, model c", criterion_8},
      {9, "coverage pipeline, model b", criterion_9},
      {10, "determinism under parallelism", criterion_10},
      {11, "leaf diameter shrinks with subsample size", criterion_11},
      {4, "structural constraints on every grown tree", criterion_4},
  };
  std::vector<std::pair<int, std::string>> lines;
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    char head[128];
    std::snprintf(head, sizeof(head), "[%s] %2d %s: ", o.pass ? "PASS" : "FAIL", c.id, c.name);
    lines.emplace_back(c.id, head + o.detail + fmt(" (%.1fs)", secs));
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
