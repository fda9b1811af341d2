#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsqrf/forest.hpp"
#include "tsqrf/series.hpp"
#include "tsqrf/synth.hpp"
#include "tsqrf/wnw.hpp"

namespace tsqrf {

enum class Method { Tsqrf, Wnw, Oracle };
enum class DataSplit { Train, Test };

std::string to_string(Method method);
std::string to_string(DataSplit split);
Method parse_method(std::string_view text);

/// Per-time biases q_hat(x_t) - q_0(x_t) of one replicate.
struct BiasSample {
  std::size_t replicate = 0;
  std::vector<double> biases;

  double mean() const;
};

struct BiasSummary {
  double mbias = 0.0;
  double sdbias = 0.0;
  double mse = 0.0;
};

/// MBias: mean of per-replicate mean biases. SDBias: their sample standard
/// deviation (divisor R-1). MSE: mean over replicates of the per-replicate
/// mean squared bias. Throws std::invalid_argument when R < 2.
BiasSummary mbias_sdbias_mse(std::span<const BiasSample> samples);

/// Fraction of responses at or below their predicted quantile.
double empirical_coverage(std::span<const double> predicted, std::span<const double> actual);

struct MetricsRow {
  Model model = Model::A;
  ErrorDist error = ErrorDist::Normal;
  std::size_t train_length = 0;
  double tau = 0.5;
  Method method = Method::Tsqrf;
  DataSplit split = DataSplit::Train;
  double mbias = 0.0;
  double sdbias = 0.0;  // NaN when R == 1
  double mse = 0.0;
  std::size_t replicates = 0;
};

/// Per-replicate mean bias, kept for histograms.
struct BiasRecord {
  Model model = Model::A;
  ErrorDist error = ErrorDist::Normal;
  std::size_t train_length = 0;
  double tau = 0.5;
  Method method = Method::Tsqrf;
  DataSplit split = DataSplit::Train;
  std::size_t replicate = 0;
  double bias = 0.0;
};

struct SimulationGrid {
  std::vector<Model> models{Model::A, Model::B, Model::C, Model::D};
  std::vector<ErrorDist> errors{ErrorDist::Normal, ErrorDist::Laplace};
  std::vector<std::size_t> train_lengths{1000};
  std::size_t test_length = 500;
  std::vector<double> taus{0.1, 0.5, 0.9};
  std::vector<Method> methods{Method::Tsqrf, Method::Wnw};
  std::size_t replicates = 20;
  std::uint64_t seed = 20240601;
  std::size_t burn_in = kDefaultBurnIn;
  ForestConfig forest = [] {
    ForestConfig c;
    c.num_trees = 200;
    return c;
  }();
  WnwConfig wnw;
  bool evaluate_train = true;
  bool evaluate_test = true;

  void validate() const;
};

struct SimulationResult {
  std::vector<MetricsRow> rows;
  std::vector<BiasRecord> raw;
};

/// Monte Carlo study. Each replicate simulates p + T + T' values, fits every
/// method on the first T pairs and scores training pairs (in-sample) and the
/// following T' pairs (held out) against the exact conditional quantile.
/// Replicates run on up to `threads` workers; output does not depend on it.
/// Any replicate failure aborts the run.
SimulationResult run_simulation(const SimulationGrid& grid, std::size_t threads = 1);

/// Seed of replicate r for a scenario; exposed so single replicates can be
/// reproduced.
std::uint64_t replicate_seed(std::uint64_t master, Model model, ErrorDist error, std::size_t train_length,
                             std::size_t replicate);

struct CoverageRow {
  DataSplit split = DataSplit::Train;
  Method method = Method::Tsqrf;
  double tau = 0.5;
  double theta = 0.0;
};

struct CoverageStudy {
  std::size_t lag_order = 2;
  std::vector<double> taus{0.025, 0.1, 0.5, 0.9, 0.975};
  std::vector<Method> methods{Method::Tsqrf, Method::Wnw};
  ForestConfig forest;
  WnwConfig wnw;
};

/// Chronological split: pairs whose response lies in the first
/// `train_length` values of the series train the models; the rest are test
/// pairs (their lags may reach back into the training block).
std::vector<CoverageRow> run_coverage_study(const Series& series, std::size_t train_length,
                                            const CoverageStudy& study, std::size_t threads = 1);

/// round(fraction * n), clamped to [1, n - 1].
std::size_t train_length_from_fraction(std::size_t n, double fraction);

// Report files. Numbers use the shortest round-trip decimal form; NaN is
// written as NA.
void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);
void write_metrics_json(std::ostream& out, std::span<const MetricsRow> rows);
void write_bias_csv(std::ostream& out, std::span<const BiasRecord> raw);
void write_coverage_csv(std::ostream& out, std::span<const CoverageRow> rows);

inline constexpr int kReportSchemaVersion = 1;

}  // namespace tsqrf
