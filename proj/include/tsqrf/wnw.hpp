#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "tsqrf/estimator.hpp"
#include "tsqrf/series.hpp"

namespace tsqrf {

/// Kernel conditional-CDF baseline with a Gaussian product kernel and
/// uniform point weights 1/T:
///
///   F(y | x) = sum_t K((x - X_t) / h) 1{Y_t <= y} / sum_t K((x - X_t) / h)
///
/// Kernel values are evaluated in log space and shifted by their maximum,
/// so the denominator stays positive even when every raw kernel value
/// underflows.
struct WnwConfig {
  /// One bandwidth per lag; empty selects the rule of thumb.
  std::vector<double> bandwidths;
  /// Replace the rule of thumb with leave-one-out pinball-loss selection
  /// over multiples of it.
  bool cross_validate = false;
};

/// h_j = 1.06 sd_j N^{-1/(4+p)}; a zero-variance column uses sd_j = 1.
std::vector<double> bandwidth_rule_of_thumb(const LagDataset& train);

inline constexpr double kBandwidthMultipliers[] = {0.25, 0.5, 1.0, 2.0, 4.0};

/// Mean leave-one-out pinball loss over `taus` at bandwidths
/// multiplier * rule-of-thumb; returns the best bandwidths.
std::vector<double> cross_validate_bandwidth(const LagDataset& train, std::span<const double> taus);

/// Normalized kernel weights of every training row at x.
WeightVector wnw_weights(const LagDataset& train, std::span<const double> x,
                         std::span<const double> bandwidths);

double wnw_cdf(const LagDataset& train, std::span<const double> x, double y,
               std::span<const double> bandwidths);

/// Smallest training response y with wnw_cdf(x, y) >= tau.
double wnw_quantile(const LagDataset& train, std::span<const double> x, double tau,
                    std::span<const double> bandwidths);

/// Training data plus resolved bandwidths, ready for batch prediction.
class WnwModel {
 public:
  WnwModel(std::shared_ptr<const LagDataset> train, std::vector<double> bandwidths);

  const LagDataset& data() const { return *train_; }
  std::shared_ptr<const LagDataset> data_ptr() const { return train_; }
  const std::vector<double>& bandwidths() const { return bandwidths_; }
  std::size_t lag_order() const { return train_->lag_order(); }

  QuantileMatrix predict(const LagDataset& queries, std::span<const double> taus,
                         std::size_t threads = 1) const;

 private:
  std::shared_ptr<const LagDataset> train_;
  std::vector<double> bandwidths_;
};

/// Resolves bandwidths per `config` (taus feed the optional CV).
WnwModel fit_wnw(std::shared_ptr<const LagDataset> train, const WnwConfig& config,
                 std::span<const double> taus = {});

}  // namespace tsqrf
