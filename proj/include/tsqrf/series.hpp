#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tsqrf {

/// An ordered, finite, non-empty sequence of real observations.
class Series {
 public:
  explicit Series(std::vector<double> values, std::string origin_label = {});

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::string& origin_label() const { return origin_label_; }

 private:
  std::vector<double> values_;
  std::string origin_label_;
};

/// Lag-embedded supervised pairs (x_t, y_t) with x_t = (y_{t-1}, ..., y_{t-p}).
///
/// Covariates are stored row-major: row i occupies [i*p, (i+1)*p). Lag j
/// (1-based) of row i is at column j-1, so the most recent value comes first.
/// `time_index` holds the 0-based position of each response in the source
/// series and is strictly increasing.
class LagDataset {
 public:
  LagDataset() = default;
  LagDataset(std::size_t lag_order, std::vector<double> covariates,
             std::vector<double> responses, std::vector<std::size_t> time_index);

  std::size_t size() const { return responses_.size(); }
  bool empty() const { return responses_.empty(); }
  std::size_t lag_order() const { return lag_order_; }

  std::span<const double> x(std::size_t row) const {
    return {covariates_.data() + row * lag_order_, lag_order_};
  }
  double x(std::size_t row, std::size_t column) const {
    return covariates_[row * lag_order_ + column];
  }
  double y(std::size_t row) const { return responses_[row]; }

  const std::vector<double>& covariates() const { return covariates_; }
  const std::vector<double>& responses() const { return responses_; }
  const std::vector<std::size_t>& time_index() const { return time_index_; }

  /// Rows [first, last) as a new dataset.
  LagDataset slice(std::size_t first, std::size_t last) const;

  /// Same covariates with responses replaced.
  LagDataset with_responses(std::vector<double> responses) const;

 private:
  std::size_t lag_order_ = 0;
  std::vector<double> covariates_;
  std::vector<double> responses_;
  std::vector<std::size_t> time_index_;
};

/// Builds the pairs for t = p, ..., n-1 (0-based); the first p values only
/// serve as history. Throws std::invalid_argument when size() <= p.
LagDataset embed(const Series& series, std::size_t lag_order);

/// r_t = ln(p_t / p_{t-1}). Requires at least two strictly positive prices.
Series log_returns(const Series& prices);

/// Reads one numeric column of a headed CSV file. With `drop_missing`, empty
/// or unparseable cells are skipped; otherwise the first such row throws.
Series load_series_csv(const std::string& path, const std::string& column,
                       bool drop_missing);

}  // namespace tsqrf
