#include "tsqrf/series.hpp"

#include <cmath>
#include <stdexcept>

#include "tsqrf/csv.hpp"

namespace tsqrf {

Series::Series(std::vector<double> values, std::string origin_label)
    : values_(std::move(values)), origin_label_(std::move(origin_label)) {
  if (values_.empty()) throw std::invalid_argument("series must hold at least one value");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw std::invalid_argument("series value at position " + std::to_string(i) + " is not finite");
    }
  }
}

LagDataset::LagDataset(std::size_t lag_order, std::vector<double> covariates,
                       std::vector<double> responses, std::vector<std::size_t> time_index)
    : lag_order_(lag_order),
      covariates_(std::move(covariates)),
      responses_(std::move(responses)),
      time_index_(std::move(time_index)) {
  if (lag_order_ == 0) throw std::invalid_argument("lag order must be positive");
  if (covariates_.size() != responses_.size() * lag_order_) {
    throw std::invalid_argument("covariate block does not match responses x lag order");
  }
  if (time_index_.size() != responses_.size()) {
    throw std::invalid_argument("time index length does not match responses");
  }
  for (std::size_t i = 1; i < time_index_.size(); ++i) {
    if (time_index_[i] <= time_index_[i - 1]) {
      throw std::invalid_argument("time index must be strictly increasing");
    }
  }
}

LagDataset LagDataset::slice(std::size_t first, std::size_t last) const {
  if (first > last || last > size()) throw std::out_of_range("LagDataset::slice: bad range");
  std::vector<double> cov(covariates_.begin() + static_cast<std::ptrdiff_t>(first * lag_order_),
                          covariates_.begin() + static_cast<std::ptrdiff_t>(last * lag_order_));
  std::vector<double> resp(responses_.begin() + static_cast<std::ptrdiff_t>(first),
                           responses_.begin() + static_cast<std::ptrdiff_t>(last));
  std::vector<std::size_t> idx(time_index_.begin() + static_cast<std::ptrdiff_t>(first),
                               time_index_.begin() + static_cast<std::ptrdiff_t>(last));
  return LagDataset(lag_order_, std::move(cov), std::move(resp), std::move(idx));
}

LagDataset LagDataset::with_responses(std::vector<double> responses) const {
  return LagDataset(lag_order_, covariates_, std::move(responses), time_index_);
}

LagDataset embed(const Series& series, std::size_t lag_order) {
  if (lag_order == 0) throw std::invalid_argument("lag order must be positive");
  if (series.size() <= lag_order) {
    throw std::invalid_argument("insufficient history for lag order p=" + std::to_string(lag_order));
  }
  const std::size_t n = series.size() - lag_order;
  std::vector<double> cov;
  cov.reserve(n * lag_order);
  std::vector<double> resp;
  resp.reserve(n);
  std::vector<std::size_t> idx;
  idx.reserve(n);
  for (std::size_t t = lag_order; t < series.size(); ++t) {
    for (std::size_t j = 1; j <= lag_order; ++j) cov.push_back(series[t - j]);
    resp.push_back(series[t]);
    idx.push_back(t);
  }
  return LagDataset(lag_order, std::move(cov), std::move(resp), std::move(idx));
}

Series log_returns(const Series& prices) {
  if (prices.size() < 2) throw std::invalid_argument("log returns need at least two prices");
  std::vector<double> out;
  out.reserve(prices.size() - 1);
  for (std::size_t t = 0; t < prices.size(); ++t) {
    if (!(prices[t] > 0.0)) {
      throw std::invalid_argument("price at position " + std::to_string(t) + " is not strictly positive");
    }
    if (t > 0) out.push_back(std::log(prices[t] / prices[t - 1]));
  }
  return Series(std::move(out), prices.origin_label());
}

Series load_series_csv(const std::string& path, const std::string& column, bool drop_missing) {
  const csv::Table table = csv::read_file(path);
  const auto col = table.column(column);
  if (!col) throw std::runtime_error("column '" + column + "' not found in " + path);
  std::vector<double> values;
  values.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::optional<double> v;
    if (*col < row.size()) v = csv::parse_double(row[*col]);
    if (!v) {
      if (drop_missing) continue;
      // +2: header line plus 1-based numbering
      throw std::runtime_error("missing or non-numeric value in column '" + column + "' at line " +
                               std::to_string(r + 2) + " of " + path);
    }
    values.push_back(*v);
  }
  if (values.empty()) throw std::runtime_error("no usable values in column '" + column + "' of " + path);
  return Series(std::move(values), path + ":" + column);
}

}  // namespace tsqrf
