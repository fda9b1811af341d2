#include "tsqrf/wnw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "tsqrf/parallel.hpp"

namespace tsqrf {
namespace {

void check_bandwidths(std::span<const double> h, std::size_t p) {
  if (h.size() != p) throw std::invalid_argument("need one bandwidth per lag");
  for (double v : h) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("bandwidths must be positive and finite");
  }
}

/// log K((x - X_t)/h) up to an additive constant.
void log_kernels(const LagDataset& train, std::span<const double> x, std::span<const double> h,
                 std::vector<double>& out, std::size_t skip = std::numeric_limits<std::size_t>::max()) {
  const std::size_t p = train.lag_order();
  out.resize(train.size());
  for (std::size_t t = 0; t < train.size(); ++t) {
    if (t == skip) {
      out[t] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double u = (x[j] - train.x(t, j)) / h[j];
      s += u * u;
    }
    out[t] = -0.5 * s;
  }
}

/// exp-normalizes log kernel values in place.
void normalize(std::vector<double>& logk) {
  const double peak = *std::max_element(logk.begin(), logk.end());
  double total = 0.0;
  for (double& v : logk) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : logk) v /= total;
}

double pinball(double residual, double tau) { return residual >= 0.0 ? tau * residual : (tau - 1.0) * residual; }

}  // namespace

std::vector<double> bandwidth_rule_of_thumb(const LagDataset& train) {
  const std::size_t n = train.size();
  const std::size_t p = train.lag_order();
  if (n < 2) throw std::invalid_argument("rule-of-thumb bandwidth needs at least 2 training points");
  const double factor = 1.06 * std::pow(static_cast<double>(n), -1.0 / (4.0 + static_cast<double>(p)));
  std::vector<double> h(p);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) mean += train.x(t, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t t = 0; t < n; ++t) ss += (train.x(t, j) - mean) * (train.x(t, j) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    h[j] = factor * (sd > 0.0 ? sd : 1.0);
  }
  return h;
}

WeightVector wnw_weights(const LagDataset& train, std::span<const double> x, std::span<const double> bandwidths) {
  if (train.empty()) throw std::invalid_argument("WNW needs training data");
  if (x.size() != train.lag_order()) throw std::invalid_argument("query dimension mismatch");
  check_bandwidths(bandwidths, train.lag_order());
  std::vector<double> k;
  log_kernels(train, x, bandwidths, k);
  normalize(k);
  WeightVector out;
  out.entries.reserve(k.size());
  for (std::size_t t = 0; t < k.size(); ++t) {
    out.entries.push_back({static_cast<std::uint32_t>(t), k[t]});
    out.total += k[t];
  }
  return out;
}

double wnw_cdf(const LagDataset& train, std::span<const double> x, double y, std::span<const double> bandwidths) {
  const WeightVector w = wnw_weights(train, x, bandwidths);
  double below = 0.0;
  for (const auto& e : w.entries) {
    if (train.y(e.row) <= y) below += e.weight;
  }
  return std::clamp(below / w.total, 0.0, 1.0);
}

double wnw_quantile(const LagDataset& train, std::span<const double> x, double tau,
                    std::span<const double> bandwidths) {
  return weighted_quantile(wnw_weights(train, x, bandwidths), train.responses(), tau);
}

std::vector<double> cross_validate_bandwidth(const LagDataset& train, std::span<const double> taus) {
  if (taus.empty()) throw std::invalid_argument("cross-validation needs at least one quantile level");
  const std::vector<double> base = bandwidth_rule_of_thumb(train);
  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return train.y(a) < train.y(b); });

  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best = base;
  std::vector<double> k;
  for (double m : kBandwidthMultipliers) {
    std::vector<double> h(base);
    for (double& v : h) v *= m;
    double loss = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      log_kernels(train, train.x(t), h, k, t);
      normalize(k);
      for (double tau : taus) {
        double cumulative = 0.0;
        double q = train.y(order.back());
        for (std::size_t i = 0; i < n;) {
          const double y = train.y(order[i]);
          while (i < n && train.y(order[i]) == y) cumulative += k[order[i++]];
          if (cumulative >= tau) {
            q = y;
            break;
          }
        }
        loss += pinball(train.y(t) - q, tau);
      }
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = h;
    }
  }
  return best;
}

WnwModel::WnwModel(std::shared_ptr<const LagDataset> train, std::vector<double> bandwidths)
    : train_(std::move(train)), bandwidths_(std::move(bandwidths)) {
  if (!train_ || train_->empty()) throw std::invalid_argument("WNW needs training data");
  check_bandwidths(bandwidths_, train_->lag_order());
}

QuantileMatrix WnwModel::predict(const LagDataset& queries, std::span<const double> taus, std::size_t threads) const {
  if (queries.lag_order() != lag_order()) {
    throw std::invalid_argument("queries have " + std::to_string(queries.lag_order()) + " lags, model expects " +
                                std::to_string(lag_order()));
  }
  QuantileMatrix out;
  out.rows = queries.size();
  out.cols = taus.size();
  out.values.assign(out.rows * out.cols, 0.0);
  out.covered.assign(out.rows, 1);
  parallel_for(out.rows, threads, [&](std::size_t r) {
    const auto q = weighted_quantiles(wnw_weights(*train_, queries.x(r), bandwidths_), train_->responses(), taus);
    std::copy(q.begin(), q.end(), out.values.begin() + static_cast<std::ptrdiff_t>(r * out.cols));
  });
  return out;
}

WnwModel fit_wnw(std::shared_ptr<const LagDataset> train, const WnwConfig& config, std::span<const double> taus) {
  if (!train || train->empty()) throw std::invalid_argument("WNW needs training data");
  std::vector<double> h;
  if (!config.bandwidths.empty()) {
    h = config.bandwidths;
  } else if (config.cross_validate) {
    h = cross_validate_bandwidth(*train, taus);
  } else {
    h = bandwidth_rule_of_thumb(*train);
  }
  return WnwModel(std::move(train), std::move(h));
}

}  // namespace tsqrf
