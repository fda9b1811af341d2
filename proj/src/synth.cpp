#include "tsqrf/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

#include "tsqrf/random.hpp"

namespace tsqrf {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::invalid_argument("quantile level must lie strictly between 0 and 1");
  }
}

}  // namespace

std::size_t lag_order(Model model) {
  switch (model) {
    case Model::A: return 1;
    case Model::B: return 2;
    case Model::C: return 2;
    case Model::D: return 5;
  }
  throw std::invalid_argument("unknown model");
}

std::string to_string(Model model) {
  switch (model) {
    case Model::A: return "a";
    case Model::B: return "b";
    case Model::C: return "c";
    case Model::D: return "d";
  }
  return "?";
}

std::string to_string(ErrorDist error) {
  return error == ErrorDist::Normal ? "normal" : "laplace";
}

Model parse_model(std::string_view text) {
  const std::string t = lower(text);
  if (t == "a") return Model::A;
  if (t == "b") return Model::B;
  if (t == "c") return Model::C;
  if (t == "d") return Model::D;
  throw std::invalid_argument("unknown model '" + std::string(text) + "' (expected a, b, c or d)");
}

ErrorDist parse_error(std::string_view text) {
  const std::string t = lower(text);
  if (t == "normal") return ErrorDist::Normal;
  if (t == "laplace") return ErrorDist::Laplace;
  throw std::invalid_argument("unknown error distribution '" + std::string(text) +
                              "' (expected normal or laplace)");
}

double g_eval(const DgpSpec& spec, std::span<const double> x) {
  if (x.size() != spec.p()) {
    throw std::invalid_argument("model " + to_string(spec.model) + " expects " +
                                std::to_string(spec.p()) + " lags, got " + std::to_string(x.size()));
  }
  switch (spec.model) {
    case Model::A:
      return std::cos(5.0 * x[0]) * std::exp(-x[0] * x[0]);
    case Model::B:
      return 0.5 * x[0] + 0.4 * x[1];
    case Model::C:
      if (x[0] <= 1.0) return 2.9 - 0.4 * x[0] - 0.1 * x[1];
      return -1.5 + 0.2 * x[0] + 0.3 * x[1];
    case Model::D:
      return 0.7 * x[0] - 0.6 * x[1] + 0.4 * x[2] - 0.2 * x[3] + 0.1 * x[4];
  }
  throw std::invalid_argument("unknown model");
}

double normal_quantile(double tau) {
  check_tau(tau);
  const double q = tau - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? tau : 1.0 - tau;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                 0.24178072517745061177) * r + 1.27045825245236838258) * r +
               3.64784832476320460504) * r + 5.7694972214606914055) * r + 4.6303378461565452959) * r +
             1.42343711074968357734) /
            (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                  0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                0.68976733498510000455) * r + 1.6763848301838038494) * r + 2.05319162663775882187) * r +
             1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                 0.0012426609473880784386) * r + 0.026532189526576123093) * r +
               0.29656057182850489123) * r + 1.7848265399172913358) * r + 5.4637849111641143699) * r +
             6.6579046435011037772) /
            (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                  1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                0.0148753612908506148525) * r + 0.13692988092273580531) * r + 0.59983220655588793769) * r +
             1.0);
  }
  return q < 0.0 ? -value : value;
}

double error_quantile(ErrorDist dist, double tau) {
  check_tau(tau);
  if (dist == ErrorDist::Normal) return normal_quantile(tau);
  if (tau < 0.5) return std::log(2.0 * tau);
  return -std::log(2.0 * (1.0 - tau));
}

double true_quantile(const DgpSpec& spec, std::span<const double> x, double tau) {
  return g_eval(spec, x) + error_quantile(spec.error, tau);
}

std::vector<double> iterate_skeleton(const DgpSpec& spec, std::span<const double> state,
                                     std::span<const double> innovations) {
  const std::size_t p = spec.p();
  if (state.size() != p) throw std::invalid_argument("initial state must have p components");
  std::vector<double> lags(state.begin(), state.end());
  std::vector<double> out;
  out.reserve(innovations.size());
  for (double e : innovations) {
    const double y = g_eval(spec, lags) + e;
    std::rotate(lags.rbegin(), lags.rbegin() + 1, lags.rend());
    lags[0] = y;
    out.push_back(y);
  }
  return out;
}

std::vector<double> draw_innovations(ErrorDist dist, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(count);
  if (dist == ErrorDist::Normal) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& e : out) e = normal(rng);
  } else {
    std::exponential_distribution<double> exponential(1.0);
    std::bernoulli_distribution sign(0.5);
    for (auto& e : out) {
      const double magnitude = exponential(rng);
      e = sign(rng) ? magnitude : -magnitude;
    }
  }
  return out;
}

Series simulate_path(const DgpSpec& spec, std::size_t length, std::size_t burn_in, std::uint64_t seed) {
  if (length == 0) throw std::invalid_argument("path length must be at least 1");
  const std::vector<double> innovations = draw_innovations(spec.error, burn_in + length, seed);
  const std::vector<double> zero_state(spec.p(), 0.0);
  std::vector<double> path = iterate_skeleton(spec, zero_state, innovations);
  path.erase(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(burn_in));
  return Series(std::move(path), "model-" + to_string(spec.model) + "/" + to_string(spec.error));
}

}  // namespace tsqrf
