#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsqrf/series.hpp"

namespace tsqrf {

/// Nonlinear autoregressive skeletons used for the simulation studies.
///   A: cos(5 y1) exp(-y1^2)                         (p = 1)
///   B: 0.5 y1 + 0.4 y2                              (p = 2)
///   C: 2.9 - 0.4 y1 - 0.1 y2 if y1 <= 1,
///      -1.5 + 0.2 y1 + 0.3 y2 otherwise             (p = 2)
///   D: 0.7 y1 - 0.6 y2 + 0.4 y3 - 0.2 y4 + 0.1 y5   (p = 5)
enum class Model { A, B, C, D };

/// Standard normal (variance 1) or standard Laplace with scale 1 (variance 2).
enum class ErrorDist { Normal, Laplace };

std::size_t lag_order(Model model);

struct DgpSpec {
  Model model = Model::A;
  ErrorDist error = ErrorDist::Normal;

  std::size_t p() const { return lag_order(model); }
};

inline constexpr std::size_t kDefaultBurnIn = 200;

std::string to_string(Model model);
std::string to_string(ErrorDist error);
/// Accepts "a".."d" (any case); throws std::invalid_argument otherwise.
Model parse_model(std::string_view text);
/// Accepts "normal" or "laplace" (any case).
ErrorDist parse_error(std::string_view text);

/// Skeleton g(x). Throws std::invalid_argument when x.size() != p.
double g_eval(const DgpSpec& spec, std::span<const double> x);

/// Inverse CDF of the error distribution. tau must lie in (0, 1).
double error_quantile(ErrorDist dist, double tau);

/// Standard normal quantile (Wichura's AS 241, about 1e-16 relative).
double normal_quantile(double tau);

/// q_0(x) = g(x) + F^{-1}(tau).
double true_quantile(const DgpSpec& spec, std::span<const double> x, double tau);

/// Iterates y_t = g(y_{t-1}, ..., y_{t-p}) + e_t from `state` (most recent
/// first) over the given innovations and returns the generated values.
std::vector<double> iterate_skeleton(const DgpSpec& spec, std::span<const double> state,
                                     std::span<const double> innovations);

/// Draws i.i.d. innovations from the error distribution.
std::vector<double> draw_innovations(ErrorDist dist, std::size_t count, std::uint64_t seed);

/// Zero initial state, `burn_in` discarded values, exactly `length` returned.
Series simulate_path(const DgpSpec& spec, std::size_t length, std::size_t burn_in,
                     std::uint64_t seed);

}  // namespace tsqrf
