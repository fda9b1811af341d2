#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

#include "tsqrf/estimator.hpp"
#include "tsqrf/forest.hpp"
#include "tsqrf/wnw.hpp"

namespace tsqrf {

/// A fitted quantile model as stored on disk.
using FittedModel = std::variant<Forest, WnwModel>;

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kModelFormatVersion = 1;

/// JSON document:
///   { "format": "tsqrf-model", "version": 1, "method": "tsqrf" | "wnw",
///     "data":   { "lag_order", "covariates", "responses", "time_index" },
///     "forest": { "config": {...}, "trees": [ { "seed", "a_i", "a_j",
///                 "nodes": { "leaf", "direction", "threshold", "left",
///                            "right", "flag", "samples" } } ] },
///     "wnw":    { "bandwidths": [...] } }
/// Doubles are written with round-trip precision, so a reloaded model
/// predicts bit-identically.
void save_model(std::ostream& out, const FittedModel& model);
FittedModel load_model(std::istream& in);

void save_model_file(const std::string& path, const FittedModel& model);
FittedModel load_model_file(const std::string& path);

std::size_t lag_order(const FittedModel& model);

QuantileMatrix predict(const FittedModel& model, const LagDataset& queries, std::span<const double> taus,
                       std::size_t threads = 1);

}  // namespace tsqrf
