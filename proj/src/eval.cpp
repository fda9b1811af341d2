#include "tsqrf/eval.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "tsqrf/csv.hpp"
#include "tsqrf/estimator.hpp"
#include "tsqrf/parallel.hpp"

namespace tsqrf {
namespace {

std::string number(double v) { return std::isnan(v) ? "NA" : csv::format_exact(v); }

/// Estimates for `queries` at `taus` from one fitted method; NaN-free or throws.
QuantileMatrix estimate(Method method, const DgpSpec& spec, const LagDataset& queries, std::span<const double> taus,
                        const Forest* forest, const WnwModel* wnw) {
  switch (method) {
    case Method::Tsqrf: {
      QuantileMatrix m = predict_quantiles(*forest, queries, taus);
      for (std::size_t r = 0; r < m.rows; ++r) {
        if (!m.covered[r]) throw UncoveredQuery();
      }
      return m;
    }
    case Method::Wnw:
      return wnw->predict(queries, taus);
    case Method::Oracle: {
      QuantileMatrix m;
      m.rows = queries.size();
      m.cols = taus.size();
      m.covered.assign(m.rows, 1);
      m.values.reserve(m.rows * m.cols);
      for (std::size_t r = 0; r < m.rows; ++r) {
        for (double tau : taus) m.values.push_back(true_quantile(spec, queries.x(r), tau));
      }
      return m;
    }
  }
  throw std::invalid_argument("unknown method");
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::Tsqrf: return "tsqrf";
    case Method::Wnw: return "wnw";
    case Method::Oracle: return "oracle";
  }
  return "?";
}

std::string to_string(DataSplit split) { return split == DataSplit::Train ? "train" : "test"; }

Method parse_method(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "tsqrf") return Method::Tsqrf;
  if (t == "wnw") return Method::Wnw;
  if (t == "oracle") return Method::Oracle;
  throw std::invalid_argument("unknown method '" + std::string(text) + "' (expected tsqrf, wnw or oracle)");
}

double BiasSample::mean() const {
  if (biases.empty()) throw std::invalid_argument("empty bias sample");
  double s = 0.0;
  for (double b : biases) s += b;
  return s / static_cast<double>(biases.size());
}

BiasSummary mbias_sdbias_mse(std::span<const BiasSample> samples) {
  const std::size_t r = samples.size();
  if (r < 2) throw std::invalid_argument("SDBias needs at least 2 replicates");
  BiasSummary out;
  std::vector<double> means;
  means.reserve(r);
  for (const auto& s : samples) {
    means.push_back(s.mean());
    double sq = 0.0;
    for (double b : s.biases) sq += b * b;
    out.mse += sq / static_cast<double>(s.biases.size());
  }
  for (double m : means) out.mbias += m;
  out.mbias /= static_cast<double>(r);
  out.mse /= static_cast<double>(r);
  double ss = 0.0;
  for (double m : means) ss += (m - out.mbias) * (m - out.mbias);
  out.sdbias = std::sqrt(ss / static_cast<double>(r - 1));
  return out;
}

double empirical_coverage(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw std::invalid_argument("coverage: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("coverage: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) hits += actual[i] <= predicted[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(actual.size());
}

void SimulationGrid::validate() const {
  if (models.empty() || errors.empty() || train_lengths.empty() || taus.empty() || methods.empty()) {
    throw std::invalid_argument("simulation grid has an empty axis");
  }
  if (replicates == 0) throw std::invalid_argument("replicates must be positive");
  if (!evaluate_train && !evaluate_test) throw std::invalid_argument("nothing to evaluate");
  if (evaluate_test && test_length == 0) throw std::invalid_argument("test evaluation needs test_length > 0");
  for (double tau : taus) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("quantile levels must lie in (0, 1)");
  }
  for (auto t : train_lengths) {
    if (t < 2) throw std::invalid_argument("training length must be at least 2");
  }
  forest.validate();
}

std::uint64_t replicate_seed(std::uint64_t master, Model model, ErrorDist error, std::size_t train_length,
                             std::size_t replicate) {
  std::uint64_t key = derive_seed(master, static_cast<std::uint64_t>(model));
  key = derive_seed(key, static_cast<std::uint64_t>(error));
  key = derive_seed(key, train_length);
  return derive_seed(key, replicate);
}

SimulationResult run_simulation(const SimulationGrid& grid, std::size_t threads) {
  grid.validate();

  struct Scenario {
    DgpSpec spec;
    std::size_t train_length;
  };
  std::vector<Scenario> scenarios;
  for (Model m : grid.models) {
    for (ErrorDist e : grid.errors) {
      for (std::size_t t : grid.train_lengths) scenarios.push_back({{m, e}, t});
    }
  }

  std::vector<DataSplit> splits;
  if (grid.evaluate_train) splits.push_back(DataSplit::Train);
  if (grid.evaluate_test) splits.push_back(DataSplit::Test);

  const std::size_t n_tau = grid.taus.size();
  const std::size_t n_method = grid.methods.size();
  const std::size_t n_split = splits.size();
  const std::size_t cells = n_method * n_split * n_tau;
  auto cell_of = [&](std::size_t method, std::size_t split, std::size_t tau) {
    return (method * n_split + split) * n_tau + tau;
  };

  // job = (scenario, replicate); each fills one BiasSample per cell
  const std::size_t jobs = scenarios.size() * grid.replicates;
  std::vector<std::vector<BiasSample>> results(jobs);

  parallel_for(jobs, threads, [&](std::size_t job) {
    const Scenario& sc = scenarios[job / grid.replicates];
    const std::size_t rep = job % grid.replicates;
    const std::size_t p = sc.spec.p();
    const std::size_t test_len = grid.evaluate_test ? grid.test_length : 0;
    const std::uint64_t seed = replicate_seed(grid.seed, sc.spec.model, sc.spec.error, sc.train_length, rep);

    try {
      const Series path = simulate_path(sc.spec, p + sc.train_length + test_len, grid.burn_in, seed);
      const LagDataset all = embed(path, p);
      auto train = std::make_shared<const LagDataset>(all.slice(0, sc.train_length));
      const LagDataset test = all.slice(sc.train_length, all.size());

      std::vector<BiasSample> out(cells);
      for (std::size_t mi = 0; mi < n_method; ++mi) {
        const Method method = grid.methods[mi];
        std::optional<Forest> forest;
        std::optional<WnwModel> wnw;
        if (method == Method::Tsqrf) {
          ForestConfig cfg = grid.forest;
          cfg.seed = derive_seed(seed, 0xF0);
          forest.emplace(fit_forest(train, cfg, 1));
        } else if (method == Method::Wnw) {
          wnw.emplace(fit_wnw(train, grid.wnw, grid.taus));
        }
        for (std::size_t si = 0; si < n_split; ++si) {
          const LagDataset& queries = splits[si] == DataSplit::Train ? *train : test;
          const QuantileMatrix q =
              estimate(method, sc.spec, queries, grid.taus, forest ? &*forest : nullptr, wnw ? &*wnw : nullptr);
          for (std::size_t ti = 0; ti < n_tau; ++ti) {
            BiasSample& bs = out[cell_of(mi, si, ti)];
            bs.replicate = rep;
            bs.biases.resize(queries.size());
            for (std::size_t r = 0; r < queries.size(); ++r) {
              bs.biases[r] = q(r, ti) - true_quantile(sc.spec, queries.x(r), grid.taus[ti]);
            }
          }
        }
      }
      results[job] = std::move(out);
    } catch (const std::exception& ex) {
      throw std::runtime_error("replicate " + std::to_string(rep) + " of model " + to_string(sc.spec.model) +
                               "/" + to_string(sc.spec.error) + " T=" + std::to_string(sc.train_length) +
                               " failed: " + ex.what());
    }
  });

  SimulationResult result;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const Scenario& sc = scenarios[s];
    for (std::size_t ti = 0; ti < n_tau; ++ti) {
      for (std::size_t mi = 0; mi < n_method; ++mi) {
        for (std::size_t si = 0; si < n_split; ++si) {
          std::vector<BiasSample> samples;
          samples.reserve(grid.replicates);
          for (std::size_t rep = 0; rep < grid.replicates; ++rep) {
            samples.push_back(results[s * grid.replicates + rep][cell_of(mi, si, ti)]);
          }
          MetricsRow row;
          row.model = sc.spec.model;
          row.error = sc.spec.error;
          row.train_length = sc.train_length;
          row.tau = grid.taus[ti];
          row.method = grid.methods[mi];
          row.split = splits[si];
          row.replicates = grid.replicates;
          if (grid.replicates >= 2) {
            const BiasSummary m = mbias_sdbias_mse(samples);
            row.mbias = m.mbias;
            row.sdbias = m.sdbias;
            row.mse = m.mse;
          } else {
            row.mbias = samples[0].mean();
            row.sdbias = std::numeric_limits<double>::quiet_NaN();
            double sq = 0.0;
            for (double b : samples[0].biases) sq += b * b;
            row.mse = sq / static_cast<double>(samples[0].biases.size());
          }
          // equal horizons per replicate, so MBias is also the pooled mean
          if (row.mse + 1e-12 * (1.0 + row.mse) < row.mbias * row.mbias) {
            throw std::logic_error("metrics report violates MSE >= MBias^2");
          }
          result.rows.push_back(row);
          for (const auto& bs : samples) {
            result.raw.push_back({row.model, row.error, row.train_length, row.tau, row.method, row.split,
                                  bs.replicate, bs.mean()});
          }
        }
      }
    }
  }
  return result;
}

std::size_t train_length_from_fraction(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("train fraction must lie in (0, 1)");
  if (n < 2) throw std::invalid_argument("series too short to split");
  const auto len = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(len, 1, n - 1);
}

std::vector<CoverageRow> run_coverage_study(const Series& series, std::size_t train_length,
                                            const CoverageStudy& study, std::size_t threads) {
  const std::size_t p = study.lag_order;
  if (train_length <= p + 1 || train_length >= series.size()) {
    throw std::invalid_argument("training block must hold more than p + 1 values and leave a test block");
  }
  const LagDataset all = embed(series, p);
  // pair i has response index p + i
  const std::size_t n_train = train_length - p;
  auto train = std::make_shared<const LagDataset>(all.slice(0, n_train));
  const LagDataset test = all.slice(n_train, all.size());

  std::vector<CoverageRow> rows;
  std::vector<std::pair<Method, std::array<QuantileMatrix, 2>>> fitted;
  for (Method method : study.methods) {
    std::array<QuantileMatrix, 2> q;
    if (method == Method::Tsqrf) {
      const Forest forest = fit_forest(train, study.forest, threads);
      q[0] = predict_quantiles(forest, *train, study.taus, threads);
      q[1] = predict_quantiles(forest, test, study.taus, threads);
    } else if (method == Method::Wnw) {
      const WnwModel model = fit_wnw(train, study.wnw, study.taus);
      q[0] = model.predict(*train, study.taus, threads);
      q[1] = model.predict(test, study.taus, threads);
    } else {
      throw std::invalid_argument("coverage study supports tsqrf and wnw only");
    }
    fitted.emplace_back(method, std::move(q));
  }

  for (std::size_t s = 0; s < 2; ++s) {
    const LagDataset& data = s == 0 ? *train : test;
    for (const auto& [method, q] : fitted) {
      for (std::size_t ti = 0; ti < study.taus.size(); ++ti) {
        std::vector<double> predicted(data.size());
        for (std::size_t r = 0; r < data.size(); ++r) {
          if (!q[s].covered[r]) throw UncoveredQuery();
          predicted[r] = q[s](r, ti);
        }
        rows.push_back({s == 0 ? DataSplit::Train : DataSplit::Test, method, study.taus[ti],
                        empirical_coverage(predicted, data.responses())});
      }
    }
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << "model,error,T,tau,method,mbias,sdbias,mse,R\n";
  for (const auto& r : rows) {
    out << to_string(r.model) << ',' << to_string(r.error) << ',' << r.train_length << ','
        << csv::format_level(r.tau) << ',' << to_string(r.method) << ',' << number(r.mbias) << ','
        << number(r.sdbias) << ',' << number(r.mse) << ',' << r.replicates << '\n';
  }
}

void write_metrics_json(std::ostream& out, std::span<const MetricsRow> rows) {
  nlohmann::ordered_json doc;
  doc["schema"] = "tsqrf-metrics";
  doc["version"] = kReportSchemaVersion;
  auto& arr = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["model"] = to_string(r.model);
    j["error"] = to_string(r.error);
    j["T"] = r.train_length;
    j["tau"] = r.tau;
    j["method"] = to_string(r.method);
    j["split"] = to_string(r.split);
    j["mbias"] = r.mbias;
    j["sdbias"] = std::isnan(r.sdbias) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.sdbias);
    j["mse"] = r.mse;
    j["R"] = r.replicates;
    arr.push_back(std::move(j));
  }
  out << doc.dump(2) << '\n';
}

void write_bias_csv(std::ostream& out, std::span<const BiasRecord> raw) {
  out << "model,error,T,tau,method,split,replicate,bias\n";
  for (const auto& r : raw) {
    out << to_string(r.model) << ',' << to_string(r.error) << ',' << r.train_length << ','
        << csv::format_level(r.tau) << ',' << to_string(r.method) << ',' << to_string(r.split) << ','
        << r.replicate << ',' << number(r.bias) << '\n';
  }
}

void write_coverage_csv(std::ostream& out, std::span<const CoverageRow> rows) {
  out << "split,method,tau,theta\n";
  for (const auto& r : rows) {
    out << to_string(r.split) << ',' << to_string(r.method) << ',' << csv::format_level(r.tau) << ','
        << number(r.theta) << '\n';
  }
}

}  // namespace tsqrf
