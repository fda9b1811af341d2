#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "tsqrf/csv.hpp"
#include "tsqrf/eval.hpp"
#include "tsqrf/model_io.hpp"
#include "tsqrf/series.hpp"
#include "tsqrf/svg.hpp"
#include "tsqrf/synth.hpp"

namespace tsqrf::cli {
namespace {

namespace fs = std::filesystem;

/// Thrown for bad option values detected after CLI11 parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Option sets

struct SimulateOptions {
  std::string model = "a";
  std::string error = "normal";
  std::size_t length = 1000;
  std::size_t burn_in = kDefaultBurnIn;
  std::uint64_t seed = 1;
  std::vector<double> taus{0.1, 0.5, 0.9};
  std::string out;
  std::string truth;
};

struct SeriesInput {
  std::string path;
  std::string column = "y";
  bool drop_missing = false;
  bool log_returns = false;
};

struct ForestOptions {
  std::size_t trees = 2000;
  double subsample = 0.5;
  double omega = 0.05;
  std::size_t k = 5;
  std::size_t mtry = 0;
  std::vector<double> split_taus{0.1, 0.5, 0.9};
  std::uint64_t seed = 42;

  ForestConfig config() const {
    ForestConfig c;
    c.num_trees = trees;
    c.subsample_fraction = subsample;
    c.omega = omega;
    c.min_leaf_k = k;
    c.mtry_mean = mtry;
    c.tau_levels = split_taus;
    c.seed = seed;
    return c;
  }
};

struct WnwOptions {
  std::vector<double> bandwidths;
  bool cross_validate = false;

  WnwConfig config() const { return {bandwidths, cross_validate}; }
};

struct FitOptions {
  SeriesInput input;
  std::size_t p = 1;
  std::string method = "tsqrf";
  ForestOptions forest;
  WnwOptions wnw;
  std::vector<double> cv_taus{0.1, 0.5, 0.9};
  std::size_t threads = 1;
  std::string out;
};

struct PredictOptions {
  std::string model;
  std::string queries;
  SeriesInput input;
  std::vector<double> taus{0.1, 0.5, 0.9};
  std::size_t threads = 1;
  std::string out;
};

struct BenchOptions {
  std::vector<std::string> models{"a", "b", "c", "d"};
  std::vector<std::string> errors{"normal", "laplace"};
  std::vector<std::size_t> lengths{1000};
  std::size_t test_length = 500;
  std::size_t replicates = 20;
  std::vector<double> taus;
  std::vector<std::string> methods{"tsqrf", "wnw"};
  std::size_t burn_in = kDefaultBurnIn;
  std::uint64_t seed = 20240601;
  std::string split = "both";
  ForestOptions forest;
  WnwOptions wnw;
  std::size_t threads = 1;
  std::string out_dir = ".";
  // real-data mode
  std::string real;
  std::string column = "close";
  bool drop_missing = true;
  bool no_log_returns = false;
  double train_frac = 2.0 / 3.0;
  std::size_t p = 2;
};

struct PlotOptions {
  std::string kind;
  std::string input;
  std::string out;
  std::string column = "bias";
  std::string title;
  std::size_t bins = 20;
  std::string series;
  std::string series_column = "y";
};

void add_forest_options(CLI::App& app, ForestOptions& o) {
  app.add_option("--trees", o.trees, "Number of trees B")->capture_default_str();
  app.add_option("--subsample", o.subsample, "Subsample fraction s/T")->capture_default_str();
  app.add_option("--omega", o.omega, "Minimum J-fraction per child, in (0, 0.2]")->capture_default_str();
  app.add_option("--k", o.k, "Leaf occupancy parameter k")->capture_default_str();
  app.add_option("--mtry", o.mtry, "Poisson mean of candidate directions (0 = auto)")->capture_default_str();
  app.add_option("--split-taus", o.split_taus, "Levels used by the split criterion")
      ->delimiter(',')
      ->capture_default_str();
}

void add_wnw_options(CLI::App& app, WnwOptions& o) {
  app.add_option("--bandwidth", o.bandwidths, "WNW bandwidths, one per lag (default: rule of thumb)")
      ->delimiter(',');
  app.add_flag("--cv", o.cross_validate, "Choose WNW bandwidth by leave-one-out pinball loss");
}

void add_series_input(CLI::App& app, SeriesInput& in, bool required) {
  auto* opt = app.add_option("--data", in.path, "Series CSV with a header row");
  if (required) opt->required();
  app.add_option("--column", in.column, "Column holding the series")->capture_default_str();
  app.add_flag("--drop-missing", in.drop_missing, "Skip rows with missing values");
  app.add_flag("--log-returns", in.log_returns, "Transform prices to log returns first");
}

Series read_series(const SeriesInput& in) {
  Series s = load_series_csv(in.path, in.column, in.drop_missing);
  return in.log_returns ? log_returns(s) : s;
}

void check_taus(const std::vector<double>& taus) {
  if (taus.empty()) throw UsageError("at least one quantile level is required");
  for (double t : taus) {
    if (!(t > 0.0 && t < 1.0)) throw UsageError("quantile levels must lie in (0, 1)");
  }
}

std::ofstream open_output(const std::string& path) {
  if (path.empty()) throw UsageError("output path is required");
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  auto out = open_output(path);
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string quantile_header(const std::vector<double>& taus) {
  std::string h = "t";
  for (double tau : taus) h += ",q_" + csv::format_level(tau);
  return h;
}

std::string prediction_csv(const std::vector<std::string>& labels, const QuantileMatrix& q,
                           const std::vector<double>& taus) {
  std::ostringstream out;
  out << quantile_header(taus) << '\n';
  for (std::size_t r = 0; r < q.rows; ++r) {
    out << labels[r];
    for (std::size_t c = 0; c < q.cols; ++c) {
      out << ',' << (q.covered[r] ? csv::format_exact(q(r, c)) : std::string("NA"));
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Commands

void cmd_simulate(const SimulateOptions& o, std::ostream& log) {
  check_taus(o.taus);
  if (o.length == 0) throw UsageError("--T must be positive");
  const DgpSpec spec{parse_model(o.model), parse_error(o.error)};
  const Series path = simulate_path(spec, o.length, o.burn_in, o.seed);

  std::ostringstream series;
  series << "t,y\n";
  for (std::size_t t = 0; t < path.size(); ++t) series << t + 1 << ',' << csv::format_exact(path[t]) << '\n';
  write_file(o.out, series.str());

  const std::string truth_path =
      o.truth.empty() ? (fs::path(o.out).replace_extension("").string() + ".truth.csv") : o.truth;
  std::ostringstream truth;
  truth << quantile_header(o.taus) << '\n';
  if (path.size() > spec.p()) {
    const LagDataset pairs = embed(path, spec.p());
    for (std::size_t r = 0; r < pairs.size(); ++r) {
      truth << pairs.time_index()[r] + 1;
      for (double tau : o.taus) truth << ',' << csv::format_exact(true_quantile(spec, pairs.x(r), tau));
      truth << '\n';
    }
  }
  write_file(truth_path, truth.str());
  log << "wrote " << o.out << " and " << truth_path << '\n';
}

void cmd_fit(const FitOptions& o, std::ostream& log) {
  if (o.p == 0) throw UsageError("--p must be positive");
  const Series series = read_series(o.input);
  auto data = std::make_shared<const LagDataset>(embed(series, o.p));
  const Method method = parse_method(o.method);
  if (method == Method::Tsqrf) {
    const ForestConfig config = o.forest.config();
    config.validate();
    save_model_file(o.out, fit_forest(data, config, o.threads));
  } else if (method == Method::Wnw) {
    check_taus(o.cv_taus);
    save_model_file(o.out, fit_wnw(data, o.wnw.config(), o.cv_taus));
  } else {
    throw UsageError("fit supports --method tsqrf or wnw");
  }
  log << "fitted " << o.method << " on " << data->size() << " pairs; wrote " << o.out << '\n';
}

LagDataset read_queries(const std::string& path, std::size_t p, std::vector<std::string>& labels) {
  const csv::Table table = csv::read_file(path);
  const auto t_col = table.column("t");
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (!t_col || c != *t_col) cols.push_back(c);
  }
  if (cols.size() != p) {
    throw std::invalid_argument("query file has " + std::to_string(cols.size()) + " covariate columns, model expects " +
                                std::to_string(p));
  }
  if (table.rows.empty()) throw std::invalid_argument("query file has no rows");
  std::vector<double> cov;
  std::vector<double> resp(table.rows.size(), 0.0);
  std::vector<std::size_t> idx(table.rows.size());
  labels.clear();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    for (std::size_t c : cols) {
      const auto v = c < row.size() ? csv::parse_double(row[c]) : std::nullopt;
      if (!v) throw std::invalid_argument("bad covariate at line " + std::to_string(r + 2) + " of " + path);
      cov.push_back(*v);
    }
    labels.push_back(t_col && *t_col < row.size() ? row[*t_col] : std::to_string(r + 1));
    idx[r] = r;
  }
  return LagDataset(p, std::move(cov), std::move(resp), std::move(idx));
}

void cmd_predict(const PredictOptions& o, std::ostream& log) {
  check_taus(o.taus);
  if (o.queries.empty() == o.input.path.empty()) throw UsageError("give exactly one of --queries or --data");
  const FittedModel model = load_model_file(o.model);
  const std::size_t p = lag_order(model);
  std::vector<std::string> labels;
  LagDataset queries;
  if (!o.queries.empty()) {
    queries = read_queries(o.queries, p, labels);
  } else {
    queries = embed(read_series(o.input), p);
    for (auto t : queries.time_index()) labels.push_back(std::to_string(t + 1));
  }
  const QuantileMatrix q = predict(model, queries, o.taus, o.threads);
  write_file(o.out, prediction_csv(labels, q, o.taus));
  log << "wrote " << q.rows << " predictions to " << o.out << '\n';
}

template <typename T, typename F>
std::vector<T> parse_all(const std::vector<std::string>& items, F parse) {
  std::vector<T> out;
  for (const auto& s : items) out.push_back(parse(s));
  return out;
}

void cmd_bench(const BenchOptions& o, std::ostream& log) {
  const auto methods = parse_all<Method>(o.methods, parse_method);
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);

  if (!o.real.empty()) {
    std::vector<double> taus = o.taus.empty() ? std::vector<double>{0.025, 0.1, 0.5, 0.9, 0.975} : o.taus;
    check_taus(taus);
    Series series = load_series_csv(o.real, o.column, o.drop_missing);
    if (!o.no_log_returns) series = log_returns(series);
    CoverageStudy study;
    study.lag_order = o.p;
    study.taus = taus;
    study.methods = methods;
    study.forest = o.forest.config();
    study.wnw = o.wnw.config();
    const std::size_t train_len = train_length_from_fraction(series.size(), o.train_frac);
    const auto rows = run_coverage_study(series, train_len, study, o.threads);
    std::ostringstream out;
    write_coverage_csv(out, rows);
    write_file((dir / "coverage.csv").string(), out.str());
    log << "coverage table (" << rows.size() << " rows, train length " << train_len << ") written to "
        << (dir / "coverage.csv").string() << '\n';
    return;
  }

  SimulationGrid grid;
  grid.models = parse_all<Model>(o.models, parse_model);
  grid.errors = parse_all<ErrorDist>(o.errors, parse_error);
  grid.train_lengths = o.lengths;
  grid.test_length = o.test_length;
  grid.taus = o.taus.empty() ? std::vector<double>{0.1, 0.5, 0.9} : o.taus;
  check_taus(grid.taus);
  grid.methods = methods;
  grid.replicates = o.replicates;
  grid.seed = o.seed;
  grid.burn_in = o.burn_in;
  grid.forest = o.forest.config();
  grid.wnw = o.wnw.config();
  if (o.split == "train") {
    grid.evaluate_test = false;
  } else if (o.split == "test") {
    grid.evaluate_train = false;
  } else if (o.split != "both") {
    throw UsageError("--split must be train, test or both");
  }

  const SimulationResult result = run_simulation(grid, o.threads);
  for (DataSplit split : {DataSplit::Train, DataSplit::Test}) {
    std::vector<MetricsRow> rows;
    std::copy_if(result.rows.begin(), result.rows.end(), std::back_inserter(rows),
                 [&](const MetricsRow& r) { return r.split == split; });
    if (rows.empty()) continue;
    std::ostringstream out;
    write_metrics_csv(out, rows);
    write_file((dir / ("report_" + to_string(split) + ".csv")).string(), out.str());
  }
  std::ostringstream json;
  write_metrics_json(json, result.rows);
  write_file((dir / "report.json").string(), json.str());
  std::ostringstream raw;
  write_bias_csv(raw, result.raw);
  write_file((dir / "bias_samples.csv").string(), raw.str());
  log << "bench: " << result.rows.size() << " metric rows written to " << dir.string() << '\n';
}

void cmd_plot(const PlotOptions& o, std::ostream& log) {
  const csv::Table table = csv::read_file(o.input);
  if (table.rows.empty()) throw std::invalid_argument("plot input '" + o.input + "' has no data rows");
  std::string svg_text;
  if (o.kind == "band") {
    const auto t_col = table.column("t");
    std::vector<std::size_t> q_cols;
    std::vector<double> levels;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const std::string& h = table.header[c];
      if (h.rfind("q_", 0) == 0) {
        const auto level = csv::parse_double(std::string_view(h).substr(2));
        if (!level) throw std::invalid_argument("bad quantile column '" + h + "'");
        q_cols.push_back(c);
        levels.push_back(*level);
      }
    }
    if (q_cols.empty()) throw std::invalid_argument("prediction file has no q_<tau> columns");
    std::vector<double> x;
    std::vector<svg::Line> lines(q_cols.size());
    for (std::size_t i = 0; i < q_cols.size(); ++i) lines[i].name = table.header[q_cols[i]];
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      const auto t = t_col && *t_col < row.size() ? csv::parse_double(row[*t_col]) : std::nullopt;
      x.push_back(t ? *t : static_cast<double>(r + 1));
      for (std::size_t i = 0; i < q_cols.size(); ++i) {
        const auto v = q_cols[i] < row.size() ? csv::parse_double(row[q_cols[i]]) : std::nullopt;
        lines[i].values.push_back(v ? *v : std::nan(""));
      }
    }
    if (!o.series.empty()) {
      const Series s = load_series_csv(o.series, o.series_column, true);
      svg::Line actual{"actual", {}};
      for (double t : x) {
        const auto pos = static_cast<std::size_t>(t);
        actual.values.push_back(t >= 1.0 && pos <= s.size() ? s[pos - 1] : std::nan(""));
      }
      lines.push_back(std::move(actual));
    }
    const auto lo = std::min_element(levels.begin(), levels.end()) - levels.begin();
    const auto hi = std::max_element(levels.begin(), levels.end()) - levels.begin();
    svg_text = svg::line_chart(x, lines, o.title.empty() ? "Quantile band" : o.title,
                               lo != hi ? static_cast<int>(lo) : -1, lo != hi ? static_cast<int>(hi) : -1);
  } else if (o.kind == "hist") {
    const auto col = table.column(o.column);
    if (!col) throw std::invalid_argument("column '" + o.column + "' not found in " + o.input);
    std::vector<double> values;
    for (const auto& row : table.rows) {
      const auto v = *col < row.size() ? csv::parse_double(row[*col]) : std::nullopt;
      if (v) values.push_back(*v);
    }
    if (values.empty()) throw std::invalid_argument("no numeric values in column '" + o.column + "'");
    svg_text = svg::histogram(values, o.bins, o.title.empty() ? "Histogram of " + o.column : o.title);
  } else {
    throw UsageError("--kind must be band or hist");
  }
  write_file(o.out, svg_text);
  log << "wrote " << o.out << '\n';
}

void add_config_options(CLI::App& sub) {
  sub.add_option("--save-config", "Write the effective options to this file and continue")->configurable(false);
}

void save_config_if_requested(CLI::App& sub) {
  auto* opt = sub.get_option("--save-config");
  if (opt->count() == 0) return;
  std::istringstream lines(sub.config_to_str(true, false));
  std::string text = "[" + sub.get_name() + "]\n";
  for (std::string line; std::getline(lines, line);) {
    if (line.size() >= 3 && line.compare(line.size() - 3, 3, "=\"\"") == 0) continue;
    text += line + '\n';
  }
  write_file(opt->as<std::string>(), text);
}

// The config file belongs to the top-level app so its [section] can feed the
// chosen subcommand. Accept it after the subcommand name too.
std::vector<std::string> hoist_config(const std::vector<std::string>& args) {
  std::vector<std::string> front;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      front.push_back(args[i]);
      front.push_back(args[++i]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      front.push_back(args[i]);
    } else {
      rest.push_back(args[i]);
    }
  }
  front.insert(front.end(), rest.begin(), rest.end());
  return front;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Honest quantile regression forests for autoregressive time series"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file with a [subcommand] section");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a path from a built-in model");
  simulate->add_option("--model", sim.model, "Model a, b, c or d")->capture_default_str();
  simulate->add_option("--error", sim.error, "normal or laplace")->capture_default_str();
  simulate->add_option("--T", sim.length, "Number of values")->capture_default_str();
  simulate->add_option("--burn-in", sim.burn_in, "Discarded warm-up values")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--taus", sim.taus, "Levels for the true-quantile sidecar")->delimiter(',')->capture_default_str();
  simulate->add_option("--out", sim.out, "Series CSV (columns t,y)")->required();
  simulate->add_option("--truth", sim.truth, "Sidecar path (default <out>.truth.csv)");
  add_config_options(*simulate);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a quantile model to a series");
  add_series_input(*fit_cmd, fit.input, true);
  fit_cmd->add_option("--p", fit.p, "Lag order")->required();
  fit_cmd->add_option("--method", fit.method, "tsqrf or wnw")->capture_default_str();
  add_forest_options(*fit_cmd, fit.forest);
  fit_cmd->add_option("--seed", fit.forest.seed, "Random seed")->capture_default_str();
  add_wnw_options(*fit_cmd, fit.wnw);
  fit_cmd->add_option("--cv-taus", fit.cv_taus, "Levels scored by --cv")->delimiter(',')->capture_default_str();
  fit_cmd->add_option("--threads", fit.threads, "Worker threads (0 = all cores)")->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "Model file")->required();
  add_config_options(*fit_cmd);

  PredictOptions pred;
  auto* predict_cmd = app.add_subcommand("predict", "Predict conditional quantiles with a saved model");
  predict_cmd->add_option("--model", pred.model, "Model file from fit")->required();
  predict_cmd->add_option("--queries", pred.queries, "CSV of query covariates (optional t column)");
  add_series_input(*predict_cmd, pred.input, false);
  predict_cmd->add_option("--taus", pred.taus, "Quantile levels")->delimiter(',')->capture_default_str();
  predict_cmd->add_option("--threads", pred.threads, "Worker threads (0 = all cores)")->capture_default_str();
  predict_cmd->add_option("--out", pred.out, "Prediction CSV")->required();
  add_config_options(*predict_cmd);

  BenchOptions bench;
  bench.forest.trees = 200;
  auto* bench_cmd = app.add_subcommand("bench", "Run the simulation study or a real-data coverage study");
  bench_cmd->add_option("--models", bench.models, "Models to simulate")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--errors", bench.errors, "Error distributions")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--T", bench.lengths, "Training lengths")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--test-T", bench.test_length, "Held-out length T'")->capture_default_str();
  bench_cmd->add_option("--R", bench.replicates, "Replicates")->capture_default_str();
  bench_cmd->add_option("--taus", bench.taus, "Quantile levels")->delimiter(',');
  bench_cmd->add_option("--methods", bench.methods, "tsqrf, wnw, oracle")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--burn-in", bench.burn_in, "Discarded warm-up values")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Master seed")->capture_default_str();
  bench_cmd->add_option("--split", bench.split, "train, test or both")->capture_default_str();
  add_forest_options(*bench_cmd, bench.forest);
  add_wnw_options(*bench_cmd, bench.wnw);
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = all cores)")->capture_default_str();
  bench_cmd->add_option("--out-dir", bench.out_dir, "Output directory")->capture_default_str();
  bench_cmd->add_option("--real", bench.real, "Price CSV for the coverage study");
  bench_cmd->add_option("--column", bench.column, "Price column")->capture_default_str();
  bench_cmd->add_option("--train-frac", bench.train_frac, "Chronological training fraction")->capture_default_str();
  bench_cmd->add_option("--p", bench.p, "Lag order for the coverage study")->capture_default_str();
  bench_cmd->add_flag("--no-log-returns", bench.no_log_returns, "Use the column as is");
  add_config_options(*bench_cmd);

  PlotOptions plot;
  auto* plot_cmd = app.add_subcommand("plot", "Render prediction bands or bias histograms as SVG");
  plot_cmd->add_option("--kind", plot.kind, "band or hist")->required();
  plot_cmd->add_option("--input", plot.input, "Prediction or bias CSV")->required();
  plot_cmd->add_option("--out", plot.out, "SVG path")->required();
  plot_cmd->add_option("--column", plot.column, "Histogram column")->capture_default_str();
  plot_cmd->add_option("--bins", plot.bins, "Histogram bins")->capture_default_str();
  plot_cmd->add_option("--title", plot.title, "Chart title");
  plot_cmd->add_option("--series", plot.series, "Series CSV to overlay on a band chart");
  plot_cmd->add_option("--series-column", plot.series_column, "Column of the overlay series")->capture_default_str();
  add_config_options(*plot_cmd);

  const std::vector<std::string> ordered = hoist_config(args);
  std::vector<std::string> reversed(ordered.rbegin(), ordered.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) save_config_if_requested(*sub);
    if (simulate->parsed()) cmd_simulate(sim, out);
    if (fit_cmd->parsed()) cmd_fit(fit, out);
    if (predict_cmd->parsed()) cmd_predict(pred, out);
    if (bench_cmd->parsed()) cmd_bench(bench, out);
    if (plot_cmd->parsed()) cmd_plot(plot, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace tsqrf::cli
