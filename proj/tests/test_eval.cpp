#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "tsqrf/csv.hpp"
#include "tsqrf/eval.hpp"

namespace tsqrf {
namespace {

SimulationGrid small_grid() {
  SimulationGrid g;
  g.models = {Model::A, Model::C};
  g.errors = {ErrorDist::Normal};
  g.train_lengths = {150};
  g.test_length = 60;
  g.replicates = 3;
  g.forest.num_trees = 20;
  return g;
}

std::string csv_of(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  write_metrics_csv(out, rows);
  return out.str();
}

TEST(Metrics, AllZero) {
  const std::vector<BiasSample> s{{0, {0, 0, 0}}, {1, {0, 0, 0}}};
  const BiasSummary m = mbias_sdbias_mse(s);
  EXPECT_EQ(m.mbias, 0.0);
  EXPECT_EQ(m.sdbias, 0.0);
  EXPECT_EQ(m.mse, 0.0);
}

TEST(Metrics, OppositeConstantReplicates) {
  const std::vector<BiasSample> s{{0, {1, 1, 1, 1}}, {1, {-1, -1, -1, -1}}};
  const BiasSummary m = mbias_sdbias_mse(s);
  EXPECT_EQ(m.mbias, 0.0);
  EXPECT_DOUBLE_EQ(m.sdbias, std::sqrt(2.0));
  EXPECT_EQ(m.mse, 1.0);
}

TEST(Metrics, SingleReplicateRejected) {
  const std::vector<BiasSample> s{{0, {1, -1}}};
  EXPECT_EQ(s[0].mean(), 0.0);
  EXPECT_THROW(mbias_sdbias_mse(s), std::invalid_argument);
}

TEST(Metrics, PermutationInvariant) {
  std::vector<BiasSample> s;
  Rng rng(3);
  std::normal_distribution<double> z;
  for (std::size_t r = 0; r < 8; ++r) {
    std::vector<double> b(16);
    for (auto& v : b) v = std::round(z(rng) * 64.0) / 64.0;  // exact sums
    s.push_back({r, b});
  }
  const BiasSummary a = mbias_sdbias_mse(s);
  std::reverse(s.begin(), s.end());
  std::rotate(s.begin(), s.begin() + 3, s.end());
  const BiasSummary b = mbias_sdbias_mse(s);
  EXPECT_EQ(a.mbias, b.mbias);
  EXPECT_NEAR(a.sdbias, b.sdbias, 1e-15);
  EXPECT_EQ(a.mse, b.mse);
  EXPECT_GE(a.mse, a.mbias * a.mbias);
}

TEST(Coverage, Examples) {
  const double y[] = {1, 2, 3, 4};
  const double above[] = {5, 5, 5, 5};
  const double below[] = {0, 0, 0, 0};
  const double mixed[] = {1, 1, 4, 4};
  EXPECT_EQ(empirical_coverage(above, y), 1.0);
  EXPECT_EQ(empirical_coverage(below, y), 0.0);
  EXPECT_EQ(empirical_coverage(mixed, y), 0.75);
  const double short_pred[] = {1, 2};
  EXPECT_THROW(empirical_coverage(short_pred, y), std::invalid_argument);
  EXPECT_THROW(empirical_coverage(std::span<const double>{}, std::span<const double>{}), std::invalid_argument);
}

TEST(Coverage, OracleAtLargeSample) {
  const DgpSpec spec{Model::D, ErrorDist::Laplace};
  const LagDataset d = testing::simulated_pairs(Model::D, 100000, 8, ErrorDist::Laplace);
  for (double tau : {0.1, 0.5, 0.9}) {
    std::vector<double> q(d.size());
    for (std::size_t r = 0; r < d.size(); ++r) q[r] = true_quantile(spec, d.x(r), tau);
    EXPECT_NEAR(empirical_coverage(q, d.responses()), tau, 0.01);
  }
}

TEST(Simulation, OracleMethodIsPerfect) {
  SimulationGrid g = small_grid();
  g.methods = {Method::Oracle};
  g.replicates = 1;
  const SimulationResult r = run_simulation(g);
  ASSERT_EQ(r.rows.size(), 2u * 3u * 2u);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.mbias, 0.0);
    EXPECT_EQ(row.mse, 0.0);
    EXPECT_TRUE(std::isnan(row.sdbias));
    EXPECT_EQ(row.replicates, 1u);
  }
  EXPECT_NE(csv_of(r.rows).find(",0,NA,0,1\n"), std::string::npos);
}

TEST(Simulation, ShapeAndOrder) {
  SimulationGrid g = small_grid();
  const SimulationResult r = run_simulation(g);
  // scenario x tau x method x split
  ASSERT_EQ(r.rows.size(), 2u * 3u * 2u * 2u);
  EXPECT_EQ(r.rows[0].model, Model::A);
  EXPECT_EQ(r.rows[0].tau, 0.1);
  EXPECT_EQ(r.rows[0].method, Method::Tsqrf);
  EXPECT_EQ(r.rows[0].split, DataSplit::Train);
  EXPECT_EQ(r.rows[1].split, DataSplit::Test);
  EXPECT_EQ(r.rows[2].method, Method::Wnw);
  EXPECT_EQ(r.rows[4].tau, 0.5);
  EXPECT_EQ(r.rows[12].model, Model::C);
  EXPECT_EQ(r.raw.size(), r.rows.size() * g.replicates);
  for (const auto& row : r.rows) {
    EXPECT_GE(row.sdbias, 0.0);
    EXPECT_GE(row.mse + 1e-12, row.mbias * row.mbias);
  }
}

TEST(Simulation, DeterministicAndThreadIndependent) {
  const SimulationGrid g = small_grid();
  const std::string a = csv_of(run_simulation(g, 1).rows);
  EXPECT_EQ(a, csv_of(run_simulation(g, 1).rows));
  EXPECT_EQ(a, csv_of(run_simulation(g, 3).rows));
  SimulationGrid other = g;
  other.seed += 1;
  EXPECT_NE(a, csv_of(run_simulation(other, 1).rows));
}

TEST(Simulation, ReplicatesUseExactLengths) {
  // the replicate seed reproduces the path: T training pairs, T' test pairs
  SimulationGrid g = small_grid();
  g.models = {Model::B};
  g.methods = {Method::Oracle};
  g.replicates = 2;
  const SimulationResult r = run_simulation(g);
  EXPECT_EQ(replicate_seed(1, Model::A, ErrorDist::Normal, 10, 0), replicate_seed(1, Model::A, ErrorDist::Normal, 10, 0));
  EXPECT_NE(replicate_seed(1, Model::A, ErrorDist::Normal, 10, 0), replicate_seed(1, Model::A, ErrorDist::Normal, 10, 1));
  EXPECT_NE(replicate_seed(1, Model::A, ErrorDist::Normal, 10, 0), replicate_seed(1, Model::B, ErrorDist::Normal, 10, 0));
  EXPECT_EQ(r.rows.size(), 3u * 2u);
}

TEST(Simulation, TrendForModelC) {
  SimulationGrid g;
  g.models = {Model::C};
  g.errors = {ErrorDist::Normal};
  g.train_lengths = {500, 2000};
  g.taus = {0.5};
  g.methods = {Method::Tsqrf};
  g.replicates = 10;
  g.evaluate_test = false;
  const SimulationResult r = run_simulation(g);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_LT(r.rows[1].mse, r.rows[0].mse);
}

TEST(Simulation, InvalidGridAndFailures) {
  SimulationGrid g = small_grid();
  g.replicates = 0;
  EXPECT_THROW(run_simulation(g), std::invalid_argument);
  g = small_grid();
  g.taus = {1.0};
  EXPECT_THROW(run_simulation(g), std::invalid_argument);
  g = small_grid();
  g.evaluate_train = g.evaluate_test = false;
  EXPECT_THROW(run_simulation(g), std::invalid_argument);
  g = small_grid();
  g.models = {Model::B};
  g.methods = {Method::Wnw};
  g.wnw.bandwidths = {0.5};  // one bandwidth for two lags
  try {
    run_simulation(g);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("replicate 0 of model b/normal T=150"), std::string::npos) << e.what();
  }
}

TEST(Parse, Methods) {
  EXPECT_EQ(parse_method("tsqrf"), Method::Tsqrf);
  EXPECT_EQ(parse_method("WNW"), Method::Wnw);
  EXPECT_EQ(parse_method("oracle"), Method::Oracle);
  EXPECT_THROW(parse_method("knn"), std::invalid_argument);
  EXPECT_EQ(to_string(DataSplit::Test), "test");
}

TEST(Reports, CsvAndJson) {
  std::vector<MetricsRow> rows(2);
  rows[0] = {Model::C, ErrorDist::Laplace, 1000, 0.975, Method::Wnw, DataSplit::Test, -0.25, 0.5, 0.125, 20};
  rows[1] = {Model::A, ErrorDist::Normal, 500, 0.5, Method::Tsqrf, DataSplit::Train, 0.1, NAN, 0.01, 1};
  EXPECT_EQ(csv_of(rows),
            "model,error,T,tau,method,mbias,sdbias,mse,R\n"
            "c,laplace,1000,0.975,wnw,-0.25,0.5,0.125,20\n"
            "a,normal,500,0.5,tsqrf,0.1,NA,0.01,1\n");
  std::ostringstream js;
  write_metrics_json(js, rows);
  const auto doc = nlohmann::json::parse(js.str());
  EXPECT_EQ(doc["schema"], "tsqrf-metrics");
  EXPECT_EQ(doc["version"], kReportSchemaVersion);
  ASSERT_EQ(doc["rows"].size(), 2u);
  EXPECT_EQ(doc["rows"][0]["split"], "test");
  EXPECT_EQ(doc["rows"][0]["mse"], 0.125);
  EXPECT_TRUE(doc["rows"][1]["sdbias"].is_null());
}

TEST(Reports, BiasAndCoverageCsv) {
  const std::vector<BiasRecord> raw{{Model::B, ErrorDist::Normal, 100, 0.1, Method::Tsqrf, DataSplit::Train, 3, -0.5}};
  std::ostringstream b;
  write_bias_csv(b, raw);
  EXPECT_EQ(b.str(), "model,error,T,tau,method,split,replicate,bias\nb,normal,100,0.1,tsqrf,train,3,-0.5\n");
  const std::vector<CoverageRow> cov{{DataSplit::Test, Method::Wnw, 0.025, 0.96}};
  std::ostringstream c;
  write_coverage_csv(c, cov);
  EXPECT_EQ(c.str(), "split,method,tau,theta\ntest,wnw,0.025,0.96\n");
}

TEST(CoverageStudy, ShapeAndSplit) {
  const Series s = simulate_path({Model::B, ErrorDist::Normal}, 400, kDefaultBurnIn, 5);
  CoverageStudy study;
  study.forest.num_trees = 100;
  const auto rows = run_coverage_study(s, 260, study);
  ASSERT_EQ(rows.size(), 2u * 2u * 5u);
  EXPECT_EQ(rows[0].split, DataSplit::Train);
  EXPECT_EQ(rows[0].method, Method::Tsqrf);
  EXPECT_EQ(rows[0].tau, 0.025);
  EXPECT_EQ(rows[10].split, DataSplit::Test);
  for (const auto& r : rows) {
    EXPECT_GE(r.theta, 0.0);
    EXPECT_LE(r.theta, 1.0);
  }
  // theta is a multiple of 1 / (train pairs) or 1 / (test pairs)
  EXPECT_NEAR(std::fmod(rows[0].theta * 258.0 + 1e-9, 1.0), 0.0, 1e-6);
  EXPECT_NEAR(std::fmod(rows[10].theta * 140.0 + 1e-9, 1.0), 0.0, 1e-6);
  EXPECT_THROW(run_coverage_study(s, 400, study), std::invalid_argument);
  EXPECT_THROW(run_coverage_study(s, 3, study), std::invalid_argument);
}

TEST(CoverageStudy, TrainLengthFromFraction) {
  EXPECT_EQ(train_length_from_fraction(1465, 2.0 / 3.0), 977u);
  EXPECT_EQ(train_length_from_fraction(10, 0.01), 1u);
  EXPECT_EQ(train_length_from_fraction(10, 0.99), 9u);
  EXPECT_THROW(train_length_from_fraction(10, 1.0), std::invalid_argument);
  EXPECT_THROW(train_length_from_fraction(1, 0.5), std::invalid_argument);
}

}  // namespace
}  // namespace tsqrf
