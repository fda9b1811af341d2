#include "tsqrf/model_io.hpp"

#include <fstream>

#include <json.hpp>

namespace tsqrf {
namespace {

using nlohmann::json;

json dataset_to_json(const LagDataset& data) {
  return json{{"lag_order", data.lag_order()},
              {"covariates", data.covariates()},
              {"responses", data.responses()},
              {"time_index", data.time_index()}};
}

LagDataset dataset_from_json(const json& j) {
  return LagDataset(j.at("lag_order").get<std::size_t>(), j.at("covariates").get<std::vector<double>>(),
                    j.at("responses").get<std::vector<double>>(),
                    j.at("time_index").get<std::vector<std::size_t>>());
}

json config_to_json(const ForestConfig& c) {
  return json{{"num_trees", c.num_trees},   {"subsample_fraction", c.subsample_fraction},
              {"omega", c.omega},           {"min_leaf_k", c.min_leaf_k},
              {"mtry_mean", c.mtry_mean},   {"tau_levels", c.tau_levels},
              {"seed", c.seed}};
}

ForestConfig config_from_json(const json& j) {
  ForestConfig c;
  c.num_trees = j.at("num_trees").get<std::size_t>();
  c.subsample_fraction = j.at("subsample_fraction").get<double>();
  c.omega = j.at("omega").get<double>();
  c.min_leaf_k = j.at("min_leaf_k").get<std::size_t>();
  c.mtry_mean = j.at("mtry_mean").get<std::size_t>();
  c.tau_levels = j.at("tau_levels").get<std::vector<double>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

json tree_to_json(const Tree& tree) {
  json leaf = json::array(), direction = json::array(), threshold = json::array(), left = json::array(),
       right = json::array(), flag = json::array(), samples = json::array();
  for (const TreeNode& n : tree.nodes()) {
    leaf.push_back(n.is_leaf ? 1 : 0);
    direction.push_back(n.direction);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    flag.push_back(static_cast<int>(n.flag));
    samples.push_back(n.samples);
  }
  return json{{"seed", tree.seed()},
              {"a_i", tree.double_sample().a_i},
              {"a_j", tree.double_sample().a_j},
              {"nodes",
               {{"leaf", leaf},
                {"direction", direction},
                {"threshold", threshold},
                {"left", left},
                {"right", right},
                {"flag", flag},
                {"samples", samples}}}};
}

Tree tree_from_json(const json& j, std::size_t lag_order) {
  const json& nodes = j.at("nodes");
  const auto leaf = nodes.at("leaf").get<std::vector<int>>();
  const auto direction = nodes.at("direction").get<std::vector<std::uint32_t>>();
  const auto threshold = nodes.at("threshold").get<std::vector<double>>();
  const auto left = nodes.at("left").get<std::vector<std::uint32_t>>();
  const auto right = nodes.at("right").get<std::vector<std::uint32_t>>();
  const auto flag = nodes.at("flag").get<std::vector<int>>();
  const auto samples = nodes.at("samples").get<std::vector<std::vector<std::uint32_t>>>();
  const std::size_t n = leaf.size();
  if (direction.size() != n || threshold.size() != n || left.size() != n || right.size() != n ||
      flag.size() != n || samples.size() != n) {
    throw ModelFormatError("tree node arrays have inconsistent lengths");
  }
  std::vector<TreeNode> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (flag[i] < 0 || flag[i] > 2) throw ModelFormatError("unknown leaf flag");
    out[i] = TreeNode{leaf[i] != 0, direction[i], threshold[i], left[i], right[i], static_cast<LeafFlag>(flag[i]),
                      samples[i]};
  }
  DoubleSample ds{j.at("a_i").get<std::vector<std::uint32_t>>(), j.at("a_j").get<std::vector<std::uint32_t>>()};
  return Tree(lag_order, std::move(out), std::move(ds), j.at("seed").get<std::uint64_t>());
}

}  // namespace

void save_model(std::ostream& out, const FittedModel& model) {
  json doc;
  doc["format"] = "tsqrf-model";
  doc["version"] = kModelFormatVersion;
  if (const auto* forest = std::get_if<Forest>(&model)) {
    doc["method"] = "tsqrf";
    doc["data"] = dataset_to_json(forest->data());
    json trees = json::array();
    for (const Tree& t : forest->trees()) trees.push_back(tree_to_json(t));
    doc["forest"] = {{"config", config_to_json(forest->config())}, {"trees", std::move(trees)}};
  } else {
    const auto& wnw = std::get<WnwModel>(model);
    doc["method"] = "wnw";
    doc["data"] = dataset_to_json(wnw.data());
    doc["wnw"] = {{"bandwidths", wnw.bandwidths()}};
  }
  out << doc.dump() << '\n';
}

FittedModel load_model(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& ex) {
    throw ModelFormatError(std::string("model file is not valid JSON: ") + ex.what());
  }
  if (doc.value("format", "") != "tsqrf-model") throw ModelFormatError("not a tsqrf model file");
  const int version = doc.value("version", -1);
  if (version != kModelFormatVersion) {
    throw ModelFormatError("unsupported model format version " + std::to_string(version) + " (expected " +
                           std::to_string(kModelFormatVersion) + ")");
  }
  try {
    auto data = std::make_shared<const LagDataset>(dataset_from_json(doc.at("data")));
    const std::string method = doc.at("method").get<std::string>();
    if (method == "tsqrf") {
      const json& f = doc.at("forest");
      std::vector<Tree> trees;
      for (const json& t : f.at("trees")) trees.push_back(tree_from_json(t, data->lag_order()));
      return Forest(std::move(data), config_from_json(f.at("config")), std::move(trees));
    }
    if (method == "wnw") {
      return WnwModel(std::move(data), doc.at("wnw").at("bandwidths").get<std::vector<double>>());
    }
    throw ModelFormatError("unknown model method '" + method + "'");
  } catch (const json::exception& ex) {
    throw ModelFormatError(std::string("malformed model file: ") + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ModelFormatError(std::string("inconsistent model file: ") + ex.what());
  }
}

void save_model_file(const std::string& path, const FittedModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  save_model(out, model);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

FittedModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  return load_model(in);
}

std::size_t lag_order(const FittedModel& model) {
  return std::visit([](const auto& m) { return m.lag_order(); }, model);
}

QuantileMatrix predict(const FittedModel& model, const LagDataset& queries, std::span<const double> taus,
                       std::size_t threads) {
  if (const auto* forest = std::get_if<Forest>(&model)) return predict_quantiles(*forest, queries, taus, threads);
  return std::get<WnwModel>(model).predict(queries, taus, threads);
}

}  // namespace tsqrf
