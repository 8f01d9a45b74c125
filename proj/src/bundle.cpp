#include "relkit/bundle.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace relkit::bundle {

using nlohmann::json;

namespace {

json network_to_json(const nn::NetworkModel& net) {
  json layers = json::array();
  for (const auto& layer : net.layers()) {
    json weights = json::array();
    for (std::size_t o = 0; o < layer.fan_out; ++o) {
      weights.push_back(std::vector<double>(
          layer.weights.begin() + static_cast<std::ptrdiff_t>(o * layer.fan_in),
          layer.weights.begin() + static_cast<std::ptrdiff_t>((o + 1) * layer.fan_in)));
    }
    layers.push_back({{"activation", std::string(nn::to_string(layer.activation))},
                      {"shape", {layer.fan_out, layer.fan_in}},
                      {"weights", std::move(weights)},
                      {"bias", layer.bias}});
  }
  return {{"layer_dims", net.layer_dims()}, {"layers", std::move(layers)}};
}

nn::NetworkModel network_from_json(const json& j) {
  std::vector<nn::DenseLayer> layers;
  for (const auto& jl : j.at("layers")) {
    nn::DenseLayer layer;
    const auto shape = jl.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2) throw ParseError("layer shape must have two entries");
    layer.fan_out = shape[0];
    layer.fan_in = shape[1];
    layer.activation = nn::activation_from_string(jl.at("activation").get<std::string>());
    const auto& rows = jl.at("weights");
    if (rows.size() != layer.fan_out) throw ParseError("layer weights do not match its shape");
    for (const auto& row : rows) {
      auto values = row.get<std::vector<double>>();
      if (values.size() != layer.fan_in) throw ParseError("layer weights do not match its shape");
      layer.weights.insert(layer.weights.end(), values.begin(), values.end());
    }
    layer.bias = jl.at("bias").get<std::vector<double>>();
    layers.push_back(std::move(layer));
  }
  nn::NetworkModel net(std::move(layers));
  if (j.contains("layer_dims") && j.at("layer_dims").get<std::vector<std::size_t>>() != net.layer_dims()) {
    throw ParseError("layer_dims disagree with the layer shapes");
  }
  return net;
}

json scaler_to_json(const data::MinMaxScaler& s) {
  return {{"min", s.min()}, {"max", s.max()}};
}

data::MinMaxScaler scaler_from_json(const json& j) {
  return data::MinMaxScaler(j.at("min").get<std::vector<double>>(),
                            j.at("max").get<std::vector<double>>());
}

json tree_to_json(const forest::DecisionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"probability", n.probability},
                     {"samples", n.samples}});
  }
  return {{"nodes", std::move(nodes)}};
}

forest::DecisionTree tree_from_json(const json& j) {
  std::vector<forest::TreeNode> nodes;
  for (const auto& jn : j.at("nodes")) {
    forest::TreeNode n;
    n.feature = jn.at("feature").get<int>();
    n.threshold = jn.at("threshold").get<double>();
    n.left = jn.at("left").get<int>();
    n.right = jn.at("right").get<int>();
    n.probability = jn.at("probability").get<double>();
    n.samples = jn.at("samples").get<std::size_t>();
    nodes.push_back(n);
  }
  return forest::DecisionTree(std::move(nodes));
}

json optional_string(const std::optional<std::string>& s) {
  return s ? json(*s) : json(nullptr);
}

std::optional<std::string> optional_string(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

json to_json(const ReliabilityBundle& b) {
  json encodings = json::array();
  for (const auto& e : b.schema.encodings) {
    encodings.push_back({{"column", e.column}, {"categories", e.categories}});
  }
  json proxy = {{"kind", localfit::to_string(b.localfit.proxy.kind)}};
  switch (b.localfit.proxy.kind) {
    case localfit::ProxyKind::Mlp:
      proxy["network"] = network_to_json(b.localfit.proxy.network);
      break;
    case localfit::ProxyKind::DecisionTree:
      proxy["tree"] = tree_to_json(b.localfit.proxy.tree);
      break;
    case localfit::ProxyKind::Constant:
      proxy["score"] = b.localfit.proxy.constant_score;
      break;
  }
  const auto& p = b.provenance;
  return {
      {"format", kFormatName},
      {"format_version", b.format_version},
      {"schema",
       {{"input_columns", b.schema.input_columns},
        {"feature_names", b.schema.feature_names},
        {"encodings", std::move(encodings)},
        {"label", optional_string(b.schema.label)},
        {"prediction", optional_string(b.schema.prediction)},
        {"score", optional_string(b.schema.score)}}},
      {"density",
       {{"scaler", scaler_to_json(b.density.scaler)},
        {"mse_threshold", b.density.mse_threshold},
        {"threshold_policy",
         {{"kind", density::to_string(b.density.policy.kind)}, {"value", b.density.policy.value}}},
        {"autoencoder", network_to_json(b.density.autoencoder)}}},
      {"localfit",
       {{"scaler", scaler_to_json(b.localfit.scaler)},
        {"k", b.localfit.k},
        {"accuracy_threshold", b.localfit.accuracy_threshold},
        {"decision_cutoff", b.localfit.decision_cutoff},
        {"proxy", std::move(proxy)}}},
      {"provenance",
       {{"toolkit_version", p.toolkit_version},
        {"density_seed", p.density_seed},
        {"density_epochs", p.density_epochs},
        {"noise_seed", p.noise_seed},
        {"proxy_seed", p.proxy_seed},
        {"noise_sigmas", p.noise_sigmas},
        {"copies_per_sigma", p.copies_per_sigma},
        {"synthetic_rows", p.synthetic_rows},
        {"synthetic_reliable_fraction", p.synthetic_reliable_fraction},
        {"proxy_train_accuracy", p.proxy_train_accuracy},
        {"train_rows", p.train_rows}}},
  };
}

ReliabilityBundle from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string()) != kFormatName) {
    throw ParseError("not a relkit bundle (missing \"format\": \"relkit-bundle\")");
  }
  const int version = j.at("format_version").get<int>();
  if (version != kFormatVersion) {
    throw VersionError("unsupported bundle format_version " + std::to_string(version) +
                       " (this build reads version " + std::to_string(kFormatVersion) + ")");
  }
  ReliabilityBundle b;
  b.format_version = version;

  const auto& js = j.at("schema");
  b.schema.input_columns = js.at("input_columns").get<std::vector<std::string>>();
  b.schema.feature_names = js.at("feature_names").get<std::vector<std::string>>();
  for (const auto& e : js.at("encodings")) {
    b.schema.encodings.push_back({e.at("column").get<std::string>(),
                                  e.at("categories").get<std::vector<std::string>>()});
  }
  b.schema.label = optional_string(js.at("label"));
  b.schema.prediction = optional_string(js.at("prediction"));
  b.schema.score = optional_string(js.at("score"));

  const auto& jd = j.at("density");
  b.density.scaler = scaler_from_json(jd.at("scaler"));
  b.density.mse_threshold = jd.at("mse_threshold").get<double>();
  b.density.policy.kind =
      density::threshold_kind_from_string(jd.at("threshold_policy").at("kind").get<std::string>());
  b.density.policy.value = jd.at("threshold_policy").at("value").get<double>();
  b.density.autoencoder = network_from_json(jd.at("autoencoder"));

  const auto& jl = j.at("localfit");
  b.localfit.scaler = scaler_from_json(jl.at("scaler"));
  b.localfit.k = jl.at("k").get<std::size_t>();
  b.localfit.accuracy_threshold = jl.at("accuracy_threshold").get<double>();
  b.localfit.decision_cutoff = jl.at("decision_cutoff").get<double>();
  const auto& jp = jl.at("proxy");
  b.localfit.proxy.kind = localfit::proxy_kind_from_string(jp.at("kind").get<std::string>());
  switch (b.localfit.proxy.kind) {
    case localfit::ProxyKind::Mlp:
      b.localfit.proxy.network = network_from_json(jp.at("network"));
      break;
    case localfit::ProxyKind::DecisionTree:
      b.localfit.proxy.tree = tree_from_json(jp.at("tree"));
      break;
    case localfit::ProxyKind::Constant:
      b.localfit.proxy.constant_score = jp.at("score").get<double>();
      break;
  }

  const auto& jv = j.at("provenance");
  auto& p = b.provenance;
  p.toolkit_version = jv.at("toolkit_version").get<std::string>();
  p.density_seed = jv.at("density_seed").get<std::uint64_t>();
  p.density_epochs = jv.at("density_epochs").get<int>();
  p.noise_seed = jv.at("noise_seed").get<std::uint64_t>();
  p.proxy_seed = jv.at("proxy_seed").get<std::uint64_t>();
  p.noise_sigmas = jv.at("noise_sigmas").get<std::vector<double>>();
  p.copies_per_sigma = jv.at("copies_per_sigma").get<int>();
  p.synthetic_rows = jv.at("synthetic_rows").get<std::size_t>();
  p.synthetic_reliable_fraction = jv.at("synthetic_reliable_fraction").get<double>();
  p.proxy_train_accuracy = jv.at("proxy_train_accuracy").get<double>();
  p.train_rows = jv.at("train_rows").get<std::size_t>();

  b.validate();
  return b;
}

}  // namespace

void ReliabilityBundle::validate() const {
  density.validate();
  localfit.validate();
  const std::size_t d = schema.feature_names.size();
  if (density.dim() != d || localfit.dim() != d) {
    throw ShapeError("bundle schema has " + std::to_string(d) +
                     " features but the models expect " + std::to_string(density.dim()) +
                     " and " + std::to_string(localfit.dim()));
  }
}

std::string serialize(const ReliabilityBundle& b) {
  b.validate();
  return to_json(b).dump(2) + "\n";
}

ReliabilityBundle deserialize(const std::string& text) {
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed bundle: ") + e.what());
  }
}

void save_bundle(const std::filesystem::path& path, const ReliabilityBundle& b) {
  const std::string text = serialize(b);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write bundle " + path.string());
  out << text;
  if (!out) throw ConfigError("failed writing bundle " + path.string());
}

ReliabilityBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open bundle " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace relkit::bundle
