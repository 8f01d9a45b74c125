#include "relkit/cli_commands.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "relkit/errors.hpp"
#include "relkit/random.hpp"

namespace relkit::cli {

using nlohmann::json;

ExitCode exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return ExitCode::SchemaMismatch;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e)) {
    return ExitCode::ConfigError;
  }
  return ExitCode::Error;
}

// ---- config parsing ------------------------------------------------------

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) {
    throw ConfigError("config field '" + where + "' must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown config field '" + (where.empty() ? key : where + "." + key) +
                        "'");
    }
  }
}

template <typename T>
std::optional<T> read(const json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) return std::nullopt;
  const auto& v = j.at(key);
  const std::string name = where.empty() ? key : where + "." + key;
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError("config field '" + name + "' must be a string");
  } else if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw ConfigError("config field '" + name + "' must be a number");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError("config field '" + name + "' must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_integer() && !v.is_number_unsigned()) {
        throw ConfigError("config field '" + name + "' must not be negative");
      }
    }
  } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
    if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); })) {
      throw ConfigError("config field '" + name + "' must be a list of strings");
    }
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); })) {
      throw ConfigError("config field '" + name + "' must be a list of numbers");
    }
  }
  return v.get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

void apply_seed(FitConfig& cfg, std::uint64_t seed) {
  cfg.density_train.seed = derive_seed(seed, {1});
  cfg.localfit.noise.seed = derive_seed(seed, {2});
  cfg.localfit.proxy_train.seed = derive_seed(seed, {3});
}

FitConfig parse_fit_config(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "", {"data", "density", "localfit", "output", "seed"});
  FitConfig cfg;

  if (!root.contains("data")) throw ConfigError("config is missing the 'data' section");
  const json& d = root.at("data");
  check_keys(d, "data", {"train", "validation", "features", "categorical", "label",
                         "prediction", "score", "passthrough"});
  const auto train = read<std::string>(d, "data", "train");
  if (!train) throw ConfigError("config field 'data.train' is required");
  cfg.train = resolve(base_dir, *train);
  if (auto v = read<std::string>(d, "data", "validation")) cfg.validation = resolve(base_dir, *v);
  cfg.schema.features = read<std::vector<std::string>>(d, "data", "features").value_or(
      std::vector<std::string>{});
  cfg.schema.categorical = read<std::vector<std::string>>(d, "data", "categorical").value_or(
      std::vector<std::string>{});
  cfg.schema.label = read<std::string>(d, "data", "label").value_or("label");
  cfg.schema.prediction = read<std::string>(d, "data", "prediction").value_or("prediction");
  if (auto s = read<std::string>(d, "data", "score")) cfg.schema.score = *s;
  cfg.schema.passthrough = read<std::vector<std::string>>(d, "data", "passthrough").value_or(
      std::vector<std::string>{});

  if (root.contains("density")) {
    const json& j = root.at("density");
    check_keys(j, "density", {"policy", "percentile", "threshold", "epochs", "batch_size",
                              "learning_rate", "optimizer", "seed"});
    if (auto kind = read<std::string>(j, "density", "policy")) {
      cfg.policy.kind = density::threshold_kind_from_string(*kind);
    }
    switch (cfg.policy.kind) {
      case density::ThresholdKind::PercentileOfValidation:
        cfg.policy.value = read<double>(j, "density", "percentile").value_or(98.0);
        break;
      case density::ThresholdKind::Manual: {
        const auto t = read<double>(j, "density", "threshold");
        if (!t) throw ConfigError("config field 'density.threshold' is required for the manual policy");
        cfg.policy.value = *t;
        break;
      }
      case density::ThresholdKind::MaxOfTraining:
        cfg.policy.value = 0.0;
        break;
    }
    cfg.density_train = density::default_train_config(cfg.policy, cfg.density_train.seed);
    if (auto v = read<int>(j, "density", "epochs")) cfg.density_train.epochs = *v;
    if (auto v = read<int>(j, "density", "batch_size")) cfg.density_train.batch_size = *v;
    if (auto v = read<double>(j, "density", "learning_rate")) cfg.density_train.learning_rate = *v;
    if (auto v = read<std::string>(j, "density", "optimizer")) {
      cfg.density_train.optimizer = nn::optimizer_from_string(*v);
    }
    try {
      cfg.policy.validate();
      cfg.density_train.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("density: ") + e.what());
    }
  }

  if (root.contains("localfit")) {
    const json& j = root.at("localfit");
    check_keys(j, "localfit", {"k", "accuracy_threshold", "decision_cutoff", "sigmas",
                               "copies_per_sigma", "noise_seed", "proxy", "proxy_epochs",
                               "proxy_batch_size", "proxy_learning_rate", "proxy_seed",
                               "tree_max_depth", "tree_min_samples_leaf"});
    auto& lf = cfg.localfit;
    if (auto v = read<std::size_t>(j, "localfit", "k")) lf.k = *v;
    if (auto v = read<double>(j, "localfit", "accuracy_threshold")) lf.accuracy_threshold = *v;
    if (auto v = read<double>(j, "localfit", "decision_cutoff")) lf.decision_cutoff = *v;
    if (auto v = read<std::vector<double>>(j, "localfit", "sigmas")) lf.noise.sigmas = *v;
    if (auto v = read<int>(j, "localfit", "copies_per_sigma")) lf.noise.copies_per_sigma = *v;
    if (auto v = read<std::string>(j, "localfit", "proxy")) {
      lf.proxy = localfit::proxy_kind_from_string(*v);
    }
    if (auto v = read<int>(j, "localfit", "proxy_epochs")) lf.proxy_train.epochs = *v;
    if (auto v = read<int>(j, "localfit", "proxy_batch_size")) lf.proxy_train.batch_size = *v;
    if (auto v = read<double>(j, "localfit", "proxy_learning_rate")) {
      lf.proxy_train.learning_rate = *v;
    }
    if (auto v = read<int>(j, "localfit", "tree_max_depth")) lf.tree.max_depth = *v;
    if (auto v = read<std::size_t>(j, "localfit", "tree_min_samples_leaf")) {
      lf.tree.min_samples_leaf = *v;
    }
    try {
      lf.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("localfit: ") + e.what());
    }
  }

  if (root.contains("output")) {
    const json& j = root.at("output");
    check_keys(j, "output", {"bundle"});
    if (auto v = read<std::string>(j, "output", "bundle")) cfg.bundle_out = resolve(base_dir, *v);
  } else {
    cfg.bundle_out = resolve(base_dir, cfg.bundle_out.string());
  }

  // One seed for everything, then per-section overrides.
  if (auto s = read<std::uint64_t>(root, "", "seed")) apply_seed(cfg, *s);
  if (root.contains("density")) {
    if (auto v = read<std::uint64_t>(root.at("density"), "density", "seed")) {
      cfg.density_train.seed = *v;
    }
  }
  if (root.contains("localfit")) {
    const json& j = root.at("localfit");
    if (auto v = read<std::uint64_t>(j, "localfit", "noise_seed")) cfg.localfit.noise.seed = *v;
    if (auto v = read<std::uint64_t>(j, "localfit", "proxy_seed")) {
      cfg.localfit.proxy_train.seed = *v;
    }
  }
  return cfg;
}

FitConfig load_fit_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_fit_config(ss.str(), path.parent_path());
}

// ---- fit -------------------------------------------------------------------

namespace {

bundle::ReliabilityBundle make_bundle(bundle::FeatureSchema schema, density::DensityModel dm,
                                      const localfit::LocalFitFit& lf,
                                      const nn::TrainConfig& density_train,
                                      const localfit::LocalFitConfig& lf_cfg,
                                      std::size_t train_rows) {
  bundle::ReliabilityBundle b;
  b.schema = std::move(schema);
  b.density = std::move(dm);
  b.localfit = lf.model;
  auto& p = b.provenance;
  p.density_seed = density_train.seed;
  p.density_epochs = density_train.epochs;
  p.noise_seed = lf_cfg.noise.seed;
  p.proxy_seed = lf_cfg.proxy_train.seed;
  p.noise_sigmas = lf_cfg.noise.sigmas;
  p.copies_per_sigma = lf_cfg.noise.copies_per_sigma;
  p.synthetic_rows = lf.synthetic_rows;
  p.synthetic_reliable_fraction = lf.reliable_fraction;
  p.proxy_train_accuracy = lf.proxy_train_accuracy;
  p.train_rows = train_rows;
  b.validate();
  return b;
}

void require_column(const std::vector<std::string>& header, const std::string& column,
                    const std::string& field, const std::filesystem::path& file) {
  if (std::find(header.begin(), header.end(), column) == header.end()) {
    throw ConfigError(file.string() + " has no column '" + column + "' (config field '" +
                      field + "')");
  }
}

// Schema that reads exactly the resolved feature columns with fixed encodings.
data::Schema feature_schema(const std::vector<std::string>& input_columns,
                            const std::vector<data::CategoricalEncoding>& encodings) {
  data::Schema s;
  for (const auto& col : input_columns) {
    const bool categorical = std::any_of(encodings.begin(), encodings.end(),
                                         [&](const auto& e) { return e.column == col; });
    (categorical ? s.categorical : s.features).push_back(col);
  }
  s.encodings = encodings;
  return s;
}

}  // namespace

FitSummary cmd_fit(const FitConfig& cfg, std::ostream& out) {
  if (!cfg.schema.label) throw ConfigError("config field 'data.label' is required");
  if (!cfg.schema.prediction) throw ConfigError("config field 'data.prediction' is required");
  if (cfg.policy.kind == density::ThresholdKind::PercentileOfValidation && !cfg.validation) {
    throw ConfigError(
        "config field 'data.validation' is required by density.policy "
        "'percentile_of_validation'");
  }
  const auto header = data::read_csv_header(cfg.train);
  require_column(header, *cfg.schema.label, "data.label", cfg.train);
  require_column(header, *cfg.schema.prediction, "data.prediction", cfg.train);

  const data::CsvTable train = data::load_csv(cfg.train, cfg.schema);
  if (train.matrix.rows() == 0) throw EmptyInputError(cfg.train.string() + " has no usable rows");
  if (train.matrix.cols() == 0) throw ConfigError("no feature columns selected in " + cfg.train.string());

  FitSummary summary;
  summary.train_rows = train.matrix.rows();
  summary.dropped_rows = train.dropped_rows;

  std::optional<data::CsvTable> validation;
  if (cfg.validation) {
    validation = data::load_csv(*cfg.validation, feature_schema(train.input_columns, train.encodings));
    if (validation->matrix.rows() == 0) {
      throw ConfigError(cfg.validation->string() + " has no usable rows (config field 'data.validation')");
    }
  }

  density::DensityFit dfit = density::fit_density(
      train.matrix.values, cfg.density_train, cfg.policy,
      validation ? &validation->matrix.values : nullptr);
  const localfit::LocalFitFit lfit = localfit::fit_localfit(
      train.matrix.values, *train.matrix.labels, *train.matrix.predictions, cfg.localfit);

  bundle::FeatureSchema schema;
  schema.input_columns = train.input_columns;
  schema.feature_names = train.matrix.feature_names;
  schema.encodings = train.encodings;
  schema.label = cfg.schema.label;
  schema.prediction = cfg.schema.prediction;
  schema.score = cfg.schema.score;

  summary.warnings = dfit.warnings;
  summary.warnings.insert(summary.warnings.end(), lfit.warnings.begin(), lfit.warnings.end());
  summary.bundle = make_bundle(std::move(schema), std::move(dfit.model), lfit, cfg.density_train,
                               cfg.localfit, summary.train_rows);
  bundle::save_bundle(cfg.bundle_out, summary.bundle);

  out << "training rows:          " << summary.train_rows;
  if (summary.dropped_rows) out << " (" << summary.dropped_rows << " dropped for missing values)";
  out << "\n";
  if (validation) out << "validation rows:        " << validation->matrix.rows() << "\n";
  out << "features:               " << summary.bundle.schema.feature_names.size() << "\n";
  out << "density threshold:      " << data::format_double(summary.bundle.density.mse_threshold)
      << " (" << density::to_string(cfg.policy.kind);
  if (cfg.policy.kind != density::ThresholdKind::MaxOfTraining) {
    out << " " << data::format_double(cfg.policy.value);
  }
  out << ")\n";
  out << "synthetic rows:         " << lfit.synthetic_rows << " ("
      << data::format_double(lfit.reliable_fraction) << " labeled reliable)\n";
  out << "proxy:                  " << localfit::to_string(lfit.model.proxy.kind) << "\n";
  out << "proxy train accuracy:   " << data::format_double(lfit.proxy_train_accuracy) << "\n";
  for (const auto& w : summary.warnings) out << "warning: " << w << "\n";
  out << "bundle written to " << cfg.bundle_out.string() << "\n";
  return summary;
}

// ---- assess ----------------------------------------------------------------

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return "[" + s + "]";
}

const std::vector<std::string> kVerdictColumns = {"mse", "density_reliable", "localfit_score",
                                                  "localfit_reliable", "reliable"};

// Appends the verdict columns as passthrough text so write_csv keeps the
// input's own columns first.
void append_verdicts(data::FeatureMatrix& m, const std::vector<RowVerdict>& verdicts) {
  m.passthrough_names.insert(m.passthrough_names.end(), kVerdictColumns.begin(),
                             kVerdictColumns.end());
  if (m.passthrough.empty()) m.passthrough.resize(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto& v = verdicts[r];
    auto& cells = m.passthrough[r];
    cells.push_back(data::format_double(v.density.mse));
    cells.push_back(v.density.reliable ? "1" : "0");
    cells.push_back(data::format_double(v.localfit.score));
    cells.push_back(v.localfit.reliable ? "1" : "0");
    cells.push_back(v.reliable ? "1" : "0");
  }
}

std::string cell(const metrics::MetricValue& v) {
  if (!v.defined) return "undefined";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(3) << v.value;
  return ss.str();
}

}  // namespace

void check_input_columns(const bundle::FeatureSchema& schema,
                         const std::vector<std::string>& header,
                         const std::vector<std::string>& passthrough) {
  std::vector<std::string> found;
  for (const auto& col : header) {
    const bool role = col == schema.label || col == schema.prediction || col == schema.score;
    const bool pass = std::find(passthrough.begin(), passthrough.end(), col) != passthrough.end();
    if (!role && !pass) found.push_back(col);
  }
  for (const auto& col : passthrough) {
    if (std::find(header.begin(), header.end(), col) == header.end()) {
      throw SchemaError("passthrough column '" + col + "' is not in the input");
    }
  }
  if (found == schema.input_columns) return;

  std::vector<std::string> missing;
  std::vector<std::string> extra;
  for (const auto& col : schema.input_columns) {
    if (std::find(found.begin(), found.end(), col) == found.end()) missing.push_back(col);
  }
  for (const auto& col : found) {
    if (std::find(schema.input_columns.begin(), schema.input_columns.end(), col) ==
        schema.input_columns.end()) {
      extra.push_back(col);
    }
  }
  std::string msg = "input columns do not match the bundle schema\n  expected: " +
                    join(schema.input_columns) + "\n  found:    " + join(found);
  if (!missing.empty()) msg += "\n  missing:  " + join(missing);
  if (!extra.empty()) msg += "\n  extra:    " + join(extra);
  if (missing.empty() && extra.empty()) msg += "\n  (same columns, different order)";
  throw SchemaError(msg);
}

AssessSummary cmd_assess(const AssessOptions& opts, std::ostream& out) {
  const bundle::ReliabilityBundle b = bundle::load_bundle(opts.bundle);
  const auto header = data::read_csv_header(opts.input);
  check_input_columns(b.schema, header, opts.passthrough);

  data::Schema schema = feature_schema(b.schema.input_columns, b.schema.encodings);
  auto present = [&](const std::optional<std::string>& name) -> std::optional<std::string> {
    if (name && std::find(header.begin(), header.end(), *name) != header.end()) return name;
    return std::nullopt;
  };
  schema.label = present(b.schema.label);
  schema.prediction = present(b.schema.prediction);
  schema.score = present(b.schema.score);
  schema.passthrough = opts.passthrough;

  data::CsvTable table = data::load_csv(opts.input, schema);
  if (table.matrix.feature_names != b.schema.feature_names) {
    throw SchemaError("encoded features " + join(table.matrix.feature_names) +
                      " differ from the bundle's " + join(b.schema.feature_names));
  }

  AssessSummary s;
  s.rows = table.matrix.rows();
  s.dropped_rows = table.dropped_rows;
  s.verdicts = assess_rows(b.density, b.localfit, table.matrix.values);
  for (const auto& v : s.verdicts) {
    s.density_unreliable += !v.density.reliable;
    s.localfit_unreliable += !v.localfit.reliable;
    s.reliable += v.reliable;
  }

  data::FeatureMatrix report = table.matrix;
  append_verdicts(report, s.verdicts);
  data::write_csv(opts.output, report, b.schema.label.value_or("label"),
                  b.schema.prediction.value_or("prediction"), b.schema.score.value_or("score"));

  out << "rows assessed:        " << s.rows;
  if (s.dropped_rows) out << " (" << s.dropped_rows << " dropped for missing values)";
  out << "\n";
  if (table.unseen_categories) {
    out << "warning: " << table.unseen_categories
        << " rows had a category not seen at fit time\n";
  }
  out << "density unreliable:   " << s.density_unreliable << "\n";
  out << "local-fit unreliable: " << s.localfit_unreliable << "\n";
  out << "reliable (both):      " << s.reliable << "\n";
  out << "unreliable:           " << s.rows - s.reliable << "\n";

  const auto& m = table.matrix;
  if (m.labels && m.predictions && m.scores && s.rows > 0) {
    std::vector<int> flags;
    for (const auto& v : s.verdicts) flags.push_back(v.reliable ? 1 : 0);
    out << "\n";
    print_evaluation(evaluate_subsets(*m.labels, *m.predictions, *m.scores, flags), out);
  }
  out << "report written to " << opts.output.string() << "\n";
  return s;
}

// ---- evaluate --------------------------------------------------------------

void print_evaluation(const SubsetEvaluation& ev, std::ostream& out) {
  const auto whole = metrics::named_values(ev.whole);
  const auto rel = metrics::named_values(ev.reliable);
  const auto unrel = metrics::named_values(ev.unreliable);
  const auto delta = metrics::named_values(ev.delta);
  auto row = [&](std::string_view a, const std::string& b, const std::string& c,
                 const std::string& d, const std::string& e) {
    out << std::left << std::setw(19) << a << std::right << std::setw(11) << b << std::setw(11)
        << c << std::setw(12) << d << std::setw(11) << e << "\n";
  };
  row("metric", "whole", "reliable", "unreliable", "delta");
  row("rows", std::to_string(ev.whole.support), std::to_string(ev.n_reliable),
      std::to_string(ev.n_unreliable), "");
  for (std::size_t i = 0; i < whole.size(); ++i) {
    row(whole[i].first, cell(whole[i].second), cell(rel[i].second), cell(unrel[i].second),
        cell(delta[i].second));
  }
}

SubsetEvaluation cmd_evaluate(const EvaluateOptions& opts, std::ostream& out) {
  const auto header = data::read_csv_header(opts.input);
  std::vector<std::string> missing;
  for (const auto* col : {&opts.label, &opts.prediction, &opts.score, &opts.reliable}) {
    if (std::find(header.begin(), header.end(), *col) == header.end()) missing.push_back(*col);
  }
  if (!missing.empty()) {
    throw SchemaError(opts.input.string() + " is missing column(s) " + join(missing));
  }
  data::Schema schema;
  schema.features = {opts.reliable};
  schema.label = opts.label;
  schema.prediction = opts.prediction;
  schema.score = opts.score;
  const auto table = data::load_csv(opts.input, schema);

  std::vector<int> flags;
  for (std::size_t r = 0; r < table.matrix.rows(); ++r) {
    const double v = table.matrix.values(r, 0);
    if (v != 0.0 && v != 1.0) {
      throw ParseError(opts.input.string() + ": column '" + opts.reliable + "' must be 0 or 1");
    }
    flags.push_back(v == 1.0 ? 1 : 0);
  }
  const auto& m = table.matrix;
  SubsetEvaluation ev = evaluate_subsets(*m.labels, *m.predictions, *m.scores, flags);
  if (table.dropped_rows) out << table.dropped_rows << " rows dropped for missing values\n";
  print_evaluation(ev, out);
  return ev;
}

// ---- simulate --------------------------------------------------------------

bundle::ReliabilityBundle experiment_bundle(const experiment::ExperimentConfig& cfg,
                                            const experiment::ExperimentReport& report) {
  bundle::FeatureSchema schema;
  schema.input_columns = report.data.train.feature_names;
  schema.feature_names = report.data.train.feature_names;
  schema.label = "label";
  schema.prediction = "prediction";
  schema.score = "score";
  return make_bundle(std::move(schema), report.density, report.localfit_stats, cfg.density_train,
                     cfg.localfit, report.data.train.rows());
}

std::vector<std::string> check_failures(const experiment::ExperimentReport& report) {
  std::vector<std::string> failures;
  const auto& ood = report.ood_density_detection;
  if (!ood.defined) {
    failures.push_back("OOD density detection is undefined (no OOD rows)");
  } else if (!(ood.value >= kMinOodDetection)) {
    failures.push_back("OOD density detection " + cell(ood) + " is below 0.70");
  }
  const auto& ba = report.evaluation.delta.balanced_accuracy;
  if (!ba.defined) {
    failures.push_back("balanced-accuracy delta is undefined");
  } else if (!(ba.value > 0.0)) {
    failures.push_back("balanced-accuracy delta " + cell(ba) + " is not positive");
  }
  return failures;
}

namespace {

json metric_json(const metrics::MetricValue& v) {
  return v.defined ? json(v.value) : json(nullptr);
}

template <typename Report>
json metrics_json(const Report& r) {
  json j = json::object();
  for (const auto& [name, v] : metrics::named_values(r)) j[std::string(name)] = metric_json(v);
  return j;
}

json report_json(const experiment::ExperimentConfig& cfg,
                 const experiment::ExperimentReport& r,
                 const std::vector<std::string>& failures, bool checked) {
  const auto& ev = r.evaluation;
  json j;
  j["seed"] = cfg.sim.seed;
  j["rows"] = {{"train", r.data.train.rows()},
               {"validation", r.data.validation.rows()},
               {"test", r.data.test.rows()},
               {"test_ood", r.n_ood}};
  j["classifier"] = {{"train_accuracy", r.train_accuracy},
                     {"validation_accuracy", r.validation_accuracy},
                     {"n_trees", cfg.forest.n_trees}};
  j["density"] = {{"mse_threshold", r.density.mse_threshold},
                  {"policy", density::to_string(r.density.policy.kind)},
                  {"policy_value", r.density.policy.value}};
  j["localfit"] = {{"k", r.localfit.k},
                   {"accuracy_threshold", r.localfit.accuracy_threshold},
                   {"proxy", localfit::to_string(r.localfit.proxy.kind)},
                   {"synthetic_rows", r.localfit_stats.synthetic_rows},
                   {"synthetic_reliable_fraction", r.localfit_stats.reliable_fraction},
                   {"proxy_train_accuracy", r.localfit_stats.proxy_train_accuracy}};
  j["ood"] = {{"rows", r.n_ood},
              {"density_unreliable", r.ood_density_unreliable},
              {"density_detection_rate", metric_json(r.ood_density_detection)},
              {"combined_detection_rate", metric_json(r.ood_combined_detection)}};
  if (!r.ood_density_detection.defined) {
    j["ood"]["note"] = "density detection rate is undefined: the test set has no OOD rows";
  }
  j["subsets"] = {{"whole", metrics_json(ev.whole)},
                  {"reliable", metrics_json(ev.reliable)},
                  {"unreliable", metrics_json(ev.unreliable)},
                  {"delta", metrics_json(ev.delta)},
                  {"n_reliable", ev.n_reliable},
                  {"n_unreliable", ev.n_unreliable}};
  j["warnings"] = r.warnings;
  if (checked) j["check"] = {{"passed", failures.empty()}, {"failures", failures}};
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

SimulateResult cmd_simulate(const SimulateOptions& opts, std::ostream& out) {
  experiment::ExperimentConfig cfg;
  if (opts.seed) cfg.sim.seed = *opts.seed;
  if (opts.ood_count) cfg.sim.n_test_ood = *opts.ood_count;
  if (opts.n_train) cfg.sim.n_train = *opts.n_train;
  if (opts.n_validation) cfg.sim.n_val = *opts.n_validation;
  if (opts.n_test) cfg.sim.n_test_in = *opts.n_test;

  SimulateResult result;
  result.report = experiment::run_experiment(cfg);
  const auto& r = result.report;
  result.check_failures = check_failures(r);
  result.check_passed = result.check_failures.empty();

  std::filesystem::create_directories(opts.out_dir);
  data::FeatureMatrix train = r.data.train;
  train.predictions = r.train_predictions;
  train.scores = r.train_scores;
  data::write_csv(opts.out_dir / "train.csv", train);
  data::FeatureMatrix validation = r.data.validation;
  validation.predictions = r.validation_predictions;
  validation.scores = r.validation_scores;
  data::write_csv(opts.out_dir / "validation.csv", validation);

  data::FeatureMatrix test = r.data.test;
  test.predictions.emplace();
  test.scores.emplace();
  test.passthrough_names = {"ood"};
  test.passthrough.clear();
  std::vector<RowVerdict> verdicts;
  for (const auto& p : r.points) {
    test.predictions->push_back(p.prediction);
    test.scores->push_back(p.score);
    test.passthrough.push_back({p.ood ? "1" : "0"});
    verdicts.push_back(p.verdict);
  }
  data::write_csv(opts.out_dir / "test.csv", test);
  append_verdicts(test, verdicts);
  data::write_csv(opts.out_dir / "verdicts.csv", test);

  bundle::save_bundle(opts.out_dir / "bundle.json", experiment_bundle(cfg, r));
  write_text(opts.out_dir / "report.json",
             report_json(cfg, r, result.check_failures, opts.check).dump(2) + "\n");

  out << "rows: train " << r.data.train.rows() << ", validation " << r.data.validation.rows()
      << ", test " << r.data.test.rows() << " (" << r.n_ood << " OOD)\n";
  out << "classifier accuracy: train " << cell(metrics::MetricValue::of(r.train_accuracy))
      << ", validation " << cell(metrics::MetricValue::of(r.validation_accuracy)) << "\n";
  out << "density threshold: " << data::format_double(r.density.mse_threshold) << "\n";
  if (r.ood_density_detection.defined) {
    out << "OOD rows flagged by density: " << r.ood_density_unreliable << "/" << r.n_ood << " ("
        << cell(r.ood_density_detection) << ")\n";
    out << "OOD rows flagged by the combined verdict: " << cell(r.ood_combined_detection) << "\n";
  } else {
    out << "OOD density detection: undefined (no OOD rows)\n";
  }
  out << "\n";
  print_evaluation(r.evaluation, out);
  for (const auto& w : r.warnings) out << "warning: " << w << "\n";
  out << "\noutputs written to " << opts.out_dir.string() << "\n";
  if (opts.check) {
    if (result.check_passed) {
      out << "check: passed\n";
    } else {
      for (const auto& f : result.check_failures) out << "check failed: " << f << "\n";
    }
  }
  return result;
}

}  // namespace relkit::cli
