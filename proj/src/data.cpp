#include "relkit/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace relkit::data {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

bool parse_double(std::string_view cell, double& out) {
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::string where(const std::filesystem::path& path, std::size_t line,
                  const std::string& column) {
  return path.string() + ":" + std::to_string(line) + " column '" + column + "'";
}

int parse_binary(const std::string& cell, const std::filesystem::path& path,
                 std::size_t line, const std::string& column) {
  double v = 0.0;
  if (!parse_double(cell, v) || (v != 0.0 && v != 1.0)) {
    throw ParseError(where(path, line, column) + ": expected 0 or 1, got '" +
                     cell + "'");
  }
  return v == 1.0 ? 1 : 0;
}

std::size_t column_index(const std::vector<std::string>& header,
                         const std::string& name,
                         const std::filesystem::path& path) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw SchemaError(path.string() + ": missing column '" + name + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

bool is_missing(std::string_view cell) {
  static constexpr std::array<std::string_view, 7> kTokens = {
      "", "NA", "NaN", "nan", "N/A", "?", "null"};
  return std::find(kTokens.begin(), kTokens.end(), cell) != kTokens.end();
}

std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field");
  fields.push_back(was_quoted ? cur : trim(cur));
  return fields;
}

std::vector<std::string> read_csv_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  return split_csv_record(line);
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> rows) const {
  FeatureMatrix out;
  out.feature_names = feature_names;
  out.passthrough_names = passthrough_names;
  out.values = Matrix(0, cols());
  if (labels) out.labels.emplace();
  if (predictions) out.predictions.emplace();
  if (scores) out.scores.emplace();
  for (std::size_t r : rows) {
    if (r >= this->rows()) throw ShapeError("select: row index out of range");
    out.values.append_row(values.row(r));
    if (labels) out.labels->push_back((*labels)[r]);
    if (predictions) out.predictions->push_back((*predictions)[r]);
    if (scores) out.scores->push_back((*scores)[r]);
    if (!passthrough_names.empty()) out.passthrough.push_back(passthrough[r]);
  }
  return out;
}

void FeatureMatrix::validate() const {
  if (feature_names.size() != values.cols()) {
    throw ShapeError("feature name count does not match matrix width");
  }
  const std::size_t n = rows();
  if ((labels && labels->size() != n) ||
      (predictions && predictions->size() != n) ||
      (scores && scores->size() != n)) {
    throw ShapeError("label/prediction/score column length differs from row count");
  }
  if (!passthrough_names.empty() && passthrough.size() != n) {
    throw ShapeError("passthrough column length differs from row count");
  }
}

CsvTable load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  table.header = split_csv_record(line);
  const auto& header = table.header;

  std::vector<std::string> role_columns;
  for (const auto* opt : {&schema.label, &schema.prediction, &schema.score}) {
    if (*opt) role_columns.push_back(**opt);
  }
  role_columns.insert(role_columns.end(), schema.passthrough.begin(),
                      schema.passthrough.end());

  // Which raw columns feed the feature matrix, in file order.
  enum class Kind { Skip, Numeric, Categorical };
  std::vector<Kind> kinds(header.size(), Kind::Skip);
  const bool infer = schema.features.empty() && schema.categorical.empty();
  for (const auto& name : schema.features) kinds[column_index(header, name, path)] = Kind::Numeric;
  for (const auto& name : schema.categorical) {
    kinds[column_index(header, name, path)] = Kind::Categorical;
  }
  for (const auto& name : role_columns) column_index(header, name, path);
  if (infer) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (std::find(role_columns.begin(), role_columns.end(), header[c]) ==
          role_columns.end()) {
        kinds[c] = Kind::Numeric;
      }
    }
  }
  auto optional_index = [&](const std::optional<std::string>& name) -> std::optional<std::size_t> {
    if (!name) return std::nullopt;
    return column_index(header, *name, path);
  };
  const auto label_col = optional_index(schema.label);
  const auto pred_col = optional_index(schema.prediction);
  const auto score_col = optional_index(schema.score);
  std::vector<std::size_t> pass_cols;
  for (const auto& name : schema.passthrough) pass_cols.push_back(column_index(header, name, path));

  // Read every record first: categorical encodings need a full pass.
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> line_numbers;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> rec;
    try {
      rec = split_csv_record(line);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (rec.size() != header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(rec.size()));
    }
    bool missing = false;
    for (std::size_t c = 0; c < header.size() && !missing; ++c) {
      const bool used = kinds[c] != Kind::Skip || c == label_col || c == pred_col ||
                        c == score_col;
      missing = used && is_missing(rec[c]);
    }
    if (missing) {
      ++table.dropped_rows;
      continue;
    }
    records.push_back(std::move(rec));
    line_numbers.push_back(line_no);
  }

  // Resolve encodings for categorical columns.
  std::map<std::size_t, CategoricalEncoding> encodings;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (kinds[c] != Kind::Categorical) continue;
    auto fixed = std::find_if(schema.encodings.begin(), schema.encodings.end(),
                              [&](const auto& e) { return e.column == header[c]; });
    CategoricalEncoding enc;
    if (fixed != schema.encodings.end()) {
      enc = *fixed;
    } else {
      enc.column = header[c];
      for (const auto& rec : records) {
        if (std::find(enc.categories.begin(), enc.categories.end(), rec[c]) ==
            enc.categories.end()) {
          enc.categories.push_back(rec[c]);
        }
      }
    }
    encodings.emplace(c, std::move(enc));
  }

  FeatureMatrix& m = table.matrix;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (kinds[c] == Kind::Numeric) {
      m.feature_names.push_back(header[c]);
      table.input_columns.push_back(header[c]);
    } else if (kinds[c] == Kind::Categorical) {
      const auto& enc = encodings.at(c);
      for (std::size_t i = 0; i < enc.categories.size(); ++i) {
        m.feature_names.push_back(enc.derived_name(i));
      }
      table.input_columns.push_back(header[c]);
      table.encodings.push_back(enc);
    }
  }
  m.values = Matrix(0, m.feature_names.size());
  if (label_col) m.labels.emplace();
  if (pred_col) m.predictions.emplace();
  if (score_col) m.scores.emplace();
  m.passthrough_names = schema.passthrough;

  std::vector<double> row;
  row.reserve(m.feature_names.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t ln = line_numbers[r];
    row.clear();
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (kinds[c] == Kind::Numeric) {
        double v = 0.0;
        if (!parse_double(rec[c], v)) {
          throw ParseError(where(path, ln, header[c]) + ": not a finite number: '" +
                           rec[c] + "'");
        }
        row.push_back(v);
      } else if (kinds[c] == Kind::Categorical) {
        const auto& cats = encodings.at(c).categories;
        auto hit = std::find(cats.begin(), cats.end(), rec[c]);
        if (hit == cats.end()) ++table.unseen_categories;
        for (auto it = cats.begin(); it != cats.end(); ++it) {
          row.push_back(it == hit ? 1.0 : 0.0);
        }
      }
    }
    m.values.append_row(row);
    if (label_col) m.labels->push_back(parse_binary(rec[*label_col], path, ln, header[*label_col]));
    if (pred_col) {
      m.predictions->push_back(parse_binary(rec[*pred_col], path, ln, header[*pred_col]));
    }
    if (score_col) {
      double s = 0.0;
      if (!parse_double(rec[*score_col], s) || s < 0.0 || s > 1.0) {
        throw ParseError(where(path, ln, header[*score_col]) +
                         ": score must be a number in [0, 1], got '" + rec[*score_col] + "'");
      }
      m.scores->push_back(s);
    }
    if (!pass_cols.empty()) {
      std::vector<std::string> pass;
      for (std::size_t c : pass_cols) pass.push_back(rec[c]);
      m.passthrough.push_back(std::move(pass));
    }
  }
  return table;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string quote_csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv(const std::filesystem::path& path, const FeatureMatrix& m,
               const std::string& label_name, const std::string& prediction_name,
               const std::string& score_name) {
  m.validate();
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  std::vector<std::string> header = m.feature_names;
  if (m.labels) header.push_back(label_name);
  if (m.predictions) header.push_back(prediction_name);
  if (m.scores) header.push_back(score_name);
  header.insert(header.end(), m.passthrough_names.begin(), m.passthrough_names.end());
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << quote_csv_field(header[i]);
  }
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.values.row(r);
    bool first = true;
    auto sep = [&] {
      if (!first) out << ',';
      first = false;
    };
    for (double v : row) {
      sep();
      out << format_double(v);
    }
    if (m.labels) { sep(); out << (*m.labels)[r]; }
    if (m.predictions) { sep(); out << (*m.predictions)[r]; }
    if (m.scores) { sep(); out << format_double((*m.scores)[r]); }
    for (const auto& cell : m.passthrough.empty() ? std::vector<std::string>{} : m.passthrough[r]) {
      sep();
      out << quote_csv_field(cell);
    }
    out << '\n';
  }
  if (!out) throw ParseError("write failed: " + path.string());
}

MinMaxScaler::MinMaxScaler(std::vector<double> min, std::vector<double> max)
    : min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != max_.size()) throw ShapeError("scaler min/max length mismatch");
  for (std::size_t j = 0; j < min_.size(); ++j) {
    if (!(min_[j] <= max_[j])) throw ParameterError("scaler has min > max");
  }
}

MinMaxScaler MinMaxScaler::fit(const Matrix& train, std::vector<std::string>* warnings) {
  if (train.empty()) throw EmptyInputError("scaler: no training rows");
  std::vector<double> lo(train.row(0).begin(), train.row(0).end());
  std::vector<double> hi = lo;
  for (std::size_t r = 1; r < train.rows(); ++r) {
    const auto row = train.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      lo[j] = std::min(lo[j], row[j]);
      hi[j] = std::max(hi[j], row[j]);
    }
  }
  if (warnings) {
    for (std::size_t j = 0; j < lo.size(); ++j) {
      if (lo[j] == hi[j]) {
        warnings->push_back("feature " + std::to_string(j) +
                            " is constant in training data; scaled to 0.5");
      }
    }
  }
  return MinMaxScaler(std::move(lo), std::move(hi));
}

void MinMaxScaler::transform_into(std::span<const double> row, std::span<double> out) const {
  if (row.size() != dim() || out.size() != dim()) {
    throw ShapeError("scaler expects " + std::to_string(dim()) + " features, got " +
                     std::to_string(row.size()));
  }
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double range = max_[j] - min_[j];
    out[j] = range > 0.0 ? (row[j] - min_[j]) / range : 0.5;
  }
}

std::vector<double> MinMaxScaler::transform(std::span<const double> row) const {
  std::vector<double> out(row.size());
  transform_into(row, out);
  return out;
}

Matrix MinMaxScaler::transform(const Matrix& m) const {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) transform_into(m.row(r), out.row(r));
  return out;
}

std::pair<FeatureMatrix, FeatureMatrix> split(const FeatureMatrix& m,
                                              double train_fraction,
                                              std::uint64_t seed, bool stratify) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ParameterError("split: train_fraction must be in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  auto take = [&](std::vector<std::size_t> idx) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto cut = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(idx.size())));
    first.insert(first.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut));
    second.insert(second.end(), idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end());
  };
  if (stratify) {
    if (!m.labels) throw ParameterError("split: stratification needs a label column");
    for (int cls : {0, 1}) {
      std::vector<std::size_t> idx;
      for (std::size_t r = 0; r < m.rows(); ++r) {
        if ((*m.labels)[r] == cls) idx.push_back(r);
      }
      if (idx.size() < 2) {
        throw ParameterError("split: class " + std::to_string(cls) +
                             " has fewer than 2 rows; cannot stratify");
      }
      take(std::move(idx));
    }
  } else {
    std::vector<std::size_t> idx(m.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    take(std::move(idx));
  }
  if (first.empty() || second.empty()) {
    throw ParameterError("split: one side of the split would be empty");
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {m.select(first), m.select(second)};
}

FeatureMatrix rebalance(const FeatureMatrix& m, std::uint64_t seed) {
  if (!m.labels) throw ParameterError("rebalance: no label column");
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t r = 0; r < m.rows(); ++r) by_class[(*m.labels)[r] == 1].push_back(r);
  if (by_class[0].empty() || by_class[1].empty()) {
    throw ParameterError("rebalance: both classes must be present");
  }
  std::vector<std::size_t> rows(m.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto& minority = by_class[0].size() < by_class[1].size() ? by_class[0] : by_class[1];
  const std::size_t deficit = std::max(by_class[0].size(), by_class[1].size()) - minority.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, minority.size() - 1);
  for (std::size_t i = 0; i < deficit; ++i) rows.push_back(minority[pick(rng)]);
  return m.select(rows);
}

}  // namespace relkit::data
