#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relkit/matrix.hpp"

namespace relkit::data {

// One-hot encoding of a categorical input column. Category order is the
// order of first appearance in the file the encoding was derived from.
struct CategoricalEncoding {
  std::string column;
  std::vector<std::string> categories;

  std::string derived_name(std::size_t i) const {
    return column + "=" + categories[i];
  }
  bool operator==(const CategoricalEncoding&) const = default;
};

// Numeric feature matrix plus the optional per-row columns the toolkit
// consumes: ground-truth label, the external classifier's prediction and
// its positive-class score. Labels and predictions are 0/1.
struct FeatureMatrix {
  std::vector<std::string> feature_names;
  Matrix values;
  std::optional<std::vector<int>> labels;
  std::optional<std::vector<int>> predictions;
  std::optional<std::vector<double>> scores;
  // Columns carried through untouched (e.g. an OOD marker).
  std::vector<std::string> passthrough_names;
  std::vector<std::vector<std::string>> passthrough;  // per row

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }

  // Rows in the given order; optional columns follow along.
  FeatureMatrix select(std::span<const std::size_t> rows) const;
  // Throws ShapeError if any optional column has the wrong length.
  void validate() const;

  bool operator==(const FeatureMatrix&) const = default;
};

// Column roles for CSV ingestion. When `features` and `categorical` are
// both empty, every column without another role is a numeric feature.
struct Schema {
  std::vector<std::string> features;
  std::vector<std::string> categorical;
  std::optional<std::string> label;
  std::optional<std::string> prediction;
  std::optional<std::string> score;
  std::vector<std::string> passthrough;
  // Fixed encodings (e.g. restored from a fitted bundle). Categorical
  // columns without an entry here derive their encoding from the file.
  std::vector<CategoricalEncoding> encodings;
};

struct CsvTable {
  FeatureMatrix matrix;
  std::size_t dropped_rows = 0;  // rows removed for missing values
  std::vector<std::string> header;
  // Raw input columns that produced features, in file order.
  std::vector<std::string> input_columns;
  std::vector<CategoricalEncoding> encodings;
  // Rows with a category absent from a fixed encoding (encoded as zeros).
  std::size_t unseen_categories = 0;
};

bool is_missing(std::string_view cell);

// Splits one CSV record (comma separated, RFC 4180 quoting).
std::vector<std::string> split_csv_record(std::string_view line);

// Reads only the header row.
std::vector<std::string> read_csv_header(const std::filesystem::path& path);

CsvTable load_csv(const std::filesystem::path& path, const Schema& schema);

// Writes features, then label/prediction/score (when present, under the
// given names), then passthrough columns. Numbers use the shortest
// representation that parses back to the same double.
void write_csv(const std::filesystem::path& path, const FeatureMatrix& m,
               const std::string& label_name = "label",
               const std::string& prediction_name = "prediction",
               const std::string& score_name = "score");

std::string format_double(double v);
// Quotes a field when it contains a comma, quote or line break.
std::string quote_csv_field(const std::string& s);

// Min-max scaling to [0, 1], fitted once on training data. Values outside
// the fitted range map outside [0, 1]; constant features map to 0.5.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> min, std::vector<double> max);

  // Appends a warning per constant feature to `warnings` when given.
  static MinMaxScaler fit(const Matrix& train,
                          std::vector<std::string>* warnings = nullptr);

  std::size_t dim() const noexcept { return min_.size(); }
  const std::vector<double>& min() const noexcept { return min_; }
  const std::vector<double>& max() const noexcept { return max_; }

  std::vector<double> transform(std::span<const double> row) const;
  void transform_into(std::span<const double> row, std::span<double> out) const;
  Matrix transform(const Matrix& m) const;

  bool operator==(const MinMaxScaler&) const = default;

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

// Seeded shuffle split; `train_fraction` of rows (rounded) go to the first
// partition. Stratified splits round per class and need >= 2 rows per class.
std::pair<FeatureMatrix, FeatureMatrix> split(const FeatureMatrix& m,
                                              double train_fraction,
                                              std::uint64_t seed,
                                              bool stratify);

// Random oversampling of the minority class (with replacement) until both
// classes have the same count. Sampled rows are appended after the originals.
FeatureMatrix rebalance(const FeatureMatrix& m, std::uint64_t seed);

}  // namespace relkit::data
