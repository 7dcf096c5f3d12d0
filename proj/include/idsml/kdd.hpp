#ifndef IDSML_KDD_HPP
#define IDSML_KDD_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "idsml/common.hpp"

#include "json.hpp"

namespace idsml::kdd {

inline constexpr std::size_t kFeatureCount = 41;
inline constexpr int kClassCount = 5;

// The five traffic categories. Numbering follows the usual 1..5 convention
// (normal first, then the four attack families).
enum class ClassLabel : int {
  Normal = 1,
  Probe = 2,
  DoS = 3,
  U2Su = 4,
  R2L = 5,
};

const char* class_name(ClassLabel c);
inline int class_index(ClassLabel c) { return static_cast<int>(c) - 1; }
inline ClassLabel class_from_index(int i) { return static_cast<ClassLabel>(i + 1); }

// One connection record: 41 raw fields (kept as text; mixed numeric and
// categorical) plus the label with any trailing period removed.
struct ConnectionRecord {
  std::vector<std::string> features;
  std::string label;
};

// Names of the 41 connection features, in file order.
const std::array<std::string, kFeatureCount>& column_names();
// Indices of the categorical columns (protocol_type, service, flag).
const std::array<std::size_t, 3>& categorical_columns();

// Parses comma-separated records (41 features + label, LF or CRLF). Throws
// ValidationError carrying the 1-based line number on a bad field count.
// Empty input yields an empty list.
std::vector<ConnectionRecord> parse_records(std::istream& in);

// Maps a raw label ("normal", "smurf", ...) to its category. Throws
// ValidationError naming the label when it is not one of the 23 known names.
ClassLabel map_label(const std::string& raw);

struct ColumnSchema {
  std::string name;
  bool categorical = false;
  // numeric columns
  double min = 0.0;
  double max = 0.0;
  bool constant = false;
  // categorical columns: sorted value list; index = one-hot slot
  std::vector<std::string> vocab;
};

// Frozen per-column encoding, fitted on training data only.
struct EncodingSchema {
  std::vector<ColumnSchema> columns;

  std::size_t encoded_width() const;
  std::vector<std::string> encoded_names() const;

  nlohmann::ordered_json to_json() const;
  static EncodingSchema from_json(const nlohmann::json& j);
};

struct EncodedDataset {
  Mat x;
  std::vector<ClassLabel> labels;

  std::array<std::size_t, kClassCount> class_counts() const;
};

// Computes vocabularies (sorted) and min/max from the given records.
EncodingSchema fit_schema(const std::vector<ConnectionRecord>& train);

// Min-max scales numeric columns to [0,1] (constant columns emit 0) and
// one-hot encodes categoricals; values unseen at fit time encode as an
// all-zero block. Values outside the fitted range are NOT clamped, so test
// data may fall outside [0,1] by design.
EncodedDataset encode(const std::vector<ConnectionRecord>& records,
                      const EncodingSchema& schema, bool parallel = true);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Draws a stratified sample of `total` rows and splits it into train/test of
// sizes (total - test_count, test_count). Per-class quotas are proportional
// to prevalence except that a class small enough to fit an equal share of
// the remaining quota is included entirely; leftovers are reallocated by
// largest-remainder rounding. Deterministic for a given seed.
SplitIndices stratified_split_indices(const std::vector<ClassLabel>& labels,
                                      std::size_t total, std::size_t test_count,
                                      std::uint64_t seed);

std::pair<EncodedDataset, EncodedDataset> stratified_sample(
    const EncodedDataset& data, std::size_t total, std::size_t test_count,
    std::uint64_t seed);

}  // namespace idsml::kdd

#endif  // IDSML_KDD_HPP
