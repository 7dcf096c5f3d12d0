#ifndef IDSML_BUNDLE_HPP
#define IDSML_BUNDLE_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "idsml/kdd.hpp"

#include "json.hpp"

namespace idsml::bundle {

struct Manifest {
  std::uint64_t seed = 0;
  std::size_t total = 0;
  std::size_t test_count = 0;
  std::array<std::size_t, kdd::kClassCount> train_counts{};
  std::array<std::size_t, kdd::kClassCount> test_counts{};
  std::string source;         // input file the bundle was prepared from
  std::string digest;         // content digest of schema + both splits
  std::string config_digest;  // digest of the run configuration

  nlohmann::ordered_json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
};

// On-disk dataset bundle: schema.json, train.csv, test.csv, manifest.json.
// The split CSVs carry a header (class column first, then the encoded
// feature names) and full round-trip precision values.
struct Bundle {
  kdd::EncodingSchema schema;
  kdd::EncodedDataset train;
  kdd::EncodedDataset test;
  Manifest manifest;
};

std::string dataset_to_csv(const kdd::EncodedDataset& ds,
                           const kdd::EncodingSchema& schema);
kdd::EncodedDataset dataset_from_csv(std::istream& in, std::size_t width);

// Writes the bundle and fills manifest.digest from the serialized content.
void write(const std::string& dir, Bundle& b);
Bundle load(const std::string& dir);

}  // namespace idsml::bundle

#endif  // IDSML_BUNDLE_HPP
