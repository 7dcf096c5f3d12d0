#include "idsml/bundle.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace idsml::bundle {

namespace fs = std::filesystem;

nlohmann::ordered_json Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["total"] = total;
  j["test_count"] = test_count;
  j["train_size"] = total - test_count;
  nlohmann::ordered_json jc;
  for (int k = 0; k < kdd::kClassCount; ++k) {
    const char* name = kdd::class_name(kdd::class_from_index(k));
    jc[name] = {{"train", train_counts[k]}, {"test", test_counts[k]}};
  }
  j["class_counts"] = std::move(jc);
  j["source"] = source;
  j["digest"] = digest;
  j["config_digest"] = config_digest;
  return j;
}

Manifest Manifest::from_json(const nlohmann::json& j) {
  Manifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.total = j.at("total").get<std::size_t>();
  m.test_count = j.at("test_count").get<std::size_t>();
  for (int k = 0; k < kdd::kClassCount; ++k) {
    const char* name = kdd::class_name(kdd::class_from_index(k));
    m.train_counts[k] = j.at("class_counts").at(name).at("train").get<std::size_t>();
    m.test_counts[k] = j.at("class_counts").at(name).at("test").get<std::size_t>();
  }
  m.source = j.at("source").get<std::string>();
  m.digest = j.at("digest").get<std::string>();
  m.config_digest = j.at("config_digest").get<std::string>();
  return m;
}

std::string dataset_to_csv(const kdd::EncodedDataset& ds,
                           const kdd::EncodingSchema& schema) {
  std::ostringstream out;
  out << "class";
  for (const auto& name : schema.encoded_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < ds.x.rows(); ++i) {
    out << static_cast<int>(ds.labels[i]);
    const double* row = ds.x.row_ptr(i);
    for (std::size_t c = 0; c < ds.x.cols(); ++c)
      out << ',' << format_full(row[c]);
    out << '\n';
  }
  return out.str();
}

kdd::EncodedDataset dataset_from_csv(std::istream& in, std::size_t width) {
  kdd::EncodedDataset ds;
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("dataset csv: missing header");
  std::vector<Vec> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Vec row;
    row.reserve(width);
    const char* p = line.c_str();
    char* end = nullptr;
    const long cls = std::strtol(p, &end, 10);
    if (end == p || cls < 1 || cls > kdd::kClassCount)
      throw ValidationError(str_printf("dataset csv line %zu: bad class value", line_no));
    p = end;
    while (*p == ',') {
      ++p;
      const double v = std::strtod(p, &end);
      if (end == p)
        throw ValidationError(str_printf("dataset csv line %zu: bad number", line_no));
      row.push_back(v);
      p = end;
    }
    if (row.size() != width)
      throw ValidationError(str_printf(
          "dataset csv line %zu: expected %zu values, got %zu", line_no, width,
          row.size()));
    ds.labels.push_back(static_cast<kdd::ClassLabel>(cls));
    rows.push_back(std::move(row));
  }
  ds.x = Mat(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), ds.x.row_ptr(i));
  return ds;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw IoError("short write: " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void write(const std::string& dir, Bundle& b) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

  const std::string schema_text = b.schema.to_json().dump(2) + "\n";
  const std::string train_text = dataset_to_csv(b.train, b.schema);
  const std::string test_text = dataset_to_csv(b.test, b.schema);

  std::uint64_t digest = fnv1a64(schema_text);
  digest ^= fnv1a64(train_text) * 0x9e3779b97f4a7c15ull;
  digest ^= fnv1a64(test_text) * 0xc2b2ae3d27d4eb4full;
  b.manifest.digest = hex64(digest);
  b.manifest.train_counts = b.train.class_counts();
  b.manifest.test_counts = b.test.class_counts();

  write_file(fs::path(dir) / "schema.json", schema_text);
  write_file(fs::path(dir) / "train.csv", train_text);
  write_file(fs::path(dir) / "test.csv", test_text);
  write_file(fs::path(dir) / "manifest.json", b.manifest.to_json().dump(2) + "\n");
}

Bundle load(const std::string& dir) {
  Bundle b;
  b.schema = kdd::EncodingSchema::from_json(
      nlohmann::json::parse(read_file(fs::path(dir) / "schema.json")));
  b.manifest = Manifest::from_json(
      nlohmann::json::parse(read_file(fs::path(dir) / "manifest.json")));
  const std::size_t width = b.schema.encoded_width();
  {
    std::ifstream in(fs::path(dir) / "train.csv", std::ios::binary);
    if (!in) throw IoError("cannot open " + dir + "/train.csv");
    b.train = dataset_from_csv(in, width);
  }
  {
    std::ifstream in(fs::path(dir) / "test.csv", std::ios::binary);
    if (!in) throw IoError("cannot open " + dir + "/test.csv");
    b.test = dataset_from_csv(in, width);
  }
  return b;
}

}  // namespace idsml::bundle
