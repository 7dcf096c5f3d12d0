#include "idsml/kdd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

namespace idsml::kdd {

const char* class_name(ClassLabel c) {
  switch (c) {
    case ClassLabel::Normal: return "Normal";
    case ClassLabel::Probe: return "Probe";
    case ClassLabel::DoS: return "DoS";
    case ClassLabel::U2Su: return "U2Su";
    case ClassLabel::R2L: return "R2L";
  }
  return "?";
}

const std::array<std::string, kFeatureCount>& column_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "duration", "protocol_type", "service", "flag", "src_bytes",
      "dst_bytes", "land", "wrong_fragment", "urgent", "hot",
      "num_failed_logins", "logged_in", "num_compromised", "root_shell",
      "su_attempted", "num_root", "num_file_creations", "num_shells",
      "num_access_files", "num_outbound_cmds", "is_host_login",
      "is_guest_login", "count", "srv_count", "serror_rate",
      "srv_serror_rate", "rerror_rate", "srv_rerror_rate", "same_srv_rate",
      "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
      "dst_host_srv_count", "dst_host_same_srv_rate",
      "dst_host_diff_srv_rate", "dst_host_same_src_port_rate",
      "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
      "dst_host_srv_serror_rate", "dst_host_rerror_rate",
      "dst_host_srv_rerror_rate"};
  return names;
}

const std::array<std::size_t, 3>& categorical_columns() {
  static const std::array<std::size_t, 3> cols = {1, 2, 3};
  return cols;
}

std::vector<ConnectionRecord> parse_records(std::istream& in) {
  std::vector<ConnectionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    ConnectionRecord rec;
    rec.features.reserve(kFeatureCount);
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        rec.label = line.substr(start);
        break;
      }
      rec.features.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (rec.features.size() != kFeatureCount)
      throw ValidationError(str_printf(
          "line %zu: expected %zu comma-separated feature fields + label, got %zu fields",
          line_no, kFeatureCount, rec.features.size() + 1));
    if (!rec.label.empty() && rec.label.back() == '.') rec.label.pop_back();
    if (rec.label.empty())
      throw ValidationError(str_printf("line %zu: empty label", line_no));
    out.push_back(std::move(rec));
  }
  return out;
}

ClassLabel map_label(const std::string& raw) {
  // Fixed mapping of the 22 attack names in the 10% training file to their
  // four categories, per the KDD Cup 99 task description.
  static const std::unordered_map<std::string, ClassLabel> table = {
      {"normal", ClassLabel::Normal},
      // probing
      {"satan", ClassLabel::Probe},
      {"ipsweep", ClassLabel::Probe},
      {"nmap", ClassLabel::Probe},
      {"portsweep", ClassLabel::Probe},
      // denial of service
      {"back", ClassLabel::DoS},
      {"land", ClassLabel::DoS},
      {"neptune", ClassLabel::DoS},
      {"pod", ClassLabel::DoS},
      {"smurf", ClassLabel::DoS},
      {"teardrop", ClassLabel::DoS},
      // user to super-user
      {"buffer_overflow", ClassLabel::U2Su},
      {"loadmodule", ClassLabel::U2Su},
      {"perl", ClassLabel::U2Su},
      {"rootkit", ClassLabel::U2Su},
      // remote to local
      {"guess_passwd", ClassLabel::R2L},
      {"ftp_write", ClassLabel::R2L},
      {"imap", ClassLabel::R2L},
      {"phf", ClassLabel::R2L},
      {"multihop", ClassLabel::R2L},
      {"warezmaster", ClassLabel::R2L},
      {"warezclient", ClassLabel::R2L},
      {"spy", ClassLabel::R2L},
  };
  auto it = table.find(raw);
  if (it == table.end())
    throw ValidationError("unknown connection label: \"" + raw + "\"");
  return it->second;
}

namespace {

double parse_numeric(const std::string& s, std::size_t col) {
  const char* p = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(p, &end);
  if (end == p || *end != '\0')
    throw ValidationError(str_printf("column %zu (%s): non-numeric value \"%s\"",
                                     col, column_names()[col].c_str(), s.c_str()));
  return v;
}

}  // namespace

std::size_t EncodingSchema::encoded_width() const {
  std::size_t w = 0;
  for (const auto& c : columns) w += c.categorical ? c.vocab.size() : 1;
  return w;
}

std::vector<std::string> EncodingSchema::encoded_names() const {
  std::vector<std::string> names;
  names.reserve(encoded_width());
  for (const auto& c : columns) {
    if (c.categorical)
      for (const auto& v : c.vocab) names.push_back(c.name + "=" + v);
    else
      names.push_back(c.name);
  }
  return names;
}

nlohmann::ordered_json EncodingSchema::to_json() const {
  nlohmann::ordered_json cols = nlohmann::ordered_json::array();
  for (const auto& c : columns) {
    nlohmann::ordered_json jc;
    jc["name"] = c.name;
    jc["kind"] = c.categorical ? "categorical" : "numeric";
    if (c.categorical) {
      jc["values"] = c.vocab;
    } else {
      jc["min"] = c.min;
      jc["max"] = c.max;
      jc["constant"] = c.constant;
    }
    cols.push_back(std::move(jc));
  }
  nlohmann::ordered_json j;
  j["columns"] = std::move(cols);
  j["encoded_width"] = encoded_width();
  return j;
}

EncodingSchema EncodingSchema::from_json(const nlohmann::json& j) {
  EncodingSchema s;
  for (const auto& jc : j.at("columns")) {
    ColumnSchema c;
    c.name = jc.at("name").get<std::string>();
    c.categorical = jc.at("kind").get<std::string>() == "categorical";
    if (c.categorical) {
      c.vocab = jc.at("values").get<std::vector<std::string>>();
    } else {
      c.min = jc.at("min").get<double>();
      c.max = jc.at("max").get<double>();
      c.constant = jc.at("constant").get<bool>();
    }
    s.columns.push_back(std::move(c));
  }
  return s;
}

std::array<std::size_t, kClassCount> EncodedDataset::class_counts() const {
  std::array<std::size_t, kClassCount> counts{};
  for (ClassLabel c : labels) counts[class_index(c)]++;
  return counts;
}

EncodingSchema fit_schema(const std::vector<ConnectionRecord>& train) {
  if (train.empty()) throw ValidationError("fit_schema: empty training set");
  const auto& cat = categorical_columns();
  EncodingSchema schema;
  schema.columns.resize(kFeatureCount);
  for (std::size_t col = 0; col < kFeatureCount; ++col) {
    ColumnSchema& c = schema.columns[col];
    c.name = column_names()[col];
    c.categorical = std::find(cat.begin(), cat.end(), col) != cat.end();
    if (c.categorical) {
      std::set<std::string> values;
      for (const auto& r : train) values.insert(r.features[col]);
      c.vocab.assign(values.begin(), values.end());
    } else {
      double lo = parse_numeric(train.front().features[col], col);
      double hi = lo;
      for (const auto& r : train) {
        const double v = parse_numeric(r.features[col], col);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      c.min = lo;
      c.max = hi;
      c.constant = (lo == hi);
    }
  }
  return schema;
}

EncodedDataset encode(const std::vector<ConnectionRecord>& records,
                      const EncodingSchema& schema, bool parallel) {
  const std::size_t n = records.size();
  const std::size_t width = schema.encoded_width();
  EncodedDataset ds;
  ds.x = Mat(n, width);
  ds.labels.resize(n);

  // Rows are independent; any schedule produces the identical matrix.
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(n); ++ri) {
    try {
      const auto& rec = records[ri];
      if (rec.features.size() != kFeatureCount)
        throw ValidationError("encode: record does not have 41 features");
      double* out = ds.x.row_ptr(ri);
      std::size_t pos = 0;
      for (std::size_t col = 0; col < kFeatureCount; ++col) {
        const ColumnSchema& c = schema.columns[col];
        if (c.categorical) {
          const auto it = std::lower_bound(c.vocab.begin(), c.vocab.end(),
                                           rec.features[col]);
          if (it != c.vocab.end() && *it == rec.features[col])
            out[pos + static_cast<std::size_t>(it - c.vocab.begin())] = 1.0;
          pos += c.vocab.size();
        } else {
          const double v = parse_numeric(rec.features[col], col);
          out[pos++] = c.constant ? 0.0 : (v - c.min) / (c.max - c.min);
        }
      }
      ds.labels[ri] = map_label(rec.label);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return ds;
}

SplitIndices stratified_split_indices(const std::vector<ClassLabel>& labels,
                                      std::size_t total, std::size_t test_count,
                                      std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (total > n)
    throw ValidationError(str_printf(
        "stratified sample: requested %zu rows but only %zu available", total, n));
  if (total == 0 || test_count >= total)
    throw ValidationError("stratified sample: need 0 < test_count < total");

  std::array<std::vector<std::size_t>, kClassCount> members;
  for (std::size_t i = 0; i < n; ++i)
    members[class_index(labels[i])].push_back(i);

  // Quota assignment. Repeatedly grant full inclusion to any class whose
  // population does not exceed an equal share of the remaining quota
  // (population * active <= remaining, exact in integers), then split what is
  // left proportionally with largest-remainder rounding.
  std::array<std::size_t, kClassCount> take{};
  std::vector<int> active;
  for (int k = 0; k < kClassCount; ++k)
    if (!members[k].empty()) active.push_back(k);
  std::size_t remaining = total;
  bool changed = true;
  while (changed && !active.empty()) {
    changed = false;
    for (auto it = active.begin(); it != active.end();) {
      const std::size_t pop = members[*it].size();
      if (pop * active.size() <= remaining) {
        take[*it] = pop;
        remaining -= pop;
        it = active.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  if (!active.empty()) {
    std::size_t pool = 0;
    for (int k : active) pool += members[k].size();
    std::size_t assigned = 0;
    std::vector<std::pair<std::size_t, int>> remainders;  // (remainder, class)
    for (int k : active) {
      const std::size_t num = remaining * members[k].size();
      take[k] = num / pool;
      assigned += take[k];
      remainders.emplace_back(num % pool, k);
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
              });
    for (std::size_t i = 0; i < remaining - assigned; ++i)
      take[remainders[i].second] += 1;
  }

  Rng rng(seed);
  std::vector<std::size_t> picked;
  picked.reserve(total);
  for (int k = 0; k < kClassCount; ++k) {
    auto& rows = members[k];
    const std::size_t t = take[k];
    // Partial Fisher-Yates: the first t entries are a uniform subset.
    for (std::size_t i = 0; i < t; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.bounded(rows.size() - i));
      std::swap(rows[i], rows[j]);
    }
    picked.insert(picked.end(), rows.begin(), rows.begin() + t);
  }

  rng.shuffle(picked);
  SplitIndices split;
  split.train.assign(picked.begin(), picked.begin() + (total - test_count));
  split.test.assign(picked.begin() + (total - test_count), picked.end());
  return split;
}

std::pair<EncodedDataset, EncodedDataset> stratified_sample(
    const EncodedDataset& data, std::size_t total, std::size_t test_count,
    std::uint64_t seed) {
  const SplitIndices split =
      stratified_split_indices(data.labels, total, test_count, seed);
  auto gather = [&](const std::vector<std::size_t>& rows) {
    EncodedDataset out;
    out.x = Mat(rows.size(), data.x.cols());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto src = data.x.row(rows[i]);
      std::copy(src.begin(), src.end(), out.x.row_ptr(i));
      out.labels.push_back(data.labels[rows[i]]);
    }
    return out;
  };
  return {gather(split.train), gather(split.test)};
}

}  // namespace idsml::kdd
