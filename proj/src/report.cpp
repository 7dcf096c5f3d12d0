#include "idsml/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace idsml::report {

namespace fs = std::filesystem;

std::string Provenance::footer() const {
  return str_printf("# config=%s seed=%llu\n", config_digest.c_str(),
                    static_cast<unsigned long long>(seed));
}

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      widths[c] = std::max(widths[c], row[c].size());

  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << cells[c];
      if (c + 1 < cells.size())
        out << std::string(widths[c] - cells[c].size() + 2, ' ');
    }
    out << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("short write: " + path);
}

namespace {

std::string pct(const std::optional<double>& v) {
  return v ? str_printf("%.2f", *v) : std::string("n/a");
}

std::string secs(const std::optional<double>& v) {
  return v ? str_printf("%.2f", *v) : std::string("-");
}

std::string class_display(int k) {
  return kdd::class_name(kdd::class_from_index(k));
}

}  // namespace

void write_confusion_reports(const std::string& dir,
                             const eval::ConfusionMatrix& cm,
                             const eval::Metrics& m, double test_time_sec,
                             const Provenance& prov) {
  // text
  std::vector<std::string> header = {"Class"};
  for (int k = 0; k < kdd::kClassCount; ++k) header.push_back(class_display(k));
  header.push_back("Recall(%)");
  std::vector<std::vector<std::string>> rows;
  for (int r = 0; r < kdd::kClassCount; ++r) {
    std::vector<std::string> row = {class_display(r)};
    for (int c = 0; c < kdd::kClassCount; ++c)
      row.push_back(str_printf("%llu",
          static_cast<unsigned long long>(cm.counts[r][c])));
    row.push_back(pct(m.recall_pct[r]));
    rows.push_back(std::move(row));
  }
  {
    std::vector<std::string> row = {"Prec(%)"};
    for (int c = 0; c < kdd::kClassCount; ++c) row.push_back(pct(m.precision_pct[c]));
    row.push_back("");
    rows.push_back(std::move(row));
  }

  std::ostringstream txt;
  txt << "Confusion matrix (rows = actual class, columns = predicted class)\n\n";
  txt << render_table(header, rows) << '\n';
  txt << str_printf("overall accuracy     : %.2f %%\n", m.accuracy_pct);
  txt << "false positive rate  : " << pct(m.false_positive_pct)
      << " %  (normal records flagged as any attack / normal records)\n";
  txt << "false negative rate  : " << pct(m.false_negative_pct)
      << " %  (attack records classified as normal / attack records)\n";
  txt << "note: rate definitions vary across the literature; the definitions "
         "used here are the ones printed above.\n";
  txt << prov.footer();
  write_text_file((fs::path(dir) / "confusion.txt").string(), txt.str());

  // csv
  std::ostringstream csv;
  csv << "class";
  for (int k = 0; k < kdd::kClassCount; ++k) csv << ',' << class_display(k);
  csv << ",recall_pct\n";
  for (int r = 0; r < kdd::kClassCount; ++r) {
    csv << class_display(r);
    for (int c = 0; c < kdd::kClassCount; ++c)
      csv << ',' << cm.counts[r][c];
    csv << ',' << pct(m.recall_pct[r]) << '\n';
  }
  csv << "precision_pct";
  for (int c = 0; c < kdd::kClassCount; ++c) csv << ',' << pct(m.precision_pct[c]);
  csv << ",\n" << prov.footer();
  write_text_file((fs::path(dir) / "confusion.csv").string(), csv.str());

  // json
  nlohmann::ordered_json j;
  j["accuracy_pct"] = m.accuracy_pct;
  nlohmann::ordered_json rec, prec;
  for (int k = 0; k < kdd::kClassCount; ++k) {
    rec[class_display(k)] =
        m.recall_pct[k] ? nlohmann::ordered_json(*m.recall_pct[k])
                        : nlohmann::ordered_json(nullptr);
    prec[class_display(k)] =
        m.precision_pct[k] ? nlohmann::ordered_json(*m.precision_pct[k])
                           : nlohmann::ordered_json(nullptr);
  }
  j["recall_pct"] = std::move(rec);
  j["precision_pct"] = std::move(prec);
  j["false_positive_pct"] = m.false_positive_pct
                                ? nlohmann::ordered_json(*m.false_positive_pct)
                                : nlohmann::ordered_json(nullptr);
  j["false_negative_pct"] = m.false_negative_pct
                                ? nlohmann::ordered_json(*m.false_negative_pct)
                                : nlohmann::ordered_json(nullptr);
  j["total"] = cm.total();
  j["test_time_sec"] = test_time_sec;
  j["config"] = prov.config_digest;
  j["seed"] = prov.seed;
  write_text_file((fs::path(dir) / "metrics.json").string(), j.dump(2) + "\n");
}

void write_per_class_reports(const std::string& dir,
                             const std::vector<PerClassRow>& rows,
                             const Provenance& prov) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.class_name, secs(r.train_time_sec), secs(r.test_time_sec),
                     r.degenerate ? "degenerate" : pct(r.accuracy_pct)});
  }
  std::ostringstream txt;
  txt << "Per-class binary performance (class vs rest)\n\n";
  txt << render_table({"Class", "Train(s)", "Test(s)", "Accuracy(%)"}, cells);
  txt << prov.footer();
  write_text_file((fs::path(dir) / "per_class.txt").string(), txt.str());

  std::ostringstream csv;
  csv << "class,train_time_sec,test_time_sec,accuracy_pct,degenerate\n";
  for (const auto& r : rows) {
    csv << r.class_name << ',' << secs(r.train_time_sec) << ','
        << secs(r.test_time_sec) << ',' << pct(r.accuracy_pct) << ','
        << (r.degenerate ? 1 : 0) << '\n';
  }
  csv << prov.footer();
  write_text_file((fs::path(dir) / "per_class.csv").string(), csv.str());
}

void write_compare_reports(
    const std::string& dir, const std::vector<std::string>& model_names,
    const std::vector<std::vector<std::optional<double>>>& grid,
    const Provenance& prov) {
  std::vector<std::string> header = {"Class"};
  header.insert(header.end(), model_names.begin(), model_names.end());
  std::vector<std::vector<std::string>> cells;
  for (int k = 0; k < kdd::kClassCount; ++k) {
    std::vector<std::string> row = {class_display(k)};
    for (std::size_t mcol = 0; mcol < model_names.size(); ++mcol)
      row.push_back(grid[k][mcol] ? str_printf("%.2f", *grid[k][mcol])
                                  : std::string("-"));
    cells.push_back(std::move(row));
  }
  std::ostringstream txt;
  txt << "Per-class accuracy (%), one column per model\n\n";
  txt << render_table(header, cells) << '\n';
  txt << "cell = class-vs-rest accuracy: share of test records whose binary\n"
         "\"this class / not this class\" decision is correct (five-way models\n"
         "are collapsed to that binary decision per class).\n";
  txt << prov.footer();
  write_text_file((fs::path(dir) / "compare.txt").string(), txt.str());

  std::ostringstream csv;
  csv << "class";
  for (const auto& name : model_names) csv << ',' << name;
  csv << '\n';
  for (int k = 0; k < kdd::kClassCount; ++k) {
    csv << class_display(k);
    for (std::size_t mcol = 0; mcol < model_names.size(); ++mcol)
      csv << ',' << (grid[k][mcol] ? str_printf("%.2f", *grid[k][mcol]) : std::string());
    csv << '\n';
  }
  csv << prov.footer();
  write_text_file((fs::path(dir) / "compare.csv").string(), csv.str());
}

void write_compare_timings(const std::string& dir,
                           const std::vector<TimingRow>& rows,
                           const Provenance& prov) {
  std::ostringstream csv;
  csv << "model,class,train_time_sec,test_time_sec\n";
  for (const auto& r : rows)
    csv << r.model << ',' << r.class_name << ',' << secs(r.train_time_sec) << ','
        << secs(r.test_time_sec) << '\n';
  csv << prov.footer();
  write_text_file((fs::path(dir) / "timings.csv").string(), csv.str());
}

void write_train_summary(const std::string& dir,
                         const std::vector<TrainSummaryRow>& rows,
                         const Provenance& prov) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows)
    cells.push_back({r.model, str_printf("%d", r.epochs_run),
                     str_printf("%.6g", r.final_mse), r.converged ? "yes" : "no",
                     str_printf("%.2f", r.accuracy_pct)});
  std::ostringstream txt;
  txt << "Network training functions: epochs to the MSE goal and five-way "
         "test accuracy\n\n";
  txt << render_table({"Function", "Epochs", "Final MSE", "Converged",
                       "Accuracy(%)"},
                      cells);
  txt << prov.footer();
  write_text_file((fs::path(dir) / "train_summary.txt").string(), txt.str());

  std::ostringstream csv;
  csv << "model,epochs_run,final_mse,converged,accuracy_pct\n";
  for (const auto& r : rows)
    csv << r.model << ',' << r.epochs_run << ',' << str_printf("%.6g", r.final_mse)
        << ',' << (r.converged ? 1 : 0) << ',' << str_printf("%.2f", r.accuracy_pct)
        << '\n';
  csv << prov.footer();
  write_text_file((fs::path(dir) / "train_summary.csv").string(), csv.str());
}

void write_distribution(const std::string& dir,
                        const std::array<std::size_t, kdd::kClassCount>& train,
                        const std::array<std::size_t, kdd::kClassCount>& test,
                        const Provenance& prov) {
  std::ostringstream csv;
  csv << "class,train_count,test_count\n";
  for (int k = 0; k < kdd::kClassCount; ++k)
    csv << class_display(k) << ',' << train[k] << ',' << test[k] << '\n';
  csv << prov.footer();
  write_text_file((fs::path(dir) / "distribution.csv").string(), csv.str());
}

}  // namespace idsml::report
