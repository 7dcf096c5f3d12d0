#ifndef IDSML_REPORT_HPP
#define IDSML_REPORT_HPP

#include <optional>
#include <string>
#include <vector>

#include "idsml/eval.hpp"

namespace idsml::report {

// Stamped into every emitted file so reruns are attributable.
struct Provenance {
  std::string config_digest;
  std::uint64_t seed = 0;

  std::string footer() const;  // "# config=<hex> seed=<n>"
};

// Fixed-width text table; header widths govern the columns.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

void write_text_file(const std::string& path, const std::string& content);

// Confusion grid with recall/precision margins plus overall rates:
// confusion.txt, confusion.csv, metrics.json.
void write_confusion_reports(const std::string& dir,
                             const eval::ConfusionMatrix& cm,
                             const eval::Metrics& m, double test_time_sec,
                             const Provenance& prov);

// Per-class time/accuracy rows: per_class.txt, per_class.csv.
struct PerClassRow {
  std::string class_name;
  std::optional<double> train_time_sec;
  std::optional<double> test_time_sec;
  std::optional<double> accuracy_pct;
  bool degenerate = false;
};
void write_per_class_reports(const std::string& dir,
                             const std::vector<PerClassRow>& rows,
                             const Provenance& prov);

// Class x model accuracy grid: compare.txt, compare.csv. Cells are
// class-vs-rest accuracies; missing cells (failed sub-runs) print as "-".
void write_compare_reports(
    const std::string& dir, const std::vector<std::string>& model_names,
    const std::vector<std::vector<std::optional<double>>>& grid,
    const Provenance& prov);

// Per-model per-class wall times: timings.csv (the only compare output that
// carries timing values).
struct TimingRow {
  std::string model;
  std::string class_name;
  std::optional<double> train_time_sec;
  std::optional<double> test_time_sec;
};
void write_compare_timings(const std::string& dir,
                           const std::vector<TimingRow>& rows,
                           const Provenance& prov);

// Class populations of the evaluated split: distribution.csv.
void write_distribution(const std::string& dir,
                        const std::array<std::size_t, kdd::kClassCount>& train,
                        const std::array<std::size_t, kdd::kClassCount>& test,
                        const Provenance& prov);

// Network-trainer comparison rows (epochs to the MSE goal, overall five-way
// accuracy): train_summary.txt, train_summary.csv.
struct TrainSummaryRow {
  std::string model;
  int epochs_run = 0;
  double final_mse = 0.0;
  bool converged = false;
  double accuracy_pct = 0.0;
};
void write_train_summary(const std::string& dir,
                         const std::vector<TrainSummaryRow>& rows,
                         const Provenance& prov);

}  // namespace idsml::report

#endif  // IDSML_REPORT_HPP
