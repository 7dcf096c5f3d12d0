#ifndef IDSML_EVAL_HPP
#define IDSML_EVAL_HPP

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "idsml/common.hpp"
#include "idsml/kdd.hpp"
#include "idsml/mars.hpp"
#include "idsml/mlp.hpp"
#include "idsml/svm.hpp"

#include "json.hpp"

namespace idsml::eval {

using kdd::ClassLabel;
using kdd::kClassCount;

// 5x5 count grid, rows = true class, columns = predicted class, both in the
// order Normal, Probe, DoS, U2Su, R2L.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kClassCount>, kClassCount> counts{};

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(int k) const;
  std::uint64_t col_sum(int k) const;
};

ConfusionMatrix confusion(std::span<const ClassLabel> truth,
                          std::span<const ClassLabel> predicted);

// Percentages derived from a confusion matrix. Rates with an empty
// denominator are reported as absent rather than zero.
struct Metrics {
  std::array<std::optional<double>, kClassCount> recall_pct;     // row-wise
  std::array<std::optional<double>, kClassCount> precision_pct;  // column-wise
  double accuracy_pct = 0.0;
  // Share of normal records flagged as any attack.
  std::optional<double> false_positive_pct;
  // Share of attack records classified as normal.
  std::optional<double> false_negative_pct;
};

Metrics metrics(const ConfusionMatrix& c);

// ---- one-vs-rest ensembles over the binary learners ------------------------

enum class LearnerKind { Mars, Svm };

struct OvrLearnerSpec {
  LearnerKind kind = LearnerKind::Svm;
  mars::MarsConfig mars_config;
  double mars_threshold = 0.5;
  svm::SvmParams svm_params;
};

// One binary member (class k vs the rest). A class absent from training
// yields a degenerate member that always votes negative.
struct BinaryMember {
  bool degenerate = false;
  std::optional<mars::MarsModel> mars;
  std::optional<svm::SvmModel> svm;
  double train_time_sec = 0.0;
};

struct OneVsRestEnsemble {
  LearnerKind kind = LearnerKind::Svm;
  std::size_t input_dim = 0;
  std::array<BinaryMember, kClassCount> members;

  nlohmann::ordered_json to_json() const;
  static OneVsRestEnsemble from_json(const nlohmann::json& j);
};

// Trains the five binary models. For class k the positives are the class-k
// rows. Wall time is recorded per member.
OneVsRestEnsemble train_ovr(const OvrLearnerSpec& spec, const Mat& x,
                            std::span<const ClassLabel> labels,
                            bool parallel = true);

// Raw decision score of member k (MARS regression value or SVM decision
// value); -inf for degenerate members.
double member_score(const OneVsRestEnsemble& e, int k, std::span<const double> x);

// Argmax fusion of the five scores; ties resolve to the lowest class index.
ClassLabel predict_ovr(const OneVsRestEnsemble& e, std::span<const double> x);
std::vector<ClassLabel> predict_ovr_batch(const OneVsRestEnsemble& e,
                                          const Mat& x, bool parallel = true);

// Binary decision of member k alone (its learner-native threshold).
bool member_positive(const OneVsRestEnsemble& e, int k, std::span<const double> x);

struct BinaryEval {
  double accuracy_pct = 0.0;
  double test_time_sec = 0.0;
};

// Class-vs-rest accuracy of binary member k over a test set.
BinaryEval evaluate_binary(const OneVsRestEnsemble& e, int k, const Mat& x,
                           std::span<const ClassLabel> labels,
                           bool parallel = true);

// Class-vs-rest accuracy of a five-way network: prediction collapsed to
// "class k or not".
BinaryEval evaluate_binary(const mlp::MlpModel& m, int k, const Mat& x,
                           std::span<const ClassLabel> labels,
                           bool parallel = true);

// Five-way confusion of a network/ensemble over a test set (parallel fold
// with exact integer merges).
ConfusionMatrix confusion_mlp(const mlp::MlpModel& m, const Mat& x,
                              std::span<const ClassLabel> labels,
                              bool parallel = true);
ConfusionMatrix confusion_ovr(const OneVsRestEnsemble& e, const Mat& x,
                              std::span<const ClassLabel> labels,
                              bool parallel = true);

}  // namespace idsml::eval

#endif  // IDSML_EVAL_HPP
