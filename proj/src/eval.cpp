#include "idsml/eval.hpp"

#include <cmath>
#include <limits>

namespace idsml::eval {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (std::uint64_t v : row) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (int k = 0; k < kClassCount; ++k) t += counts[k][k];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(int k) const {
  std::uint64_t t = 0;
  for (std::uint64_t v : counts[k]) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(int k) const {
  std::uint64_t t = 0;
  for (int r = 0; r < kClassCount; ++r) t += counts[r][k];
  return t;
}

ConfusionMatrix confusion(std::span<const ClassLabel> truth,
                          std::span<const ClassLabel> predicted) {
  if (truth.size() != predicted.size())
    throw ValidationError("confusion: label list lengths differ");
  ConfusionMatrix c;
  for (std::size_t i = 0; i < truth.size(); ++i)
    c.counts[kdd::class_index(truth[i])][kdd::class_index(predicted[i])]++;
  return c;
}

Metrics metrics(const ConfusionMatrix& c) {
  const std::uint64_t total = c.total();
  if (total == 0) throw ValidationError("metrics: empty confusion matrix");
  Metrics m;
  for (int k = 0; k < kClassCount; ++k) {
    const std::uint64_t row = c.row_sum(k);
    const std::uint64_t col = c.col_sum(k);
    if (row > 0) m.recall_pct[k] = 100.0 * double(c.counts[k][k]) / double(row);
    if (col > 0) m.precision_pct[k] = 100.0 * double(c.counts[k][k]) / double(col);
  }
  m.accuracy_pct = 100.0 * double(c.trace()) / double(total);

  const int normal = kdd::class_index(ClassLabel::Normal);
  const std::uint64_t normal_total = c.row_sum(normal);
  if (normal_total > 0)
    m.false_positive_pct =
        100.0 * double(normal_total - c.counts[normal][normal]) / double(normal_total);
  const std::uint64_t attack_total = total - normal_total;
  if (attack_total > 0) {
    const std::uint64_t attacks_as_normal = c.col_sum(normal) - c.counts[normal][normal];
    m.false_negative_pct = 100.0 * double(attacks_as_normal) / double(attack_total);
  }
  return m;
}

OneVsRestEnsemble train_ovr(const OvrLearnerSpec& spec, const Mat& x,
                            std::span<const ClassLabel> labels,
                            bool parallel) {
  if (x.rows() == 0) throw ValidationError("train_ovr: empty training set");
  if (x.rows() != labels.size())
    throw ValidationError("train_ovr: label count mismatch");

  OneVsRestEnsemble e;
  e.kind = spec.kind;
  e.input_dim = x.cols();
  for (int k = 0; k < kClassCount; ++k) {
    BinaryMember& member = e.members[k];
    StopWatch watch;
    std::size_t positives = 0;
    for (ClassLabel l : labels)
      if (kdd::class_index(l) == k) ++positives;
    if (positives == 0) {
      member.degenerate = true;
      member.train_time_sec = watch.seconds();
      continue;
    }
    if (spec.kind == LearnerKind::Mars) {
      Vec y(x.rows());
      for (std::size_t i = 0; i < x.rows(); ++i)
        y[i] = kdd::class_index(labels[i]) == k ? 1.0 : 0.0;
      member.mars = mars::fit(x, y, spec.mars_config, parallel);
    } else {
      svm::SvmParams params = spec.svm_params;
      if (params.kernel.kind == svm::KernelKind::Rbf && params.kernel.gamma <= 0.0)
        params.kernel.gamma = 1.0 / static_cast<double>(x.cols());
      std::vector<int> y(x.rows());
      for (std::size_t i = 0; i < x.rows(); ++i)
        y[i] = kdd::class_index(labels[i]) == k ? +1 : -1;
      member.svm = svm::smo_solve(x, y, params);
    }
    member.train_time_sec = watch.seconds();
  }
  return e;
}

double member_score(const OneVsRestEnsemble& e, int k, std::span<const double> x) {
  const BinaryMember& member = e.members[k];
  if (member.degenerate) return kNegInf;
  if (e.kind == LearnerKind::Mars) return mars::predict(*member.mars, x);
  return svm::predict(*member.svm, x).score;
}

ClassLabel predict_ovr(const OneVsRestEnsemble& e, std::span<const double> x) {
  int best = 0;
  double best_score = member_score(e, 0, x);
  for (int k = 1; k < kClassCount; ++k) {
    const double s = member_score(e, k, x);
    if (s > best_score) {
      best_score = s;
      best = k;
    }
  }
  return kdd::class_from_index(best);
}

std::vector<ClassLabel> predict_ovr_batch(const OneVsRestEnsemble& e,
                                          const Mat& x, bool parallel) {
  std::vector<ClassLabel> out(x.rows());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(x.rows()); ++i)
    out[i] = predict_ovr(e, x.row(i));
  return out;
}

bool member_positive(const OneVsRestEnsemble& e, int k, std::span<const double> x) {
  const BinaryMember& member = e.members[k];
  if (member.degenerate) return false;
  if (e.kind == LearnerKind::Mars)
    return mars::predict(*member.mars, x) >= 0.5;
  return svm::predict(*member.svm, x).label > 0;
}

namespace {

template <class Pred>
BinaryEval binary_accuracy(const Mat& x, std::span<const ClassLabel> labels,
                           int k, bool parallel, Pred&& predict_positive) {
  if (x.rows() == 0) throw ValidationError("evaluate_binary: empty test set");
  StopWatch watch;
  std::uint64_t correct = 0;
#pragma omp parallel for schedule(static) reduction(+ : correct) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(x.rows()); ++i) {
    const bool truth = kdd::class_index(labels[i]) == k;
    if (predict_positive(x.row(i)) == truth) ++correct;
  }
  BinaryEval ev;
  ev.accuracy_pct = 100.0 * double(correct) / double(x.rows());
  ev.test_time_sec = watch.seconds();
  return ev;
}

template <class PredLabel>
ConfusionMatrix parallel_confusion(const Mat& x, std::span<const ClassLabel> labels,
                                   bool parallel, PredLabel&& predict_label) {
  if (x.rows() != labels.size())
    throw ValidationError("confusion: label count mismatch");
  ConfusionMatrix total;
#pragma omp parallel if (parallel)
  {
    ConfusionMatrix local;
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(x.rows()); ++i)
      local.counts[kdd::class_index(labels[i])]
                  [kdd::class_index(predict_label(x.row(i)))]++;
#pragma omp critical
    for (int r = 0; r < kClassCount; ++r)
      for (int c = 0; c < kClassCount; ++c) total.counts[r][c] += local.counts[r][c];
  }
  return total;
}

}  // namespace

BinaryEval evaluate_binary(const OneVsRestEnsemble& e, int k, const Mat& x,
                           std::span<const ClassLabel> labels, bool parallel) {
  return binary_accuracy(x, labels, k, parallel,
                         [&](std::span<const double> row) {
                           return member_positive(e, k, row);
                         });
}

BinaryEval evaluate_binary(const mlp::MlpModel& m, int k, const Mat& x,
                           std::span<const ClassLabel> labels, bool parallel) {
  return binary_accuracy(x, labels, k, parallel,
                         [&](std::span<const double> row) {
                           return kdd::class_index(mlp::predict_class(m, row)) == k;
                         });
}

ConfusionMatrix confusion_mlp(const mlp::MlpModel& m, const Mat& x,
                              std::span<const ClassLabel> labels, bool parallel) {
  return parallel_confusion(x, labels, parallel,
                            [&](std::span<const double> row) {
                              return mlp::predict_class(m, row);
                            });
}

ConfusionMatrix confusion_ovr(const OneVsRestEnsemble& e, const Mat& x,
                              std::span<const ClassLabel> labels, bool parallel) {
  return parallel_confusion(x, labels, parallel,
                            [&](std::span<const double> row) {
                              return predict_ovr(e, row);
                            });
}

nlohmann::ordered_json OneVsRestEnsemble::to_json() const {
  nlohmann::ordered_json j;
  j["type"] = "ovr_ensemble";
  j["learner"] = kind == LearnerKind::Mars ? "mars" : "svm";
  j["input_dim"] = input_dim;
  nlohmann::ordered_json jm = nlohmann::ordered_json::array();
  for (int k = 0; k < kClassCount; ++k) {
    const BinaryMember& member = members[k];
    nlohmann::ordered_json e;
    e["class"] = kdd::class_name(kdd::class_from_index(k));
    e["degenerate"] = member.degenerate;
    e["train_time_sec"] = member.train_time_sec;
    if (!member.degenerate) {
      if (kind == LearnerKind::Mars)
        e["model"] = member.mars->to_json();
      else
        e["model"] = member.svm->to_json();
    }
    jm.push_back(std::move(e));
  }
  j["members"] = std::move(jm);
  return j;
}

OneVsRestEnsemble OneVsRestEnsemble::from_json(const nlohmann::json& j) {
  OneVsRestEnsemble e;
  const std::string learner = j.at("learner").get<std::string>();
  if (learner == "mars") e.kind = LearnerKind::Mars;
  else if (learner == "svm") e.kind = LearnerKind::Svm;
  else throw ValidationError("unknown ensemble learner \"" + learner + "\"");
  e.input_dim = j.at("input_dim").get<std::size_t>();
  const auto& jm = j.at("members");
  if (jm.size() != kClassCount)
    throw ValidationError("ensemble file must contain exactly 5 members");
  for (int k = 0; k < kClassCount; ++k) {
    BinaryMember& member = e.members[k];
    member.degenerate = jm[k].at("degenerate").get<bool>();
    member.train_time_sec = jm[k].at("train_time_sec").get<double>();
    if (!member.degenerate) {
      if (e.kind == LearnerKind::Mars)
        member.mars = mars::MarsModel::from_json(jm[k].at("model"));
      else
        member.svm = svm::SvmModel::from_json(jm[k].at("model"));
    }
  }
  return e;
}

}  // namespace idsml::eval
