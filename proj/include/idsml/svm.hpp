#ifndef IDSML_SVM_HPP
#define IDSML_SVM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "idsml/common.hpp"

#include "json.hpp"

namespace idsml::svm {

enum class KernelKind { Linear, Rbf };

struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;  // rbf only

  nlohmann::ordered_json to_json() const;
  static KernelSpec from_json(const nlohmann::json& j);
};

// linear: x.z ; rbf: exp(-gamma |x-z|^2). Throws on dimension mismatch.
double kernel_eval(const KernelSpec& k, std::span<const double> a,
                   std::span<const double> b);

struct SvmParams {
  double c = 1.0;
  KernelSpec kernel;
  double tol = 1e-3;            // KKT tolerance / stopping gap
  std::size_t max_iter = 0;     // 0: max(100000, 200 l)
  std::size_t cache_bytes = 256ull << 20;
};

struct SupportVector {
  std::size_t index;  // position in the training set
  double coef;        // y_i * alpha_i
  Vec x;
};

struct SvmModel {
  KernelSpec kernel;
  double c = 1.0;
  double bias = 0.0;
  std::vector<SupportVector> svs;
  double sum_y_alpha = 0.0;  // equality-constraint residual, echoed for audit

  nlohmann::ordered_json to_json() const;
  static SvmModel from_json(const nlohmann::json& j);
};

// Dual objective W(a) = -sum a_i + 1/2 sum_ij y_i y_j a_i a_j K_ij.
double dual_objective(const Mat& points, const std::vector<int>& labels,
                      const KernelSpec& kernel, const Vec& alpha);

// Sequential minimal optimization with maximal-violating-pair selection.
// Stops when the KKT gap falls below tol; throws ValidationError on
// single-class input, ConvergenceError (with gap diagnostics) on hitting the
// iteration cap. The dual objective never increases across pair updates and
// sum y_i alpha_i stays exactly zero.
SvmModel smo_solve(const Mat& points, const std::vector<int>& labels,
                   const SvmParams& params);

struct Decision {
  double score;
  int label;  // sign(score); score == 0 reports +1
};

Decision predict(const SvmModel& m, std::span<const double> x);

// One Gram row K(x_i, .) against every training point. The parallel kernel
// writes independent elements, so it is bit-identical to the serial
// reference for any thread count.
void gram_row(const Mat& points, std::size_t i, const KernelSpec& kernel,
              std::span<double> out, bool parallel = true);
void gram_row_serial(const Mat& points, std::size_t i, const KernelSpec& kernel,
                     std::span<double> out);

}  // namespace idsml::svm

#endif  // IDSML_SVM_HPP
