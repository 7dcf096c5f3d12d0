#include "idsml/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

namespace idsml::svm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

nlohmann::ordered_json KernelSpec::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind == KernelKind::Linear ? "linear" : "rbf";
  if (kind == KernelKind::Rbf) j["gamma"] = gamma;
  return j;
}

KernelSpec KernelSpec::from_json(const nlohmann::json& j) {
  KernelSpec k;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    k.kind = KernelKind::Linear;
  } else if (kind == "rbf") {
    k.kind = KernelKind::Rbf;
    k.gamma = j.at("gamma").get<double>();
  } else {
    throw ValidationError("unknown kernel kind \"" + kind + "\"");
  }
  return k;
}

double kernel_eval(const KernelSpec& k, std::span<const double> a,
                   std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("kernel_eval: dimension mismatch");
  if (k.kind == KernelKind::Linear) return dot(a, b);
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-k.gamma * d2);
}

void gram_row_serial(const Mat& points, std::size_t i, const KernelSpec& kernel,
                     std::span<double> out) {
  const auto xi = points.row(i);
  for (std::size_t j = 0; j < points.rows(); ++j)
    out[j] = kernel_eval(kernel, xi, points.row(j));
}

void gram_row(const Mat& points, std::size_t i, const KernelSpec& kernel,
              std::span<double> out, bool parallel) {
  const auto xi = points.row(i);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(points.rows()); ++j)
    out[j] = kernel_eval(kernel, xi, points.row(j));
}

double dual_objective(const Mat& points, const std::vector<int>& labels,
                      const KernelSpec& kernel, const Vec& alpha) {
  const std::size_t l = points.rows();
  double w = 0.0;
  for (std::size_t i = 0; i < l; ++i) w -= alpha[i];
  for (std::size_t i = 0; i < l; ++i) {
    if (alpha[i] == 0.0) continue;
    for (std::size_t j = 0; j < l; ++j) {
      if (alpha[j] == 0.0) continue;
      w += 0.5 * labels[i] * labels[j] * alpha[i] * alpha[j] *
           kernel_eval(kernel, points.row(i), points.row(j));
    }
  }
  return w;
}

namespace {

// LRU cache of Gram rows, bounded by a byte budget (at least two rows are
// always kept so one pair update cannot thrash).
class KernelCache {
 public:
  KernelCache(const Mat& points, const KernelSpec& kernel, std::size_t budget)
      : points_(points), kernel_(kernel) {
    const std::size_t row_bytes = points.rows() * sizeof(double);
    max_rows_ = std::max<std::size_t>(2, budget / std::max<std::size_t>(1, row_bytes));
  }

  const Vec& row(std::size_t i) {
    auto it = index_.find(i);
    if (it != index_.end()) {
      rows_.splice(rows_.begin(), rows_, it->second);
      return it->second->second;
    }
    if (rows_.size() >= max_rows_) {
      index_.erase(rows_.back().first);
      rows_.pop_back();
    }
    rows_.emplace_front(i, Vec(points_.rows()));
    gram_row(points_, i, kernel_, rows_.front().second);
    index_[i] = rows_.begin();
    return rows_.front().second;
  }

 private:
  const Mat& points_;
  const KernelSpec& kernel_;
  std::size_t max_rows_;
  std::list<std::pair<std::size_t, Vec>> rows_;
  std::unordered_map<std::size_t, std::list<std::pair<std::size_t, Vec>>::iterator> index_;
};

}  // namespace

SvmModel smo_solve(const Mat& points, const std::vector<int>& labels,
                   const SvmParams& params) {
  const std::size_t l = points.rows();
  if (l < 2) throw ValidationError("smo: need at least two training points");
  if (labels.size() != l) throw ValidationError("smo: label count mismatch");
  if (!(params.c > 0.0)) throw ValidationError("smo: C must be > 0");
  if (!(params.tol > 0.0)) throw ValidationError("smo: tol must be > 0");
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    if (y == +1) has_pos = true;
    else if (y == -1) has_neg = true;
    else throw ValidationError("smo: labels must be +1 or -1");
  }
  if (!has_pos || !has_neg)
    throw ValidationError("smo: training data contains a single class");

  const double c = params.c;
  KernelCache cache(points, params.kernel, params.cache_bytes);
  Vec diag(l);
  for (std::size_t i = 0; i < l; ++i)
    diag[i] = kernel_eval(params.kernel, points.row(i), points.row(i));

  Vec alpha(l, 0.0);
  // grad[i] = dW/da_i = y_i fhat_i - 1 with fhat_i = sum_j y_j a_j K_ij.
  Vec grad(l, -1.0);
  double objective = 0.0;  // W(alpha); tracked incrementally

  const std::size_t max_iter =
      params.max_iter > 0 ? params.max_iter
                          : std::max<std::size_t>(100000, 200 * l);
  std::size_t iter = 0;
  double gap = kInf;

  while (true) {
    // Maximal violating pair over the feasible ascent/descent sets.
    double up_best = -kInf, low_best = kInf;
    std::ptrdiff_t i = -1, j = -1;
    for (std::size_t t = 0; t < l; ++t) {
      const double viol = -labels[t] * grad[t];  // y_t - fhat_t
      const bool in_up = (labels[t] == +1 && alpha[t] < c) ||
                         (labels[t] == -1 && alpha[t] > 0.0);
      const bool in_low = (labels[t] == +1 && alpha[t] > 0.0) ||
                          (labels[t] == -1 && alpha[t] < c);
      if (in_up && viol > up_best) {
        up_best = viol;
        i = static_cast<std::ptrdiff_t>(t);
      }
      if (in_low && viol < low_best) {
        low_best = viol;
        j = static_cast<std::ptrdiff_t>(t);
      }
    }
    gap = up_best - low_best;
    if (i < 0 || j < 0 || gap <= params.tol) break;
    if (++iter > max_iter)
      throw ConvergenceError(str_printf(
          "smo: no convergence after %zu pair updates (KKT gap %.3e, tol %.3e, l=%zu)",
          max_iter, gap, params.tol, l));

    const std::size_t ii = static_cast<std::size_t>(i);
    const std::size_t jj = static_cast<std::size_t>(j);
    // Copy row i: fetching row j may recycle cache slots.
    const Vec ki_copy = cache.row(ii);
    const Vec& kj = cache.row(jj);

    // Two-variable subproblem along the equality-feasible direction
    // a_i -= y_i s, a_j += y_j s. The curvature is eta and the linear term
    // y_j g_j - y_i g_i equals the positive gap, so the minimizing s < 0.
    const double eta = diag[ii] + diag[jj] - 2.0 * ki_copy[jj];
    double s_lo, s_hi;
    {
      // a_i - y_i s in [0, c]  =>  y_i s in [a_i - c, a_i]
      const double lo1 = labels[ii] == +1 ? alpha[ii] - c : -alpha[ii];
      const double hi1 = labels[ii] == +1 ? alpha[ii] : c - alpha[ii];
      // a_j + y_j s in [0, c]  =>  y_j s in [-a_j, c - a_j]
      const double lo2 = labels[jj] == +1 ? -alpha[jj] : alpha[jj] - c;
      const double hi2 = labels[jj] == +1 ? c - alpha[jj] : alpha[jj];
      s_lo = std::max(lo1, lo2);
      s_hi = std::min(hi1, hi2);
    }
    const double lin = labels[jj] * grad[jj] - labels[ii] * grad[ii];
    double s;
    if (eta > 1e-12) {
      s = std::clamp(-lin / eta, s_lo, s_hi);
    } else {
      // Flat or concave along the pair: the minimum sits at an endpoint.
      const double at_lo = lin * s_lo + 0.5 * eta * s_lo * s_lo;
      const double at_hi = lin * s_hi + 0.5 * eta * s_hi * s_hi;
      s = at_lo <= at_hi ? s_lo : s_hi;
    }
    const double dobj = lin * s + 0.5 * eta * s * s;
    if (!(dobj <= 1e-12 * std::max(1.0, std::abs(objective))))
      throw ConvergenceError("smo: pair update would increase the dual objective");
    objective += dobj;

    const double dai = -labels[ii] * s;
    const double daj = labels[jj] * s;
    alpha[ii] += dai;
    alpha[jj] += daj;
    for (std::size_t t = 0; t < l; ++t)
      grad[t] += labels[t] * (labels[ii] * dai * ki_copy[t] +
                              labels[jj] * daj * kj[t]);
  }

  SvmModel model;
  model.kernel = params.kernel;
  model.c = c;
  double sum_ya = 0.0;
  for (std::size_t t = 0; t < l; ++t) sum_ya += labels[t] * alpha[t];
  model.sum_y_alpha = sum_ya;

  // Bias: average of y_t - fhat_t over the unbounded support vectors, or the
  // midpoint of the violation bracket when every alpha sits on a bound.
  double bias_sum = 0.0;
  std::size_t bias_n = 0;
  for (std::size_t t = 0; t < l; ++t) {
    if (alpha[t] > 0.0 && alpha[t] < c) {
      bias_sum += -labels[t] * grad[t];
      ++bias_n;
    }
  }
  if (bias_n > 0) {
    model.bias = bias_sum / static_cast<double>(bias_n);
  } else {
    double up_best = -kInf, low_best = kInf;
    for (std::size_t t = 0; t < l; ++t) {
      const double viol = -labels[t] * grad[t];
      const bool in_up = (labels[t] == +1 && alpha[t] < c) ||
                         (labels[t] == -1 && alpha[t] > 0.0);
      const bool in_low = (labels[t] == +1 && alpha[t] > 0.0) ||
                          (labels[t] == -1 && alpha[t] < c);
      if (in_up) up_best = std::max(up_best, viol);
      if (in_low) low_best = std::min(low_best, viol);
    }
    model.bias = 0.5 * (up_best + low_best);
  }

  for (std::size_t t = 0; t < l; ++t) {
    if (alpha[t] > 0.0) {
      SupportVector sv;
      sv.index = t;
      sv.coef = labels[t] * alpha[t];
      sv.x.assign(points.row_ptr(t), points.row_ptr(t) + points.cols());
      model.svs.push_back(std::move(sv));
    }
  }
  return model;
}

Decision predict(const SvmModel& m, std::span<const double> x) {
  double score = m.bias;
  for (const auto& sv : m.svs)
    score += sv.coef * kernel_eval(m.kernel, sv.x, x);
  return {score, score >= 0.0 ? +1 : -1};
}

nlohmann::ordered_json SvmModel::to_json() const {
  nlohmann::ordered_json j;
  j["type"] = "svm_model";
  j["kernel"] = kernel.to_json();
  j["C"] = c;
  j["bias"] = bias;
  j["sum_y_alpha"] = sum_y_alpha;
  nlohmann::ordered_json jsv = nlohmann::ordered_json::array();
  for (const auto& sv : svs)
    jsv.push_back({{"index", sv.index}, {"coef", sv.coef}, {"x", sv.x}});
  j["support_vectors"] = std::move(jsv);
  return j;
}

SvmModel SvmModel::from_json(const nlohmann::json& j) {
  SvmModel m;
  m.kernel = KernelSpec::from_json(j.at("kernel"));
  m.c = j.at("C").get<double>();
  m.bias = j.at("bias").get<double>();
  m.sum_y_alpha = j.at("sum_y_alpha").get<double>();
  for (const auto& jsv : j.at("support_vectors")) {
    SupportVector sv;
    sv.index = jsv.at("index").get<std::size_t>();
    sv.coef = jsv.at("coef").get<double>();
    sv.x = jsv.at("x").get<Vec>();
    m.svs.push_back(std::move(sv));
  }
  return m;
}

}  // namespace idsml::svm
