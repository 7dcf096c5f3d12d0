#include "idsml/mars.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace idsml::mars {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

bool BasisFunction::uses_var(int var) const {
  for (const auto& f : factors)
    if (f.var == var) return true;
  return false;
}

double eval_basis(const BasisFunction& b, std::span<const double> x) {
  double v = 1.0;
  for (const auto& f : b.factors) {
    if (f.var < 0 || static_cast<std::size_t>(f.var) >= x.size())
      throw ValidationError(str_printf(
          "basis factor references variable %d but input has %zu dimensions",
          f.var, x.size()));
    const double h = static_cast<double>(f.dir) * (x[f.var] - f.knot);
    if (h <= 0.0) return 0.0;
    v *= h;
  }
  return v;
}

void MarsConfig::validate() const {
  if (max_basis < 1) throw ValidationError("mars: max_basis must be >= 1");
  if (min_span < 1) throw ValidationError("mars: min_span must be >= 1");
  if (max_degree < 1) throw ValidationError("mars: max_degree must be >= 1");
  if (gcv_penalty < 0.0) throw ValidationError("mars: gcv_penalty must be >= 0");
}

double gcv(double rss, std::size_t n, std::size_t num_basis,
           std::size_t num_knots, double penalty) {
  if (n == 0) throw ValidationError("gcv: n must be positive");
  const double ep =
      static_cast<double>(num_basis) + penalty * static_cast<double>(num_knots);
  if (ep >= static_cast<double>(n))
    throw ValidationError(str_printf(
        "gcv: effective parameters %.1f >= n=%zu (model too complex)", ep, n));
  const double denom = 1.0 - ep / static_cast<double>(n);
  return (rss / static_cast<double>(n)) / (denom * denom);
}

std::size_t count_knots(const std::vector<BasisFunction>& basis) {
  std::set<std::pair<int, double>> knots;
  for (const auto& b : basis)
    for (const auto& f : b.factors) knots.insert({f.var, f.knot});
  return knots.size();
}

namespace {

double gcv_or_inf(double rss, std::size_t n, std::size_t num_basis,
                  std::size_t num_knots, double penalty) {
  const double ep =
      static_cast<double>(num_basis) + penalty * static_cast<double>(num_knots);
  if (ep >= static_cast<double>(n)) return kInf;
  return gcv(rss, n, num_basis, num_knots, penalty);
}

Mat build_basis_matrix(const std::vector<BasisFunction>& basis, const Mat& x) {
  Mat b(x.rows(), basis.size());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    for (std::size_t m = 0; m < basis.size(); ++m)
      b(i, m) = eval_basis(basis[m], row);
  }
  return b;
}

double residual_rss(const Mat& b, const Vec& coef, const Vec& y) {
  double rss = 0.0;
  for (std::size_t i = 0; i < b.rows(); ++i) {
    double pred = 0.0;
    const double* row = b.row_ptr(i);
    for (std::size_t m = 0; m < b.cols(); ++m) pred += row[m] * coef[m];
    const double e = y[i] - pred;
    rss += e * e;
  }
  return rss;
}

Vec solve_basis_ls(const Mat& b, const Vec& y) {
  const std::size_t m = b.cols();
  Mat gram(m, m);
  Vec rhs(m, 0.0);
  for (std::size_t i = 0; i < b.rows(); ++i) {
    const double* row = b.row_ptr(i);
    for (std::size_t p = 0; p < m; ++p) {
      rhs[p] += row[p] * y[i];
      for (std::size_t q = 0; q <= p; ++q) gram(p, q) += row[p] * row[q];
    }
  }
  for (std::size_t p = 0; p < m; ++p)
    for (std::size_t q = p + 1; q < m; ++q) gram(p, q) = gram(q, p);
  return solve_spd(std::move(gram), std::move(rhs));
}

// Gain of adding a column pair (u, w) on top of an already-factored basis:
// rss drops by r^T S^-1 r where S is the Schur complement of the bordered
// normal equations. Degenerate columns (zero, or collinear with the current
// basis) fall back to the best usable single column.
struct StepScorer {
  const Mat& bmat;
  Mat lfac;     // Cholesky factor of B^T B (+ jitter)
  Vec z;        // L^-1 B^T y
  double base;  // y^T y - z^T z, the RSS of the current fit (up to jitter)

  StepScorer(const Mat& b, const Vec& y) : bmat(b) {
    const std::size_t m = b.cols();
    Mat gram(m, m);
    Vec rhs(m, 0.0);
    for (std::size_t i = 0; i < b.rows(); ++i) {
      const double* row = b.row_ptr(i);
      for (std::size_t p = 0; p < m; ++p) {
        rhs[p] += row[p] * y[i];
        for (std::size_t q = 0; q <= p; ++q) gram(p, q) += row[p] * row[q];
      }
    }
    double scale = 0.0;
    for (std::size_t p = 0; p < m; ++p) scale = std::max(scale, gram(p, p));
    if (scale == 0.0) scale = 1.0;
    double jitter = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      lfac = gram;
      if (jitter > 0.0)
        for (std::size_t p = 0; p < m; ++p) lfac(p, p) += jitter;
      if (cholesky(lfac)) break;
      jitter = (jitter == 0.0) ? scale * 1e-12 : jitter * 100.0;
      if (attempt == 11)
        throw ConvergenceError("mars: basis gram matrix not factorizable");
    }
    z = rhs;
    chol_forward(lfac, z);
    double yty = dot(y, y);
    base = yty - dot(z, z);
  }

  // u, w are given on the parent's nonzero rows only.
  double gain(std::span<const std::size_t> rows, std::span<const double> u,
              std::span<const double> w, const Vec& y) const {
    const std::size_t m = bmat.cols();
    Vec pu(m, 0.0), pw(m, 0.0);
    double suu = 0.0, sww = 0.0, suw = 0.0, qu = 0.0, qw = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const std::size_t i = rows[k];
      const double ui = u[k], wi = w[k];
      if (ui != 0.0 || wi != 0.0) {
        const double* row = bmat.row_ptr(i);
        for (std::size_t p = 0; p < m; ++p) {
          pu[p] += row[p] * ui;
          pw[p] += row[p] * wi;
        }
        suu += ui * ui;
        sww += wi * wi;
        suw += ui * wi;
        qu += ui * y[i];
        qw += wi * y[i];
      }
    }
    chol_forward(lfac, pu);
    chol_forward(lfac, pw);
    const double a = suu - dot(pu, pu);
    const double c = sww - dot(pw, pw);
    const double b = suw - dot(pu, pw);
    const double r0 = qu - dot(pu, z);
    const double r1 = qw - dot(pw, z);

    const double scale = std::max({suu, sww, 1e-300});
    const double tol = scale * 1e-10;
    if (a > tol && c > tol) {
      const double det = a * c - b * b;
      if (det > a * c * 1e-10) {
        const double d0 = (c * r0 - b * r1) / det;
        const double d1 = (a * r1 - b * r0) / det;
        return std::max(0.0, r0 * d0 + r1 * d1);
      }
    }
    double g = 0.0;
    if (a > tol) g = std::max(g, r0 * r0 / a);
    if (c > tol) g = std::max(g, r1 * r1 / c);
    return g;
  }
};

struct ScanTask {
  int parent;
  int var;
};

bool candidate_better(const Candidate& a, const Candidate& b) {
  if (!b.valid) return a.valid;
  if (!a.valid) return false;
  if (a.rss != b.rss) return a.rss < b.rss;
  if (a.var != b.var) return a.var < b.var;
  if (a.knot != b.knot) return a.knot < b.knot;
  return a.parent < b.parent;
}

Candidate scan_task(const ScanTask& task, const Mat& x, const Vec& y,
                    const Mat& bmat, const StepScorer& scorer, int min_span) {
  // Rows where the parent term is active.
  std::vector<std::size_t> rows;
  rows.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    if (bmat(i, task.parent) > 0.0) rows.push_back(i);
  Candidate best;
  if (rows.size() < 2) return best;

  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    const double va = x(a, task.var), vb = x(b, task.var);
    if (va != vb) return va < vb;
    return a < b;
  });

  Vec u(rows.size()), w(rows.size());
  double prev_knot = 0.0;
  bool have_prev = false;
  for (std::size_t pos = 0; pos < rows.size();
       pos += static_cast<std::size_t>(min_span)) {
    const double t = x(rows[pos], task.var);
    if (have_prev && t == prev_knot) continue;
    prev_knot = t;
    have_prev = true;

    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double parent_val = bmat(rows[k], task.parent);
      const double dx = x(rows[k], task.var) - t;
      u[k] = dx > 0.0 ? parent_val * dx : 0.0;
      w[k] = dx < 0.0 ? parent_val * -dx : 0.0;
    }
    const double rss = scorer.base - scorer.gain(rows, u, w, y);
    const Candidate cand{true, rss, task.parent, task.var, t};
    if (candidate_better(cand, best)) best = cand;
  }
  return best;
}

Candidate search_step_impl(const Mat& x, const Vec& y,
                           const std::vector<BasisFunction>& basis,
                           const Mat& bmat, const MarsConfig& cfg,
                           bool parallel) {
  std::vector<ScanTask> tasks;
  for (std::size_t p = 0; p < basis.size(); ++p) {
    if (basis[p].degree() >= cfg.max_degree) continue;
    for (std::size_t v = 0; v < x.cols(); ++v)
      if (!basis[p].uses_var(static_cast<int>(v)))
        tasks.push_back({static_cast<int>(p), static_cast<int>(v)});
  }
  if (tasks.empty()) return {};

  StepScorer scorer(bmat, y);
  std::vector<Candidate> results(tasks.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(tasks.size()); ++t)
    results[t] = scan_task(tasks[t], x, y, bmat, scorer, cfg.min_span);

  Candidate best;
  for (const auto& c : results)
    if (candidate_better(c, best)) best = c;
  return best;
}

}  // namespace

Vec fit_least_squares(const std::vector<BasisFunction>& basis, const Mat& x,
                      const Vec& y) {
  if (basis.empty()) throw ValidationError("fit_least_squares: empty basis");
  if (x.rows() != y.size())
    throw ValidationError("fit_least_squares: row/target count mismatch");
  return solve_basis_ls(build_basis_matrix(basis, x), y);
}

Candidate search_step(const Mat& x, const Vec& y,
                      const std::vector<BasisFunction>& basis,
                      const MarsConfig& cfg, bool parallel) {
  cfg.validate();
  return search_step_impl(x, y, basis, build_basis_matrix(basis, x), cfg,
                          parallel);
}

MarsModel forward_pass(const Mat& x, const Vec& y, const MarsConfig& cfg,
                       bool parallel) {
  cfg.validate();
  const std::size_t n = x.rows();
  if (n != y.size())
    throw ValidationError("mars: row/target count mismatch");
  if (n < 2 * static_cast<std::size_t>(cfg.min_span))
    throw ValidationError(str_printf(
        "mars: need at least 2*min_span=%d rows, got %zu", 2 * cfg.min_span, n));

  MarsModel model;
  model.config = cfg;
  model.input_dim = x.cols();
  model.basis.push_back(BasisFunction{});  // constant
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
  model.coefficients = {mean};
  double rss = 0.0;
  for (double v : y) rss += (v - mean) * (v - mean);
  model.rss = rss;

  Mat bmat(n, 1, 1.0);
  while (model.rss > 0.0) {
    const int nonconst = static_cast<int>(model.basis.size()) - 1;
    if (nonconst + 2 > cfg.max_basis) break;

    const Candidate cand =
        search_step_impl(x, y, model.basis, bmat, cfg, parallel);
    if (!cand.valid) break;

    BasisFunction plus = model.basis[cand.parent];
    plus.factors.push_back({cand.var, cand.knot, +1});
    BasisFunction minus = model.basis[cand.parent];
    minus.factors.push_back({cand.var, cand.knot, -1});

    std::vector<BasisFunction> trial = model.basis;
    trial.push_back(plus);
    trial.push_back(minus);
    Vec coef = fit_least_squares(trial, x, y);
    const double trial_rss = residual_rss(build_basis_matrix(trial, x), coef, y);

    if (!((model.rss - trial_rss) / model.rss > cfg.forward_tol)) break;

    model.basis = std::move(trial);
    model.coefficients = std::move(coef);
    model.rss = trial_rss;

    Mat grown(n, model.basis.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double* old = bmat.row_ptr(i);
      double* now = grown.row_ptr(i);
      std::copy(old, old + bmat.cols(), now);
      const auto row = x.row(i);
      now[bmat.cols()] = eval_basis(plus, row);
      now[bmat.cols() + 1] = eval_basis(minus, row);
    }
    bmat = std::move(grown);
  }

  model.gcv = gcv_or_inf(model.rss, n, model.basis.size(),
                         count_knots(model.basis), cfg.gcv_penalty);
  return model;
}

MarsModel backward_prune(const MarsModel& m, const Mat& x, const Vec& y) {
  const std::size_t n = x.rows();
  MarsModel current = m;
  current.coefficients = fit_least_squares(current.basis, x, y);
  current.rss =
      residual_rss(build_basis_matrix(current.basis, x), current.coefficients, y);
  current.gcv = gcv_or_inf(current.rss, n, current.basis.size(),
                           count_knots(current.basis), m.config.gcv_penalty);

  MarsModel best = current;
  while (current.basis.size() > 1) {
    std::size_t drop = 0;
    double drop_gcv = kInf;
    double drop_rss = 0.0;
    Vec drop_coef;
    std::vector<BasisFunction> drop_basis;
    for (std::size_t k = 1; k < current.basis.size(); ++k) {
      std::vector<BasisFunction> sub = current.basis;
      sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(k));
      Vec coef = fit_least_squares(sub, x, y);
      const double rss = residual_rss(build_basis_matrix(sub, x), coef, y);
      const double g =
          gcv_or_inf(rss, n, sub.size(), count_knots(sub), m.config.gcv_penalty);
      // A candidate must be materially better to displace the incumbent;
      // mirror-pair redundancy makes exact ties common, and rounding noise
      // must not decide the deletion path.
      if (drop == 0 || g < drop_gcv * (1.0 - 1e-9)) {
        drop = k;
        drop_gcv = g;
        drop_rss = rss;
        drop_coef = std::move(coef);
        drop_basis = std::move(sub);
      }
    }
    current.basis = std::move(drop_basis);
    current.coefficients = std::move(drop_coef);
    current.rss = drop_rss;
    current.gcv = drop_gcv;
    if (current.gcv <= best.gcv) best = current;
  }
  return best;
}

MarsModel fit(const Mat& x, const Vec& y, const MarsConfig& cfg, bool parallel) {
  return backward_prune(forward_pass(x, y, cfg, parallel), x, y);
}

double predict(const MarsModel& m, std::span<const double> x) {
  if (x.size() != m.input_dim)
    throw ValidationError(str_printf(
        "mars predict: input has %zu dimensions, model expects %zu", x.size(),
        m.input_dim));
  double s = 0.0;
  for (std::size_t k = 0; k < m.basis.size(); ++k)
    s += m.coefficients[k] * eval_basis(m.basis[k], x);
  return s;
}

bool predict_class(const MarsModel& m, std::span<const double> x,
                   double threshold) {
  return predict(m, x) >= threshold;
}

nlohmann::ordered_json MarsModel::to_json() const {
  nlohmann::ordered_json j;
  j["type"] = "mars_model";
  j["config"] = {{"max_basis", config.max_basis},
                 {"min_span", config.min_span},
                 {"max_degree", config.max_degree},
                 {"gcv_penalty", config.gcv_penalty},
                 {"forward_tol", config.forward_tol}};
  j["input_dim"] = input_dim;
  nlohmann::ordered_json jb = nlohmann::ordered_json::array();
  for (const auto& b : basis) {
    nlohmann::ordered_json factors = nlohmann::ordered_json::array();
    for (const auto& f : b.factors)
      factors.push_back({{"var", f.var}, {"knot", f.knot}, {"dir", f.dir}});
    jb.push_back({{"factors", std::move(factors)}});
  }
  j["basis"] = std::move(jb);
  j["coefficients"] = coefficients;
  j["gcv"] = gcv;
  j["rss"] = rss;
  return j;
}

MarsModel MarsModel::from_json(const nlohmann::json& j) {
  MarsModel m;
  const auto& jc = j.at("config");
  m.config.max_basis = jc.at("max_basis").get<int>();
  m.config.min_span = jc.at("min_span").get<int>();
  m.config.max_degree = jc.at("max_degree").get<int>();
  m.config.gcv_penalty = jc.at("gcv_penalty").get<double>();
  m.config.forward_tol = jc.at("forward_tol").get<double>();
  m.input_dim = j.at("input_dim").get<std::size_t>();
  for (const auto& jb : j.at("basis")) {
    BasisFunction b;
    for (const auto& jf : jb.at("factors"))
      b.factors.push_back({jf.at("var").get<int>(), jf.at("knot").get<double>(),
                           jf.at("dir").get<int>()});
    m.basis.push_back(std::move(b));
  }
  m.coefficients = j.at("coefficients").get<Vec>();
  m.gcv = j.at("gcv").get<double>();
  m.rss = j.at("rss").get<double>();
  return m;
}

}  // namespace idsml::mars
