#ifndef IDSML_MARS_HPP
#define IDSML_MARS_HPP

#include <span>
#include <vector>

#include "idsml/common.hpp"

#include "json.hpp"

namespace idsml::mars {

// One truncated-linear factor max(0, dir * (x[var] - knot)), dir in {+1,-1}.
struct HingeFactor {
  int var = 0;
  double knot = 0.0;
  int dir = +1;
};

// Product of hinge factors; the empty product is the constant term. Factors
// never repeat a variable within one basis function.
struct BasisFunction {
  std::vector<HingeFactor> factors;

  bool is_constant() const { return factors.empty(); }
  int degree() const { return static_cast<int>(factors.size()); }
  bool uses_var(int var) const;
};

// Evaluates the factor product at x. Throws ValidationError if a factor
// references a variable beyond x.
double eval_basis(const BasisFunction& b, std::span<const double> x);

struct MarsConfig {
  int max_basis = 5;     // budget of non-constant terms; the constant is free
  int min_span = 10;     // observations required between admissible knots
  int max_degree = 1;    // 1 = additive, 2 = pairwise interactions
  double gcv_penalty = 3.0;
  double forward_tol = 1e-6;  // stop when relative RSS improvement drops below

  void validate() const;
};

struct MarsModel {
  MarsConfig config;
  std::size_t input_dim = 0;
  std::vector<BasisFunction> basis;  // basis[0] is the constant term
  Vec coefficients;
  double gcv = 0.0;
  double rss = 0.0;  // training residual of the fitted coefficients

  nlohmann::ordered_json to_json() const;
  static MarsModel from_json(const nlohmann::json& j);
};

// Generalized cross-validation score (rss/n) / (1 - ep/n)^2 with
// ep = num_basis + penalty * num_knots. Throws when ep >= n.
double gcv(double rss, std::size_t n, std::size_t num_basis,
           std::size_t num_knots, double penalty);

// Number of distinct (variable, knot) pairs across all factors.
std::size_t count_knots(const std::vector<BasisFunction>& basis);

// Least-squares coefficients for a fixed basis (normal equations; jittered
// Cholesky when rank-deficient, which zeroes degenerate columns).
Vec fit_least_squares(const std::vector<BasisFunction>& basis, const Mat& x,
                      const Vec& y);

// Winner of one forward step: the (parent, variable, knot) mirror pair with
// the lowest post-addition RSS. Ties break toward the lowest variable index,
// then the smallest knot, then the earliest parent.
struct Candidate {
  bool valid = false;
  double rss = 0.0;
  int parent = -1;
  int var = -1;
  double knot = 0.0;
};

// Scans every admissible (parent, variable, knot) triple. The parallel path
// partitions (parent, variable) tasks across threads and merges with the
// same total order, so it selects the identical candidate as serial=false.
Candidate search_step(const Mat& x, const Vec& y,
                      const std::vector<BasisFunction>& basis,
                      const MarsConfig& cfg, bool parallel = true);

// Greedy forward growth by mirror pairs until the budget or the improvement
// tolerance is hit. Requires at least 2*min_span rows.
MarsModel forward_pass(const Mat& x, const Vec& y, const MarsConfig& cfg,
                       bool parallel = true);

// Deletes terms one at a time (lowest-GCV subset at each step) and returns
// the best model seen along the deletion path. The constant stays.
MarsModel backward_prune(const MarsModel& m, const Mat& x, const Vec& y);

// forward_pass + backward_prune.
MarsModel fit(const Mat& x, const Vec& y, const MarsConfig& cfg,
              bool parallel = true);

double predict(const MarsModel& m, std::span<const double> x);
// Regression score thresholded into a binary decision (targets {0,1}).
bool predict_class(const MarsModel& m, std::span<const double> x,
                   double threshold = 0.5);

}  // namespace idsml::mars

#endif  // IDSML_MARS_HPP
