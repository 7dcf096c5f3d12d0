#ifndef IDSML_TRAINERS_HPP
#define IDSML_TRAINERS_HPP

#include <string>
#include <utility>
#include <vector>

#include "idsml/common.hpp"
#include "idsml/mlp.hpp"

#include "json.hpp"

namespace idsml::train {

// Full-batch objective: loss and exact gradient at w. eval() may be cheaper
// when the gradient is not needed.
struct Objective {
  virtual ~Objective() = default;
  virtual double eval_with_grad(const Vec& w, Vec& grad) = 0;
  virtual double eval(const Vec& w) {
    Vec g;
    return eval_with_grad(w, g);
  }
};

enum class Algo { Gd, GdMomentum, GdAdaptive, Rprop, Scg, Oss };

Algo algo_from_name(const std::string& name);  // gd|gdm|gda|rprop|scg|oss
const char* algo_name(Algo a);                 // config token
const char* algo_display(Algo a);              // table heading (RP, SCG, ...)

struct TrainConfig {
  Algo algorithm = Algo::Rprop;
  int max_epochs = 1000;
  double mse_goal = 0.001;

  // gradient descent family
  double learning_rate = 0.01;
  double momentum = 0.9;
  double lr_grow = 1.05;    // adaptive: after a loss decrease
  double lr_shrink = 0.7;   // adaptive: after a rejected step

  // resilient backpropagation (Riedmiller & Braun defaults)
  double eta_plus = 1.2;
  double eta_minus = 0.5;
  double delta_init = 0.07;
  double delta_max = 50.0;
  double delta_min = 1e-6;

  // scaled conjugate gradient
  double scg_sigma = 1e-4;
  double scg_lambda_init = 1e-6;

  void validate() const;
};

struct TrainReport {
  int epochs_run = 0;
  double final_mse = 0.0;
  std::vector<double> mse_trace;  // [0] = loss before training, then per epoch
  bool converged = false;
  double wall_time_sec = 0.0;

  nlohmann::ordered_json to_json() const;
};

// ---- RPROP ----------------------------------------------------------------

struct RpropState {
  Vec delta;
  std::vector<signed char> prev_sign;

  static RpropState init(std::size_t n, double delta0);
};

// One sweep of sign-based updates (the iRPROP- variant: on a sign flip the
// update value shrinks, the step is skipped and the stored sign cleared).
void rprop_step(const Vec& grad, RpropState& st, Vec& params,
                const TrainConfig& cfg);

// ---- SCG ------------------------------------------------------------------

// Finite-difference Hessian-vector product
//   H p ~ (grad(w + s p) - grad(w)) / s + lambda p,   s = sigma/|p|.
Vec scg_hessian_vector(Objective& f, const Vec& w, const Vec& p, double sigma,
                       double lambda);

// Moller's scaled conjugate gradient; one epoch = one iteration (which may
// only raise lambda when the quadratic model disagrees).
class ScgOptimizer {
 public:
  ScgOptimizer(Objective& f, Vec& w, double loss0, Vec grad0,
               const TrainConfig& cfg);

  double epoch();  // returns the loss at the (possibly unchanged) iterate

  double loss() const { return loss_; }
  double lambda() const { return lambda_; }
  double grad_norm() const { return norm2(grad_); }
  int iterations() const { return iter_; }

 private:
  Objective& f_;
  Vec& w_;
  double loss_;
  Vec grad_;
  Vec r_;  // -grad
  Vec p_;  // search direction
  double sigma_;
  double lambda_;
  double lambda_bar_ = 0.0;
  bool success_ = true;
  double delta_ = 0.0;  // curvature along p, rescaled across retries
  double mu_ = 0.0;
  double norm_p2_ = 0.0;
  int iter_ = 0;
};

// ---- one-step secant -------------------------------------------------------

struct OssState {
  bool has_prev = false;
  Vec p;  // previous parameter change w_new - w_old
  Vec v;  // previous gradient change g_new - g_old
};

// Memoryless quasi-Newton direction: -G g with the rank-two inverse-Hessian
// update taken from the identity. Falls back to steepest descent (and resets
// the state) when the stored curvature p.v is not safely positive.
Vec oss_direction(const Vec& g_new, OssState& st);

// Backtracking Armijo search from alpha=1 (sufficient decrease c1, halving).
// slope must be negative (descent direction) or ValidationError; throws
// ConvergenceError when no step is accepted within max_halvings.
double line_search(Objective& f, const Vec& w, const Vec& d, double f0,
                   double slope, double c1 = 1e-4, int max_halvings = 40);

// ---- driver ----------------------------------------------------------------

// Runs the configured algorithm on an arbitrary objective. Stops as soon as
// the loss reaches mse_goal (checked after each epoch) or at max_epochs.
TrainReport train_objective(Objective& f, Vec& w, const TrainConfig& cfg);

// Full-batch MLP objective over a fixed dataset.
class MlpObjective : public Objective {
 public:
  MlpObjective(mlp::MlpModel& m, const Mat& x, const Mat& y,
               bool parallel = true)
      : model_(m), x_(x), y_(y), parallel_(parallel) {}

  double eval_with_grad(const Vec& w, Vec& grad) override;
  double eval(const Vec& w) override;

 private:
  mlp::MlpModel& model_;
  const Mat& x_;
  const Mat& y_;
  bool parallel_;
};

// Trains the network on (x, y) and returns the updated model plus report.
std::pair<mlp::MlpModel, TrainReport> train(mlp::MlpModel m, const Mat& x,
                                            const Mat& y,
                                            const TrainConfig& cfg,
                                            bool parallel = true);

}  // namespace idsml::train

#endif  // IDSML_TRAINERS_HPP
