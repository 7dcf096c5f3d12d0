#include <cmath>
#include <limits>

#include "doctest.h"
#include "idsml/trainers.hpp"
#include "oracles.hpp"

using namespace idsml;
using oracles::QuadraticObjective;

namespace {

// Least-squares regression objective E(w) = mean_i (w.x_i - y_i)^2 with its
// exact gradient; the "linear network" toy.
struct LinearRegressionObjective : train::Objective {
  Mat x;
  Vec y;

  double eval_with_grad(const Vec& w, Vec& grad) override {
    const std::size_t n = x.rows();
    grad.assign(w.size(), 0.0);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double pred = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) pred += w[j] * x(i, j);
      const double r = pred - y[i];
      e += r * r;
      for (std::size_t j = 0; j < w.size(); ++j)
        grad[j] += 2.0 * r * x(i, j) / double(n);
    }
    return e / double(n);
  }
};

LinearRegressionObjective make_toy(Rng& rng, std::size_t n, std::size_t d,
                                   Vec* w_true_out) {
  LinearRegressionObjective obj;
  obj.x = Mat(n, d);
  for (double& v : obj.x.data()) v = rng.uniform(-1.0, 1.0);
  Vec w_true(d);
  for (double& v : w_true) v = rng.uniform(-2.0, 2.0);
  obj.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += w_true[j] * obj.x(i, j);
    obj.y[i] = s;
  }
  if (w_true_out) *w_true_out = w_true;
  return obj;
}

QuadraticObjective make_quadratic(Rng& rng, std::size_t n, double lo, double hi) {
  QuadraticObjective q;
  q.a = oracles::random_spd(n, rng, lo, hi);
  q.b.resize(n);
  for (double& v : q.b) v = rng.gauss();
  return q;
}

}  // namespace

TEST_CASE("train config validation") {
  train::TrainConfig cfg;
  cfg.max_epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.mse_goal = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.delta_init = 1e-9;  // below delta_min
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("rprop_step follows the sign rules") {
  train::TrainConfig cfg;
  Vec params = {0.0, 0.0, 0.0};

  SUBCASE("repeated sign grows the update value") {
    auto st = train::RpropState::init(1, 0.1);
    st.prev_sign[0] = +1;
    Vec grad = {+2.5};
    Vec p = {0.0};
    train::rprop_step(grad, st, p, cfg);
    CHECK(st.delta[0] == doctest::Approx(0.12));
    CHECK(p[0] == doctest::Approx(-0.12));
    CHECK(st.prev_sign[0] == +1);
  }
  SUBCASE("sign flip shrinks, skips, clears") {
    auto st = train::RpropState::init(1, 0.12);
    st.prev_sign[0] = -1;
    Vec grad = {+1.0};
    Vec p = {0.5};
    train::rprop_step(grad, st, p, cfg);
    CHECK(st.delta[0] == doctest::Approx(0.06));
    CHECK(p[0] == 0.5);  // step skipped
    CHECK(st.prev_sign[0] == 0);
  }
  SUBCASE("zero derivative leaves everything alone") {
    auto st = train::RpropState::init(1, 0.07);
    st.prev_sign[0] = +1;
    Vec grad = {0.0};
    Vec p = {1.0};
    train::rprop_step(grad, st, p, cfg);
    CHECK(st.delta[0] == doctest::Approx(0.07));
    CHECK(p[0] == 1.0);
  }
  SUBCASE("bounds are clamped") {
    auto st = train::RpropState::init(1, 45.0);
    st.prev_sign[0] = +1;
    Vec grad = {1.0};
    Vec p = {0.0};
    train::rprop_step(grad, st, p, cfg);
    CHECK(st.delta[0] == cfg.delta_max);
  }
}

TEST_CASE("rprop trajectory is invariant to positive loss scaling") {
  Rng rng(42);
  for (int rep = 0; rep < 4; ++rep) {
    QuadraticObjective q = make_quadratic(rng, 6, 0.5, 3.0);
    struct Scaled : train::Objective {
      QuadraticObjective* inner;
      double c;
      double eval_with_grad(const Vec& w, Vec& g) override {
        const double e = inner->eval_with_grad(w, g);
        for (double& v : g) v *= c;
        return c * e;
      }
    } scaled;
    scaled.inner = &q;
    scaled.c = 7.3;

    train::TrainConfig cfg;
    cfg.algorithm = train::Algo::Rprop;
    cfg.max_epochs = 20;
    cfg.mse_goal = 1e-300;
    Vec w1(6, 1.0), w2(6, 1.0);
    train::train_objective(q, w1, cfg);
    train::train_objective(scaled, w2, cfg);
    CHECK(w1 == w2);  // bit-exact: only gradient signs are used
  }
}

TEST_CASE("rprop keeps every update value inside its bounds") {
  Rng rng(7);
  QuadraticObjective q = make_quadratic(rng, 5, 0.2, 4.0);
  train::TrainConfig cfg;
  cfg.delta_min = 1e-4;
  cfg.delta_max = 0.5;
  auto st = train::RpropState::init(5, cfg.delta_init = 0.07);
  Vec w(5, 2.0), g;
  for (int epoch = 0; epoch < 60; ++epoch) {
    q.eval_with_grad(w, g);
    train::rprop_step(g, st, w, cfg);
    for (double d : st.delta) {
      CHECK(d >= cfg.delta_min);
      CHECK(d <= cfg.delta_max);
    }
  }
}

TEST_CASE("gradient descent with a small rate decreases a convex quadratic monotonically") {
  Rng rng(3);
  QuadraticObjective q = make_quadratic(rng, 4, 0.5, 2.0);
  train::TrainConfig cfg;
  cfg.algorithm = train::Algo::Gd;
  cfg.learning_rate = 0.1;
  cfg.max_epochs = 100;
  cfg.mse_goal = 1e-12;
  Vec w(4, 1.5);
  const auto rep = train::train_objective(q, w, cfg);
  for (std::size_t i = 1; i < rep.mse_trace.size(); ++i)
    CHECK(rep.mse_trace[i] <= rep.mse_trace[i - 1] + 1e-15);
}

TEST_CASE("adaptive rate never accepts a worse iterate") {
  Rng rng(9);
  QuadraticObjective q = make_quadratic(rng, 5, 0.5, 5.0);
  train::TrainConfig cfg;
  cfg.algorithm = train::Algo::GdAdaptive;
  cfg.learning_rate = 1.5;  // deliberately too big; rejections must kick in
  cfg.max_epochs = 200;
  cfg.mse_goal = 1e-10;
  Vec w(5, 1.0);
  const auto rep = train::train_objective(q, w, cfg);
  for (std::size_t i = 1; i < rep.mse_trace.size(); ++i)
    CHECK(rep.mse_trace[i] <= rep.mse_trace[i - 1] + 1e-15);
}

TEST_CASE("train: immediate return when the goal is already met") {
  Rng rng(1);
  QuadraticObjective q = make_quadratic(rng, 3, 0.5, 1.5);
  q.c = 0.0;
  train::TrainConfig cfg;
  cfg.mse_goal = 1e3;  // any loss qualifies
  Vec w(3, 0.5);
  const auto rep = train::train_objective(q, w, cfg);
  CHECK(rep.epochs_run == 0);
  CHECK(rep.converged);
  CHECK(rep.mse_trace.size() == 1);
}

TEST_CASE("train: max_epochs=1 applies exactly one update") {
  Rng rng(2);
  QuadraticObjective q = make_quadratic(rng, 3, 0.5, 1.5);
  train::TrainConfig cfg;
  cfg.algorithm = train::Algo::Gd;
  cfg.max_epochs = 1;
  cfg.mse_goal = 1e-300;
  Vec w(3, 1.0);
  const Vec w0 = w;
  const auto rep = train::train_objective(q, w, cfg);
  CHECK(rep.epochs_run == 1);
  CHECK(w != w0);
  CHECK(rep.mse_trace.size() == 2);
}

TEST_CASE("every algorithm solves the linear-regression toy") {
  Rng rng(1234);
  Vec w_true;
  LinearRegressionObjective toy = make_toy(rng, 60, 4, &w_true);

  // Normal-equations oracle for the optimum.
  std::vector<Vec> cols(4, Vec(60));
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t j = 0; j < 4; ++j) cols[j][i] = toy.x(i, j);
  const Vec w_star = oracles::normal_equations_ge(cols, toy.y);

  const train::Algo algos[] = {train::Algo::Gd,     train::Algo::GdMomentum,
                               train::Algo::GdAdaptive, train::Algo::Rprop,
                               train::Algo::Scg,    train::Algo::Oss};
  for (train::Algo algo : algos) {
    CAPTURE(train::algo_name(algo));
    train::TrainConfig cfg;
    cfg.algorithm = algo;
    cfg.max_epochs = 500;
    cfg.mse_goal = 1e-6;
    cfg.learning_rate = 0.5;
    cfg.scg_lambda_init = 1e-10;
    Vec w(4, 0.0);
    const auto rep = train::train_objective(toy, w, cfg);
    CHECK(rep.converged);
    CHECK(rep.final_mse <= 1e-6);
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(std::abs(w[j] - w_star[j]) < 5e-3);
  }
}

TEST_CASE("scg_hessian_vector matches the exact quadratic Hessian") {
  Rng rng(55);
  QuadraticObjective q = make_quadratic(rng, 8, 0.5, 4.0);
  Vec w(8), p(8);
  for (double& v : w) v = rng.gauss();
  for (double& v : p) v = rng.gauss();
  const Vec hv = train::scg_hessian_vector(q, w, p, 1e-4, 0.0);
  for (std::size_t i = 0; i < 8; ++i) {
    double want = 0.0;
    for (std::size_t j = 0; j < 8; ++j) want += q.a(i, j) * p[j];
    CHECK(hv[i] == doctest::Approx(want).epsilon(1e-6));
  }

  // scaling p scales the product
  Vec p3 = p;
  for (double& v : p3) v *= 3.0;
  const Vec hv3 = train::scg_hessian_vector(q, w, p3, 1e-4, 0.0);
  for (std::size_t i = 0; i < 8; ++i)
    CHECK(hv3[i] == doctest::Approx(3.0 * hv[i]).epsilon(1e-5));

  // lambda adds lambda*p
  const Vec hvl = train::scg_hessian_vector(q, w, p, 1e-4, 2.5);
  for (std::size_t i = 0; i < 8; ++i)
    CHECK(hvl[i] - hv[i] == doctest::Approx(2.5 * p[i]).epsilon(1e-10));

  CHECK_THROWS_AS(train::scg_hessian_vector(q, w, Vec(8, 0.0), 1e-4, 0.0),
                  ValidationError);
}

TEST_CASE("scg solves an exact quadratic in about n iterations") {
  Rng rng(66);
  for (std::size_t n : {3, 7, 12}) {
    QuadraticObjective q = make_quadratic(rng, n, 0.5, 5.0);
    train::TrainConfig cfg;
    cfg.scg_lambda_init = 1e-12;
    Vec w(n, 0.0), g;
    double loss = q.eval_with_grad(w, g);
    train::ScgOptimizer scg(q, w, loss, g, cfg);
    for (std::size_t it = 0; it < n + 5 && scg.grad_norm() > 1e-8; ++it)
      scg.epoch();
    CHECK(scg.grad_norm() < 1e-8);
    CHECK(scg.lambda() > 0.0);
  }
}

TEST_CASE("scg: accepted steps never raise the loss, indefinite curvature raises lambda") {
  Rng rng(77);
  // Indefinite quadratic: flip one eigenvalue negative.
  QuadraticObjective q;
  q.a = oracles::random_spd(6, rng, 0.5, 3.0);
  for (std::size_t j = 0; j < 6; ++j) q.a(0, j) = -q.a(0, j);
  for (std::size_t i = 0; i < 6; ++i) q.a(i, 0) = q.a(0, i);
  q.b.assign(6, 0.25);

  train::TrainConfig cfg;
  cfg.algorithm = train::Algo::Scg;
  cfg.max_epochs = 40;
  cfg.mse_goal = 1e-300;
  Vec w(6, 1.0), g;
  double loss = q.eval_with_grad(w, g);
  train::ScgOptimizer scg(q, w, loss, g, cfg);
  const double lambda0 = scg.lambda();
  double prev = loss;
  double lambda_peak = lambda0;
  for (int it = 0; it < 40; ++it) {
    const double cur = scg.epoch();
    CHECK(cur <= prev + 1e-12);
    prev = cur;
    lambda_peak = std::max(lambda_peak, scg.lambda());
    CHECK(scg.lambda() > 0.0);
  }
  CHECK(lambda_peak > lambda0);
}

TEST_CASE("scg at a stationary point is a converged no-op") {
  QuadraticObjective q;
  q.a = Mat(3, 3);
  for (int i = 0; i < 3; ++i) q.a(i, i) = 2.0;
  q.b.assign(3, 0.0);
  train::TrainConfig cfg;
  Vec w(3, 0.0), g;
  const double loss = q.eval_with_grad(w, g);
  train::ScgOptimizer scg(q, w, loss, g, cfg);
  CHECK(scg.epoch() == loss);
  CHECK(w == Vec(3, 0.0));
}

TEST_CASE("oss_direction: first call and stationary input") {
  train::OssState st;
  const Vec g = {1.0, -2.0};
  const Vec d = train::oss_direction(g, st);
  CHECK(d == Vec{-1.0, 2.0});

  st.has_prev = true;
  st.p = {0.1, 0.1};
  st.v = {0.1, 0.1};
  const Vec d0 = train::oss_direction(Vec{0.0, 0.0}, st);
  CHECK(d0 == Vec{0.0, 0.0});
}

TEST_CASE("oss_direction matches the dense rank-two oracle") {
  Rng rng(88);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.bounded(9);
    Vec p(n), v(n), g(n);
    for (double& x : p) x = rng.gauss();
    for (double& x : v) x = rng.gauss();
    for (double& x : g) x = rng.gauss();
    if (dot(p, v) <= 1e-3) continue;  // oracle needs solid curvature
    train::OssState st{true, p, v};
    const Vec got = train::oss_direction(g, st);
    const Vec want = oracles::oss_direction_dense(g, p, v);
    double scale = 1.0;
    for (double x : want) scale = std::max(scale, std::abs(x));
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::abs(got[i] - want[i]) <= 1e-10 * scale);
  }
}

TEST_CASE("oss direction descends whenever the curvature guard passes") {
  Rng rng(101);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.bounded(7);
    Vec p(n), v(n), g(n);
    for (double& x : p) x = rng.gauss();
    for (double& x : v) x = rng.gauss();
    for (double& x : g) x = rng.gauss();
    if (dot(p, v) <= 1e-6 * norm2(p) * norm2(v)) continue;
    train::OssState st{true, p, v};
    const Vec d = train::oss_direction(g, st);
    CHECK(dot(d, g) < 0.0);
  }
}

TEST_CASE("oss_direction falls back to steepest descent on curvature breakdown") {
  train::OssState st{true, {1.0, 0.0}, {-1.0, 0.0}};  // p.v < 0
  const Vec g = {2.0, 2.0};
  const Vec d = train::oss_direction(g, st);
  CHECK(d == Vec{-2.0, -2.0});
  CHECK_FALSE(st.has_prev);  // state was reset
}

TEST_CASE("line_search: quadratic example and contract violations") {
  QuadraticObjective q;  // (w-3)^2 = 1/2 w^T [2] w - 6w + 9
  q.a = Mat(1, 1);
  q.a(0, 0) = 2.0;
  q.b = {-6.0};
  q.c = 9.0;
  const Vec w = {0.0};
  Vec g;
  const double f0 = q.eval_with_grad(w, g);  // 9, slope along +1 is -6
  const double alpha = train::line_search(q, w, {1.0}, f0, dot(g, Vec{1.0}));
  CHECK(alpha == 1.0);  // E(1) = 4 satisfies the sufficient decrease at once

  CHECK_THROWS_AS(train::line_search(q, w, {-1.0}, f0, dot(g, Vec{-1.0})),
                  ValidationError);  // ascent direction
}

TEST_CASE("training reports non-finite loss with the epoch number") {
  struct Exploding : train::Objective {
    int calls = 0;
    double eval_with_grad(const Vec& w, Vec& g) override {
      g.assign(w.size(), 1.0);
      return ++calls >= 3 ? std::numeric_limits<double>::infinity() : 1.0;
    }
  } obj;
  train::TrainConfig cfg;
  cfg.algorithm = train::Algo::Gd;
  cfg.max_epochs = 10;
  Vec w = {0.0};
  try {
    train::train_objective(obj, w, cfg);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(std::string(e.what()).find("epoch 2") != std::string::npos);
  }
}

TEST_CASE("mlp training dispatcher is deterministic and honors the goal") {
  Rng rng(99);
  Mat x(32, 3);
  for (double& v : x.data()) v = rng.u01();
  Mat y(32, 2);
  for (std::size_t i = 0; i < 32; ++i) y(i, x(i, 0) > 0.5 ? 1 : 0) = 1.0;

  train::TrainConfig cfg;
  cfg.algorithm = train::Algo::Rprop;
  cfg.max_epochs = 300;
  cfg.mse_goal = 0.01;

  auto [m1, r1] = train::train(mlp::init({3, 6, 2}, 7), x, y, cfg);
  auto [m2, r2] = train::train(mlp::init({3, 6, 2}, 7), x, y, cfg);
  CHECK(m1.get_params() == m2.get_params());
  CHECK(r1.final_mse == r2.final_mse);
  CHECK(r1.epochs_run == r2.epochs_run);
  CHECK(r1.converged == (r1.final_mse <= cfg.mse_goal));
  for (double v : r1.mse_trace) CHECK(std::isfinite(v));
}
