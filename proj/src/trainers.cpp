#include "idsml/trainers.hpp"

#include <cmath>
#include <functional>
#include <memory>

namespace idsml::train {

Algo algo_from_name(const std::string& name) {
  if (name == "gd") return Algo::Gd;
  if (name == "gdm") return Algo::GdMomentum;
  if (name == "gda") return Algo::GdAdaptive;
  if (name == "rprop") return Algo::Rprop;
  if (name == "scg") return Algo::Scg;
  if (name == "oss") return Algo::Oss;
  throw ValidationError("unknown trainer \"" + name +
                        "\" (expected gd|gdm|gda|rprop|scg|oss)");
}

const char* algo_name(Algo a) {
  switch (a) {
    case Algo::Gd: return "gd";
    case Algo::GdMomentum: return "gdm";
    case Algo::GdAdaptive: return "gda";
    case Algo::Rprop: return "rprop";
    case Algo::Scg: return "scg";
    case Algo::Oss: return "oss";
  }
  return "?";
}

const char* algo_display(Algo a) {
  switch (a) {
    case Algo::Gd: return "GD";
    case Algo::GdMomentum: return "GDM";
    case Algo::GdAdaptive: return "GDA";
    case Algo::Rprop: return "RP";
    case Algo::Scg: return "SCG";
    case Algo::Oss: return "OSS";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw ValidationError("train: max_epochs must be >= 1");
  if (!(mse_goal > 0.0)) throw ValidationError("train: mse_goal must be > 0");
  if (!(learning_rate > 0.0)) throw ValidationError("train: learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw ValidationError("train: momentum must be in [0, 1)");
  if (!(lr_grow > 1.0) || !(lr_shrink > 0.0) || !(lr_shrink < 1.0))
    throw ValidationError("train: adaptive rate factors out of range");
  if (!(eta_plus > 1.0) || !(eta_minus > 0.0) || !(eta_minus < 1.0))
    throw ValidationError("train: rprop eta factors out of range");
  if (!(delta_min > 0.0) || delta_init < delta_min || delta_init > delta_max)
    throw ValidationError("train: rprop delta bounds out of order");
  if (!(scg_sigma > 0.0) || !(scg_lambda_init > 0.0))
    throw ValidationError("train: scg sigma/lambda must be > 0");
}

nlohmann::ordered_json TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["epochs_run"] = epochs_run;
  j["final_mse"] = final_mse;
  j["converged"] = converged;
  j["wall_time_sec"] = wall_time_sec;
  j["mse_trace"] = mse_trace;
  return j;
}

RpropState RpropState::init(std::size_t n, double delta0) {
  RpropState st;
  st.delta.assign(n, delta0);
  st.prev_sign.assign(n, 0);
  return st;
}

void rprop_step(const Vec& grad, RpropState& st, Vec& params,
                const TrainConfig& cfg) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    const int s = (g > 0.0) - (g < 0.0);
    const int prev = st.prev_sign[i];
    if (s * prev > 0) {
      st.delta[i] = std::min(st.delta[i] * cfg.eta_plus, cfg.delta_max);
      params[i] -= s * st.delta[i];
      st.prev_sign[i] = static_cast<signed char>(s);
    } else if (s * prev < 0) {
      st.delta[i] = std::max(st.delta[i] * cfg.eta_minus, cfg.delta_min);
      st.prev_sign[i] = 0;  // skip this parameter, forget the sign
    } else {
      params[i] -= s * st.delta[i];
      st.prev_sign[i] = static_cast<signed char>(s);
    }
  }
}

Vec scg_hessian_vector(Objective& f, const Vec& w, const Vec& p, double sigma,
                       double lambda) {
  const double pnorm = norm2(p);
  if (pnorm == 0.0)
    throw ValidationError("scg_hessian_vector: zero direction");
  if (!(sigma > 0.0))
    throw ValidationError("scg_hessian_vector: sigma must be > 0");
  const double step = sigma / pnorm;
  Vec g0;
  f.eval_with_grad(w, g0);
  Vec wp = w;
  axpy(step, p, wp);
  Vec g1;
  f.eval_with_grad(wp, g1);
  Vec hv(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    hv[i] = (g1[i] - g0[i]) / step + lambda * p[i];
  return hv;
}

ScgOptimizer::ScgOptimizer(Objective& f, Vec& w, double loss0, Vec grad0,
                           const TrainConfig& cfg)
    : f_(f),
      w_(w),
      loss_(loss0),
      grad_(std::move(grad0)),
      sigma_(cfg.scg_sigma),
      lambda_(cfg.scg_lambda_init) {
  r_.resize(w_.size());
  for (std::size_t i = 0; i < w_.size(); ++i) r_[i] = -grad_[i];
  p_ = r_;
}

double ScgOptimizer::epoch() {
  const std::size_t n = w_.size();
  if (norm2(r_) == 0.0) return loss_;  // stationary point

  if (success_) {
    mu_ = dot(p_, r_);
    if (mu_ <= 0.0) {  // conjugacy went stale; restart along the residual
      p_ = r_;
      mu_ = dot(p_, r_);
    }
    norm_p2_ = dot(p_, p_);
    const double step = sigma_ / std::sqrt(norm_p2_);
    Vec wp = w_;
    axpy(step, p_, wp);
    Vec gp;
    f_.eval_with_grad(wp, gp);
    delta_ = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      delta_ += p_[i] * ((gp[i] - grad_[i]) / step);
  }

  // Levenberg-style scaling; force positive definiteness along p.
  delta_ += (lambda_ - lambda_bar_) * norm_p2_;
  if (delta_ <= 0.0) {
    lambda_bar_ = 2.0 * (lambda_ - delta_ / norm_p2_);
    delta_ = -delta_ + lambda_ * norm_p2_;
    lambda_ = lambda_bar_;
  }

  const double alpha = mu_ / delta_;
  Vec wtry = w_;
  axpy(alpha, p_, wtry);
  const double ltry = f_.eval(wtry);
  // Agreement between predicted and actual reduction.
  const double comparison = 2.0 * delta_ * (loss_ - ltry) / (mu_ * mu_);

  if (comparison >= 0.0) {
    w_ = std::move(wtry);
    Vec gnew;
    const double lnew = f_.eval_with_grad(w_, gnew);
    Vec r_old = std::move(r_);
    grad_ = std::move(gnew);
    r_.resize(n);
    for (std::size_t i = 0; i < n; ++i) r_[i] = -grad_[i];
    lambda_bar_ = 0.0;
    success_ = true;
    ++iter_;
    if (static_cast<std::size_t>(iter_) % n == 0) {
      p_ = r_;  // periodic restart
    } else {
      const double beta = (dot(r_, r_) - dot(r_, r_old)) / mu_;
      for (std::size_t i = 0; i < n; ++i) p_[i] = r_[i] + beta * p_[i];
    }
    if (comparison >= 0.75) lambda_ = std::max(lambda_ * 0.5, 1e-300);
    loss_ = lnew;
  } else {
    lambda_bar_ = lambda_;
    success_ = false;
  }
  if (comparison < 0.25) lambda_ = std::min(lambda_ * 4.0, 1e150);

  if (!std::isfinite(loss_) || !std::isfinite(lambda_))
    throw ConvergenceError("scg: non-finite loss or scale parameter");
  return loss_;
}

Vec oss_direction(const Vec& g_new, OssState& st) {
  Vec d(g_new.size());
  if (st.has_prev) {
    const double ptv = dot(st.p, st.v);
    const double guard = 1e-12 * std::max(1.0, norm2(st.p) * norm2(st.v));
    if (ptv > guard) {
      const double ptg = dot(st.p, g_new);
      const double vtg = dot(st.v, g_new);
      const double vtv = dot(st.v, st.v);
      const double b = ptg / ptv;
      const double a = -(1.0 + vtv / ptv) * b + vtg / ptv;
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = -g_new[i] + a * st.p[i] + b * st.v[i];
      return d;
    }
    st = OssState{};  // curvature breakdown
  }
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = -g_new[i];
  return d;
}

double line_search(Objective& f, const Vec& w, const Vec& d, double f0,
                   double slope, double c1, int max_halvings) {
  if (!(slope < 0.0))
    throw ValidationError("line_search: d is not a descent direction");
  double alpha = 1.0;
  Vec wt(w.size());
  for (int i = 0; i <= max_halvings; ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) wt[j] = w[j] + alpha * d[j];
    const double ft = f.eval(wt);
    if (ft <= f0 + c1 * alpha * slope) return alpha;
    alpha *= 0.5;
  }
  throw ConvergenceError(
      "line_search: no sufficient decrease within 40 halvings (bad direction?)");
}

namespace {

Vec negated(const Vec& g) {
  Vec d(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i];
  return d;
}

}  // namespace

TrainReport train_objective(Objective& f, Vec& w, const TrainConfig& cfg) {
  cfg.validate();
  StopWatch watch;
  TrainReport rep;

  Vec g;
  double loss = f.eval_with_grad(w, g);
  if (!std::isfinite(loss))
    throw ConvergenceError("training: initial loss is not finite");
  rep.mse_trace.push_back(loss);
  if (loss <= cfg.mse_goal) {
    rep.converged = true;
    rep.final_mse = loss;
    rep.wall_time_sec = watch.seconds();
    return rep;
  }

  // Per-algorithm epoch: update w and refresh (loss, g) at the new iterate.
  std::function<double()> run_epoch;
  RpropState rprop_state;
  std::unique_ptr<ScgOptimizer> scg;
  OssState oss_state;
  Vec velocity;
  double lr = cfg.learning_rate;

  switch (cfg.algorithm) {
    case Algo::Gd:
      run_epoch = [&]() {
        axpy(-lr, g, w);
        loss = f.eval_with_grad(w, g);
        return loss;
      };
      break;
    case Algo::GdMomentum:
      velocity.assign(w.size(), 0.0);
      run_epoch = [&]() {
        for (std::size_t i = 0; i < w.size(); ++i) {
          velocity[i] = cfg.momentum * velocity[i] - lr * g[i];
          w[i] += velocity[i];
        }
        loss = f.eval_with_grad(w, g);
        return loss;
      };
      break;
    case Algo::GdAdaptive:
      run_epoch = [&]() {
        Vec wtry = w;
        axpy(-lr, g, wtry);
        Vec gtry;
        const double ltry = f.eval_with_grad(wtry, gtry);
        if (ltry < loss) {
          w = std::move(wtry);
          g = std::move(gtry);
          loss = ltry;
          lr *= cfg.lr_grow;
        } else {
          lr *= cfg.lr_shrink;  // step rejected
        }
        return loss;
      };
      break;
    case Algo::Rprop:
      rprop_state = RpropState::init(w.size(), cfg.delta_init);
      run_epoch = [&]() {
        rprop_step(g, rprop_state, w, cfg);
        loss = f.eval_with_grad(w, g);
        return loss;
      };
      break;
    case Algo::Scg:
      scg = std::make_unique<ScgOptimizer>(f, w, loss, g, cfg);
      run_epoch = [&]() { return scg->epoch(); };
      break;
    case Algo::Oss:
      run_epoch = [&]() {
        Vec d = oss_direction(g, oss_state);
        double slope = dot(d, g);
        if (!(slope < 0.0)) {
          d = negated(g);
          oss_state = OssState{};
          slope = dot(d, g);
          if (slope == 0.0) return loss;  // stationary
        }
        double alpha;
        try {
          alpha = line_search(f, w, d, loss, slope);
        } catch (const ConvergenceError&) {
          d = negated(g);
          oss_state = OssState{};
          slope = dot(d, g);
          alpha = line_search(f, w, d, loss, slope);
        }
        Vec w_old = w;
        Vec g_old = g;
        axpy(alpha, d, w);
        loss = f.eval_with_grad(w, g);
        oss_state.has_prev = true;
        oss_state.p.resize(w.size());
        oss_state.v.resize(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
          oss_state.p[i] = w[i] - w_old[i];
          oss_state.v[i] = g[i] - g_old[i];
        }
        return loss;
      };
      break;
  }

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double lnew = run_epoch();
    if (!std::isfinite(lnew))
      throw ConvergenceError(
          str_printf("training: non-finite loss at epoch %d", epoch));
    rep.mse_trace.push_back(lnew);
    rep.epochs_run = epoch;
    if (lnew <= cfg.mse_goal) {
      rep.converged = true;
      break;
    }
  }
  rep.final_mse = rep.mse_trace.back();
  rep.wall_time_sec = watch.seconds();
  return rep;
}

double MlpObjective::eval_with_grad(const Vec& w, Vec& grad) {
  model_.set_params(w);
  mlp::LossReport r = mlp::loss_and_gradient(model_, x_, y_, parallel_);
  grad = std::move(r.gradient);
  return r.mse;
}

double MlpObjective::eval(const Vec& w) {
  model_.set_params(w);
  return mlp::mse_only(model_, x_, y_, parallel_);
}

std::pair<mlp::MlpModel, TrainReport> train(mlp::MlpModel m, const Mat& x,
                                            const Mat& y,
                                            const TrainConfig& cfg,
                                            bool parallel) {
  if (x.rows() == 0) throw ValidationError("train: empty dataset");
  MlpObjective objective(m, x, y, parallel);
  Vec w = m.get_params();
  TrainReport rep = train_objective(objective, w, cfg);
  m.set_params(w);
  return {std::move(m), std::move(rep)};
}

}  // namespace idsml::train
