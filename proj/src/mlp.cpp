#include "idsml/mlp.hpp"

#include <algorithm>
#include <cmath>

namespace idsml::mlp {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_shapes(const MlpModel& m, const Mat& x, const Mat& y) {
  if (x.rows() == 0) throw ValidationError("mlp: empty batch");
  if (x.cols() != m.input_size())
    throw ValidationError(str_printf("mlp: input width %zu, model expects %zu",
                                     x.cols(), m.input_size()));
  if (y.rows() != x.rows() || y.cols() != m.output_size())
    throw ValidationError("mlp: target shape mismatch");
}

// Activations for one sample, then gradient contributions accumulated into
// grad (flat layout, unscaled). Returns the sample's summed squared error.
struct SampleWork {
  std::vector<Vec> act;    // act[l], l = 0..L
  std::vector<Vec> delta;  // delta[l], l = 1..L (index l-1)

  explicit SampleWork(const MlpModel& m) {
    act.resize(m.layer_sizes.size());
    for (std::size_t l = 0; l < m.layer_sizes.size(); ++l)
      act[l].resize(m.layer_sizes[l]);
    delta.resize(m.weights.size());
    for (std::size_t l = 0; l < m.weights.size(); ++l)
      delta[l].resize(m.layer_sizes[l + 1]);
  }
};

double backprop_sample(const MlpModel& m, std::span<const double> x,
                       std::span<const double> target, SampleWork& ws,
                       double* grad) {
  const std::size_t layers = m.weights.size();
  std::copy(x.begin(), x.end(), ws.act[0].begin());
  for (std::size_t l = 0; l < layers; ++l) {
    const Mat& w = m.weights[l];
    const Vec& b = m.biases[l];
    const Vec& in = ws.act[l];
    Vec& out = ws.act[l + 1];
    const bool last = (l + 1 == layers);
    for (std::size_t j = 0; j < w.rows(); ++j) {
      double z = b[j];
      const double* row = w.row_ptr(j);
      for (std::size_t i = 0; i < w.cols(); ++i) z += row[i] * in[i];
      out[j] = last ? logistic(z) : std::tanh(z);
    }
  }

  const Vec& out = ws.act[layers];
  double se = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double e = out[k] - target[k];
    se += e * e;
    ws.delta[layers - 1][k] = 2.0 * e * out[k] * (1.0 - out[k]);
  }
  for (std::size_t l = layers - 1; l > 0; --l) {
    const Mat& w = m.weights[l];
    Vec& d = ws.delta[l - 1];
    const Vec& dn = ws.delta[l];
    const Vec& a = ws.act[l];
    for (std::size_t i = 0; i < w.cols(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < w.rows(); ++j) s += w(j, i) * dn[j];
      d[i] = s * (1.0 - a[i] * a[i]);
    }
  }

  std::size_t pos = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const Vec& d = ws.delta[l];
    const Vec& a = ws.act[l];
    for (std::size_t j = 0; j < d.size(); ++j) {
      for (std::size_t i = 0; i < a.size(); ++i) grad[pos++] += d[j] * a[i];
    }
    for (std::size_t j = 0; j < d.size(); ++j) grad[pos++] += d[j];
  }
  return se;
}

}  // namespace

std::size_t MlpModel::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    n += layer_sizes[l + 1] * layer_sizes[l] + layer_sizes[l + 1];
  return n;
}

Vec MlpModel::get_params() const {
  Vec p;
  p.reserve(param_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    p.insert(p.end(), weights[l].data().begin(), weights[l].data().end());
    p.insert(p.end(), biases[l].begin(), biases[l].end());
  }
  return p;
}

void MlpModel::set_params(std::span<const double> p) {
  if (p.size() != param_count())
    throw ValidationError("mlp: parameter vector length mismatch");
  std::size_t pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy(p.begin() + pos, p.begin() + pos + weights[l].data().size(),
              weights[l].data().begin());
    pos += weights[l].data().size();
    std::copy(p.begin() + pos, p.begin() + pos + biases[l].size(),
              biases[l].begin());
    pos += biases[l].size();
  }
}

MlpModel init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2)
    throw ValidationError("mlp: need at least input and output layers");
  for (std::size_t s : layer_sizes)
    if (s < 1) throw ValidationError("mlp: layer sizes must be >= 1");

  MlpModel m;
  m.layer_sizes = layer_sizes;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t fan_in = layer_sizes[l];
    const std::size_t fan_out = layer_sizes[l + 1];
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Mat w(fan_out, fan_in);
    for (double& v : w.data()) v = rng.uniform(-r, r);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(fan_out, 0.0);
  }
  return m;
}

Vec forward(const MlpModel& m, std::span<const double> x) {
  if (x.size() != m.input_size())
    throw ValidationError(str_printf("mlp: input has %zu values, model expects %zu",
                                     x.size(), m.input_size()));
  Vec cur(x.begin(), x.end());
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const Mat& w = m.weights[l];
    const bool last = (l + 1 == m.weights.size());
    Vec next(w.rows());
    for (std::size_t j = 0; j < w.rows(); ++j) {
      double z = m.biases[l][j];
      const double* row = w.row_ptr(j);
      for (std::size_t i = 0; i < w.cols(); ++i) z += row[i] * cur[i];
      next[j] = last ? logistic(z) : std::tanh(z);
    }
    cur = std::move(next);
  }
  return cur;
}

Mat forward_batch(const MlpModel& m, const Mat& x, bool parallel) {
  Mat out(x.rows(), m.output_size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(x.rows()); ++i) {
    const Vec o = forward(m, x.row(i));
    std::copy(o.begin(), o.end(), out.row_ptr(i));
  }
  return out;
}

LossReport loss_and_gradient(const MlpModel& m, const Mat& x, const Mat& y,
                             bool parallel) {
  check_shapes(m, x, y);
  const std::size_t n = x.rows();
  const std::size_t pcount = m.param_count();
  const std::size_t nblocks = (n + kReductionBlock - 1) / kReductionBlock;

  Mat block_grad(nblocks, pcount);
  Vec block_se(nblocks, 0.0);

#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
    SampleWork ws(m);
    double* g = block_grad.row_ptr(b);
    double se = 0.0;
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    for (std::size_t s = lo; s < hi; ++s)
      se += backprop_sample(m, x.row(s), y.row(s), ws, g);
    block_se[b] = se;
  }

  LossReport report;
  report.gradient.assign(pcount, 0.0);
  double se = 0.0;
  for (std::size_t b = 0; b < nblocks; ++b) {
    const double* g = block_grad.row_ptr(b);
    for (std::size_t i = 0; i < pcount; ++i) report.gradient[i] += g[i];
    se += block_se[b];
  }
  const double scale = 1.0 / (static_cast<double>(n) * double(m.output_size()));
  for (double& g : report.gradient) g *= scale;
  report.mse = se * scale;
  return report;
}

LossReport loss_and_gradient_reference(const MlpModel& m, const Mat& x,
                                       const Mat& y) {
  check_shapes(m, x, y);
  LossReport report;
  report.gradient.assign(m.param_count(), 0.0);
  SampleWork ws(m);
  double se = 0.0;
  for (std::size_t s = 0; s < x.rows(); ++s)
    se += backprop_sample(m, x.row(s), y.row(s), ws, report.gradient.data());
  const double scale =
      1.0 / (static_cast<double>(x.rows()) * double(m.output_size()));
  for (double& g : report.gradient) g *= scale;
  report.mse = se * scale;
  return report;
}

double mse_only(const MlpModel& m, const Mat& x, const Mat& y, bool parallel) {
  check_shapes(m, x, y);
  const std::size_t n = x.rows();
  const std::size_t nblocks = (n + kReductionBlock - 1) / kReductionBlock;
  Vec block_se(nblocks, 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
    double se = 0.0;
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    for (std::size_t s = lo; s < hi; ++s) {
      const Vec o = forward(m, x.row(s));
      for (std::size_t k = 0; k < o.size(); ++k) {
        const double e = o[k] - y(s, k);
        se += e * e;
      }
    }
    block_se[b] = se;
  }
  double se = 0.0;
  for (double v : block_se) se += v;
  return se / (static_cast<double>(n) * double(m.output_size()));
}

std::size_t argmax_output(std::span<const double> out) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < out.size(); ++k)
    if (out[k] > out[best]) best = k;
  return best;
}

kdd::ClassLabel predict_class(const MlpModel& m, std::span<const double> x) {
  if (m.output_size() != kdd::kClassCount)
    throw ValidationError("mlp: predict_class requires a 5-output network");
  const Vec out = forward(m, x);
  return kdd::class_from_index(static_cast<int>(argmax_output(out)));
}

nlohmann::ordered_json MlpModel::to_json() const {
  nlohmann::ordered_json j;
  j["type"] = "mlp_model";
  j["layer_sizes"] = layer_sizes;
  j["hidden_activation"] = "tanh";
  j["output_activation"] = "logistic";
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < weights.size(); ++l) {
    nlohmann::ordered_json jl;
    jl["rows"] = weights[l].rows();
    jl["cols"] = weights[l].cols();
    jl["weights"] = weights[l].data();  // row-major
    jl["bias"] = biases[l];
    layers.push_back(std::move(jl));
  }
  j["layers"] = std::move(layers);
  return j;
}

MlpModel MlpModel::from_json(const nlohmann::json& j) {
  MlpModel m;
  m.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  for (const auto& jl : j.at("layers")) {
    Mat w(jl.at("rows").get<std::size_t>(), jl.at("cols").get<std::size_t>());
    w.data() = jl.at("weights").get<Vec>();
    m.weights.push_back(std::move(w));
    m.biases.push_back(jl.at("bias").get<Vec>());
  }
  return m;
}

}  // namespace idsml::mlp
