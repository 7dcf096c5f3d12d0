#ifndef IDSML_MLP_HPP
#define IDSML_MLP_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "idsml/common.hpp"
#include "idsml/kdd.hpp"

#include "json.hpp"

namespace idsml::mlp {

// Fully-connected feed-forward network, tanh hidden layers, logistic
// outputs. weights[l] has shape layer_sizes[l+1] x layer_sizes[l].
struct MlpModel {
  std::vector<std::size_t> layer_sizes;
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t param_count() const;

  // Flat parameter order: W0 row-major, b0, W1, b1, ...
  Vec get_params() const;
  void set_params(std::span<const double> p);

  nlohmann::ordered_json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);
};

// Fan-balanced uniform init in [-r, r], r = sqrt(6/(fan_in+fan_out)); biases
// zero. Bit-identical for a given seed.
MlpModel init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

Vec forward(const MlpModel& m, std::span<const double> x);
Mat forward_batch(const MlpModel& m, const Mat& x, bool parallel = true);

struct LossReport {
  double mse = 0.0;
  Vec gradient;
};

// Mean squared error over all samples and outputs, with its exact
// backpropagated gradient. Per-sample contributions are accumulated in
// fixed blocks of kReductionBlock samples and the block partials added in
// order, so the result is bit-identical for any OpenMP thread count
// (parallel=false walks the same blocks serially).
LossReport loss_and_gradient(const MlpModel& m, const Mat& x, const Mat& y,
                             bool parallel = true);

// Straightforward one-sample-at-a-time baseline, kept for tests and the
// kernel benchmark.
LossReport loss_and_gradient_reference(const MlpModel& m, const Mat& x,
                                       const Mat& y);

double mse_only(const MlpModel& m, const Mat& x, const Mat& y,
                bool parallel = true);

std::size_t argmax_output(std::span<const double> out);

// Five-way prediction; ties resolve to the lowest class index.
kdd::ClassLabel predict_class(const MlpModel& m, std::span<const double> x);

}  // namespace idsml::mlp

#endif  // IDSML_MLP_HPP
