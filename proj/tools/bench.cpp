// Kernel benchmark: times each OpenMP kernel against its serial counterpart
// and checks that both produce the same bits. Sizes are chosen so a run
// finishes in seconds; --quick shrinks them further for use as a smoke test.

#include <cmath>
#include <cstring>
#include <iostream>
#include <string>

#include "idsml/common.hpp"
#include "idsml/eval.hpp"
#include "idsml/mars.hpp"
#include "idsml/mlp.hpp"
#include "idsml/svm.hpp"

using namespace idsml;

namespace {

struct BenchResult {
  std::string name;
  double serial_ms;
  double parallel_ms;
  bool identical;
};

template <class Serial, class Parallel, class Same>
BenchResult run_bench(const std::string& name, int reps, Serial&& serial,
                      Parallel&& parallel, Same&& same) {
  // one warm-up each, then timed reps
  serial();
  parallel();
  StopWatch ws;
  for (int i = 0; i < reps; ++i) serial();
  const double s_ms = ws.seconds() * 1000.0 / reps;
  StopWatch wp;
  for (int i = 0; i < reps; ++i) parallel();
  const double p_ms = wp.seconds() * 1000.0 / reps;
  return {name, s_ms, p_ms, same()};
}

Mat random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Mat m(rows, cols);
  for (double& v : m.data()) v = rng.u01();
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;

  const std::size_t n = quick ? 512 : 4096;
  const int reps = quick ? 2 : 5;
  Rng rng(7);
  std::vector<BenchResult> results;

  {  // batch loss + gradient
    const std::vector<std::size_t> sizes = {40, 20, 30, 5};
    mlp::MlpModel model = mlp::init(sizes, 11);
    Mat x = random_matrix(n, sizes.front(), rng);
    Mat y(n, sizes.back());
    for (std::size_t i = 0; i < n; ++i) y(i, i % sizes.back()) = 1.0;
    mlp::LossReport a, b;
    results.push_back(run_bench(
        "mlp loss+gradient", reps,
        [&] { a = mlp::loss_and_gradient(model, x, y, /*parallel=*/false); },
        [&] { b = mlp::loss_and_gradient(model, x, y, /*parallel=*/true); },
        [&] { return a.mse == b.mse && a.gradient == b.gradient; }));

    mlp::LossReport ref = mlp::loss_and_gradient_reference(model, x, y);
    double max_rel = std::abs(ref.mse - b.mse) / std::max(1e-300, std::abs(ref.mse));
    for (std::size_t i = 0; i < ref.gradient.size(); ++i)
      max_rel = std::max(max_rel, std::abs(ref.gradient[i] - b.gradient[i]) /
                                      std::max(1e-12, std::abs(ref.gradient[i])));
    std::cout << "reference check: blocked vs naive gradient, max relative "
                 "difference "
              << str_printf("%.3g", max_rel) << "\n";
  }

  {  // forward-step knot scan
    const std::size_t rows = quick ? 400 : 2000;
    const std::size_t cols = 30;
    Mat x = random_matrix(rows, cols, rng);
    Vec y(rows);
    for (std::size_t i = 0; i < rows; ++i)
      y[i] = 2.0 * std::max(0.0, x(i, 3) - 0.4) - std::max(0.0, 0.7 - x(i, 7)) +
             0.1 * x(i, 11);
    std::vector<mars::BasisFunction> basis = {mars::BasisFunction{}};
    mars::MarsConfig cfg;
    cfg.min_span = 5;
    mars::Candidate a, b;
    results.push_back(run_bench(
        "mars knot scan", reps,
        [&] { a = mars::search_step(x, y, basis, cfg, /*parallel=*/false); },
        [&] { b = mars::search_step(x, y, basis, cfg, /*parallel=*/true); },
        [&] {
          return a.valid == b.valid && a.rss == b.rss && a.var == b.var &&
                 a.knot == b.knot && a.parent == b.parent;
        }));
  }

  {  // Gram row
    const std::size_t rows = quick ? 1000 : 6000;
    Mat pts = random_matrix(rows, 40, rng);
    svm::KernelSpec kernel{svm::KernelKind::Rbf, 1.0 / 40.0};
    Vec a(rows), b(rows);
    results.push_back(run_bench(
        "svm gram row x64", reps,
        [&] {
          for (std::size_t i = 0; i < 64; ++i)
            svm::gram_row_serial(pts, i, kernel, a);
        },
        [&] {
          for (std::size_t i = 0; i < 64; ++i) svm::gram_row(pts, i, kernel, b);
        },
        [&] { return a == b; }));
  }

  {  // batch five-way prediction fold
    const std::vector<std::size_t> sizes = {40, 20, 30, 5};
    mlp::MlpModel model = mlp::init(sizes, 5);
    Mat x = random_matrix(n, sizes.front(), rng);
    std::vector<kdd::ClassLabel> labels(n, kdd::ClassLabel::Normal);
    for (std::size_t i = 0; i < n; ++i)
      labels[i] = kdd::class_from_index(static_cast<int>(i % 5));
    eval::ConfusionMatrix a, b;
    results.push_back(run_bench(
        "confusion fold", reps,
        [&] { a = eval::confusion_mlp(model, x, labels, /*parallel=*/false); },
        [&] { b = eval::confusion_mlp(model, x, labels, /*parallel=*/true); },
        [&] { return a.counts == b.counts; }));
  }

  std::cout << "\nthreads: " << max_threads() << "\n\n";
  std::cout << str_printf("%-20s %12s %12s %9s %10s\n", "kernel", "serial(ms)",
                          "parallel(ms)", "speedup", "identical");
  bool all_same = true;
  for (const auto& r : results) {
    std::cout << str_printf("%-20s %12.3f %12.3f %8.2fx %10s\n", r.name.c_str(),
                            r.serial_ms, r.parallel_ms,
                            r.serial_ms / std::max(1e-9, r.parallel_ms),
                            r.identical ? "yes" : "NO");
    all_same = all_same && r.identical;
  }
  if (!all_same) {
    std::cerr << "\nserial/parallel outputs differ\n";
    return 1;
  }
  return 0;
}
