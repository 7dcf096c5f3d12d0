#ifndef IDSML_COMMON_HPP
#define IDSML_COMMON_HPP

#include <chrono>
#include <cstdarg>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace idsml {

using Vec = std::vector<double>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// File/stream problems. Mapped to exit code 2 by the CLI.
struct IoError : Error {
  using Error::Error;
};
// Bad inputs, malformed records, contract violations. Exit code 3.
struct ValidationError : Error {
  using Error::Error;
};
// Optimizer infrastructure failures (non-finite loss, dead line search,
// solver iteration cap). Exit code 4.
struct ConvergenceError : Error {
  using Error::Error;
};

// Dense row-major matrix. Nothing clever; the solvers in this project are
// small and explicit.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return a_.empty(); }

  double* row_ptr(std::size_t r) { return a_.data() + r * cols_; }
  const double* row_ptr(std::size_t r) const { return a_.data() + r * cols_; }
  std::span<const double> row(std::size_t r) const { return {row_ptr(r), cols_}; }
  std::span<double> row(std::size_t r) { return {row_ptr(r), cols_}; }

  Vec& data() { return a_; }
  const Vec& data() const { return a_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  Vec a_;
};

// Deterministic PRNG: std::mt19937_64 (bit-exact by the standard) plus
// hand-rolled unbiased draws, so seeded results match across compilers and
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Unbiased integer in [0, n) via rejection sampling.
  std::uint64_t bounded(std::uint64_t n);

  // 53-bit uniform in [0, 1).
  double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Box-Muller, second deviate cached.
  double gauss();

  // Fisher-Yates with the bounded draw above.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a, used for content digests in manifests and report provenance.
// Not cryptographic; it only has to be stable and sensitive.
std::uint64_t fnv1a64(std::span<const char> bytes);
std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

class StopWatch {
 public:
  StopWatch() : start_(clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_;
};

std::string str_printf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

// Round-trip text form of a double ("%.17g").
std::string format_full(double v);

// ---- small dense solvers -------------------------------------------------

// In-place Cholesky of a symmetric matrix (lower triangle). Returns false on
// a non-positive pivot.
bool cholesky(Mat& a);
// b <- L^-1 b and b <- L^-T b for a lower-triangular factor.
void chol_forward(const Mat& l, Vec& b);
void chol_backward(const Mat& l, Vec& b);

// Solves (A + jitter*I) x = b for symmetric positive semidefinite A,
// escalating the jitter from zero until the factorization succeeds. Columns
// that are identically zero come back with coefficient zero. The jitter
// actually used is reported through jitter_used when non-null.
Vec solve_spd(Mat a, Vec b, double* jitter_used = nullptr);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);  // Euclidean norm
void axpy(double alpha, std::span<const double> x, std::span<double> y);  // y += alpha*x

// Fixed block width for order-stable batch reductions. Sums are accumulated
// per block of samples and the block partials are added in block order, so
// results do not depend on the OpenMP thread count.
inline constexpr std::size_t kReductionBlock = 64;

// Thread pool width used by the OpenMP kernels; n < 1 keeps the runtime
// default. Results are unaffected either way.
void set_threads(int n);
int max_threads();

}  // namespace idsml

#endif  // IDSML_COMMON_HPP
