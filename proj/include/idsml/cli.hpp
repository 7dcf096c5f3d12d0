#ifndef IDSML_CLI_HPP
#define IDSML_CLI_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "idsml/eval.hpp"
#include "idsml/mars.hpp"
#include "idsml/svm.hpp"
#include "idsml/trainers.hpp"

#include "json.hpp"

namespace idsml::cli {

// Exit codes (documented in --help and the README).
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;      // unexpected error
inline constexpr int kExitIo = 2;           // unreadable/unwritable files
inline constexpr int kExitValidation = 3;   // bad inputs or configuration
inline constexpr int kExitConvergence = 4;  // optimizer infrastructure failure

// Declarative run configuration. A JSON config file provides any subset of
// the fields; command-line flags override file values. The defaults
// reproduce the reference protocol (11982-point stratified sample, 6890
// held out for testing).
struct RunConfig {
  std::string data_path;
  std::string out_dir = "runs/out";
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 = OpenMP default
  std::size_t sample_total = 11982;
  std::size_t test_count = 6890;

  std::string model_kind = "mlp";  // mars | mlp | svm
  std::vector<std::size_t> hidden = {20, 30};
  train::TrainConfig trainer;
  mars::MarsConfig mars_config;
  double mars_threshold = 0.5;
  svm::SvmParams svm_params;

  std::vector<std::string> compare_models = {"svm", "rprop", "scg", "oss", "mars"};
  std::string model_file;  // eval: defaults to <out>/model.json

  void apply_json(const nlohmann::json& j);
  // Semantic fields only (output locations excluded), canonical order; the
  // digest of this is embedded in every report.
  nlohmann::ordered_json canonical_json() const;
  std::string config_digest() const;
};

int cmd_prep(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_compare(const RunConfig& cfg);

// Argument parsing + dispatch; maps exceptions to the exit codes above.
int run(int argc, char** argv);

}  // namespace idsml::cli

#endif  // IDSML_CLI_HPP
