#include "idsml/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "idsml/bundle.hpp"
#include "idsml/report.hpp"

#include "CLI11.hpp"

namespace idsml::cli {

namespace fs = std::filesystem;

void RunConfig::apply_json(const nlohmann::json& j) {
  if (j.contains("data")) data_path = j["data"].get<std::string>();
  if (j.contains("out")) out_dir = j["out"].get<std::string>();
  if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();
  if (j.contains("jobs")) jobs = j["jobs"].get<int>();
  if (j.contains("sample")) {
    const auto& s = j["sample"];
    if (s.contains("total")) sample_total = s["total"].get<std::size_t>();
    if (s.contains("test")) test_count = s["test"].get<std::size_t>();
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    if (m.contains("kind")) model_kind = m["kind"].get<std::string>();
    if (m.contains("hidden")) hidden = m["hidden"].get<std::vector<std::size_t>>();
    if (m.contains("trainer")) {
      const auto& t = m["trainer"];
      if (t.contains("algorithm"))
        trainer.algorithm = train::algo_from_name(t["algorithm"].get<std::string>());
      if (t.contains("max_epochs")) trainer.max_epochs = t["max_epochs"].get<int>();
      if (t.contains("mse_goal")) trainer.mse_goal = t["mse_goal"].get<double>();
      if (t.contains("learning_rate"))
        trainer.learning_rate = t["learning_rate"].get<double>();
      if (t.contains("momentum")) trainer.momentum = t["momentum"].get<double>();
      if (t.contains("eta_plus")) trainer.eta_plus = t["eta_plus"].get<double>();
      if (t.contains("eta_minus")) trainer.eta_minus = t["eta_minus"].get<double>();
      if (t.contains("delta_init")) trainer.delta_init = t["delta_init"].get<double>();
      if (t.contains("delta_max")) trainer.delta_max = t["delta_max"].get<double>();
      if (t.contains("delta_min")) trainer.delta_min = t["delta_min"].get<double>();
      if (t.contains("scg_sigma")) trainer.scg_sigma = t["scg_sigma"].get<double>();
      if (t.contains("scg_lambda"))
        trainer.scg_lambda_init = t["scg_lambda"].get<double>();
    }
    if (m.contains("mars")) {
      const auto& a = m["mars"];
      if (a.contains("max_basis")) mars_config.max_basis = a["max_basis"].get<int>();
      if (a.contains("min_span")) mars_config.min_span = a["min_span"].get<int>();
      if (a.contains("max_degree")) mars_config.max_degree = a["max_degree"].get<int>();
      if (a.contains("gcv_penalty"))
        mars_config.gcv_penalty = a["gcv_penalty"].get<double>();
      if (a.contains("threshold")) mars_threshold = a["threshold"].get<double>();
    }
    if (m.contains("svm")) {
      const auto& s = m["svm"];
      if (s.contains("kernel")) {
        const std::string k = s["kernel"].get<std::string>();
        if (k == "linear") svm_params.kernel.kind = svm::KernelKind::Linear;
        else if (k == "rbf") svm_params.kernel.kind = svm::KernelKind::Rbf;
        else throw ValidationError("config: unknown kernel \"" + k + "\"");
      }
      if (s.contains("gamma")) svm_params.kernel.gamma = s["gamma"].get<double>();
      if (s.contains("C")) svm_params.c = s["C"].get<double>();
      if (s.contains("tol")) svm_params.tol = s["tol"].get<double>();
      if (s.contains("cache_mb"))
        svm_params.cache_bytes = s["cache_mb"].get<std::size_t>() << 20;
    }
  }
  if (j.contains("compare"))
    compare_models = j["compare"].get<std::vector<std::string>>();
}

nlohmann::ordered_json RunConfig::canonical_json() const {
  nlohmann::ordered_json j;
  j["data"] = data_path;
  j["seed"] = seed;
  j["sample"] = {{"total", sample_total}, {"test", test_count}};
  j["model"]["kind"] = model_kind;
  j["model"]["hidden"] = hidden;
  j["model"]["trainer"] = {
      {"algorithm", train::algo_name(trainer.algorithm)},
      {"max_epochs", trainer.max_epochs},
      {"mse_goal", trainer.mse_goal},
      {"learning_rate", trainer.learning_rate},
      {"momentum", trainer.momentum},
      {"eta_plus", trainer.eta_plus},
      {"eta_minus", trainer.eta_minus},
      {"delta_init", trainer.delta_init},
      {"delta_max", trainer.delta_max},
      {"delta_min", trainer.delta_min},
      {"scg_sigma", trainer.scg_sigma},
      {"scg_lambda", trainer.scg_lambda_init}};
  j["model"]["mars"] = {{"max_basis", mars_config.max_basis},
                        {"min_span", mars_config.min_span},
                        {"max_degree", mars_config.max_degree},
                        {"gcv_penalty", mars_config.gcv_penalty},
                        {"threshold", mars_threshold}};
  j["model"]["svm"] = {
      {"kernel", svm_params.kernel.kind == svm::KernelKind::Linear ? "linear" : "rbf"},
      {"gamma", svm_params.kernel.gamma},
      {"C", svm_params.c},
      {"tol", svm_params.tol}};
  j["compare"] = compare_models;
  return j;
}

std::string RunConfig::config_digest() const {
  return hex64(fnv1a64(canonical_json().dump()));
}

namespace {

report::Provenance provenance_of(const RunConfig& cfg) {
  return {cfg.config_digest(), cfg.seed};
}

eval::OvrLearnerSpec learner_spec(const RunConfig& cfg, eval::LearnerKind kind) {
  eval::OvrLearnerSpec spec;
  spec.kind = kind;
  spec.mars_config = cfg.mars_config;
  spec.mars_threshold = cfg.mars_threshold;
  spec.svm_params = cfg.svm_params;
  return spec;
}

Mat one_hot_targets(std::span<const kdd::ClassLabel> labels) {
  Mat y(labels.size(), kdd::kClassCount);
  for (std::size_t i = 0; i < labels.size(); ++i)
    y(i, kdd::class_index(labels[i])) = 1.0;
  return y;
}

void write_json_file(const fs::path& path, const nlohmann::ordered_json& j) {
  report::write_text_file(path.string(), j.dump(2) + "\n");
}

nlohmann::ordered_json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

struct MlpTrainOutput {
  mlp::MlpModel model;
  train::TrainReport report;
};

MlpTrainOutput train_mlp(const RunConfig& cfg, const bundle::Bundle& b,
                         train::Algo algorithm) {
  std::vector<std::size_t> sizes;
  sizes.push_back(b.train.x.cols());
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(kdd::kClassCount);
  mlp::MlpModel model = mlp::init(sizes, cfg.seed);
  train::TrainConfig tc = cfg.trainer;
  tc.algorithm = algorithm;
  const Mat targets = one_hot_targets(b.train.labels);
  auto [trained, rep] = train::train(std::move(model), b.train.x, targets, tc);
  return {std::move(trained), std::move(rep)};
}

}  // namespace

int cmd_prep(const RunConfig& cfg) {
  set_threads(cfg.jobs);
  if (cfg.data_path.empty())
    throw ValidationError("prep: no dataset given (--data or config \"data\")");
  std::ifstream in(cfg.data_path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + cfg.data_path);

  const auto records = kdd::parse_records(in);
  std::vector<kdd::ClassLabel> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(kdd::map_label(r.label));

  const kdd::SplitIndices split = kdd::stratified_split_indices(
      labels, cfg.sample_total, cfg.test_count, cfg.seed);

  auto gather = [&](const std::vector<std::size_t>& rows) {
    std::vector<kdd::ConnectionRecord> out;
    out.reserve(rows.size());
    for (std::size_t i : rows) out.push_back(records[i]);
    return out;
  };
  const auto train_records = gather(split.train);
  const auto test_records = gather(split.test);

  bundle::Bundle b;
  b.schema = kdd::fit_schema(train_records);
  b.train = kdd::encode(train_records, b.schema);
  b.test = kdd::encode(test_records, b.schema);
  b.manifest.seed = cfg.seed;
  b.manifest.total = cfg.sample_total;
  b.manifest.test_count = cfg.test_count;
  b.manifest.source = cfg.data_path;
  b.manifest.config_digest = cfg.config_digest();
  bundle::write(cfg.out_dir, b);

  std::cout << "prep: " << records.size() << " records read, sampled "
            << cfg.sample_total << " (train " << (cfg.sample_total - cfg.test_count)
            << " / test " << cfg.test_count << "), encoded width "
            << b.schema.encoded_width() << "\n"
            << "prep: bundle written to " << cfg.out_dir << " (digest "
            << b.manifest.digest << ")\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
  set_threads(cfg.jobs);
  const bundle::Bundle b = bundle::load(cfg.out_dir);
  const report::Provenance prov = provenance_of(cfg);

  if (cfg.model_kind == "mlp") {
    MlpTrainOutput out = train_mlp(cfg, b, cfg.trainer.algorithm);
    nlohmann::ordered_json jm = out.model.to_json();
    jm["config"] = prov.config_digest;
    jm["seed"] = cfg.seed;
    write_json_file(fs::path(cfg.out_dir) / "model.json", jm);

    nlohmann::ordered_json jr;
    jr["algorithm"] = train::algo_name(cfg.trainer.algorithm);
    jr.update(out.report.to_json());
    jr["config"] = prov.config_digest;
    jr["seed"] = cfg.seed;
    write_json_file(fs::path(cfg.out_dir) / "train_report.json", jr);

    std::cout << "train: mlp/" << train::algo_name(cfg.trainer.algorithm)
              << " epochs=" << out.report.epochs_run
              << str_printf(" final_mse=%.6g", out.report.final_mse)
              << (out.report.converged ? " (goal reached)" : " (goal not reached)")
              << "\n";
    return kExitOk;
  }

  if (cfg.model_kind != "mars" && cfg.model_kind != "svm")
    throw ValidationError("train: unknown model \"" + cfg.model_kind +
                          "\" (expected mars|mlp|svm)");
  const eval::LearnerKind kind = cfg.model_kind == "mars"
                                     ? eval::LearnerKind::Mars
                                     : eval::LearnerKind::Svm;
  const eval::OneVsRestEnsemble ens =
      eval::train_ovr(learner_spec(cfg, kind), b.train.x, b.train.labels);

  nlohmann::ordered_json jm = ens.to_json();
  jm["config"] = prov.config_digest;
  jm["seed"] = cfg.seed;
  write_json_file(fs::path(cfg.out_dir) / "model.json", jm);

  nlohmann::ordered_json jr;
  jr["learner"] = cfg.model_kind;
  nlohmann::ordered_json members = nlohmann::ordered_json::array();
  for (int k = 0; k < kdd::kClassCount; ++k) {
    nlohmann::ordered_json e;
    e["class"] = kdd::class_name(kdd::class_from_index(k));
    e["degenerate"] = ens.members[k].degenerate;
    e["train_time_sec"] = ens.members[k].train_time_sec;
    if (!ens.members[k].degenerate) {
      if (kind == eval::LearnerKind::Mars) {
        e["basis_functions"] = ens.members[k].mars->basis.size() - 1;
        e["gcv"] = ens.members[k].mars->gcv;
      } else {
        e["support_vectors"] = ens.members[k].svm->svs.size();
        e["sum_y_alpha"] = ens.members[k].svm->sum_y_alpha;
      }
    }
    members.push_back(std::move(e));
  }
  jr["members"] = std::move(members);
  jr["config"] = prov.config_digest;
  jr["seed"] = cfg.seed;
  write_json_file(fs::path(cfg.out_dir) / "train_report.json", jr);

  std::cout << "train: " << cfg.model_kind << " one-vs-rest ensemble written to "
            << cfg.out_dir << "/model.json\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg) {
  set_threads(cfg.jobs);
  const bundle::Bundle b = bundle::load(cfg.out_dir);
  const report::Provenance prov = provenance_of(cfg);
  const fs::path model_path = cfg.model_file.empty()
                                  ? fs::path(cfg.out_dir) / "model.json"
                                  : fs::path(cfg.model_file);
  const nlohmann::ordered_json jm = load_json_file(model_path);
  const std::string type = jm.value("type", "");

  if (type == "mlp_model") {
    const mlp::MlpModel model = mlp::MlpModel::from_json(jm);
    if (model.input_size() != b.schema.encoded_width())
      throw ValidationError(str_printf(
          "eval: model expects %zu inputs but the bundle encodes %zu columns",
          model.input_size(), b.schema.encoded_width()));
    StopWatch watch;
    const eval::ConfusionMatrix cm = eval::confusion_mlp(model, b.test.x, b.test.labels);
    const double test_time = watch.seconds();
    report::write_confusion_reports(cfg.out_dir, cm, eval::metrics(cm), test_time, prov);

    std::vector<report::PerClassRow> rows;
    for (int k = 0; k < kdd::kClassCount; ++k) {
      const eval::BinaryEval be = eval::evaluate_binary(model, k, b.test.x, b.test.labels);
      rows.push_back({kdd::class_name(kdd::class_from_index(k)), std::nullopt,
                      be.test_time_sec, be.accuracy_pct, false});
    }
    report::write_per_class_reports(cfg.out_dir, rows, prov);
  } else if (type == "ovr_ensemble") {
    const eval::OneVsRestEnsemble ens = eval::OneVsRestEnsemble::from_json(jm);
    if (ens.input_dim != b.schema.encoded_width())
      throw ValidationError(str_printf(
          "eval: ensemble expects %zu inputs but the bundle encodes %zu columns",
          ens.input_dim, b.schema.encoded_width()));
    std::vector<report::PerClassRow> rows;
    for (int k = 0; k < kdd::kClassCount; ++k) {
      const auto& member = ens.members[k];
      if (member.degenerate) {
        rows.push_back({kdd::class_name(kdd::class_from_index(k)),
                        member.train_time_sec, std::nullopt, std::nullopt, true});
        continue;
      }
      const eval::BinaryEval be = eval::evaluate_binary(ens, k, b.test.x, b.test.labels);
      rows.push_back({kdd::class_name(kdd::class_from_index(k)),
                      member.train_time_sec, be.test_time_sec, be.accuracy_pct,
                      false});
    }
    report::write_per_class_reports(cfg.out_dir, rows, prov);

    StopWatch watch;
    const eval::ConfusionMatrix cm = eval::confusion_ovr(ens, b.test.x, b.test.labels);
    const double test_time = watch.seconds();
    report::write_confusion_reports(cfg.out_dir, cm, eval::metrics(cm), test_time, prov);
  } else {
    throw ValidationError("eval: unrecognized model file " + model_path.string());
  }

  std::cout << "eval: reports written to " << cfg.out_dir << "\n";
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg) {
  set_threads(cfg.jobs);
  const bundle::Bundle b = bundle::load(cfg.out_dir);
  const report::Provenance prov = provenance_of(cfg);

  std::vector<std::string> display_names;
  std::vector<std::vector<std::optional<double>>> grid(
      kdd::kClassCount,
      std::vector<std::optional<double>>(cfg.compare_models.size()));
  std::vector<report::TimingRow> timings;
  std::vector<report::TrainSummaryRow> trainer_rows;
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  std::vector<std::string> failures;

  for (std::size_t mcol = 0; mcol < cfg.compare_models.size(); ++mcol) {
    const std::string& token = cfg.compare_models[mcol];
    std::string display;
    try {
      if (token == "svm" || token == "mars") {
        display = token == "svm" ? "SVM" : "MARS";
        display_names.push_back(display);
        const eval::LearnerKind kind = token == "mars" ? eval::LearnerKind::Mars
                                                       : eval::LearnerKind::Svm;
        const eval::OneVsRestEnsemble ens =
            eval::train_ovr(learner_spec(cfg, kind), b.train.x, b.train.labels);
        for (int k = 0; k < kdd::kClassCount; ++k) {
          if (ens.members[k].degenerate) {
            timings.push_back({display, kdd::class_name(kdd::class_from_index(k)),
                               ens.members[k].train_time_sec, std::nullopt});
            continue;
          }
          const eval::BinaryEval be =
              eval::evaluate_binary(ens, k, b.test.x, b.test.labels);
          grid[k][mcol] = be.accuracy_pct;
          timings.push_back({display, kdd::class_name(kdd::class_from_index(k)),
                             ens.members[k].train_time_sec, be.test_time_sec});
        }
        summary.push_back({{"model", display}, {"kind", token}});
      } else {
        const train::Algo algo = train::algo_from_name(token);
        display = train::algo_display(algo);
        display_names.push_back(display);
        MlpTrainOutput out = train_mlp(cfg, b, algo);
        for (int k = 0; k < kdd::kClassCount; ++k) {
          const eval::BinaryEval be =
              eval::evaluate_binary(out.model, k, b.test.x, b.test.labels);
          grid[k][mcol] = be.accuracy_pct;
          timings.push_back({display, kdd::class_name(kdd::class_from_index(k)),
                             k == 0 ? std::optional<double>(out.report.wall_time_sec)
                                    : std::nullopt,
                             be.test_time_sec});
        }
        const eval::ConfusionMatrix cm =
            eval::confusion_mlp(out.model, b.test.x, b.test.labels);
        const double overall = eval::metrics(cm).accuracy_pct;
        trainer_rows.push_back({display, out.report.epochs_run,
                                out.report.final_mse, out.report.converged,
                                overall});
        summary.push_back({{"model", display},
                           {"kind", "mlp"},
                           {"algorithm", token},
                           {"epochs_run", out.report.epochs_run},
                           {"final_mse", out.report.final_mse},
                           {"converged", out.report.converged},
                           {"accuracy_pct", overall},
                           {"wall_time_sec", out.report.wall_time_sec}});
      }
    } catch (const std::exception& e) {
      if (display_names.size() <= mcol)
        display_names.push_back(display.empty() ? token : display);
      failures.push_back(token + ": " + e.what());
      summary.push_back({{"model", display_names[mcol]}, {"error", e.what()}});
    }
  }

  report::write_compare_reports(cfg.out_dir, display_names, grid, prov);
  report::write_compare_timings(cfg.out_dir, timings, prov);
  report::write_distribution(cfg.out_dir, b.train.class_counts(),
                             b.test.class_counts(), prov);
  if (!trainer_rows.empty())
    report::write_train_summary(cfg.out_dir, trainer_rows, prov);
  nlohmann::ordered_json js;
  js["models"] = std::move(summary);
  js["config"] = prov.config_digest;
  js["seed"] = cfg.seed;
  write_json_file(fs::path(cfg.out_dir) / "train_summary.json", js);

  std::cout << "compare: grid over {";
  for (std::size_t i = 0; i < display_names.size(); ++i)
    std::cout << (i ? ", " : "") << display_names[i];
  std::cout << "} written to " << cfg.out_dir << "\n";
  for (const auto& f : failures)
    std::cerr << "compare: sub-run failed: " << f << "\n";
  return failures.empty() ? kExitOk : kExitConvergence;
}

int run(int argc, char** argv) {
  CLI::App app{
      "idsml - intrusion-detection workbench: adaptive regression splines,\n"
      "neural-network trainers, and support vector machines over 41-feature\n"
      "connection records.\n\n"
      "exit codes: 0 ok, 2 I/O failure, 3 invalid input/config, 4 solver\n"
      "infrastructure failure, 1 unexpected error"};
  app.require_subcommand(1);

  std::string config_path, data, out, model, trainer_name, model_file;
  std::uint64_t seed = 0;
  int jobs = -1;
  std::size_t total = 0, test_count = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration file");
    sub->add_option("--data", data, "connection records CSV (41 features + label)");
    sub->add_option("--out", out, "run directory for bundles, models and reports");
    sub->add_option("--seed", seed, "PRNG seed (sampling, init)");
    sub->add_option("--jobs", jobs, "OpenMP thread count (0 = runtime default)");
    sub->add_option("--total", total, "stratified sample size");
    sub->add_option("--test-count", test_count, "rows held out for testing");
    sub->add_option("--model", model, "model kind: mars|mlp|svm");
    sub->add_option("--trainer", trainer_name,
                    "mlp trainer: gd|gdm|gda|rprop|scg|oss");
    return sub;
  };

  CLI::App* prep = add_common(app.add_subcommand(
      "prep", "parse, sample, encode and write a dataset bundle"));
  CLI::App* train_cmd = add_common(app.add_subcommand(
      "train", "train the configured model on a prepared bundle"));
  CLI::App* eval_cmd = add_common(app.add_subcommand(
      "eval", "evaluate a trained model file against the bundle's test split"));
  eval_cmd->add_option("--model-file", model_file,
                       "model to evaluate (default <out>/model.json)");
  CLI::App* compare = add_common(app.add_subcommand(
      "compare", "train + evaluate the configured model list on one split"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw IoError("cannot open config: " + config_path);
      try {
        cfg.apply_json(nlohmann::json::parse(in));
      } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("malformed config JSON: ") + e.what());
      }
    }
    CLI::App* active = app.get_subcommands().front();
    if (active->count("--data")) cfg.data_path = data;
    if (active->count("--out")) cfg.out_dir = out;
    if (active->count("--seed")) cfg.seed = seed;
    if (active->count("--jobs")) cfg.jobs = jobs;
    if (active->count("--total")) cfg.sample_total = total;
    if (active->count("--test-count")) cfg.test_count = test_count;
    if (active->count("--model")) cfg.model_kind = model;
    if (active->count("--trainer"))
      cfg.trainer.algorithm = train::algo_from_name(trainer_name);
    if (active == eval_cmd && eval_cmd->count("--model-file"))
      cfg.model_file = model_file;

    if (active == prep) return cmd_prep(cfg);
    if (active == train_cmd) return cmd_train(cfg);
    if (active == eval_cmd) return cmd_eval(cfg);
    if (active == compare) return cmd_compare(cfg);
    return kExitFailure;
  } catch (const IoError& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    std::cerr << "error (validation): " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConvergenceError& e) {
    std::cerr << "error (convergence): " << e.what() << "\n";
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace idsml::cli
