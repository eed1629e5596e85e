// stmtl: spatio-temporal pairwise-similarity multi-task regression pipeline.
//
// Subcommands mirror the pipeline stages: synth -> ingest -> features ->
// train / stability / evaluate. Every run writes a manifest with config
// echo and content digests; rerun replays a manifest.

#include "stmtl/digest.hpp"
#include "stmtl/serialize.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace stmtl;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

class ManifestWriter {
 public:
  ManifestWriter(std::string command, const fs::path& out_dir)
      : command_(std::move(command)), out_dir_(out_dir),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(out_dir);
  }

  void add_input(const fs::path& path) { inputs_[path.string()] = file_digest(path.string()); }
  void add_output(const fs::path& path) { outputs_.push_back(path); }
  void set_config(ordered_json config) { config_ = std::move(config); }

  fs::path write() {
    ordered_json manifest;
    manifest["tool"] = "stmtl";
    manifest["version"] = kToolVersion;
    manifest["command"] = command_;
    manifest["config"] = config_;
    manifest["inputs"] = inputs_;
    ordered_json outs = ordered_json::object();
    for (const auto& path : outputs_) outs[path.string()] = file_digest(path.string());
    manifest["outputs"] = std::move(outs);
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    manifest["timings_ms"] = {
        {"total", std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count()}};
    const fs::path path = out_dir_ / "manifest.json";
    write_json_file(path.string(), manifest);
    return path;
  }

 private:
  std::string command_;
  fs::path out_dir_;
  ordered_json config_;
  ordered_json inputs_ = ordered_json::object();
  std::vector<fs::path> outputs_;
  std::chrono::steady_clock::time_point start_;
};

ordered_json load_config_or_empty(const std::string& path) {
  if (path.empty()) return ordered_json::object();
  return read_json_file(path);
}

// Rerun feeds a manifest's config echo back through these entry points;
// strip the echo-only keys before the strict config parsers see them.
ordered_json without_keys(ordered_json j, std::initializer_list<const char*> keys) {
  for (const char* key : keys) j.erase(key);
  return j;
}

// ---------------------------------------------------------------- synth

int run_synth(const ordered_json& config_json, const fs::path& out_dir,
              const GlobalOptions& global) {
  ordered_json adjusted = without_keys(config_json, {"targets"});
  if (global.seed) adjusted["seed"] = *global.seed;
  const SynthConfig config = synth_config_from_json(adjusted);

  ManifestWriter manifest("synth", out_dir);
  const auto [cohort, truth] = generate_cohort(config);

  const fs::path cohort_path = out_dir / "cohort.csv";
  write_cohort_csv(cohort_path.string(), cohort);
  const fs::path schema_path = out_dir / "schema.json";
  write_json_file(schema_path.string(), schema_to_json(schema_for_cohort(cohort)));
  const fs::path truth_path = out_dir / "ground_truth.json";
  write_json_file(truth_path.string(), ground_truth_to_json(truth));

  std::string targets;
  for (const auto& t : synth_targets(config)) {
    if (!targets.empty()) targets += ",";
    targets += t.label();
  }
  ordered_json echo = synth_config_to_json(config);
  echo["targets"] = targets;
  manifest.set_config(echo);
  manifest.add_output(cohort_path);
  manifest.add_output(schema_path);
  manifest.add_output(truth_path);
  const fs::path manifest_path = manifest.write();

  std::cout << "cohort: " << cohort_path.string() << "\n"
            << "schema: " << schema_path.string() << "\n"
            << "ground truth: " << truth_path.string() << "\n"
            << "targets: " << targets << "\n"
            << "manifest: " << manifest_path.string() << "\n";
  return 0;
}

// --------------------------------------------------------------- ingest

int run_ingest(const std::string& input, const std::string& schema_path, const std::string& span,
               const std::string& targets_spec, const fs::path& out_dir) {
  const ColumnSchema schema = schema_from_json(read_json_file(schema_path));
  const VisitPair visit_span = make_span(parse_visit_code(span));
  const std::vector<TargetSpec> targets = parse_target_list(targets_spec);

  ManifestWriter manifest("ingest", out_dir);
  manifest.add_input(input);
  manifest.add_input(schema_path);

  const Cohort cohort = parse_cohort(input, schema);
  const auto [cleaned, report] = clean_cohort(cohort, visit_span, targets);
  const PairedDataset dataset = assemble_longitudinal(cleaned, visit_span, targets);

  const fs::path dataset_path = out_dir / "dataset.csv";
  write_dataset_csv(dataset_path.string(), dataset);
  const fs::path report_path = out_dir / "cleaning_report.json";
  write_json_file(report_path.string(), to_json(report));

  manifest.set_config({{"input", input},
                       {"schema", schema_to_json(schema)},
                       {"span", span},
                       {"targets", targets_spec}});
  manifest.add_output(dataset_path);
  manifest.add_output(report_path);
  const fs::path manifest_path = manifest.write();

  std::cout << "subjects: " << dataset.n() << " features: " << dataset.r()
            << " tasks: " << dataset.k() << "\n"
            << "dataset: " << dataset_path.string() << "\n"
            << "cleaning report: " << report_path.string() << "\n"
            << "manifest: " << manifest_path.string() << "\n";
  return 0;
}

// ------------------------------------------------------------- features

int run_features(const std::string& dataset_path, const std::string& measure,
                 const fs::path& out_dir) {
  const FeatureMode mode = parse_feature_mode(measure);

  ManifestWriter manifest("features", out_dir);
  manifest.add_input(dataset_path);

  const PairedDataset dataset = read_dataset_csv(dataset_path);
  const DesignMatrix design = build_features(dataset, mode);
  const TargetMatrix targets{dataset.targets, dataset.target_names};

  const fs::path features_path = out_dir / "features.csv";
  write_design_csv(features_path.string(), design);
  const fs::path targets_path = out_dir / "targets.csv";
  write_target_csv(targets_path.string(), targets);

  ordered_json meta;
  meta["measure"] = measure;
  meta["n"] = design.values.rows();
  meta["d"] = design.values.cols();
  meta["k"] = targets.values.cols();
  long zero_baseline = 0;
  if (mode != FeatureMode::Original) zero_baseline = compute_trends(dataset).zero_baseline_cells;
  meta["zero_baseline_cells"] = zero_baseline;
  const fs::path meta_path = out_dir / "features_meta.json";
  write_json_file(meta_path.string(), meta);

  manifest.set_config({{"dataset", dataset_path}, {"measure", measure}});
  manifest.add_output(features_path);
  manifest.add_output(targets_path);
  manifest.add_output(meta_path);
  const fs::path manifest_path = manifest.write();

  std::cout << "design matrix: " << design.values.rows() << " x " << design.values.cols() << "\n"
            << "features: " << features_path.string() << "\n"
            << "targets: " << targets_path.string() << "\n"
            << "manifest: " << manifest_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

int run_train(const std::string& features_path, const std::string& targets_path,
              const ordered_json& config_json, const std::string& solver_flag, bool standardize_flag,
              const fs::path& out_dir) {
  ordered_json cfg = config_json;
  if (!solver_flag.empty()) cfg["solver"] = solver_flag;
  const MtlSolver solver = parse_solver(cfg.value("solver", std::string("cfsgl")));
  const PenaltyPoint penalties =
      cfg.contains("penalties") ? penalty_from_json(cfg["penalties"]) : PenaltyPoint{};
  const SolverConfig solver_config = cfg.contains("solver_config")
                                         ? solver_config_from_json(cfg["solver_config"])
                                         : SolverConfig{};
  const bool standardize_inputs = cfg.value("standardize", standardize_flag);

  ManifestWriter manifest("train", out_dir);
  manifest.add_input(features_path);
  manifest.add_input(targets_path);

  DesignMatrix design = read_design_csv(features_path);
  TargetMatrix targets = read_target_csv(targets_path);
  if (design.values.rows() != targets.values.rows())
    throw DataError("train: features and targets row counts differ");
  if (standardize_inputs) standardize(design, targets);

  const FitResult fit =
      fit_mtl(solver, design.values, targets.values, penalties, solver_config);

  ordered_json echo{{"solver", to_string(solver)},
                    {"penalties", penalty_to_json(penalties)},
                    {"solver_config", solver_config_to_json(solver_config)},
                    {"standardize", standardize_inputs},
                    {"features", features_path},
                    {"targets", targets_path}};
  const fs::path fit_path = out_dir / "fit.json";
  write_json_file(fit_path.string(), fit_to_json(fit, echo));
  const fs::path weights_path = out_dir / "weights.csv";
  write_weights_csv(weights_path.string(), fit.W, design.column_names, targets.task_names);

  manifest.set_config(echo);
  manifest.add_output(fit_path);
  manifest.add_output(weights_path);
  const fs::path manifest_path = manifest.write();

  std::cout << "solver: " << to_string(solver) << " iterations: " << fit.iterations
            << " converged: " << (fit.converged ? "yes" : "no") << "\n"
            << "objective: " << fit.objective_trace.back() << "\n"
            << "fit: " << fit_path.string() << "\n"
            << "weights: " << weights_path.string() << "\n"
            << "manifest: " << manifest_path.string() << "\n";
  return 0;
}

// ------------------------------------------------------------ stability

int run_stability_cmd(const std::string& features_path, const std::string& targets_path,
                      const ordered_json& config_json, bool standardize_flag,
                      const std::string& checkpoint, const fs::path& out_dir,
                      const GlobalOptions& global) {
  ordered_json cfg = config_json;
  if (global.seed) cfg["seed"] = *global.seed;
  if (global.jobs) cfg["jobs"] = *global.jobs;
  const bool standardize_inputs = cfg.value("standardize", standardize_flag);
  const StabilityConfig config = stability_config_from_json(
      without_keys(cfg, {"standardize", "features", "targets", "checkpoint"}));

  ManifestWriter manifest("stability", out_dir);
  manifest.add_input(features_path);
  manifest.add_input(targets_path);

  DesignMatrix design = read_design_csv(features_path);
  TargetMatrix targets = read_target_csv(targets_path);
  if (design.values.rows() != targets.values.rows())
    throw DataError("stability: features and targets row counts differ");
  if (standardize_inputs) standardize(design, targets);

  const StabilityReport report =
      run_stability(design.values, targets.values, config, design.column_names, checkpoint);

  ordered_json echo = stability_config_to_json(config);
  echo["standardize"] = standardize_inputs;
  echo["features"] = features_path;
  echo["targets"] = targets_path;
  echo["checkpoint"] = checkpoint;

  const fs::path report_path = out_dir / "stability.json";
  ordered_json report_json = stability_to_json(report, design.column_names);
  // The report describes the statistical run; execution detail like the
  // worker count stays in the manifest so reports are byte-identical
  // across --jobs degrees.
  report_json["provenance"] = without_keys(echo, {"jobs"});
  write_json_file(report_path.string(), report_json);
  const fs::path stable_path = out_dir / "stable_set.csv";
  write_stable_set_csv(stable_path.string(), report, targets.task_names);

  manifest.set_config(echo);
  manifest.add_output(report_path);
  manifest.add_output(stable_path);
  const fs::path manifest_path = manifest.write();

  std::cout << "fits: " << (static_cast<long>(report.n_grid) * report.n_subsamples)
            << " executed: " << report.executed_fits << " failed: " << report.failed_fits << "\n"
            << "report: " << report_path.string() << "\n"
            << "stable set: " << stable_path.string() << "\n"
            << "manifest: " << manifest_path.string() << "\n";
  return 0;
}

// ------------------------------------------------------------- evaluate

int run_evaluate(const std::string& dataset_path, const ordered_json& config_json,
                 const std::string& measures_flag, const fs::path& out_dir,
                 const GlobalOptions& global) {
  ordered_json cfg = config_json;
  if (global.seed) cfg["seed"] = *global.seed;
  if (global.jobs) cfg["jobs"] = *global.jobs;
  std::vector<std::string> measure_names;
  if (!measures_flag.empty()) {
    std::stringstream ss(measures_flag);
    std::string item;
    while (std::getline(ss, item, ',')) measure_names.push_back(item);
  } else if (cfg.contains("measures")) {
    measure_names = cfg["measures"].get<std::vector<std::string>>();
  } else {
    measure_names = {"original", "cosine", "euclidean", "mahalanobis"};
  }
  const ExperimentConfig config =
      experiment_config_from_json(without_keys(cfg, {"measures", "dataset"}));

  std::vector<FeatureMode> modes;
  for (const auto& name : measure_names) modes.push_back(parse_feature_mode(name));
  if (modes.empty()) throw ConfigError("evaluate: no measures requested");

  ManifestWriter manifest("evaluate", out_dir);
  manifest.add_input(dataset_path);

  const PairedDataset dataset = read_dataset_csv(dataset_path);
  const auto tables = compare_measures(dataset, modes, config);

  ordered_json echo = experiment_config_to_json(config);
  echo["measures"] = measure_names;
  echo["dataset"] = dataset_path;
  manifest.set_config(echo);

  ordered_json combined;
  combined["config"] = echo;
  for (const auto& [measure, table] : tables) {
    const fs::path csv_path = out_dir / ("metrics_" + measure + ".csv");
    write_metric_table_csv(csv_path.string(), table);
    manifest.add_output(csv_path);
    combined[measure] = metric_table_to_json(table);
  }
  const fs::path json_path = out_dir / "metrics.json";
  write_json_file(json_path.string(), combined);
  manifest.add_output(json_path);
  const fs::path long_path = out_dir / "metrics_long.csv";
  write_metric_tables_long_csv(long_path.string(), tables);
  manifest.add_output(long_path);
  const fs::path manifest_path = manifest.write();

  for (const auto& [measure, table] : tables) {
    std::cout << measure << ": nMSE " << format_mean_std(table.nmse.mean, table.nmse.stddev)
              << " wR " << format_mean_std(table.weighted_r.mean, table.weighted_r.stddev) << "\n";
  }
  std::cout << "metrics: " << json_path.string() << "\n"
            << "manifest: " << manifest_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- rerun

int run_rerun(const std::string& manifest_path, const GlobalOptions& global);

int dispatch_from_manifest(const ordered_json& manifest, const fs::path& out_dir,
                           const GlobalOptions& global) {
  const std::string command = manifest.at("command").get<std::string>();
  const ordered_json& config = manifest.at("config");
  if (command == "synth") {
    return run_synth(config, out_dir, global);
  }
  if (command == "ingest") {
    ordered_json schema = config.at("schema");
    const fs::path schema_tmp = out_dir / "rerun_schema.json";
    fs::create_directories(out_dir);
    write_json_file(schema_tmp.string(), schema);
    return run_ingest(config.at("input").get<std::string>(), schema_tmp.string(),
                      config.at("span").get<std::string>(),
                      config.at("targets").get<std::string>(), out_dir);
  }
  if (command == "features") {
    return run_features(config.at("dataset").get<std::string>(),
                        config.at("measure").get<std::string>(), out_dir);
  }
  if (command == "train") {
    return run_train(config.at("features").get<std::string>(),
                     config.at("targets").get<std::string>(), config, "",
                     config.value("standardize", true), out_dir);
  }
  if (command == "stability") {
    return run_stability_cmd(config.at("features").get<std::string>(),
                             config.at("targets").get<std::string>(), config,
                             config.value("standardize", true),
                             config.value("checkpoint", std::string{}), out_dir, global);
  }
  if (command == "evaluate") {
    std::string measures;
    for (const auto& m : config.at("measures")) {
      if (!measures.empty()) measures += ",";
      measures += m.get<std::string>();
    }
    return run_evaluate(config.at("dataset").get<std::string>(), config, measures, out_dir,
                        global);
  }
  throw ConfigError("rerun: manifest for unknown command '" + command + "'");
}

int run_rerun(const std::string& manifest_path, const GlobalOptions& global) {
  const ordered_json manifest = read_json_file(manifest_path);
  if (!manifest.contains("command") || !manifest.contains("config"))
    throw ConfigError("rerun: not a stmtl manifest: " + manifest_path);
  const fs::path out_dir = fs::path(manifest_path).parent_path();
  return dispatch_from_manifest(manifest, out_dir, global);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatio-temporal similarity multi-task regression pipeline"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GlobalOptions global;
  std::uint64_t seed_flag = 0;
  int jobs_flag = 1;
  auto* seed_opt = app.add_option("--seed", seed_flag, "Override the config seed");
  auto* jobs_opt = app.add_option("--jobs", jobs_flag, "Parallel worker count")
                       ->check(CLI::PositiveNumber);

  std::string config_path, out_dir, input, schema, span = "M06", targets, dataset,
              measure = "cosine", features, targets_csv, solver, checkpoint, measures,
              manifest_file;
  bool no_standardize = false;

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic longitudinal cohort");
  synth_cmd->add_option("--config", config_path, "Synth config json");
  synth_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* ingest_cmd = app.add_subcommand("ingest", "Parse, clean and assemble a cohort csv");
  ingest_cmd->add_option("--input", input, "Cohort csv")->required();
  ingest_cmd->add_option("--schema", schema, "Column schema json")->required();
  ingest_cmd->add_option("--span", span, "Follow visit code (M06|M12|M24|M36)");
  ingest_cmd->add_option("--targets", targets, "Comma list of score@VISIT targets")->required();
  ingest_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* features_cmd = app.add_subcommand("features", "Build the design matrix");
  features_cmd->add_option("--dataset", dataset, "dataset.csv from ingest")->required();
  features_cmd->add_option("--measure", measure,
                           "original|cosine|euclidean|mahalanobis");
  features_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Fit one model on a feature matrix");
  train_cmd->add_option("--features", features, "features.csv")->required();
  train_cmd->add_option("--targets", targets_csv, "targets.csv")->required();
  train_cmd->add_option("--solver", solver, "ridge|lasso|tgl|cfsgl");
  train_cmd->add_option("--config", config_path, "Train config json");
  train_cmd->add_flag("--no-standardize", no_standardize, "Skip z-scoring/centering");
  train_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* stability_cmd = app.add_subcommand("stability", "Stability-selection sweep");
  stability_cmd->add_option("--features", features, "features.csv")->required();
  stability_cmd->add_option("--targets", targets_csv, "targets.csv")->required();
  stability_cmd->add_option("--config", config_path, "Stability config json");
  stability_cmd->add_option("--checkpoint", checkpoint, "Per-cell checkpoint directory");
  stability_cmd->add_flag("--no-standardize", no_standardize, "Skip z-scoring/centering");
  stability_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Repeated cross-validated comparison");
  evaluate_cmd->add_option("--dataset", dataset, "dataset.csv from ingest")->required();
  evaluate_cmd->add_option("--config", config_path, "Experiment config json");
  evaluate_cmd->add_option("--measures", measures, "Comma list of feature modes");
  evaluate_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* rerun_cmd = app.add_subcommand("rerun", "Replay a recorded manifest");
  rerun_cmd->add_option("--manifest", manifest_file, "manifest.json from a previous run")
      ->required();

  // Let --seed/--jobs appear after the subcommand name as well.
  for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*seed_opt) global.seed = seed_flag;
  if (*jobs_opt) global.jobs = jobs_flag;

  try {
    if (*synth_cmd) return run_synth(load_config_or_empty(config_path), out_dir, global);
    if (*ingest_cmd) return run_ingest(input, schema, span, targets, out_dir);
    if (*features_cmd) return run_features(dataset, measure, out_dir);
    if (*train_cmd)
      return run_train(features, targets_csv, load_config_or_empty(config_path), solver,
                       !no_standardize, out_dir);
    if (*stability_cmd)
      return run_stability_cmd(features, targets_csv, load_config_or_empty(config_path),
                               !no_standardize, checkpoint, out_dir, global);
    if (*evaluate_cmd)
      return run_evaluate(dataset, load_config_or_empty(config_path), measures, out_dir, global);
    if (*rerun_cmd) return run_rerun(manifest_file, global);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
