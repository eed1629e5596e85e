#include "stmtl/serialize.hpp"

#include "stmtl/csv.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace stmtl {

void write_json_file(const std::string& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write json file: " + path);
  out << j.dump(2) << '\n';
}

ordered_json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open json file: " + path);
  try {
    ordered_json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed json in " + path + ": " + e.what());
  }
}

namespace {

void reject_unknown_keys(const ordered_json& j, const std::set<std::string>& known,
                         const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected a json object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(what + ": unknown key '" + key + "'");
  }
}

}  // namespace

ordered_json to_json(const CleaningReport& report) {
  ordered_json j;
  j["removed_subjects"] = ordered_json::array();
  for (const auto& rs : report.removed_subjects) {
    j["removed_subjects"].push_back({{"subject_id", rs.subject_id}, {"rule", rs.rule}});
  }
  j["removed_features"] = ordered_json::array();
  for (const auto& rf : report.removed_features) {
    j["removed_features"].push_back(
        {{"roi_name", rf.roi_name}, {"missing_fraction", rf.missing_fraction}});
  }
  j["imputed_cells"] = report.imputed_cells;
  return j;
}

ordered_json fit_to_json(const FitResult& fit, const ordered_json& config_echo) {
  ordered_json j;
  j["rows"] = fit.W.rows();
  j["cols"] = fit.W.cols();
  ordered_json w = ordered_json::array();
  for (Eigen::Index f = 0; f < fit.W.rows(); ++f)
    for (Eigen::Index t = 0; t < fit.W.cols(); ++t) w.push_back(fit.W(f, t));
  j["W_row_major"] = std::move(w);
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["objective_trace"] = fit.objective_trace;
  j["config"] = config_echo;
  return j;
}

void write_weights_csv(const std::string& path, const Matrix& W,
                       const std::vector<std::string>& row_names,
                       const std::vector<std::string>& task_names) {
  csv::Table table;
  table.header.push_back("feature");
  for (Eigen::Index t = 0; t < W.cols(); ++t) {
    table.header.push_back(task_names.empty() ? "task" + std::to_string(t)
                                              : task_names[static_cast<std::size_t>(t)]);
  }
  for (Eigen::Index f = 0; f < W.rows(); ++f) {
    std::vector<std::string> row;
    row.push_back(row_names.empty() ? "col" + std::to_string(f)
                                    : row_names[static_cast<std::size_t>(f)]);
    for (Eigen::Index t = 0; t < W.cols(); ++t) row.push_back(csv::format_double(W(f, t)));
    table.rows.push_back(std::move(row));
  }
  csv::write_file(path, table);
}

ordered_json stability_to_json(const StabilityReport& report,
                               const std::vector<std::string>& column_names) {
  ordered_json j;
  j["n_features"] = report.n_features;
  j["n_tasks"] = report.n_tasks;
  j["n_grid"] = report.n_grid;
  j["n_subsamples"] = report.n_subsamples;
  j["threshold"] = report.threshold;
  j["seed"] = report.seed;
  j["failed_fits"] = report.failed_fits;
  j["executed_fits"] = report.executed_fits;
  j["total_fits"] = static_cast<long>(report.n_grid) * report.n_subsamples;
  ordered_json scores = ordered_json::array();
  for (Eigen::Index f = 0; f < report.scores.rows(); ++f)
    for (Eigen::Index t = 0; t < report.scores.cols(); ++t) scores.push_back(report.scores(f, t));
  j["scores_row_major"] = std::move(scores);
  j["frequencies"] = report.frequencies;  // (feature, task, grid) row-major
  ordered_json stable = ordered_json::array();
  for (std::size_t t = 0; t < report.stable_sets.size(); ++t) {
    ordered_json task_set = ordered_json::array();
    for (const auto& sf : report.stable_sets[t]) {
      task_set.push_back({{"feature", sf.feature}, {"name", sf.name}, {"score", sf.score}});
    }
    stable.push_back(std::move(task_set));
  }
  j["stable_sets"] = std::move(stable);
  if (!column_names.empty()) j["column_names"] = column_names;
  return j;
}

void write_stable_set_csv(const std::string& path, const StabilityReport& report,
                          const std::vector<std::string>& task_names) {
  csv::Table table;
  table.header = {"task", "feature_index", "pair", "definition", "score"};
  for (std::size_t t = 0; t < report.stable_sets.size(); ++t) {
    const std::string task_label =
        task_names.empty() ? "task" + std::to_string(t) : task_names[t];
    for (const auto& sf : report.stable_sets[t]) {
      const auto dash = sf.name.find('-');
      const std::string definition =
          dash == std::string::npos
              ? sf.name
              : sf.name.substr(0, dash) + " <=> " + sf.name.substr(dash + 1);
      table.rows.push_back({task_label, std::to_string(sf.feature), sf.name, definition,
                            csv::format_double(sf.score)});
    }
  }
  csv::write_file(path, table);
}

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f±%.3f", mean, std);
  return buf;
}

ordered_json metric_table_to_json(const MetricTable& table) {
  ordered_json j;
  j["n_repeats"] = table.n_repeats;
  j["nMSE"] = {{"mean", table.nmse.mean}, {"std", table.nmse.stddev}};
  j["wR"] = {{"mean", table.weighted_r.mean}, {"std", table.weighted_r.stddev}};
  ordered_json rmse = ordered_json::array();
  for (const auto& [label, stat] : table.per_task_rmse) {
    rmse.push_back({{"task", label}, {"mean", stat.mean}, {"std", stat.stddev}});
  }
  j["rmse_per_task"] = std::move(rmse);
  return j;
}

void write_metric_table_csv(const std::string& path, const MetricTable& table) {
  csv::Table out;
  out.header = {"metric", "value"};
  out.rows.push_back({"nMSE", format_mean_std(table.nmse.mean, table.nmse.stddev)});
  out.rows.push_back({"wR", format_mean_std(table.weighted_r.mean, table.weighted_r.stddev)});
  for (const auto& [label, stat] : table.per_task_rmse) {
    out.rows.push_back({label + " rMSE", format_mean_std(stat.mean, stat.stddev)});
  }
  csv::write_file(path, out);
}

void write_metric_tables_long_csv(const std::string& path,
                                  const std::map<std::string, MetricTable>& tables) {
  csv::Table out;
  out.header = {"metric", "time_point", "mean", "std", "measure"};
  for (const auto& [measure, table] : tables) {
    out.rows.push_back({"nMSE", "", csv::format_double(table.nmse.mean),
                        csv::format_double(table.nmse.stddev), measure});
    out.rows.push_back({"wR", "", csv::format_double(table.weighted_r.mean),
                        csv::format_double(table.weighted_r.stddev), measure});
    for (const auto& [label, stat] : table.per_task_rmse) {
      out.rows.push_back({"rMSE", label, csv::format_double(stat.mean),
                          csv::format_double(stat.stddev), measure});
    }
  }
  csv::write_file(path, out);
}

void write_design_csv(const std::string& path, const DesignMatrix& design) {
  csv::Table table;
  table.header = design.column_names;
  for (Eigen::Index i = 0; i < design.values.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(static_cast<std::size_t>(design.values.cols()));
    for (Eigen::Index j = 0; j < design.values.cols(); ++j)
      row.push_back(csv::format_double(design.values(i, j)));
    table.rows.push_back(std::move(row));
  }
  csv::write_file(path, table);
}

DesignMatrix read_design_csv(const std::string& path) {
  const csv::Table table = csv::read_file(path);
  DesignMatrix design;
  design.column_names = table.header;
  design.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                       static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t j = 0; j < table.header.size(); ++j) {
      design.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          csv::parse_double(table.rows[i][j], static_cast<int>(i) + 2, table.header[j]);
    }
  }
  return design;
}

void write_target_csv(const std::string& path, const TargetMatrix& targets) {
  csv::Table table;
  table.header = targets.task_names;
  for (Eigen::Index i = 0; i < targets.values.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < targets.values.cols(); ++j)
      row.push_back(csv::format_double(targets.values(i, j)));
    table.rows.push_back(std::move(row));
  }
  csv::write_file(path, table);
}

TargetMatrix read_target_csv(const std::string& path) {
  const csv::Table table = csv::read_file(path);
  TargetMatrix targets;
  targets.task_names = table.header;
  targets.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                        static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t j = 0; j < table.header.size(); ++j) {
      targets.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          csv::parse_double(table.rows[i][j], static_cast<int>(i) + 2, table.header[j]);
    }
  }
  return targets;
}

ordered_json ground_truth_to_json(const GroundTruth& truth) {
  ordered_json j;
  j["support"] = truth.support;
  j["support_names"] = truth.support_names;
  j["rows"] = truth.W_true.rows();
  j["cols"] = truth.W_true.cols();
  ordered_json w = ordered_json::array();
  for (Eigen::Index f = 0; f < truth.W_true.rows(); ++f)
    for (Eigen::Index t = 0; t < truth.W_true.cols(); ++t) w.push_back(truth.W_true(f, t));
  j["W_true_row_major"] = std::move(w);
  return j;
}

SolverConfig solver_config_from_json(const ordered_json& j) {
  reject_unknown_keys(j, {"max_iter", "tol", "initial_step", "step_shrink"}, "solver config");
  SolverConfig c;
  c.max_iter = j.value("max_iter", c.max_iter);
  c.tol = j.value("tol", c.tol);
  c.initial_step = j.value("initial_step", c.initial_step);
  c.step_shrink = j.value("step_shrink", c.step_shrink);
  c.validate();
  return c;
}

ordered_json solver_config_to_json(const SolverConfig& c) {
  return {{"max_iter", c.max_iter},
          {"tol", c.tol},
          {"initial_step", c.initial_step},
          {"step_shrink", c.step_shrink}};
}

PenaltyPoint penalty_from_json(const ordered_json& j) {
  reject_unknown_keys(j, {"theta1", "theta2", "delta", "lambda"}, "penalty point");
  PenaltyPoint p;
  if (j.contains("lambda")) p.theta1 = j["lambda"].get<double>();
  p.theta1 = j.value("theta1", p.theta1);
  p.theta2 = j.value("theta2", p.theta2);
  p.delta = j.value("delta", p.delta);
  return p;
}

ordered_json penalty_to_json(const PenaltyPoint& p) {
  return {{"theta1", p.theta1}, {"theta2", p.theta2}, {"delta", p.delta}};
}

StabilityConfig stability_config_from_json(const ordered_json& j) {
  reject_unknown_keys(j,
                      {"solver", "grid", "grid_sparsity", "grid_structure", "grid_lo", "grid_hi",
                       "n_subsamples", "threshold", "seed", "nonzero_eps", "solver_config", "jobs"},
                      "stability config");
  StabilityConfig c;
  if (j.contains("solver")) c.solver = parse_solver(j["solver"].get<std::string>());
  if (j.contains("grid")) {
    for (const auto& p : j["grid"]) c.grid.push_back(penalty_from_json(p));
  } else {
    c.grid = default_grid(c.solver, j.value("grid_sparsity", 21), j.value("grid_structure", 10),
                          j.value("grid_lo", 1e-3), j.value("grid_hi", 10.0));
  }
  c.n_subsamples = j.value("n_subsamples", c.n_subsamples);
  c.threshold = j.value("threshold", c.threshold);
  c.seed = j.value("seed", c.seed);
  c.nonzero_eps = j.value("nonzero_eps", c.nonzero_eps);
  if (j.contains("solver_config")) c.solver_config = solver_config_from_json(j["solver_config"]);
  c.jobs = j.value("jobs", c.jobs);
  c.validate();
  return c;
}

ordered_json stability_config_to_json(const StabilityConfig& c) {
  ordered_json grid = ordered_json::array();
  for (const auto& p : c.grid) grid.push_back(penalty_to_json(p));
  return {{"solver", to_string(c.solver)},
          {"grid", std::move(grid)},
          {"n_subsamples", c.n_subsamples},
          {"threshold", c.threshold},
          {"seed", c.seed},
          {"nonzero_eps", c.nonzero_eps},
          {"solver_config", solver_config_to_json(c.solver_config)},
          {"jobs", c.jobs}};
}

ExperimentConfig experiment_config_from_json(const ordered_json& j) {
  reject_unknown_keys(j,
                      {"n_folds", "n_repeats", "seed", "solver", "penalties", "selection_grid",
                       "solver_config", "screening", "jobs"},
                      "experiment config");
  ExperimentConfig c;
  c.n_folds = j.value("n_folds", c.n_folds);
  c.n_repeats = j.value("n_repeats", c.n_repeats);
  c.seed = j.value("seed", c.seed);
  if (j.contains("solver")) c.solver = parse_solver(j["solver"].get<std::string>());
  if (j.contains("penalties")) c.penalties = penalty_from_json(j["penalties"]);
  if (j.contains("selection_grid")) {
    for (const auto& p : j["selection_grid"]) c.selection_grid.push_back(penalty_from_json(p));
  }
  if (j.contains("solver_config")) c.solver_config = solver_config_from_json(j["solver_config"]);
  if (j.contains("screening")) {
    const auto& s = j["screening"];
    reject_unknown_keys(s, {"target_count", "global", "stability"}, "screening config");
    ScreeningConfig sc;
    sc.target_count = s.value("target_count", 0);
    sc.global = s.value("global", false);
    if (s.contains("stability")) sc.stability = stability_config_from_json(s["stability"]);
    else sc.stability.grid = default_grid(sc.stability.solver, 5, 2, 1e-2, 1.0);
    c.screening = std::move(sc);
  }
  c.jobs = j.value("jobs", c.jobs);
  return c;
}

ordered_json experiment_config_to_json(const ExperimentConfig& c) {
  ordered_json j{{"n_folds", c.n_folds},
                 {"n_repeats", c.n_repeats},
                 {"seed", c.seed},
                 {"solver", to_string(c.solver)},
                 {"penalties", penalty_to_json(c.penalties)},
                 {"solver_config", solver_config_to_json(c.solver_config)},
                 {"jobs", c.jobs}};
  if (!c.selection_grid.empty()) {
    ordered_json grid = ordered_json::array();
    for (const auto& p : c.selection_grid) grid.push_back(penalty_to_json(p));
    j["selection_grid"] = std::move(grid);
  }
  if (c.screening) {
    j["screening"] = {{"target_count", c.screening->target_count},
                      {"global", c.screening->global},
                      {"stability", stability_config_to_json(c.screening->stability)}};
  }
  return j;
}

SynthConfig synth_config_from_json(const ordered_json& j) {
  reject_unknown_keys(j,
                      {"n_subjects", "n_rois", "k_tasks", "support_size", "support_pairs",
                       "noise_sigma", "drift_min", "drift_max", "trend_noise", "seed"},
                      "synth config");
  SynthConfig c;
  c.n_subjects = j.value("n_subjects", c.n_subjects);
  c.n_rois = j.value("n_rois", c.n_rois);
  c.k_tasks = j.value("k_tasks", c.k_tasks);
  c.support_size = j.value("support_size", c.support_size);
  if (j.contains("support_pairs")) {
    for (const auto& pair : j["support_pairs"]) {
      if (!pair.is_array() || pair.size() != 2)
        throw ConfigError("synth config: support_pairs entries must be [a, b]");
      c.support_pairs.emplace_back(pair[0].get<int>(), pair[1].get<int>());
    }
  }
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.drift_min = j.value("drift_min", c.drift_min);
  c.drift_max = j.value("drift_max", c.drift_max);
  c.trend_noise = j.value("trend_noise", c.trend_noise);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

ordered_json synth_config_to_json(const SynthConfig& c) {
  ordered_json j{{"n_subjects", c.n_subjects}, {"n_rois", c.n_rois},
                 {"k_tasks", c.k_tasks},       {"support_size", c.support_size},
                 {"noise_sigma", c.noise_sigma}, {"drift_min", c.drift_min},
                 {"drift_max", c.drift_max},   {"trend_noise", c.trend_noise},
                 {"seed", c.seed}};
  if (!c.support_pairs.empty()) {
    ordered_json pairs = ordered_json::array();
    for (const auto& [a, b] : c.support_pairs) pairs.push_back({a, b});
    j["support_pairs"] = std::move(pairs);
  }
  return j;
}

ColumnSchema schema_from_json(const ordered_json& j) {
  reject_unknown_keys(
      j, {"subject_col", "visit_col", "date_col", "dx_col", "qc_col", "score_cols", "roi_cols"},
      "schema");
  ColumnSchema s;
  s.subject_col = j.value("subject_col", s.subject_col);
  s.visit_col = j.value("visit_col", s.visit_col);
  s.date_col = j.value("date_col", s.date_col);
  s.dx_col = j.value("dx_col", s.dx_col);
  s.qc_col = j.value("qc_col", s.qc_col);
  if (j.contains("score_cols")) s.score_cols = j["score_cols"].get<std::vector<std::string>>();
  if (j.contains("roi_cols")) s.roi_cols = j["roi_cols"].get<std::vector<std::string>>();
  s.validate();
  return s;
}

ordered_json schema_to_json(const ColumnSchema& s) {
  return {{"subject_col", s.subject_col}, {"visit_col", s.visit_col}, {"date_col", s.date_col},
          {"dx_col", s.dx_col},           {"qc_col", s.qc_col},       {"score_cols", s.score_cols},
          {"roi_cols", s.roi_cols}};
}

}  // namespace stmtl
