#pragma once

#include "stmtl/dataio.hpp"
#include "stmtl/eval.hpp"
#include "stmtl/features.hpp"
#include "stmtl/solvers.hpp"
#include "stmtl/stability.hpp"
#include "stmtl/synth.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>

namespace stmtl {

using ordered_json = nlohmann::ordered_json;

// All report writers emit key order and number formatting deterministically
// so identical runs produce identical bytes.
void write_json_file(const std::string& path, const ordered_json& j);
ordered_json read_json_file(const std::string& path);

ordered_json to_json(const CleaningReport& report);

ordered_json fit_to_json(const FitResult& fit, const ordered_json& config_echo);
void write_weights_csv(const std::string& path, const Matrix& W,
                       const std::vector<std::string>& row_names,
                       const std::vector<std::string>& task_names);

ordered_json stability_to_json(const StabilityReport& report,
                               const std::vector<std::string>& column_names);
void write_stable_set_csv(const std::string& path, const StabilityReport& report,
                          const std::vector<std::string>& task_names);

ordered_json metric_table_to_json(const MetricTable& table);
// Table layout used throughout: nMSE, wR, then one rMSE row per task,
// "mean±std" formatted to three decimals.
void write_metric_table_csv(const std::string& path, const MetricTable& table);
void write_metric_tables_long_csv(const std::string& path,
                                  const std::map<std::string, MetricTable>& tables);

void write_design_csv(const std::string& path, const DesignMatrix& design);
DesignMatrix read_design_csv(const std::string& path);
void write_target_csv(const std::string& path, const TargetMatrix& targets);
TargetMatrix read_target_csv(const std::string& path);

ordered_json ground_truth_to_json(const GroundTruth& truth);

// Config parsing (JSON object -> typed config). Unknown keys are errors so
// typos surface instead of silently using defaults.
SolverConfig solver_config_from_json(const ordered_json& j);
PenaltyPoint penalty_from_json(const ordered_json& j);
StabilityConfig stability_config_from_json(const ordered_json& j);
ExperimentConfig experiment_config_from_json(const ordered_json& j);
SynthConfig synth_config_from_json(const ordered_json& j);
ColumnSchema schema_from_json(const ordered_json& j);

ordered_json solver_config_to_json(const SolverConfig& c);
ordered_json penalty_to_json(const PenaltyPoint& p);
ordered_json stability_config_to_json(const StabilityConfig& c);
ordered_json experiment_config_to_json(const ExperimentConfig& c);
ordered_json synth_config_to_json(const SynthConfig& c);
ordered_json schema_to_json(const ColumnSchema& s);

std::string format_mean_std(double mean, double std);  // "0.743±0.060"

}  // namespace stmtl
