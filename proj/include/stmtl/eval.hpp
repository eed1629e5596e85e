#pragma once

#include "stmtl/dataio.hpp"
#include "stmtl/features.hpp"
#include "stmtl/stability.hpp"

#include <map>
#include <optional>

namespace stmtl {

// Sum over tasks of ||Y_i - Yhat_i||^2 / Var(Y_i), divided by the total
// sample count; Var is the population variance of the task's targets.
double nmse(const Matrix& Y, const Matrix& Yhat);

double rmse_per_task(const Vector& y, const Vector& yhat);

// Sample-size-weighted mean Pearson correlation across tasks.
double weighted_r(const Matrix& Y, const Matrix& Yhat);

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0;  // population std over repeats (0 when n_repeats == 1)
};

struct MetricTable {
  MetricStat nmse;
  MetricStat weighted_r;
  std::vector<std::pair<std::string, MetricStat>> per_task_rmse;  // one entry per task
  int n_repeats = 0;
};

enum class FeatureMode { Original, Cosine, Euclidean, Mahalanobis };

const char* to_string(FeatureMode m);
FeatureMode parse_feature_mode(const std::string& s);

struct ScreeningConfig {
  int target_count = 0;
  StabilityConfig stability;
  bool global = false;  // true: screen once on all rows (leakage-prone, labeled)
};

struct ExperimentConfig {
  int n_folds = 5;
  int n_repeats = 30;
  std::uint64_t seed = 0;
  MtlSolver solver = MtlSolver::TGL;
  PenaltyPoint penalties;
  std::vector<PenaltyPoint> selection_grid;  // non-empty: inner holdout picks the point
  SolverConfig solver_config;
  std::optional<ScreeningConfig> screening;
  int jobs = 1;

  void validate(int n) const;
};

// Deterministic fold assignment: fold id per row, derived from
// (seed, repeat, n) only, so paired comparisons share folds.
std::vector<int> assign_folds(int n, int n_folds, int repeat, std::uint64_t seed);

// Training-fold preparation: z-score X and center Y with training rows
// only. Exposed so leakage tests can poison held-out rows and check the
// statistics are untouched.
struct FoldData {
  Matrix x_train, y_train;  // standardized / centered
  Matrix x_test;            // scaled by the training statistics
  ScalingStats stats;
};
FoldData prepare_fold(const Matrix& X, const Matrix& Y, const std::vector<int>& train_rows,
                      const std::vector<int>& test_rows);

// Repeated K-fold protocol: per repeat, pooled out-of-fold predictions are
// scored once; mean and std aggregate over repeats.
MetricTable run_experiment(const Matrix& X, const Matrix& Y,
                           const std::vector<std::string>& task_names,
                           const ExperimentConfig& config);

// Same folds and seeds across feature modes so differences reflect the
// features only.
std::map<std::string, MetricTable> compare_measures(const PairedDataset& dataset,
                                                    const std::vector<FeatureMode>& modes,
                                                    const ExperimentConfig& config);

DesignMatrix build_features(const PairedDataset& dataset, FeatureMode mode);

}  // namespace stmtl
