#pragma once

#include "stmtl/solvers.hpp"
#include "stmtl/types.hpp"

#include <cstdint>

namespace stmtl {

enum class MtlSolver { Ridge, Lasso, TGL, CFSGL };

const char* to_string(MtlSolver s);
MtlSolver parse_solver(const std::string& s);

// One point of the regularization space; fields are interpreted per
// solver (Ridge/Lasso read theta1 as lambda).
struct PenaltyPoint {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double delta = 0.0;
};

FitResult fit_mtl(MtlSolver solver, const Matrix& X, const Matrix& Y, const PenaltyPoint& p,
                  const SolverConfig& config);

struct StabilityConfig {
  MtlSolver solver = MtlSolver::CFSGL;
  std::vector<PenaltyPoint> grid;
  int n_subsamples = 10;   // gamma; each subsample has floor(n/2) rows
  double threshold = 0.8;  // pi_th
  std::uint64_t seed = 0;
  double nonzero_eps = 1e-8;
  SolverConfig solver_config;
  int jobs = 1;

  void validate() const;
};

// 21x10 geometric grid over (sparsity, fused) penalties; the default
// 210-point regularization space for cFSGL-style sweeps.
std::vector<PenaltyPoint> default_grid(MtlSolver solver, int n_sparsity = 21, int n_structure = 10,
                                       double lo = 1e-3, double hi = 10.0);

struct StableFeature {
  int feature = 0;
  std::string name;
  double score = 0.0;
};

struct StabilityReport {
  int n_features = 0;
  int n_tasks = 0;
  int n_grid = 0;
  int n_subsamples = 0;
  // Selection frequency per (feature, task, grid point); exact multiples
  // of 1/gamma.
  std::vector<double> frequencies;
  Matrix scores;  // d x k, max over the grid
  std::vector<std::vector<StableFeature>> stable_sets;  // per task, score >= threshold
  double threshold = 0.0;
  std::uint64_t seed = 0;
  long failed_fits = 0;
  long executed_fits = 0;  // fits actually run (0 when fully resumed)

  double frequency(int feature, int task, int grid_point) const {
    return frequencies[(static_cast<std::size_t>(feature) * n_tasks + task) * n_grid + grid_point];
  }
};

// Uniform floor(n/2)-subset without replacement; deterministic in
// (n, run, seed) so every grid point sees the same subsample sequence.
std::vector<int> subsample_indices(int n, int run, std::uint64_t seed);

// Support of task j at threshold eps: {f : |W(f,j)| > eps}.
std::vector<int> selection_set(const Matrix& W, int task, double nonzero_eps);

double selection_frequency(const std::vector<std::vector<int>>& runs, int feature, int gamma);

// Optional per-cell persistence so interrupted sweeps resume instead of
// refitting; empty dir disables checkpointing.
StabilityReport run_stability(const Matrix& X, const Matrix& Y, const StabilityConfig& config,
                              const std::vector<std::string>& column_names = {},
                              const std::string& checkpoint_dir = "");

// Top features ranked by max-over-tasks stability score; ties broken by
// mean frequency across the grid, then by column index.
std::vector<int> screen_features(const Matrix& X, const Matrix& Y, const StabilityConfig& config,
                                 int target_count);

}  // namespace stmtl
