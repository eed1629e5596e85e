#pragma once

#include "stmtl/dataio.hpp"
#include "stmtl/types.hpp"

#include <cstdint>

namespace stmtl {

struct SynthConfig {
  int n_subjects = 100;
  int n_rois = 10;
  int k_tasks = 3;
  int support_size = 4;                           // planted pair count, or
  std::vector<std::pair<int, int>> support_pairs; // explicit ROI pairs (override)
  double noise_sigma = 0.1;
  double drift_min = -0.05;  // per-ROI systematic slope range
  double drift_max = 0.0;
  double trend_noise = 0.08;  // per-cell relative-change dispersion
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruth {
  Matrix W_true;             // pair-feature space, d x k
  std::vector<int> support;  // nonzero rows of W_true (pair columns)
  std::vector<std::string> support_names;
  Matrix pair_features;      // the generating cosine design matrix (n x d)
};

// Longitudinal cohort whose targets are a sparse linear function of the
// cosine pair-similarity features plus noise. Subjects carry BL + follow
// scans and score values at the first k visit codes, so the full ingest ->
// features -> evaluate pipeline has a known answer.
std::pair<Cohort, GroundTruth> generate_cohort(const SynthConfig& config);

// Visit codes carrying the synthetic score, in task order.
std::vector<TargetSpec> synth_targets(const SynthConfig& config);

struct RegressionInstance {
  Matrix X;  // n x d, standard normal entries
  Matrix Y;  // n x k
  Matrix W_true;
  std::vector<int> support;
};

// Row-sparse planted regression problem; noise is scaled so the realized
// signal-to-noise ratio matches `snr` exactly (infinity means noiseless).
// With smooth=true the support rows follow a small random walk across
// tasks.
RegressionInstance generate_regression_instance(int n, int d, int k, int support_size, double snr,
                                                bool smooth, std::uint64_t seed);

}  // namespace stmtl
