#pragma once

#include "stmtl/types.hpp"

#include <optional>

namespace stmtl {

// Days-to-months conversion used for velocities (mean Gregorian month).
inline constexpr double kDaysPerMonth = 30.4375;

// (relative change, change per month) for one biomarker between two scans.
struct TrendVector {
  double magnitude = 0.0;
  double velocity = 0.0;
};

TrendVector trend_vector(double x_bl, double x_follow, double dt_days);

double cosine_similarity(const TrendVector& u, const TrendVector& v);
double euclidean_distance(const TrendVector& u, const TrendVector& v);
// cov must be symmetric positive definite (2x2).
double mahalanobis_distance(const TrendVector& u, const TrendVector& v,
                            const Eigen::Matrix2d& cov);

enum class SimilarityMeasure { Cosine, Euclidean, Mahalanobis };

const char* to_string(SimilarityMeasure m);
SimilarityMeasure parse_measure(const std::string& s);  // also accepts "original" upstream

struct PairIndex {
  int a = 0;  // ROI indices, a < b
  int b = 0;
  int column = 0;
};

struct DesignMatrix {
  Matrix values;                          // n x d
  std::vector<PairIndex> pairs;           // empty in original-feature mode
  std::vector<std::string> column_names;  // "<ROI_A>-<ROI_B>" or raw ROI ids
  bool standardized = false;
};

struct TargetMatrix {
  Matrix values;  // n x k
  std::vector<std::string> task_names;
};

// Per-subject trends for all ROIs, stored column-per-ROI.
struct TrendSet {
  Matrix magnitude;  // n x r
  Matrix velocity;   // n x r
  std::vector<std::string> roi_names;
  long zero_baseline_cells = 0;  // cells mapped to (0, velocity) by policy
};

struct PairedDataset;  // dataio.hpp

// Trend vectors for every (subject, ROI). A zero baseline is an error at
// the scalar level; here it degrades to magnitude 0 with a counted warning.
TrendSet compute_trends(const PairedDataset& dataset);

// d = r(r-1)/2 pairwise-similarity columns, lexicographic by (a, b).
// For Mahalanobis the per-pair covariance is pooled over both ROIs' trend
// vectors across subjects and ridge-regularized.
DesignMatrix build_pair_features(const TrendSet& trends, SimilarityMeasure measure);

// Baseline ROI values passed through unchanged (original-feature mode).
DesignMatrix build_original_features(const PairedDataset& dataset);

int pair_count(int r);
int pair_column(int a, int b, int r);  // lexicographic (a < b) -> column

struct ScalingStats {
  Vector x_mean;
  Vector x_std;                     // population std; 1.0 recorded for constant columns
  std::vector<uint8_t> x_constant;  // flagged constant columns
  Vector y_mean;
};

// Z-scores X columns and mean-centers Y columns in place; returns the
// statistics needed to map predictions back to score units.
ScalingStats standardize(DesignMatrix& X, TargetMatrix& Y);

// Fold-safe application of training statistics to held-out rows.
Matrix apply_x_scaling(const ScalingStats& stats, const Matrix& X);
Matrix apply_y_centering(const ScalingStats& stats, const Matrix& Y);
Matrix invert_y_centering(const ScalingStats& stats, const Matrix& Y_centered);

}  // namespace stmtl
