#include "stmtl/features.hpp"

#include "stmtl/dataio.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace stmtl {

const char* to_string(SimilarityMeasure m) {
  switch (m) {
    case SimilarityMeasure::Cosine: return "cosine";
    case SimilarityMeasure::Euclidean: return "euclidean";
    case SimilarityMeasure::Mahalanobis: return "mahalanobis";
  }
  return "?";
}

SimilarityMeasure parse_measure(const std::string& s) {
  if (s == "cosine") return SimilarityMeasure::Cosine;
  if (s == "euclidean") return SimilarityMeasure::Euclidean;
  if (s == "mahalanobis") return SimilarityMeasure::Mahalanobis;
  throw ConfigError("unknown similarity measure '" + s + "'");
}

TrendVector trend_vector(double x_bl, double x_follow, double dt_days) {
  if (dt_days <= 0.0) throw DataError("trend_vector: follow scan must be after baseline");
  if (x_bl == 0.0) throw DataError("trend_vector: zero baseline, relative change undefined");
  const double change = x_follow - x_bl;
  return {change / x_bl, change / (dt_days / kDaysPerMonth)};
}

double cosine_similarity(const TrendVector& u, const TrendVector& v) {
  const double nu = std::hypot(u.magnitude, u.velocity);
  const double nv = std::hypot(v.magnitude, v.velocity);
  if (nu < 1e-12 || nv < 1e-12) return 0.0;  // no trend carries no direction
  return (u.magnitude * v.magnitude + u.velocity * v.velocity) / (nu * nv);
}

double euclidean_distance(const TrendVector& u, const TrendVector& v) {
  return std::hypot(u.magnitude - v.magnitude, u.velocity - v.velocity);
}

double mahalanobis_distance(const TrendVector& u, const TrendVector& v,
                            const Eigen::Matrix2d& cov) {
  if (std::abs(cov(0, 1) - cov(1, 0)) > 1e-9 * (1.0 + std::abs(cov(0, 1))))
    throw NumericError("mahalanobis_distance: covariance not symmetric");
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  if (cov(0, 0) <= 0.0 || det <= 0.0)
    throw NumericError("mahalanobis_distance: covariance not positive definite");
  const double dx = u.magnitude - v.magnitude;
  const double dy = u.velocity - v.velocity;
  const double quad = (cov(1, 1) * dx * dx - 2.0 * cov(0, 1) * dx * dy + cov(0, 0) * dy * dy) / det;
  return std::sqrt(std::max(0.0, quad));
}

TrendSet compute_trends(const PairedDataset& ds) {
  TrendSet trends;
  trends.roi_names = ds.roi_names;
  const int n = ds.n();
  const int r = ds.r();
  trends.magnitude.resize(n, r);
  trends.velocity.resize(n, r);
  for (int i = 0; i < n; ++i) {
    const double dt = ds.dt_days[i];
    if (dt <= 0.0)
      throw DataError("compute_trends: subject '" + ds.subject_ids[i] +
                      "' has non-positive scan interval");
    const double months = dt / kDaysPerMonth;
    for (int j = 0; j < r; ++j) {
      const double bl = ds.baseline(i, j);
      const double fu = ds.follow(i, j);
      const double change = fu - bl;
      if (bl == 0.0) {
        // Relative change is undefined; keep the absolute-change velocity.
        trends.magnitude(i, j) = 0.0;
        trends.velocity(i, j) = change / months;
        ++trends.zero_baseline_cells;
      } else {
        trends.magnitude(i, j) = change / bl;
        trends.velocity(i, j) = change / months;
      }
    }
  }
  return trends;
}

int pair_count(int r) { return r * (r - 1) / 2; }

int pair_column(int a, int b, int r) {
  // Lexicographic enumeration of pairs (a, b), a < b.
  return a * r - a * (a + 1) / 2 + (b - a - 1);
}

DesignMatrix build_pair_features(const TrendSet& trends, SimilarityMeasure measure) {
  const int n = static_cast<int>(trends.magnitude.rows());
  const int r = static_cast<int>(trends.magnitude.cols());
  if (r < 2) throw ConfigError("build_pair_features: needs at least 2 ROIs");
  if (measure == SimilarityMeasure::Mahalanobis && n < 3)
    throw ConfigError("build_pair_features: Mahalanobis needs at least 3 subjects");

  DesignMatrix design;
  const int d = pair_count(r);
  design.values.resize(n, d);
  design.pairs.reserve(d);
  design.column_names.reserve(d);

  int col = 0;
  for (int a = 0; a < r; ++a) {
    for (int b = a + 1; b < r; ++b, ++col) {
      design.pairs.push_back({a, b, col});
      design.column_names.push_back(trends.roi_names[a] + "-" + trends.roi_names[b]);

      Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
      if (measure == SimilarityMeasure::Mahalanobis) {
        // Pool both ROIs' trend vectors across subjects (2n samples).
        const int pooled = 2 * n;
        double mean_m = (trends.magnitude.col(a).sum() + trends.magnitude.col(b).sum()) / pooled;
        double mean_v = (trends.velocity.col(a).sum() + trends.velocity.col(b).sum()) / pooled;
        double smm = 0.0, svv = 0.0, smv = 0.0;
        for (int i = 0; i < n; ++i) {
          for (int roi : {a, b}) {
            const double dm = trends.magnitude(i, roi) - mean_m;
            const double dv = trends.velocity(i, roi) - mean_v;
            smm += dm * dm;
            svv += dv * dv;
            smv += dm * dv;
          }
        }
        const double denom = pooled - 1;
        cov << smm / denom, smv / denom, smv / denom, svv / denom;
        const double ridge = 1e-6 * (cov(0, 0) + cov(1, 1)) / 2.0;
        cov(0, 0) += ridge;
        cov(1, 1) += ridge;
      }

      for (int i = 0; i < n; ++i) {
        const TrendVector u{trends.magnitude(i, a), trends.velocity(i, a)};
        const TrendVector v{trends.magnitude(i, b), trends.velocity(i, b)};
        double value = 0.0;
        switch (measure) {
          case SimilarityMeasure::Cosine: value = cosine_similarity(u, v); break;
          case SimilarityMeasure::Euclidean: value = euclidean_distance(u, v); break;
          case SimilarityMeasure::Mahalanobis: value = mahalanobis_distance(u, v, cov); break;
        }
        design.values(i, col) = value;
      }
    }
  }
  return design;
}

DesignMatrix build_original_features(const PairedDataset& ds) {
  DesignMatrix design;
  design.values = ds.baseline;
  design.column_names = ds.roi_names;
  return design;
}

ScalingStats standardize(DesignMatrix& X, TargetMatrix& Y) {
  const Eigen::Index n = X.values.rows();
  if (n < 2) throw ConfigError("standardize: needs at least 2 rows");
  if (Y.values.rows() != n) throw ConfigError("standardize: X and Y row counts differ");

  ScalingStats stats;
  const Eigen::Index d = X.values.cols();
  stats.x_mean.resize(d);
  stats.x_std.resize(d);
  stats.x_constant.assign(static_cast<std::size_t>(d), 0);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mean = X.values.col(j).mean();
    const double var = (X.values.col(j).array() - mean).square().sum() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    stats.x_mean[j] = mean;
    if (sd < 1e-12) {
      stats.x_std[j] = 1.0;
      stats.x_constant[static_cast<std::size_t>(j)] = 1;
      X.values.col(j).setZero();
    } else {
      stats.x_std[j] = sd;
      X.values.col(j) = (X.values.col(j).array() - mean) / sd;
    }
  }
  stats.y_mean.resize(Y.values.cols());
  for (Eigen::Index j = 0; j < Y.values.cols(); ++j) {
    stats.y_mean[j] = Y.values.col(j).mean();
    Y.values.col(j).array() -= stats.y_mean[j];
  }
  X.standardized = true;
  return stats;
}

Matrix apply_x_scaling(const ScalingStats& stats, const Matrix& X) {
  if (X.cols() != stats.x_mean.size()) throw ConfigError("apply_x_scaling: column count mismatch");
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (stats.x_constant[static_cast<std::size_t>(j)])
      out.col(j).setZero();
    else
      out.col(j) = (X.col(j).array() - stats.x_mean[j]) / stats.x_std[j];
  }
  return out;
}

Matrix apply_y_centering(const ScalingStats& stats, const Matrix& Y) {
  if (Y.cols() != stats.y_mean.size())
    throw ConfigError("apply_y_centering: column count mismatch");
  return Y.rowwise() - stats.y_mean.transpose();
}

Matrix invert_y_centering(const ScalingStats& stats, const Matrix& Y_centered) {
  if (Y_centered.cols() != stats.y_mean.size())
    throw ConfigError("invert_y_centering: column count mismatch");
  return Y_centered.rowwise() + stats.y_mean.transpose();
}

}  // namespace stmtl
