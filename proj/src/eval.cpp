#include "stmtl/eval.hpp"

#include "stmtl/parallel.hpp"
#include "stmtl/rng.hpp"

#include <algorithm>
#include <cmath>

namespace stmtl {

namespace {

double population_variance(const Eigen::Ref<const Vector>& v) {
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size());
}

double pearson(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  const double ma = a.mean();
  const double mb = b.mean();
  const Eigen::ArrayXd da = a.array() - ma;
  const Eigen::ArrayXd db = b.array() - mb;
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  if (denom <= 0.0) throw NumericError("pearson: constant column, correlation undefined");
  return (da * db).sum() / denom;
}

}  // namespace

double nmse(const Matrix& Y, const Matrix& Yhat) {
  if (Y.rows() != Yhat.rows() || Y.cols() != Yhat.cols())
    throw ConfigError("nmse: shape mismatch");
  const Eigen::Index n = Y.rows();
  const Eigen::Index k = Y.cols();
  if (n < 1 || k < 1) throw ConfigError("nmse: empty input");
  double numerator = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double var = population_variance(Y.col(j));
    if (var <= 0.0) throw NumericError("nmse: constant target column, normalization undefined");
    numerator += (Y.col(j) - Yhat.col(j)).squaredNorm() / var;
  }
  return numerator / static_cast<double>(n * k);
}

double rmse_per_task(const Vector& y, const Vector& yhat) {
  if (y.size() != yhat.size()) throw ConfigError("rmse_per_task: length mismatch");
  if (y.size() < 1) throw ConfigError("rmse_per_task: empty input");
  return std::sqrt((y - yhat).squaredNorm() / static_cast<double>(y.size()));
}

double weighted_r(const Matrix& Y, const Matrix& Yhat) {
  if (Y.rows() != Yhat.rows() || Y.cols() != Yhat.cols())
    throw ConfigError("weighted_r: shape mismatch");
  double total = 0.0;
  for (Eigen::Index j = 0; j < Y.cols(); ++j) total += pearson(Y.col(j), Yhat.col(j));
  return total / static_cast<double>(Y.cols());
}

const char* to_string(FeatureMode m) {
  switch (m) {
    case FeatureMode::Original: return "original";
    case FeatureMode::Cosine: return "cosine";
    case FeatureMode::Euclidean: return "euclidean";
    case FeatureMode::Mahalanobis: return "mahalanobis";
  }
  return "?";
}

FeatureMode parse_feature_mode(const std::string& s) {
  if (s == "original") return FeatureMode::Original;
  if (s == "cosine") return FeatureMode::Cosine;
  if (s == "euclidean") return FeatureMode::Euclidean;
  if (s == "mahalanobis") return FeatureMode::Mahalanobis;
  throw ConfigError("unknown feature mode '" + s + "'");
}

void ExperimentConfig::validate(int n) const {
  if (n_folds < 2) throw ConfigError("experiment config: n_folds must be >= 2");
  if (n_folds > n) throw ConfigError("experiment config: n_folds exceeds sample count");
  if (n_repeats < 1) throw ConfigError("experiment config: n_repeats must be >= 1");
  if (jobs < 1) throw ConfigError("experiment config: jobs must be >= 1");
  solver_config.validate();
  if (n / n_folds < 2) throw ConfigError("experiment config: folds would have fewer than 2 samples");
  if (screening && screening->target_count < 1)
    throw ConfigError("experiment config: screening target_count must be >= 1");
}

std::vector<int> assign_folds(int n, int n_folds, int repeat, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, 0x464f4c4453ULL, static_cast<std::uint64_t>(repeat));
  const std::vector<int> perm = rng.permutation(n);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) fold[static_cast<std::size_t>(perm[i])] = i % n_folds;
  return fold;
}

FoldData prepare_fold(const Matrix& X, const Matrix& Y, const std::vector<int>& train_rows,
                      const std::vector<int>& test_rows) {
  FoldData fold;
  Matrix x_train(train_rows.size(), X.cols());
  Matrix y_train(train_rows.size(), Y.cols());
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    x_train.row(static_cast<Eigen::Index>(i)) = X.row(train_rows[i]);
    y_train.row(static_cast<Eigen::Index>(i)) = Y.row(train_rows[i]);
  }
  Matrix x_test(test_rows.size(), X.cols());
  for (std::size_t i = 0; i < test_rows.size(); ++i)
    x_test.row(static_cast<Eigen::Index>(i)) = X.row(test_rows[i]);

  DesignMatrix dx{std::move(x_train), {}, {}, false};
  TargetMatrix dy{std::move(y_train), {}};
  fold.stats = standardize(dx, dy);
  fold.x_train = std::move(dx.values);
  fold.y_train = std::move(dy.values);
  fold.x_test = apply_x_scaling(fold.stats, x_test);
  return fold;
}

namespace {

struct RepeatMetrics {
  double nmse = 0.0;
  double wr = 0.0;
  std::vector<double> rmse;
};

std::vector<int> keep_columns(const std::vector<int>& cols, Matrix& m) {
  Matrix reduced(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) reduced.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  m = std::move(reduced);
  return cols;
}

PenaltyPoint select_penalty(const Matrix& x_train, const Matrix& y_train,
                            const ExperimentConfig& config, int repeat, int fold_id) {
  if (config.selection_grid.empty()) return config.penalties;
  // Inner holdout: last 20% of a deterministic permutation validates.
  const int n = static_cast<int>(x_train.rows());
  Rng rng = Rng::derive(config.seed, 0x494e4e4552ULL, static_cast<std::uint64_t>(repeat),
                        static_cast<std::uint64_t>(fold_id));
  const std::vector<int> perm = rng.permutation(n);
  const int n_val = std::max(1, n / 5);
  std::vector<int> inner_train(perm.begin(), perm.end() - n_val);
  std::vector<int> inner_val(perm.end() - n_val, perm.end());
  std::sort(inner_train.begin(), inner_train.end());
  std::sort(inner_val.begin(), inner_val.end());

  Matrix xt(inner_train.size(), x_train.cols()), yt(inner_train.size(), y_train.cols());
  for (std::size_t i = 0; i < inner_train.size(); ++i) {
    xt.row(static_cast<Eigen::Index>(i)) = x_train.row(inner_train[i]);
    yt.row(static_cast<Eigen::Index>(i)) = y_train.row(inner_train[i]);
  }
  Matrix xv(inner_val.size(), x_train.cols()), yv(inner_val.size(), y_train.cols());
  for (std::size_t i = 0; i < inner_val.size(); ++i) {
    xv.row(static_cast<Eigen::Index>(i)) = x_train.row(inner_val[i]);
    yv.row(static_cast<Eigen::Index>(i)) = y_train.row(inner_val[i]);
  }

  PenaltyPoint best = config.selection_grid.front();
  double best_err = std::numeric_limits<double>::infinity();
  for (const auto& p : config.selection_grid) {
    try {
      const FitResult fit = fit_mtl(config.solver, xt, yt, p, config.solver_config);
      const double err = (xv * fit.W - yv).squaredNorm();
      if (err < best_err) {
        best_err = err;
        best = p;
      }
    } catch (const NumericError&) {
      continue;  // an unusable grid point never wins
    }
  }
  return best;
}

RepeatMetrics run_repeat(const Matrix& X, const Matrix& Y, const ExperimentConfig& config,
                         int repeat) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(Y.cols());
  const std::vector<int> fold_of = assign_folds(n, config.n_folds, repeat, config.seed);

  // Global (paper-style) screening fits once on every row; the default
  // per-fold mode refits inside each training fold.
  std::vector<int> global_columns;
  if (config.screening && config.screening->global) {
    DesignMatrix dx{X, {}, {}, false};
    TargetMatrix dy{Y, {}};
    standardize(dx, dy);
    global_columns = screen_features(dx.values, dy.values, config.screening->stability,
                                     config.screening->target_count);
    std::sort(global_columns.begin(), global_columns.end());
  }

  Matrix yhat = Matrix::Zero(n, k);
  for (int fold_id = 0; fold_id < config.n_folds; ++fold_id) {
    std::vector<int> train_rows, test_rows;
    for (int i = 0; i < n; ++i) {
      if (fold_of[static_cast<std::size_t>(i)] == fold_id) test_rows.push_back(i);
      else train_rows.push_back(i);
    }
    if (test_rows.empty()) continue;
    FoldData fold = prepare_fold(X, Y, train_rows, test_rows);

    if (config.screening) {
      std::vector<int> cols;
      if (config.screening->global) {
        cols = global_columns;
      } else {
        cols = screen_features(fold.x_train, fold.y_train, config.screening->stability,
                               config.screening->target_count);
        std::sort(cols.begin(), cols.end());
      }
      keep_columns(cols, fold.x_train);
      keep_columns(cols, fold.x_test);
    }

    const PenaltyPoint penalties = select_penalty(fold.x_train, fold.y_train, config, repeat, fold_id);
    const FitResult fit =
        fit_mtl(config.solver, fold.x_train, fold.y_train, penalties, config.solver_config);
    const Matrix pred = invert_y_centering(fold.stats, fold.x_test * fit.W);
    for (std::size_t i = 0; i < test_rows.size(); ++i)
      yhat.row(test_rows[i]) = pred.row(static_cast<Eigen::Index>(i));
  }

  RepeatMetrics metrics;
  metrics.nmse = nmse(Y, yhat);
  metrics.wr = weighted_r(Y, yhat);
  metrics.rmse.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    metrics.rmse[static_cast<std::size_t>(j)] = rmse_per_task(Y.col(j), yhat.col(j));
  return metrics;
}

MetricStat stat_of(const std::vector<double>& values) {
  MetricStat stat;
  const double n = static_cast<double>(values.size());
  for (double v : values) stat.mean += v;
  stat.mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - stat.mean) * (v - stat.mean);
  stat.stddev = std::sqrt(ss / n);
  return stat;
}

}  // namespace

MetricTable run_experiment(const Matrix& X, const Matrix& Y,
                           const std::vector<std::string>& task_names,
                           const ExperimentConfig& config) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(Y.cols());
  if (Y.rows() != n) throw ConfigError("run_experiment: X and Y row counts differ");
  if (!task_names.empty() && static_cast<int>(task_names.size()) != k)
    throw ConfigError("run_experiment: task name count mismatch");
  config.validate(n);

  std::vector<RepeatMetrics> repeats(static_cast<std::size_t>(config.n_repeats));
  parallel_for(config.n_repeats, config.jobs,
               [&](int rep) { repeats[static_cast<std::size_t>(rep)] = run_repeat(X, Y, config, rep); });

  MetricTable table;
  table.n_repeats = config.n_repeats;
  std::vector<double> acc(repeats.size());
  for (std::size_t i = 0; i < repeats.size(); ++i) acc[i] = repeats[i].nmse;
  table.nmse = stat_of(acc);
  for (std::size_t i = 0; i < repeats.size(); ++i) acc[i] = repeats[i].wr;
  table.weighted_r = stat_of(acc);
  for (int j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < repeats.size(); ++i) acc[i] = repeats[i].rmse[static_cast<std::size_t>(j)];
    const std::string label =
        task_names.empty() ? "task" + std::to_string(j) : task_names[static_cast<std::size_t>(j)];
    table.per_task_rmse.emplace_back(label, stat_of(acc));
  }
  return table;
}

DesignMatrix build_features(const PairedDataset& dataset, FeatureMode mode) {
  if (mode == FeatureMode::Original) return build_original_features(dataset);
  const TrendSet trends = compute_trends(dataset);
  switch (mode) {
    case FeatureMode::Cosine: return build_pair_features(trends, SimilarityMeasure::Cosine);
    case FeatureMode::Euclidean: return build_pair_features(trends, SimilarityMeasure::Euclidean);
    case FeatureMode::Mahalanobis:
      return build_pair_features(trends, SimilarityMeasure::Mahalanobis);
    default: throw ConfigError("build_features: unhandled mode");
  }
}

std::map<std::string, MetricTable> compare_measures(const PairedDataset& dataset,
                                                    const std::vector<FeatureMode>& modes,
                                                    const ExperimentConfig& config) {
  std::map<std::string, MetricTable> tables;
  for (const FeatureMode mode : modes) {
    const DesignMatrix design = build_features(dataset, mode);
    tables[to_string(mode)] =
        run_experiment(design.values, dataset.targets, dataset.target_names, config);
  }
  return tables;
}

}  // namespace stmtl
