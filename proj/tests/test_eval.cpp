#include "stmtl/eval.hpp"

#include "stmtl/rng.hpp"
#include "stmtl/synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace stmtl;

TEST_CASE("nmse identities") {
  Matrix y(3, 2);
  y << 1, 4, 2, 5, 3, 9;
  CHECK(nmse(y, y) == 0.0);

  Matrix y1(2, 1), yhat1(2, 1);
  y1 << 0, 2;
  yhat1 << 1, 1;
  CHECK(nmse(y1, yhat1) == doctest::Approx(1.0).epsilon(1e-12));

  // Joint rescaling leaves the normalized error unchanged.
  Matrix yhat(3, 2);
  yhat << 1.5, 3.0, 2.5, 6.0, 2.0, 8.0;
  const double base = nmse(y, yhat);
  CHECK(nmse((10.0 * y).eval(), (10.0 * yhat).eval()) == doctest::Approx(base).epsilon(1e-12));

  Matrix constant(3, 1);
  constant.setOnes();
  CHECK_THROWS_AS(nmse(constant, constant), NumericError);
  Matrix wrong(2, 2);
  CHECK_THROWS_AS(nmse(y, wrong), ConfigError);
}

TEST_CASE("rmse identities") {
  Vector y(3), yhat(3);
  y << 1, 2, 3;
  CHECK(rmse_per_task(y, y) == 0.0);
  yhat << 2, 3, 4;
  CHECK(rmse_per_task(y, yhat) == doctest::Approx(1.0));
  Vector a(2), b(2);
  a << 0, 0;
  b << 3, 4;
  CHECK(rmse_per_task(a, b) == doctest::Approx(std::sqrt(12.5)));
  // Zero iff equal.
  CHECK(rmse_per_task(a, a) == 0.0);
  b << 0, 1e-9;
  CHECK(rmse_per_task(a, b) > 0.0);
}

TEST_CASE("weighted correlation identities and affine invariance") {
  Rng rng(21);
  Matrix y(20, 3);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 3; ++j) y(i, j) = rng.normal();
  CHECK(weighted_r(y, y) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(weighted_r(y, (-y).eval()) == doctest::Approx(-1.0).epsilon(1e-12));

  for (int trial = 0; trial < 50; ++trial) {
    Matrix yhat = y;
    for (int j = 0; j < 3; ++j) {
      const double a = 0.1 + 3.0 * rng.uniform01();
      const double b = 5.0 * rng.normal();
      yhat.col(j) = a * y.col(j).array() + b;
    }
    CHECK(weighted_r(y, yhat) == doctest::Approx(1.0).epsilon(1e-10));
  }

  Matrix constant = Matrix::Ones(5, 1);
  Matrix varying(5, 1);
  varying << 1, 2, 3, 4, 5;
  CHECK_THROWS_AS(weighted_r(varying, constant), NumericError);
}

TEST_CASE("fold assignment is deterministic, balanced and seed-paired") {
  const auto folds = assign_folds(103, 5, 3, 77);
  CHECK(folds == assign_folds(103, 5, 3, 77));
  CHECK(folds != assign_folds(103, 5, 4, 77));
  CHECK(folds != assign_folds(103, 5, 3, 78));
  std::vector<int> counts(5, 0);
  for (int f : folds) {
    REQUIRE(f >= 0);
    REQUIRE(f < 5);
    ++counts[static_cast<std::size_t>(f)];
  }
  for (int c : counts) CHECK(std::abs(c - 103 / 5) <= 1);
}

TEST_CASE("fold preparation never touches held-out rows") {
  Rng rng(71);
  Matrix x(30, 4), y(30, 2);
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.normal();
    for (int j = 0; j < 2; ++j) y(i, j) = rng.normal();
  }
  std::vector<int> train_rows, test_rows;
  for (int i = 0; i < 30; ++i) (i % 5 == 0 ? test_rows : train_rows).push_back(i);

  const FoldData clean = prepare_fold(x, y, train_rows, test_rows);

  // Poison the held-out rows with extreme values.
  Matrix x_poisoned = x;
  Matrix y_poisoned = y;
  for (int i : test_rows) {
    x_poisoned.row(i).setConstant(1e9);
    y_poisoned.row(i).setConstant(-1e9);
  }
  const FoldData poisoned = prepare_fold(x_poisoned, y_poisoned, train_rows, test_rows);
  CHECK((clean.stats.x_mean - poisoned.stats.x_mean).norm() == 0.0);
  CHECK((clean.stats.x_std - poisoned.stats.x_std).norm() == 0.0);
  CHECK((clean.stats.y_mean - poisoned.stats.y_mean).norm() == 0.0);
  CHECK((clean.x_train - poisoned.x_train).norm() == 0.0);
  CHECK((clean.y_train - poisoned.y_train).norm() == 0.0);
}

namespace {

ExperimentConfig quick_config(MtlSolver solver, PenaltyPoint penalties, int repeats,
                              std::uint64_t seed) {
  ExperimentConfig config;
  config.n_folds = 5;
  config.n_repeats = repeats;
  config.seed = seed;
  config.solver = solver;
  config.penalties = penalties;
  config.solver_config.tol = 1e-9;
  config.solver_config.max_iter = 5000;
  return config;
}

}  // namespace

TEST_CASE("run_experiment on a noiseless planted model") {
  const RegressionInstance inst = generate_regression_instance(150, 12, 3, 4, 1e9, true, 5);
  const MetricTable table =
      run_experiment(inst.X, inst.Y, {}, quick_config(MtlSolver::Ridge, {1e-8, 0, 0}, 3, 9));
  CHECK(table.nmse.mean < 0.05);
  CHECK(table.weighted_r.mean > 0.99);
  CHECK(table.per_task_rmse.size() == 3);
  for (const auto& [label, stat] : table.per_task_rmse) CHECK(stat.mean < 0.5);
}

TEST_CASE("single repeat has zero std") {
  const RegressionInstance inst = generate_regression_instance(60, 8, 2, 3, 10.0, true, 6);
  const MetricTable table =
      run_experiment(inst.X, inst.Y, {}, quick_config(MtlSolver::Ridge, {0.5, 0, 0}, 1, 4));
  CHECK(table.nmse.stddev == 0.0);
  CHECK(table.weighted_r.stddev == 0.0);
  for (const auto& [label, stat] : table.per_task_rmse) CHECK(stat.stddev == 0.0);
}

TEST_CASE("permuted targets score near zero correlation") {
  const RegressionInstance inst = generate_regression_instance(120, 10, 2, 3, 50.0, true, 12);
  // Shuffle target rows against the features.
  Rng rng(13);
  const auto perm = rng.permutation(120);
  Matrix y_null(120, 2);
  for (int i = 0; i < 120; ++i) y_null.row(i) = inst.Y.row(perm[static_cast<std::size_t>(i)]);
  const MetricTable table =
      run_experiment(inst.X, y_null, {}, quick_config(MtlSolver::Ridge, {1.0, 0, 0}, 30, 3));
  CHECK(std::abs(table.weighted_r.mean) < 0.15);
  CHECK(table.nmse.mean > 0.8);
}

TEST_CASE("experiment tables are deterministic and folds pair across modes") {
  const RegressionInstance inst = generate_regression_instance(80, 6, 2, 2, 20.0, true, 21);
  const ExperimentConfig config = quick_config(MtlSolver::TGL, {0.1, 0.1, 0.05}, 4, 77);
  const MetricTable a = run_experiment(inst.X, inst.Y, {}, config);
  const MetricTable b = run_experiment(inst.X, inst.Y, {}, config);
  CHECK(a.nmse.mean == b.nmse.mean);
  CHECK(a.nmse.stddev == b.nmse.stddev);
  CHECK(a.weighted_r.mean == b.weighted_r.mean);
  for (std::size_t j = 0; j < a.per_task_rmse.size(); ++j) {
    CHECK(a.per_task_rmse[j].second.mean == b.per_task_rmse[j].second.mean);
  }

  ExperimentConfig parallel = config;
  parallel.jobs = 3;
  const MetricTable c = run_experiment(inst.X, inst.Y, {}, parallel);
  CHECK(a.nmse.mean == c.nmse.mean);
  CHECK(a.weighted_r.stddev == c.weighted_r.stddev);
}

TEST_CASE("compare_measures shares folds and prefers planted cosine signal") {
  SynthConfig synth;
  synth.n_subjects = 90;
  synth.n_rois = 8;
  synth.k_tasks = 2;
  synth.support_size = 5;
  synth.noise_sigma = 0.05;
  synth.seed = 314;
  const auto [cohort, truth] = generate_cohort(synth);
  const PairedDataset ds =
      assemble_longitudinal(cohort, make_span(VisitCode::M06), synth_targets(synth));

  const ExperimentConfig config = quick_config(MtlSolver::Ridge, {1.0, 0, 0}, 5, 99);
  const auto tables = compare_measures(
      ds, {FeatureMode::Original, FeatureMode::Cosine}, config);
  REQUIRE(tables.count("original") == 1);
  REQUIRE(tables.count("cosine") == 1);
  CHECK(tables.at("cosine").nmse.mean < tables.at("original").nmse.mean);
  CHECK(tables.at("cosine").n_repeats == tables.at("original").n_repeats);

  // Identical features under two labels give identical tables.
  const DesignMatrix cosine_design = build_features(ds, FeatureMode::Cosine);
  const MetricTable t1 = run_experiment(cosine_design.values, ds.targets, ds.target_names, config);
  const MetricTable t2 = run_experiment(cosine_design.values, ds.targets, ds.target_names, config);
  CHECK(t1.nmse.mean == t2.nmse.mean);
  CHECK(t1.weighted_r.mean == t2.weighted_r.mean);
}

TEST_CASE("inner grid selection picks a usable penalty") {
  const RegressionInstance inst = generate_regression_instance(100, 15, 2, 3, 50.0, true, 8);
  ExperimentConfig config = quick_config(MtlSolver::Lasso, {0, 0, 0}, 2, 5);
  config.selection_grid = {{200.0, 0, 0}, {0.5, 0, 0}, {5.0, 0, 0}};
  const MetricTable table = run_experiment(inst.X, inst.Y, {}, config);
  // Full-shrinkage lambda=200 would leave nMSE near 1; selection must avoid it.
  CHECK(table.nmse.mean < 0.5);
}

TEST_CASE("screening inside folds keeps planted features and improves fit") {
  const RegressionInstance inst = generate_regression_instance(90, 40, 2, 4, 100.0, true, 55);
  ExperimentConfig config = quick_config(MtlSolver::Ridge, {0.5, 0, 0}, 2, 31);
  ScreeningConfig screening;
  screening.target_count = 8;
  screening.stability.solver = MtlSolver::TGL;
  screening.stability.grid = {{0.0, 0.0, 2.0}, {0.0, 0.0, 6.0}};
  screening.stability.n_subsamples = 10;
  screening.stability.threshold = 0.6;
  screening.stability.seed = 7;
  screening.stability.solver_config.tol = 1e-7;
  config.screening = screening;
  const MetricTable table = run_experiment(inst.X, inst.Y, {}, config);
  CHECK(table.nmse.mean < 0.25);

  SUBCASE("global screening mode also runs") {
    config.screening->global = true;
    const MetricTable global_table = run_experiment(inst.X, inst.Y, {}, config);
    CHECK(global_table.nmse.mean < 0.25);
  }
}
