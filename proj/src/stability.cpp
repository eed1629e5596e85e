#include "stmtl/stability.hpp"

#include "stmtl/digest.hpp"
#include "stmtl/parallel.hpp"
#include "stmtl/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace stmtl {

using ordered_json = nlohmann::ordered_json;

const char* to_string(MtlSolver s) {
  switch (s) {
    case MtlSolver::Ridge: return "ridge";
    case MtlSolver::Lasso: return "lasso";
    case MtlSolver::TGL: return "tgl";
    case MtlSolver::CFSGL: return "cfsgl";
  }
  return "?";
}

MtlSolver parse_solver(const std::string& s) {
  if (s == "ridge") return MtlSolver::Ridge;
  if (s == "lasso") return MtlSolver::Lasso;
  if (s == "tgl") return MtlSolver::TGL;
  if (s == "cfsgl") return MtlSolver::CFSGL;
  throw ConfigError("unknown solver '" + s + "'");
}

FitResult fit_mtl(MtlSolver solver, const Matrix& X, const Matrix& Y, const PenaltyPoint& p,
                  const SolverConfig& config) {
  switch (solver) {
    case MtlSolver::Ridge: return fit_ridge(X, Y, p.theta1);
    case MtlSolver::Lasso: return fit_lasso(X, Y, p.theta1, config);
    case MtlSolver::TGL: return fit_tgl(X, Y, p.theta1, p.theta2, p.delta, config);
    case MtlSolver::CFSGL: return fit_cfsgl(X, Y, p.theta1, p.theta2, p.delta, config);
  }
  throw ConfigError("unknown solver enum value");
}

void StabilityConfig::validate() const {
  if (grid.empty()) throw ConfigError("stability config: grid must be non-empty");
  if (n_subsamples < 1) throw ConfigError("stability config: n_subsamples must be >= 1");
  if (threshold <= 0.0 || threshold >= 1.0)
    throw ConfigError("stability config: threshold must lie in (0, 1)");
  if (nonzero_eps < 0.0) throw ConfigError("stability config: nonzero_eps must be >= 0");
  if (jobs < 1) throw ConfigError("stability config: jobs must be >= 1");
  solver_config.validate();
}

std::vector<PenaltyPoint> default_grid(MtlSolver solver, int n_sparsity, int n_structure,
                                       double lo, double hi) {
  if (n_sparsity < 1 || n_structure < 1) throw ConfigError("default_grid: grid sides must be >= 1");
  std::vector<PenaltyPoint> grid;
  grid.reserve(static_cast<std::size_t>(n_sparsity) * n_structure);
  auto geo = [lo, hi](int i, int n) {
    if (n == 1) return lo;
    return lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  };
  for (int i = 0; i < n_sparsity; ++i) {
    for (int j = 0; j < n_structure; ++j) {
      PenaltyPoint p;
      const double sparsity = geo(i, n_sparsity);
      const double structure = geo(j, n_structure);
      if (solver == MtlSolver::TGL) {
        // Row-sparsity via the group penalty, smoothness via theta2.
        p.theta1 = 1e-4;
        p.theta2 = structure;
        p.delta = sparsity;
      } else {
        p.theta1 = sparsity;
        p.theta2 = structure;
        p.delta = sparsity / 2.0;
      }
      grid.push_back(p);
    }
  }
  return grid;
}

std::vector<int> subsample_indices(int n, int run, std::uint64_t seed) {
  if (n < 2) throw ConfigError("subsample_indices: n must be >= 2");
  // Domain-separated stream: subsamples depend on (n, run, seed) only, so
  // every grid point reuses the same subsample sequence.
  Rng rng = Rng::derive(seed, 0x53554253414D504CULL + static_cast<std::uint64_t>(n),
                        static_cast<std::uint64_t>(run));
  return rng.sample_without_replacement(n, n / 2);
}

std::vector<int> selection_set(const Matrix& W, int task, double nonzero_eps) {
  if (task < 0 || task >= W.cols()) throw ConfigError("selection_set: task index out of range");
  std::vector<int> set;
  for (Eigen::Index f = 0; f < W.rows(); ++f) {
    if (std::abs(W(f, task)) > nonzero_eps) set.push_back(static_cast<int>(f));
  }
  return set;
}

double selection_frequency(const std::vector<std::vector<int>>& runs, int feature, int gamma) {
  if (static_cast<int>(runs.size()) != gamma)
    throw ConfigError("selection_frequency: run count must equal gamma");
  int hits = 0;
  for (const auto& set : runs) {
    if (std::binary_search(set.begin(), set.end(), feature)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(gamma);
}

namespace {

struct CellResult {
  bool failed = false;
  bool from_checkpoint = false;
  std::vector<std::vector<int>> sets;  // per task, sorted feature indices
};

std::uint64_t stability_digest(const StabilityConfig& config, Eigen::Index n, Eigen::Index d,
                               Eigen::Index k) {
  std::string blob = std::string(to_string(config.solver)) + "|" + std::to_string(n) + "|" +
                     std::to_string(d) + "|" + std::to_string(k) + "|" +
                     std::to_string(config.n_subsamples) + "|" + std::to_string(config.seed) +
                     "|" + std::to_string(config.nonzero_eps);
  for (const auto& p : config.grid) {
    blob += "|" + std::to_string(p.theta1) + "," + std::to_string(p.theta2) + "," +
            std::to_string(p.delta);
  }
  return fnv1a64(blob);
}

std::string cell_path(const std::string& dir, int g, int i) {
  return dir + "/cell_" + std::to_string(g) + "_" + std::to_string(i) + ".json";
}

bool load_cell(const std::string& path, std::uint64_t digest, int k, CellResult& out) {
  std::ifstream in(path);
  if (!in) return false;
  ordered_json j;
  try {
    in >> j;
  } catch (...) {
    return false;  // partial write; refit the cell
  }
  if (!j.contains("config_digest") || j["config_digest"].get<std::string>() != hex_digest(digest))
    throw ConfigError("stability checkpoint '" + path + "' was written by a different config");
  out.failed = j.value("failed", false);
  out.sets.assign(static_cast<std::size_t>(k), {});
  if (!out.failed) {
    const auto& sets = j.at("sets");
    if (static_cast<int>(sets.size()) != k) return false;
    for (int t = 0; t < k; ++t) out.sets[static_cast<std::size_t>(t)] = sets[t].get<std::vector<int>>();
  }
  out.from_checkpoint = true;
  return true;
}

void store_cell(const std::string& path, std::uint64_t digest, const CellResult& cell) {
  ordered_json j;
  j["config_digest"] = hex_digest(digest);
  j["failed"] = cell.failed;
  j["sets"] = cell.sets;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << j.dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

StabilityReport run_stability(const Matrix& X, const Matrix& Y, const StabilityConfig& config,
                              const std::vector<std::string>& column_names,
                              const std::string& checkpoint_dir) {
  config.validate();
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  const int k = static_cast<int>(Y.cols());
  if (Y.rows() != n) throw ConfigError("run_stability: X and Y row counts differ");
  if (!column_names.empty() && static_cast<int>(column_names.size()) != d)
    throw ConfigError("run_stability: column name count must equal feature count");

  const int n_grid = static_cast<int>(config.grid.size());
  const int gamma = config.n_subsamples;
  const std::uint64_t digest = stability_digest(config, n, d, k);
  if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);

  // The same gamma subsamples are reused across the whole grid.
  std::vector<std::vector<int>> subsamples(static_cast<std::size_t>(gamma));
  for (int i = 0; i < gamma; ++i) subsamples[static_cast<std::size_t>(i)] = subsample_indices(n, i, config.seed);

  const int n_cells = n_grid * gamma;
  std::vector<CellResult> cells(static_cast<std::size_t>(n_cells));

  parallel_for(n_cells, config.jobs, [&](int cell_idx) {
    const int g = cell_idx / gamma;
    const int i = cell_idx % gamma;
    CellResult& cell = cells[static_cast<std::size_t>(cell_idx)];
    if (!checkpoint_dir.empty() &&
        load_cell(cell_path(checkpoint_dir, g, i), digest, k, cell))
      return;

    const auto& rows = subsamples[static_cast<std::size_t>(i)];
    Matrix Xs(rows.size(), d);
    Matrix Ys(rows.size(), k);
    for (std::size_t ri = 0; ri < rows.size(); ++ri) {
      Xs.row(static_cast<Eigen::Index>(ri)) = X.row(rows[ri]);
      Ys.row(static_cast<Eigen::Index>(ri)) = Y.row(rows[ri]);
    }
    cell.sets.assign(static_cast<std::size_t>(k), {});
    try {
      const FitResult fit = fit_mtl(config.solver, Xs, Ys, config.grid[static_cast<std::size_t>(g)],
                                    config.solver_config);
      for (int t = 0; t < k; ++t)
        cell.sets[static_cast<std::size_t>(t)] = selection_set(fit.W, t, config.nonzero_eps);
    } catch (const NumericError&) {
      // A diverged cell degrades to an empty selection; the sweep goes on.
      cell.failed = true;
      cell.sets.assign(static_cast<std::size_t>(k), {});
    }
    if (!checkpoint_dir.empty()) store_cell(cell_path(checkpoint_dir, g, i), digest, cell);
  });

  StabilityReport report;
  report.n_features = d;
  report.n_tasks = k;
  report.n_grid = n_grid;
  report.n_subsamples = gamma;
  report.threshold = config.threshold;
  report.seed = config.seed;
  report.frequencies.assign(static_cast<std::size_t>(d) * k * n_grid, 0.0);

  std::vector<long> counts(static_cast<std::size_t>(d) * k * n_grid, 0);
  for (int g = 0; g < n_grid; ++g) {
    for (int i = 0; i < gamma; ++i) {
      const CellResult& cell = cells[static_cast<std::size_t>(g * gamma + i)];
      if (cell.failed) ++report.failed_fits;
      if (!cell.from_checkpoint) ++report.executed_fits;
      for (int t = 0; t < k; ++t) {
        for (int f : cell.sets[static_cast<std::size_t>(t)]) {
          ++counts[(static_cast<std::size_t>(f) * k + t) * n_grid + g];
        }
      }
    }
  }
  for (std::size_t idx = 0; idx < counts.size(); ++idx)
    report.frequencies[idx] = static_cast<double>(counts[idx]) / static_cast<double>(gamma);

  report.scores = Matrix::Zero(d, k);
  for (int f = 0; f < d; ++f) {
    for (int t = 0; t < k; ++t) {
      double best = 0.0;
      for (int g = 0; g < n_grid; ++g) best = std::max(best, report.frequency(f, t, g));
      report.scores(f, t) = best;
    }
  }

  report.stable_sets.assign(static_cast<std::size_t>(k), {});
  for (int t = 0; t < k; ++t) {
    for (int f = 0; f < d; ++f) {
      if (report.scores(f, t) >= config.threshold) {
        StableFeature sf;
        sf.feature = f;
        sf.name = column_names.empty() ? "col" + std::to_string(f) : column_names[static_cast<std::size_t>(f)];
        sf.score = report.scores(f, t);
        report.stable_sets[static_cast<std::size_t>(t)].push_back(std::move(sf));
      }
    }
    auto& set = report.stable_sets[static_cast<std::size_t>(t)];
    std::sort(set.begin(), set.end(), [](const StableFeature& a, const StableFeature& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.feature < b.feature;
    });
  }
  return report;
}

std::vector<int> screen_features(const Matrix& X, const Matrix& Y, const StabilityConfig& config,
                                 int target_count) {
  const int d = static_cast<int>(X.cols());
  if (target_count > d)
    throw ConfigError("screen_features: target_count exceeds feature count");
  if (target_count < 0) throw ConfigError("screen_features: target_count must be >= 0");
  const StabilityReport report = run_stability(X, Y, config);

  struct Ranked {
    int feature;
    double score;      // max over tasks and grid
    double mean_freq;  // mean over tasks and grid
  };
  std::vector<Ranked> ranked(static_cast<std::size_t>(d));
  for (int f = 0; f < d; ++f) {
    double best = 0.0;
    double mean = 0.0;
    for (int t = 0; t < report.n_tasks; ++t) {
      best = std::max(best, report.scores(f, t));
      for (int g = 0; g < report.n_grid; ++g) mean += report.frequency(f, t, g);
    }
    mean /= static_cast<double>(report.n_tasks * report.n_grid);
    ranked[static_cast<std::size_t>(f)] = {f, best, mean};
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.mean_freq != b.mean_freq) return a.mean_freq > b.mean_freq;
    return a.feature < b.feature;
  });
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(target_count));
  for (int i = 0; i < target_count; ++i) out.push_back(ranked[static_cast<std::size_t>(i)].feature);
  return out;
}

}  // namespace stmtl
