#include "stmtl/synth.hpp"

#include "stmtl/features.hpp"
#include "stmtl/rng.hpp"

#include <cmath>

namespace stmtl {

void SynthConfig::validate() const {
  if (n_subjects < 4) throw ConfigError("synth config: n_subjects must be >= 4");
  if (n_rois < 2) throw ConfigError("synth config: n_rois must be >= 2");
  if (k_tasks < 1 || k_tasks > 5)
    throw ConfigError("synth config: k_tasks must be in 1..5 (one visit code per task)");
  if (noise_sigma < 0.0) throw ConfigError("synth config: noise_sigma must be >= 0");
  if (trend_noise <= 0.0) throw ConfigError("synth config: trend_noise must be > 0");
  const int d = n_rois * (n_rois - 1) / 2;
  if (support_pairs.empty() && (support_size < 0 || support_size > d))
    throw ConfigError("synth config: support_size exceeds pair dimension");
  for (const auto& [a, b] : support_pairs) {
    if (a < 0 || b < 0 || a >= n_rois || b >= n_rois || a >= b)
      throw ConfigError("synth config: support pair indices must satisfy 0 <= a < b < n_rois");
  }
}

std::vector<TargetSpec> synth_targets(const SynthConfig& config) {
  static constexpr VisitCode kCodes[] = {VisitCode::BL, VisitCode::M06, VisitCode::M12,
                                         VisitCode::M24, VisitCode::M36};
  std::vector<TargetSpec> targets;
  for (int j = 0; j < config.k_tasks; ++j) targets.push_back({"score", kCodes[j]});
  return targets;
}

namespace {

std::string roi_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "ROI%03d", i + 1);
  return buf;
}

// Random-walk rows: adjacent task weights stay close, matching the
// temporal-smoothness prior of the structured solvers.
Matrix planted_weights(const std::vector<int>& support, int d, int k, Rng& rng, bool smooth) {
  Matrix w = Matrix::Zero(d, k);
  for (int f : support) {
    double level = rng.normal();
    if (level >= 0.0) level += 1.0;  // keep weights away from zero
    else level -= 1.0;
    for (int j = 0; j < k; ++j) {
      w(f, j) = level;
      if (smooth) level += 0.15 * rng.normal();
      else level = rng.normal() + (level >= 0.0 ? 1.0 : -1.0);
    }
  }
  return w;
}

}  // namespace

std::pair<Cohort, GroundTruth> generate_cohort(const SynthConfig& config) {
  config.validate();
  const int n = config.n_subjects;
  const int r = config.n_rois;
  const int k = config.k_tasks;
  const int d = r * (r - 1) / 2;

  Rng rng = Rng::derive(config.seed, 0x436f686f7274ULL);

  // Per-ROI scale and systematic drift.
  std::vector<double> base(static_cast<std::size_t>(r)), drift(static_cast<std::size_t>(r));
  for (int a = 0; a < r; ++a) {
    base[static_cast<std::size_t>(a)] = 1000.0 * (1.0 + rng.uniform01());
    drift[static_cast<std::size_t>(a)] = rng.uniform(config.drift_min, config.drift_max);
  }

  PairedDataset scans;  // staging for the trend computation
  scans.baseline.resize(n, r);
  scans.follow.resize(n, r);
  scans.dt_days.resize(n);
  std::vector<int> bl_date(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    scans.subject_ids.push_back("");
    bl_date[static_cast<std::size_t>(i)] =
        parse_iso_date("2005-01-01") + static_cast<int>(rng.uniform_below(365));
    scans.dt_days[i] = 160.0 + static_cast<double>(rng.uniform_below(41));  // 160..200 days
    for (int a = 0; a < r; ++a) {
      const double bl = base[static_cast<std::size_t>(a)] * std::exp(0.1 * rng.normal());
      const double rel_change = drift[static_cast<std::size_t>(a)] + config.trend_noise * rng.normal();
      scans.baseline(i, a) = bl;
      scans.follow(i, a) = bl * (1.0 + rel_change);
    }
  }
  for (int a = 0; a < r; ++a) scans.roi_names.push_back(roi_name(a));

  const TrendSet trends = compute_trends(scans);
  const DesignMatrix pair_design = build_pair_features(trends, SimilarityMeasure::Cosine);

  GroundTruth truth;
  if (!config.support_pairs.empty()) {
    for (const auto& [a, b] : config.support_pairs) truth.support.push_back(pair_column(a, b, r));
  } else {
    Rng support_rng = Rng::derive(config.seed, 0x537570706f7274ULL);
    truth.support = support_rng.sample_without_replacement(d, config.support_size);
  }
  std::sort(truth.support.begin(), truth.support.end());
  for (int f : truth.support)
    truth.support_names.push_back(pair_design.column_names[static_cast<std::size_t>(f)]);

  Rng w_rng = Rng::derive(config.seed, 0x57747275ULL);
  truth.W_true = planted_weights(truth.support, d, k, w_rng, /*smooth=*/true);
  truth.pair_features = pair_design.values;

  // Targets are linear in the *pair-similarity* space, shifted into a
  // plausible score range; noise is additive per cell.
  Matrix y = pair_design.values * truth.W_true;
  Rng noise_rng = Rng::derive(config.seed, 0x4e6f697365ULL);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) y(i, j) += 20.0 + config.noise_sigma * noise_rng.normal();

  const std::vector<TargetSpec> targets = synth_targets(config);
  Cohort cohort;
  for (int a = 0; a < r; ++a) cohort.roi_names.push_back(roi_name(a));
  cohort.score_names.push_back("score");

  for (int i = 0; i < n; ++i) {
    SubjectRecord subject;
    char id[16];
    std::snprintf(id, sizeof(id), "S%04d", i + 1);
    subject.subject_id = id;
    subject.dx = (i % 4 == 0) ? DxGroup::AD : (i % 2 == 0 ? DxGroup::MCI : DxGroup::NL);

    // One visit per distinct code used by the scans and targets.
    std::map<VisitCode, Visit> visits;
    auto& bl = visits[VisitCode::BL];
    bl.code = VisitCode::BL;
    bl.scan_date_days = bl_date[static_cast<std::size_t>(i)];
    bl.roi_values = scans.baseline.row(i).transpose();
    auto& fu = visits[VisitCode::M06];
    fu.code = VisitCode::M06;
    fu.scan_date_days = bl.scan_date_days + static_cast<int>(scans.dt_days[i]);
    fu.roi_values = scans.follow.row(i).transpose();

    for (int j = 0; j < k; ++j) {
      const VisitCode code = targets[static_cast<std::size_t>(j)].visit;
      auto it = visits.find(code);
      if (it == visits.end()) {
        Visit v;
        v.code = code;
        // Score-only visits sit at the nominal month offset.
        const int months = (code == VisitCode::M12) ? 12 : (code == VisitCode::M24 ? 24 : 36);
        v.scan_date_days = bl.scan_date_days + static_cast<int>(months * kDaysPerMonth);
        v.roi_values = Vector::Constant(r, missing_value());
        it = visits.emplace(code, std::move(v)).first;
      }
      it->second.scores["score"] = y(i, j);
    }
    for (auto& [code, visit] : visits) subject.visits.push_back(std::move(visit));
    std::sort(subject.visits.begin(), subject.visits.end(),
              [](const Visit& a, const Visit& b) { return a.scan_date_days < b.scan_date_days; });
    cohort.subjects.push_back(std::move(subject));
  }
  return {std::move(cohort), std::move(truth)};
}

RegressionInstance generate_regression_instance(int n, int d, int k, int support_size, double snr,
                                                bool smooth, std::uint64_t seed) {
  if (support_size > d) throw ConfigError("generate_regression_instance: support_size > d");
  if (n < 1 || d < 1 || k < 1) throw ConfigError("generate_regression_instance: bad dimensions");
  if (snr <= 0.0) throw ConfigError("generate_regression_instance: snr must be positive");

  RegressionInstance inst;
  Rng rng = Rng::derive(seed, 0x496e7374ULL);
  inst.X.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) inst.X(i, j) = rng.normal();

  Rng support_rng = Rng::derive(seed, 0x537570ULL);
  inst.support = support_rng.sample_without_replacement(d, support_size);
  std::sort(inst.support.begin(), inst.support.end());
  Rng w_rng = Rng::derive(seed, 0x57ULL);
  inst.W_true = planted_weights(inst.support, d, k, w_rng, smooth);

  const Matrix signal = inst.X * inst.W_true;
  Matrix noise = Matrix::Zero(n, k);
  Rng noise_rng = Rng::derive(seed, 0x4eULL);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) noise(i, j) = noise_rng.normal();

  if (std::isinf(snr)) {
    inst.Y = signal;
  } else if (signal.norm() == 0.0) {
    inst.Y = noise;  // pure-noise instance (empty support)
  } else {
    // Exact realized SNR: ||signal||^2 / ||noise||^2 == snr.
    const double scale = signal.norm() / (std::sqrt(snr) * noise.norm());
    inst.Y = signal + scale * noise;
  }
  return inst;
}

}  // namespace stmtl
