#pragma once

#include "stmtl/types.hpp"

namespace stmtl {

// Wide CSV layout: one row per subject-visit. Fixed columns are named
// here; score and ROI columns are declared per dataset (config file), so
// column renames need no code change.
struct ColumnSchema {
  std::string subject_col = "subject_id";
  std::string visit_col = "visit";
  std::string date_col = "scan_date";
  std::string dx_col = "dx";
  std::string qc_col = "qc_pass";  // optional column; absent means all pass
  std::vector<std::string> score_cols;
  std::vector<std::string> roi_cols;

  void validate() const;
};

struct CleaningReport {
  struct RemovedSubject {
    std::string subject_id;
    std::string rule;  // one of kRule1QcFail..kRule5MissingTarget
  };
  struct RemovedFeature {
    std::string roi_name;
    double missing_fraction = 0.0;
  };
  std::vector<RemovedSubject> removed_subjects;
  std::vector<RemovedFeature> removed_features;
  long imputed_cells = 0;
};

inline constexpr const char* kRule1QcFail = "rule-1-qc-fail";
inline constexpr const char* kRule2FeatureMissing = "rule-2-feature-missing";
inline constexpr const char* kRule3MissingScan = "rule-3-missing-span-scan";
inline constexpr const char* kRule4Impute = "rule-4-impute";
inline constexpr const char* kRule5MissingTarget = "rule-5-missing-target-score";

Cohort parse_cohort(const std::string& path, const ColumnSchema& schema);
Cohort parse_cohort_string(const std::string& text, const ColumnSchema& schema);

// Applies the five cleaning rules in order: (1) drop QC-failed subjects,
// (2) drop ROI features missing in more than half the subjects across the
// span visits, (3) drop subjects lacking a span scan, (4) mean-impute the
// remaining missing ROI cells at span visits, (5) drop subjects missing
// any target score. Idempotent: cleaning a cleaned cohort is a no-op.
std::pair<Cohort, CleaningReport> clean_cohort(const Cohort& cohort, const VisitPair& span,
                                               const std::vector<TargetSpec>& targets);

// Per-subject paired scans aligned with target scores, rows in ascending
// subject_id order.
struct PairedDataset {
  std::vector<std::string> subject_ids;
  std::vector<std::string> roi_names;
  std::vector<std::string> target_names;
  Matrix baseline;  // n x r
  Matrix follow;    // n x r
  Vector dt_days;   // n
  Matrix targets;   // n x k

  int n() const { return static_cast<int>(baseline.rows()); }
  int r() const { return static_cast<int>(baseline.cols()); }
  int k() const { return static_cast<int>(targets.cols()); }
};

PairedDataset assemble_longitudinal(const Cohort& cohort, const VisitPair& span,
                                    const std::vector<TargetSpec>& targets);

// Round-trippable dataset files (CSV with bl_/fu_/target columns).
void write_dataset_csv(const std::string& path, const PairedDataset& dataset);
PairedDataset read_dataset_csv(const std::string& path);

// Cohort export in the same wide schema parse_cohort consumes.
void write_cohort_csv(const std::string& path, const Cohort& cohort);
ColumnSchema schema_for_cohort(const Cohort& cohort);

std::vector<TargetSpec> parse_target_list(const std::string& spec);  // "mmse@BL,mmse@M06"

}  // namespace stmtl
