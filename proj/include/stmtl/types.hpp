#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace stmtl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error categories map onto CLI exit codes: ConfigError -> 2,
// DataError -> 3, NumericError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

enum class VisitCode { BL, M06, M12, M24, M36 };

enum class DxGroup { AD, MCI, NL, Unknown };

const char* to_string(VisitCode code);
const char* to_string(DxGroup dx);
VisitCode parse_visit_code(const std::string& s);
DxGroup parse_dx_group(const std::string& s);

// Ordered pair of visit codes spanning one scan interval. Baseline is
// always BL; follow is one of the later codes.
struct VisitPair {
  VisitCode baseline = VisitCode::BL;
  VisitCode follow = VisitCode::M06;
};

VisitPair make_span(VisitCode follow);

inline bool is_missing(double x) { return std::isnan(x); }
inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }

struct Visit {
  VisitCode code = VisitCode::BL;
  int scan_date_days = 0;  // days since 1970-01-01
  bool qc_pass = true;
  Vector roi_values;                     // NaN marks a missing cell
  std::map<std::string, double> scores;  // absent key marks a missing score
};

struct SubjectRecord {
  std::string subject_id;
  DxGroup dx = DxGroup::Unknown;
  std::vector<Visit> visits;  // sorted ascending by scan_date_days

  const Visit* find_visit(VisitCode code) const;
};

struct Cohort {
  std::vector<SubjectRecord> subjects;
  std::vector<std::string> roi_names;
  std::vector<std::string> score_names;

  int n_rois() const { return static_cast<int>(roi_names.size()); }
};

// One regression target: a cognitive score at one visit.
struct TargetSpec {
  std::string score_name;
  VisitCode visit = VisitCode::BL;

  std::string label() const { return score_name + "@" + to_string(visit); }
};

// Calendar helpers (proleptic Gregorian). parse_iso_date throws DataError
// on anything that is not a valid YYYY-MM-DD date.
int parse_iso_date(const std::string& iso);
std::string format_iso_date(int days_since_epoch);

}  // namespace stmtl
