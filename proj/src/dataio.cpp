#include "stmtl/dataio.hpp"

#include "stmtl/csv.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace stmtl {

void ColumnSchema::validate() const {
  if (subject_col.empty() || visit_col.empty() || date_col.empty() || dx_col.empty())
    throw ConfigError("schema: required column names must be non-empty");
  std::set<std::string> seen{subject_col, visit_col, date_col, dx_col};
  for (const auto& s : score_cols)
    if (!seen.insert(s).second) throw ConfigError("schema: duplicate column '" + s + "'");
  for (const auto& r : roi_cols) {
    if (r.empty()) throw ConfigError("schema: empty ROI column name");
    if (!seen.insert(r).second) throw ConfigError("schema: duplicate column '" + r + "'");
  }
  if (roi_cols.empty()) throw ConfigError("schema: at least one ROI column required");
}

namespace {

bool parse_qc_flag(const std::string& s, int line_no) {
  if (s == "1" || s == "true" || s == "pass" || s == "") return true;
  if (s == "0" || s == "false" || s == "fail") return false;
  throw DataError("csv line " + std::to_string(line_no) + ": bad qc_pass value '" + s + "'");
}

Cohort cohort_from_table(const csv::Table& table, const ColumnSchema& schema) {
  schema.validate();
  const int c_subject = table.column(schema.subject_col);
  const int c_visit = table.column(schema.visit_col);
  const int c_date = table.column(schema.date_col);
  const int c_dx = table.column(schema.dx_col);
  const int c_qc = table.column(schema.qc_col);  // optional
  for (const auto& [col, name] :
       {std::pair{c_subject, schema.subject_col}, {c_visit, schema.visit_col},
        {c_date, schema.date_col}, {c_dx, schema.dx_col}}) {
    if (col < 0) throw DataError("cohort csv: missing required column '" + name + "'");
  }
  std::vector<int> score_idx, roi_idx;
  for (const auto& s : schema.score_cols) {
    const int c = table.column(s);
    if (c < 0) throw DataError("cohort csv: missing score column '" + s + "'");
    score_idx.push_back(c);
  }
  for (const auto& r : schema.roi_cols) {
    const int c = table.column(r);
    if (c < 0) throw DataError("cohort csv: missing ROI column '" + r + "'");
    roi_idx.push_back(c);
  }

  Cohort cohort;
  cohort.roi_names = schema.roi_cols;
  cohort.score_names = schema.score_cols;

  std::map<std::string, SubjectRecord> subjects;
  std::set<std::pair<std::string, VisitCode>> seen_visits;
  const int r = static_cast<int>(roi_idx.size());

  for (std::size_t row_i = 0; row_i < table.rows.size(); ++row_i) {
    const auto& row = table.rows[row_i];
    const int line_no = static_cast<int>(row_i) + 2;  // header is line 1
    const std::string& subject_id = row[c_subject];
    if (subject_id.empty())
      throw DataError("csv line " + std::to_string(line_no) + ": empty subject id");

    Visit visit;
    try {
      visit.code = parse_visit_code(row[c_visit]);
      visit.scan_date_days = parse_iso_date(row[c_date]);
    } catch (const DataError& e) {
      throw DataError("csv line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen_visits.insert({subject_id, visit.code}).second) {
      throw DataError("csv line " + std::to_string(line_no) + ": duplicate record for (" +
                      subject_id + ", " + to_string(visit.code) + ")");
    }
    if (c_qc >= 0) visit.qc_pass = parse_qc_flag(row[c_qc], line_no);

    visit.roi_values = Vector::Constant(r, missing_value());
    for (int j = 0; j < r; ++j) {
      const std::string& cell = row[roi_idx[j]];
      if (cell.empty()) continue;  // missing, never zero
      visit.roi_values[j] = csv::parse_double(cell, line_no, schema.roi_cols[j]);
    }
    for (std::size_t j = 0; j < score_idx.size(); ++j) {
      const std::string& cell = row[score_idx[j]];
      if (cell.empty()) continue;
      const double value = csv::parse_double(cell, line_no, schema.score_cols[j]);
      if (schema.score_cols[j] == "mmse" && (value < 0.0 || value > 30.0)) {
        throw DataError("csv line " + std::to_string(line_no) + ": mmse value " +
                        csv::format_double(value) + " outside [0, 30]");
      }
      visit.scores[schema.score_cols[j]] = value;
    }

    auto& record = subjects[subject_id];
    if (record.subject_id.empty()) {
      record.subject_id = subject_id;
      try {
        record.dx = parse_dx_group(row[c_dx]);
      } catch (const DataError& e) {
        throw DataError("csv line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    record.visits.push_back(std::move(visit));
  }

  for (auto& [id, record] : subjects) {
    std::sort(record.visits.begin(), record.visits.end(),
              [](const Visit& a, const Visit& b) { return a.scan_date_days < b.scan_date_days; });
    cohort.subjects.push_back(std::move(record));
  }
  return cohort;
}

}  // namespace

Cohort parse_cohort(const std::string& path, const ColumnSchema& schema) {
  return cohort_from_table(csv::read_file(path), schema);
}

Cohort parse_cohort_string(const std::string& text, const ColumnSchema& schema) {
  return cohort_from_table(csv::read_string(text), schema);
}

namespace {

bool in_span(VisitCode code, const VisitPair& span) {
  return code == span.baseline || code == span.follow;
}

}  // namespace

std::pair<Cohort, CleaningReport> clean_cohort(const Cohort& cohort, const VisitPair& span,
                                               const std::vector<TargetSpec>& targets) {
  for (const auto& t : targets) {
    if (std::find(cohort.score_names.begin(), cohort.score_names.end(), t.score_name) ==
        cohort.score_names.end())
      throw ConfigError("clean_cohort: unknown target score '" + t.score_name + "'");
  }

  CleaningReport report;
  Cohort out;
  out.score_names = cohort.score_names;

  // Rule 1: any QC-failed visit removes the subject.
  std::vector<const SubjectRecord*> kept;
  for (const auto& subject : cohort.subjects) {
    const bool failed = std::any_of(subject.visits.begin(), subject.visits.end(),
                                    [](const Visit& v) { return !v.qc_pass; });
    if (failed) report.removed_subjects.push_back({subject.subject_id, kRule1QcFail});
    else kept.push_back(&subject);
  }

  // Rule 2: fraction of rule-1 survivors for which the feature is missing
  // in at least one of their span visits; drop when strictly above 1/2.
  const int r = cohort.n_rois();
  std::vector<int> missing_count(r, 0);
  for (const auto* subject : kept) {
    for (int j = 0; j < r; ++j) {
      bool missing = false;
      for (const auto& v : subject->visits) {
        if (in_span(v.code, span) && is_missing(v.roi_values[j])) missing = true;
      }
      if (missing) ++missing_count[j];
    }
  }
  std::vector<int> kept_features;
  for (int j = 0; j < r; ++j) {
    const double fraction =
        kept.empty() ? 0.0 : static_cast<double>(missing_count[j]) / static_cast<double>(kept.size());
    if (fraction > 0.5) {
      report.removed_features.push_back({cohort.roi_names[j], fraction});
    } else {
      kept_features.push_back(j);
      out.roi_names.push_back(cohort.roi_names[j]);
    }
  }

  // Rule 3: both span scans must exist.
  std::vector<const SubjectRecord*> kept3;
  for (const auto* subject : kept) {
    if (subject->find_visit(span.baseline) && subject->find_visit(span.follow)) {
      kept3.push_back(subject);
    } else {
      report.removed_subjects.push_back({subject->subject_id, kRule3MissingScan});
    }
  }

  // Rule 4: per-feature mean over the post-rule-3 subjects' span cells.
  const int rk = static_cast<int>(kept_features.size());
  std::vector<double> sum(rk, 0.0);
  std::vector<long> count(rk, 0);
  for (const auto* subject : kept3) {
    for (const auto& v : subject->visits) {
      if (!in_span(v.code, span)) continue;
      for (int j = 0; j < rk; ++j) {
        const double x = v.roi_values[kept_features[j]];
        if (!is_missing(x)) {
          sum[j] += x;
          ++count[j];
        }
      }
    }
  }

  // Rule 5: every target score must be present at its visit.
  for (const auto* subject : kept3) {
    bool complete = true;
    for (const auto& t : targets) {
      const Visit* v = subject->find_visit(t.visit);
      if (!v || v->scores.find(t.score_name) == v->scores.end()) {
        complete = false;
        break;
      }
    }
    if (!complete) {
      report.removed_subjects.push_back({subject->subject_id, kRule5MissingTarget});
      continue;
    }

    SubjectRecord rec;
    rec.subject_id = subject->subject_id;
    rec.dx = subject->dx;
    for (const auto& v : subject->visits) {
      Visit nv;
      nv.code = v.code;
      nv.scan_date_days = v.scan_date_days;
      nv.qc_pass = v.qc_pass;
      nv.scores = v.scores;
      nv.roi_values = Vector::Constant(rk, missing_value());
      for (int j = 0; j < rk; ++j) nv.roi_values[j] = v.roi_values[kept_features[j]];
      if (in_span(nv.code, span)) {
        for (int j = 0; j < rk; ++j) {
          if (is_missing(nv.roi_values[j])) {
            if (count[j] == 0)
              throw DataError("clean_cohort: feature '" + out.roi_names[j] +
                              "' has no observed span values to impute from");
            nv.roi_values[j] = sum[j] / static_cast<double>(count[j]);
            ++report.imputed_cells;
          }
        }
      }
      rec.visits.push_back(std::move(nv));
    }
    out.subjects.push_back(std::move(rec));
  }

  std::sort(out.subjects.begin(), out.subjects.end(),
            [](const SubjectRecord& a, const SubjectRecord& b) {
              return a.subject_id < b.subject_id;
            });
  std::sort(report.removed_subjects.begin(), report.removed_subjects.end(),
            [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });

  if (out.subjects.empty())
    throw DataError("clean_cohort: no subjects remain after cleaning (degenerate cohort)");
  if (out.roi_names.empty())
    throw DataError("clean_cohort: no ROI features remain after cleaning (degenerate cohort)");
  return {std::move(out), std::move(report)};
}

PairedDataset assemble_longitudinal(const Cohort& cohort, const VisitPair& span,
                                    const std::vector<TargetSpec>& targets) {
  if (targets.empty()) throw ConfigError("assemble_longitudinal: at least one target required");
  PairedDataset ds;
  ds.roi_names = cohort.roi_names;
  for (const auto& t : targets) ds.target_names.push_back(t.label());

  std::vector<const SubjectRecord*> order;
  for (const auto& s : cohort.subjects) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const SubjectRecord* a, const SubjectRecord* b) {
    return a->subject_id < b->subject_id;
  });

  const int n = static_cast<int>(order.size());
  const int r = cohort.n_rois();
  const int k = static_cast<int>(targets.size());
  ds.baseline.resize(n, r);
  ds.follow.resize(n, r);
  ds.dt_days.resize(n);
  ds.targets.resize(n, k);

  for (int i = 0; i < n; ++i) {
    const SubjectRecord& subject = *order[i];
    const Visit* bl = subject.find_visit(span.baseline);
    const Visit* fu = subject.find_visit(span.follow);
    if (!bl || !fu)
      throw DataError("assemble_longitudinal: subject '" + subject.subject_id +
                      "' lacks a span visit");
    ds.subject_ids.push_back(subject.subject_id);
    ds.baseline.row(i) = bl->roi_values.transpose();
    ds.follow.row(i) = fu->roi_values.transpose();
    ds.dt_days[i] = static_cast<double>(fu->scan_date_days - bl->scan_date_days);
    for (int j = 0; j < k; ++j) {
      const Visit* tv = subject.find_visit(targets[j].visit);
      if (!tv) {
        throw DataError("assemble_longitudinal: subject '" + subject.subject_id +
                        "' lacks visit " + to_string(targets[j].visit));
      }
      const auto it = tv->scores.find(targets[j].score_name);
      if (it == tv->scores.end()) {
        throw DataError("assemble_longitudinal: subject '" + subject.subject_id +
                        "' missing target " + targets[j].label());
      }
      ds.targets(i, j) = it->second;
    }
  }
  return ds;
}

void write_dataset_csv(const std::string& path, const PairedDataset& ds) {
  csv::Table table;
  table.header.push_back("subject_id");
  table.header.push_back("dt_days");
  for (const auto& roi : ds.roi_names) table.header.push_back("bl_" + roi);
  for (const auto& roi : ds.roi_names) table.header.push_back("fu_" + roi);
  for (const auto& t : ds.target_names) table.header.push_back("target_" + t);
  for (int i = 0; i < ds.n(); ++i) {
    std::vector<std::string> row;
    row.push_back(ds.subject_ids[i]);
    row.push_back(csv::format_double(ds.dt_days[i]));
    for (int j = 0; j < ds.r(); ++j) row.push_back(csv::format_double(ds.baseline(i, j)));
    for (int j = 0; j < ds.r(); ++j) row.push_back(csv::format_double(ds.follow(i, j)));
    for (int j = 0; j < ds.k(); ++j) row.push_back(csv::format_double(ds.targets(i, j)));
    table.rows.push_back(std::move(row));
  }
  csv::write_file(path, table);
}

PairedDataset read_dataset_csv(const std::string& path) {
  const csv::Table table = csv::read_file(path);
  PairedDataset ds;
  if (table.header.size() < 3 || table.header[0] != "subject_id" || table.header[1] != "dt_days")
    throw DataError("dataset csv: unexpected header layout in " + path);
  std::size_t i = 2;
  for (; i < table.header.size() && table.header[i].rfind("bl_", 0) == 0; ++i)
    ds.roi_names.push_back(table.header[i].substr(3));
  const std::size_t fu_begin = i;
  for (; i < table.header.size() && table.header[i].rfind("fu_", 0) == 0; ++i) {
    if (table.header[i].substr(3) != ds.roi_names[i - fu_begin])
      throw DataError("dataset csv: bl_/fu_ column order mismatch");
  }
  for (; i < table.header.size(); ++i) {
    if (table.header[i].rfind("target_", 0) != 0)
      throw DataError("dataset csv: unexpected column '" + table.header[i] + "'");
    ds.target_names.push_back(table.header[i].substr(7));
  }
  const int r = static_cast<int>(ds.roi_names.size());
  const int k = static_cast<int>(ds.target_names.size());
  if (r == 0 || k == 0) throw DataError("dataset csv: needs bl_/fu_ and target_ columns");
  if (fu_begin != 2 + static_cast<std::size_t>(r) ||
      table.header.size() != 2 + static_cast<std::size_t>(2 * r + k))
    throw DataError("dataset csv: bl_/fu_ column blocks are misaligned");

  const int n = static_cast<int>(table.rows.size());
  ds.baseline.resize(n, r);
  ds.follow.resize(n, r);
  ds.dt_days.resize(n);
  ds.targets.resize(n, k);
  for (int row_i = 0; row_i < n; ++row_i) {
    const auto& row = table.rows[row_i];
    const int line_no = row_i + 2;
    ds.subject_ids.push_back(row[0]);
    ds.dt_days[row_i] = csv::parse_double(row[1], line_no, "dt_days");
    for (int j = 0; j < r; ++j)
      ds.baseline(row_i, j) = csv::parse_double(row[2 + j], line_no, table.header[2 + j]);
    for (int j = 0; j < r; ++j)
      ds.follow(row_i, j) = csv::parse_double(row[2 + r + j], line_no, table.header[2 + r + j]);
    for (int j = 0; j < k; ++j)
      ds.targets(row_i, j) =
          csv::parse_double(row[2 + 2 * r + j], line_no, table.header[2 + 2 * r + j]);
  }
  return ds;
}

void write_cohort_csv(const std::string& path, const Cohort& cohort) {
  csv::Table table;
  table.header = {"subject_id", "visit", "scan_date", "dx", "qc_pass"};
  for (const auto& s : cohort.score_names) table.header.push_back(s);
  for (const auto& r : cohort.roi_names) table.header.push_back(r);
  for (const auto& subject : cohort.subjects) {
    for (const auto& visit : subject.visits) {
      std::vector<std::string> row;
      row.push_back(subject.subject_id);
      row.push_back(to_string(visit.code));
      row.push_back(format_iso_date(visit.scan_date_days));
      row.push_back(to_string(subject.dx));
      row.push_back(visit.qc_pass ? "1" : "0");
      for (const auto& s : cohort.score_names) {
        const auto it = visit.scores.find(s);
        row.push_back(it == visit.scores.end() ? "" : csv::format_double(it->second));
      }
      for (int j = 0; j < cohort.n_rois(); ++j) {
        const double x = visit.roi_values[j];
        row.push_back(is_missing(x) ? "" : csv::format_double(x));
      }
      table.rows.push_back(std::move(row));
    }
  }
  csv::write_file(path, table);
}

ColumnSchema schema_for_cohort(const Cohort& cohort) {
  ColumnSchema schema;
  schema.score_cols = cohort.score_names;
  schema.roi_cols = cohort.roi_names;
  return schema;
}

std::vector<TargetSpec> parse_target_list(const std::string& spec) {
  std::vector<TargetSpec> targets;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto at = item.find('@');
    if (at == std::string::npos)
      throw ConfigError("target '" + item + "' must look like <score>@<visit>");
    TargetSpec t;
    t.score_name = item.substr(0, at);
    try {
      t.visit = parse_visit_code(item.substr(at + 1));
    } catch (const DataError& e) {
      throw ConfigError(std::string("target '") + item + "': " + e.what());
    }
    targets.push_back(std::move(t));
  }
  if (targets.empty()) throw ConfigError("empty target list");
  return targets;
}

}  // namespace stmtl
