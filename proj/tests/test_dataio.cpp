#include "stmtl/dataio.hpp"

#include "stmtl/csv.hpp"

#include <doctest.h>

#include <sstream>

using namespace stmtl;

namespace {

ColumnSchema three_roi_schema() {
  ColumnSchema schema;
  schema.score_cols = {"mmse"};
  schema.roi_cols = {"roi_1", "roi_2", "roi_3"};
  return schema;
}

const char* kTinyCsv =
    "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n"
    "S001,BL,2005-01-10,AD,24,100.5,200.0,300.25\n"
    "S001,M06,2005-07-12,AD,23,99.0,198.5,290.0\n";

}  // namespace

TEST_CASE("parse_cohort basic construction") {
  const Cohort cohort = parse_cohort_string(kTinyCsv, three_roi_schema());
  REQUIRE(cohort.subjects.size() == 1);
  CHECK(cohort.roi_names.size() == 3);
  const SubjectRecord& s = cohort.subjects[0];
  CHECK(s.subject_id == "S001");
  CHECK(s.dx == DxGroup::AD);
  REQUIRE(s.visits.size() == 2);
  CHECK(s.visits[0].code == VisitCode::BL);
  CHECK(s.visits[1].code == VisitCode::M06);
  CHECK(s.visits[0].roi_values[0] == doctest::Approx(100.5));
  CHECK(s.visits[0].scores.at("mmse") == doctest::Approx(24.0));
  // Visits sorted by scan date.
  CHECK(s.visits[0].scan_date_days < s.visits[1].scan_date_days);
}

TEST_CASE("parse_cohort rejects duplicates, bad dates, bad rows") {
  const std::string dup =
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n"
      "S001,BL,2005-01-10,AD,24,1,2,3\n"
      "S001,BL,2005-02-10,AD,24,1,2,3\n";
  CHECK_THROWS_WITH_AS(parse_cohort_string(dup, three_roi_schema()),
                       doctest::Contains("duplicate record"), DataError);

  const std::string bad_date =
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n"
      "S001,BL,2005-02-30,AD,24,1,2,3\n";
  CHECK_THROWS_WITH_AS(parse_cohort_string(bad_date, three_roi_schema()),
                       doctest::Contains("line 2"), DataError);

  const std::string bad_number =
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n"
      "S001,BL,2005-01-10,AD,24,one,2,3\n";
  CHECK_THROWS_WITH_AS(parse_cohort_string(bad_number, three_roi_schema()),
                       doctest::Contains("roi_1"), DataError);

  const std::string short_row =
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n"
      "S001,BL,2005-01-10,AD,24,1,2\n";
  CHECK_THROWS_WITH_AS(parse_cohort_string(short_row, three_roi_schema()),
                       doctest::Contains("line 2"), DataError);

  const std::string missing_col =
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2\n"
      "S001,BL,2005-01-10,AD,24,1,2\n";
  CHECK_THROWS_WITH_AS(parse_cohort_string(missing_col, three_roi_schema()),
                       doctest::Contains("roi_3"), DataError);

  const std::string bad_mmse =
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n"
      "S001,BL,2005-01-10,AD,42,1,2,3\n";
  CHECK_THROWS_WITH_AS(parse_cohort_string(bad_mmse, three_roi_schema()),
                       doctest::Contains("mmse"), DataError);
}

TEST_CASE("missing cells stay missing, never zero") {
  const std::string csv_text =
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n"
      "S001,BL,2005-01-10,AD,24,1.5,,3\n";
  const Cohort cohort = parse_cohort_string(csv_text, three_roi_schema());
  CHECK_FALSE(is_missing(cohort.subjects[0].visits[0].roi_values[0]));
  CHECK(is_missing(cohort.subjects[0].visits[0].roi_values[1]));
  CHECK_FALSE(is_missing(cohort.subjects[0].visits[0].roi_values[2]));
}

namespace {

// n complete subjects with BL+M06 and one mmse score at each visit.
std::string complete_rows(int n) {
  std::ostringstream out;
  for (int i = 1; i <= n; ++i) {
    char id[8];
    std::snprintf(id, sizeof(id), "S%03d", i);
    out << id << ",BL,2005-01-10,MCI,25,10,2.0,30\n";
    out << id << ",M06,2005-07-12,MCI,24,11,2.5,31\n";
  }
  return out.str();
}

}  // namespace

TEST_CASE("cleaning rule 2: feature dropped iff missing fraction > 0.5") {
  // roi_2 missing at BL for 6 of 10 subjects -> fraction 0.6 -> dropped.
  std::ostringstream csv_text;
  csv_text << "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n";
  for (int i = 1; i <= 10; ++i) {
    char id[8];
    std::snprintf(id, sizeof(id), "S%03d", i);
    const char* roi2 = (i <= 6) ? "" : "2.0";
    csv_text << id << ",BL,2005-01-10,MCI,25,10," << roi2 << ",30\n";
    csv_text << id << ",M06,2005-07-12,MCI,24,11,2.5,31\n";
  }
  const Cohort cohort = parse_cohort_string(csv_text.str(), three_roi_schema());
  const auto [cleaned, report] =
      clean_cohort(cohort, make_span(VisitCode::M06), parse_target_list("mmse@BL,mmse@M06"));
  REQUIRE(report.removed_features.size() == 1);
  CHECK(report.removed_features[0].roi_name == "roi_2");
  CHECK(report.removed_features[0].missing_fraction == doctest::Approx(0.6));
  CHECK(cleaned.roi_names == std::vector<std::string>{"roi_1", "roi_3"});

  SUBCASE("exactly one half is kept") {
    std::ostringstream half;
    half << "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n";
    for (int i = 1; i <= 10; ++i) {
      char id[8];
      std::snprintf(id, sizeof(id), "S%03d", i);
      const char* roi2 = (i <= 5) ? "" : "2.0";
      half << id << ",BL,2005-01-10,MCI,25,10," << roi2 << ",30\n";
      half << id << ",M06,2005-07-12,MCI,24,11,2.5,31\n";
    }
    const Cohort c2 = parse_cohort_string(half.str(), three_roi_schema());
    const auto [cleaned2, report2] =
        clean_cohort(c2, make_span(VisitCode::M06), parse_target_list("mmse@BL"));
    CHECK(report2.removed_features.empty());
    CHECK(cleaned2.roi_names.size() == 3);
  }
}

TEST_CASE("cleaning rule 1: qc failures remove whole subjects") {
  const std::string csv_text =
      "subject_id,visit,scan_date,dx,qc_pass,mmse,roi_1,roi_2,roi_3\n"
      "S001,BL,2005-01-10,AD,1,24,1,2,3\n"
      "S001,M06,2005-07-12,AD,0,23,1,2,3\n"
      "S002,BL,2005-01-11,NL,1,28,1,2,3\n"
      "S002,M06,2005-07-13,NL,1,29,1,2,3\n";
  const Cohort cohort = parse_cohort_string(csv_text, three_roi_schema());
  const auto [cleaned, report] =
      clean_cohort(cohort, make_span(VisitCode::M06), parse_target_list("mmse@BL,mmse@M06"));
  REQUIRE(report.removed_subjects.size() == 1);
  CHECK(report.removed_subjects[0].subject_id == "S001");
  CHECK(report.removed_subjects[0].rule == kRule1QcFail);
  CHECK(cleaned.subjects.size() == 1);
}

TEST_CASE("cleaning rule 3: subjects need both span scans") {
  const std::string csv_text =
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n"
      "S001,M06,2005-07-12,AD,23,1,2,3\n"  // no BL
      "S002,BL,2005-01-11,NL,28,1,2,3\n"
      "S002,M06,2005-07-13,NL,29,1,2,3\n"
      "S003,BL,2005-01-11,NL,27,1,2,3\n";  // no M06
  const Cohort cohort = parse_cohort_string(csv_text, three_roi_schema());
  const auto [cleaned, report] =
      clean_cohort(cohort, make_span(VisitCode::M06), parse_target_list("mmse@BL"));
  REQUIRE(report.removed_subjects.size() == 2);
  CHECK(report.removed_subjects[0].subject_id == "S001");
  CHECK(report.removed_subjects[0].rule == kRule3MissingScan);
  CHECK(report.removed_subjects[1].subject_id == "S003");
  CHECK(cleaned.subjects.size() == 1);
  CHECK(cleaned.subjects[0].subject_id == "S002");
}

TEST_CASE("cleaning rule 4: mean imputation from retained subjects") {
  const std::string csv_text =
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2\n"
      "S001,BL,2005-01-10,AD,24,1,\n"
      "S001,M06,2005-07-12,AD,23,1,\n"
      "S002,BL,2005-01-11,NL,28,1,2.0\n"
      "S002,M06,2005-07-13,NL,29,1,2.0\n"
      "S003,BL,2005-01-12,NL,27,1,4.0\n"
      "S003,M06,2005-07-14,NL,28,1,4.0\n";
  ColumnSchema schema;
  schema.score_cols = {"mmse"};
  schema.roi_cols = {"roi_1", "roi_2"};
  const Cohort cohort = parse_cohort_string(csv_text, schema);
  const auto [cleaned, report] =
      clean_cohort(cohort, make_span(VisitCode::M06), parse_target_list("mmse@BL,mmse@M06"));
  CHECK(report.imputed_cells == 2);  // S001 BL and M06 roi_2 cells
  CHECK(report.removed_features.empty());
  const SubjectRecord& s1 = cleaned.subjects[0];
  CHECK(s1.subject_id == "S001");
  CHECK(s1.visits[0].roi_values[1] == doctest::Approx(3.0));
  CHECK(s1.visits[1].roi_values[1] == doctest::Approx(3.0));
  // Non-missing cells are untouched.
  CHECK(cleaned.subjects[1].visits[0].roi_values[1] == doctest::Approx(2.0));
  CHECK(cleaned.subjects[2].visits[0].roi_values[1] == doctest::Approx(4.0));
}

TEST_CASE("cleaning rule 5: missing target scores remove subjects") {
  const std::string csv_text =
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n"
      "S001,BL,2005-01-10,AD,24,1,2,3\n"
      "S001,M06,2005-07-12,AD,,1,2,3\n"  // mmse missing at M06
      "S002,BL,2005-01-11,NL,28,1,2,3\n"
      "S002,M06,2005-07-13,NL,29,1,2,3\n";
  const Cohort cohort = parse_cohort_string(csv_text, three_roi_schema());
  const auto [cleaned, report] =
      clean_cohort(cohort, make_span(VisitCode::M06), parse_target_list("mmse@BL,mmse@M06"));
  REQUIRE(report.removed_subjects.size() == 1);
  CHECK(report.removed_subjects[0].rule == kRule5MissingTarget);
  CHECK(cleaned.subjects.size() == 1);

  // With targets at BL only the same subject survives.
  const auto [cleaned_bl, report_bl] =
      clean_cohort(cohort, make_span(VisitCode::M06), parse_target_list("mmse@BL"));
  CHECK(cleaned_bl.subjects.size() == 2);
  CHECK(report_bl.removed_subjects.empty());
}

TEST_CASE("cleaning is idempotent and can degenerate") {
  const Cohort cohort = parse_cohort_string(
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n" + complete_rows(6),
      three_roi_schema());
  const auto targets = parse_target_list("mmse@BL,mmse@M06");
  const auto span = make_span(VisitCode::M06);
  const auto [once, report1] = clean_cohort(cohort, span, targets);
  const auto [twice, report2] = clean_cohort(once, span, targets);
  CHECK(report2.removed_subjects.empty());
  CHECK(report2.removed_features.empty());
  CHECK(report2.imputed_cells == 0);
  CHECK(twice.subjects.size() == once.subjects.size());
  CHECK(twice.roi_names == once.roi_names);

  const std::string all_fail =
      "subject_id,visit,scan_date,dx,qc_pass,mmse,roi_1,roi_2,roi_3\n"
      "S001,BL,2005-01-10,AD,0,24,1,2,3\n";
  ColumnSchema schema = three_roi_schema();
  const Cohort doomed = parse_cohort_string(all_fail, schema);
  CHECK_THROWS_AS(clean_cohort(doomed, span, targets), DataError);
}

TEST_CASE("assemble_longitudinal layout and determinism") {
  // Intentionally unsorted subject ids in the csv.
  const std::string csv_text =
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n"
      "S002,BL,2005-01-11,NL,28,10,20,30\n"
      "S002,M06,2005-07-13,NL,29,11,21,31\n"
      "S001,BL,2005-01-10,AD,24,1,2,3\n"
      "S001,M06,2005-07-12,AD,23,1,2,3\n";
  const Cohort cohort = parse_cohort_string(csv_text, three_roi_schema());
  const auto targets = parse_target_list("mmse@BL,mmse@M06");
  const PairedDataset ds = assemble_longitudinal(cohort, make_span(VisitCode::M06), targets);
  CHECK(ds.n() == 2);
  CHECK(ds.k() == 2);
  CHECK(ds.subject_ids == std::vector<std::string>{"S001", "S002"});
  CHECK(ds.dt_days[0] == doctest::Approx(183.0));
  CHECK(ds.targets(0, 0) == doctest::Approx(24.0));
  CHECK(ds.targets(0, 1) == doctest::Approx(23.0));
  CHECK(ds.baseline(1, 2) == doctest::Approx(30.0));
  CHECK(ds.follow(1, 2) == doctest::Approx(31.0));
  CHECK(ds.target_names == std::vector<std::string>{"mmse@BL", "mmse@M06"});

  SUBCASE("identical scans give zero change downstream") {
    CHECK((ds.baseline.row(0) - ds.follow.row(0)).norm() == 0.0);
  }

  SUBCASE("missing span visit is an assembly error naming the subject") {
    Cohort broken = cohort;
    broken.subjects[0].visits.pop_back();  // drop S001's M06
    CHECK_THROWS_WITH_AS(assemble_longitudinal(broken, make_span(VisitCode::M06), targets),
                         doctest::Contains("S001"), DataError);
  }
}

TEST_CASE("dataset csv round trip") {
  const std::string csv_text =
      "subject_id,visit,scan_date,dx,mmse,roi_1,roi_2,roi_3\n" + complete_rows(4);
  const Cohort cohort = parse_cohort_string(csv_text, three_roi_schema());
  const PairedDataset ds =
      assemble_longitudinal(cohort, make_span(VisitCode::M06), parse_target_list("mmse@M06"));
  const std::string path = "/tmp/stmtl_dataset_roundtrip.csv";
  write_dataset_csv(path, ds);
  const PairedDataset back = read_dataset_csv(path);
  CHECK(back.subject_ids == ds.subject_ids);
  CHECK(back.roi_names == ds.roi_names);
  CHECK(back.target_names == ds.target_names);
  CHECK((back.baseline - ds.baseline).norm() == 0.0);
  CHECK((back.follow - ds.follow).norm() == 0.0);
  CHECK((back.targets - ds.targets).norm() == 0.0);
}

TEST_CASE("target list parsing") {
  const auto targets = parse_target_list("mmse@BL,adas_cog@M24");
  REQUIRE(targets.size() == 2);
  CHECK(targets[0].score_name == "mmse");
  CHECK(targets[0].visit == VisitCode::BL);
  CHECK(targets[1].score_name == "adas_cog");
  CHECK(targets[1].visit == VisitCode::M24);
  CHECK(targets[1].label() == "adas_cog@M24");
  CHECK_THROWS_AS(parse_target_list("mmse"), ConfigError);
  CHECK_THROWS_AS(parse_target_list("mmse@M99"), ConfigError);
  CHECK_THROWS_AS(parse_target_list(""), ConfigError);
}
