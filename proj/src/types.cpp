#include "stmtl/types.hpp"

#include <chrono>
#include <cstdio>

namespace stmtl {

const char* to_string(VisitCode code) {
  switch (code) {
    case VisitCode::BL: return "BL";
    case VisitCode::M06: return "M06";
    case VisitCode::M12: return "M12";
    case VisitCode::M24: return "M24";
    case VisitCode::M36: return "M36";
  }
  return "?";
}

const char* to_string(DxGroup dx) {
  switch (dx) {
    case DxGroup::AD: return "AD";
    case DxGroup::MCI: return "MCI";
    case DxGroup::NL: return "NL";
    case DxGroup::Unknown: return "Unknown";
  }
  return "?";
}

VisitCode parse_visit_code(const std::string& s) {
  if (s == "BL") return VisitCode::BL;
  if (s == "M06") return VisitCode::M06;
  if (s == "M12") return VisitCode::M12;
  if (s == "M24") return VisitCode::M24;
  if (s == "M36") return VisitCode::M36;
  throw DataError("unknown visit code '" + s + "'");
}

DxGroup parse_dx_group(const std::string& s) {
  if (s == "AD") return DxGroup::AD;
  if (s == "MCI") return DxGroup::MCI;
  if (s == "NL") return DxGroup::NL;
  if (s == "Unknown" || s.empty()) return DxGroup::Unknown;
  throw DataError("unknown dx group '" + s + "'");
}

VisitPair make_span(VisitCode follow) {
  if (follow == VisitCode::BL) throw ConfigError("span follow visit must be later than BL");
  return VisitPair{VisitCode::BL, follow};
}

const Visit* SubjectRecord::find_visit(VisitCode code) const {
  for (const auto& v : visits) {
    if (v.code == code) return &v;
  }
  return nullptr;
}

int parse_iso_date(const std::string& iso) {
  int y = 0, m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(iso.c_str(), "%d-%d-%d%c", &y, &m, &d, &tail) != 3 || iso.size() != 10 ||
      iso[4] != '-' || iso[7] != '-') {
    throw DataError("invalid ISO-8601 date '" + iso + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) throw DataError("invalid calendar date '" + iso + "'");
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::string format_iso_date(int days_since_epoch) {
  const std::chrono::sys_days days{std::chrono::days{days_since_epoch}};
  const std::chrono::year_month_day ymd{days};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

}  // namespace stmtl
