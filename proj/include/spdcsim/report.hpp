#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "spdcsim/config.hpp"

namespace spdcsim {

struct ReportRow {
  int criterion = 0; // grouping id used by the acceptance gate
  std::string quantity;
  std::string reference; // target value, as text
  std::string computed;
  std::string tolerance;
  bool pass = false;
  std::string note;
};

struct Report {
  std::vector<ReportRow> rows;
  std::array<double, 12> runtime_ms{}; // wall time per criterion group, 1..11

  bool all_pass() const;
};

// Runs the whole pipeline at desk scale against the bundled reference
// values. When out_dir is non-empty the plot data (comb, transmission,
// leakage, fringes, histogram) is written there.
Report build_report(const RunConfig& cfg, const std::string& out_dir = "");

// quantity | reference | computed | tolerance | status, notes underneath.
void write_report_table(const Report& report, std::ostream& os);

// Same content as a JSON document.
void write_report_json(const Report& report, std::ostream& os);

} // namespace spdcsim
