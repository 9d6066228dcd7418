#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "spdcsim/filters.hpp"
#include "spdcsim/spectrum.hpp"
#include "spdcsim/timing.hpp"

namespace spdcsim {

struct RunConfig {
  CavityConfig cavity;
  EtalonStack filter;
  SourceConfig source;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  void validate() const; // delegates to each section
};

// Defaults reproduce the reference source: 1468/1481 MHz cavity at finesse
// 100 with N = 100, the five-etalon filter chain, 7 mW pump.
RunConfig default_run_config();

// Flat key=value text, '#' comments, dotted section prefixes
// (cavity.fsr_h_mhz=1468). Unknown keys and malformed values are errors
// naming the line and key. The first filter.* key replaces the default
// stack; filter.count sizes it and filter.etalonK.* (K from 1) sets fields.
RunConfig parse_run_config(std::istream& is, const std::string& name = "<config>");

// Reads and parses; a missing file is an error naming the path.
RunConfig load_run_config(const std::string& path);

// Writes every key back out, loadable by parse_run_config.
void save_run_config(const RunConfig& cfg, std::ostream& os);

} // namespace spdcsim
