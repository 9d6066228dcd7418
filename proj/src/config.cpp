#include "spdcsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string_view>

namespace spdcsim {

void RunConfig::validate() const {
  cavity.validate();
  filter.validate();
  source.validate();
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.filter = default_stack();
  return cfg;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

struct KeyError {
  std::string name;
  std::size_t lineno;
  std::string_view key;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument(name + " line " + std::to_string(lineno) + ": key '" +
                                std::string(key) + "': " + what);
  }
};

double parse_double(std::string_view v, const KeyError& err) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) err.fail("expected a number");
  if (!std::isfinite(out)) err.fail("value must be finite");
  return out;
}

template <typename Int>
Int parse_int(std::string_view v, const KeyError& err) {
  Int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) err.fail("expected an integer");
  return out;
}

bool consume(std::string_view& key, std::string_view prefix) {
  if (key.substr(0, prefix.size()) != prefix) return false;
  key.remove_prefix(prefix.size());
  return true;
}

void apply_cavity(CavityConfig& c, std::string_view field, std::string_view v,
                  const KeyError& err) {
  if (field == "fsr_h_mhz") c.fsr_h_mhz = parse_double(v, err);
  else if (field == "fsr_v_mhz") c.fsr_v_mhz = parse_double(v, err);
  else if (field == "finesse") c.finesse = parse_double(v, err);
  else if (field == "phase_matching_bandwidth_ghz")
    c.phase_matching_bandwidth_ghz = parse_double(v, err);
  else if (field == "mode_count_n") c.mode_count_n = parse_int<int>(v, err);
  else if (field == "degenerate_offset_mhz") c.degenerate_offset_mhz = parse_double(v, err);
  else if (field == "round_trip_hint_ps") c.round_trip_hint_ps = parse_double(v, err);
  else if (field == "double_resonance_temp_c")
    c.double_resonance_temp_c = parse_double(v, err);
  else if (field == "weight_fsr") {
    if (v == "fsr_h") c.weight_fsr = WeightFsr::fsr_h;
    else if (v == "fsr_v") c.weight_fsr = WeightFsr::fsr_v;
    else if (v == "mean") c.weight_fsr = WeightFsr::mean;
    else err.fail("expected fsr_h, fsr_v or mean");
  } else err.fail("unknown key");
}

void apply_source(SourceConfig& s, std::string_view field, std::string_view v,
                  const KeyError& err) {
  if (field == "pump_power_mw") s.pump_power_mw = parse_double(v, err);
  else if (field == "rate_coefficient") s.rate_coefficient = parse_double(v, err);
  else if (field == "linewidth_mhz") s.linewidth_mhz = parse_double(v, err);
  else if (field == "duty_cycle") s.duty_cycle = parse_double(v, err);
  else if (field == "detector_efficiency") s.detector_efficiency = parse_double(v, err);
  else if (field == "dark_rate_hz") s.dark_rate_hz = parse_double(v, err);
  else if (field == "digitizer_resolution_ns")
    s.digitizer_resolution_ns = parse_double(v, err);
  else if (field == "coincidence_window_ns")
    s.coincidence_window_ns = parse_double(v, err);
  else err.fail("unknown key");
}

void apply_filter(EtalonStack& stack, bool& stack_touched, std::string_view field,
                  std::string_view v, const KeyError& err) {
  if (!stack_touched) {
    stack.etalons.clear();
    stack_touched = true;
  }
  if (field == "count") {
    const int n = parse_int<int>(v, err);
    if (n < 0) err.fail("count must be >= 0");
    stack.etalons.resize(static_cast<std::size_t>(n));
    return;
  }
  if (!consume(field, "etalon")) err.fail("unknown key");
  const auto dot = field.find('.');
  if (dot == std::string_view::npos) err.fail("expected etalonK.field");
  const int k = parse_int<int>(field.substr(0, dot), err);
  if (k < 1) err.fail("etalon index starts at 1");
  if (stack.etalons.size() < static_cast<std::size_t>(k))
    stack.etalons.resize(static_cast<std::size_t>(k));
  EtalonSpec& e = stack.etalons[static_cast<std::size_t>(k) - 1];
  const std::string_view sub = field.substr(dot + 1);
  if (sub == "length_mm") e.length_mm = parse_double(v, err);
  else if (sub == "n") e.refractive_index = parse_double(v, err);
  else if (sub == "R") e.surface_reflectivity = parse_double(v, err);
  else if (sub == "finesse") {
    if (v == "ideal") e.finesse_override.reset();
    else e.finesse_override = parse_double(v, err);
  } else if (sub == "peak_T") e.peak_transmittance = parse_double(v, err);
  else if (sub == "detuning_MHz") e.detuning_mhz = parse_double(v, err);
  else err.fail("unknown key");
}

} // namespace

RunConfig parse_run_config(std::istream& is, const std::string& name) {
  RunConfig cfg = default_run_config();
  bool stack_touched = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view sv = line;
    if (const auto hash = sv.find('#'); hash != std::string_view::npos)
      sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument(name + " line " + std::to_string(lineno) +
                                  ": expected key=value");
    std::string_view key = trim(sv.substr(0, eq));
    const std::string_view value = trim(sv.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument(name + " line " + std::to_string(lineno) + ": empty key");
    const KeyError err{name, lineno, key};

    std::string_view rest = key;
    if (consume(rest, "cavity.")) apply_cavity(cfg.cavity, rest, value, err);
    else if (consume(rest, "filter.")) apply_filter(cfg.filter, stack_touched, rest, value, err);
    else if (consume(rest, "source.")) apply_source(cfg.source, rest, value, err);
    else if (key == "seed") cfg.seed = parse_int<std::uint64_t>(value, err);
    else if (key == "out_dir") cfg.out_dir = std::string(value);
    else err.fail("unknown key");
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  return parse_run_config(is, path);
}

void save_run_config(const RunConfig& cfg, std::ostream& os) {
  os << std::setprecision(17);
  const CavityConfig& c = cfg.cavity;
  os << "# frequencies in MHz unless suffixed otherwise; lengths in mm; angles in rad\n";
  os << "cavity.fsr_h_mhz=" << c.fsr_h_mhz << '\n';
  os << "cavity.fsr_v_mhz=" << c.fsr_v_mhz << '\n';
  os << "cavity.finesse=" << c.finesse << '\n';
  os << "cavity.phase_matching_bandwidth_ghz=" << c.phase_matching_bandwidth_ghz << '\n';
  os << "cavity.mode_count_n=" << c.mode_count_n << '\n';
  os << "cavity.degenerate_offset_mhz=" << c.degenerate_offset_mhz << '\n';
  os << "cavity.round_trip_hint_ps=" << c.round_trip_hint_ps << '\n';
  os << "cavity.double_resonance_temp_c=" << c.double_resonance_temp_c << '\n';
  os << "cavity.weight_fsr="
     << (c.weight_fsr == WeightFsr::fsr_h   ? "fsr_h"
         : c.weight_fsr == WeightFsr::fsr_v ? "fsr_v"
                                            : "mean")
     << '\n';
  os << "filter.count=" << cfg.filter.etalons.size() << '\n';
  for (std::size_t i = 0; i < cfg.filter.etalons.size(); ++i) {
    const EtalonSpec& e = cfg.filter.etalons[i];
    const std::string p = "filter.etalon" + std::to_string(i + 1) + ".";
    os << p << "length_mm=" << e.length_mm << '\n';
    os << p << "n=" << e.refractive_index << '\n';
    os << p << "R=" << e.surface_reflectivity << '\n';
    if (e.finesse_override) os << p << "finesse=" << *e.finesse_override << '\n';
    else os << p << "finesse=ideal\n";
    os << p << "peak_T=" << e.peak_transmittance << '\n';
    os << p << "detuning_MHz=" << e.detuning_mhz << '\n';
  }
  const SourceConfig& s = cfg.source;
  os << "source.pump_power_mw=" << s.pump_power_mw << '\n';
  os << "source.rate_coefficient=" << s.rate_coefficient << '\n';
  os << "source.linewidth_mhz=" << s.linewidth_mhz << '\n';
  os << "source.duty_cycle=" << s.duty_cycle << '\n';
  os << "source.detector_efficiency=" << s.detector_efficiency << '\n';
  os << "source.dark_rate_hz=" << s.dark_rate_hz << '\n';
  os << "source.digitizer_resolution_ns=" << s.digitizer_resolution_ns << '\n';
  os << "source.coincidence_window_ns=" << s.coincidence_window_ns << '\n';
  os << "seed=" << cfg.seed << '\n';
  os << "out_dir=" << cfg.out_dir << '\n';
}

} // namespace spdcsim
