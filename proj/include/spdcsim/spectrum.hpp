#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

namespace spdcsim {

// Which free spectral range enters the comb weight formula. The signal and
// idler combs differ slightly, so the choice is exposed as a switch.
enum class WeightFsr { fsr_h, fsr_v, mean };

struct CavityConfig {
  double fsr_h_mhz = 1468.0;
  double fsr_v_mhz = 1481.0;
  double finesse = 100.0;
  double phase_matching_bandwidth_ghz = 300.0;
  int mode_count_n = 100;
  double degenerate_offset_mhz = 0.0;
  double round_trip_hint_ps = 670.0;      // informational
  double double_resonance_temp_c = 40.356; // inert constant
  WeightFsr weight_fsr = WeightFsr::fsr_h;

  // |fsr_h - fsr_v|, the walk-off between the two mode combs.
  double delta_fsr_mhz() const;
  // FSR selected by weight_fsr.
  double weight_fsr_mhz() const;
  // Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

enum class Branch {
  degenerate,
  h_comb_plus, // signal at +m*fsr_h, idler mirrored
  h_comb_minus,
  v_comb_plus,
  v_comb_minus,
};

std::string_view to_string(Branch b);

struct ModePair {
  int m = 0;
  double offset_signal_mhz = 0.0;
  double offset_idler_mhz = 0.0;
  Branch branch = Branch::degenerate;
  double relative_weight = 1.0; // relative to the degenerate pair
};

struct ModeComb {
  CavityConfig config;
  std::vector<ModePair> pairs; // degenerate first, then m = 1..N, 4 branches each
};

// Relative weight of the four comb lines at index m >= 1 combined,
// 4 / (1 + (4 F^2 / pi^2) sin^2(pi m dFSR / FSR)). The degenerate weight is 1
// by normalization, not by this formula, so m = 0 is rejected.
double mode_weight(int m, const CavityConfig& cfg);

// Degenerate pair plus the 4 branches for each m in 1..N (weight split
// evenly), 4N + 1 pairs total.
ModeComb build_comb(const CavityConfig& cfg);

// Ratio of non-degenerate to degenerate pair production,
// mu = sum_m mode_weight(m).
double multimode_ratio(const ModeComb& comb);

// fsr_h / finesse.
double cavity_linewidth_mhz(const CavityConfig& cfg);

// 1 / mean(fsr_h, fsr_v), in ps.
double round_trip_time_ps(const CavityConfig& cfg);

// CSV: m,branch,offset_signal_MHz,relative_weight
void write_comb_csv(const ModeComb& comb, std::ostream& os);

} // namespace spdcsim
