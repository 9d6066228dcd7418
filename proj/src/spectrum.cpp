#include "spdcsim/spectrum.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "spdcsim/constants.hpp"

namespace spdcsim {

double CavityConfig::delta_fsr_mhz() const { return std::abs(fsr_h_mhz - fsr_v_mhz); }

double CavityConfig::weight_fsr_mhz() const {
  switch (weight_fsr) {
    case WeightFsr::fsr_h: return fsr_h_mhz;
    case WeightFsr::fsr_v: return fsr_v_mhz;
    case WeightFsr::mean: return 0.5 * (fsr_h_mhz + fsr_v_mhz);
  }
  throw std::logic_error("bad WeightFsr");
}

void CavityConfig::validate() const {
  if (!(fsr_h_mhz > 0.0) || !(fsr_v_mhz > 0.0))
    throw std::invalid_argument("cavity: free spectral ranges must be positive");
  if (!(finesse > 1.0))
    throw std::invalid_argument("cavity: finesse must exceed 1");
  if (!(phase_matching_bandwidth_ghz > 0.0))
    throw std::invalid_argument("cavity: phase-matching bandwidth must be positive");
  if (mode_count_n < 0)
    throw std::invalid_argument("cavity: mode count must be non-negative");
}

std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::degenerate: return "degenerate";
    case Branch::h_comb_plus: return "H_comb_plus";
    case Branch::h_comb_minus: return "H_comb_minus";
    case Branch::v_comb_plus: return "V_comb_plus";
    case Branch::v_comb_minus: return "V_comb_minus";
  }
  return "?";
}

double mode_weight(int m, const CavityConfig& cfg) {
  if (m < 1) throw std::invalid_argument("mode_weight: m must be at least 1");
  cfg.validate();
  const double f2 = 4.0 * cfg.finesse * cfg.finesse / (kPi * kPi);
  const double s = std::sin(kPi * m * cfg.delta_fsr_mhz() / cfg.weight_fsr_mhz());
  return 4.0 / (1.0 + f2 * s * s);
}

ModeComb build_comb(const CavityConfig& cfg) {
  cfg.validate();
  ModeComb comb;
  comb.config = cfg;
  comb.pairs.reserve(4 * static_cast<std::size_t>(cfg.mode_count_n) + 1);
  comb.pairs.push_back({0, cfg.degenerate_offset_mhz, -cfg.degenerate_offset_mhz,
                        Branch::degenerate, 1.0});
  for (int m = 1; m <= cfg.mode_count_n; ++m) {
    const double w = mode_weight(m, cfg) / 4.0;
    const double oh = m * cfg.fsr_h_mhz;
    const double ov = m * cfg.fsr_v_mhz;
    comb.pairs.push_back({m, oh, -oh, Branch::h_comb_plus, w});
    comb.pairs.push_back({m, -oh, oh, Branch::h_comb_minus, w});
    comb.pairs.push_back({m, ov, -ov, Branch::v_comb_plus, w});
    comb.pairs.push_back({m, -ov, ov, Branch::v_comb_minus, w});
  }
  return comb;
}

double multimode_ratio(const ModeComb& comb) {
  double mu = 0.0;
  for (const auto& p : comb.pairs)
    if (p.branch != Branch::degenerate) mu += p.relative_weight;
  return mu;
}

double cavity_linewidth_mhz(const CavityConfig& cfg) {
  cfg.validate();
  return cfg.fsr_h_mhz / cfg.finesse;
}

double round_trip_time_ps(const CavityConfig& cfg) {
  cfg.validate();
  return 1.0e6 / (0.5 * (cfg.fsr_h_mhz + cfg.fsr_v_mhz)); // MHz -> ps
}

void write_comb_csv(const ModeComb& comb, std::ostream& os) {
  os << "m,branch,offset_signal_MHz,relative_weight\n";
  for (const auto& p : comb.pairs)
    os << p.m << ',' << to_string(p.branch) << ',' << p.offset_signal_mhz << ','
       << p.relative_weight << '\n';
}

} // namespace spdcsim
