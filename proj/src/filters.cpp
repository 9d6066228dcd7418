#include "spdcsim/filters.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "spdcsim/constants.hpp"

namespace spdcsim {

double ideal_finesse(double reflectivity) {
  if (!(reflectivity > 0.0) || !(reflectivity < 1.0))
    throw std::invalid_argument("etalon: reflectivity must lie in (0, 1)");
  return kPi * std::sqrt(reflectivity) / (1.0 - reflectivity);
}

double EtalonSpec::effective_finesse() const {
  return finesse_override ? *finesse_override : ideal_finesse(surface_reflectivity);
}

double EtalonSpec::fsr_mhz() const {
  return kSpeedOfLight / (2.0 * refractive_index * length_mm * 1e-3) / 1e6;
}

void EtalonSpec::validate() const {
  if (!(length_mm > 0.0)) throw std::invalid_argument("etalon: length must be positive");
  if (!(refractive_index >= 1.0))
    throw std::invalid_argument("etalon: refractive index must be at least 1");
  if (!(surface_reflectivity > 0.0) || !(surface_reflectivity < 1.0))
    throw std::invalid_argument("etalon: reflectivity must lie in (0, 1)");
  if (finesse_override && !(*finesse_override > 0.0))
    throw std::invalid_argument("etalon: finesse override must be positive");
  if (!(peak_transmittance > 0.0) || !(peak_transmittance <= 1.0))
    throw std::invalid_argument("etalon: peak transmittance must lie in (0, 1]");
}

double etalon_transmission(const EtalonSpec& e, double delta_mhz) {
  const double coeff = 2.0 * e.effective_finesse() / kPi;
  const double s = std::sin(kPi * (delta_mhz - e.detuning_mhz) / e.fsr_mhz());
  return e.peak_transmittance / (1.0 + coeff * coeff * s * s);
}

double EtalonStack::peak_transmission() const {
  double p = 1.0;
  for (const auto& e : etalons) p *= e.peak_transmittance;
  return p;
}

void EtalonStack::validate() const {
  for (const auto& e : etalons) e.validate();
}

EtalonStack default_stack() {
  EtalonStack s;
  for (double len : {5.4, 5.4, 7.5, 7.5, 2.1}) {
    EtalonSpec e;
    e.length_mm = len;
    s.etalons.push_back(e);
  }
  return s;
}

double stack_transmission(const EtalonStack& stack, double delta_mhz) {
  if (stack.etalons.empty())
    throw std::invalid_argument("stack: transmission of an empty stack is undefined");
  double t = 1.0;
  for (const auto& e : stack.etalons) t *= etalon_transmission(e, delta_mhz);
  return t;
}

namespace {

struct RatioAccum {
  double singles = 0.0;
  double coincidence = 0.0;
};

RatioAccum accumulate_pair(const ModePair& p, const EtalonStack& stack, double t0) {
  const double ts = stack_transmission(stack, p.offset_signal_mhz);
  const double ti = stack_transmission(stack, p.offset_idler_mhz);
  return {p.relative_weight * (ts + ti) / (2.0 * t0),
          p.relative_weight * ts * ti / (t0 * t0)};
}

double peak_or_throw(const EtalonStack& stack) {
  stack.validate();
  const double t0 = stack_transmission(stack, 0.0);
  if (!(t0 > 0.0)) throw std::invalid_argument("stack: degenerate mode is blocked, T(0) = 0");
  return t0;
}

} // namespace

double filtered_ratio(const ModeComb& comb, const EtalonStack& stack) {
  if (stack.etalons.empty()) return multimode_ratio(comb); // bypass
  const double t0 = peak_or_throw(stack);
  double r = 0.0;
  for (const auto& p : comb.pairs)
    if (p.branch != Branch::degenerate) r += accumulate_pair(p, stack, t0).singles;
  return r;
}

double filtered_coincidence_ratio(const ModeComb& comb, const EtalonStack& stack) {
  if (stack.etalons.empty()) return multimode_ratio(comb); // bypass
  const double t0 = peak_or_throw(stack);
  double r = 0.0;
  for (const auto& p : comb.pairs)
    if (p.branch != Branch::degenerate) r += accumulate_pair(p, stack, t0).coincidence;
  return r;
}

std::vector<LeakageRow> leakage_table(const ModeComb& comb, const EtalonStack& stack) {
  const bool bypass = stack.etalons.empty();
  const double t0 = bypass ? 1.0 : peak_or_throw(stack);
  std::map<int, LeakageRow> rows;
  for (const auto& p : comb.pairs) {
    if (p.branch == Branch::degenerate) continue;
    auto& row = rows[p.m];
    row.m = p.m;
    row.weight += p.relative_weight;
    if (bypass) {
      row.singles += p.relative_weight;
      row.coincidence += p.relative_weight;
    } else {
      const auto acc = accumulate_pair(p, stack, t0);
      row.singles += acc.singles;
      row.coincidence += acc.coincidence;
    }
  }
  std::vector<LeakageRow> out;
  out.reserve(rows.size());
  for (const auto& [m, row] : rows) out.push_back(row);
  return out;
}

void write_leakage_csv(std::span<const LeakageRow> rows, std::ostream& os) {
  os << "m,weight,singles_ratio,coincidence_ratio\n";
  for (const auto& r : rows)
    os << r.m << ',' << r.weight << ',' << r.singles << ',' << r.coincidence << '\n';
}

void write_transmission_csv(const EtalonStack& stack, double span_mhz, double step_mhz,
                            std::ostream& os) {
  if (!(span_mhz > 0.0) || !(step_mhz > 0.0))
    throw std::invalid_argument("transmission sweep: span and step must be positive");
  os << "detuning_MHz,T\n";
  for (double d = -span_mhz; d <= span_mhz + 0.5 * step_mhz; d += step_mhz)
    os << d << ',' << stack_transmission(stack, d) << '\n';
}

namespace {

std::vector<std::vector<double>> length_multisets(std::span<const double> candidates,
                                                  int count) {
  std::vector<double> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<std::vector<double>> out;
  std::vector<double> cur;
  auto rec = [&](auto&& self, std::size_t from) -> void {
    if (cur.size() == static_cast<std::size_t>(count)) {
      out.push_back(cur);
      return;
    }
    for (std::size_t i = from; i < sorted.size(); ++i) {
      cur.push_back(sorted[i]);
      self(self, i);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

EtalonStack stack_from_lengths(const std::vector<double>& lengths, double per_peak) {
  EtalonStack s;
  for (double len : lengths) {
    EtalonSpec e;
    e.length_mm = len;
    e.peak_transmittance = per_peak;
    s.etalons.push_back(e);
  }
  return s;
}

EtalonStack design_stack_impl(const ModeComb& comb, std::span<const double> candidates,
                              int count, double peak_budget, bool parallel) {
  if (count <= 0) throw std::invalid_argument("design: etalon count must be positive");
  if (candidates.empty()) throw std::invalid_argument("design: no candidate lengths");
  if (!(peak_budget > 0.0)) throw std::invalid_argument("design: peak budget must be positive");
  if (peak_budget > 1.0)
    throw std::runtime_error("design: peak budget above 1 is infeasible");
  for (double len : candidates)
    if (!(len > 0.0)) throw std::invalid_argument("design: candidate lengths must be positive");

  const double per_peak = std::pow(peak_budget, 1.0 / count);
  const auto sets = length_multisets(candidates, count);
  std::vector<double> ratios(sets.size());

#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sets.size()); ++i)
    ratios[static_cast<std::size_t>(i)] =
        filtered_ratio(comb, stack_from_lengths(sets[static_cast<std::size_t>(i)], per_peak));

  // Multisets are generated in lexicographic order, so strict improvement
  // gives the deterministic tie-break.
  std::size_t best = 0;
  for (std::size_t i = 1; i < sets.size(); ++i)
    if (ratios[i] < ratios[best]) best = i;
  return stack_from_lengths(sets[best], per_peak);
}

} // namespace

EtalonStack design_stack(const ModeComb& comb, std::span<const double> candidate_lengths_mm,
                         int count, double peak_budget) {
  return design_stack_impl(comb, candidate_lengths_mm, count, peak_budget, true);
}

EtalonStack design_stack_serial(const ModeComb& comb,
                                std::span<const double> candidate_lengths_mm, int count,
                                double peak_budget) {
  return design_stack_impl(comb, candidate_lengths_mm, count, peak_budget, false);
}

} // namespace spdcsim
