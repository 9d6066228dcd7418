#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "spdcsim/spectrum.hpp"

namespace spdcsim {

// Reflectivity-limited finesse pi sqrt(R) / (1 - R).
double ideal_finesse(double reflectivity);

struct EtalonSpec {
  double length_mm = 5.4;
  double refractive_index = 1.45;
  double surface_reflectivity = 0.90;
  // Measured finesse; when absent the ideal value from R applies. Defaults to
  // the measured 25, below the reflectivity-limited 29.8.
  std::optional<double> finesse_override = 25.0;
  double peak_transmittance = 0.83255320740187307; // 0.4^(1/5)
  double detuning_mhz = 0.0;

  double effective_finesse() const;
  double fsr_mhz() const; // c / (2 n L)
  void validate() const;  // throws std::invalid_argument
};

// Airy transmission peak / (1 + (2 F / pi)^2 sin^2(pi (delta - detuning) / FSR)).
double etalon_transmission(const EtalonSpec& e, double delta_mhz);

struct EtalonStack {
  std::vector<EtalonSpec> etalons;

  double peak_transmission() const; // product of per-etalon peaks
  void validate() const;            // each etalon; empty stack allowed as bypass
};

// Five-etalon chain: 5.4, 5.4, 7.5, 7.5, 2.1 mm with default coatings.
EtalonStack default_stack();

// Product of the per-etalon transmissions; rejects an empty stack.
double stack_transmission(const EtalonStack& stack, double delta_mhz);

// Fraction of non-degenerate pair flux surviving the stack, per photon,
// relative to the degenerate line:
//   sum over pairs of weight * (T(off_s) + T(off_i)) / (2 T(0)).
// This is the convention behind the published suppression figure. An empty
// stack acts as a bypass and returns the unfiltered ratio.
double filtered_ratio(const ModeComb& comb, const EtalonStack& stack);

// Both-photon survival variant, sum of weight * T(off_s) T(off_i) / T(0)^2.
double filtered_coincidence_ratio(const ModeComb& comb, const EtalonStack& stack);

struct LeakageRow {
  int m = 0;
  double weight = 0.0;      // aggregate comb weight at this m
  double singles = 0.0;     // per-photon surviving fraction
  double coincidence = 0.0; // both-photon surviving fraction
};

// Per-m breakdown of the two filtered ratios, m ascending.
std::vector<LeakageRow> leakage_table(const ModeComb& comb, const EtalonStack& stack);

// CSV: m,weight,singles_ratio,coincidence_ratio
void write_leakage_csv(std::span<const LeakageRow> rows, std::ostream& os);

// CSV sweep of the stack transmission: detuning_MHz,T
void write_transmission_csv(const EtalonStack& stack, double span_mhz, double step_mhz,
                            std::ostream& os);

// Exhaustive search over length multisets of size `count` drawn from
// `candidate_lengths_mm`, minimizing filtered_ratio subject to a total peak
// transmission of at least peak_budget (each etalon gets
// peak_budget^(1/count) and default coatings). Ties break toward the
// lexicographically smallest sorted length tuple, so the result is
// independent of candidate order and thread count.
EtalonStack design_stack(const ModeComb& comb, std::span<const double> candidate_lengths_mm,
                         int count, double peak_budget);

// Single-threaded reference for design_stack; identical results.
EtalonStack design_stack_serial(const ModeComb& comb,
                                std::span<const double> candidate_lengths_mm, int count,
                                double peak_budget);

} // namespace spdcsim
