#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spdcsim/polarization.hpp"
#include "spdcsim/rng.hpp"

namespace spdcsim {

struct ProjectionSetting {
  std::string label; // two letters from {H,V,D,A,R,L}, arm A then arm B
  Vec4c ket;
};

// The 16 projective settings used for two-qubit reconstruction.
const std::vector<ProjectionSetting>& standard_settings();

struct CountRecord {
  std::string label;
  double count = 0.0;
};

struct TomographyData {
  std::vector<CountRecord> records;
  long total_per_setting_hint = 0; // acquisition normalization, when known
};

// Poisson counts with mean pairs_per_setting * <psi_j| rho |psi_j> over the
// standard settings.
TomographyData simulate_counts(const TwoQubitState& state, long pairs_per_setting,
                               std::uint64_t seed);

// CSV: setting,count. Throws std::runtime_error with the line number on
// malformed input.
TomographyData read_counts_csv(std::istream& is);
void write_counts_csv(const TomographyData& data, std::ostream& os);

// Linear inversion on a Hermitian operator basis; unit trace but possibly
// unphysical (negative eigenvalues) under noise. Requires all 16 standard
// settings exactly once.
Mat4c linear_reconstruct(const TomographyData& data);

// Clip negative eigenvalues to zero and renormalize the trace.
Mat4c project_to_physical(const Mat4c& m);

struct MleResult {
  TwoQubitState state;
  double scale = 0.0;          // fitted counts-per-setting normalization
  double log_likelihood = 0.0; // Poisson log likelihood at the optimum
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
};

// Maximum-likelihood reconstruction over rho = T^dag T / Tr(T^dag T) with T a
// lower-triangular Cholesky factor (16 real parameters; the Poisson scale
// rides on the norm of T). Deterministic BFGS from the physically projected
// linear estimate; converged when the log-likelihood gain per iteration
// drops below 1e-10.
MleResult mle_reconstruct(const TomographyData& data);

// Poisson log likelihood of the counts given a state and a counts-per-setting
// scale, with the same mean floor the fit uses.
double counts_log_likelihood(const Mat4c& rho, double scale, const TomographyData& data);

// <target| rho |target> for a unit-norm pure target.
double fidelity_to_pure(const Mat4c& rho, const Vec4c& target);

// (Tr sqrt(sqrt(a) b sqrt(a)))^2 for density matrices a, b.
double uhlmann_fidelity(const Mat4c& a, const Mat4c& b);

// Wootters concurrence.
double concurrence(const Mat4c& rho);

struct StateMetrics {
  double purity = 0.0;
  double concurrence = 0.0;
  std::array<double, 4> eigenvalues{}; // descending
};

StateMetrics state_metrics(const Mat4c& rho);

struct FidelityEstimate {
  double fidelity = 0.0;
  double sigma = 0.0;
};

// Fidelity of the MLE state to a pure target, with the error bar from
// Poisson resampling of the count table (each resample refit in full).
FidelityEstimate fidelity_with_sigma(const TomographyData& data, const Vec4c& target,
                                     int resamples = 500, std::uint64_t seed = 0);

// Bundled reference reconstruction (HH, HV, VH, VV basis) that the
// comparison report is measured against. Trace 1.0001 as printed; pass it
// through TwoQubitState::from_matrix_relaxed before computing metrics.
Mat4c reference_density_matrix();

// Random full-rank density matrix, G G^dag normalized over complex normal G.
Mat4c random_density_matrix(Rng& rng);

} // namespace spdcsim
