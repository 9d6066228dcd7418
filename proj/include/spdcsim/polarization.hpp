#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace spdcsim {

using Mat2c = Eigen::Matrix2cd;
using Mat4c = Eigen::Matrix4cd;
using Vec4c = Eigen::Vector4cd;

// Basis order |HH>, |HV>, |VH>, |VV>; first factor is arm A.
Mat4c kron2(const Mat2c& a, const Mat2c& b);

// Rotation by theta in the H/V plane.
Mat2c jones_rotation(double theta);
// Retarder with retardance gamma, fast axis at theta.
Mat2c jones_retarder(double theta, double gamma);
Mat2c jones_qwp(double theta);
Mat2c jones_hwp(double theta);
// Linear polarizer projector at theta (rank 1).
Mat2c jones_polarizer(double theta);

// Two-qubit density matrix with physicality checked at construction.
class TwoQubitState {
 public:
  // Requires Hermitian to 1e-10, unit trace to 1e-10, eigenvalues >= -1e-9.
  static TwoQubitState from_matrix(const Mat4c& rho);
  // Looser gate for matrices quoted at limited precision; the matrix is kept
  // as given, not renormalized.
  static TwoQubitState from_matrix_relaxed(const Mat4c& rho, double trace_tol = 1e-3,
                                           double eigen_tol = 1e-3);

  const Mat4c& rho() const { return rho_; }
  double purity() const; // Tr(rho^2)

 private:
  explicit TwoQubitState(Mat4c rho) : rho_(std::move(rho)) {}
  Mat4c rho_;
};

// (|HV> - e^{i alpha} |VH>) / sqrt(2) as a density matrix.
TwoQubitState postselected_state(double alpha);

// Same state as a ket; alpha = 0 gives the singlet.
Vec4c postselected_ket(double alpha);
Vec4c singlet_state();

// V |psi_0><psi_0| + (1 - V) I / 4 with psi_0 the singlet. V in [0, 1].
TwoQubitState werner_mix(double visibility);

enum class Arm { a, b };

// Quarter-half-quarter retarder unit at angles (q1, h, q2) applied to one
// arm, photon passing q1 first.
TwoQubitState compensate_phase(const TwoQubitState& state, double qwp1, double hwp,
                               double qwp2, Arm arm = Arm::a);

// P(both photons pass linear polarizers at theta_a, theta_b). Angles are
// polarizer orientations, pi-periodic.
double coincidence_probability(const TwoQubitState& state, double theta_a, double theta_b);

// E = [P(a,b) + P(a+90,b+90) - P(a,b+90) - P(a+90,b)] over the sum of the
// four outcomes; throws if the denominator vanishes.
double correlation_e(const TwoQubitState& state, double theta_a, double theta_b);

struct ChshSettings {
  double theta_a = 0.0;
  double theta_a_prime = 0.0;
  double theta_b = 0.0;
  double theta_b_prime = 0.0;
};

// 0, pi/4, pi/8, 3 pi/8: maximal violation for the singlet.
ChshSettings canonical_chsh_settings();

// |E(a,b) - E(a,b') + E(a',b) + E(a',b')| from exact probabilities.
double chsh_value(const TwoQubitState& state, const ChshSettings& s);

// Standard deviations above the classical bound 2.
double chsh_violation_sigmas(double s, double sigma);

struct FringePoint {
  double theta_b = 0.0;
  double count = 0.0;
};

// Polarizer-scan counts on arm B at fixed arm-A angle, Poisson statistics
// with mean pairs_per_point * coincidence probability.
std::vector<FringePoint> fringe_scan(const TwoQubitState& state, double theta_a,
                                     std::span<const double> theta_b_values,
                                     long pairs_per_point, std::uint64_t seed);

struct FringeFit {
  double amplitude = 0.0;
  double offset = 0.0;
  double phase = 0.0;
  double visibility = 0.0;       // amplitude / (amplitude + 2 offset)
  double visibility_sigma = 0.0; // Poisson resampling spread
  bool degenerate = false;       // amplitude indistinguishable from noise
};

// Exact least squares of a sin^2(theta - phi) + b on the {1, cos 2theta,
// sin 2theta} basis; at least 4 points. visibility_sigma from `resamples`
// Poisson replays (0 skips the resampling).
FringeFit fit_fringe(std::span<const FringePoint> points, int resamples = 1000,
                     std::uint64_t seed = 0);

// CSV: theta_b_rad,count
void write_fringe_csv(std::span<const FringePoint> points, std::ostream& os);

struct ChshEstimate {
  double s = 0.0;
  double sigma = 0.0;
  double sigmas_violation = 0.0;
  std::array<double, 4> e{}; // E(a,b), E(a,b'), E(a',b), E(a',b')
};

// CHSH from Poisson counts in the 16 polarizer combinations, uncertainty via
// Poisson resampling of the count table.
ChshEstimate chsh_from_counts(const TwoQubitState& state, const ChshSettings& settings,
                              long pairs_per_setting, int resamples, std::uint64_t seed);

} // namespace spdcsim
