#include "spdcsim/polarization.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "spdcsim/constants.hpp"
#include "spdcsim/rng.hpp"

namespace spdcsim {

using std::complex;
using namespace std::complex_literals;

Mat4c kron2(const Mat2c& a, const Mat2c& b) {
  Mat4c out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

Mat2c jones_rotation(double theta) {
  Mat2c r;
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

Mat2c jones_retarder(double theta, double gamma) {
  Mat2c d = Mat2c::Zero();
  d(0, 0) = 1.0;
  d(1, 1) = std::exp(1i * gamma);
  return jones_rotation(theta) * d * jones_rotation(-theta);
}

Mat2c jones_qwp(double theta) { return jones_retarder(theta, kPi / 2.0); }
Mat2c jones_hwp(double theta) { return jones_retarder(theta, kPi); }

Mat2c jones_polarizer(double theta) {
  Eigen::Vector2cd v;
  v << std::cos(theta), std::sin(theta);
  return v * v.adjoint();
}

namespace {

double min_eigenvalue(const Mat4c& rho) {
  Eigen::SelfAdjointEigenSolver<Mat4c> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_state(const Mat4c& rho, double herm_tol, double trace_tol, double eigen_tol) {
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > herm_tol)
    throw std::invalid_argument("state: matrix is not Hermitian");
  if (std::abs(rho.trace() - complex<double>(1.0)) > trace_tol)
    throw std::invalid_argument("state: trace differs from 1");
  if (min_eigenvalue((rho + rho.adjoint()) / 2.0) < -eigen_tol)
    throw std::invalid_argument("state: negative eigenvalue");
}

} // namespace

TwoQubitState TwoQubitState::from_matrix(const Mat4c& rho) {
  require_state(rho, 1e-10, 1e-10, 1e-9);
  return TwoQubitState(rho);
}

TwoQubitState TwoQubitState::from_matrix_relaxed(const Mat4c& rho, double trace_tol,
                                                 double eigen_tol) {
  require_state(rho, trace_tol, trace_tol, eigen_tol);
  return TwoQubitState(rho);
}

double TwoQubitState::purity() const { return (rho_ * rho_).trace().real(); }

Vec4c postselected_ket(double alpha) {
  Vec4c v = Vec4c::Zero();
  v(1) = 1.0 / std::sqrt(2.0);
  v(2) = -std::exp(1i * alpha) / std::sqrt(2.0);
  return v;
}

Vec4c singlet_state() { return postselected_ket(0.0); }

TwoQubitState postselected_state(double alpha) {
  const Vec4c v = postselected_ket(alpha);
  return TwoQubitState::from_matrix(v * v.adjoint());
}

TwoQubitState werner_mix(double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0))
    throw std::invalid_argument("werner: visibility must lie in [0, 1]");
  const Vec4c v = singlet_state();
  Mat4c rho = visibility * (v * v.adjoint()).eval() +
              (1.0 - visibility) * 0.25 * Mat4c::Identity();
  return TwoQubitState::from_matrix(rho);
}

TwoQubitState compensate_phase(const TwoQubitState& state, double qwp1, double hwp,
                               double qwp2, Arm arm) {
  const Mat2c u = jones_qwp(qwp2) * jones_hwp(hwp) * jones_qwp(qwp1);
  const Mat4c big = arm == Arm::a ? kron2(u, Mat2c::Identity()) : kron2(Mat2c::Identity(), u);
  return TwoQubitState::from_matrix(big * state.rho() * big.adjoint());
}

double coincidence_probability(const TwoQubitState& state, double theta_a, double theta_b) {
  const Mat4c proj = kron2(jones_polarizer(theta_a), jones_polarizer(theta_b));
  return (proj * state.rho()).trace().real();
}

double correlation_e(const TwoQubitState& state, double theta_a, double theta_b) {
  const double h = kPi / 2.0;
  const double pp = coincidence_probability(state, theta_a, theta_b);
  const double oo = coincidence_probability(state, theta_a + h, theta_b + h);
  const double po = coincidence_probability(state, theta_a, theta_b + h);
  const double op = coincidence_probability(state, theta_a + h, theta_b);
  const double total = pp + oo + po + op;
  if (!(std::abs(total) > 1e-12))
    throw std::runtime_error("correlation: four-outcome probabilities sum to zero");
  return (pp + oo - po - op) / total;
}

ChshSettings canonical_chsh_settings() { return {0.0, kPi / 4.0, kPi / 8.0, 3.0 * kPi / 8.0}; }

double chsh_value(const TwoQubitState& state, const ChshSettings& s) {
  return std::abs(correlation_e(state, s.theta_a, s.theta_b) -
                  correlation_e(state, s.theta_a, s.theta_b_prime) +
                  correlation_e(state, s.theta_a_prime, s.theta_b) +
                  correlation_e(state, s.theta_a_prime, s.theta_b_prime));
}

double chsh_violation_sigmas(double s, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("chsh: sigma must be positive");
  return (s - 2.0) / sigma;
}

std::vector<FringePoint> fringe_scan(const TwoQubitState& state, double theta_a,
                                     std::span<const double> theta_b_values,
                                     long pairs_per_point, std::uint64_t seed) {
  if (pairs_per_point <= 0)
    throw std::invalid_argument("fringe: pairs per point must be positive");
  std::vector<FringePoint> out;
  out.reserve(theta_b_values.size());
  Rng rng(seed);
  for (double tb : theta_b_values) {
    const double mean = pairs_per_point * coincidence_probability(state, theta_a, tb);
    double count = 0.0;
    if (mean > 0.0) count = std::poisson_distribution<long>(mean)(rng);
    out.push_back({tb, count});
  }
  return out;
}

namespace {

struct SinSqCoeffs {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0; // y = c0 + c1 cos 2t + c2 sin 2t
  double sigma_amp = 0.0;              // 1-sigma of the fitted amplitude
};

SinSqCoeffs solve_fringe_basis(std::span<const double> theta, std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(theta.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = std::cos(2.0 * theta[static_cast<std::size_t>(i)]);
    x(i, 2) = std::sin(2.0 * theta[static_cast<std::size_t>(i)]);
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Matrix3d xtx = x.transpose() * x;
  const Eigen::Vector3d xty = x.transpose() * b;
  const Eigen::Matrix3d xtx_inv = xtx.inverse();
  const Eigen::Vector3d c = xtx_inv * xty;

  SinSqCoeffs out{c(0), c(1), c(2), 0.0};
  if (n > 3) {
    const double ssr = (b - x * c).squaredNorm();
    const double s2 = ssr / static_cast<double>(n - 3);
    const double norm = std::hypot(c(1), c(2));
    Eigen::Vector2d v;
    if (norm > 0.0)
      v << c(1) / norm, c(2) / norm;
    else
      v << 1.0, 0.0;
    const Eigen::Matrix2d cov = s2 * xtx_inv.bottomRightCorner<2, 2>();
    out.sigma_amp = 2.0 * std::sqrt(std::max(0.0, v.dot(cov * v)));
  }
  return out;
}

FringeFit fit_from_coeffs(const SinSqCoeffs& c) {
  FringeFit f;
  f.amplitude = 2.0 * std::hypot(c.c1, c.c2);
  f.offset = c.c0 - f.amplitude / 2.0;
  f.phase = 0.5 * std::atan2(-c.c2, -c.c1);
  const double denom = f.amplitude + 2.0 * f.offset;
  f.visibility = denom != 0.0 ? f.amplitude / denom : 0.0;
  return f;
}

} // namespace

FringeFit fit_fringe(std::span<const FringePoint> points, int resamples, std::uint64_t seed) {
  if (points.size() < 4)
    throw std::invalid_argument("fringe fit: needs at least 4 points");
  std::vector<double> theta, y;
  theta.reserve(points.size());
  y.reserve(points.size());
  for (const auto& p : points) {
    if (p.count < 0.0) throw std::invalid_argument("fringe fit: negative count");
    theta.push_back(p.theta_b);
    y.push_back(p.count);
  }

  const SinSqCoeffs c = solve_fringe_basis(theta, y);
  FringeFit fit = fit_from_coeffs(c);
  const double scale = std::max(1.0, std::abs(c.c0));
  fit.degenerate = fit.amplitude < 1e-9 * scale ||
                   (c.sigma_amp > 0.0 && fit.amplitude < 3.0 * c.sigma_amp);

  if (resamples > 0) {
    std::vector<double> vis(static_cast<std::size_t>(resamples));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(resamples); ++r) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
      std::vector<double> yr(y.size());
      for (std::size_t i = 0; i < y.size(); ++i)
        yr[i] = y[i] > 0.0 ? std::poisson_distribution<long>(y[i])(rng) : 0.0;
      vis[static_cast<std::size_t>(r)] = fit_from_coeffs(solve_fringe_basis(theta, yr)).visibility;
    }
    double mean = 0.0;
    for (double v : vis) mean += v;
    mean /= static_cast<double>(vis.size());
    double var = 0.0;
    for (double v : vis) var += (v - mean) * (v - mean);
    fit.visibility_sigma =
        vis.size() > 1 ? std::sqrt(var / static_cast<double>(vis.size() - 1)) : 0.0;
  }
  return fit;
}

void write_fringe_csv(std::span<const FringePoint> points, std::ostream& os) {
  os << "theta_b_rad,count\n";
  for (const auto& p : points) os << p.theta_b << ',' << p.count << '\n';
}

namespace {

using CountTable = std::array<std::array<double, 4>, 4>; // [setting pair][outcome]

double table_s(const CountTable& t) {
  std::array<double, 4> e{};
  for (int k = 0; k < 4; ++k) {
    const auto& n = t[static_cast<std::size_t>(k)];
    const double total = n[0] + n[1] + n[2] + n[3];
    if (total <= 0.0) throw std::runtime_error("chsh: no counts for a setting pair");
    e[static_cast<std::size_t>(k)] = (n[0] - n[1] - n[2] + n[3]) / total;
  }
  return std::abs(e[0] - e[1] + e[2] + e[3]);
}

} // namespace

ChshEstimate chsh_from_counts(const TwoQubitState& state, const ChshSettings& settings,
                              long pairs_per_setting, int resamples, std::uint64_t seed) {
  if (pairs_per_setting <= 0)
    throw std::invalid_argument("chsh: pairs per setting must be positive");
  if (resamples < 2) throw std::invalid_argument("chsh: needs at least 2 resamples");

  const double h = kPi / 2.0;
  const std::array<std::pair<double, double>, 4> pairs{{
      {settings.theta_a, settings.theta_b},
      {settings.theta_a, settings.theta_b_prime},
      {settings.theta_a_prime, settings.theta_b},
      {settings.theta_a_prime, settings.theta_b_prime},
  }};

  CountTable table{};
  Rng rng(seed);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto [ta, tb] = pairs[k];
    // outcomes: (pass, pass), (pass, block), (block, pass), (block, block)
    const std::array<double, 4> p{
        coincidence_probability(state, ta, tb),
        coincidence_probability(state, ta, tb + h),
        coincidence_probability(state, ta + h, tb),
        coincidence_probability(state, ta + h, tb + h),
    };
    for (std::size_t o = 0; o < 4; ++o) {
      const double mean = pairs_per_setting * std::max(0.0, p[o]);
      table[k][o] = mean > 0.0 ? std::poisson_distribution<long>(mean)(rng) : 0.0;
    }
  }

  ChshEstimate est;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& n = table[k];
    const double total = n[0] + n[1] + n[2] + n[3];
    if (total <= 0.0) throw std::runtime_error("chsh: no counts for a setting pair");
    est.e[k] = (n[0] - n[1] - n[2] + n[3]) / total;
  }
  est.s = std::abs(est.e[0] - est.e[1] + est.e[2] + est.e[3]);

  std::vector<double> svals(static_cast<std::size_t>(resamples));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(resamples); ++r) {
    Rng rr(derive_seed(seed, static_cast<std::uint64_t>(r) + 1));
    CountTable t{};
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t o = 0; o < 4; ++o)
        t[k][o] = table[k][o] > 0.0
                      ? static_cast<double>(std::poisson_distribution<long>(table[k][o])(rr))
                      : 0.0;
    svals[static_cast<std::size_t>(r)] = table_s(t);
  }
  double mean = 0.0;
  for (double v : svals) mean += v;
  mean /= static_cast<double>(svals.size());
  double var = 0.0;
  for (double v : svals) var += (v - mean) * (v - mean);
  est.sigma = std::sqrt(var / static_cast<double>(svals.size() - 1));
  est.sigmas_violation = chsh_violation_sigmas(est.s, est.sigma);
  return est;
}

} // namespace spdcsim
