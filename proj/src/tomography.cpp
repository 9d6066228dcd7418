#include "spdcsim/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "spdcsim/optim.hpp"
#include "spdcsim/rng.hpp"

namespace spdcsim {

using std::complex;
using namespace std::complex_literals;

namespace {

Eigen::Vector2cd single_ket(char c) {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Vector2cd v;
  switch (c) {
    case 'H': v << 1.0, 0.0; break;
    case 'V': v << 0.0, 1.0; break;
    case 'D': v << r, r; break;
    case 'A': v << r, -r; break;
    case 'R': v << r, -r * 1i; break;
    case 'L': v << r, r * 1i; break;
    default: throw std::invalid_argument(std::string("unknown polarization label ") + c);
  }
  return v;
}

Vec4c pair_ket(const std::string& label) {
  if (label.size() != 2) throw std::invalid_argument("setting label must have two letters");
  const Eigen::Vector2cd a = single_ket(label[0]);
  const Eigen::Vector2cd b = single_ket(label[1]);
  Vec4c v;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) v(2 * i + j) = a(i) * b(j);
  return v;
}

} // namespace

const std::vector<ProjectionSetting>& standard_settings() {
  static const std::vector<ProjectionSetting> settings = [] {
    const char* labels[] = {"HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
                            "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL"};
    std::vector<ProjectionSetting> s;
    for (const char* l : labels) s.push_back({l, pair_ket(l)});
    return s;
  }();
  return settings;
}

TomographyData simulate_counts(const TwoQubitState& state, long pairs_per_setting,
                               std::uint64_t seed) {
  if (pairs_per_setting <= 0)
    throw std::invalid_argument("tomography: pairs per setting must be positive");
  TomographyData data;
  data.total_per_setting_hint = pairs_per_setting;
  Rng rng(seed);
  for (const auto& s : standard_settings()) {
    const double p = std::max(0.0, (s.ket.adjoint() * state.rho() * s.ket)(0).real());
    const double mean = pairs_per_setting * p;
    const double count = mean > 0.0 ? std::poisson_distribution<long>(mean)(rng) : 0.0;
    data.records.push_back({s.label, count});
  }
  return data;
}

TomographyData read_counts_csv(std::istream& is) {
  TomographyData data;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("setting", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("counts csv line " + std::to_string(lineno) + ": missing comma");
    const std::string label = line.substr(0, comma);
    double count = 0.0;
    try {
      std::size_t used = 0;
      count = std::stod(line.substr(comma + 1), &used);
    } catch (const std::exception&) {
      throw std::runtime_error("counts csv line " + std::to_string(lineno) + ": bad count");
    }
    if (!(count >= 0.0) || !std::isfinite(count))
      throw std::runtime_error("counts csv line " + std::to_string(lineno) +
                               ": count must be non-negative");
    data.records.push_back({label, count});
  }
  return data;
}

void write_counts_csv(const TomographyData& data, std::ostream& os) {
  os << "setting,count\n";
  for (const auto& r : data.records) os << r.label << ',' << r.count << '\n';
}

namespace {

// Counts aligned with standard_settings() order; all 16 required once.
Eigen::Matrix<double, 16, 1> aligned_counts(const TomographyData& data) {
  const auto& settings = standard_settings();
  std::map<std::string, double> by_label;
  for (const auto& r : data.records) {
    if (!(r.count >= 0.0) || !std::isfinite(r.count))
      throw std::invalid_argument("tomography: counts must be non-negative");
    if (!by_label.emplace(r.label, r.count).second)
      throw std::invalid_argument("tomography: duplicate setting " + r.label);
  }
  Eigen::Matrix<double, 16, 1> n;
  for (std::size_t j = 0; j < settings.size(); ++j) {
    const auto it = by_label.find(settings[j].label);
    if (it == by_label.end())
      throw std::invalid_argument("tomography: missing setting " + settings[j].label);
    n(static_cast<Eigen::Index>(j)) = it->second;
    by_label.erase(it);
  }
  if (!by_label.empty())
    throw std::invalid_argument("tomography: unknown setting " + by_label.begin()->first);
  return n;
}

// Hermitian basis sigma_i x sigma_j, i,j over {I, X, Y, Z}.
const std::array<Mat4c, 16>& pauli_basis() {
  static const std::array<Mat4c, 16> basis = [] {
    std::array<Mat2c, 4> s;
    s[0] = Mat2c::Identity();
    s[1] << 0, 1, 1, 0;
    s[2] << 0, -1i, 1i, 0;
    s[3] << 1, 0, 0, -1;
    std::array<Mat4c, 16> b;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) b[static_cast<std::size_t>(4 * i + j)] = kron2(s[i], s[j]);
    return b;
  }();
  return basis;
}

} // namespace

Mat4c linear_reconstruct(const TomographyData& data) {
  const auto n = aligned_counts(data);
  const auto& settings = standard_settings();
  const auto& basis = pauli_basis();

  Eigen::Matrix<double, 16, 16> a;
  for (std::size_t j = 0; j < 16; ++j)
    for (std::size_t k = 0; k < 16; ++k)
      a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
          (settings[j].ket.adjoint() * basis[k] * settings[j].ket)(0).real();

  const Eigen::FullPivLU<Eigen::Matrix<double, 16, 16>> lu(a);
  if (!lu.isInvertible())
    throw std::runtime_error("tomography: projector system is singular");
  const Eigen::Matrix<double, 16, 1> x = lu.solve(n);

  Mat4c m = Mat4c::Zero();
  for (std::size_t k = 0; k < 16; ++k) m += x(static_cast<Eigen::Index>(k)) * basis[k];
  const double tr = m.trace().real();
  if (!(tr > 0.0))
    throw std::runtime_error("tomography: degenerate normalization, non-positive trace");
  return m / tr;
}

Mat4c project_to_physical(const Mat4c& m) {
  const Mat4c h = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat4c> es(h);
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  const double tr = ev.sum();
  if (!(tr > 0.0)) throw std::runtime_error("tomography: projection collapsed to zero");
  ev /= tr;
  return es.eigenvectors() * ev.asDiagonal().toDenseMatrix().cast<complex<double>>() *
         es.eigenvectors().adjoint();
}

namespace {

// Lower-triangular parameter layout: 4 real diagonal entries, then re/im
// pairs for (1,0), (2,0), (2,1), (3,0), (3,1), (3,2).
constexpr std::array<std::pair<int, int>, 6> kOffDiag{
    {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};

Mat4c t_from_params(const Eigen::VectorXd& p) {
  Mat4c t = Mat4c::Zero();
  for (int i = 0; i < 4; ++i) t(i, i) = p(i);
  for (std::size_t k = 0; k < kOffDiag.size(); ++k) {
    const auto [r, c] = kOffDiag[k];
    t(r, c) = complex<double>(p(4 + 2 * static_cast<Eigen::Index>(k)),
                              p(5 + 2 * static_cast<Eigen::Index>(k)));
  }
  return t;
}

Eigen::VectorXd params_from_t(const Mat4c& t) {
  Eigen::VectorXd p(16);
  for (int i = 0; i < 4; ++i) p(i) = t(i, i).real();
  for (std::size_t k = 0; k < kOffDiag.size(); ++k) {
    const auto [r, c] = kOffDiag[k];
    p(4 + 2 * static_cast<Eigen::Index>(k)) = t(r, c).real();
    p(5 + 2 * static_cast<Eigen::Index>(k)) = t(r, c).imag();
  }
  return p;
}

// Lower-triangular T with T^dag T = a, via the Cholesky of the
// index-reversed matrix.
Mat4c lower_factor(const Mat4c& a) {
  Mat4c rev;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) rev(i, j) = a(3 - i, 3 - j);
  const Eigen::LLT<Mat4c> llt(rev);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("tomography: Cholesky factorization failed");
  const Mat4c l = llt.matrixL();
  const Mat4c u = l.adjoint();
  Mat4c t;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) t(i, j) = u(3 - i, 3 - j);
  return t;
}

MleResult mle_core(const Eigen::Matrix<double, 16, 1>& n) {
  const auto& settings = standard_settings();

  // Initial factor from the physically projected linear estimate, scaled so
  // predicted counts match the data in aggregate.
  Mat4c rho0;
  try {
    TomographyData tmp;
    for (std::size_t j = 0; j < 16; ++j)
      tmp.records.push_back({settings[j].label, n(static_cast<Eigen::Index>(j))});
    rho0 = project_to_physical(linear_reconstruct(tmp));
  } catch (const std::exception&) {
    rho0 = Mat4c::Identity() / 4.0;
  }
  double psum = 0.0;
  for (const auto& s : settings)
    psum += std::max(0.0, (s.ket.adjoint() * rho0 * s.ket)(0).real());
  const double s0 = psum > 0.0 ? n.sum() / psum : 1.0;
  const Mat4c ridge = (rho0 + 1e-9 * Mat4c::Identity()) / (1.0 + 4e-9) * s0;
  const Eigen::VectorXd p0 = params_from_t(lower_factor(ridge));

  const double eps = 1e-12;
  auto fg = [&](const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
    const Mat4c t = t_from_params(p);
    double neg_ll = 0.0;
    grad.setZero(16);
    for (std::size_t j = 0; j < 16; ++j) {
      const Vec4c u = t * settings[j].ket;
      const double lam = u.squaredNorm() + eps;
      const double nj = n(static_cast<Eigen::Index>(j));
      neg_ll -= nj * std::log(lam) - lam;
      const double w = nj / lam - 1.0; // d logL / d lambda
      // d lambda / d Re T(a,b) = 2 Re(conj(u_a) psi_b), d/dIm = -2 Im(...)
      for (int a = 0; a < 4; ++a) {
        const complex<double> zd = std::conj(u(a)) * settings[j].ket(a);
        grad(a) -= w * 2.0 * zd.real();
      }
      for (std::size_t k = 0; k < kOffDiag.size(); ++k) {
        const auto [r, c] = kOffDiag[k];
        const complex<double> z = std::conj(u(r)) * settings[j].ket(c);
        grad(4 + 2 * static_cast<Eigen::Index>(k)) -= w * 2.0 * z.real();
        grad(5 + 2 * static_cast<Eigen::Index>(k)) -= w * -2.0 * z.imag();
      }
    }
    return neg_ll;
  };

  const OptimResult opt = bfgs(fg, p0, 1e-10, 100000);

  const Mat4c t = t_from_params(opt.x);
  const Mat4c tt = t.adjoint() * t;
  const double scale = tt.trace().real();
  if (!(scale > 0.0)) throw std::runtime_error("tomography: fit collapsed to zero scale");

  MleResult res{TwoQubitState::from_matrix(Mat4c(tt / scale)),
                scale,
                -opt.value,
                opt.iterations,
                opt.converged,
                opt.converged ? "converged" : "max iterations reached, best state returned"};
  return res;
}

} // namespace

MleResult mle_reconstruct(const TomographyData& data) {
  return mle_core(aligned_counts(data));
}

double counts_log_likelihood(const Mat4c& rho, double scale, const TomographyData& data) {
  if (!(scale > 0.0)) throw std::invalid_argument("likelihood: scale must be positive");
  const auto n = aligned_counts(data);
  const auto& settings = standard_settings();
  double ll = 0.0;
  for (std::size_t j = 0; j < 16; ++j) {
    const double p = std::max(0.0, (settings[j].ket.adjoint() * rho * settings[j].ket)(0).real());
    const double lam = scale * p + 1e-12;
    ll += n(static_cast<Eigen::Index>(j)) * std::log(lam) - lam;
  }
  return ll;
}

double fidelity_to_pure(const Mat4c& rho, const Vec4c& target) {
  const double norm = target.norm();
  if (!(norm > 0.0)) throw std::invalid_argument("fidelity: zero target");
  const Vec4c t = target / norm;
  return (t.adjoint() * rho * t)(0).real();
}

namespace {

Mat4c matrix_sqrt_psd(const Mat4c& a) {
  Eigen::SelfAdjointEigenSolver<Mat4c> es((a + a.adjoint()) / 2.0);
  const Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal().toDenseMatrix().cast<complex<double>>() *
         es.eigenvectors().adjoint();
}

} // namespace

double uhlmann_fidelity(const Mat4c& a, const Mat4c& b) {
  const Mat4c sa = matrix_sqrt_psd(a);
  const Mat4c inner = sa * b * sa;
  Eigen::SelfAdjointEigenSolver<Mat4c> es((inner + inner.adjoint()) / 2.0);
  double tr = 0.0;
  for (int i = 0; i < 4; ++i) tr += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
  return tr * tr;
}

double concurrence(const Mat4c& rho) {
  Mat2c sy;
  sy << 0, -1i, 1i, 0;
  const Mat4c yy = kron2(sy, sy);
  const Mat4c rho_tilde = yy * rho.conjugate() * yy;
  const Mat4c s = matrix_sqrt_psd(rho);
  const Mat4c k = s * rho_tilde * s;
  Eigen::SelfAdjointEigenSolver<Mat4c> es((k + k.adjoint()) / 2.0);
  std::array<double, 4> lam{};
  for (int i = 0; i < 4; ++i)
    lam[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, es.eigenvalues()(i)));
  std::sort(lam.begin(), lam.end(), std::greater<>());
  return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

StateMetrics state_metrics(const Mat4c& rho) {
  StateMetrics m;
  m.purity = (rho * rho).trace().real();
  m.concurrence = concurrence(rho);
  Eigen::SelfAdjointEigenSolver<Mat4c> es((rho + rho.adjoint()) / 2.0,
                                          Eigen::EigenvaluesOnly);
  for (int i = 0; i < 4; ++i) m.eigenvalues[static_cast<std::size_t>(i)] = es.eigenvalues()(3 - i);
  return m;
}

FidelityEstimate fidelity_with_sigma(const TomographyData& data, const Vec4c& target,
                                     int resamples, std::uint64_t seed) {
  if (resamples < 2) throw std::invalid_argument("fidelity: needs at least 2 resamples");
  const auto n = aligned_counts(data);
  FidelityEstimate est;
  est.fidelity = fidelity_to_pure(mle_core(n).state.rho(), target);

  std::vector<double> f(static_cast<std::size_t>(resamples));
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(resamples); ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    Eigen::Matrix<double, 16, 1> nr;
    for (Eigen::Index j = 0; j < 16; ++j)
      nr(j) = n(j) > 0.0 ? static_cast<double>(std::poisson_distribution<long>(n(j))(rng)) : 0.0;
    f[static_cast<std::size_t>(r)] = fidelity_to_pure(mle_core(nr).state.rho(), target);
  }
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(f.size());
  double var = 0.0;
  for (double v : f) var += (v - mean) * (v - mean);
  est.sigma = std::sqrt(var / static_cast<double>(f.size() - 1));
  return est;
}

Mat4c random_density_matrix(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat4c g;
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) g(i, j) = {normal(rng), normal(rng)};
  Mat4c rho = g * g.adjoint();
  return rho / rho.trace().real();
}

Mat4c reference_density_matrix() {
  using C = std::complex<double>;
  Mat4c m;
  m << C(0.0104, 0.0), C(-0.0323, -0.0012), C(-0.0012, -0.0082), C(-0.0019, 0.0073),
      C(-0.0323, 0.0012), C(0.5055, 0.0), C(-0.4269, 0.0331), C(-0.0113, -0.0199),
      C(-0.0012, 0.0082), C(-0.4269, -0.0331), C(0.4762, 0.0), C(0.0162, -0.0047),
      C(-0.0019, -0.0073), C(-0.0113, 0.0199), C(0.0162, 0.0047), C(0.0080, 0.0);
  return m;
}

} // namespace spdcsim
