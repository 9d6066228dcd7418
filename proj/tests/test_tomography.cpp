#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "spdcsim/constants.hpp"
#include "spdcsim/polarization.hpp"
#include "spdcsim/rng.hpp"
#include "spdcsim/tomography.hpp"

using namespace spdcsim;

namespace {

// exact expectation table, no shot noise
TomographyData exact_counts(const Mat4c& rho, double scale) {
  TomographyData data;
  data.total_per_setting_hint = static_cast<long>(scale);
  for (const auto& s : standard_settings()) {
    double p = (s.ket.adjoint() * rho * s.ket)(0).real();
    data.records.push_back({s.label, scale * std::max(0.0, p)});
  }
  return data;
}

} // namespace

TEST_CASE("the sixteen projection settings form a complete basis") {
  const auto& settings = standard_settings();
  REQUIRE(settings.size() == 16);
  std::set<std::string> labels;
  for (const auto& s : settings) {
    CHECK(std::abs(s.ket.norm() - 1.0) < 1e-12);
    labels.insert(s.label);
  }
  CHECK(labels.size() == 16);
  CHECK(settings[0].label == "HH");
  CHECK(settings[1].label == "HV");
  CHECK(settings[2].label == "VV");
  CHECK(settings[3].label == "VH");
  // completeness: exact inversion works, which needs a nonsingular design
  Rng rng(5);
  Mat4c rho = random_density_matrix(rng);
  Mat4c back = linear_reconstruct(exact_counts(rho, 1e4));
  CHECK((back - rho).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("simulated counts follow the projection means") {
  TwoQubitState singlet = postselected_state(0.0);
  TomographyData d = simulate_counts(singlet, 10000, 21);
  REQUIRE(d.records.size() == 16);
  CHECK(d.total_per_setting_hint == 10000);
  double hh = 0.0, hv = 0.0;
  for (const auto& r : d.records) {
    if (r.label == "HH") hh = r.count;
    if (r.label == "HV") hv = r.count;
  }
  CHECK(hh == 0.0);                        // orthogonal projection, mean zero
  CHECK(std::abs(hv - 5000.0) < 5 * std::sqrt(5000.0));

  TwoQubitState mixed = werner_mix(0.0);
  for (const auto& r : simulate_counts(mixed, 10000, 22).records)
    CHECK(std::abs(r.count - 2500.0) < 5 * std::sqrt(2500.0));

  TomographyData again = simulate_counts(singlet, 10000, 21);
  for (std::size_t i = 0; i < 16; ++i) CHECK(d.records[i].count == again.records[i].count);
  CHECK_THROWS_WITH_AS(simulate_counts(singlet, 0, 1),
                       "tomography: pairs per setting must be positive", std::invalid_argument);
}

TEST_CASE("counts csv round-trips and rejects malformed lines") {
  TomographyData d = simulate_counts(werner_mix(0.9), 3000, 9);
  std::ostringstream os;
  write_counts_csv(d, os);
  std::istringstream is(os.str());
  TomographyData back = read_counts_csv(is);
  REQUIRE(back.records.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(back.records[i].label == d.records[i].label);
    CHECK(back.records[i].count == d.records[i].count);
  }

  std::istringstream nocomma("setting,count\nHH 123\n");
  CHECK_THROWS_WITH_AS(read_counts_csv(nocomma), "counts csv line 2: missing comma",
                       std::runtime_error);
  std::istringstream badnum("HH,12\nHV,x9\n");
  CHECK_THROWS_WITH_AS(read_counts_csv(badnum), "counts csv line 2: bad count",
                       std::runtime_error);
  std::istringstream negnum("HH,-5\n");
  CHECK_THROWS_WITH_AS(read_counts_csv(negnum), "counts csv line 1: count must be non-negative",
                       std::runtime_error);
  std::istringstream empty("");
  CHECK(read_counts_csv(empty).records.empty());
}

TEST_CASE("linear inversion is exact on noiseless data") {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    Mat4c rho = random_density_matrix(rng);
    Mat4c back = linear_reconstruct(exact_counts(rho, 5e3));
    CHECK((back - rho).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(back.trace().real() - 1.0) < 1e-9);
    CHECK((back - back.adjoint()).norm() < 1e-9);
  }
}

TEST_CASE("incomplete or mislabeled tables are rejected") {
  TomographyData d = simulate_counts(werner_mix(0.9), 1000, 3);
  TomographyData fifteen = d;
  fifteen.records.pop_back();
  CHECK_THROWS_AS(linear_reconstruct(fifteen), std::invalid_argument);
  TomographyData dup = d;
  dup.records[1] = dup.records[0];
  CHECK_THROWS_WITH_AS(linear_reconstruct(dup), "tomography: duplicate setting HH",
                       std::invalid_argument);
  TomographyData alien = d;
  alien.records[15].label = "ZZ";
  CHECK_THROWS_AS(linear_reconstruct(alien), std::invalid_argument);
}

TEST_CASE("physical projection clips negative eigenvalues") {
  // a slightly unphysical matrix, the typical linear-inversion output
  Mat4c rho = postselected_state(0.0).rho();
  Mat4c bumped = rho - 0.02 * Mat4c::Identity();
  bumped(0, 0) += 0.08;
  Mat4c proj = project_to_physical(bumped);
  Eigen::SelfAdjointEigenSolver<Mat4c> es(proj);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
  CHECK(std::abs(proj.trace().real() - 1.0) < 1e-12);
  Mat4c already = werner_mix(0.8).rho();
  CHECK((project_to_physical(already) - already).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("likelihood fit recovers the singlet from clean counts") {
  MleResult res = mle_reconstruct(exact_counts(postselected_state(0.0).rho(), 1e4));
  CHECK(res.converged);
  CHECK(fidelity_to_pure(res.state.rho(), singlet_state()) > 0.9999);
  CHECK(res.scale == doctest::Approx(1e4).epsilon(1e-3));
}

TEST_CASE("likelihood fit output is always physical") {
  for (std::uint64_t seed : {101u, 102u, 103u}) {
    TomographyData d = simulate_counts(werner_mix(0.95), 10000, seed);
    MleResult res = mle_reconstruct(d);
    CHECK(res.converged);
    Eigen::SelfAdjointEigenSolver<Mat4c> es(res.state.rho());
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
    CHECK(std::abs(res.state.rho().trace().real() - 1.0) < 1e-10);
    double f = uhlmann_fidelity(res.state.rho(), werner_mix(0.95).rho());
    CHECK(f > 0.96);
  }
}

TEST_CASE("likelihood at the fit beats the projected linear start") {
  TomographyData d = simulate_counts(werner_mix(0.9), 5000, 77);
  MleResult res = mle_reconstruct(d);
  Mat4c start = project_to_physical(linear_reconstruct(d));
  double total_p = 0.0, total_n = 0.0;
  for (const auto& s : standard_settings())
    total_p += std::max(0.0, (s.ket.adjoint() * start * s.ket)(0).real());
  for (const auto& r : d.records) total_n += r.count;
  double start_ll = counts_log_likelihood(start, total_n / total_p, d);
  CHECK(res.log_likelihood >= start_ll - 1e-9);
}

TEST_CASE("reconstruction ignores the order of the count table") {
  TomographyData d = simulate_counts(werner_mix(0.92), 8000, 55);
  TomographyData shuffled = d;
  std::reverse(shuffled.records.begin(), shuffled.records.end());
  std::swap(shuffled.records[2], shuffled.records[9]);
  Mat4c a = mle_reconstruct(d).state.rho();
  Mat4c b = mle_reconstruct(shuffled).state.rho();
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("pure-target fidelity is linear in the state") {
  Vec4c target = singlet_state();
  Mat4c r1 = werner_mix(0.9).rho();
  Mat4c r2 = postselected_state(2.0).rho();
  double a = 0.37;
  double mixed = fidelity_to_pure(a * r1 + (1 - a) * r2, target);
  double split = a * fidelity_to_pure(r1, target) + (1 - a) * fidelity_to_pure(r2, target);
  CHECK(mixed == doctest::Approx(split).epsilon(1e-12));
}

TEST_CASE("overlap fidelity agrees with the general formula on pure targets") {
  Mat4c rho = werner_mix(0.85).rho();
  Vec4c target = singlet_state();
  Mat4c target_rho = target * target.adjoint();
  CHECK(uhlmann_fidelity(rho, target_rho) ==
        doctest::Approx(fidelity_to_pure(rho, target)).epsilon(1e-9));
  CHECK(uhlmann_fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(uhlmann_fidelity(rho, target_rho) ==
        doctest::Approx(uhlmann_fidelity(target_rho, rho)).epsilon(1e-9));
  Mat4c triplet = postselected_state(kPi).rho();
  CHECK(uhlmann_fidelity(target_rho, triplet) < 1e-9);
}

TEST_CASE("concurrence tracks the mixing weight") {
  CHECK(concurrence(postselected_state(0.0).rho()) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(concurrence(werner_mix(0.966).rho()) == doctest::Approx(0.949).epsilon(1e-3));
  for (double v : {0.5, 0.8})
    CHECK(concurrence(werner_mix(v).rho()) ==
          doctest::Approx((3 * v - 1) / 2).epsilon(1e-9));
  CHECK(concurrence(werner_mix(1.0 / 3.0).rho()) == doctest::Approx(0.0).epsilon(1e-9));
  Mat4c hh = Mat4c::Zero();
  hh(0, 0) = 1.0;
  CHECK(concurrence(hh) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("state metrics summarize the spectrum") {
  StateMetrics m = state_metrics(werner_mix(0.0).rho());
  CHECK(m.purity == doctest::Approx(0.25).epsilon(1e-12));
  for (double ev : m.eigenvalues) CHECK(ev == doctest::Approx(0.25).epsilon(1e-12));
  StateMetrics s = state_metrics(postselected_state(0.0).rho());
  CHECK(s.purity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.concurrence == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::is_sorted(s.eigenvalues.rbegin(), s.eigenvalues.rend()));
}

TEST_CASE("fidelity error bars are reproducible and positive") {
  TomographyData d = simulate_counts(werner_mix(0.95), 4000, 888);
  FidelityEstimate a = fidelity_with_sigma(d, singlet_state(), 32, 5);
  FidelityEstimate b = fidelity_with_sigma(d, singlet_state(), 32, 5);
  CHECK(a.fidelity == b.fidelity);
  CHECK(a.sigma == b.sigma);
  CHECK(a.sigma > 0.0);
  double point = fidelity_to_pure(mle_reconstruct(d).state.rho(), singlet_state());
  CHECK(std::abs(a.fidelity - point) < 1e-9);
}

TEST_CASE("bundled reference matrix carries its quoted metrics") {
  Mat4c rho = reference_density_matrix();
  CHECK(std::abs(rho.trace().real() - 1.0001) < 1e-12);
  CHECK((rho - rho.adjoint()).norm() < 1e-12);
  TwoQubitState s = TwoQubitState::from_matrix_relaxed(rho);
  double f = fidelity_to_pure(s.rho(), singlet_state());
  CHECK(std::abs(f - 0.9178) < 5e-4);
  CHECK(std::sqrt(f) == doctest::Approx(0.958).epsilon(1e-3));
}

TEST_CASE("random density matrices are proper states") {
  Rng rng(99);
  for (int i = 0; i < 50; ++i) {
    Mat4c rho = random_density_matrix(rng);
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat4c> es(rho);
    CHECK(es.eigenvalues().minCoeff() > 0.0); // full rank almost surely
  }
}
