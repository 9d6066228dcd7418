#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "spdcsim/constants.hpp"
#include "spdcsim/spectrum.hpp"

using namespace spdcsim;

TEST_CASE("mode weight rejects the degenerate index") {
  CavityConfig cfg;
  CHECK_THROWS_AS(mode_weight(0, cfg), std::invalid_argument);
  CHECK_THROWS_AS(mode_weight(-3, cfg), std::invalid_argument);
}

TEST_CASE("mode weight stays within (0, 4]") {
  CavityConfig cfg;
  for (int m = 1; m <= 500; ++m) {
    double w = mode_weight(m, cfg);
    CHECK(w > 0.0);
    CHECK(w <= 4.0);
  }
}

TEST_CASE("mode weight matches the Airy form at small m") {
  CavityConfig cfg;
  auto expect = [&](int m) {
    double s = std::sin(kPi * m * cfg.delta_fsr_mhz() / cfg.weight_fsr_mhz());
    return 4.0 / (1.0 + 4.0 * cfg.finesse * cfg.finesse / (kPi * kPi) * s * s);
  };
  CHECK(mode_weight(1, cfg) == doctest::Approx(expect(1)).epsilon(1e-14));
  CHECK(mode_weight(7, cfg) == doctest::Approx(expect(7)).epsilon(1e-14));
  CHECK(mode_weight(100, cfg) == doctest::Approx(expect(100)).epsilon(1e-14));
}

TEST_CASE("mode weight is periodic when the FSR ratio is an integer") {
  CavityConfig cfg;
  cfg.fsr_h_mhz = 1300.0;
  cfg.fsr_v_mhz = 1313.0; // walk-off 13, period 1300/13 = 100
  for (int m = 1; m <= 5; ++m)
    CHECK(mode_weight(m, cfg) == doctest::Approx(mode_weight(m + 100, cfg)).epsilon(1e-12));
}

TEST_CASE("three-mode sum lands near 1.40") {
  CavityConfig cfg;
  cfg.mode_count_n = 3;
  double mu = multimode_ratio(build_comb(cfg));
  CHECK(mu == doctest::Approx(1.40).epsilon(0.01));
  double by_hand = mode_weight(1, cfg) + mode_weight(2, cfg) + mode_weight(3, cfg);
  CHECK(mu == doctest::Approx(by_hand).epsilon(1e-14));
}

TEST_CASE("hundred-mode ratio reproduces the frozen value") {
  CavityConfig cfg;
  double mu = multimode_ratio(build_comb(cfg));
  CHECK(mu == doctest::Approx(1.8558904185023415).epsilon(1e-12));
  CHECK(std::abs(mu - 1.87) < 0.05);
}

TEST_CASE("ratio grows with mode count and shrinks with finesse") {
  CavityConfig cfg;
  double prev = 0.0;
  for (int n : {1, 5, 20, 100, 300}) {
    cfg.mode_count_n = n;
    double mu = multimode_ratio(build_comb(cfg));
    CHECK(mu >= prev);
    prev = mu;
  }
  cfg.mode_count_n = 100;
  double mu_base = multimode_ratio(build_comb(cfg));
  cfg.finesse = 200.0;
  CHECK(multimode_ratio(build_comb(cfg)) < mu_base);
}

TEST_CASE("empty comb has ratio zero") {
  CavityConfig cfg;
  cfg.mode_count_n = 0;
  ModeComb comb = build_comb(cfg);
  CHECK(comb.pairs.size() == 1);
  CHECK(multimode_ratio(comb) == 0.0);
}

TEST_CASE("comb layout: degenerate first, four branches per index") {
  CavityConfig cfg;
  cfg.mode_count_n = 6;
  ModeComb comb = build_comb(cfg);
  REQUIRE(comb.pairs.size() == 25);
  CHECK(comb.pairs[0].branch == Branch::degenerate);
  CHECK(comb.pairs[0].m == 0);
  CHECK(comb.pairs[0].relative_weight == 1.0);
  for (int m = 1; m <= 6; ++m) {
    double w = mode_weight(m, cfg);
    double sum = 0.0;
    for (const auto& p : comb.pairs) {
      if (p.m != m) continue;
      CHECK(p.relative_weight == doctest::Approx(w / 4.0).epsilon(1e-14));
      sum += p.relative_weight;
    }
    CHECK(sum == doctest::Approx(w).epsilon(1e-14));
  }
}

TEST_CASE("signal and idler offsets cancel pairwise") {
  CavityConfig cfg;
  cfg.mode_count_n = 40;
  for (const auto& p : build_comb(cfg).pairs) {
    CHECK(p.offset_signal_mhz + p.offset_idler_mhz == 0.0);
    if (p.branch == Branch::degenerate) continue;
    double spacing = (p.branch == Branch::h_comb_plus || p.branch == Branch::h_comb_minus)
                         ? cfg.fsr_h_mhz
                         : cfg.fsr_v_mhz;
    CHECK(std::abs(p.offset_signal_mhz) == doctest::Approx(p.m * spacing).epsilon(1e-12));
  }
}

TEST_CASE("linewidth is fsr over finesse") {
  CavityConfig cfg;
  CHECK(cavity_linewidth_mhz(cfg) == doctest::Approx(14.68).epsilon(1e-12));
  cfg.fsr_h_mhz = 1468.0;
  cfg.finesse = 1468.0;
  CHECK(cavity_linewidth_mhz(cfg) == doctest::Approx(1.0).epsilon(1e-12));
  cfg.finesse = 1e15;
  CHECK(cavity_linewidth_mhz(cfg) < 1e-9);
}

TEST_CASE("round trip time inverts the mean free spectral range") {
  CavityConfig cfg;
  CHECK(round_trip_time_ps(cfg) == doctest::Approx(1e6 / 1474.5).epsilon(1e-12));
  CHECK(std::abs(round_trip_time_ps(cfg) - 678.196) < 0.001);
  cfg.fsr_h_mhz = 1000.0;
  cfg.fsr_v_mhz = 1000.0;
  CHECK(round_trip_time_ps(cfg) == doctest::Approx(1000.0).epsilon(1e-12));
  cfg.fsr_h_mhz = 2000.0;
  cfg.fsr_v_mhz = 2000.0;
  CHECK(round_trip_time_ps(cfg) == doctest::Approx(500.0).epsilon(1e-12));
}

TEST_CASE("weight fsr switch picks the intended comb spacing") {
  CavityConfig cfg;
  CHECK(cfg.weight_fsr_mhz() == 1468.0);
  cfg.weight_fsr = WeightFsr::fsr_v;
  CHECK(cfg.weight_fsr_mhz() == 1481.0);
  cfg.weight_fsr = WeightFsr::mean;
  CHECK(cfg.weight_fsr_mhz() == doctest::Approx(1474.5));
  CHECK(cfg.delta_fsr_mhz() == doctest::Approx(13.0));
}

TEST_CASE("config validation rejects bad fields") {
  CavityConfig cfg;
  cfg.finesse = 1.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), "cavity: finesse must exceed 1", std::invalid_argument);
  cfg = CavityConfig{};
  cfg.fsr_h_mhz = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = CavityConfig{};
  cfg.mode_count_n = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = CavityConfig{};
  cfg.phase_matching_bandwidth_ghz = -3.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_NOTHROW(CavityConfig{}.validate());
}

TEST_CASE("comb csv carries one line per pair plus header") {
  CavityConfig cfg;
  cfg.mode_count_n = 2;
  std::ostringstream os;
  write_comb_csv(build_comb(cfg), os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "m,branch,offset_signal_MHz,relative_weight");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 9);
}

TEST_CASE("branch names are distinct and printable") {
  CHECK(to_string(Branch::degenerate) != to_string(Branch::h_comb_plus));
  CHECK(to_string(Branch::v_comb_minus) != to_string(Branch::v_comb_plus));
  CHECK(!to_string(Branch::h_comb_minus).empty());
}
