#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "spdcsim/constants.hpp"
#include "spdcsim/filters.hpp"

using namespace spdcsim;

namespace {

ModeComb default_comb() { return build_comb(CavityConfig{}); }

EtalonSpec plain(double length_mm) {
  EtalonSpec e;
  e.length_mm = length_mm;
  return e;
}

} // namespace

TEST_CASE("reflectivity-limited finesse") {
  CHECK(ideal_finesse(0.90) == doctest::Approx(kPi * std::sqrt(0.90) / 0.10).epsilon(1e-14));
  CHECK(ideal_finesse(0.90) == doctest::Approx(29.8).epsilon(0.01));
  CHECK_THROWS_WITH_AS(ideal_finesse(1.0), "etalon: reflectivity must lie in (0, 1)",
                       std::invalid_argument);
  CHECK_THROWS_AS(ideal_finesse(0.0), std::invalid_argument);
}

TEST_CASE("etalon free spectral range from optical length") {
  CHECK(plain(5.4).fsr_mhz() == doctest::Approx(19.16e3).epsilon(0.003));
  CHECK(plain(2.1).fsr_mhz() == doctest::Approx(49.26e3).epsilon(0.003));
  EtalonSpec huge;
  huge.refractive_index = 1.0;
  huge.length_mm = kSpeedOfLight / 2.0 * 1e3; // c/2 meters
  CHECK(huge.fsr_mhz() == doctest::Approx(1e-6).epsilon(1e-12)); // 1 Hz
}

TEST_CASE("finesse override wins over the coating value") {
  EtalonSpec e;
  CHECK(e.effective_finesse() == 25.0);
  e.finesse_override.reset();
  CHECK(e.effective_finesse() == doctest::Approx(ideal_finesse(0.90)).epsilon(1e-14));
}

TEST_CASE("transmission peaks at the detuning and drops by the Airy factor") {
  EtalonSpec e;
  CHECK(etalon_transmission(e, 0.0) == doctest::Approx(e.peak_transmittance).epsilon(1e-14));
  double half_fsr = e.fsr_mhz() / 2.0;
  double dip = e.peak_transmittance / (1.0 + std::pow(2.0 * 25.0 / kPi, 2));
  CHECK(etalon_transmission(e, half_fsr) == doctest::Approx(dip).epsilon(1e-10));
  CHECK(etalon_transmission(e, half_fsr) ==
        doctest::Approx(e.peak_transmittance / 254.3).epsilon(1e-3));

  e.detuning_mhz = 123.0;
  CHECK(etalon_transmission(e, 123.0) == doctest::Approx(e.peak_transmittance).epsilon(1e-14));
  CHECK(etalon_transmission(e, 123.0 + 40.0) ==
        doctest::Approx(etalon_transmission(e, 123.0 - 40.0)).epsilon(1e-12));
}

TEST_CASE("transmission is periodic in the free spectral range") {
  EtalonSpec e;
  double fsr = e.fsr_mhz();
  for (double d : {7.0, 311.0, 5000.0})
    CHECK(etalon_transmission(e, d) == doctest::Approx(etalon_transmission(e, d + fsr)).epsilon(1e-9));
}

TEST_CASE("default stack multiplies out to the measured peak") {
  EtalonStack stack = default_stack();
  REQUIRE(stack.etalons.size() == 5);
  std::vector<double> lengths;
  for (const auto& e : stack.etalons) lengths.push_back(e.length_mm);
  std::sort(lengths.begin(), lengths.end());
  CHECK(lengths == std::vector<double>{2.1, 5.4, 5.4, 7.5, 7.5});
  CHECK(stack.peak_transmission() == doctest::Approx(0.40).epsilon(1e-12));
  CHECK(stack_transmission(stack, 0.0) == doctest::Approx(0.40).epsilon(1e-12));
}

TEST_CASE("stack transmission is a product and rejects an empty stack") {
  EtalonStack stack = default_stack();
  double prod = 1.0;
  for (const auto& e : stack.etalons) prod *= etalon_transmission(e, 777.0);
  CHECK(stack_transmission(stack, 777.0) == doctest::Approx(prod).epsilon(1e-14));

  EtalonStack empty;
  CHECK_THROWS_WITH_AS(stack_transmission(empty, 0.0),
                       "stack: transmission of an empty stack is undefined",
                       std::invalid_argument);

  EtalonStack ideal;
  ideal.etalons.push_back(plain(5.4));
  ideal.etalons.back().peak_transmittance = 1.0;
  CHECK(stack_transmission(ideal, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  for (double d : {100.0, 900.0, 12345.0})
    CHECK(stack_transmission(stack, d) <= stack.peak_transmission() + 1e-15);
}

TEST_CASE("filtered ratio reproduces the frozen suppression numbers") {
  ModeComb comb = default_comb();
  EtalonStack stack = default_stack();
  double singles = filtered_ratio(comb, stack);
  double coinc = filtered_coincidence_ratio(comb, stack);
  CHECK(singles == doctest::Approx(5.3685493234557095e-06).epsilon(1e-12));
  CHECK(coinc == doctest::Approx(2.49138671273473e-08).epsilon(1e-12));
  CHECK(singles / 5.4e-6 < 10.0);
  CHECK(5.4e-6 / singles < 10.0);
  CHECK(coinc < singles);
}

TEST_CASE("filtering never amplifies the comb") {
  ModeComb comb = default_comb();
  EtalonStack stack = default_stack();
  double mu = multimode_ratio(comb);
  CHECK(filtered_ratio(comb, stack) <= mu);
  CHECK(filtered_coincidence_ratio(comb, stack) <= mu);
}

TEST_CASE("adding an on-resonance etalon never raises the leakage") {
  ModeComb comb = default_comb();
  EtalonStack stack;
  stack.etalons.push_back(plain(5.4));
  double one = filtered_ratio(comb, stack);
  stack.etalons.push_back(plain(7.5));
  double two = filtered_ratio(comb, stack);
  CHECK(two <= one + 1e-15);
  EtalonStack grown = default_stack();
  double five = filtered_ratio(comb, grown);
  grown.etalons.push_back(plain(3.3));
  CHECK(filtered_ratio(comb, grown) <= five + 1e-15);
}

TEST_CASE("empty stack is a bypass") {
  ModeComb comb = default_comb();
  EtalonStack empty;
  CHECK(filtered_ratio(comb, empty) == doctest::Approx(multimode_ratio(comb)).epsilon(1e-14));
  CHECK(filtered_coincidence_ratio(comb, empty) ==
        doctest::Approx(multimode_ratio(comb)).epsilon(1e-14));
}

TEST_CASE("degenerate-only comb leaks nothing") {
  CavityConfig cfg;
  cfg.mode_count_n = 0;
  CHECK(filtered_ratio(build_comb(cfg), default_stack()) == 0.0);
}

TEST_CASE("blocked degenerate line is an error") {
  ModeComb comb = default_comb();
  EtalonStack stack = default_stack();
  stack.etalons[0].detuning_mhz = stack.etalons[0].fsr_mhz() / 2.0;
  // heavily suppressed but nonzero, still fine
  CHECK_NOTHROW(filtered_ratio(comb, stack));
  // a sharp enough notch drives T(0) to exactly zero
  stack.etalons[0].finesse_override = 1e200;
  CHECK_THROWS_WITH_AS(filtered_ratio(comb, stack),
                       "stack: degenerate mode is blocked, T(0) = 0", std::invalid_argument);
}

TEST_CASE("leakage table sums to the two ratios") {
  ModeComb comb = default_comb();
  EtalonStack stack = default_stack();
  auto rows = leakage_table(comb, stack);
  REQUIRE(rows.size() == 100);
  double singles = 0.0, coinc = 0.0, weight = 0.0;
  int prev_m = 0;
  for (const auto& r : rows) {
    CHECK(r.m == prev_m + 1);
    prev_m = r.m;
    singles += r.singles;
    coinc += r.coincidence;
    weight += r.weight;
  }
  CHECK(singles == doctest::Approx(filtered_ratio(comb, stack)).epsilon(1e-12));
  CHECK(coinc == doctest::Approx(filtered_coincidence_ratio(comb, stack)).epsilon(1e-12));
  CHECK(weight == doctest::Approx(multimode_ratio(comb)).epsilon(1e-12));
}

TEST_CASE("leakage csv shape") {
  auto rows = leakage_table(default_comb(), default_stack());
  std::ostringstream os;
  write_leakage_csv(rows, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "m,weight,singles_ratio,coincidence_ratio");
  int n = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++n;
  CHECK(n == 100);
}

TEST_CASE("transmission sweep csv covers the requested span") {
  std::ostringstream os;
  write_transmission_csv(default_stack(), 50.0, 10.0, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "detuning_MHz,T");
  std::vector<std::string> rows;
  while (std::getline(is, line))
    if (!line.empty()) rows.push_back(line);
  CHECK(rows.size() == 11); // -50..50 step 10
  CHECK(rows.front().substr(0, 3) == "-50");
  CHECK_THROWS_AS(write_transmission_csv(default_stack(), -1.0, 1.0, os),
                  std::invalid_argument);
}

TEST_CASE("etalon validation messages") {
  EtalonSpec e;
  e.length_mm = 0.0;
  CHECK_THROWS_WITH_AS(e.validate(), "etalon: length must be positive", std::invalid_argument);
  e = EtalonSpec{};
  e.refractive_index = 0.9;
  CHECK_THROWS_AS(e.validate(), std::invalid_argument);
  e = EtalonSpec{};
  e.peak_transmittance = 1.5;
  CHECK_THROWS_AS(e.validate(), std::invalid_argument);
  e = EtalonSpec{};
  e.finesse_override = -2.0;
  CHECK_THROWS_AS(e.validate(), std::invalid_argument);
  CHECK_NOTHROW(default_stack().validate());
  CHECK_NOTHROW(EtalonStack{}.validate()); // bypass allowed
}

TEST_CASE("single-candidate design fills the stack with that length") {
  ModeComb comb = default_comb();
  std::vector<double> cands{5.4};
  EtalonStack best = design_stack(comb, cands, 5, 0.4);
  REQUIRE(best.etalons.size() == 5);
  for (const auto& e : best.etalons) {
    CHECK(e.length_mm == 5.4);
    CHECK(e.peak_transmittance == doctest::Approx(std::pow(0.4, 0.2)).epsilon(1e-12));
  }
  CHECK(best.peak_transmission() == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("design over the published lengths beats the published stack") {
  ModeComb comb = default_comb();
  std::vector<double> cands{5.4, 7.5, 2.1};
  EtalonStack best = design_stack(comb, cands, 5, 0.4);
  CHECK(filtered_ratio(comb, best) <= filtered_ratio(comb, default_stack()) + 1e-18);
}

TEST_CASE("design result ignores candidate order and matches the serial search") {
  ModeComb comb = default_comb();
  std::vector<double> a{5.4, 7.5, 2.1, 3.3};
  std::vector<double> b{3.3, 2.1, 7.5, 5.4};
  EtalonStack sa = design_stack(comb, a, 3, 0.5);
  EtalonStack sb = design_stack(comb, b, 3, 0.5);
  EtalonStack ss = design_stack_serial(comb, a, 3, 0.5);
  REQUIRE(sa.etalons.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(sa.etalons[i].length_mm == sb.etalons[i].length_mm);
    CHECK(sa.etalons[i].length_mm == ss.etalons[i].length_mm);
  }
  CHECK(filtered_ratio(comb, sa) == doctest::Approx(filtered_ratio(comb, ss)).epsilon(1e-15));
}

TEST_CASE("design rejects impossible requests") {
  ModeComb comb = default_comb();
  std::vector<double> cands{5.4};
  CHECK_THROWS_WITH_AS(design_stack(comb, cands, 0, 0.4),
                       "design: etalon count must be positive", std::invalid_argument);
  CHECK_THROWS_WITH_AS(design_stack(comb, {}, 3, 0.4), "design: no candidate lengths",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(design_stack(comb, cands, 3, 1.2),
                       "design: peak budget above 1 is infeasible", std::runtime_error);
  std::vector<double> bad{5.4, -1.0};
  CHECK_THROWS_AS(design_stack(comb, bad, 2, 0.4), std::invalid_argument);
}
