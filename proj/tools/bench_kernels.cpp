#include <chrono>
#include <cstdio>
#include <vector>

#include <omp.h>

#include "spdcsim/config.hpp"
#include "spdcsim/constants.hpp"
#include "spdcsim/filters.hpp"
#include "spdcsim/polarization.hpp"
#include "spdcsim/rng.hpp"
#include "spdcsim/spectrum.hpp"
#include "spdcsim/timing.hpp"
#include "spdcsim/tomography.hpp"

using namespace spdcsim;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double timed(F&& f) {
  const double t0 = now_ms();
  f();
  return now_ms() - t0;
}

void row(const char* name, double serial_ms, double parallel_ms, bool match) {
  std::printf("%-36s %10.1f ms %10.1f ms   x%-5.2f %s\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms, match ? "identical" : "MISMATCH");
}

} // namespace

int main() {
  std::printf("threads available: %d\n", omp_get_max_threads());
  std::printf("%-36s %13s %13s   %-6s %s\n", "kernel", "serial", "parallel", "speedup",
              "results");

  // Large event stream: ~7e5 pairs plus darks.
  {
    SourceConfig src;
    src.pump_power_mw = 400.0;
    GenerationSummary sum;
    const EventStream events = generate_events(src, 80.0, 7, &sum);
    Histogram hs, hp;
    const double ts = timed([&] { hs = coincidence_histogram_serial(events, 100.0, 1.0); });
    const double tp = timed([&] { hp = coincidence_histogram(events, 100.0, 1.0); });
    row("coincidence histogram, 7e5 events", ts, tp, hs.counts == hp.counts);
  }

  // Exhaustive filter design over 20 candidate lengths, 5-etalon stacks.
  {
    const ModeComb comb = build_comb(CavityConfig{});
    std::vector<double> lengths;
    for (int i = 0; i < 20; ++i) lengths.push_back(1.0 + 0.6 * i);
    EtalonStack best_s, best_p;
    const double ts = timed([&] { best_s = design_stack_serial(comb, lengths, 5, 0.4); });
    const double tp = timed([&] { best_p = design_stack(comb, lengths, 5, 0.4); });
    bool match = best_s.etalons.size() == best_p.etalons.size();
    for (std::size_t i = 0; match && i < best_s.etalons.size(); ++i)
      match = best_s.etalons[i].length_mm == best_p.etalons[i].length_mm;
    row("filter design, 42504 stacks", ts, tp, match);
  }

  // Fringe visibility error bar from Poisson resampling.
  {
    std::vector<double> angles(25);
    for (std::size_t i = 0; i < angles.size(); ++i)
      angles[i] = static_cast<double>(i) * kPi / 24.0;
    const auto scan = fringe_scan(werner_mix(0.97), 0.0, angles, 20000, 11);
    FringeFit fs, fp;
    const int max_threads = omp_get_max_threads();
    omp_set_num_threads(1);
    const double ts = timed([&] { fs = fit_fringe(scan, 20000, 3); });
    omp_set_num_threads(max_threads);
    const double tp = timed([&] { fp = fit_fringe(scan, 20000, 3); });
    row("fringe resampling, 2e4 replays", ts, tp,
        fs.visibility_sigma == fp.visibility_sigma);
  }

  // Tomography fidelity error bar: every resample is a full refit.
  {
    const auto data = simulate_counts(werner_mix(0.95), 10000, 5);
    FidelityEstimate es, ep;
    const int max_threads = omp_get_max_threads();
    omp_set_num_threads(1);
    const double ts = timed([&] { es = fidelity_with_sigma(data, singlet_state(), 64, 9); });
    omp_set_num_threads(max_threads);
    const double tp = timed([&] { ep = fidelity_with_sigma(data, singlet_state(), 64, 9); });
    row("tomography error bar, 64 refits", ts, tp,
        es.fidelity == ep.fidelity && es.sigma == ep.sigma);
  }
  return 0;
}
