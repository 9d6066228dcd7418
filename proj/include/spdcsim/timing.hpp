#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace spdcsim {

struct SourceConfig {
  double pump_power_mw = 7.0;
  double rate_coefficient = 44.8125; // generated pairs per s per mW
  double linewidth_mhz = 15.0;
  double duty_cycle = 0.5;          // fraction of wall time spent detecting
  double detector_efficiency = 1.0; // folded per-channel efficiency
  double dark_rate_hz = 100.0;      // per channel, gated by the duty cycle
  double digitizer_resolution_ns = 1.0;
  double coincidence_window_ns = 100.0;

  // Throws std::invalid_argument. The resolution must be a whole number of
  // ns so quantized timestamps stay integral.
  void validate() const;
};

// pump power times the linear rate coefficient.
double pair_rate(double power_mw, double coeff);

struct EventRecord {
  int channel = 1; // 1 = SPD1 (start), 2 = SPD2 (stop)
  std::int64_t timestamp_ns = 0;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

// Sorted by (timestamp, channel).
using EventStream = std::vector<EventRecord>;

struct GenerationSummary {
  long long pairs_generated = 0;   // Poisson pair draws within duty windows
  long long pairs_split = 0;       // left on opposite splitter ports
  long long pairs_detected = 0;    // both photons survived the efficiency cut
  long long dark_counts = 0;       // both channels combined
  double expected_coincidences = 0.0;
};

// Monte-Carlo stream: Poisson pair arrivals at pair_rate * duty_cycle, 50/50
// routing with same-port pairs dropped, two-sided exponential inter-photon
// delay exp(-2 pi dnu |t|), per-photon efficiency thinning, duty-gated dark
// counts, timestamps quantized to the digitizer resolution. Deterministic
// per seed. Photons whose quantized time falls before acquisition start are
// dropped.
EventStream generate_events(const SourceConfig& cfg, double duration_s, std::uint64_t seed,
                            GenerationSummary* summary = nullptr);

// One record per line, "channel,timestamp_ns", LF, no header. Read errors
// carry the 1-based line number; records are sorted after reading.
EventStream read_events(std::istream& is);
void write_events(const EventStream& stream, std::ostream& os);

struct Histogram {
  double bin_ns = 1.0;
  double window_ns = 100.0;
  int half_bins = 0;                   // bins span [-half_bins, +half_bins]
  std::vector<long long> counts;       // size 2 * half_bins + 1

  double center_ns(int i) const { return (i - half_bins) * bin_ns; }
  long long total() const;
};

// Start-stop delays (SPD2 minus SPD1) within +-window, binned around zero.
// Requires 1 <= bin <= window. OpenMP over start events; per-thread
// accumulation keeps the result independent of thread count.
Histogram coincidence_histogram(const EventStream& stream, double window_ns, double bin_ns);

// Single-threaded reference; identical results.
Histogram coincidence_histogram_serial(const EventStream& stream, double window_ns,
                                       double bin_ns);

// CSV: delay_ns,count
void write_histogram_csv(const Histogram& hist, std::ostream& os);

struct HistogramFit {
  double amplitude = 0.0;
  double baseline = 0.0;
  double delta_nu_mhz = 0.0;
  double fwhm_ns = 0.0; // ln 2 / (pi delta_nu)
  double center_ns = 0.0;
  bool converged = false;
  std::string diagnostic;
};

// Least squares of A exp(-2 pi dnu |t - t0|) + b over the histogram bins:
// amplitude and baseline solved linearly, (t0, dnu) by simplex search.
// Requires at least 10 nonempty bins. A peak indistinguishable from the
// baseline noise clears `converged` instead of throwing.
HistogramFit fit_correlation(const Histogram& hist);

// c / delta_nu in meters.
double coherence_length_m(double delta_nu_mhz);

// v0 * exp(-path_diff / l0).
double mz_visibility(double path_diff_m, double v0, double l0_m);

struct VisibilityFit {
  double v0 = 0.0;
  double l0_m = 0.0; // +infinity when the data do not decay
  bool decaying = true;
};

// Log-space least squares of v0 * exp(-L / l0) through (path difference,
// visibility) points; at least 2 points, visibilities positive.
VisibilityFit fit_visibility(std::span<const std::pair<double, double>> points);

} // namespace spdcsim
