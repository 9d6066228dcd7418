#include "spdcsim/timing.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "spdcsim/constants.hpp"
#include "spdcsim/optim.hpp"
#include "spdcsim/rng.hpp"

namespace spdcsim {

void SourceConfig::validate() const {
  if (!(pump_power_mw >= 0.0)) throw std::invalid_argument("source: pump power must be >= 0");
  if (!(rate_coefficient > 0.0)) throw std::invalid_argument("source: rate coefficient must be > 0");
  if (!(linewidth_mhz > 0.0)) throw std::invalid_argument("source: linewidth must be > 0");
  if (!(duty_cycle > 0.0 && duty_cycle <= 1.0))
    throw std::invalid_argument("source: duty cycle must be in (0, 1]");
  if (!(detector_efficiency >= 0.0 && detector_efficiency <= 1.0))
    throw std::invalid_argument("source: detector efficiency must be in [0, 1]");
  if (!(dark_rate_hz >= 0.0)) throw std::invalid_argument("source: dark rate must be >= 0");
  if (!(digitizer_resolution_ns >= 1.0 &&
        digitizer_resolution_ns == std::floor(digitizer_resolution_ns)))
    throw std::invalid_argument("source: digitizer resolution must be a whole number of ns");
  if (!(coincidence_window_ns > 0.0))
    throw std::invalid_argument("source: coincidence window must be > 0");
}

double pair_rate(double power_mw, double coeff) {
  if (!(power_mw >= 0.0)) throw std::invalid_argument("pair rate: power must be >= 0");
  if (!(coeff > 0.0)) throw std::invalid_argument("pair rate: coefficient must be > 0");
  return power_mw * coeff;
}

namespace {

void quantize_push(EventStream& out, int channel, double t_ns, double res_ns) {
  const long long q = std::llround(t_ns / res_ns);
  if (q < 0) return;
  out.push_back({channel, q * static_cast<std::int64_t>(res_ns)});
}

} // namespace

EventStream generate_events(const SourceConfig& cfg, double duration_s, std::uint64_t seed,
                            GenerationSummary* summary) {
  cfg.validate();
  if (!(duration_s > 0.0)) throw std::invalid_argument("generate: duration must be > 0");

  Rng rng(seed);
  const double live_s = duration_s * cfg.duty_cycle;
  const double rate = pair_rate(cfg.pump_power_mw, cfg.rate_coefficient);
  const double span_ns = duration_s * 1e9;
  // Laplace scale of the inter-photon delay for a Lorentzian line.
  const double b_ns = 1e3 / (2.0 * kPi * cfg.linewidth_mhz);

  std::poisson_distribution<long long> pair_count(rate * live_s);
  std::uniform_real_distribution<double> uni01(0.0, 1.0);
  std::bernoulli_distribution detect(cfg.detector_efficiency);

  GenerationSummary sum;
  sum.pairs_generated = pair_count(rng);
  sum.expected_coincidences =
      rate * live_s * cfg.detector_efficiency * cfg.detector_efficiency * 0.5;

  EventStream events;
  events.reserve(static_cast<std::size_t>(sum.pairs_generated) + 16);

  for (long long i = 0; i < sum.pairs_generated; ++i) {
    const double t1 = uni01(rng) * span_ns;
    const bool port_a = uni01(rng) < 0.5;
    const bool port_b = uni01(rng) < 0.5;
    if (port_a == port_b) continue; // both photons left on the same splitter port
    ++sum.pairs_split;
    const double u = uni01(rng) - 0.5;
    const double delay = -b_ns * (u < 0.0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(u));
    const bool keep1 = detect(rng);
    const bool keep2 = detect(rng);
    if (keep1 && keep2) ++sum.pairs_detected;
    if (keep1) quantize_push(events, 1, t1, cfg.digitizer_resolution_ns);
    if (keep2) quantize_push(events, 2, t1 + delay, cfg.digitizer_resolution_ns);
  }

  std::poisson_distribution<long long> dark_count(cfg.dark_rate_hz * live_s);
  for (int channel = 1; channel <= 2; ++channel) {
    const long long n = dark_count(rng);
    sum.dark_counts += n;
    for (long long i = 0; i < n; ++i)
      quantize_push(events, channel, uni01(rng) * span_ns, cfg.digitizer_resolution_ns);
  }

  std::sort(events.begin(), events.end(), [](const EventRecord& a, const EventRecord& b) {
    return a.timestamp_ns != b.timestamp_ns ? a.timestamp_ns < b.timestamp_ns
                                            : a.channel < b.channel;
  });
  if (summary) *summary = sum;
  return events;
}

EventStream read_events(std::istream& is) {
  EventStream out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("events line " + std::to_string(lineno) +
                                  ": expected channel,timestamp_ns");
    int channel = 0;
    {
      const char* first = line.data();
      const char* last = line.data() + comma;
      auto [p, ec] = std::from_chars(first, last, channel);
      if (ec != std::errc{} || p != last || (channel != 1 && channel != 2))
        throw std::invalid_argument("events line " + std::to_string(lineno) +
                                    ": channel must be 1 or 2");
    }
    std::int64_t ts = 0;
    {
      const char* first = line.data() + comma + 1;
      const char* last = line.data() + line.size();
      auto [p, ec] = std::from_chars(first, last, ts);
      if (ec != std::errc{} || p != last)
        throw std::invalid_argument("events line " + std::to_string(lineno) +
                                    ": bad timestamp");
      if (ts < 0)
        throw std::invalid_argument("events line " + std::to_string(lineno) +
                                    ": negative timestamp");
    }
    out.push_back({channel, ts});
  }
  std::sort(out.begin(), out.end(), [](const EventRecord& a, const EventRecord& b) {
    return a.timestamp_ns != b.timestamp_ns ? a.timestamp_ns < b.timestamp_ns
                                            : a.channel < b.channel;
  });
  return out;
}

void write_events(const EventStream& stream, std::ostream& os) {
  for (const auto& e : stream) os << e.channel << ',' << e.timestamp_ns << '\n';
}

long long Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0LL);
}

namespace {

Histogram histogram_impl(const EventStream& stream, double window_ns, double bin_ns,
                         bool parallel) {
  if (!(bin_ns >= 1.0))
    throw std::invalid_argument("histogram: bin must be at least 1 ns");
  if (!(bin_ns <= window_ns))
    throw std::invalid_argument("histogram: bin must not exceed the window");

  std::vector<std::int64_t> starts, stops;
  for (const auto& e : stream) (e.channel == 1 ? starts : stops).push_back(e.timestamp_ns);
  std::sort(starts.begin(), starts.end());
  std::sort(stops.begin(), stops.end());

  Histogram h;
  h.bin_ns = bin_ns;
  h.window_ns = window_ns;
  h.half_bins = static_cast<int>(std::floor(window_ns / bin_ns));
  h.counts.assign(2 * static_cast<std::size_t>(h.half_bins) + 1, 0);

  const auto n = static_cast<std::int64_t>(starts.size());
#pragma omp parallel if (parallel)
  {
    std::vector<long long> local(h.counts.size(), 0);
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t t1 = starts[static_cast<std::size_t>(i)];
      const auto lo = static_cast<std::int64_t>(std::ceil(t1 - window_ns));
      const auto hi = static_cast<std::int64_t>(std::floor(t1 + window_ns));
      auto it = std::lower_bound(stops.begin(), stops.end(), lo);
      for (; it != stops.end() && *it <= hi; ++it) {
        const long long idx = std::llround(static_cast<double>(*it - t1) / bin_ns);
        if (idx >= -h.half_bins && idx <= h.half_bins)
          ++local[static_cast<std::size_t>(idx + h.half_bins)];
      }
    }
#pragma omp critical
    for (std::size_t k = 0; k < local.size(); ++k) h.counts[k] += local[k];
  }
  return h;
}

} // namespace

Histogram coincidence_histogram(const EventStream& stream, double window_ns, double bin_ns) {
  return histogram_impl(stream, window_ns, bin_ns, true);
}

Histogram coincidence_histogram_serial(const EventStream& stream, double window_ns,
                                       double bin_ns) {
  return histogram_impl(stream, window_ns, bin_ns, false);
}

void write_histogram_csv(const Histogram& hist, std::ostream& os) {
  os << "delay_ns,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    os << hist.center_ns(static_cast<int>(i)) << ',' << hist.counts[i] << '\n';
}

namespace {

struct LinearPart {
  double amplitude = 0.0;
  double baseline = 0.0;
  double sse = 0.0;
};

// Best (A, b) for y ~ A f + b at fixed shape f, plus the residual.
LinearPart profile_linear(const std::vector<double>& t, const std::vector<double>& y,
                          double t0, double k) {
  const std::size_t n = t.size();
  double sf = 0.0, sff = 0.0, sy = 0.0, sfy = 0.0;
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = std::exp(-k * std::abs(t[i] - t0));
    sf += f[i];
    sff += f[i] * f[i];
    sy += y[i];
    sfy += f[i] * y[i];
  }
  LinearPart p;
  const double det = sff * static_cast<double>(n) - sf * sf;
  if (std::abs(det) < 1e-12) {
    p.amplitude = 0.0;
    p.baseline = sy / static_cast<double>(n);
  } else {
    p.amplitude = (sfy * static_cast<double>(n) - sf * sy) / det;
    p.baseline = (sff * sy - sf * sfy) / det;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - p.amplitude * f[i] - p.baseline;
    p.sse += r * r;
  }
  return p;
}

} // namespace

HistogramFit fit_correlation(const Histogram& hist) {
  const std::size_t nbins = hist.counts.size();
  std::size_t nonempty = 0;
  for (long long c : hist.counts) nonempty += c > 0 ? 1 : 0;
  if (nonempty < 10)
    throw std::invalid_argument("correlation fit: need at least 10 nonempty bins");

  std::vector<double> t(nbins), y(nbins);
  for (std::size_t i = 0; i < nbins; ++i) {
    t[i] = hist.center_ns(static_cast<int>(i));
    y[i] = static_cast<double>(hist.counts[i]);
  }

  std::size_t imax = 0;
  for (std::size_t i = 1; i < nbins; ++i)
    if (y[i] > y[imax]) imax = i;

  // Baseline guess from the outer quarter of the bins.
  const std::size_t edge = std::max<std::size_t>(1, nbins / 8);
  double base0 = 0.0;
  for (std::size_t i = 0; i < edge; ++i) base0 += y[i] + y[nbins - 1 - i];
  base0 /= static_cast<double>(2 * edge);

  // Half-maximum width around the peak, falling back to a few bins.
  const double level = base0 + 0.5 * (y[imax] - base0);
  std::size_t il = imax, ir = imax;
  while (il > 0 && y[il] > level) --il;
  while (ir + 1 < nbins && y[ir] > level) ++ir;
  double width = t[ir] - t[il];
  if (!(width > 0.0)) width = 4.0 * hist.bin_ns;
  double dnu0 = std::numbers::ln2 * 1e3 / (kPi * width);
  dnu0 = std::clamp(dnu0, 1e-3, 1e5);

  const auto objective = [&](const Eigen::VectorXd& x) {
    const double k = 2.0 * kPi * std::exp(x[1]) * 1e-3; // per ns
    return profile_linear(t, y, x[0], k).sse;
  };
  Eigen::VectorXd x0(2), steps(2);
  x0 << t[imax], std::log(dnu0);
  steps << hist.bin_ns, 0.3;
  const OptimResult opt = nelder_mead(objective, x0, steps, 1e-12, 4000);

  HistogramFit fit;
  fit.center_ns = opt.x[0];
  fit.delta_nu_mhz = std::exp(opt.x[1]);
  fit.fwhm_ns = std::numbers::ln2 * 1e3 / (kPi * fit.delta_nu_mhz);
  const LinearPart lin =
      profile_linear(t, y, opt.x[0], 2.0 * kPi * fit.delta_nu_mhz * 1e-3);
  fit.amplitude = lin.amplitude;
  fit.baseline = lin.baseline;

  // The nominal amplitude of a needle fitted between bin centers can be
  // arbitrarily large while explaining a single count, so significance is
  // judged on the model's tallest value on the actual bin grid. The position
  // search acts as a matched filter maximized over placement, which pushes
  // the noise floor up to a few sigma; five is comfortably above it.
  double peak_model = 0.0;
  {
    const double k = 2.0 * kPi * fit.delta_nu_mhz * 1e-3;
    for (std::size_t i = 0; i < nbins; ++i)
      peak_model = std::max(peak_model, std::exp(-k * std::abs(t[i] - fit.center_ns)));
    peak_model *= fit.amplitude;
  }
  if (!opt.converged) {
    fit.converged = false;
    fit.diagnostic = "no convergence";
  } else if (!(fit.amplitude > 0.0) || fit.fwhm_ns < hist.bin_ns ||
             peak_model < 5.0 * std::sqrt(std::max(fit.baseline, 1.0))) {
    fit.converged = false;
    fit.diagnostic = "peak not significant above baseline";
  } else {
    fit.converged = true;
    fit.diagnostic = "ok";
  }
  return fit;
}

double coherence_length_m(double delta_nu_mhz) {
  if (!(delta_nu_mhz > 0.0))
    throw std::invalid_argument("coherence length: linewidth must be > 0");
  return kSpeedOfLight / (delta_nu_mhz * 1e6);
}

double mz_visibility(double path_diff_m, double v0, double l0_m) {
  if (!(path_diff_m >= 0.0))
    throw std::invalid_argument("visibility: path difference must be >= 0");
  if (!(v0 >= 0.0 && v0 <= 1.0))
    throw std::invalid_argument("visibility: v0 must be in [0, 1]");
  if (!(l0_m > 0.0)) throw std::invalid_argument("visibility: l0 must be > 0");
  return v0 * std::exp(-path_diff_m / l0_m);
}

VisibilityFit fit_visibility(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2)
    throw std::invalid_argument("visibility fit: need at least 2 points");
  for (const auto& [length, vis] : points) {
    if (!(length >= 0.0))
      throw std::invalid_argument("visibility fit: path differences must be >= 0");
    if (!(vis > 0.0))
      throw std::invalid_argument("visibility fit: visibilities must be > 0");
  }
  const auto n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [length, vis] : points) {
    sx += length;
    sy += std::log(vis);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [length, vis] : points) {
    sxx += (length - mx) * (length - mx);
    sxy += (length - mx) * (std::log(vis) - my);
  }
  if (!(sxx > 0.0))
    throw std::invalid_argument("visibility fit: need at least two distinct path differences");

  VisibilityFit fit;
  const double slope = sxy / sxx;
  if (slope >= 0.0) {
    fit.v0 = std::exp(my);
    fit.l0_m = std::numeric_limits<double>::infinity();
    fit.decaying = false;
  } else {
    fit.v0 = std::exp(my - slope * mx);
    fit.l0_m = -1.0 / slope;
    fit.decaying = true;
  }
  return fit;
}

} // namespace spdcsim
