#include "spdcsim/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "spdcsim/constants.hpp"
#include "spdcsim/filters.hpp"
#include "spdcsim/polarization.hpp"
#include "spdcsim/rng.hpp"
#include "spdcsim/spectrum.hpp"
#include "spdcsim/timing.hpp"
#include "spdcsim/tomography.hpp"

namespace spdcsim {

bool Report::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
}

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

struct LinFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinFit linreg(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.slope * x[i] - f.intercept;
    ssr += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return f;
}

ReportRow& add(Report& rep, int criterion, std::string quantity, std::string reference,
               std::string computed, std::string tolerance, bool pass) {
  rep.rows.push_back({criterion, std::move(quantity), std::move(reference),
                      std::move(computed), std::move(tolerance), pass, ""});
  return rep.rows.back();
}

bool same_points(const std::vector<FringePoint>& a, const std::vector<FringePoint>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].theta_b != b[i].theta_b || a[i].count != b[i].count) return false;
  return true;
}

bool same_counts(const TomographyData& a, const TomographyData& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i)
    if (a.records[i].label != b.records[i].label || a.records[i].count != b.records[i].count)
      return false;
  return true;
}

} // namespace

Report build_report(const RunConfig& cfg, const std::string& out_dir) {
  Report rep;
  const bool emit = !out_dir.empty();
  if (emit) std::filesystem::create_directories(out_dir);
  const auto csv_out = [&](const char* name) {
    std::ofstream os(std::filesystem::path(out_dir) / name);
    if (!os) throw std::runtime_error(std::string("cannot write ") + name + " in " + out_dir);
    return os;
  };

  // 1: strength of the non-degenerate comb relative to the degenerate pair
  ModeComb comb;
  {
    Timer t;
    comb = build_comb(cfg.cavity);
    const double mu = multimode_ratio(comb);
    rep.runtime_ms[1] = t.ms();
    add(rep, 1, "multimode ratio mu", "1.87", fmt(mu, 4), "+-0.05",
        std::abs(mu - 1.87) <= 0.05);
    if (emit) {
      auto os = csv_out("comb.csv");
      write_comb_csv(comb, os);
    }
  }

  // 2: etalon-stack suppression of the comb
  {
    Timer t;
    const double ratio = filtered_ratio(comb, cfg.filter);
    const auto rows = leakage_table(comb, cfg.filter);
    rep.runtime_ms[2] = t.ms();
    const bool pass = ratio > 0.0 && ratio <= 5.4e-6 * 10.0 && ratio >= 5.4e-6 / 10.0;
    auto& row = add(rep, 2, "filtered multimode ratio", "5.4e-06", fmt(ratio, 4),
                    "within 10x", pass);
    double coinc = 0.0;
    for (const auto& r : rows) coinc += r.coincidence;
    row.note = "both-photon survival " + fmt(coinc, 4) + "; leakage table has " +
               std::to_string(rows.size()) + " rows";
    if (emit) {
      auto os = csv_out("leakage.csv");
      write_leakage_csv(rows, os);
      auto ts = csv_out("transmission.csv");
      write_transmission_csv(cfg.filter, 3000.0, 1.0, ts);
    }
  }

  // 3: Bell parameter at the canonical analyzer settings
  {
    Timer t;
    const ChshSettings settings = canonical_chsh_settings();
    const double s_pure = chsh_value(postselected_state(0.0), settings);
    const double s_mixed = chsh_value(werner_mix(0.966), settings);
    const double sig = chsh_violation_sigmas(2.73, 0.04);
    rep.runtime_ms[3] = t.ms();
    add(rep, 3, "CHSH S, ideal state", "2.8284271", fmt(s_pure, 10), "+-1e-9",
        std::abs(s_pure - 2.0 * std::numbers::sqrt2) <= 1e-9);
    add(rep, 3, "CHSH S, visibility 0.966", "2.73", fmt(s_mixed, 5), "+-0.001",
        std::abs(s_mixed - 2.732) <= 0.001);
    add(rep, 3, "violation sigmas (2.73, 0.04)", "18.25", fmt(sig, 6), "+-1e-6",
        std::abs(sig - 18.25) <= 1e-6);
  }

  // 4: polarization fringe visibilities, closed form and fitted from counts
  {
    Timer t;
    const TwoQubitState w978 = werner_mix(0.978);
    const TwoQubitState w966 = werner_mix(0.966);
    const double pmax = coincidence_probability(w978, 0.0, kPi / 2.0);
    const double pmin = coincidence_probability(w978, 0.0, 0.0);
    const double vis_cf = (pmax - pmin) / (pmax + pmin);

    std::vector<double> angles(13);
    for (std::size_t i = 0; i < angles.size(); ++i)
      angles[i] = static_cast<double>(i) * kPi / 12.0;
    const auto scan1 = fringe_scan(w978, 0.0, angles, 10000, derive_seed(cfg.seed, 141));
    const FringeFit fit1 = fit_fringe(scan1, 1000, derive_seed(cfg.seed, 142));
    const auto scan2 = fringe_scan(w966, -kPi / 4.0, angles, 10000, derive_seed(cfg.seed, 143));
    const FringeFit fit2 = fit_fringe(scan2, 1000, derive_seed(cfg.seed, 144));
    rep.runtime_ms[4] = t.ms();

    add(rep, 4, "fringe visibility, closed form at V=0.978", "0.978", fmt(vis_cf, 10),
        "+-1e-9", std::abs(vis_cf - 0.978) <= 1e-9);
    auto& r1 = add(rep, 4, "fitted fringe visibility, V=0.978 scan", "0.978",
                   fmt(fit1.visibility, 5), "+-3 sigma",
                   !fit1.degenerate &&
                       std::abs(fit1.visibility - 0.978) <= 3.0 * fit1.visibility_sigma);
    r1.note = "sigma " + fmt(fit1.visibility_sigma, 3);
    auto& r2 = add(rep, 4, "fitted fringe visibility, V=0.966 scan", "0.966",
                   fmt(fit2.visibility, 5), "+-3 sigma",
                   !fit2.degenerate &&
                       std::abs(fit2.visibility - 0.966) <= 3.0 * fit2.visibility_sigma);
    r2.note = "sigma " + fmt(fit2.visibility_sigma, 3);
    if (emit) {
      auto o1 = csv_out("fringe_theta0.csv");
      write_fringe_csv(scan1, o1);
      auto o2 = csv_out("fringe_theta45.csv");
      write_fringe_csv(scan2, o2);
    }
  }

  // 5: tomography, exact inversion and likelihood fit under Poisson noise
  {
    Timer t;
    Rng rng(derive_seed(cfg.seed, 51));
    double max_err = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Mat4c rho = random_density_matrix(rng);
      TomographyData d;
      d.total_per_setting_hint = 10000;
      for (const auto& s : standard_settings())
        d.records.push_back({s.label, 1e4 * std::real(s.ket.dot(rho * s.ket))});
      const Mat4c rec = linear_reconstruct(d);
      max_err = std::max(max_err, (rec - rho).cwiseAbs().maxCoeff());
    }

    const TwoQubitState truth = werner_mix(0.95);
    std::vector<double> fids(20);
    for (std::size_t s = 0; s < fids.size(); ++s) {
      const auto data = simulate_counts(truth, 10000, derive_seed(cfg.seed, 500 + s));
      const MleResult r = mle_reconstruct(data);
      fids[s] = uhlmann_fidelity(r.state.rho(), truth.rho());
    }
    std::sort(fids.begin(), fids.end());
    const double median_sq = 0.5 * (fids[9] + fids[10]);
    const double median = std::sqrt(median_sq);
    rep.runtime_ms[5] = t.ms();

    add(rep, 5, "linear inversion round-trip error, 100 states", "0", fmt(max_err, 3),
        "<= 1e-9", max_err <= 1e-9);
    auto& row = add(rep, 5, "MLE median root fidelity to truth, 20 runs", "1",
                    fmt(median, 5), ">= 0.99", median >= 0.99);
    row.note = "squared convention " + fmt(median_sq, 5);
  }

  // 6: bundled reconstructed density matrix against the ideal state
  {
    Timer t;
    const TwoQubitState st = TwoQubitState::from_matrix_relaxed(reference_density_matrix());
    const double f = fidelity_to_pure(st.rho(), singlet_state());
    const double sf = std::sqrt(f);
    rep.runtime_ms[6] = t.ms();
    add(rep, 6, "reference matrix fidelity to ideal state", "0.9178", fmt(f, 5),
        "+-0.0005", std::abs(f - 0.9178) <= 0.0005);
    auto& row = add(rep, 6, "sqrt fidelity vs reported estimate", "0.952", fmt(sf, 4),
                    "informational", true);
    row.note = "sqrt-fidelity " + fmt(sf, 4) +
               " sits above the reported 0.952; known inconsistency in the reference "
               "values, flagged rather than failed";
  }

  // 7: end-to-end linewidth recovery from a simulated coincidence histogram
  {
    Timer t;
    const SourceConfig& src = cfg.source;
    const double coinc_rate = pair_rate(src.pump_power_mw, src.rate_coefficient) *
                              src.duty_cycle * src.detector_efficiency *
                              src.detector_efficiency * 0.5;
    const double duration = std::clamp(1.2e5 / std::max(coinc_rate, 1e-9), 10.0, 2e4);
    GenerationSummary sum;
    const auto events = generate_events(src, duration, derive_seed(cfg.seed, 71), &sum);
    const Histogram hist =
        coincidence_histogram(events, src.coincidence_window_ns, src.digitizer_resolution_ns);
    const HistogramFit fit = fit_correlation(hist);
    rep.runtime_ms[7] = t.ms();

    auto& r1 = add(rep, 7, "fitted linewidth", "15 MHz", fmt(fit.delta_nu_mhz, 4) + " MHz",
                   "+-1 MHz",
                   fit.converged && hist.total() >= 100000 &&
                       std::abs(fit.delta_nu_mhz - 15.0) <= 1.0);
    r1.note = std::to_string(hist.total()) + " in-window pairings over " +
              fmt(duration, 4) + " s";
    add(rep, 7, "fitted correlation FWHM", "14.5 ns", fmt(fit.fwhm_ns, 4) + " ns",
        "+-1 ns around 14.7", std::abs(fit.fwhm_ns - 14.7) <= 1.0);
    if (emit) {
      auto os = csv_out("histogram.csv");
      write_histogram_csv(hist, os);
    }
  }

  // 8: linearity of the pair rate in pump power
  {
    Timer t;
    const std::vector<double> powers{7.0, 13.25, 19.5, 25.75, 32.0};
    std::vector<double> rates(powers.size());
    for (std::size_t i = 0; i < powers.size(); ++i) {
      SourceConfig s = cfg.source;
      s.pump_power_mw = powers[i];
      GenerationSummary sum;
      generate_events(s, 30.0, derive_seed(cfg.seed, 80 + i), &sum);
      rates[i] = static_cast<double>(sum.pairs_generated) / (30.0 * s.duty_cycle);
    }
    const LinFit lin = linreg(powers, rates);
    rep.runtime_ms[8] = t.ms();
    auto& row = add(rep, 8, "pair rate slope vs pump power", "44.8 /s/mW",
                    fmt(lin.slope, 4) + " /s/mW", "+-2", std::abs(lin.slope - 44.8) <= 2.0);
    row.note = "rate at 32 mW " + fmt(rates.back(), 4) + " /s";
    add(rep, 8, "pump sweep regression R^2", "1", fmt(lin.r2, 6), "> 0.99", lin.r2 > 0.99);
  }

  // 9: single-photon coherence length and its interferometric fit
  {
    Timer t;
    const double lc = coherence_length_m(cfg.source.linewidth_mhz);
    const std::vector<std::pair<double, double>> pts{{0.0, 0.95}, {4.5, 0.75}};
    const VisibilityFit vf = fit_visibility(pts);
    rep.runtime_ms[9] = t.ms();
    add(rep, 9, "coherence length at 15 MHz", "20.0 m", fmt(lc, 4) + " m", "+-0.1 m",
        std::abs(lc - 20.0) <= 0.1);
    add(rep, 9, "visibility decay length from two points", "19.0 m", fmt(vf.l0_m, 4) + " m",
        "+-0.1 m", vf.decaying && std::abs(vf.l0_m - 19.0) <= 0.1);
  }

  // 10: internal consistency of the cavity numbers
  {
    Timer t;
    const double lw = cavity_linewidth_mhz(cfg.cavity);
    const double rt = round_trip_time_ps(cfg.cavity);
    rep.runtime_ms[10] = t.ms();
    add(rep, 10, "cavity linewidth fsr/finesse", "15 MHz", fmt(lw, 4) + " MHz",
        "within 5%", std::abs(lw / 15.0 - 1.0) <= 0.05);
    add(rep, 10, "cavity round-trip time", "670 ps", fmt(rt, 4) + " ps", "within 5%",
        std::abs(rt / 670.0 - 1.0) <= 0.05);
  }

  // 11: structural properties: bounds, symmetries, determinism
  {
    Timer t;

    Rng rng(derive_seed(cfg.seed, 111));
    std::uniform_real_distribution<double> angle(0.0, kPi);
    const ChshSettings canonical = canonical_chsh_settings();
    double s_max = 0.0;
    bool bound_ok = true;
    for (int i = 0; i < 1000; ++i) {
      const TwoQubitState st = TwoQubitState::from_matrix(random_density_matrix(rng));
      const ChshSettings random_settings{angle(rng), angle(rng), angle(rng), angle(rng)};
      for (const ChshSettings& s : {canonical, random_settings}) {
        const double v = chsh_value(st, s);
        s_max = std::max(s_max, v);
        if (v > 2.0 * std::numbers::sqrt2 + 1e-9) bound_ok = false;
      }
    }

    double max_offset_sum = 0.0;
    for (const auto& p : comb.pairs)
      max_offset_sum =
          std::max(max_offset_sum, std::abs(p.offset_signal_mhz + p.offset_idler_mhz));

    bool repro = true;
    const auto ev1 = generate_events(cfg.source, 2.0, derive_seed(cfg.seed, 112));
    const auto ev2 = generate_events(cfg.source, 2.0, derive_seed(cfg.seed, 112));
    repro = repro && ev1 == ev2;

    const TwoQubitState probe = werner_mix(0.9);
    std::vector<double> angles(9);
    for (std::size_t i = 0; i < angles.size(); ++i)
      angles[i] = static_cast<double>(i) * kPi / 8.0;
    const auto sc1 = fringe_scan(probe, 0.0, angles, 2000, derive_seed(cfg.seed, 113));
    const auto sc2 = fringe_scan(probe, 0.0, angles, 2000, derive_seed(cfg.seed, 113));
    repro = repro && same_points(sc1, sc2);
    const FringeFit ff1 = fit_fringe(sc1, 200, derive_seed(cfg.seed, 114));
    const FringeFit ff2 = fit_fringe(sc2, 200, derive_seed(cfg.seed, 114));
    repro = repro && ff1.visibility == ff2.visibility &&
            ff1.visibility_sigma == ff2.visibility_sigma;

    const auto td1 = simulate_counts(probe, 2000, derive_seed(cfg.seed, 115));
    const auto td2 = simulate_counts(probe, 2000, derive_seed(cfg.seed, 115));
    repro = repro && same_counts(td1, td2);
    const auto fe1 = fidelity_with_sigma(td1, singlet_state(), 8, derive_seed(cfg.seed, 116));
    const auto fe2 = fidelity_with_sigma(td2, singlet_state(), 8, derive_seed(cfg.seed, 116));
    repro = repro && fe1.fidelity == fe2.fidelity && fe1.sigma == fe2.sigma;

    const auto ch1 =
        chsh_from_counts(probe, canonical, 2000, 50, derive_seed(cfg.seed, 117));
    const auto ch2 =
        chsh_from_counts(probe, canonical, 2000, 50, derive_seed(cfg.seed, 117));
    repro = repro && ch1.s == ch2.s && ch1.sigma == ch2.sigma;

    std::stringstream ss;
    write_events(ev1, ss);
    const bool round_trip = read_events(ss) == ev1;

    rep.runtime_ms[11] = t.ms();
    add(rep, 11, "CHSH bound over 1000 random states", "<= 2.8284", fmt(s_max, 6),
        "2sqrt2 + 1e-9", bound_ok);
    add(rep, 11, "comb signal+idler offset sum", "0 MHz", fmt(max_offset_sum, 3),
        "<= 1e-9", max_offset_sum <= 1e-9);
    add(rep, 11, "seeded reproducibility, stochastic paths", "identical",
        repro ? "identical" : "mismatch", "exact", repro);
    add(rep, 11, "event file round-trip", "identical", round_trip ? "identical" : "mismatch",
        "exact", round_trip);
  }

  return rep;
}

void write_report_table(const Report& report, std::ostream& os) {
  const std::array<std::string, 5> head{"quantity", "reference", "computed", "tolerance",
                                        "status"};
  std::array<std::size_t, 5> w{};
  for (std::size_t c = 0; c < 5; ++c) w[c] = head[c].size();
  for (const auto& r : report.rows) {
    w[0] = std::max(w[0], r.quantity.size());
    w[1] = std::max(w[1], r.reference.size());
    w[2] = std::max(w[2], r.computed.size());
    w[3] = std::max(w[3], r.tolerance.size());
    w[4] = std::max(w[4], std::size_t{4});
  }
  const auto line = [&](const std::array<std::string, 5>& cells) {
    for (std::size_t c = 0; c < 5; ++c)
      os << (c ? " | " : "") << std::left << std::setw(static_cast<int>(w[c])) << cells[c];
    os << '\n';
  };
  line(head);
  {
    std::array<std::string, 5> rule;
    for (std::size_t c = 0; c < 5; ++c) rule[c] = std::string(w[c], '-');
    line(rule);
  }
  for (const auto& r : report.rows) {
    line({r.quantity, r.reference, r.computed, r.tolerance,
          std::string(r.pass ? "pass" : "FAIL")});
    if (!r.note.empty()) os << "    note: " << r.note << '\n';
  }
  os << (report.all_pass() ? "all rows pass\n" : "FAILING ROWS PRESENT\n");
}

void write_report_json(const Report& report, std::ostream& os) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row;
    row["criterion"] = r.criterion;
    row["quantity"] = r.quantity;
    row["reference"] = r.reference;
    row["computed"] = r.computed;
    row["tolerance"] = r.tolerance;
    row["pass"] = r.pass;
    if (!r.note.empty()) row["note"] = r.note;
    j["rows"].push_back(std::move(row));
  }
  j["all_pass"] = report.all_pass();
  nlohmann::json rt;
  for (std::size_t c = 1; c < report.runtime_ms.size(); ++c)
    rt[std::to_string(c)] = report.runtime_ms[c];
  j["runtime_ms"] = std::move(rt);
  os << j.dump(2) << '\n';
}

} // namespace spdcsim
