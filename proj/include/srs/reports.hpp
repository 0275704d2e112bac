#pragma once

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "srs/budget.hpp"
#include "srs/chain.hpp"
#include "srs/config.hpp"
#include "srs/errors.hpp"
#include "srs/model.hpp"
#include "srs/noise.hpp"
#include "srs/timesim.hpp"

// Text and CSV emission for the CLI commands. Everything here is pure
// string building so the report content is unit-testable; the CLI only
// writes the strings to disk. CSV cells use %.17g so round-tripping a file
// reproduces the doubles exactly.
namespace srs::reports {

namespace detail {

inline std::string strf(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return std::string(buf);
}

}  // namespace detail

inline std::string cell(double v) { return detail::strf("%.17g", v); }

// Density conversions for the human-readable tables.
inline double pw_per_rthz(double s_w2_per_hz) { return std::sqrt(s_w2_per_hz) * 1e12; }
inline double pa_per_rthz(double s_a2_per_hz) { return std::sqrt(s_a2_per_hz) * 1e12; }

inline const char* unit_symbol(noise::Referral r) {
  switch (r) {
    case noise::Referral::optical_power: return "W";
    case noise::Referral::current: return "A";
    case noise::Referral::voltage: return "V";
  }
  return "?";
}

// Wording the budget report uses for the headline SNR relation. Kept as a
// named constant so tests can assert the report carries it verbatim.
inline const char* snr_discrepancy_note() {
  return
      "note: SNR above follows the first-order dwell-time relation\n"
      "  snr = delta_p / (sqrt(2) * sqrt(S_n / (4 tau))).\n"
      "A commonly quoted figure of roughly 350 for this operating point (a\n"
      "250 ppm gain on 40 uW with tau = 330 us) exceeds that relation by\n"
      "about 10x and is not reproduced here; the relation's own value\n"
      "(about 36 for the shot-noise floor) is what this tool reports.\n";
}

struct BudgetReport {
  std::string report_text;
  std::string csv_text;
  double sensitivity_total_ppm = 0.0;
  double sensitivity_shot_ppm = 0.0;
  double snr_total = 0.0;
  double snr_shot = 0.0;
  double gain_at_fm = 0.0;
  bool gain_pass = false;
  double bandwidth = 0.0;
};

inline std::vector<double> log_grid(double lo, double hi, int n) {
  srs::detail::require(lo > 0 && hi > lo && n >= 2, "log_grid: bad range");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i) {
    g[static_cast<std::size_t>(i)] =
        std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

inline BudgetReport make_budget_report(const config::RunConfig& cfg) {
  using detail::strf;
  const auto& fe = cfg.frontend;
  const auto& laser = cfg.laser;
  const auto& pd = cfg.photodiode;
  fe.validate();
  laser.validate();
  pd.validate();

  BudgetReport out;
  const double i_dc = model::dc_current(laser, pd);
  const auto at_fm = noise::balanced_noise_breakdown(fe, laser, pd, fe.f_m);
  out.sensitivity_total_ppm = chain::sensitivity_ppm(at_fm.total, fe.tau, laser.average_power);
  out.sensitivity_shot_ppm = chain::sensitivity_ppm(at_fm.shot, fe.tau, laser.average_power);
  out.snr_total = chain::snr(cfg.budget.delta_p, at_fm.total, fe.tau);
  out.snr_shot = chain::snr(cfg.budget.delta_p, at_fm.shot, fe.tau);
  const auto gain = chain::total_ac_gain(fe.f_m, fe);
  out.gain_at_fm = gain.gain;
  out.gain_pass = gain.gain > 10e6;
  out.bandwidth = chain::closed_loop_bandwidth(fe.gbwp, fe.c_f, fe.c_in);

  const double rin_laser = laser.rin_psd()(fe.f_m);
  const double shot_single = noise::shot_psd_optical(laser.wavelength, laser.average_power)(fe.f_m);
  const double elec_current = noise::advanced_tia_input_noise(fe.f_m, fe.amp_noise, fe.c_f,
                                                              fe.c_in, fe.r_dc, fe.temperature);

  const auto grid = log_grid(cfg.budget.f_lo, cfg.budget.f_hi, cfg.budget.n_points);

  std::string csv = "f_Hz,shot_W2_per_Hz,electronics_W2_per_Hz,rin_leak_W2_per_Hz,total_W2_per_Hz\n";
  std::string table =
      "  input-referred optical-power densities, one balanced channel [pW/rtHz]\n";
  table += strf("  %12s %10s %12s %10s %10s\n", "f_Hz", "shot", "electronics", "rin_leak",
                "total");
  for (double f : grid) {
    const auto b = noise::balanced_noise_breakdown(fe, laser, pd, f);
    csv += cell(f) + "," + cell(b.shot) + "," + cell(b.electronics) + "," + cell(b.rin_leak) +
           "," + cell(b.total) + "\n";
    table += strf("  %12.6g %10.4f %12.4f %10.4f %10.4f\n", f, pw_per_rthz(b.shot),
                  pw_per_rthz(b.electronics), pw_per_rthz(b.rin_leak), pw_per_rthz(b.total));
  }
  out.csv_text = csv;

  std::string r;
  r += "balanced front-end noise budget\n";
  r += "===============================\n\n";
  r += strf("operating point: P_avg = %.6g uW per branch, R = %.6g A/W, I_dc = %.6g uA\n",
            laser.average_power * 1e6, pd.responsivity, i_dc * 1e6);
  r += strf("modulation f_m = %.6g Hz, lock-in tau = %.6g us, CMRR = %.6g (linear)\n\n",
            fe.f_m, fe.tau * 1e6, fe.cmrr);
  r += strf("laser-level densities at f_m (single beam, before balancing):\n");
  r += strf("  intensity noise: %.4g pW/rtHz", pw_per_rthz(rin_laser));
  if (laser.rin_is_flat() && !laser.rin_curve.empty()) {
    r += strf("  (RIN %.4g dB/Hz flat)", laser.rin_curve.front().second);
  }
  r += "\n";
  r += strf("  optical shot noise: %.4g pW/rtHz\n\n", pw_per_rthz(shot_single));
  r += table;
  r += "\n";
  r += strf("closed-loop bandwidth: %.6g MHz\n", out.bandwidth * 1e-6);
  r += strf("total AC gain at f_m: %.6g MOhm -> %s (requirement: > 10 MOhm)\n",
            out.gain_at_fm * 1e-6, out.gain_pass ? "PASS" : "FAIL");
  r += strf("lock-in filter: f_c = %.6g Hz, ENBW = %.6g Hz\n", chain::lpf_fc(fe.tau),
            chain::lpf_enbw(fe.tau));
  r += strf("electronics input current noise at f_m: %.4g pA/rtHz\n", pa_per_rthz(elec_current));
  r += strf("sensitivity at f_m (total): %.4g ppm -> %s (target: < 10 ppm)\n",
            out.sensitivity_total_ppm, out.sensitivity_total_ppm < 10.0 ? "PASS" : "FAIL");
  r += strf("sensitivity at f_m (shot-only): %.4g ppm\n", out.sensitivity_shot_ppm);
  r += strf("SNR at delta_p = %.6g W (total noise): %.4g\n", cfg.budget.delta_p, out.snr_total);
  r += strf("SNR at delta_p = %.6g W (shot-only): %.4g\n\n", cfg.budget.delta_p, out.snr_shot);
  r += snr_discrepancy_note();
  out.report_text = r;
  return out;
}

// One analytic sweep row; the swept variable is applied to a copy of the
// configured operating point.
struct SweepRow {
  double value = 0.0;
  double sensitivity_ppm = 0.0;
  double total_noise = 0.0; // [W^2/Hz] at f_m
  double gain = 0.0;        // [V/A] at f_m
  double bandwidth = 0.0;   // [Hz]
};

inline void apply_sweep_variable(const std::string& variable, double value,
                                 chain::FrontEndConfig& fe, model::LaserSpec& laser) {
  if (variable == "r_dc") {
    fe.r_dc = value;
  } else if (variable == "c_in") {
    fe.c_in = value;
  } else if (variable == "tau") {
    fe.tau = value;
  } else if (variable == "f_m") {
    fe.f_m = value;
  } else if (variable == "cmrr") {
    fe.cmrr = value;
  } else if (variable == "average_power") {
    laser.average_power = value;
  } else {
    throw config_error("sweep: unknown variable '" + variable +
                       "' (allowed: r_dc, c_in, tau, f_m, cmrr, average_power)");
  }
}

inline std::vector<SweepRow> make_sweep_rows(const config::RunConfig& cfg) {
  const auto& sw = cfg.sweep;
  sw.validate();
  std::vector<SweepRow> rows;
  rows.reserve(static_cast<std::size_t>(sw.n));
  for (int i = 0; i < sw.n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(sw.n - 1);
    const double v = sw.log_spacing ? std::exp(std::log(sw.lo) + (std::log(sw.hi) - std::log(sw.lo)) * t)
                                    : sw.lo + (sw.hi - sw.lo) * t;
    chain::FrontEndConfig fe = cfg.frontend;
    model::LaserSpec laser = cfg.laser;
    apply_sweep_variable(sw.variable, v, fe, laser);
    fe.validate();
    laser.validate();
    SweepRow row;
    row.value = v;
    const auto b = noise::balanced_noise_breakdown(fe, laser, cfg.photodiode, fe.f_m);
    row.total_noise = b.total;
    row.sensitivity_ppm = chain::sensitivity_ppm(b.total, fe.tau, laser.average_power);
    row.gain = chain::total_ac_gain(fe.f_m, fe).gain;
    row.bandwidth = chain::closed_loop_bandwidth(fe.gbwp, fe.c_f, fe.c_in);
    rows.push_back(row);
  }
  return rows;
}

inline std::string sweep_csv(const std::string& variable, const std::vector<SweepRow>& rows) {
  std::string csv = "variable,value,sensitivity_ppm,total_noise_W2_per_Hz,gain_V_per_A,bandwidth_Hz\n";
  for (const auto& r : rows) {
    csv += variable + "," + cell(r.value) + "," + cell(r.sensitivity_ppm) + "," +
           cell(r.total_noise) + "," + cell(r.gain) + "," + cell(r.bandwidth) + "\n";
  }
  return csv;
}

inline std::string trace_csv(const timesim::Trace& trace) {
  trace.validate();
  const char* u = unit_symbol(trace.unit);
  std::string csv = "t_s,value,unit\n";
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    csv += cell(static_cast<double>(i) * trace.dt) + "," + cell(trace.samples[i]) + "," + u + "\n";
  }
  return csv;
}

inline std::string stats_csv(const std::vector<timesim::ComparisonRow>& rows) {
  std::string csv = "label,mc_rms_V,analytic_rms_V,ratio\n";
  for (const auto& r : rows) {
    csv += r.label + "," + cell(r.mc_rms) + "," + cell(r.analytic_rms) + "," + cell(r.ratio) + "\n";
  }
  return csv;
}

inline std::string demod_csv(double gain_ppm_in, const timesim::ChannelResult& res,
                             double gain_ppm_recovered) {
  std::string csv =
      "gain_ppm_in,demod_mean_V,demod_rms_V,n_bins,v_dc_sig_V,v_dc_ref_V,gain_ppm_recovered\n";
  csv += cell(gain_ppm_in) + "," + cell(res.demod_mean) + "," + cell(res.demod_rms) + "," +
         std::to_string(res.n_bins) + "," + cell(res.v_dc_sig) + "," + cell(res.v_dc_ref) + "," +
         cell(gain_ppm_recovered) + "\n";
  return csv;
}

inline std::string scan_csv(const timesim::ScanResult& scan) {
  scan.validate();
  std::string csv = "lambda_nm,shift_cm1,gain_ppm,vdc_sig_V,vdc_ref_V\n";
  for (const auto& p : scan.points) {
    csv += cell(p.stokes_wavelength * 1e9) + "," + cell(p.shift) + "," +
           cell(p.normalized_gain) + "," + cell(p.v_dc_sig) + "," + cell(p.v_dc_ref) + "\n";
  }
  return csv;
}

inline std::string scan_summary_text(const timesim::ScanResult& scan,
                                     const timesim::ScanAnalysis& analysis) {
  using detail::strf;
  std::string r;
  r += "wavelength scan summary\n";
  r += "=======================\n\n";
  if (!scan.points.empty()) {
    r += strf("points: %zu, Stokes %.6g..%.6g nm, shift %.6g..%.6g cm^-1\n",
              scan.points.size(), scan.points.front().stokes_wavelength * 1e9,
              scan.points.back().stokes_wavelength * 1e9, scan.points.back().shift,
              scan.points.front().shift);
  }
  r += strf("baseline median: %.6g ppm\n", analysis.baseline_median);
  r += strf("baseline RMS (robust): %.6g ppm\n", analysis.baseline_rms);
  r += strf("detected peaks: %zu\n", analysis.peaks.size());
  for (std::size_t i = 0; i < analysis.peaks.size(); ++i) {
    const auto& p = analysis.peaks[i];
    r += strf("  peak %zu: center %.6g cm^-1, amplitude %.6g ppm, half-width %.6g cm^-1\n",
              i + 1, p.center, p.amplitude, p.half_width);
  }
  return r;
}

inline std::string simulate_report_text(const config::RunConfig& cfg, double shift,
                                        double gain_ppm, double kappa,
                                        const timesim::ChannelResult& res,
                                        double gain_ppm_recovered,
                                        const std::vector<timesim::ComparisonRow>& compare) {
  using detail::strf;
  const double i_dc = model::dc_current(cfg.laser, cfg.photodiode);
  std::string r;
  r += "single-channel lock-in simulation\n";
  r += "=================================\n\n";
  r += strf("Stokes wavelength: %.6g nm (shift %.6g cm^-1), sample gain %.6g ppm\n",
            cfg.laser.wavelength * 1e9, shift, gain_ppm);
  r += strf("I_dc = %.6g uA, discrete demodulation gain kappa = %.6g V/A\n\n", i_dc * 1e6,
            kappa);
  r += strf("demod mean: %.6g V (expected kappa * dI = %.6g V)\n", res.demod_mean,
            kappa * i_dc * gain_ppm * 1e-6);
  r += strf("demod RMS: %.6g V over %zu bins\n", res.demod_rms, res.n_bins);
  r += strf("recovered gain: %.6g ppm\n", gain_ppm_recovered);
  r += strf("DC path outputs: signal %.6g V, reference %.6g V\n", res.v_dc_sig, res.v_dc_ref);
  if (!compare.empty()) {
    r += "\nMonte Carlo vs analytic output RMS:\n";
    r += strf("  %-22s %12s %12s %8s\n", "sources", "MC_V", "analytic_V", "ratio");
    for (const auto& row : compare) {
      r += strf("  %-22s %12.6g %12.6g %8.4f\n", row.label.c_str(), row.mc_rms,
                row.analytic_rms, row.ratio);
    }
  }
  return r;
}

}  // namespace srs::reports
