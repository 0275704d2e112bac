#pragma once

#include <cmath>
#include <complex>
#include <limits>

#include "srs/errors.hpp"
#include "srs/frontend.hpp"
#include "srs/spectral_density.hpp"

// Transfer functions and lock-in analytics of the acquisition chain:
// transimpedance stages, DC-routing network, differential stage with finite
// CMRR, square-wave mixer, output low-pass, SNR and sensitivity.
namespace srs::chain {

// Single-pole resistive-feedback TIA: -r_f / (1 + j w r_f c_f).
inline std::complex<double> standard_tia_tf(double f, double r_f, double c_f) {
  srs::detail::require(r_f > 0 && c_f > 0, "standard_tia_tf: r_f, c_f must be > 0");
  srs::detail::require(f >= 0, "standard_tia_tf: f must be >= 0");
  const double w = 2.0 * M_PI * f;
  return -r_f / std::complex<double>(1.0, w * r_f * c_f);
}

struct HNetworkGain {
  bool infinite_dc = false; // f = 0: the integrator term diverges
  std::complex<double> value{0.0, 0.0};

  double magnitude() const {
    return infinite_dc ? std::numeric_limits<double>::infinity() : std::abs(value);
  }
};

// DC-routing network response: -(1/r_y) (1 + j w r_x c_x) / (j w c_x)
// / (1 + j w r_d c_d). Infinite gain at DC by construction.
inline HNetworkGain h_network_tf(double f, const HNetworkConfig& h) {
  h.validate();
  srs::detail::require(f >= 0, "h_network_tf: f must be >= 0");
  if (f == 0.0) return HNetworkGain{true, {0.0, 0.0}};
  const double w = 2.0 * M_PI * f;
  const std::complex<double> jwcx(0.0, w * h.c_x);
  const std::complex<double> zero(1.0, w * h.r_x * h.c_x);
  const std::complex<double> pole(1.0, w * h.r_d * h.c_d);
  return HNetworkGain{false, -(1.0 / h.r_y) * zero / (jwcx * pole)};
}

// In-band transimpedance of the integrator front end: 1/(2 pi f c_f).
inline double advanced_tia_ac_gain(double f, double c_f) {
  srs::detail::require(c_f > 0, "advanced_tia_ac_gain: c_f must be > 0");
  srs::detail::require(f > 0, "advanced_tia_ac_gain: f must be > 0 (integrator)");
  return 1.0 / (2.0 * M_PI * f * c_f);
}

// DC output of the front end; the average photocurrent flows through r_dc.
inline double dc_output(double i_dc, double r_dc) { return -r_dc * i_dc; }

// Average optical power recovered from the DC output voltage.
inline double power_from_dc_output(double v_dc, double r_dc, double responsivity) {
  srs::detail::require(r_dc > 0 && responsivity > 0,
                       "power_from_dc_output: r_dc, responsivity must be > 0");
  return -v_dc / (r_dc * responsivity);
}

// Closed-loop bandwidth of the integrator stage: gbwp * c_f/(c_f + c_in).
inline double closed_loop_bandwidth(double gbwp, double c_f, double c_in) {
  srs::detail::require(gbwp > 0 && c_f > 0 && c_in >= 0,
                       "closed_loop_bandwidth: invalid arguments");
  return gbwp * c_f / (c_f + c_in);
}

// Differential stage with finite common-mode rejection:
// g_diff [(v_sig - v_ref) + ((v_sig + v_ref)/2)/cmrr]. cmrr may be infinite.
inline double differential_output(double v_sig, double v_ref, double g_diff, double cmrr) {
  srs::detail::require(cmrr >= 1.0, "differential_output: cmrr must be >= 1");
  srs::detail::require(g_diff > 0, "differential_output: g_diff must be > 0");
  const double common = std::isinf(cmrr) ? 0.0 : 0.5 * (v_sig + v_ref) / cmrr;
  return g_diff * ((v_sig - v_ref) + common);
}

struct MixerResponse {
  double dc_gain = 0.0;             // for a 0/A 50%-duty square signal at f_m
  double noise_variance_gain = 1.0; // |±1|^2: white noise passes unchanged
};

// Ideal double-balanced ±1 demodulator. The DC gain for an in-phase square
// signal is 1/2, falling off linearly with reference phase (the square-square
// correlation, i.e. the Fourier sum over odd harmonics of (2/(n pi))^2
// cos(n phase), which is a triangle in phase).
inline MixerResponse mixer_demod(double reference_phase) {
  srs::detail::require(std::isfinite(reference_phase), "mixer_demod: phase must be finite");
  double p = std::remainder(reference_phase, 2.0 * M_PI); // [-pi, pi]
  return MixerResponse{0.5 * (1.0 - 2.0 * std::abs(p) / M_PI), 1.0};
}

// Equivalent noise bandwidth and cutoff of the first-order output low-pass.
inline double lpf_enbw(double tau) {
  srs::detail::require(tau > 0, "lpf_enbw: tau must be > 0");
  return 1.0 / (4.0 * tau);
}

inline double lpf_fc(double tau) {
  srs::detail::require(tau > 0, "lpf_fc: tau must be > 0");
  return 1.0 / (2.0 * M_PI * tau);
}

// Lock-in SNR for a modulated optical signal of amplitude delta_p against a
// one-sided optical-power noise density s_n (value at f_m, W^2/Hz):
// (1/sqrt(2)) delta_p / sqrt(s_n/(4 tau)).
inline double snr(double delta_p, double s_n, double tau) {
  srs::detail::require(delta_p >= 0, "snr: delta_p must be >= 0");
  srs::detail::require(s_n >= 0, "snr: noise density must be >= 0");
  srs::detail::require(tau > 0, "snr: tau must be > 0");
  if (s_n == 0.0) return std::numeric_limits<double>::infinity();
  return delta_p / (std::sqrt(2.0) * std::sqrt(s_n / (4.0 * tau)));
}

inline double snr(double delta_p, const noise::SpectralDensity& s_n, double f_m, double tau) {
  srs::detail::require(s_n.referral() == noise::Referral::optical_power,
                       "snr: noise density must be optical-power referred");
  return snr(delta_p, s_n(f_m), tau);
}

// Smallest detectable relative gain [ppm] at SNR = 1:
// sqrt(2) sqrt(s_n/(4 tau)) / p_avg * 1e6.
inline double sensitivity_ppm(double s_n, double tau, double p_avg) {
  srs::detail::require(s_n >= 0, "sensitivity_ppm: noise density must be >= 0");
  srs::detail::require(tau > 0, "sensitivity_ppm: tau must be > 0");
  srs::detail::require(p_avg > 0, "sensitivity_ppm: p_avg must be > 0");
  return std::sqrt(2.0) * std::sqrt(s_n / (4.0 * tau)) / p_avg * 1e6;
}

inline double sensitivity_ppm(const noise::SpectralDensity& s_n, double f_m, double tau,
                              double p_avg) {
  srs::detail::require(s_n.referral() == noise::Referral::optical_power,
                       "sensitivity_ppm: noise density must be optical-power referred");
  return sensitivity_ppm(s_n(f_m), tau, p_avg);
}

struct TotalGain {
  double gain = 0.0; // [V/A] of modulated signal current
  bool in_band = true;
};

// Full-chain transimpedance for the modulated signal current at f:
// integrator gain x g_diff x mixer DC gain x g_ina. Queries beyond the
// closed-loop bandwidth are flagged rather than rejected so sweeps can
// traverse the rolloff.
inline TotalGain total_ac_gain(double f, const FrontEndConfig& fe) {
  fe.validate();
  srs::detail::require(f > 0, "total_ac_gain: f must be > 0");
  const double bw = closed_loop_bandwidth(fe.gbwp, fe.c_f, fe.c_in);
  const double g = advanced_tia_ac_gain(f, fe.c_f) * fe.g_diff *
                   mixer_demod(fe.mixer_phase).dc_gain * fe.g_ina;
  return TotalGain{g, f < bw};
}

}  // namespace srs::chain
