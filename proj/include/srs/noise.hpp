#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "srs/constants.hpp"
#include "srs/errors.hpp"
#include "srs/spectral_density.hpp"

// Closed-form one-sided noise densities for a balanced photodetection front
// end: laser intensity noise, photocurrent shot noise, and transimpedance
// amplifier input noise in both the resistive-feedback and the
// integrator/DC-servo topologies.
namespace srs::noise {

// Relative intensity noise level [dB/Hz] at average power p_avg [W] as an
// optical-power density: S = p_avg^2 * 10^(rin_db/10).
inline SpectralDensity rin_to_psd(double rin_db, double p_avg) {
  srs::detail::require(std::isfinite(rin_db) && rin_db <= 0.0,
                       "rin_to_psd: rin_db must be finite and <= 0");
  srs::detail::require(p_avg > 0.0, "rin_to_psd: p_avg must be > 0");
  return SpectralDensity::flat(Referral::optical_power,
                               p_avg * p_avg * std::pow(10.0, rin_db / 10.0));
}

// Frequency-dependent RIN curve: points of (frequency [Hz], RIN [dB/Hz]),
// interpolated linearly in dB against ln(f) and clamped at the end points.
inline SpectralDensity rin_to_psd(const std::vector<std::pair<double, double>>& rin_curve,
                                  double p_avg) {
  srs::detail::require(!rin_curve.empty(), "rin_to_psd: empty RIN curve");
  srs::detail::require(p_avg > 0.0, "rin_to_psd: p_avg must be > 0");
  for (std::size_t i = 0; i < rin_curve.size(); ++i) {
    srs::detail::require(rin_curve[i].first > 0.0, "rin_to_psd: curve frequencies must be > 0");
    srs::detail::require(std::isfinite(rin_curve[i].second) && rin_curve[i].second <= 0.0,
                         "rin_to_psd: curve RIN values must be finite and <= 0");
    if (i) {
      srs::detail::require(rin_curve[i].first > rin_curve[i - 1].first,
                           "rin_to_psd: curve frequencies must be strictly increasing");
    }
  }
  const double p2 = p_avg * p_avg;
  auto curve = rin_curve;
  return SpectralDensity::from_function(Referral::optical_power, [curve, p2](double f) {
    const double db = detail::log_x_interp(curve, f <= 0.0 ? curve.front().first : f);
    return p2 * std::pow(10.0, db / 10.0);
  });
}

// Shot noise in the photon-flux convention: S = 2 (h c0 / lambda) p_avg.
inline SpectralDensity shot_psd_optical(double wavelength, double p_avg) {
  srs::detail::require(wavelength > 0.0, "shot_psd_optical: wavelength must be > 0");
  srs::detail::require(p_avg >= 0.0, "shot_psd_optical: p_avg must be >= 0");
  const double photon_energy =
      constants::planck * constants::speed_of_light / wavelength;
  return SpectralDensity::flat(Referral::optical_power, 2.0 * photon_energy * p_avg);
}

// Shot noise in the photocurrent convention: S = 2 q i_dc.
inline SpectralDensity shot_psd_current(double i_dc) {
  srs::detail::require(i_dc >= 0.0, "shot_psd_current: i_dc must be >= 0");
  return SpectralDensity::flat(Referral::current, 2.0 * constants::elementary_charge * i_dc);
}

// Convert between optical-power and current referral via the responsivity
// [A/W]; densities scale by responsivity^2. Voltage referrals need an
// explicit gain (see refer_with_gain) and are rejected here.
inline SpectralDensity refer(const SpectralDensity& psd, Referral to, double responsivity) {
  srs::detail::require(responsivity > 0.0, "refer: responsivity must be > 0");
  if (psd.referral() == Referral::voltage || to == Referral::voltage) {
    throw invariant_violation("refer: voltage referral requires an explicit gain");
  }
  if (psd.referral() == to) return psd;
  const double r2 = responsivity * responsivity;
  if (psd.referral() == Referral::optical_power && to == Referral::current) {
    return psd.scaled(r2).with_referral(to);
  }
  return psd.scaled(1.0 / r2).with_referral(to);
}

// General referral change with an explicit amplitude gain (density scales by
// gain^2), e.g. current -> voltage through a transimpedance in ohms.
inline SpectralDensity refer_with_gain(const SpectralDensity& psd, Referral to,
                                       double amplitude_gain) {
  srs::detail::require(amplitude_gain > 0.0, "refer_with_gain: gain must be > 0");
  if (psd.referral() == to) {
    srs::detail::require(amplitude_gain == 1.0,
                         "refer_with_gain: same-referral conversion must use unit gain");
    return psd;
  }
  return psd.scaled(amplitude_gain * amplitude_gain).with_referral(to);
}

// Input noise of an op-amp, as equivalent densities at the input node.
struct AmplifierNoiseSpec {
  double e_n = 4e-9;   // series voltage noise [V/sqrt(Hz)]
  double i_n = 7e-15;  // parallel current noise [A/sqrt(Hz)]
  double e_h = 4e-9;   // voltage noise of the DC-servo driver [V/sqrt(Hz)]

  void validate() const {
    srs::detail::require(std::isfinite(e_n) && e_n >= 0.0, "AmplifierNoiseSpec: e_n must be >= 0");
    srs::detail::require(std::isfinite(i_n) && i_n >= 0.0, "AmplifierNoiseSpec: i_n must be >= 0");
    srs::detail::require(std::isfinite(e_h) && e_h >= 0.0, "AmplifierNoiseSpec: e_h must be >= 0");
  }
};

// Input-referred current noise density [A^2/Hz] of a resistive-feedback TIA:
// e_n^2 w^2 c_tot^2 + e_n^2/r_f^2 + 4kT/r_f + i_n^2. r_f may be infinite.
inline double standard_tia_input_noise(double f, double e_n, double i_n, double r_f,
                                       double c_tot,
                                       double temperature = constants::default_temperature) {
  srs::detail::require(f >= 0.0, "standard_tia_input_noise: f must be >= 0");
  srs::detail::require(e_n >= 0.0 && i_n >= 0.0, "standard_tia_input_noise: e_n, i_n must be >= 0");
  srs::detail::require(r_f > 0.0, "standard_tia_input_noise: r_f must be > 0");
  srs::detail::require(c_tot >= 0.0, "standard_tia_input_noise: c_tot must be >= 0");
  srs::detail::require(temperature > 0.0, "standard_tia_input_noise: temperature must be > 0");
  const double w = 2.0 * M_PI * f;
  const double cap = e_n * w * c_tot;
  double s = cap * cap + i_n * i_n;
  if (std::isfinite(r_f)) {
    s += (e_n / r_f) * (e_n / r_f) + 4.0 * constants::boltzmann * temperature / r_f;
  }
  return s;
}

// Input-referred current noise density [A^2/Hz] of the integrator front end
// with a resistive DC path r_dc driven by the servo:
// i_n^2 + e_n^2 w^2 (c_f+c_in)^2 + e_n^2/r_dc^2 + e_h^2/r_dc^2 + 4kT/r_dc.
inline double advanced_tia_input_noise(double f, const AmplifierNoiseSpec& amp, double c_f,
                                       double c_in, double r_dc,
                                       double temperature = constants::default_temperature) {
  amp.validate();
  srs::detail::require(f >= 0.0, "advanced_tia_input_noise: f must be >= 0");
  srs::detail::require(c_f > 0.0 && c_in >= 0.0, "advanced_tia_input_noise: capacitances invalid");
  srs::detail::require(r_dc > 0.0, "advanced_tia_input_noise: r_dc must be > 0");
  srs::detail::require(temperature > 0.0, "advanced_tia_input_noise: temperature must be > 0");
  const double w = 2.0 * M_PI * f;
  const double cap = amp.e_n * w * (c_f + c_in);
  return amp.i_n * amp.i_n + cap * cap + (amp.e_n / r_dc) * (amp.e_n / r_dc) +
         (amp.e_h / r_dc) * (amp.e_h / r_dc) +
         4.0 * constants::boltzmann * temperature / r_dc;
}

// Simplified form keeping only the capacitive and thermal terms. Always a
// lower bound on advanced_tia_input_noise; the gap at 1 MHz with the default
// part values is a few percent of the density (dominated by e_n^2/r_dc^2
// terms) and shrinks quadratically with frequency.
inline double advanced_tia_input_noise_simplified(
    double f, const AmplifierNoiseSpec& amp, double c_f, double c_in, double r_dc,
    double temperature = constants::default_temperature) {
  amp.validate();
  srs::detail::require(f >= 0.0, "advanced_tia_input_noise_simplified: f must be >= 0");
  srs::detail::require(c_f > 0.0 && c_in >= 0.0,
                       "advanced_tia_input_noise_simplified: capacitances invalid");
  srs::detail::require(r_dc > 0.0, "advanced_tia_input_noise_simplified: r_dc must be > 0");
  srs::detail::require(temperature > 0.0,
                       "advanced_tia_input_noise_simplified: temperature must be > 0");
  const double w = 2.0 * M_PI * f;
  const double cap = amp.e_n * w * (c_f + c_in);
  return cap * cap + 4.0 * constants::boltzmann * temperature / r_dc;
}

}  // namespace srs::noise
