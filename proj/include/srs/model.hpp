#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "srs/errors.hpp"
#include "srs/noise.hpp"
#include "srs/spectral_density.hpp"

// Domain types for the optical side of one acquisition channel: the Stokes
// laser, the photodiode, the synthetic Raman specimen, and the decomposition
// of each branch photocurrent into DC, pulse-train, noise, and signal terms.
namespace srs::model {

struct LaserSpec {
  double wavelength = 1000e-9;  // [m]
  double average_power = 40e-6; // [W] at each photodiode
  double rep_rate = 40e6;       // pulse repetition rate [Hz]
  // (frequency [Hz], RIN [dB/Hz]) pairs, interpolated in dB vs ln(f) and
  // clamped outside the table. Default: flat -115 dB/Hz across the band
  // where the lock-in operates.
  std::vector<std::pair<double, double>> rin_curve = {{1e5, -115.0}, {1e7, -115.0}};

  void validate() const {
    srs::detail::require(average_power > 0.0, "LaserSpec: average_power must be > 0");
    srs::detail::require(wavelength >= 400e-9 && wavelength <= 2000e-9,
                         "LaserSpec: wavelength must be in [400 nm, 2000 nm]");
    srs::detail::require(rep_rate > 0.0, "LaserSpec: rep_rate must be > 0");
    srs::detail::require(!rin_curve.empty(), "LaserSpec: rin_curve must not be empty");
    for (std::size_t i = 0; i < rin_curve.size(); ++i) {
      srs::detail::require(rin_curve[i].first > 0.0, "LaserSpec: rin_curve frequencies must be > 0");
      srs::detail::require(std::isfinite(rin_curve[i].second) && rin_curve[i].second <= 0.0,
                           "LaserSpec: rin_curve values must be finite and <= 0 dB/Hz");
      if (i) {
        srs::detail::require(rin_curve[i].first > rin_curve[i - 1].first,
                             "LaserSpec: rin_curve frequencies must be strictly increasing");
      }
    }
  }

  bool rin_is_flat() const {
    for (const auto& p : rin_curve) {
      if (p.second != rin_curve.front().second) return false;
    }
    return true;
  }

  noise::SpectralDensity rin_psd() const {
    validate();
    if (rin_is_flat()) return noise::rin_to_psd(rin_curve.front().second, average_power);
    return noise::rin_to_psd(rin_curve, average_power);
  }
};

struct PhotodiodeSpec {
  double responsivity = 0.5;          // [A/W]
  double junction_capacitance = 10e-12; // [F]; already counted inside the
                                        // front end's total input capacitance

  void validate() const {
    srs::detail::require(responsivity > 0.0 && responsivity <= 1.5,
                         "PhotodiodeSpec: responsivity must be in (0, 1.5]");
    srs::detail::require(junction_capacitance > 0.0,
                         "PhotodiodeSpec: junction_capacitance must be > 0");
  }
};

struct RamanLine {
  double center = 0.0;     // [cm^-1]
  double half_width = 0.0; // HWHM [cm^-1]
  double peak_gain = 0.0;  // [ppm of Stokes power]
};

struct RamanSample {
  std::vector<RamanLine> lines;

  void validate() const {
    for (const auto& l : lines) {
      srs::detail::require(l.center > 0.0, "RamanSample: line centers must be > 0");
      srs::detail::require(l.half_width > 0.0, "RamanSample: line half-widths must be > 0");
      srs::detail::require(std::isfinite(l.peak_gain) && l.peak_gain >= 0.0,
                           "RamanSample: line peak gains must be >= 0");
    }
  }

  // Two C-H stretch lines; widths are illustrative, peak gain 250 ppm.
  static RamanSample methanol() {
    return RamanSample{{{2850.0, 25.0, 250.0}, {2950.0, 25.0, 250.0}}};
  }
};

enum class Branch { signal, reference };

struct PhotocurrentComponents {
  double i_dc = 0.0;              // [A]
  double i_train_amplitude = 0.0; // [A], pulse-train AC amplitude at rep_rate
  noise::SpectralDensity s_laser_noise =
      noise::SpectralDensity::flat(noise::Referral::current, 0.0); // common-mode
  noise::SpectralDensity s_shot =
      noise::SpectralDensity::flat(noise::Referral::current, 0.0); // per-branch
  double i_raman_amplitude = 0.0; // [A], modulated at f_m
  double f_m = 0.0;               // [Hz]
};

// DC photocurrent of one branch.
inline double dc_current(const LaserSpec& laser, const PhotodiodeSpec& pd) {
  laser.validate();
  pd.validate();
  return pd.responsivity * laser.average_power;
}

// Raman shift axis [cm^-1] for a pump/Stokes wavelength pair.
inline double wavenumber_shift(double lambda_pump, double lambda_stokes) {
  srs::detail::require(lambda_pump > 0.0 && lambda_stokes > 0.0,
                       "wavenumber_shift: wavelengths must be > 0");
  srs::detail::require(lambda_stokes >= lambda_pump,
                       "wavenumber_shift: anti-Stokes (lambda_stokes < lambda_pump) not supported");
  // 1e7 * (1/lambda_p[nm] - 1/lambda_s[nm]) == 1e-2 * (1/lp[m] - 1/ls[m]).
  return 1e-2 * (1.0 / lambda_pump - 1.0 / lambda_stokes);
}

// Relative Stokes gain [ppm] of the sample at a given shift: sum of
// Lorentzians each normalized to 1 at its center.
inline double sample_gain_at(const RamanSample& sample, double shift) {
  sample.validate();
  srs::detail::require(shift >= 0.0, "sample_gain_at: shift must be >= 0");
  double g = 0.0;
  for (const auto& l : sample.lines) {
    const double d = shift - l.center;
    g += l.peak_gain * l.half_width * l.half_width / (d * d + l.half_width * l.half_width);
  }
  return g;
}

// Decomposition of one branch photocurrent. The reference branch carries no
// Raman term; the laser-noise density is shared (common mode) between
// branches while the shot density is independent per branch.
inline PhotocurrentComponents photocurrent_components(const LaserSpec& laser,
                                                      const PhotodiodeSpec& pd,
                                                      double gain_ppm, double f_m,
                                                      Branch branch) {
  laser.validate();
  pd.validate();
  srs::detail::require(std::isfinite(gain_ppm) && gain_ppm >= 0.0,
                       "photocurrent_components: gain_ppm must be >= 0");
  srs::detail::require(f_m > 0.0 && f_m < laser.rep_rate / 2.0,
                       "photocurrent_components: f_m must lie in (0, rep_rate/2)");
  PhotocurrentComponents c;
  c.i_dc = dc_current(laser, pd);
  c.i_train_amplitude = c.i_dc; // fully modulated pulse train
  c.s_laser_noise = noise::refer(laser.rin_psd(), noise::Referral::current, pd.responsivity);
  c.s_shot = noise::shot_psd_current(c.i_dc);
  c.i_raman_amplitude = branch == Branch::signal ? c.i_dc * gain_ppm * 1e-6 : 0.0;
  c.f_m = f_m;
  return c;
}

}  // namespace srs::model
