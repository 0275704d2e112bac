#pragma once

#include <cmath>

#include "srs/constants.hpp"
#include "srs/errors.hpp"
#include "srs/noise.hpp"

namespace srs::chain {

// Slow feedback network that routes the DC photocurrent around the
// integrator: an inverting integrator with a zero (r_x, c_x, r_y) followed
// by an output pole (r_d, c_d). Defaults give very high DC gain, a zero
// near 1 Hz, and |H| < 1e-2 at the 1 MHz modulation frequency.
struct HNetworkConfig {
  double r_x = 1e6;    // [Ohm]
  double c_x = 160e-9; // [F]
  double r_y = 100e3;  // [Ohm]
  double r_d = 16e3;   // [Ohm]
  double c_d = 15e-9;  // [F]

  void validate() const {
    srs::detail::require(r_x > 0 && c_x > 0 && r_y > 0 && r_d > 0 && c_d > 0,
                         "HNetworkConfig: all component values must be > 0");
  }
};

// Every per-channel component value of the acquisition chain: integrator
// front end, DC path, differential stage, instrumentation amplifier, output
// low-pass, and the lock-in modulation settings.
struct FrontEndConfig {
  double c_f = 0.5e-12;  // integrator feedback capacitance [F]
  double c_in = 15e-12;  // total input capacitance [F]
  double r_dc = 20e3;    // DC transimpedance [Ohm]
  double gbwp = 4e9;     // op-amp gain-bandwidth product [Hz]
  noise::AmplifierNoiseSpec amp_noise{};
  double g_diff = 40.0;  // differential stage gain
  double cmrr = 56.0;    // linear common-mode rejection ratio
  double g_ina = 10.0;   // instrumentation amplifier gain
  double tau = 330e-6;   // output low-pass time constant [s]
  HNetworkConfig h_net{};
  double f_m = 1e6;         // modulation / demodulation frequency [Hz]
  double mixer_phase = 0.0; // demodulation reference phase [rad]
  double temperature = constants::default_temperature; // [K] for 4kT terms

  void validate() const {
    srs::detail::require(c_f > 0 && c_in > 0 && r_dc > 0 && gbwp > 0,
                         "FrontEndConfig: c_f, c_in, r_dc, gbwp must be > 0");
    amp_noise.validate();
    srs::detail::require(g_diff > 0 && g_ina > 0, "FrontEndConfig: stage gains must be > 0");
    srs::detail::require(cmrr >= 1.0, "FrontEndConfig: cmrr must be >= 1");
    srs::detail::require(tau > 0, "FrontEndConfig: tau must be > 0");
    h_net.validate();
    srs::detail::require(f_m > 0, "FrontEndConfig: f_m must be > 0");
    srs::detail::require(std::isfinite(mixer_phase), "FrontEndConfig: mixer_phase must be finite");
    srs::detail::require(temperature > 0, "FrontEndConfig: temperature must be > 0");
  }
};

}  // namespace srs::chain
