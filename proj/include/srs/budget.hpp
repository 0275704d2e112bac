#pragma once

#include "srs/chain.hpp"
#include "srs/frontend.hpp"
#include "srs/model.hpp"
#include "srs/noise.hpp"
#include "srs/spectral_density.hpp"

// Total input-referred noise of one balanced channel, expressed as an
// optical-power density at the signal input. Shot and electronics noise are
// uncorrelated between the two branches and add with a factor 2; laser
// intensity noise is common mode and leaks through the differential stage
// suppressed by the squared linear CMRR.
namespace srs::noise {

struct BalancedNoiseBudget {
  double shot = 0.0;        // [W^2/Hz]
  double electronics = 0.0; // [W^2/Hz]
  double rin_leak = 0.0;    // [W^2/Hz]
  double total = 0.0;       // [W^2/Hz]
};

inline BalancedNoiseBudget balanced_noise_breakdown(const chain::FrontEndConfig& fe,
                                                    const model::LaserSpec& laser,
                                                    const model::PhotodiodeSpec& pd,
                                                    double f) {
  fe.validate();
  const double i_dc = model::dc_current(laser, pd);
  const double r2 = pd.responsivity * pd.responsivity;
  BalancedNoiseBudget b;
  b.shot = 2.0 * shot_psd_current(i_dc)(f) / r2;
  b.electronics = 2.0 *
                  advanced_tia_input_noise(f, fe.amp_noise, fe.c_f, fe.c_in, fe.r_dc,
                                           fe.temperature) /
                  r2;
  b.rin_leak = laser.rin_psd()(f) / (fe.cmrr * fe.cmrr);
  b.total = b.shot + b.electronics + b.rin_leak;
  return b;
}

inline SpectralDensity balanced_total_input_noise(const chain::FrontEndConfig& fe,
                                                  const model::LaserSpec& laser,
                                                  const model::PhotodiodeSpec& pd) {
  fe.validate();
  laser.validate();
  pd.validate();
  return SpectralDensity::from_function(Referral::optical_power, [fe, laser, pd](double f) {
    return balanced_noise_breakdown(fe, laser, pd, f).total;
  });
}

}  // namespace srs::noise
