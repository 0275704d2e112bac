#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "srs/chain.hpp"
#include "srs/errors.hpp"
#include "srs/fft.hpp"
#include "srs/frontend.hpp"
#include "srs/model.hpp"
#include "srs/noise.hpp"
#include "srs/rng.hpp"
#include "srs/spectral_density.hpp"

// Time-domain Monte Carlo engine. Synthesizes branch photocurrents sample by
// sample, runs them through discretized chain stages (bilinear-transform
// first-order sections), demodulates with a ±1 square reference, and
// measures lock-in output statistics. A closed-form companion
// (analytic_demod_rms) predicts the same output RMS from the input spectral
// densities via the square-wave harmonic folding sum, so the two paths can
// cross-check each other.
namespace srs::timesim {

struct SimConfig {
  double sample_rate = 256e6; // [Hz]
  double duration = 20e-3;    // [s] per trial
  std::uint64_t seed = 12345;
  int n_trials = 20;
  bool include_pulse_train = false;
  double transient_discard = -1.0; // [s]; negative means the default 5*tau
  bool noise_shot = true;
  bool noise_electronics = true;
  bool noise_rin = true;

  double discard_for(double tau) const {
    return transient_discard < 0.0 ? 5.0 * tau : transient_discard;
  }

  // The demodulator reference is generated on the sample grid, so the grid
  // must carry a whole number of quarter periods of f_m.
  void validate(const chain::FrontEndConfig& fe) const {
    srs::detail::require(sample_rate >= 16.0 * fe.f_m,
                         "SimConfig: sample_rate must be >= 16 * f_m");
    const double ratio = sample_rate / fe.f_m;
    const double rounded = std::round(ratio);
    srs::detail::require(std::abs(ratio - rounded) < 1e-9 * ratio &&
                             std::fmod(rounded, 4.0) == 0.0,
                         "SimConfig: sample_rate must be an integer multiple of 4 * f_m");
    srs::detail::require(duration >= 20.0 * fe.tau, "SimConfig: duration must be >= 20 * tau");
    srs::detail::require(n_trials >= 1, "SimConfig: n_trials must be >= 1");
    srs::detail::require(discard_for(fe.tau) < duration,
                         "SimConfig: transient_discard must be < duration");
  }
};

// Uniformly sampled waveform. The unit tag reuses the density referral
// domains: optical_power = W, current = A, voltage = V.
struct Trace {
  double dt = 0.0;
  noise::Referral unit = noise::Referral::voltage;
  std::vector<double> samples;

  void validate() const {
    srs::detail::require(dt > 0.0, "Trace: dt must be > 0");
    srs::detail::require(samples.size() >= 2, "Trace: need at least 2 samples");
    for (double s : samples) {
      if (!std::isfinite(s)) throw numeric_error("Trace: non-finite sample");
    }
  }

  double duration() const { return dt * static_cast<double>(samples.size()); }
};

struct ScanPoint {
  double stokes_wavelength = 0.0; // [m]
  double shift = 0.0;             // [cm^-1]
  double normalized_gain = 0.0;   // [ppm]
  double v_dc_sig = 0.0;          // [V]
  double v_dc_ref = 0.0;          // [V]
};

struct ScanResult {
  std::vector<ScanPoint> points;

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      srs::detail::require(std::isfinite(points[i].normalized_gain),
                           "ScanResult: non-finite gain");
      if (i) {
        srs::detail::require(points[i].stokes_wavelength > points[i - 1].stokes_wavelength,
                             "ScanResult: wavelengths must be strictly increasing");
      }
    }
  }
};

namespace detail {

// First-order IIR section y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1].
struct FirstOrder {
  double b0 = 1.0, b1 = 0.0, a1 = 0.0;
  double x1 = 0.0, y1 = 0.0;

  double step(double x) {
    const double y = b0 * x + b1 * x1 - a1 * y1;
    x1 = x;
    y1 = y;
    return y;
  }

  void reset() { x1 = y1 = 0.0; }

  std::complex<double> response(std::complex<double> zinv) const {
    return (b0 + b1 * zinv) / (1.0 + a1 * zinv);
  }

  // Variance gain for unit-variance white input (sum of squared impulse
  // response, closed form for one pole).
  double white_variance_gain() const {
    return (b0 * b0 + b1 * b1 - 2.0 * a1 * b0 * b1) / (1.0 - a1 * a1);
  }
};

// Bilinear-transform discretizations. K is the bilinear frequency constant;
// the plain value 2*fs is used except where a response must be exact at one
// frequency (prewarping).
inline FirstOrder make_highpass(double f_c, double fs) {
  const double k = 2.0 * fs;
  const double w = 2.0 * M_PI * f_c;
  return FirstOrder{k / (k + w), -k / (k + w), (w - k) / (k + w)};
}

inline FirstOrder make_lowpass(double tau, double fs) {
  const double k = 2.0 * fs;
  const double w = 1.0 / tau;
  return FirstOrder{w / (k + w), w / (k + w), (w - k) / (k + w)};
}

// Leaky integrator (1/c_f)/(s + 2*pi*f_leak), prewarped so the gain at
// f_exact matches the continuous form exactly.
inline FirstOrder make_leaky_integrator(double c_f, double f_leak, double fs, double f_exact) {
  const double wm = 2.0 * M_PI * f_exact;
  const double k = wm / std::tan(wm / (2.0 * fs));
  const double w = 2.0 * M_PI * f_leak;
  const double g = 1.0 / c_f;
  return FirstOrder{g / (k + w), g / (k + w), (w - k) / (k + w)};
}

// DC leak of the discretized integrator; a modeling artifact that bounds
// drift, well below every frequency of interest.
inline constexpr double integrator_leak_hz = 100.0;

// Corner of the two conditioning high-pass sections that stand in for the
// DC-routing loop's in-band suppression. Placed at f_m/20 so they are
// transparent at the modulation frequency (|H|^2 down by ~0.5% combined,
// accounted identically in the simulator and the analytic fold).
inline double conditioning_corner(double f_m) { return f_m / 20.0; }

// Current-to-TIA-output signal path: two conditioning high-passes plus the
// leaky integrator. The amplifier inversion is absorbed (gains positive).
struct BranchChain {
  FirstOrder hp1, hp2, integ;

  static BranchChain make(const chain::FrontEndConfig& fe, double fs) {
    BranchChain c;
    c.hp1 = make_highpass(conditioning_corner(fe.f_m), fs);
    c.hp2 = make_highpass(conditioning_corner(fe.f_m), fs);
    c.integ = make_leaky_integrator(fe.c_f, integrator_leak_hz, fs, fe.f_m);
    return c;
  }

  double step(double i) { return integ.step(hp2.step(hp1.step(i))); }

  std::complex<double> response(std::complex<double> zinv) const {
    return hp1.response(zinv) * hp2.response(zinv) * integ.response(zinv);
  }
};

inline std::size_t samples_per_period(const chain::FrontEndConfig& fe, const SimConfig& sim) {
  return static_cast<std::size_t>(std::llround(sim.sample_rate / fe.f_m));
}

// Demodulation reference offset in samples: a quarter period aligns the
// reference with the integrated (triangle) signal fundamental; mixer_phase
// adds to that, snapped to the grid.
inline std::size_t demod_offset(const chain::FrontEndConfig& fe, std::size_t n_period) {
  const long long np = static_cast<long long>(n_period);
  long long off = np / 4 + std::llround(fe.mixer_phase / (2.0 * M_PI) * static_cast<double>(np));
  off %= np;
  if (off < 0) off += np;
  return static_cast<std::size_t>(off);
}

// White one-sided densities feeding one branch, grouped by injection point.
struct NoiseModel {
  double s_branch_current = 0.0; // flat current density at the input [A^2/Hz]
  double s_cap_voltage = 0.0;    // flat voltage density at the TIA output [V^2/Hz]
  bool rin_enabled = false;
  bool rin_flat = true;
  double s_rin_current_flat = 0.0; // [A^2/Hz]
  noise::SpectralDensity rin_current; // used when the curve is not flat

  static NoiseModel make(const chain::FrontEndConfig& fe, const model::LaserSpec& laser,
                         const model::PhotodiodeSpec& pd, const SimConfig& sim) {
    NoiseModel nm;
    const double i_dc = model::dc_current(laser, pd);
    if (sim.noise_shot) {
      nm.s_branch_current += 2.0 * constants::elementary_charge * i_dc;
    }
    if (sim.noise_electronics) {
      const auto& a = fe.amp_noise;
      nm.s_branch_current += a.i_n * a.i_n +
                             (a.e_n * a.e_n + a.e_h * a.e_h) / (fe.r_dc * fe.r_dc) +
                             4.0 * constants::boltzmann * fe.temperature / fe.r_dc;
      const double cap_ratio = (fe.c_f + fe.c_in) / fe.c_f;
      nm.s_cap_voltage = a.e_n * a.e_n * cap_ratio * cap_ratio;
    }
    if (sim.noise_rin) {
      nm.rin_enabled = true;
      nm.rin_current = noise::refer(laser.rin_psd(), noise::Referral::current, pd.responsivity);
      nm.rin_flat = nm.rin_current.is_flat();
      if (nm.rin_flat) nm.s_rin_current_flat = nm.rin_current.flat_value();
    }
    return nm;
  }
};

inline unsigned worker_count() {
  if (const char* e = std::getenv("SRS_SIM_THREADS")) {
    const long v = std::strtol(e, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(std::min(v, 256L));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

// Index-parallel loop; results must be written to per-index slots so the
// outcome is independent of scheduling.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(worker_count(), n == 0 ? 1 : n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(error);
}

// Gaussian trace with the given one-sided density, synthesized by Hermitian
// frequency-domain shaping. length samples at rate fs, stream given by key.
inline std::vector<double> synth_shaped(const noise::SpectralDensity& psd, std::size_t length,
                                        double fs, std::uint64_t key) {
  const std::size_t m = fft::next_pow2(std::max<std::size_t>(length, 2));
  std::vector<std::complex<double>> spec(m, {0.0, 0.0});
  rng::GaussianStream g(key);
  const double df = fs / static_cast<double>(m);
  for (std::size_t k = 1; k < m / 2; ++k) {
    const double s = psd(df * static_cast<double>(k));
    const double amp = std::sqrt(s * fs * static_cast<double>(m) / 4.0);
    const double a = g.next();
    const double b = g.next();
    spec[k] = {amp * a, amp * b};
    spec[m - k] = std::conj(spec[k]);
  }
  spec[m / 2] = {std::sqrt(psd(fs / 2.0) * fs * static_cast<double>(m) / 2.0) * g.next(), 0.0};
  fft::inverse(spec);
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = spec[i].real();
  return out;
}

// RNG source ids (part of the deterministic stream addressing).
enum : std::uint64_t {
  source_branch_white = 1,
  source_cap_voltage = 2,
  source_rin = 3,
  source_standalone_synth = 4,
};

}  // namespace detail

// Zero-mean Gaussian trace whose periodogram follows the given density.
// Deterministic in (psd, sim.seed).
inline Trace synth_colored_noise(const noise::SpectralDensity& psd, const SimConfig& sim) {
  srs::detail::require(sim.sample_rate > 0 && sim.duration > 0,
                       "synth_colored_noise: sample_rate and duration must be > 0");
  const std::size_t length =
      static_cast<std::size_t>(std::llround(sim.duration * sim.sample_rate));
  srs::detail::require(length >= 2, "synth_colored_noise: fewer than 2 samples requested");
  Trace t;
  t.dt = 1.0 / sim.sample_rate;
  t.unit = psd.referral();
  const std::uint64_t key =
      rng::stream_key(sim.seed, 0, 0, detail::source_standalone_synth);
  if (psd.is_flat()) {
    const double sigma = std::sqrt(psd.flat_value() * sim.sample_rate / 2.0);
    rng::GaussianStream g(key);
    t.samples.resize(length);
    for (auto& s : t.samples) s = sigma * g.next();
  } else {
    t.samples = detail::synth_shaped(psd, length, sim.sample_rate, key);
  }
  t.validate();
  return t;
}

// Standard deviation of the samples after the discard window.
inline double measure_rms(const Trace& trace, double discard) {
  trace.validate();
  srs::detail::require(discard >= 0.0 && discard < trace.duration(),
                       "measure_rms: discard must be in [0, duration)");
  const std::size_t i0 = static_cast<std::size_t>(std::ceil(discard / trace.dt));
  srs::detail::require(trace.samples.size() - i0 >= 2, "measure_rms: empty window");
  double mean = 0.0;
  for (std::size_t i = i0; i < trace.samples.size(); ++i) mean += trace.samples[i];
  const double n = static_cast<double>(trace.samples.size() - i0);
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = i0; i < trace.samples.size(); ++i) {
    const double d = trace.samples[i] - mean;
    ss += d * d;
  }
  return std::sqrt(ss / n);
}

struct ChannelResult {
  Trace v_out;            // lock-in output of the last trial [V]
  double v_dc_sig = 0.0;  // DC-path output, signal branch [V]
  double v_dc_ref = 0.0;  // DC-path output, reference branch [V]
  double demod_mean = 0.0; // mean of per-period lock-in output bins [V]
  double demod_rms = 0.0;  // fluctuation RMS of those bins [V]
  std::size_t n_bins = 0;  // bins entering the statistics (all trials)
};

// Demodulation gain of the discretized chain: lock-in output volts per
// ampere of modulated signal current amplitude. Computed in closed form
// from the one-period DFT of the modulation and reference squares and the
// exact z-domain chain response, i.e. the periodic steady state of the
// simulator with no noise. (The continuous-chain counterpart is
// total_ac_gain * pi/4: the integrator turns the square into a triangle,
// whose square-reference correlation carries pi/4 relative to the
// square-square convention of mixer_demod.)
inline double discrete_signal_gain(const chain::FrontEndConfig& fe, const SimConfig& sim) {
  fe.validate();
  sim.validate(fe);
  const std::size_t n = detail::samples_per_period(fe, sim);
  srs::detail::require(n <= 65536, "discrete_signal_gain: sample_rate/f_m too large");
  const std::size_t off = detail::demod_offset(fe, n);
  const auto chain_model = detail::BranchChain::make(fe, sim.sample_rate);
  std::complex<double> acc(0.0, 0.0);
  const double nd = static_cast<double>(n);
  for (std::size_t k = 1; k < n; ++k) {
    const double ang = -2.0 * M_PI * static_cast<double>(k) / nd;
    const std::complex<double> wk(std::cos(ang), std::sin(ang));
    // DFT of the +/-0.5 modulation square and the +/-1 reference at bin k.
    std::complex<double> mk(0.0, 0.0), dk(0.0, 0.0);
    std::complex<double> _w(1.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double mv = (i < n / 2) ? 0.5 : -0.5;
      const double dv = (((i + n - off) % n) < n / 2) ? 1.0 : -1.0;
      mk += mv * _w;
      dk += dv * _w;
      _w *= wk;
    }
    const std::complex<double> zinv = wk; // z^-1 at this bin
    acc += chain_model.response(zinv) * mk * std::conj(dk);
  }
  const double mean_per_amp = acc.real() / (nd * nd);
  return mean_per_amp * fe.g_diff * (1.0 + 0.5 / fe.cmrr) * fe.g_ina;
}

// One balanced channel: both branch currents synthesized per sample with a
// shared intensity-noise realization and independent white terms, pushed
// through the discretized chain, demodulated, low-pass filtered, and binned
// per modulation period. Statistics pool all post-transient bins of all
// trials. stream_point decorrelates calls that belong to different scan
// points; store_v_out controls whether the last trial's output trace is kept.
inline ChannelResult simulate_channel(const model::LaserSpec& laser,
                                      const model::PhotodiodeSpec& pd, double gain_ppm,
                                      const chain::FrontEndConfig& fe, const SimConfig& sim,
                                      std::uint64_t stream_point = 0, bool store_v_out = true) {
  laser.validate();
  pd.validate();
  fe.validate();
  sim.validate(fe);
  srs::detail::require(std::isfinite(gain_ppm) && gain_ppm >= 0.0,
                       "simulate_channel: gain_ppm must be >= 0");

  const double fs = sim.sample_rate;
  const double dt = 1.0 / fs;
  const std::size_t n_period = detail::samples_per_period(fe, sim);
  const std::size_t n_bins_total =
      static_cast<std::size_t>(std::llround(sim.duration * fs)) / n_period;
  const std::size_t length = n_bins_total * n_period;
  srs::detail::require(n_bins_total >= 2, "simulate_channel: duration too short");
  const std::size_t off = detail::demod_offset(fe, n_period);

  const double i_dc = model::dc_current(laser, pd);
  const double delta_i = i_dc * gain_ppm * 1e-6;
  const double inv2cmrr = 0.5 / fe.cmrr;
  const auto nm = detail::NoiseModel::make(fe, laser, pd, sim);
  const double sigma_branch = std::sqrt(nm.s_branch_current * fs / 2.0);
  const double sigma_cap = std::sqrt(nm.s_cap_voltage * fs / 2.0);
  const double sigma_rin_flat = std::sqrt(nm.s_rin_current_flat * fs / 2.0);
  const double w_rep = 2.0 * M_PI * laser.rep_rate;

  const double discard = sim.discard_for(fe.tau);
  const std::size_t skip_bins = static_cast<std::size_t>(
      std::min<double>(static_cast<double>(n_bins_total),
                       std::ceil(discard / (static_cast<double>(n_period) * dt))));
  srs::detail::require(n_bins_total - skip_bins >= 2,
                       "simulate_channel: no bins left after transient discard");

  const std::size_t n_trials = static_cast<std::size_t>(sim.n_trials);
  std::vector<double> trial_sum(n_trials, 0.0), trial_sumsq(n_trials, 0.0);
  Trace v_out;
  v_out.dt = dt;
  v_out.unit = noise::Referral::voltage;
  if (store_v_out) v_out.samples.resize(length);

  detail::parallel_for(n_trials, [&](std::size_t trial) {
    auto chain_s = detail::BranchChain::make(fe, fs);
    auto chain_r = detail::BranchChain::make(fe, fs);
    auto lpf = detail::make_lowpass(fe.tau, fs);
    rng::GaussianStream g_sig(
        rng::stream_key(sim.seed, stream_point, trial, detail::source_branch_white, 0));
    rng::GaussianStream g_ref(
        rng::stream_key(sim.seed, stream_point, trial, detail::source_branch_white, 1));
    rng::GaussianStream g_cap_s(
        rng::stream_key(sim.seed, stream_point, trial, detail::source_cap_voltage, 0));
    rng::GaussianStream g_cap_r(
        rng::stream_key(sim.seed, stream_point, trial, detail::source_cap_voltage, 1));
    rng::GaussianStream g_rin(
        rng::stream_key(sim.seed, stream_point, trial, detail::source_rin, 0));
    std::vector<double> rin_buf;
    if (nm.rin_enabled && !nm.rin_flat) {
      rin_buf = detail::synth_shaped(
          nm.rin_current, length, fs,
          rng::stream_key(sim.seed, stream_point, trial, detail::source_rin, 0));
    }

    const bool keep = store_v_out && trial == n_trials - 1;
    double sum = 0.0, sumsq = 0.0;
    double bin_acc = 0.0;
    std::size_t bin_index = 0, in_bin = 0;
    for (std::size_t i = 0; i < length; ++i) {
      const std::size_t ph = i % n_period;
      double i_shared = 0.0;
      if (nm.rin_enabled) {
        i_shared += nm.rin_flat ? sigma_rin_flat * g_rin.next() : rin_buf[i];
      }
      if (sim.include_pulse_train) {
        i_shared -= i_dc * std::cos(w_rep * static_cast<double>(i) * dt);
      }
      double i_sig = i_shared + delta_i * (ph < n_period / 2 ? 0.5 : -0.5);
      double i_ref = i_shared;
      if (sigma_branch > 0.0) {
        i_sig += sigma_branch * g_sig.next();
        i_ref += sigma_branch * g_ref.next();
      }
      double v_s = chain_s.step(i_sig);
      double v_r = chain_r.step(i_ref);
      if (sigma_cap > 0.0) {
        v_s += sigma_cap * g_cap_s.next();
        v_r += sigma_cap * g_cap_r.next();
      }
      const double v_d = fe.g_diff * ((v_s - v_r) + (v_s + v_r) * inv2cmrr);
      const double ref = (((i + n_period - off) % n_period) < n_period / 2) ? 1.0 : -1.0;
      const double y = lpf.step(ref * v_d * fe.g_ina);
      if (keep) v_out.samples[i] = y;
      bin_acc += y;
      if (++in_bin == n_period) {
        if (bin_index >= skip_bins) {
          const double b = bin_acc / static_cast<double>(n_period);
          sum += b;
          sumsq += b * b;
        }
        bin_acc = 0.0;
        in_bin = 0;
        ++bin_index;
      }
    }
    if (!std::isfinite(sum) || !std::isfinite(sumsq)) {
      throw numeric_error("simulate_channel: non-finite statistics in trial " +
                          std::to_string(trial));
    }
    trial_sum[trial] = sum;
    trial_sumsq[trial] = sumsq;
  });

  const double bins_per_trial = static_cast<double>(n_bins_total - skip_bins);
  const double n_all = bins_per_trial * static_cast<double>(n_trials);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t t = 0; t < n_trials; ++t) {
    sum += trial_sum[t];
    sumsq += trial_sumsq[t];
  }
  ChannelResult r;
  r.demod_mean = sum / n_all;
  r.demod_rms = std::sqrt(std::max(0.0, sumsq / n_all - r.demod_mean * r.demod_mean));
  r.n_bins = static_cast<std::size_t>(n_all);
  r.v_dc_sig = chain::dc_output(i_dc + 0.5 * delta_i, fe.r_dc);
  r.v_dc_ref = chain::dc_output(i_dc, fe.r_dc);
  if (store_v_out) {
    v_out.validate();
    r.v_out = std::move(v_out);
  }
  return r;
}

// Closed-form prediction of the lock-in output fluctuation RMS for the
// noise sources enabled in sim. The ±1 reference folds the mixer-input
// density at every odd harmonic with the squared Fourier weight of the
// sampled reference; the per-period binning and the discretized low-pass
// determine the bandwidth. Shares only filter coefficients and densities
// with the Monte Carlo path, no sampled data.
inline double analytic_demod_rms(const chain::FrontEndConfig& fe, const model::LaserSpec& laser,
                                 const model::PhotodiodeSpec& pd, const SimConfig& sim) {
  fe.validate();
  laser.validate();
  pd.validate();
  sim.validate(fe);
  const double fs = sim.sample_rate;
  const std::size_t n = detail::samples_per_period(fe, sim);
  const auto nm = detail::NoiseModel::make(fe, laser, pd, sim);
  const auto chain_model = detail::BranchChain::make(fe, fs);
  const double k = 0.5 / fe.cmrr;

  auto mixer_density = [&](double f) {
    const double theta = 2.0 * M_PI * f / fs;
    const std::complex<double> zinv(std::cos(theta), -std::sin(theta));
    const double h2 = std::norm(chain_model.response(zinv));
    double s = 2.0 * (1.0 + k * k) * (nm.s_branch_current * h2 + nm.s_cap_voltage);
    if (nm.rin_enabled) {
      const double s_rin = nm.rin_flat ? nm.s_rin_current_flat : nm.rin_current(f);
      s += 4.0 * k * k * s_rin * h2;
    }
    return s * fe.g_diff * fe.g_diff;
  };

  // Squared Fourier-series weights of the sampled ±1 reference.
  std::vector<double> w(n, 0.0);
  {
    const double nd = static_cast<double>(n);
    for (std::size_t kk = 1; kk < n; ++kk) {
      std::complex<double> dk(0.0, 0.0);
      const double ang = -2.0 * M_PI * static_cast<double>(kk) / nd;
      const std::complex<double> wk(std::cos(ang), std::sin(ang));
      std::complex<double> ww(1.0, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        dk += ((i < n / 2) ? 1.0 : -1.0) * ww;
        ww *= wk;
      }
      w[kk] = std::norm(dk) / (nd * nd);
    }
  }

  const double f_m = fe.f_m;
  auto fold = [&](double f) {
    f = std::fabs(f);
    f = std::fmod(f, fs);
    if (f > fs / 2.0) f = fs - f;
    return f;
  };

  // Demodulated density near DC, and its full shape for the out-of-band
  // correction integral.
  auto demod_density = [&](double f) {
    double s = 0.0;
    for (std::size_t kk = 1; kk < n; ++kk) {
      if (w[kk] == 0.0) continue;
      s += w[kk] * mixer_density(fold(f - static_cast<double>(kk) * f_m));
    }
    return s;
  };
  const double s0 = demod_density(0.0);

  // Exact white-noise variance gain of low-pass + per-period mean.
  const auto lpf = detail::make_lowpass(fe.tau, fs);
  double kernel_gain = 0.0;
  {
    const double h0 = lpf.b0;
    const double hg = lpf.b1 - lpf.a1 * lpf.b0; // h[n] = hg * (-a1)^(n-1), n >= 1
    const double r = -lpf.a1;
    const std::size_t n_imp = static_cast<std::size_t>(
        std::min<double>(60.0 * fe.tau * fs, 2e8));
    double window_sum = 0.0;
    double h_prev = 0.0;
    std::vector<double> ring(n, 0.0);
    for (std::size_t i = 0; i < n_imp; ++i) {
      const double h = (i == 0) ? h0 : (i == 1 ? hg : h_prev * r);
      if (i >= 1) h_prev = h;
      window_sum += h - ring[i % n];
      ring[i % n] = h;
      // window_sum holds the sum of the last min(i+1, n) impulse values, so
      // the leading partial windows of the convolution are included too.
      const double c = window_sum / static_cast<double>(n);
      kernel_gain += c * c;
    }
  }
  double variance = s0 * (fs / 2.0) * kernel_gain;

  // Correction for the demodulated density's deviation from flatness inside
  // the low-pass stopband (images of the folded spectrum). The per-period
  // mean has nulls at multiples of f_m, which the kernel factor captures.
  {
    const double f_lo = 1.0, f_hi = fs / 2.0;
    const int n_grid = 400;
    double prev_f = f_lo, prev_v = 0.0;
    bool first = true;
    for (int i = 0; i <= n_grid; ++i) {
      const double f = f_lo * std::pow(f_hi / f_lo, static_cast<double>(i) / n_grid);
      const double theta = 2.0 * M_PI * f / fs;
      const std::complex<double> zinv(std::cos(theta), -std::sin(theta));
      const double lp2 = std::norm(lpf.response(zinv));
      const double sn = std::sin(M_PI * f * static_cast<double>(n) / fs);
      const double sd = static_cast<double>(n) * std::sin(M_PI * f / fs);
      const double kern2 = (std::fabs(sd) < 1e-300) ? 1.0 : (sn / sd) * (sn / sd);
      const double v = (demod_density(f) - s0) * lp2 * kern2;
      if (!first) variance += 0.5 * (prev_v + v) * (f - prev_f);
      prev_f = f;
      prev_v = v;
      first = false;
    }
  }

  return fe.g_ina * std::sqrt(std::max(0.0, variance));
}

struct ComparisonRow {
  std::string label;
  double mc_rms = 0.0;
  double analytic_rms = 0.0;
  double ratio = 0.0;
};

// Monte Carlo vs closed-form output RMS for the standard source
// combinations. The last row enables every source including the
// common-mode intensity noise leaking through the finite CMRR.
inline std::vector<ComparisonRow> compare_analytic(const chain::FrontEndConfig& fe,
                                                   const model::LaserSpec& laser,
                                                   const model::PhotodiodeSpec& pd,
                                                   const SimConfig& sim) {
  struct Combo {
    const char* label;
    bool shot, elec, rin;
  };
  const Combo combos[] = {
      {"shot", true, false, false},
      {"electronics", false, true, false},
      {"shot+electronics", true, true, false},
      {"shot+electronics+rin", true, true, true},
  };
  std::vector<ComparisonRow> rows;
  for (const auto& c : combos) {
    SimConfig s = sim;
    s.noise_shot = c.shot;
    s.noise_electronics = c.elec;
    s.noise_rin = c.rin;
    ComparisonRow row;
    row.label = c.label;
    row.mc_rms = simulate_channel(laser, pd, 0.0, fe, s, 0, false).demod_rms;
    row.analytic_rms = analytic_demod_rms(fe, laser, pd, s);
    row.ratio = row.analytic_rms > 0.0 ? row.mc_rms / row.analytic_rms
                                       : (row.mc_rms == 0.0 ? 1.0 : INFINITY);
    rows.push_back(row);
  }
  return rows;
}

// Wavelength scan: one channel simulation per Stokes point, inverted back to
// a relative-gain spectrum through the discrete demodulation gain and the
// DC photocurrent.
inline ScanResult run_scan(const model::RamanSample& sample, double lambda_pump,
                           double lambda_lo, double lambda_hi, int n_points,
                           const SimConfig& per_point, const chain::FrontEndConfig& fe,
                           const model::LaserSpec& laser_template,
                           const model::PhotodiodeSpec& pd) {
  sample.validate();
  fe.validate();
  pd.validate();
  srs::detail::require(n_points >= 2, "run_scan: need at least 2 points");
  srs::detail::require(lambda_hi > lambda_lo && lambda_lo > lambda_pump,
                       "run_scan: wavelength range must be above the pump");
  // A scan is one acquisition of `duration` per point; trial repetition is a
  // Monte Carlo statistics concept and is ignored here.
  SimConfig pp = per_point;
  pp.n_trials = 1;
  const double kappa = discrete_signal_gain(fe, pp);
  const double i_dc = model::dc_current(laser_template, pd);
  ScanResult result;
  result.points.resize(static_cast<std::size_t>(n_points));
  detail::parallel_for(static_cast<std::size_t>(n_points), [&](std::size_t p) {
    const double t = static_cast<double>(p) / static_cast<double>(n_points - 1);
    const double lambda_s = lambda_lo + (lambda_hi - lambda_lo) * t;
    model::LaserSpec laser = laser_template;
    laser.wavelength = lambda_s;
    const double shift = model::wavenumber_shift(lambda_pump, lambda_s);
    const double gain = model::sample_gain_at(sample, shift);
    const auto res = simulate_channel(laser, pd, gain, fe, pp, p + 1, false);
    ScanPoint& sp = result.points[p];
    sp.stokes_wavelength = lambda_s;
    sp.shift = shift;
    sp.normalized_gain = res.demod_mean / (kappa * i_dc) * 1e6;
    sp.v_dc_sig = res.v_dc_sig;
    sp.v_dc_ref = res.v_dc_ref;
  });
  result.validate();
  return result;
}

struct Peak {
  double center = 0.0;     // [cm^-1]
  double amplitude = 0.0;  // [ppm]
  double half_width = 0.0; // [cm^-1]
};

struct ScanAnalysis {
  double baseline_median = 0.0; // [ppm]
  double baseline_rms = 0.0;    // robust (MAD-based) [ppm]
  std::vector<Peak> peaks;
};

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Levenberg-Marquardt fit of baseline + sum of Lorentzians. Parameter
// layout: [b, A1, c1, w1, A2, c2, w2, ...]. Returns false if the normal
// equations become singular; callers then keep the initial estimates.
inline bool fit_lorentzians(const std::vector<double>& x, const std::vector<double>& y,
                            std::vector<double>& params, double w_min) {
  const std::size_t np = params.size();
  const std::size_t n = x.size();
  auto model_at = [&](const std::vector<double>& p, double xx) {
    double v = p[0];
    for (std::size_t j = 1; j + 2 < np; j += 3) {
      const double d = xx - p[j + 1];
      const double w2 = p[j + 2] * p[j + 2];
      v += p[j] * w2 / (d * d + w2);
    }
    return v;
  };
  auto rss_of = [&](const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - model_at(p, x[i]);
      s += r * r;
    }
    return s;
  };
  double lambda = 1e-3;
  double rss = rss_of(params);
  for (int iter = 0; iter < 200; ++iter) {
    // Build J^T J and J^T r.
    std::vector<double> jtj(np * np, 0.0), jtr(np, 0.0), row(np, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      row[0] = 1.0;
      double m = params[0];
      for (std::size_t j = 1; j < np; j += 3) {
        const double a = params[j], c = params[j + 1], w = params[j + 2];
        const double d = x[i] - c;
        const double w2 = w * w;
        const double den = d * d + w2;
        const double lor = w2 / den;
        m += a * lor;
        row[j] = lor;
        row[j + 1] = a * w2 * 2.0 * d / (den * den);
        row[j + 2] = a * 2.0 * w * d * d / (den * den);
      }
      const double r = y[i] - m;
      for (std::size_t u = 0; u < np; ++u) {
        jtr[u] += row[u] * r;
        for (std::size_t v = u; v < np; ++v) jtj[u * np + v] += row[u] * row[v];
      }
    }
    for (std::size_t u = 0; u < np; ++u) {
      for (std::size_t v = 0; v < u; ++v) jtj[u * np + v] = jtj[v * np + u];
    }
    bool improved = false;
    for (int attempt = 0; attempt < 30 && !improved; ++attempt) {
      std::vector<double> a(jtj), b(jtr);
      for (std::size_t u = 0; u < np; ++u) a[u * np + u] += lambda * (jtj[u * np + u] + 1e-30);
      // Gaussian elimination with partial pivoting.
      bool singular = false;
      std::vector<std::size_t> perm(np);
      for (std::size_t i2 = 0; i2 < np; ++i2) perm[i2] = i2;
      for (std::size_t col = 0; col < np && !singular; ++col) {
        std::size_t piv = col;
        for (std::size_t r2 = col + 1; r2 < np; ++r2) {
          if (std::fabs(a[r2 * np + col]) > std::fabs(a[piv * np + col])) piv = r2;
        }
        if (std::fabs(a[piv * np + col]) < 1e-300) {
          singular = true;
          break;
        }
        if (piv != col) {
          for (std::size_t cc = 0; cc < np; ++cc) std::swap(a[piv * np + cc], a[col * np + cc]);
          std::swap(b[piv], b[col]);
        }
        for (std::size_t r2 = col + 1; r2 < np; ++r2) {
          const double f = a[r2 * np + col] / a[col * np + col];
          for (std::size_t cc = col; cc < np; ++cc) a[r2 * np + cc] -= f * a[col * np + cc];
          b[r2] -= f * b[col];
        }
      }
      if (singular) return false;
      std::vector<double> delta(np, 0.0);
      for (std::size_t r2 = np; r2-- > 0;) {
        double s = b[r2];
        for (std::size_t cc = r2 + 1; cc < np; ++cc) s -= a[r2 * np + cc] * delta[cc];
        delta[r2] = s / (a[r2 * np + r2]);
      }
      std::vector<double> trial(params);
      for (std::size_t u = 0; u < np; ++u) trial[u] += delta[u];
      for (std::size_t j = 3; j < np; j += 3) {
        trial[j] = std::max(trial[j], w_min); // keep widths positive
      }
      const double trial_rss = rss_of(trial);
      if (trial_rss < rss) {
        params = trial;
        const bool converged = rss - trial_rss < 1e-12 * (rss + 1e-30);
        rss = trial_rss;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (converged) return true;
      } else {
        lambda *= 5.0;
      }
    }
    if (!improved) return true; // stuck at a (local) minimum
  }
  return true;
}

}  // namespace detail

// Robust baseline statistics and model-matched peak extraction. Candidate
// peaks are interior local maxima above the detection threshold (5x the
// robust RMS above the median, with an absolute floor of 0.5 ppm so numeric
// residue in noiseless runs is never reported as a line); the final centers,
// widths, and amplitudes come from a joint Lorentzian fit, which removes the
// bias a neighboring line's tail adds to a raw sample maximum.
inline ScanAnalysis analyze_scan(const ScanResult& scan) {
  scan.validate();
  srs::detail::require(scan.points.size() >= 5, "analyze_scan: too few points");
  const std::size_t n = scan.points.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = scan.points[i].shift;
    y[i] = scan.points[i].normalized_gain;
  }
  ScanAnalysis out;
  out.baseline_median = detail::median_of(y);
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = std::fabs(y[i] - out.baseline_median);
  out.baseline_rms = 1.4826 * detail::median_of(dev);

  const double threshold =
      out.baseline_median + std::max(5.0 * out.baseline_rms, 0.5);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (y[i] > threshold && y[i] >= y[i - 1] && y[i] > y[i + 1]) candidates.push_back(i);
  }
  // Merge candidates closer than three grid steps, keeping the taller one.
  std::vector<std::size_t> kept;
  for (std::size_t idx : candidates) {
    if (!kept.empty() && idx - kept.back() <= 3) {
      if (y[idx] > y[kept.back()]) kept.back() = idx;
    } else {
      kept.push_back(idx);
    }
  }
  if (kept.empty()) return out;
  if (kept.size() > 6) kept.resize(6); // defensive cap for the fit size

  const double grid = std::fabs(x[1] - x[0]);
  std::vector<double> params;
  params.push_back(out.baseline_median);
  for (std::size_t idx : kept) {
    params.push_back(y[idx] - out.baseline_median);
    params.push_back(x[idx]);
    params.push_back(2.0 * grid);
  }
  detail::fit_lorentzians(x, y, params, grid / 4.0);
  for (std::size_t j = 1; j < params.size(); j += 3) {
    Peak p;
    p.amplitude = params[j];
    p.center = params[j + 1];
    p.half_width = std::fabs(params[j + 2]);
    out.peaks.push_back(p);
  }
  std::sort(out.peaks.begin(), out.peaks.end(),
            [](const Peak& a, const Peak& b) { return a.center < b.center; });
  return out;
}

// Welch one-sided PSD with a periodic Hann window and 50% overlap.
// Returns (frequency, density) pairs for bins 0..seg_len/2.
inline std::vector<std::pair<double, double>> welch_psd(const Trace& trace,
                                                        std::size_t seg_len) {
  trace.validate();
  srs::detail::require(fft::is_pow2(seg_len) && seg_len >= 8,
                       "welch_psd: segment length must be a power of two >= 8");
  srs::detail::require(trace.samples.size() >= seg_len, "welch_psd: trace shorter than segment");
  const double fs = 1.0 / trace.dt;
  std::vector<double> window(seg_len);
  double wss = 0.0;
  for (std::size_t i = 0; i < seg_len; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) /
                                      static_cast<double>(seg_len)));
    wss += window[i] * window[i];
  }
  const std::size_t hop = seg_len / 2;
  const std::size_t n_segs = (trace.samples.size() - seg_len) / hop + 1;
  std::vector<double> acc(seg_len / 2 + 1, 0.0);
  std::vector<std::complex<double>> buf(seg_len);
  for (std::size_t s = 0; s < n_segs; ++s) {
    const double* base = trace.samples.data() + s * hop;
    double mean = 0.0;
    for (std::size_t i = 0; i < seg_len; ++i) mean += base[i];
    mean /= static_cast<double>(seg_len);
    for (std::size_t i = 0; i < seg_len; ++i) buf[i] = {(base[i] - mean) * window[i], 0.0};
    fft::forward(buf);
    for (std::size_t k = 0; k <= seg_len / 2; ++k) {
      const double scale = (k == 0 || k == seg_len / 2) ? 1.0 : 2.0;
      acc[k] += scale * std::norm(buf[k]) / (fs * wss);
    }
  }
  std::vector<std::pair<double, double>> out(seg_len / 2 + 1);
  for (std::size_t k = 0; k <= seg_len / 2; ++k) {
    out[k] = {fs * static_cast<double>(k) / static_cast<double>(seg_len),
              acc[k] / static_cast<double>(n_segs)};
  }
  return out;
}

}  // namespace srs::timesim
