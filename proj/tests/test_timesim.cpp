#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <vector>

#include "srs/timesim.hpp"

using namespace srs;
using Catch::Approx;

namespace {

timesim::SimConfig small_sim(double fs, double duration, int trials) {
  timesim::SimConfig sim;
  sim.sample_rate = fs;
  sim.duration = duration;
  sim.n_trials = trials;
  return sim;
}

}  // namespace

TEST_CASE("simulation grid constraints") {
  chain::FrontEndConfig fe;
  timesim::SimConfig sim;
  CHECK_NOTHROW(sim.validate(fe));

  SECTION("rate must be at least 16 cycles per period") {
    sim.sample_rate = 8e6;
    CHECK_THROWS_AS(sim.validate(fe), invariant_violation);
  }
  SECTION("rate must be a whole multiple of four times f_m") {
    sim.sample_rate = 250e6;
    CHECK_THROWS_AS(sim.validate(fe), invariant_violation);
  }
  SECTION("duration must cover the output filter") {
    sim.duration = 1e-3;
    CHECK_THROWS_AS(sim.validate(fe), invariant_violation);
  }
  SECTION("discard must leave data") {
    sim.transient_discard = 21e-3;
    CHECK_THROWS_AS(sim.validate(fe), invariant_violation);
  }
  SECTION("at least one trial") {
    sim.n_trials = 0;
    CHECK_THROWS_AS(sim.validate(fe), invariant_violation);
  }
}

TEST_CASE("bilinear low-pass matches the continuous filter identities") {
  const double tau = 330e-6, fs = 16e6;
  auto lpf = timesim::detail::make_lowpass(tau, fs);

  SECTION("white variance gain equals ENBW/(fs/2)") {
    // output variance of unit white noise = S * ENBW with S = 2/fs,
    // i.e. 1/(2 fs tau); the coefficient formula must agree closely.
    CHECK(lpf.white_variance_gain() == Approx(1.0 / (2.0 * fs * tau)).epsilon(2e-3));
  }

  SECTION("-3 dB at the corner frequency") {
    const double fc = chain::lpf_fc(tau);
    const std::complex<double> zinv = std::exp(std::complex<double>(0.0, -2.0 * M_PI * fc / fs));
    CHECK(std::abs(lpf.response(zinv)) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
  }

  SECTION("unity DC gain") {
    CHECK(std::abs(lpf.response({1.0, 0.0})) == Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("leaky integrator is exact at the modulation frequency") {
  const double c_f = 0.5e-12, f_leak = timesim::detail::integrator_leak_hz;
  const double fs = 32e6, f_m = 1e6;
  auto integ = timesim::detail::make_leaky_integrator(c_f, f_leak, fs, f_m);
  const std::complex<double> zinv = std::exp(std::complex<double>(0.0, -2.0 * M_PI * f_m / fs));
  const double w = 2.0 * M_PI * f_m, wl = 2.0 * M_PI * f_leak;
  const double expected = (1.0 / c_f) / std::sqrt(w * w + wl * wl);
  CHECK(std::abs(integ.response(zinv)) == Approx(expected).epsilon(1e-9));
  // and within a percent of the ideal 1/(w c_f) integrator there
  CHECK(std::abs(integ.response(zinv)) ==
        Approx(chain::advanced_tia_ac_gain(f_m, c_f)).epsilon(1e-2));
}

TEST_CASE("sign-flip demodulation conserves sample variance exactly") {
  rng::GaussianStream g(rng::stream_key(99, 0, 0, 7));
  double ss_in = 0.0, ss_out = 0.0;
  for (int i = 0; i < 50000; ++i) {
    const double x = g.next();
    const double d = (i % 64 < 32) ? 1.0 : -1.0; // +-1 square reference
    ss_in += x * x;
    ss_out += (d * x) * (d * x);
  }
  CHECK(ss_out == ss_in);
}

TEST_CASE("RMS measurement on a known waveform") {
  timesim::Trace t;
  t.dt = 1e-6;
  t.unit = noise::Referral::voltage;
  const std::size_t n = 10000;
  t.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // 100 whole cycles plus an offset the estimator must remove
    t.samples[i] = 3.0 + 0.5 * std::sin(2.0 * M_PI * 100.0 * static_cast<double>(i) /
                                        static_cast<double>(n));
  }
  CHECK(timesim::measure_rms(t, 0.0) == Approx(0.5 / std::sqrt(2.0)).epsilon(1e-6));
  CHECK_THROWS_AS(timesim::measure_rms(t, 1.0), invariant_violation);
}

TEST_CASE("white noise synthesis hits the requested density") {
  const double s0 = 1e-20;
  const auto psd = noise::SpectralDensity::flat(noise::Referral::current, s0);
  auto sim = small_sim(4e6, 50e-3, 1); // 200k samples
  const auto trace = timesim::synth_colored_noise(psd, sim);
  CHECK(trace.unit == noise::Referral::current);
  const double var = std::pow(timesim::measure_rms(trace, 0.0), 2);
  CHECK(var == Approx(s0 * sim.sample_rate / 2.0).epsilon(0.02));

  SECTION("periodogram is flat within a dB") {
    const auto psd_est = timesim::welch_psd(trace, 1024);
    double lo = INFINITY, hi = 0.0;
    std::size_t used = 0;
    for (const auto& [f, s] : psd_est) {
      if (f < 0.05 * sim.sample_rate || f > 0.45 * sim.sample_rate) continue;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
      ++used;
    }
    REQUIRE(used > 100);
    // single-bin scatter of an averaged Welch estimate stays well inside
    // +-1 dB for ~390 segments
    CHECK(hi / s0 < 1.26);
    CHECK(lo / s0 > 0.79);
  }
}

TEST_CASE("shaped noise synthesis follows a sloped density") {
  // 1/f slope across 1 kHz..1 MHz on a log grid
  const auto psd = noise::SpectralDensity::from_log_grid(
      noise::Referral::current, {{1e3, 1e-18}, {1e6, 1e-21}});
  auto sim = small_sim(4e6, 0.131072, 1); // 2^19 samples
  sim.seed = 777;
  const auto trace = timesim::synth_colored_noise(psd, sim);
  const auto psd_est = timesim::welch_psd(trace, 8192);
  const double df = psd_est[1].first - psd_est[0].first;
  for (double f_probe : {2e3, 1e4, 1e5, 5e5}) {
    const std::size_t k = static_cast<std::size_t>(std::llround(f_probe / df));
    // average a small neighborhood to beat single-bin scatter
    double acc = 0.0;
    int cnt = 0;
    for (std::size_t j = k > 4 ? k - 4 : 0; j <= k + 4 && j < psd_est.size(); ++j, ++cnt) {
      acc += psd_est[j].second;
    }
    const double est = acc / cnt;
    const double want = psd(psd_est[k].first);
    CHECK(est / want < 1.6);
    CHECK(est / want > 0.6);
  }
}

TEST_CASE("noiseless demodulation reproduces the discrete chain gain") {
  chain::FrontEndConfig fe;
  model::LaserSpec laser;
  model::PhotodiodeSpec pd;
  auto sim = small_sim(32e6, 60.0 * fe.tau, 1);
  sim.transient_discard = 40.0 * fe.tau;
  sim.noise_shot = sim.noise_electronics = sim.noise_rin = false;

  const double kappa = timesim::discrete_signal_gain(fe, sim);
  const double i_dc = model::dc_current(laser, pd);

  SECTION("discrete gain sits near the continuous stage product") {
    const double continuous = chain::total_ac_gain(fe.f_m, fe).gain * M_PI / 4.0;
    CHECK(kappa / continuous > 0.96);
    CHECK(kappa / continuous < 1.02);
  }

  SECTION("demodulated mean equals kappa times the signal current") {
    const double gain_ppm = 100.0;
    const auto res = timesim::simulate_channel(laser, pd, gain_ppm, fe, sim, 0, false);
    const double expected = kappa * i_dc * gain_ppm * 1e-6;
    CHECK(res.demod_mean == Approx(expected).epsilon(2e-4));
    // statistical fluctuation is zero; only the settling residue remains
    CHECK(res.demod_rms < 1e-4 * std::abs(res.demod_mean));
    CHECK(res.v_dc_sig == Approx(-fe.r_dc * i_dc * (1.0 + 0.5 * gain_ppm * 1e-6)).epsilon(1e-9));
    CHECK(res.v_dc_ref == Approx(-fe.r_dc * i_dc).epsilon(1e-12));
  }

  SECTION("demodulated mean is linear in the modulation depth") {
    const auto r50 = timesim::simulate_channel(laser, pd, 50.0, fe, sim, 0, false);
    const auto r200 = timesim::simulate_channel(laser, pd, 200.0, fe, sim, 0, false);
    CHECK(r200.demod_mean == Approx(4.0 * r50.demod_mean).epsilon(1e-9));
  }

  SECTION("the mixer phase setting degrades the gain as expected") {
    chain::FrontEndConfig shifted = fe;
    shifted.mixer_phase = M_PI / 2.0;
    const auto r0 = timesim::simulate_channel(laser, pd, 100.0, fe, sim, 0, false);
    const auto r90 = timesim::simulate_channel(laser, pd, 100.0, shifted, sim, 0, false);
    // A quarter-period reference shift sits near (not exactly at) the null:
    // the conditioning high-pass sections contribute ~0.1 rad of phase lead
    // at f_m, displacing the zero crossing. The closed form carries the same
    // chain phase, so it must still predict the output exactly.
    const double kappa90 = timesim::discrete_signal_gain(shifted, sim);
    CHECK(r90.demod_mean == Approx(kappa90 * i_dc * 100e-6).epsilon(2e-3));
    CHECK(std::abs(r90.demod_mean) < 0.15 * std::abs(r0.demod_mean));
  }
}

TEST_CASE("pulse train leaves the demodulated signal nearly untouched") {
  chain::FrontEndConfig fe;
  model::LaserSpec laser;
  model::PhotodiodeSpec pd;
  auto sim = small_sim(160e6, 21.0 * fe.tau, 1);
  sim.noise_shot = sim.noise_electronics = sim.noise_rin = false;
  const auto plain = timesim::simulate_channel(laser, pd, 100.0, fe, sim, 0, false);
  sim.include_pulse_train = true;
  const auto pulsed = timesim::simulate_channel(laser, pd, 100.0, fe, sim, 0, false);
  CHECK(std::abs(pulsed.demod_mean / plain.demod_mean - 1.0) < 0.01);
}

TEST_CASE("Monte Carlo RMS tracks the closed-form prediction") {
  chain::FrontEndConfig fe;
  fe.tau = 82.5e-6; // shorter filter -> more independent bins per second
  model::LaserSpec laser;
  model::PhotodiodeSpec pd;
  auto sim = small_sim(16e6, 400.0 * fe.tau, 4);

  SECTION("shot noise only") {
    sim.noise_shot = true;
    sim.noise_electronics = sim.noise_rin = false;
    const double mc =
        timesim::simulate_channel(laser, pd, 0.0, fe, sim, 0, false).demod_rms;
    const double pred = timesim::analytic_demod_rms(fe, laser, pd, sim);
    CHECK(mc / pred > 0.90);
    CHECK(mc / pred < 1.10);
  }

  SECTION("electronics only") {
    sim.noise_shot = sim.noise_rin = false;
    sim.noise_electronics = true;
    const double mc =
        timesim::simulate_channel(laser, pd, 0.0, fe, sim, 0, false).demod_rms;
    const double pred = timesim::analytic_demod_rms(fe, laser, pd, sim);
    CHECK(mc / pred > 0.90);
    CHECK(mc / pred < 1.10);
  }
}

TEST_CASE("fixed seeds reproduce results bit for bit") {
  chain::FrontEndConfig fe;
  model::LaserSpec laser;
  model::PhotodiodeSpec pd;
  auto sim = small_sim(16e6, 7e-3, 2);
  sim.seed = 424242;

  const auto a = timesim::simulate_channel(laser, pd, 250.0, fe, sim, 0, true);
  const auto b = timesim::simulate_channel(laser, pd, 250.0, fe, sim, 0, true);
  CHECK(a.demod_mean == b.demod_mean);
  CHECK(a.demod_rms == b.demod_rms);
  CHECK(a.n_bins == b.n_bins);
  REQUIRE(a.v_out.samples.size() == b.v_out.samples.size());
  CHECK(a.v_out.samples == b.v_out.samples);

  SECTION("a different seed gives different noise") {
    auto sim2 = sim;
    sim2.seed = 424243;
    const auto c = timesim::simulate_channel(laser, pd, 250.0, fe, sim2, 0, false);
    CHECK(c.demod_rms != a.demod_rms);
  }
}

TEST_CASE("scan results are independent of the worker count") {
  const auto sample = model::RamanSample::methanol();
  chain::FrontEndConfig fe;
  model::LaserSpec laser;
  model::PhotodiodeSpec pd;
  auto sim = small_sim(16e6, 7e-3, 1);

  setenv("SRS_SIM_THREADS", "1", 1);
  const auto serial = timesim::run_scan(sample, 770e-9, 950e-9, 1050e-9, 7, sim, fe, laser, pd);
  setenv("SRS_SIM_THREADS", "3", 1);
  const auto threaded = timesim::run_scan(sample, 770e-9, 950e-9, 1050e-9, 7, sim, fe, laser, pd);
  unsetenv("SRS_SIM_THREADS");

  REQUIRE(serial.points.size() == threaded.points.size());
  for (std::size_t i = 0; i < serial.points.size(); ++i) {
    CHECK(serial.points[i].normalized_gain == threaded.points[i].normalized_gain);
    CHECK(serial.points[i].shift == threaded.points[i].shift);
    CHECK(serial.points[i].v_dc_sig == threaded.points[i].v_dc_sig);
  }
}

TEST_CASE("scan analysis finds synthetic peaks and ignores flat baselines") {
  timesim::ScanResult scan;
  const int n = 101;
  rng::GaussianStream g(rng::stream_key(5, 0, 0, 9));
  for (int i = 0; i < n; ++i) {
    timesim::ScanPoint p;
    p.stokes_wavelength = 950e-9 + 1e-9 * i;
    p.shift = 2500.0 + 10.0 * i;
    const double d1 = p.shift - 2850.0, d2 = p.shift - 2950.0;
    p.normalized_gain = 250.0 * 625.0 / (d1 * d1 + 625.0) +
                        250.0 * 625.0 / (d2 * d2 + 625.0) + 0.8 * g.next();
    scan.points.push_back(p);
  }
  const auto analysis = timesim::analyze_scan(scan);
  REQUIRE(analysis.peaks.size() == 2);
  CHECK(std::abs(analysis.peaks[0].center - 2850.0) < 15.0);
  CHECK(std::abs(analysis.peaks[1].center - 2950.0) < 15.0);
  CHECK(std::abs(analysis.peaks[0].amplitude - 250.0) < 3.0 * std::max(analysis.baseline_rms, 1.0));
  CHECK(std::abs(analysis.peaks[1].amplitude - 250.0) < 3.0 * std::max(analysis.baseline_rms, 1.0));
  CHECK(analysis.peaks[0].half_width > 10.0);
  CHECK(analysis.peaks[0].half_width < 50.0);

  SECTION("flat noisy baseline produces no peaks") {
    timesim::ScanResult flat;
    for (int i = 0; i < n; ++i) {
      timesim::ScanPoint p;
      p.stokes_wavelength = 950e-9 + 1e-9 * i;
      p.shift = 2500.0 + 10.0 * i;
      p.normalized_gain = 0.8 * g.next();
      flat.points.push_back(p);
    }
    CHECK(timesim::analyze_scan(flat).peaks.empty());
  }
}

TEST_CASE("spectrum estimate resolves a deterministic tone") {
  timesim::Trace t;
  t.dt = 1.0 / 1.024e6;
  t.unit = noise::Referral::voltage;
  const std::size_t n = 65536;
  const double f0 = 64e3;
  t.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.samples[i] = std::sin(2.0 * M_PI * f0 * t.dt * static_cast<double>(i));
  }
  const auto psd = timesim::welch_psd(t, 4096);
  std::size_t peak = 0;
  for (std::size_t i = 1; i < psd.size(); ++i) {
    if (psd[i].second > psd[peak].second) peak = i;
  }
  CHECK(psd[peak].first == Approx(f0).margin(2.0 * psd[1].first - 2.0 * psd[0].first));
}
