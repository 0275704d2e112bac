#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "srs/reports.hpp"

using namespace srs;
using Catch::Approx;

namespace {

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("budget report at the default operating point") {
  config::RunConfig cfg;
  const auto rep = reports::make_budget_report(cfg);

  CHECK(rep.gain_at_fm == Approx(63.6619772e6).epsilon(1e-6));
  CHECK(rep.gain_pass);
  CHECK(rep.bandwidth == Approx(129.032258e6).epsilon(1e-6));
  CHECK(rep.sensitivity_shot_ppm == Approx(6.9678).epsilon(1e-3));
  CHECK(rep.sensitivity_total_ppm < 10.0);
  CHECK(rep.sensitivity_total_ppm > rep.sensitivity_shot_ppm);
  CHECK(rep.snr_shot > rep.snr_total);

  CHECK(rep.report_text.find("PASS") != std::string::npos);
  CHECK(rep.report_text.find(reports::snr_discrepancy_note()) != std::string::npos);
  CHECK(rep.report_text.find("FAIL") == std::string::npos);

  // header plus one row per grid point
  CHECK(count_lines(rep.csv_text) == static_cast<std::size_t>(cfg.budget.n_points) + 1);
  CHECK(rep.csv_text.rfind("f_Hz,shot_W2_per_Hz,", 0) == 0);
}

TEST_CASE("budget report flags an insufficient gain") {
  config::RunConfig cfg;
  cfg.frontend.f_m = 10e6;
  const auto rep = reports::make_budget_report(cfg);
  CHECK(rep.gain_at_fm == Approx(6.366197e6).epsilon(1e-5));
  CHECK_FALSE(rep.gain_pass);
  CHECK(rep.report_text.find("FAIL") != std::string::npos);
}

TEST_CASE("sweep reproduces the closed-form scaling laws") {
  SECTION("quadrupling tau halves the sensitivity") {
    config::RunConfig cfg;
    cfg.sweep.variable = "tau";
    cfg.sweep.lo = 330e-6;
    cfg.sweep.hi = 4.0 * 330e-6;
    cfg.sweep.n = 2;
    const auto rows = reports::make_sweep_rows(cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].sensitivity_ppm == Approx(rows[0].sensitivity_ppm / 2.0).epsilon(1e-12));
    CHECK(rows[1].total_noise == Approx(rows[0].total_noise).epsilon(1e-12));
  }

  SECTION("strong balancing pushes the total down to the shot+electronics floor") {
    config::RunConfig cfg;
    cfg.sweep.variable = "cmrr";
    cfg.sweep.lo = 1.0;
    cfg.sweep.hi = 1000.0;
    cfg.sweep.n = 7;
    const auto rows = reports::make_sweep_rows(cfg);
    const auto floor = noise::balanced_noise_breakdown(cfg.frontend, cfg.laser,
                                                       cfg.photodiode, cfg.frontend.f_m);
    const double shot_elec = floor.shot + floor.electronics;
    CHECK(rows.front().total_noise > 10.0 * shot_elec); // unbalanced: intensity-noise limited
    CHECK(rows.back().total_noise == Approx(shot_elec).epsilon(5e-3));
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].total_noise < rows[i - 1].total_noise);
    }
  }

  SECTION("more optical power always helps at this operating point") {
    config::RunConfig cfg;
    cfg.sweep.variable = "average_power";
    cfg.sweep.lo = 10e-6;
    cfg.sweep.hi = 200e-6;
    cfg.sweep.n = 9;
    const auto rows = reports::make_sweep_rows(cfg);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].sensitivity_ppm < rows[i - 1].sensitivity_ppm);
    }
    // in the shot-dominated middle of the range the improvement tracks 1/sqrt(P)
    config::RunConfig mid;
    mid.sweep.variable = "average_power";
    mid.sweep.lo = 40e-6;
    mid.sweep.hi = 160e-6;
    mid.sweep.n = 2;
    const auto pair = reports::make_sweep_rows(mid);
    CHECK(pair[1].sensitivity_ppm / pair[0].sensitivity_ppm == Approx(0.5).margin(0.08));
  }

  SECTION("unknown variables are configuration errors") {
    config::RunConfig cfg;
    cfg.sweep.variable = "gbwp";
    CHECK_THROWS_AS(reports::make_sweep_rows(cfg), config_error);
  }

  SECTION("csv schema") {
    config::RunConfig cfg;
    const auto rows = reports::make_sweep_rows(cfg);
    const auto csv = reports::sweep_csv(cfg.sweep.variable, rows);
    CHECK(csv.rfind("variable,value,sensitivity_ppm,total_noise_W2_per_Hz,gain_V_per_A,"
                    "bandwidth_Hz\n",
                    0) == 0);
    CHECK(count_lines(csv) == rows.size() + 1);
  }
}

TEST_CASE("trace and scan serialization") {
  timesim::Trace t;
  t.dt = 1e-6;
  t.unit = noise::Referral::voltage;
  t.samples = {0.125, -0.25, 0.5};
  const auto csv = reports::trace_csv(t);
  CHECK(csv ==
        "t_s,value,unit\n0,0.125,V\n9.9999999999999995e-07,-0.25,V\n1.9999999999999999e-06,0.5,V\n");

  timesim::ScanResult scan;
  scan.points.push_back({950e-9, 2460.0, 1.5, -0.4, -0.4});
  scan.points.push_back({951e-9, 2470.0, 2.5, -0.4, -0.4});
  const auto scsv = reports::scan_csv(scan);
  CHECK(scsv.rfind("lambda_nm,shift_cm1,gain_ppm,vdc_sig_V,vdc_ref_V\n", 0) == 0);
  CHECK(count_lines(scsv) == 3);
}
