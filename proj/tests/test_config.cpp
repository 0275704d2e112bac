#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "srs/config.hpp"

using namespace srs;
using Catch::Approx;
using srs::config::from_json;
using json = nlohmann::json;

TEST_CASE("empty document yields the default operating point") {
  const auto cfg = from_json(json::object());
  cfg.validate_static();
  CHECK(cfg.laser.average_power == Approx(40e-6));
  CHECK(cfg.laser.wavelength == Approx(1000e-9));
  CHECK(cfg.frontend.f_m == Approx(1e6));
  CHECK(cfg.frontend.tau == Approx(330e-6));
  CHECK(cfg.frontend.cmrr == Approx(56.0));
  CHECK(cfg.frontend.r_dc == Approx(20e3));
  CHECK(cfg.photodiode.responsivity == Approx(0.5));
  CHECK(cfg.sample.lines.size() == 2);
  CHECK(cfg.sim.sample_rate == Approx(256e6));
  CHECK(cfg.sim.n_trials == 20);
  CHECK(cfg.scan.lambda_pump == Approx(770e-9));
  CHECK(cfg.scan.n_points == 101);
  CHECK(cfg.budget.delta_p == Approx(1e-8));
}

TEST_CASE("nested keys override individual defaults only") {
  const auto cfg = from_json(json::parse(R"({
    "laser": {"average_power_W": 100e-6},
    "frontend": {"r_dc_Ohm": 47e3, "h_net": {"c_d_F": 1e-9}}
  })"));
  CHECK(cfg.laser.average_power == Approx(100e-6));
  CHECK(cfg.laser.wavelength == Approx(1000e-9));
  CHECK(cfg.frontend.r_dc == Approx(47e3));
  CHECK(cfg.frontend.h_net.c_d == Approx(1e-9));
  CHECK(cfg.frontend.h_net.r_x == Approx(1e6));
}

TEST_CASE("unknown keys are rejected with their path") {
  try {
    from_json(json::parse(R"({"frontend": {"h_net": {"bogus": 1}}})"));
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("frontend.h_net.bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(from_json(json::parse(R"({"nonsense": {}})")), config_error);
  CHECK_THROWS_AS(from_json(json::parse(R"({"laser": {"wavelength_nm": 1000}})")),
                  config_error);
}

TEST_CASE("wrong value types are configuration errors") {
  CHECK_THROWS_AS(from_json(json::parse(R"({"laser": {"average_power_W": "40u"}})")),
                  config_error);
  CHECK_THROWS_AS(from_json(json::parse(R"({"sim": {"n_trials": 2.5}})")), config_error);
  CHECK_THROWS_AS(from_json(json::parse(R"({"sim": {"seed": -4}})")), config_error);
  CHECK_THROWS_AS(from_json(json::parse(R"({"sim": {"noise_shot": 1}})")), config_error);
  CHECK_THROWS_AS(from_json(json::parse(R"({"laser": {"rin_curve": [[1e5]]}})")),
                  config_error);
  CHECK_THROWS_AS(from_json(json::parse(R"([1,2,3])")), config_error);
}

TEST_CASE("invariant violations carry the config block name") {
  auto cfg = from_json(json::parse(R"({"frontend": {"cmrr": 0.5}})"));
  try {
    cfg.validate_static();
    FAIL("expected invariant_violation");
  } catch (const invariant_violation& e) {
    const std::string msg = e.what();
    CHECK(msg.find("frontend") != std::string::npos);
    CHECK(msg.find("cmrr") != std::string::npos);
  }
}

TEST_CASE("RIN curve and sample lines parse from JSON") {
  const auto cfg = from_json(json::parse(R"({
    "laser": {"rin_curve": [[1e4, -100.0], [1e6, -120.0]]},
    "sample": {"lines": [{"center_cm1": 2900, "half_width_cm1": 10, "peak_gain_ppm": 50}]}
  })"));
  REQUIRE(cfg.laser.rin_curve.size() == 2);
  CHECK(cfg.laser.rin_curve[1].second == Approx(-120.0));
  REQUIRE(cfg.sample.lines.size() == 1);
  CHECK(cfg.sample.lines[0].center == Approx(2900.0));
  CHECK_FALSE(cfg.laser.rin_is_flat());
}

TEST_CASE("effective config document round-trips") {
  const config::RunConfig defaults;
  const auto doc = config::effective_config_json(defaults);
  // feeding the emitted document back must reproduce it exactly
  const auto reparsed = from_json(json::parse(doc.dump()));
  CHECK(config::effective_config_json(reparsed).dump(2) == doc.dump(2));
  // and the document must carry every top-level block
  for (const char* key : {"laser", "photodiode", "frontend", "sample", "sim", "scan",
                          "budget", "sweep"}) {
    CHECK(doc.contains(key));
  }
}

TEST_CASE("load_config maps filesystem problems to config errors") {
  CHECK_THROWS_AS(config::load_config("/nonexistent/path.json"), config_error);
}
