#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "srs/chain.hpp"
#include "srs/errors.hpp"
#include "srs/frontend.hpp"
#include "srs/model.hpp"
#include "srs/timesim.hpp"

// JSON run configuration. Key names carry SI units (`*_W`, `*_Hz`, `*_F`,
// `*_s`, ...) so unit mistakes are grep-able; unknown keys are rejected with
// their full path; absent keys keep the library defaults.
namespace srs::config {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct ScanSpec {
  double lambda_pump = 770e-9; // [m]
  double lambda_lo = 950e-9;   // [m]
  double lambda_hi = 1050e-9;  // [m]
  int n_points = 101;

  void validate() const {
    srs::detail::require(lambda_pump > 0, "scan: lambda_pump must be > 0");
    srs::detail::require(lambda_hi > lambda_lo && lambda_lo > lambda_pump,
                         "scan: require lambda_pump < lambda_lo < lambda_hi");
    srs::detail::require(n_points >= 2, "scan: n_points must be >= 2");
  }
};

struct BudgetSpec {
  double delta_p = 1e-8; // [W] modulated signal amplitude the SNR line uses
  double f_lo = 1e5;     // [Hz] report grid
  double f_hi = 1e7;     // [Hz]
  int n_points = 61;

  void validate() const {
    srs::detail::require(delta_p >= 0, "budget: delta_p_W must be >= 0");
    srs::detail::require(f_lo > 0 && f_hi > f_lo, "budget: require 0 < f_lo_Hz < f_hi_Hz");
    srs::detail::require(n_points >= 2, "budget: n_points must be >= 2");
  }
};

struct SweepSpec {
  std::string variable = "r_dc";
  double lo = 5e3;
  double hi = 100e3;
  int n = 13;
  bool log_spacing = true;

  void validate() const {
    srs::detail::require(lo > 0 && hi > lo, "sweep: require 0 < lo < hi");
    srs::detail::require(n >= 2, "sweep: n must be >= 2");
  }
};

struct RunConfig {
  model::LaserSpec laser;
  model::PhotodiodeSpec photodiode;
  chain::FrontEndConfig frontend;
  model::RamanSample sample = model::RamanSample::methanol();
  timesim::SimConfig sim;
  ScanSpec scan;
  BudgetSpec budget;
  SweepSpec sweep;

  // Domain invariants that hold regardless of command. The simulation grid
  // constraint (sim vs frontend) is checked by the commands that actually
  // run the engine, so analytic commands can explore any f_m. Violations are
  // reported with the config block they came from.
  void validate_static() const {
    auto check = [](const char* block, auto&& fn) {
      try {
        fn();
      } catch (const invariant_violation& e) {
        throw invariant_violation(std::string(block) + ": " + e.what());
      }
    };
    check("laser", [&] { laser.validate(); });
    check("photodiode", [&] { photodiode.validate(); });
    check("frontend", [&] { frontend.validate(); });
    check("sample", [&] { sample.validate(); });
    check("scan", [&] { scan.validate(); });
    check("budget", [&] { budget.validate(); });
    check("sweep", [&] { sweep.validate(); });
  }
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline double num_at(const json& v, const std::string& path) {
  if (!v.is_number()) throw config_error("expected a number at " + path);
  return v.get<double>();
}

inline int int_at(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw config_error("expected an integer at " + path);
  return v.get<int>();
}

inline std::uint64_t u64_at(const json& v, const std::string& path) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<std::int64_t>() < 0)) {
    throw config_error("expected a nonnegative integer at " + path);
  }
  return v.get<std::uint64_t>();
}

inline bool bool_at(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw config_error("expected a boolean at " + path);
  return v.get<bool>();
}

inline const json& object_at(const json& v, const std::string& path) {
  if (!v.is_object()) throw config_error("expected an object at " + path);
  return v;
}

inline void apply_laser(model::LaserSpec& l, const json& j, const std::string& path) {
  for (const auto& [k, v] : object_at(j, path).items()) {
    const std::string p = join(path, k);
    if (k == "wavelength_m") {
      l.wavelength = num_at(v, p);
    } else if (k == "average_power_W") {
      l.average_power = num_at(v, p);
    } else if (k == "rep_rate_Hz") {
      l.rep_rate = num_at(v, p);
    } else if (k == "rin_curve") {
      if (!v.is_array() || v.empty()) throw config_error("expected a nonempty array at " + p);
      l.rin_curve.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const json& e = v[i];
        const std::string ep = p + "[" + std::to_string(i) + "]";
        if (!e.is_array() || e.size() != 2) {
          throw config_error("expected a [frequency_Hz, rin_dB_per_Hz] pair at " + ep);
        }
        l.rin_curve.emplace_back(num_at(e[0], ep), num_at(e[1], ep));
      }
    } else {
      throw config_error("unknown key: " + p);
    }
  }
}

inline void apply_photodiode(model::PhotodiodeSpec& pd, const json& j, const std::string& path) {
  for (const auto& [k, v] : object_at(j, path).items()) {
    const std::string p = join(path, k);
    if (k == "responsivity_A_per_W") {
      pd.responsivity = num_at(v, p);
    } else if (k == "junction_capacitance_F") {
      pd.junction_capacitance = num_at(v, p);
    } else {
      throw config_error("unknown key: " + p);
    }
  }
}

inline void apply_h_net(chain::HNetworkConfig& h, const json& j, const std::string& path) {
  for (const auto& [k, v] : object_at(j, path).items()) {
    const std::string p = join(path, k);
    if (k == "r_x_Ohm") {
      h.r_x = num_at(v, p);
    } else if (k == "c_x_F") {
      h.c_x = num_at(v, p);
    } else if (k == "r_y_Ohm") {
      h.r_y = num_at(v, p);
    } else if (k == "r_d_Ohm") {
      h.r_d = num_at(v, p);
    } else if (k == "c_d_F") {
      h.c_d = num_at(v, p);
    } else {
      throw config_error("unknown key: " + p);
    }
  }
}

inline void apply_frontend(chain::FrontEndConfig& fe, const json& j, const std::string& path) {
  for (const auto& [k, v] : object_at(j, path).items()) {
    const std::string p = join(path, k);
    if (k == "c_f_F") {
      fe.c_f = num_at(v, p);
    } else if (k == "c_in_F") {
      fe.c_in = num_at(v, p);
    } else if (k == "r_dc_Ohm") {
      fe.r_dc = num_at(v, p);
    } else if (k == "gbwp_Hz") {
      fe.gbwp = num_at(v, p);
    } else if (k == "e_n_V_per_rtHz") {
      fe.amp_noise.e_n = num_at(v, p);
    } else if (k == "i_n_A_per_rtHz") {
      fe.amp_noise.i_n = num_at(v, p);
    } else if (k == "e_h_V_per_rtHz") {
      fe.amp_noise.e_h = num_at(v, p);
    } else if (k == "g_diff") {
      fe.g_diff = num_at(v, p);
    } else if (k == "cmrr") {
      fe.cmrr = num_at(v, p);
    } else if (k == "g_ina") {
      fe.g_ina = num_at(v, p);
    } else if (k == "tau_s") {
      fe.tau = num_at(v, p);
    } else if (k == "h_net") {
      apply_h_net(fe.h_net, v, p);
    } else if (k == "f_m_Hz") {
      fe.f_m = num_at(v, p);
    } else if (k == "mixer_phase_rad") {
      fe.mixer_phase = num_at(v, p);
    } else if (k == "temperature_K") {
      fe.temperature = num_at(v, p);
    } else {
      throw config_error("unknown key: " + p);
    }
  }
}

inline void apply_sample(model::RamanSample& s, const json& j, const std::string& path) {
  for (const auto& [k, v] : object_at(j, path).items()) {
    const std::string p = join(path, k);
    if (k == "lines") {
      if (!v.is_array()) throw config_error("expected an array at " + p);
      s.lines.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string ep = p + "[" + std::to_string(i) + "]";
        model::RamanLine line;
        for (const auto& [lk, lv] : object_at(v[i], ep).items()) {
          const std::string lp = join(ep, lk);
          if (lk == "center_cm1") {
            line.center = num_at(lv, lp);
          } else if (lk == "half_width_cm1") {
            line.half_width = num_at(lv, lp);
          } else if (lk == "peak_gain_ppm") {
            line.peak_gain = num_at(lv, lp);
          } else {
            throw config_error("unknown key: " + lp);
          }
        }
        s.lines.push_back(line);
      }
    } else {
      throw config_error("unknown key: " + p);
    }
  }
}

inline void apply_sim(timesim::SimConfig& s, const json& j, const std::string& path) {
  for (const auto& [k, v] : object_at(j, path).items()) {
    const std::string p = join(path, k);
    if (k == "sample_rate_Hz") {
      s.sample_rate = num_at(v, p);
    } else if (k == "duration_s") {
      s.duration = num_at(v, p);
    } else if (k == "seed") {
      s.seed = u64_at(v, p);
    } else if (k == "n_trials") {
      s.n_trials = int_at(v, p);
    } else if (k == "include_pulse_train") {
      s.include_pulse_train = bool_at(v, p);
    } else if (k == "transient_discard_s") {
      s.transient_discard = num_at(v, p);
    } else if (k == "noise_shot") {
      s.noise_shot = bool_at(v, p);
    } else if (k == "noise_electronics") {
      s.noise_electronics = bool_at(v, p);
    } else if (k == "noise_rin") {
      s.noise_rin = bool_at(v, p);
    } else {
      throw config_error("unknown key: " + p);
    }
  }
}

inline void apply_scan(ScanSpec& s, const json& j, const std::string& path) {
  for (const auto& [k, v] : object_at(j, path).items()) {
    const std::string p = join(path, k);
    if (k == "lambda_pump_m") {
      s.lambda_pump = num_at(v, p);
    } else if (k == "lambda_lo_m") {
      s.lambda_lo = num_at(v, p);
    } else if (k == "lambda_hi_m") {
      s.lambda_hi = num_at(v, p);
    } else if (k == "n_points") {
      s.n_points = int_at(v, p);
    } else {
      throw config_error("unknown key: " + p);
    }
  }
}

inline void apply_budget(BudgetSpec& b, const json& j, const std::string& path) {
  for (const auto& [k, v] : object_at(j, path).items()) {
    const std::string p = join(path, k);
    if (k == "delta_p_W") {
      b.delta_p = num_at(v, p);
    } else if (k == "f_lo_Hz") {
      b.f_lo = num_at(v, p);
    } else if (k == "f_hi_Hz") {
      b.f_hi = num_at(v, p);
    } else if (k == "n_points") {
      b.n_points = int_at(v, p);
    } else {
      throw config_error("unknown key: " + p);
    }
  }
}

inline void apply_sweep(SweepSpec& s, const json& j, const std::string& path) {
  for (const auto& [k, v] : object_at(j, path).items()) {
    const std::string p = join(path, k);
    if (k == "variable") {
      if (!v.is_string()) throw config_error("expected a string at " + p);
      s.variable = v.get<std::string>();
    } else if (k == "lo") {
      s.lo = num_at(v, p);
    } else if (k == "hi") {
      s.hi = num_at(v, p);
    } else if (k == "n") {
      s.n = int_at(v, p);
    } else if (k == "log_spacing") {
      s.log_spacing = bool_at(v, p);
    } else {
      throw config_error("unknown key: " + p);
    }
  }
}

}  // namespace detail

inline RunConfig from_json(const json& root) {
  if (!root.is_object()) throw config_error("top-level config must be a JSON object");
  RunConfig c;
  for (const auto& [k, v] : root.items()) {
    if (k == "laser") {
      detail::apply_laser(c.laser, v, k);
    } else if (k == "photodiode") {
      detail::apply_photodiode(c.photodiode, v, k);
    } else if (k == "frontend") {
      detail::apply_frontend(c.frontend, v, k);
    } else if (k == "sample") {
      detail::apply_sample(c.sample, v, k);
    } else if (k == "sim") {
      detail::apply_sim(c.sim, v, k);
    } else if (k == "scan") {
      detail::apply_scan(c.scan, v, k);
    } else if (k == "budget") {
      detail::apply_budget(c.budget, v, k);
    } else if (k == "sweep") {
      detail::apply_sweep(c.sweep, v, k);
    } else {
      throw config_error("unknown key: " + k);
    }
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw config_error(std::string("config parse error: ") + e.what());
  }
  RunConfig c = from_json(root);
  c.validate_static();
  return c;
}

// Fully defaulted document, schema-identical to what load_config accepts.
inline ordered_json effective_config_json(const RunConfig& c) {
  ordered_json j;
  j["laser"]["wavelength_m"] = c.laser.wavelength;
  j["laser"]["average_power_W"] = c.laser.average_power;
  j["laser"]["rep_rate_Hz"] = c.laser.rep_rate;
  ordered_json curve = ordered_json::array();
  for (const auto& p : c.laser.rin_curve) curve.push_back({p.first, p.second});
  j["laser"]["rin_curve"] = curve;
  j["photodiode"]["responsivity_A_per_W"] = c.photodiode.responsivity;
  j["photodiode"]["junction_capacitance_F"] = c.photodiode.junction_capacitance;
  auto& fe = j["frontend"];
  fe["c_f_F"] = c.frontend.c_f;
  fe["c_in_F"] = c.frontend.c_in;
  fe["r_dc_Ohm"] = c.frontend.r_dc;
  fe["gbwp_Hz"] = c.frontend.gbwp;
  fe["e_n_V_per_rtHz"] = c.frontend.amp_noise.e_n;
  fe["i_n_A_per_rtHz"] = c.frontend.amp_noise.i_n;
  fe["e_h_V_per_rtHz"] = c.frontend.amp_noise.e_h;
  fe["g_diff"] = c.frontend.g_diff;
  fe["cmrr"] = c.frontend.cmrr;
  fe["g_ina"] = c.frontend.g_ina;
  fe["tau_s"] = c.frontend.tau;
  fe["h_net"]["r_x_Ohm"] = c.frontend.h_net.r_x;
  fe["h_net"]["c_x_F"] = c.frontend.h_net.c_x;
  fe["h_net"]["r_y_Ohm"] = c.frontend.h_net.r_y;
  fe["h_net"]["r_d_Ohm"] = c.frontend.h_net.r_d;
  fe["h_net"]["c_d_F"] = c.frontend.h_net.c_d;
  fe["f_m_Hz"] = c.frontend.f_m;
  fe["mixer_phase_rad"] = c.frontend.mixer_phase;
  fe["temperature_K"] = c.frontend.temperature;
  ordered_json lines = ordered_json::array();
  for (const auto& l : c.sample.lines) {
    ordered_json line;
    line["center_cm1"] = l.center;
    line["half_width_cm1"] = l.half_width;
    line["peak_gain_ppm"] = l.peak_gain;
    lines.push_back(line);
  }
  j["sample"]["lines"] = lines;
  auto& sim = j["sim"];
  sim["sample_rate_Hz"] = c.sim.sample_rate;
  sim["duration_s"] = c.sim.duration;
  sim["seed"] = c.sim.seed;
  sim["n_trials"] = c.sim.n_trials;
  sim["include_pulse_train"] = c.sim.include_pulse_train;
  sim["transient_discard_s"] = c.sim.transient_discard;
  sim["noise_shot"] = c.sim.noise_shot;
  sim["noise_electronics"] = c.sim.noise_electronics;
  sim["noise_rin"] = c.sim.noise_rin;
  auto& sc = j["scan"];
  sc["lambda_pump_m"] = c.scan.lambda_pump;
  sc["lambda_lo_m"] = c.scan.lambda_lo;
  sc["lambda_hi_m"] = c.scan.lambda_hi;
  sc["n_points"] = c.scan.n_points;
  auto& b = j["budget"];
  b["delta_p_W"] = c.budget.delta_p;
  b["f_lo_Hz"] = c.budget.f_lo;
  b["f_hi_Hz"] = c.budget.f_hi;
  b["n_points"] = c.budget.n_points;
  auto& sw = j["sweep"];
  sw["variable"] = c.sweep.variable;
  sw["lo"] = c.sweep.lo;
  sw["hi"] = c.sweep.hi;
  sw["n"] = c.sweep.n;
  sw["log_spacing"] = c.sweep.log_spacing;
  return j;
}

}  // namespace srs::config
