#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "srs/errors.hpp"

namespace srs::noise {

// Domain a one-sided spectral density is referred to. Determines the value
// unit: W^2/Hz (optical_power), A^2/Hz (current) or V^2/Hz (voltage).
enum class Referral { optical_power, current, voltage };

inline const char* referral_name(Referral r) {
  switch (r) {
    case Referral::optical_power: return "optical_power";
    case Referral::current: return "current";
    case Referral::voltage: return "voltage";
  }
  return "?";
}

namespace detail {

// Piecewise-linear interpolation of y against ln(x), clamped at the ends.
inline double log_x_interp(const std::vector<std::pair<double, double>>& pts, double x) {
  if (x <= pts.front().first) return pts.front().second;
  if (x >= pts.back().first) return pts.back().second;
  std::size_t hi = 1;
  while (pts[hi].first < x) ++hi;
  const auto& a = pts[hi - 1];
  const auto& b = pts[hi];
  const double t = (std::log(x) - std::log(a.first)) / (std::log(b.first) - std::log(a.first));
  return a.second + t * (b.second - a.second);
}

}  // namespace detail

// Immutable one-sided spectral density over frequency [Hz], tagged with the
// domain it is referred to. Backed either by a closed form or a sampled
// log-grid curve; evaluation is pure.
class SpectralDensity {
 public:
  SpectralDensity() : referral_(Referral::optical_power), eval_([](double) { return 0.0; }) {
    flat_ = true;
    flat_value_ = 0.0;
  }

  static SpectralDensity flat(Referral r, double value) {
    srs::detail::require(std::isfinite(value) && value >= 0.0,
                         "SpectralDensity: flat density must be finite and >= 0");
    SpectralDensity s(r, [value](double) { return value; });
    s.flat_ = true;
    s.flat_value_ = value;
    return s;
  }

  static SpectralDensity from_function(Referral r, std::function<double(double)> fn) {
    return SpectralDensity(r, std::move(fn));
  }

  // Sampled curve, interpolated linearly in (ln f, ln S), clamped outside the
  // tabulated range. Frequencies must be positive and strictly increasing.
  static SpectralDensity from_log_grid(Referral r, std::vector<std::pair<double, double>> pts) {
    srs::detail::require(!pts.empty(), "SpectralDensity: empty sample grid");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      srs::detail::require(pts[i].first > 0.0 && std::isfinite(pts[i].first),
                           "SpectralDensity: grid frequencies must be positive");
      srs::detail::require(pts[i].second > 0.0 && std::isfinite(pts[i].second),
                           "SpectralDensity: grid densities must be positive");
      if (i) {
        srs::detail::require(pts[i].first > pts[i - 1].first,
                             "SpectralDensity: grid frequencies must be strictly increasing");
      }
    }
    std::vector<std::pair<double, double>> logpts(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      logpts[i] = {pts[i].first, std::log(pts[i].second)};
    }
    return SpectralDensity(r, [logpts](double f) { return std::exp(detail::log_x_interp(logpts, f)); });
  }

  Referral referral() const { return referral_; }

  // Density at frequency f [Hz].
  double operator()(double f) const {
    srs::detail::require(f >= 0.0, "SpectralDensity: frequency must be >= 0");
    const double v = eval_(f);
    if (!std::isfinite(v)) throw numeric_error("SpectralDensity: non-finite density value");
    if (v < 0.0) throw numeric_error("SpectralDensity: negative density value");
    return v;
  }

  SpectralDensity scaled(double factor) const {
    srs::detail::require(std::isfinite(factor) && factor >= 0.0,
                         "SpectralDensity: scale factor must be finite and >= 0");
    auto e = eval_;
    SpectralDensity s(referral_, [e, factor](double f) { return factor * e(f); });
    s.flat_ = flat_;
    s.flat_value_ = flat_value_ * factor;
    return s;
  }

  // Same density values relabeled with a new referral domain. Used by the
  // referral conversions after the numeric scaling has been applied.
  SpectralDensity with_referral(Referral r) const {
    SpectralDensity s(r, eval_);
    s.flat_ = flat_;
    s.flat_value_ = flat_value_;
    return s;
  }

  friend SpectralDensity operator+(const SpectralDensity& a, const SpectralDensity& b) {
    srs::detail::require(a.referral_ == b.referral_,
                         "SpectralDensity: cannot add densities with different referrals");
    auto ea = a.eval_;
    auto eb = b.eval_;
    SpectralDensity s(a.referral_, [ea, eb](double f) { return ea(f) + eb(f); });
    s.flat_ = a.flat_ && b.flat_;
    s.flat_value_ = a.flat_value_ + b.flat_value_;
    return s;
  }

  // True when the density is known constant in frequency (enables exact
  // time-domain white-noise synthesis without spectral shaping).
  bool is_flat() const { return flat_; }
  double flat_value() const {
    srs::detail::require(flat_, "SpectralDensity: not a flat density");
    return flat_value_;
  }

 private:
  SpectralDensity(Referral r, std::function<double(double)> fn)
      : referral_(r), eval_(std::move(fn)) {}

  bool flat_ = false;
  double flat_value_ = 0.0;
  Referral referral_;
  std::function<double(double)> eval_;
};

}  // namespace srs::noise
