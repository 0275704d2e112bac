#pragma once

#include <cmath>
#include <cstdint>

// Counter-based deterministic random streams. Every stream is addressed by a
// key derived from (seed, scan point, trial, source, branch); sample i of a
// stream is a pure function of (key, i), so trials and scan points can run
// on any number of threads in any order and still produce identical output.
namespace srs::rng {

inline constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Random access into the stream: value i is the splitmix output at state
// key + (i+1)*golden.
inline std::uint64_t at(std::uint64_t key, std::uint64_t i) {
  return mix(key + golden * (i + 1));
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t point, std::uint64_t trial,
                                std::uint64_t source, std::uint64_t branch = 0) {
  std::uint64_t k = mix(seed + golden);
  k = mix(k ^ (point * 0xD6E8FEB86659FD93ull + 1));
  k = mix(k ^ (trial * 0xA3B195354A39B70Dull + 2));
  k = mix(k ^ (source * 0x1B03738712FAD5C9ull + 3));
  k = mix(k ^ (branch * 0xC2B2AE3D27D4EB4Full + 4));
  return k;
}

// Uniform in (0, 1): 53 mantissa bits, offset half an ulp so 0 is excluded.
inline double uniform01(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal stream via Box-Muller on counter-indexed uniforms.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t key) : key_(key) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01(at(key_, ctr_));
    const double u2 = uniform01(at(key_, ctr_ + 1));
    ctr_ += 2;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace srs::rng
