#pragma once

// SI defining constants (2019 redefinition) used throughout the toolkit.
namespace srs::constants {

inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double planck            = 6.62607015e-34;   // J s
inline constexpr double speed_of_light    = 299792458.0;      // m/s
inline constexpr double boltzmann         = 1.380649e-23;     // J/K

inline constexpr double default_temperature = 300.0;  // K

}  // namespace srs::constants
