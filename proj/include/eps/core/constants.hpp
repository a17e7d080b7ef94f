#pragma once

namespace eps::constants {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Vacuum permittivity [F/m]; air is taken as vacuum.
inline constexpr double kEpsilon0 = 8.8541878128e-12;
/// Boltzmann constant [J/K].
inline constexpr double kBoltzmann = 1.380649e-23;
/// Elementary charge [C].
inline constexpr double kElementaryCharge = 1.602176634e-19;

}  // namespace eps::constants
