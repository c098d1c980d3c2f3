#pragma once

namespace nanonet::constants {

// CODATA 2018 exact SI values.
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kBoltzmann = 1.380649e-23;            // J/K
inline constexpr double kPlanck = 6.62607015e-34;             // J s
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
inline constexpr double kPi = 3.14159265358979323846;

/// h / e^2, about 25.8 kOhm.
inline constexpr double quantum_resistance() {
  return kPlanck / (kElementaryCharge * kElementaryCharge);
}

inline constexpr double kMilli = 1e-3;
inline constexpr double kNano = 1e-9;

/// Joules per meV.
inline constexpr double kMeV = kElementaryCharge * 1e-3;

}  // namespace nanonet::constants
