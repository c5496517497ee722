#pragma once

// Physical constants, experiment parameters and the natural-unit system
// (hbar = m = omega_in = 1) used by every solver.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "guidewave/error.hpp"

namespace guidewave::units {

namespace constants {
// CODATA 2018, 10 significant digits.
inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double k_boltzmann = 1.380649000e-23;  // J/K
inline constexpr double atomic_mass_unit = 1.660539067e-27;  // kg
inline constexpr double pi = 3.14159265358979323846;
}  // namespace constants

/// Isotope masses in atomic mass units.
inline std::optional<double> isotope_mass(std::string_view name) {
  if (name == "Li-7" || name == "Li7" || name == "7Li") return 7.016003437 * constants::atomic_mass_unit;
  if (name == "Li-6" || name == "Li6" || name == "6Li") return 6.015122887 * constants::atomic_mass_unit;
  if (name == "Rb-87" || name == "Rb87" || name == "87Rb") return 86.90918053 * constants::atomic_mass_unit;
  if (name == "Na-23" || name == "Na23" || name == "23Na") return 22.98976928 * constants::atomic_mass_unit;
  return std::nullopt;
}

/// Atom and device constants, all SI.
struct PhysicalParams {
  double mass = 7.016003437 * constants::atomic_mass_unit;  // kg
  double omega_in = 1.0e5;        // rad/s
  double omega_arm = 2.0e5;       // rad/s
  double temperature = 200e-6;    // K
  double source_length = 100e-6;  // m
  double delta_l = 2e-6;          // m
  double device_length = 1e-3;    // m
  double detection_time = 20e-3;  // s

  /// Sets omega_in and resets omega_arm to the default of twice its value.
  PhysicalParams& with_omega_in(double omega) {
    omega_in = omega;
    omega_arm = 2.0 * omega;
    return *this;
  }

  void validate() const {
    auto positive = [](double v, const char* name) {
      require(std::isfinite(v) && v > 0.0, ErrorCode::invalid_parameter,
              std::string("physical parameter '") + name + "' must be strictly positive");
    };
    positive(mass, "mass");
    positive(omega_in, "omega_in");
    positive(omega_arm, "omega_arm");
    positive(temperature, "temperature");
    positive(source_length, "source_length");
    positive(delta_l, "delta_l");
    positive(device_length, "device_length");
    positive(detection_time, "detection_time");
  }
};

enum class Dimension { length, time, energy, momentum, frequency };

constexpr std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::length: return "length";
    case Dimension::time: return "time";
    case Dimension::energy: return "energy";
    case Dimension::momentum: return "momentum";
    case Dimension::frequency: return "frequency";
  }
  return "unknown";
}

inline Dimension dimension_from_string(std::string_view tag) {
  if (tag == "length") return Dimension::length;
  if (tag == "time") return Dimension::time;
  if (tag == "energy") return Dimension::energy;
  if (tag == "momentum") return Dimension::momentum;
  if (tag == "frequency") return Dimension::frequency;
  throw Error(ErrorCode::invalid_parameter, "unknown dimension tag '" + std::string(tag) + "'");
}

struct Quantity {
  double value = 0.0;
  Dimension dimension = Dimension::length;
};

enum class Direction { to_natural, from_natural };

/// Unit scales of the natural system: lengths in a0 = sqrt(hbar/(m omega_in)),
/// times in 1/omega_in, energies in hbar omega_in, momenta (wavenumbers) in 1/a0.
struct NaturalUnits {
  double length_unit = 1.0;    // m
  double time_unit = 1.0;      // s
  double energy_unit = 1.0;    // J
  double momentum_unit = 1.0;  // 1/m
  double frequency_unit = 1.0;  // rad/s

  double scale(Dimension d) const {
    switch (d) {
      case Dimension::length: return length_unit;
      case Dimension::time: return time_unit;
      case Dimension::energy: return energy_unit;
      case Dimension::momentum: return momentum_unit;
      case Dimension::frequency: return frequency_unit;
    }
    throw Error(ErrorCode::invalid_parameter, "unknown dimension");
  }

  Quantity convert(Quantity q, Direction direction) const {
    const double s = scale(q.dimension);
    return {direction == Direction::to_natural ? q.value / s : q.value * s, q.dimension};
  }

  double to_natural(double value, Dimension d) const { return value / scale(d); }
  double to_si(double value, Dimension d) const { return value * scale(d); }
};

/// Unit scales from explicit mass, frequency and hbar (hbar defaults to the SI value).
inline NaturalUnits natural_units(double mass, double omega_in, double hbar = constants::hbar) {
  require(std::isfinite(mass) && mass > 0.0, ErrorCode::invalid_parameter, "mass must be strictly positive");
  require(std::isfinite(omega_in) && omega_in > 0.0, ErrorCode::invalid_parameter,
          "omega_in must be strictly positive");
  NaturalUnits u;
  u.length_unit = std::sqrt(hbar / (mass * omega_in));
  u.time_unit = 1.0 / omega_in;
  u.energy_unit = hbar * omega_in;
  u.momentum_unit = 1.0 / u.length_unit;
  u.frequency_unit = omega_in;
  return u;
}

inline NaturalUnits natural_units(const PhysicalParams& params) {
  params.validate();
  return natural_units(params.mass, params.omega_in);
}

inline Quantity convert(const NaturalUnits& units, Quantity q, Direction direction) {
  return units.convert(q, direction);
}

/// Thermal energy k_B T in units of hbar omega_in.
inline double thermal_energy_natural(const PhysicalParams& params) {
  return constants::k_boltzmann * params.temperature / natural_units(params).energy_unit;
}

}  // namespace guidewave::units
