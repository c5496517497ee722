#pragma once

// Interferometer guide geometry in natural units: one harmonic guide that
// splits into two arms and recombines, plus the adiabaticity diagnostic.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "guidewave/error.hpp"

namespace guidewave::geometry {

enum class Ramp { linear, smoothstep };
enum class WellShape { piecewise_quadratic, quartic };

constexpr std::string_view to_string(Ramp r) { return r == Ramp::linear ? "linear" : "smoothstep"; }
constexpr std::string_view to_string(WellShape s) {
  return s == WellShape::piecewise_quadratic ? "piecewise_quadratic" : "quartic";
}

inline Ramp ramp_from_string(std::string_view s) {
  if (s == "linear") return Ramp::linear;
  if (s == "smoothstep") return Ramp::smoothstep;
  throw Error(ErrorCode::invalid_parameter, "unknown ramp kind '" + std::string(s) + "'");
}

inline WellShape shape_from_string(std::string_view s) {
  if (s == "piecewise_quadratic" || s == "piecewise") return WellShape::piecewise_quadratic;
  if (s == "quartic") return WellShape::quartic;
  throw Error(ErrorCode::invalid_parameter, "unknown well shape '" + std::string(s) + "'");
}

/// Ramp profile s(u) on [0,1] with s(0)=0, s(1)=1.
inline double ramp_value(Ramp r, double u) {
  u = std::clamp(u, 0.0, 1.0);
  return r == Ramp::linear ? u : u * u * (3.0 - 2.0 * u);
}

inline double ramp_slope(Ramp r, double u) {
  if (u < 0.0 || u > 1.0) return 0.0;
  return r == Ramp::linear ? 1.0 : 6.0 * u * (1.0 - u);
}

/// Largest value of s'(u) over [0,1].
inline double ramp_max_slope(Ramp r) { return r == Ramp::linear ? 1.0 : 1.5; }

struct GeometryProfile {
  double z_split_start = 40.0;
  double z_split_end = 240.0;
  double z_merge_start = 320.0;
  double z_merge_end = 520.0;
  /// End of the device domain; defaults to the merge end when left at zero.
  double length = 0.0;
  double d_max = 10.0;
  Ramp ramp = Ramp::smoothstep;
  WellShape shape = WellShape::piecewise_quadratic;
  double omega_in = 1.0;
  double omega_arm = 2.0;
  /// Extra path length of one arm; realised as a mode-space phase, not geometry.
  double arm_delta_l = 0.0;

  double device_length() const { return length > 0.0 ? length : z_merge_end; }

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    require(finite(z_split_start) && finite(z_split_end) && finite(z_merge_start) && finite(z_merge_end),
            ErrorCode::invalid_parameter, "geometry stations must be finite");
    require(0.0 <= z_split_start && z_split_start < z_split_end && z_split_end <= z_merge_start &&
                z_merge_start < z_merge_end,
            ErrorCode::invalid_parameter,
            "geometry stations must satisfy 0 <= split_start < split_end <= merge_start < merge_end");
    require(length == 0.0 || length >= z_merge_end, ErrorCode::invalid_parameter,
            "device length must not be shorter than the merge end");
    require(finite(d_max) && d_max >= 0.0, ErrorCode::invalid_parameter, "d_max must be non-negative");
    require(finite(omega_in) && omega_in > 0.0 && finite(omega_arm) && omega_arm > 0.0,
            ErrorCode::invalid_parameter, "guide frequencies must be strictly positive");
    require(finite(arm_delta_l) && arm_delta_l >= 0.0, ErrorCode::invalid_parameter,
            "arm_delta_l must be non-negative");
  }

  /// Fraction of full splitting at z: 0 in the single guide, 1 on the plateau.
  /// Defined for every z (straight guide outside the device).
  double split_fraction(double z) const {
    if (z <= z_split_start || z >= z_merge_end) return 0.0;
    if (z < z_split_end) return ramp_value(ramp, (z - z_split_start) / (z_split_end - z_split_start));
    if (z <= z_merge_start) return 1.0;
    return ramp_value(ramp, (z_merge_end - z) / (z_merge_end - z_merge_start));
  }

  /// d(s)/dz.
  double split_fraction_slope(double z) const {
    if (z <= z_split_start || z >= z_merge_end) return 0.0;
    if (z < z_split_end) {
      const double w = z_split_end - z_split_start;
      return ramp_slope(ramp, (z - z_split_start) / w) / w;
    }
    if (z <= z_merge_start) return 0.0;
    const double w = z_merge_end - z_merge_start;
    return -ramp_slope(ramp, (z_merge_end - z) / w) / w;
  }

  bool in_device(double z) const { return z >= 0.0 && z <= device_length(); }

  void require_in_device(double z) const {
    require(in_device(z), ErrorCode::out_of_domain,
            "z = " + std::to_string(z) + " lies outside the device [0, " + std::to_string(device_length()) + "]");
  }
};

/// Arm separation d(z).
inline double separation(const GeometryProfile& p, double z) {
  p.require_in_device(z);
  return p.d_max * p.split_fraction(z);
}

/// Transverse frequency of each well, following the same ramp as d(z).
inline double well_frequency(const GeometryProfile& p, double z) {
  p.require_in_device(z);
  return p.omega_in + (p.omega_arm - p.omega_in) * p.split_fraction(z);
}

/// Potential at (x, z); z outside the device is treated as straight guide.
inline double potential(const GeometryProfile& p, double x, double z) {
  const double s = p.split_fraction(z);
  const double omega = p.omega_in + (p.omega_arm - p.omega_in) * s;
  const double half_d = 0.5 * p.d_max * s;
  if (p.shape == WellShape::piecewise_quadratic) {
    const double u = std::abs(x) - half_d;
    return 0.5 * omega * omega * u * u;
  }
  // (x^2 - a^2)^2 / (x^2 + 3a^2): smooth, minima at +-a with curvature omega^2,
  // harmonic at a = 0 and asymptotically.
  const double a2 = half_d * half_d;
  const double x2 = x * x;
  const double denom = x2 + 3.0 * a2;
  if (denom == 0.0) return 0.0;
  const double num = x2 - a2;
  return 0.5 * omega * omega * num * num / denom;
}

/// Callable view of the geometry potential.
struct PotentialField {
  GeometryProfile profile;
  double operator()(double x, double z) const { return potential(profile, x, z); }
};

/// max_z E_kin (d'(z))^2 / (hbar omega_in); values << 1 mean adiabatic splitting.
inline double adiabaticity_ratio(const GeometryProfile& p, double kinetic_energy) {
  require(std::isfinite(kinetic_energy) && kinetic_energy > 0.0, ErrorCode::invalid_parameter,
          "kinetic energy must be strictly positive");
  const double smax = ramp_max_slope(p.ramp);
  const double slope_split = p.d_max * smax / (p.z_split_end - p.z_split_start);
  const double slope_merge = p.d_max * smax / (p.z_merge_end - p.z_merge_start);
  const double max_slope = std::max(slope_split, slope_merge);
  return kinetic_energy * max_slope * max_slope / p.omega_in;
}

}  // namespace guidewave::geometry
