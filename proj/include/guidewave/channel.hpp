#pragma once

// Analytic mode-channel model of the two-splitter interferometer. A packet in
// transverse level n_in meets a thin element whose pair transfer matrix mixes
// the levels 2p and 2p+1 with a momentum-dependent phase; energy conservation
// sets each channel's exit momentum and blocked branches are booked as reflected.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guidewave/error.hpp"
#include "guidewave/fringe.hpp"
#include "guidewave/parallel.hpp"

namespace guidewave::channel {

using complex = std::complex<double>;

struct LongitudinalPacket {
  /// Ascending, strictly positive, uniform.
  std::vector<double> k;
  std::vector<complex> amplitude;
  double dk = 0.0;
  /// Norm of the Gaussian that fell at k <= 0 before renormalisation.
  double truncated_mass = 0.0;

  std::size_t size() const { return k.size(); }

  double norm() const {
    double s = 0.0;
    for (const auto& a : amplitude) s += std::norm(a);
    return s * dk;
  }

  double mean() const {
    double s = 0.0, w = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
      s += std::norm(amplitude[i]) * k[i];
      w += std::norm(amplitude[i]);
    }
    return s / w;
  }

  /// rms width of |A(k)|^2.
  double spread() const {
    const double m = mean();
    double s = 0.0, w = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
      s += std::norm(amplitude[i]) * (k[i] - m) * (k[i] - m);
      w += std::norm(amplitude[i]);
    }
    return std::sqrt(s / w);
  }

  void validate() const {
    require(!k.empty() && k.size() == amplitude.size(), ErrorCode::invalid_parameter, "empty longitudinal packet");
    require(k.front() > 0.0, ErrorCode::invalid_parameter, "packet contains non-positive momenta");
    require(std::abs(norm() - 1.0) < 1e-10, ErrorCode::invalid_parameter, "packet is not normalised");
  }

  /// Gaussian packet whose |A(k)|^2 has mean `k_mean` and rms width `sigma_k`,
  /// centred at `z0` at t = 0. The grid spans k_mean +- half_span, cut to k > 0.
  static LongitudinalPacket gaussian(double k_mean, double sigma_k, double z0 = 0.0, std::size_t n_points = 4096,
                                     double half_span = 0.0) {
    require(std::isfinite(k_mean) && sigma_k > 0.0 && n_points >= 16, ErrorCode::invalid_parameter,
            "invalid Gaussian packet parameters");
    if (half_span <= 0.0) half_span = 6.0 * sigma_k;
    const double k_hi = k_mean + half_span;
    require(k_hi > 0.0, ErrorCode::invalid_parameter, "packet has no support at positive momentum");
    const double k_lo = std::max(0.0, k_mean - half_span);
    LongitudinalPacket p;
    p.dk = (k_hi - k_lo) / double(n_points);
    p.k.resize(n_points);
    p.amplitude.resize(n_points);
    const double pref = std::pow(2.0 * std::numbers::pi * sigma_k * sigma_k, -0.25);
    for (std::size_t i = 0; i < n_points; ++i) {
      const double k = k_lo + (double(i) + 0.5) * p.dk;
      const double u = k - k_mean;
      p.k[i] = k;
      p.amplitude[i] = pref * std::exp(-u * u / (4.0 * sigma_k * sigma_k)) * std::polar(1.0, -k * z0);
    }
    // Mass of the continuous Gaussian below k = 0.
    p.truncated_mass = 0.5 * std::erfc(k_mean / (std::sqrt(2.0) * sigma_k));
    const double f = 1.0 / std::sqrt(p.norm());
    for (auto& a : p.amplitude) a *= f;
    return p;
  }
};

enum class PhaseKind { path_length, potential_integral };

constexpr std::string_view to_string(PhaseKind k) {
  return k == PhaseKind::path_length ? "path_length" : "potential_integral";
}

inline PhaseKind phase_kind_from_string(std::string_view s) {
  if (s == "path_length" || s == "delta_l") return PhaseKind::path_length;
  if (s == "potential_integral" || s == "potential") return PhaseKind::potential_integral;
  throw Error(ErrorCode::invalid_parameter, "unknown phase kind '" + std::string(s) + "'");
}

struct TransferSettings {
  PhaseKind kind = PhaseKind::path_length;
  double delta_l = 0.0;
  double u_integral = 0.0;
  /// Input-guide level spacing; the arms sit at twice this frequency.
  double omega = 1.0;
  std::size_t n_in = 0;

  static TransferSettings path_length(double delta_l, std::size_t n_in = 0, double omega = 1.0) {
    return {PhaseKind::path_length, delta_l, 0.0, omega, n_in};
  }
  static TransferSettings potential(double u_integral, std::size_t n_in = 0, double omega = 1.0) {
    return {PhaseKind::potential_integral, 0.0, u_integral, omega, n_in};
  }

  void validate() const {
    require(std::isfinite(omega) && omega > 0.0, ErrorCode::invalid_parameter, "omega must be positive");
    require(std::isfinite(delta_l) && std::isfinite(u_integral), ErrorCode::invalid_parameter,
            "phase parameters must be finite");
    if (kind == PhaseKind::path_length)
      require(u_integral == 0.0, ErrorCode::invalid_parameter, "path-length phase given with a potential integral");
    else
      require(delta_l == 0.0, ErrorCode::invalid_parameter, "potential phase given with a path-length difference");
  }
};

inline double phase_shift(double k, const TransferSettings& s) {
  require(k > 0.0, ErrorCode::invalid_parameter, "phase_shift needs k > 0");
  return s.kind == PhaseKind::path_length ? k * s.delta_l : s.u_integral / k;
}

using Matrix2 = std::array<std::array<complex, 2>, 2>;

inline Matrix2 transfer_matrix(double delta_phi) {
  const double c = std::cos(0.5 * delta_phi), s = std::sin(0.5 * delta_phi);
  return {{{complex(c, 0.0), complex(0.0, s)}, {complex(0.0, s), complex(c, 0.0)}}};
}

enum class Transition { none, up, down };

/// Longitudinal momentum after a transverse change of +-omega; nullopt if blocked.
inline std::optional<double> exit_momentum(double k, Transition t, double omega = 1.0) {
  require(k > 0.0, ErrorCode::invalid_parameter, "exit_momentum needs k > 0");
  switch (t) {
    case Transition::none:
      return k;
    case Transition::up: {
      const double k2 = k * k - 2.0 * omega;
      if (k2 <= 0.0) return std::nullopt;
      return std::sqrt(k2);
    }
    case Transition::down:
      return std::sqrt(k * k + 2.0 * omega);
  }
  return std::nullopt;
}

struct ChannelState {
  /// Exit transverse level (2p or 2p+1).
  std::size_t index = 0;
  Transition transition = Transition::none;
  /// Input momentum grid shared with the packet.
  std::vector<double> k;
  /// Exit momentum per k; 0 where blocked.
  std::vector<double> k_out;
  std::vector<complex> amplitude;
  double dk = 0.0;

  double norm() const {
    double s = 0.0;
    for (const auto& a : amplitude) s += std::norm(a);
    return s * dk;
  }
};

struct ReflectionLedger {
  /// E_kin < omega/2 for an even input level: turned back at the first splitter.
  double entrance = 0.0;
  /// Raising branch with k^2 < 2 omega: cannot leave in the upper level.
  double exit = 0.0;
  double total() const { return entrance + exit; }
};

struct InterferometerOutput {
  /// channels[0] is level 2p, channels[1] is level 2p+1.
  std::array<ChannelState, 2> channels;
  ReflectionLedger reflected;
  TransferSettings settings;

  double transmitted() const { return channels[0].norm() + channels[1].norm(); }
};

inline InterferometerOutput apply_interferometer(const LongitudinalPacket& packet, const TransferSettings& settings) {
  packet.validate();
  settings.validate();
  const std::size_t pair = settings.n_in / 2;
  const std::size_t q_in = settings.n_in % 2;
  InterferometerOutput out;
  out.settings = settings;
  const std::size_t n = packet.size();
  for (std::size_t c = 0; c < 2; ++c) {
    auto& ch = out.channels[c];
    ch.index = 2 * pair + c;
    ch.transition = c == q_in ? Transition::none : (c == 1 ? Transition::up : Transition::down);
    ch.k = packet.k;
    ch.k_out.assign(n, 0.0);
    ch.amplitude.assign(n, complex{});
    ch.dk = packet.dk;
  }
  const double w = settings.omega;
  for (std::size_t i = 0; i < n; ++i) {
    const double k = packet.k[i];
    const complex a = packet.amplitude[i];
    const double mass = std::norm(a) * packet.dk;
    // Even levels gain omega/2 on entering the arms (omega(2p+1/2) -> 2 omega (p+1/2)).
    if (q_in == 0 && 0.5 * k * k < 0.5 * w) {
      out.reflected.entrance += mass;
      continue;
    }
    const Matrix2 m = transfer_matrix(phase_shift(k, settings));
    for (std::size_t c = 0; c < 2; ++c) {
      auto& ch = out.channels[c];
      const complex amp = m[c][q_in] * a;
      const auto kout = exit_momentum(k, ch.transition, w);
      if (!kout) {
        out.reflected.exit += std::norm(amp) * packet.dk;
        continue;
      }
      ch.k_out[i] = *kout;
      ch.amplitude[i] = amp;
    }
  }
  return out;
}

struct ZGrid {
  double z_min = 0.0;
  double z_max = 1.0;
  std::size_t n = 1024;

  double dz() const { return (z_max - z_min) / double(n - 1); }
  double z(std::size_t j) const { return z_min + double(j) * dz(); }
  std::vector<double> points() const {
    std::vector<double> p(n);
    for (std::size_t j = 0; j < n; ++j) p[j] = z(j);
    return p;
  }
  void validate() const {
    require(n >= 2 && std::isfinite(z_min) && std::isfinite(z_max) && z_max > z_min, ErrorCode::invalid_parameter,
            "invalid z grid");
  }
};

struct ChannelDensities {
  std::vector<double> z;
  std::array<std::vector<double>, 2> channel;
  std::vector<double> total;
};

namespace detail {

/// Adds |psi(z_j)|^2 of one channel at time t into `density` for j in [j_lo, j_hi).
/// psi = (2 pi)^(-1/2) sum_k amp sqrt(dq/dk) exp(i (q z - k^2 t / 2)) dk, computed
/// with a per-k phase recurrence along the uniform z grid.
inline void accumulate_channel(const ChannelState& ch, double t, const ZGrid& grid, std::size_t j_lo,
                               std::size_t j_hi, double scale, std::vector<double>& density) {
  if (j_lo >= j_hi) return;
  const std::size_t m = j_hi - j_lo;
  require(double(m - 1) * grid.dz() < 2.0 * std::numbers::pi / ch.dk, ErrorCode::grid_too_small,
          "z range exceeds the alias period 2 pi / dk of the momentum grid; refine the packet grid");
  std::vector<complex> psi(m, complex{});
  const double z0 = grid.z(j_lo), dz = grid.dz();
  const double pref = ch.dk / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < ch.k.size(); ++i) {
    if (ch.k_out[i] <= 0.0 || ch.amplitude[i] == complex{}) continue;
    const double q = ch.k_out[i], k = ch.k[i];
    const complex c = pref * ch.amplitude[i] * std::sqrt(k / q) * std::polar(1.0, q * z0 - 0.5 * k * k * t);
    const complex step = std::polar(1.0, q * dz);
    complex ph = c;
    // Re-anchor the recurrence periodically to bound rounding drift.
    constexpr std::size_t anchor = 256;
    for (std::size_t j = 0; j < m; ++j) {
      if (j % anchor == 0 && j > 0) ph = c * std::polar(1.0, q * dz * double(j));
      psi[j] += ph;
      ph *= step;
    }
  }
  for (std::size_t j = 0; j < m; ++j) density[j_lo + j] += scale * std::norm(psi[j]);
}

}  // namespace detail

/// Support of a channel at time t: the stationary-phase positions q(k) t of the
/// momenta carrying the packet, shifted by the source centre and widened.
struct Support {
  double z_min;
  double z_max;
};

inline std::optional<Support> channel_support(const ChannelState& ch, double t, double source_center,
                                              double source_width, double threshold = 1e-14) {
  double mx = 0.0;
  for (const auto& a : ch.amplitude) mx = std::max(mx, std::norm(a));
  if (mx == 0.0) return std::nullopt;
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < ch.k.size(); ++i) {
    if (ch.k_out[i] <= 0.0 || std::norm(ch.amplitude[i]) < threshold * mx) continue;
    lo = std::min(lo, ch.k_out[i] * t);
    hi = std::max(hi, ch.k_out[i] * t);
  }
  if (lo > hi) return std::nullopt;
  const double margin = 0.5 * std::abs(source_center) + 10.0 * source_width;
  return Support{lo + source_center - margin, hi + source_center + margin};
}

struct EvolveOptions {
  /// Restrict evaluation to each channel's support, estimated from the packet's
  /// initial centre and rms position width.
  bool restrict_support = false;
  double source_center = 0.0;
  double source_width = 0.0;
  /// Multiplies every density (used for weighted ensemble sums).
  double scale = 1.0;
};

/// Adds the channel densities at time t into an existing accumulator.
inline void accumulate_channels(const InterferometerOutput& out, double t, const ZGrid& grid,
                                const EvolveOptions& opts, ChannelDensities& acc) {
  require(t >= 0.0, ErrorCode::invalid_parameter, "evolve_channels needs t >= 0");
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& ch = out.channels[c];
    std::size_t j_lo = 0, j_hi = grid.n;
    if (opts.restrict_support) {
      const auto sup = channel_support(ch, t, opts.source_center, opts.source_width);
      if (!sup) continue;
      const double dz = grid.dz();
      const double a = std::floor((sup->z_min - grid.z_min) / dz), b = std::ceil((sup->z_max - grid.z_min) / dz) + 1;
      j_lo = std::size_t(std::clamp(a, 0.0, double(grid.n)));
      j_hi = std::size_t(std::clamp(b, 0.0, double(grid.n)));
    }
    detail::accumulate_channel(ch, t, grid, j_lo, j_hi, opts.scale, acc.channel[c]);
  }
}

inline ChannelDensities empty_densities(const ZGrid& grid) {
  ChannelDensities d;
  d.z = grid.points();
  for (auto& c : d.channel) c.assign(grid.n, 0.0);
  d.total.assign(grid.n, 0.0);
  return d;
}

inline void finish_total(ChannelDensities& d) {
  for (std::size_t j = 0; j < d.z.size(); ++j) d.total[j] = d.channel[0][j] + d.channel[1][j];
}

inline ChannelDensities evolve_channels(const InterferometerOutput& out, double t, const ZGrid& grid,
                                        const EvolveOptions& opts = {}) {
  grid.validate();
  auto d = empty_densities(grid);
  accumulate_channels(out, t, grid, opts, d);
  finish_total(d);
  return d;
}

/// Density-weighted mean position of one channel.
inline double centroid(const std::vector<double>& z, const std::vector<double>& density) {
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    m0 += density[j];
    m1 += density[j] * z[j];
  }
  return m1 / m0;
}

struct RephaseScan {
  std::vector<double> times;
  std::vector<double> contrast;
  double best_time = 0.0;
  double best_contrast = 0.0;
};

/// Scans t over [t_min, t_max] and records the total-density fringe contrast in a
/// window that follows the packet (z0 + k_mean t, half-width `width_sigmas` rms widths).
inline RephaseScan rephase_time(const InterferometerOutput& out, double t_min, double t_max, std::size_t samples,
                                double z0, double width_sigmas = 2.0, std::size_t n_z = 2048, unsigned threads = 1,
                                const fringe::FringeOptions& fopts = {}) {
  require(out.channels[0].norm() > 0.0 && out.channels[1].norm() > 0.0, ErrorCode::empty_channel,
          "rephasing scan needs both channels populated");
  require(t_max > t_min && t_min >= 0.0 && samples >= 2, ErrorCode::invalid_parameter, "invalid rephasing window");
  // Moments of the input distribution from the even-parity-agnostic sum of channels.
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (const auto& ch : out.channels)
    for (std::size_t i = 0; i < ch.k.size(); ++i) {
      const double p = std::norm(ch.amplitude[i]);
      m0 += p;
      m1 += p * ch.k[i];
      m2 += p * ch.k[i] * ch.k[i];
    }
  const double k_mean = m1 / m0;
  const double sigma_k = std::sqrt(std::max(m2 / m0 - k_mean * k_mean, 1e-300));
  const double sigma_0 = 0.5 / sigma_k;

  RephaseScan scan;
  scan.times.resize(samples);
  scan.contrast.resize(samples);
  parallel::for_each_index(samples, threads, [&](std::size_t s) {
    const double t = t_min + (t_max - t_min) * double(s) / double(samples - 1);
    const double width = std::sqrt(sigma_0 * sigma_0 + sigma_k * sigma_k * t * t);
    const double zc = z0 + k_mean * t;
    const double half = (width_sigmas + 1.0) * width;
    const ZGrid grid{zc - half, zc + half, n_z};
    const auto d = evolve_channels(out, t, grid);
    const auto rep = fringe::fringe_analysis(d.z, d.total, {zc - width_sigmas * width, zc + width_sigmas * width}, fopts);
    scan.times[s] = t;
    scan.contrast[s] = rep.has_fringes() ? rep.contrast : 0.0;
  });
  const auto it = std::max_element(scan.contrast.begin(), scan.contrast.end());
  scan.best_contrast = *it;
  scan.best_time = scan.times[std::size_t(it - scan.contrast.begin())];
  return scan;
}

}  // namespace guidewave::channel
