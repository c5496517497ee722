#pragma once

// Two-dimensional time-dependent Schroedinger propagation with a Strang
// split-operator step: half potential phase, exact spectral kinetic phase,
// half potential phase. Natural units (hbar = m = 1).
//
// The wavefunction is stored row-major as [x][z] so the long z axis is
// contiguous. The z window may scroll with the packet in whole cells; since
// the potential is static in the lab frame and the shift is an integer number
// of cells, this is identical to propagating on a longer periodic grid for as
// long as the strip that wraps around carries no norm (anything it does carry
// is booked in the absorbed-norm ledger).

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "guidewave/error.hpp"
#include "guidewave/fft.hpp"
#include "guidewave/geometry.hpp"
#include "guidewave/transverse.hpp"

namespace guidewave::tdse {

using complex = std::complex<double>;
using Potential2D = std::function<double(double x, double z)>;

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

struct Grid2D {
  /// Cell-centred transverse axis, shared with the eigensolver.
  transverse::XGrid x;
  double z_min = 0.0;
  double z_extent = 0.0;
  std::size_t nz = 0;

  std::size_t nx() const { return x.n_points; }
  std::size_t size() const { return nx() * nz; }
  double dx() const { return x.spacing(); }
  double dz() const { return z_extent / static_cast<double>(nz); }
  double z(std::size_t j) const { return z_min + static_cast<double>(j) * dz(); }
  double z_max() const { return z_min + z_extent; }
  double cell() const { return dx() * dz(); }
  double momentum_cutoff_z() const { return std::numbers::pi / dz(); }
  double momentum_cutoff_x() const { return std::numbers::pi / dx(); }
  /// Largest kinetic eigenvalue representable on the grid.
  double max_kinetic() const {
    const double kx = momentum_cutoff_x(), kz = momentum_cutoff_z();
    return 0.5 * (kx * kx + kz * kz);
  }

  void validate() const {
    x.validate();
    require(is_power_of_two(nx()) && is_power_of_two(nz), ErrorCode::invalid_parameter,
            "grid counts must be powers of two (got " + std::to_string(nx()) + " x " + std::to_string(nz) + ")");
    require(std::isfinite(z_min) && std::isfinite(z_extent) && z_extent > 0.0, ErrorCode::invalid_parameter,
            "z extent must be positive and finite");
  }
};

struct WaveFunction2D {
  Grid2D grid;
  std::vector<complex> data;
  double time = 0.0;

  WaveFunction2D() = default;
  explicit WaveFunction2D(Grid2D g) : grid(std::move(g)), data(grid.size()) {}

  complex& at(std::size_t ix, std::size_t iz) { return data[ix * grid.nz + iz]; }
  const complex& at(std::size_t ix, std::size_t iz) const { return data[ix * grid.nz + iz]; }

  double norm() const {
    double s = 0.0;
    for (const auto& c : data) s += std::norm(c);
    return s * grid.cell();
  }

  /// Integral of |psi|^2 over x at each z.
  std::vector<double> marginal_z() const {
    std::vector<double> rho(grid.nz, 0.0);
    const double dx = grid.dx();
    for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
      const complex* row = &data[ix * grid.nz];
      for (std::size_t j = 0; j < grid.nz; ++j) rho[j] += std::norm(row[j]);
    }
    for (double& r : rho) r *= dx;
    return rho;
  }

  /// Norm contained in z >= z_from.
  double norm_beyond(double z_from) const {
    const auto rho = marginal_z();
    double s = 0.0;
    for (std::size_t j = 0; j < grid.nz; ++j)
      if (grid.z(j) >= z_from) s += rho[j];
    return s * grid.dz();
  }
};

/// Centroid and rms width of a sampled density.
struct Moments {
  double mass = 0.0;
  double mean = 0.0;
  double rms = 0.0;
};

inline Moments moments(const std::vector<double>& z, const std::vector<double>& density, double z_from = -1e300) {
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j)
    if (z[j] >= z_from) {
      m0 += density[j];
      m1 += density[j] * z[j];
    }
  Moments m;
  m.mass = m0;
  if (m0 <= 0.0) return m;
  m.mean = m1 / m0;
  double m2 = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j)
    if (z[j] >= z_from) m2 += density[j] * (z[j] - m.mean) * (z[j] - m.mean);
  m.rms = std::sqrt(m2 / m0);
  return m;
}

/// Weak localised potential on one arm (x > 0) that realises a dispersive
/// phase difference Delta phi(k) = (1/k) * integral U dz.
struct ArmPhase {
  double z_center = 0.0;
  double width = 1.0;
  double strength = 0.0;
  bool both_arms = false;

  /// Strength giving phase `delta_phi` at longitudinal wavenumber k.
  static ArmPhase for_phase(double delta_phi, double k, double z_center, double width, bool both_arms = false) {
    require(k > 0.0 && width > 0.0, ErrorCode::invalid_parameter, "arm phase needs k > 0 and width > 0");
    return {z_center, width, 2.0 * delta_phi * k / width, both_arms};
  }

  double integral() const { return 0.5 * strength * width; }

  double operator()(double x, double z) const {
    if (!both_arms && x <= 0.0) return 0.0;
    const double u = (z - z_center) / width;
    if (std::abs(u) >= 0.5) return 0.0;
    const double c = std::cos(std::numbers::pi * u);
    return strength * c * c;
  }
};

inline Potential2D device_potential(const geometry::GeometryProfile& profile,
                                    std::optional<ArmPhase> arm_phase = std::nullopt) {
  return [profile, arm_phase](double x, double z) {
    double v = geometry::potential(profile, x, z);
    if (arm_phase) v += (*arm_phase)(x, z);
    return v;
  };
}

/// Largest momentum carried by a Gaussian packet, |k0| + 4 sigma_k.
inline double packet_max_momentum(double k0, double sigma_z) { return std::abs(k0) + 4.0 / (2.0 * sigma_z); }

/// psi = chi_n(x) (2 pi s^2)^(-1/4) exp(-(z-z0)^2 / (4 s^2)) exp(i k0 z), normalised on the grid.
inline WaveFunction2D init_packet(const Grid2D& grid, const transverse::TransverseSpectrum& station,
                                  std::size_t mode, double z0, double sigma_z, double k0) {
  grid.validate();
  require(station.grid == grid.x, ErrorCode::spectrum_mismatch,
          "station spectrum was computed on a different transverse grid");
  require(mode < station.size(), ErrorCode::out_of_domain,
          "mode " + std::to_string(mode) + " not available at the initial station");
  require(sigma_z > 0.0, ErrorCode::invalid_parameter, "sigma_z must be positive");
  require(z0 - 5.0 * sigma_z >= grid.z_min && z0 + 5.0 * sigma_z <= grid.z_max(), ErrorCode::insufficient_margin,
          "packet at z0=" + std::to_string(z0) + " with sigma " + std::to_string(sigma_z) +
              " does not fit inside the grid with a 5 sigma margin");
  require(grid.momentum_cutoff_z() > 4.0 * packet_max_momentum(k0, sigma_z), ErrorCode::grid_too_small,
          "momentum cutoff pi/dz = " + std::to_string(grid.momentum_cutoff_z()) +
              " does not exceed 4x the packet's maximal momentum");
  WaveFunction2D psi(grid);
  const auto& chi = station.states[mode];
  std::vector<complex> g(grid.nz);
  const double pref = std::pow(2.0 * std::numbers::pi * sigma_z * sigma_z, -0.25);
  for (std::size_t j = 0; j < grid.nz; ++j) {
    const double z = grid.z(j), u = z - z0;
    g[j] = pref * std::exp(-u * u / (4.0 * sigma_z * sigma_z)) * std::polar(1.0, k0 * z);
  }
  for (std::size_t ix = 0; ix < grid.nx(); ++ix)
    for (std::size_t j = 0; j < grid.nz; ++j) psi.at(ix, j) = chi[ix] * g[j];
  const double f = 1.0 / std::sqrt(psi.norm());
  for (auto& c : psi.data) c *= f;
  return psi;
}

struct StepperOptions {
  /// Width of the cosine absorbing mask at each z edge in cells; 0 disables it.
  std::size_t absorber_cells = 0;
  fft::Planner planner = fft::Planner::estimate;
};

class SplitOperator {
 public:
  SplitOperator(const Grid2D& grid, Potential2D potential, double dt, StepperOptions options = {})
      : grid_(grid), potential_fn_(std::move(potential)), dt_(dt), options_(options) {
    grid_.validate();
    require(std::isfinite(dt) && dt > 0.0, ErrorCode::invalid_parameter, "dt must be positive");
    require(options_.absorber_cells == 0 || options_.absorber_cells >= 8, ErrorCode::invalid_parameter,
            "absorber must span at least 8 cells");
    require(2 * options_.absorber_cells < grid_.nz, ErrorCode::invalid_parameter, "absorber wider than the grid");
    work_.assign(grid_.size(), complex{});
    plan_ = fft::Plan2D(work_, grid_.nx(), grid_.nz, options_.planner);

    const auto nx = grid_.nx(), nz = grid_.nz;
    kx_.resize(nx);
    kz_.resize(nz);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < nx; ++i) {
      const double m = i < nx / 2 ? double(i) : double(i) - double(nx);
      kx_[i] = two_pi * m / (grid_.x.x_max - grid_.x.x_min);
    }
    for (std::size_t j = 0; j < nz; ++j) {
      const double m = j < nz / 2 ? double(j) : double(j) - double(nz);
      kz_[j] = two_pi * m / grid_.z_extent;
    }
    kinetic_phase_.resize(grid_.size());
    const double inv_n = 1.0 / static_cast<double>(grid_.size());
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < nz; ++j) {
        const double t = 0.5 * (kx_[i] * kx_[i] + kz_[j] * kz_[j]);
        kinetic_phase_[i * nz + j] = std::polar(inv_n, -t * dt_);
      }
    if (options_.absorber_cells > 0) {
      mask_.assign(nz, 1.0);
      const std::size_t w = options_.absorber_cells;
      for (std::size_t j = 0; j < w; ++j) {
        const double m = std::pow(std::sin(0.5 * std::numbers::pi * double(j) / double(w)), 0.125);
        mask_[j] = m;
        mask_[nz - 1 - j] = m;
      }
    }
    rebuild_potential();
  }

  const Grid2D& grid() const { return grid_; }
  double dt() const { return dt_; }
  double absorbed() const { return absorbed_; }
  const std::vector<double>& potential_values() const { return potential_; }

  void step(WaveFunction2D& psi) {
    check_grid(psi);
    auto& d = psi.data;
    const std::size_t n = d.size();
    for (std::size_t i = 0; i < n; ++i) d[i] *= half_phase_[i];
    plan_.forward(d);
    for (std::size_t i = 0; i < n; ++i) d[i] *= kinetic_phase_[i];
    plan_.backward(d);
    for (std::size_t i = 0; i < n; ++i) d[i] *= half_phase_[i];
    if (!mask_.empty()) absorb(psi);
    psi.time += dt_;
  }

  /// Moves the z window by `cells` (positive = towards +z). Returns the norm
  /// of the discarded strip, which is added to the absorbed ledger.
  double shift_window(WaveFunction2D& psi, long cells) {
    check_grid(psi);
    if (cells == 0) return 0.0;
    const auto nz = static_cast<long>(grid_.nz);
    require(std::abs(cells) < nz, ErrorCode::invalid_parameter, "window shift larger than the grid");
    double lost = 0.0;
    for (std::size_t ix = 0; ix < grid_.nx(); ++ix) {
      complex* row = &psi.data[ix * grid_.nz];
      if (cells > 0) {
        for (long j = 0; j < cells; ++j) lost += std::norm(row[j]);
        std::move(row + cells, row + nz, row);
        std::fill(row + nz - cells, row + nz, complex{});
      } else {
        const long s = -cells;
        for (long j = nz - s; j < nz; ++j) lost += std::norm(row[j]);
        std::move_backward(row, row + nz - s, row + nz);
        std::fill(row, row + s, complex{});
      }
    }
    lost *= grid_.cell();
    grid_.z_min += static_cast<double>(cells) * grid_.dz();
    psi.grid.z_min = grid_.z_min;
    rebuild_potential();
    absorbed_ += lost;
    return lost;
  }

  double kinetic_energy(const WaveFunction2D& psi) {
    check_grid(psi);
    std::copy(psi.data.begin(), psi.data.end(), work_.begin());
    plan_.forward(work_);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < grid_.nx(); ++i)
      for (std::size_t j = 0; j < grid_.nz; ++j) {
        const double p = std::norm(work_[i * grid_.nz + j]);
        num += p * 0.5 * (kx_[i] * kx_[i] + kz_[j] * kz_[j]);
        den += p;
      }
    return num / den;
  }

  double potential_energy(const WaveFunction2D& psi) const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < psi.data.size(); ++i) {
      const double p = std::norm(psi.data[i]);
      num += p * potential_[i];
      den += p;
    }
    return num / den;
  }

  /// <H> per unit norm.
  double energy(const WaveFunction2D& psi) { return kinetic_energy(psi) + potential_energy(psi); }

  /// <k_z> per unit norm.
  double mean_momentum_z(const WaveFunction2D& psi) {
    check_grid(psi);
    std::copy(psi.data.begin(), psi.data.end(), work_.begin());
    plan_.forward(work_);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < grid_.nx(); ++i)
      for (std::size_t j = 0; j < grid_.nz; ++j) {
        const double p = std::norm(work_[i * grid_.nz + j]);
        num += p * kz_[j];
        den += p;
      }
    return num / den;
  }

 private:
  void check_grid(const WaveFunction2D& psi) const {
    require(psi.grid.nx() == grid_.nx() && psi.grid.nz == grid_.nz && psi.grid.z_min == grid_.z_min &&
                psi.grid.z_extent == grid_.z_extent && psi.grid.x == grid_.x,
            ErrorCode::invalid_parameter, "wavefunction grid does not match the propagator grid");
  }

  void rebuild_potential() {
    const auto nx = grid_.nx(), nz = grid_.nz;
    potential_.resize(grid_.size());
    half_phase_.resize(grid_.size());
    for (std::size_t i = 0; i < nx; ++i) {
      const double x = grid_.x.point(i);
      for (std::size_t j = 0; j < nz; ++j) {
        const double v = potential_fn_(x, grid_.z(j));
        require(std::isfinite(v), ErrorCode::numerical_failure, "potential is not finite on the grid");
        potential_[i * nz + j] = v;
        half_phase_[i * nz + j] = std::polar(1.0, -0.5 * v * dt_);
      }
    }
  }

  void absorb(WaveFunction2D& psi) {
    const std::size_t nz = grid_.nz, w = options_.absorber_cells;
    double lost = 0.0;
    auto apply = [&](complex& c, double m) {
      const double before = std::norm(c);
      c *= m;
      lost += before - std::norm(c);
    };
    for (std::size_t ix = 0; ix < grid_.nx(); ++ix) {
      complex* row = &psi.data[ix * nz];
      for (std::size_t j = 0; j < w; ++j) {
        apply(row[j], mask_[j]);
        apply(row[nz - 1 - j], mask_[nz - 1 - j]);
      }
    }
    absorbed_ += lost * grid_.cell();
  }

  Grid2D grid_;
  Potential2D potential_fn_;
  double dt_;
  StepperOptions options_;
  std::vector<double> kx_, kz_;
  std::vector<complex> kinetic_phase_;
  std::vector<double> potential_;
  std::vector<complex> half_phase_;
  std::vector<double> mask_;
  std::vector<complex> work_;
  fft::Plan2D plan_;
  double absorbed_ = 0.0;
};

struct PropagationConfig {
  double dt = 0.01;
  std::size_t steps = 0;
  /// Observer call period in steps; 0 calls it only after the last step.
  std::size_t snapshot_stride = 0;
  std::size_t absorber_cells = 0;
  bool track_window = false;
  /// Window recentres once the centroid strays this fraction of the extent from its middle.
  double track_threshold = 0.125;
  /// Highest energy carried by the packet; used for the phase-wrap guard.
  /// Zero means the grid's largest kinetic eigenvalue.
  double band_energy = 0.0;
  fft::Planner planner = fft::Planner::estimate;

  void validate(const Grid2D& grid) const {
    require(std::isfinite(dt) && dt > 0.0, ErrorCode::invalid_parameter, "dt must be positive");
    const double band = band_energy > 0.0 ? band_energy : grid.max_kinetic();
    require(dt * band < 1.0, ErrorCode::invalid_parameter,
            "phase-wrap guard violated: dt * E_band = " + std::to_string(dt * band) + " >= 1");
    require(absorber_cells == 0 || absorber_cells >= 8, ErrorCode::invalid_parameter,
            "absorber must span at least 8 cells");
    require(track_threshold > 0.0 && track_threshold < 0.5, ErrorCode::invalid_parameter,
            "track threshold must lie in (0, 0.5)");
  }
};

/// Default time step 0.25 dz^2.
inline double default_time_step(const Grid2D& grid) { return 0.25 * grid.dz() * grid.dz(); }

struct Trajectory {
  std::size_t steps = 0;
  std::size_t window_shifts = 0;
  double final_norm = 0.0;
  double absorbed = 0.0;
  /// |norm + absorbed - 1| relative to the initial norm.
  double ledger_error = 0.0;
};

using Observer = std::function<void(const WaveFunction2D&, SplitOperator&, std::size_t step)>;

inline Trajectory propagate(WaveFunction2D& psi, SplitOperator& stepper, const PropagationConfig& config,
                            const Observer& observer = {}) {
  config.validate(psi.grid);
  const double initial = psi.norm();
  const double absorbed0 = stepper.absorbed();
  Trajectory traj;
  constexpr std::size_t check_every = 64;
  constexpr std::size_t track_every = 16;
  for (std::size_t s = 1; s <= config.steps; ++s) {
    stepper.step(psi);
    if (config.track_window && s % track_every == 0) {
      const auto rho = psi.marginal_z();
      double m0 = 0.0, m1 = 0.0;
      for (std::size_t j = 0; j < rho.size(); ++j) {
        m0 += rho[j];
        m1 += rho[j] * double(j);
      }
      if (m0 > 0.0) {
        const double offset = m1 / m0 - 0.5 * double(psi.grid.nz);
        if (std::abs(offset) > config.track_threshold * double(psi.grid.nz)) {
          stepper.shift_window(psi, std::lround(offset));
          ++traj.window_shifts;
        }
      }
    }
    if (s % check_every == 0 || s == config.steps) {
      const double n = psi.norm();
      require(std::isfinite(n), ErrorCode::numerical_failure,
              "non-finite norm at step " + std::to_string(s) + " (t = " + std::to_string(psi.time) + ")");
    }
    if (observer && ((config.snapshot_stride > 0 && s % config.snapshot_stride == 0) || s == config.steps))
      observer(psi, stepper, s);
  }
  traj.steps = config.steps;
  traj.final_norm = psi.norm();
  traj.absorbed = stepper.absorbed() - absorbed0;
  traj.ledger_error = std::abs(traj.final_norm + traj.absorbed - initial) / initial;
  return traj;
}

/// Convenience overload owning its stepper.
inline Trajectory propagate(WaveFunction2D& psi, const Potential2D& potential, const PropagationConfig& config,
                            const Observer& observer = {}) {
  SplitOperator stepper(psi.grid, potential, config.dt, {config.absorber_cells, config.planner});
  return propagate(psi, stepper, config, observer);
}

struct ModeProjection {
  std::vector<double> z;
  double dz = 0.0;
  /// c[n][j] = integral chi_n(x) psi(x, z_j) dx.
  std::vector<std::vector<complex>> c;

  std::vector<double> density(std::size_t n) const {
    std::vector<double> d(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) d[j] = std::norm(c[n][j]);
    return d;
  }

  /// integral |c_n|^2 dz over z >= z_from.
  double population(std::size_t n, double z_from = -1e300) const {
    double s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j)
      if (z[j] >= z_from) s += std::norm(c[n][j]);
    return s * dz;
  }
};

inline ModeProjection project_modes(const WaveFunction2D& psi, const transverse::TransverseSpectrum& station,
                                    std::size_t n_max) {
  require(station.grid == psi.grid.x, ErrorCode::spectrum_mismatch,
          "station spectrum was computed on a different transverse grid");
  require(n_max < station.size(), ErrorCode::spectrum_mismatch,
          "station spectrum holds only " + std::to_string(station.size()) + " states");
  const auto& g = psi.grid;
  ModeProjection out;
  out.dz = g.dz();
  out.z.resize(g.nz);
  for (std::size_t j = 0; j < g.nz; ++j) out.z[j] = g.z(j);
  out.c.assign(n_max + 1, std::vector<complex>(g.nz));
  const double dx = g.dx();
  for (std::size_t n = 0; n <= n_max; ++n) {
    auto& cn = out.c[n];
    const auto& chi = station.states[n];
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
      const double w = chi[ix] * dx;
      if (w == 0.0) continue;
      const complex* row = &psi.data[ix * g.nz];
      for (std::size_t j = 0; j < g.nz; ++j) cn[j] += w * row[j];
    }
  }
  return out;
}

/// Multiplies the x > 0 half plane by exp(i delta_phi). The packet must be
/// split: at most `tolerance` of its norm may sit within |x| < central_halfwidth.
inline void phase_imprint(WaveFunction2D& psi, double delta_phi, double central_halfwidth = 1.0,
                          double tolerance = 1e-6) {
  const auto& g = psi.grid;
  double central = 0.0, total = 0.0;
  for (std::size_t ix = 0; ix < g.nx(); ++ix) {
    const bool inner = std::abs(g.x.point(ix)) < central_halfwidth;
    for (std::size_t j = 0; j < g.nz; ++j) {
      const double p = std::norm(psi.at(ix, j));
      total += p;
      if (inner) central += p;
    }
  }
  require(total > 0.0 && central <= tolerance * total, ErrorCode::not_split,
          "packet is not split: " + std::to_string(central / total) + " of the norm lies between the arms");
  if (delta_phi == 0.0) return;
  const complex phase = std::polar(1.0, delta_phi);
  for (std::size_t ix = 0; ix < g.nx(); ++ix)
    if (g.x.point(ix) > 0.0)
      for (std::size_t j = 0; j < g.nz; ++j) psi.at(ix, j) *= phase;
}

}  // namespace guidewave::tdse
