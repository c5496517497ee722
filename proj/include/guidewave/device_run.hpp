#pragma once

// Wave-packet runs through a guide geometry: launch a transverse mode, propagate
// until the packet has left the region of interest, project onto the output
// guide's modes and collect marginal snapshots.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "guidewave/error.hpp"
#include "guidewave/geometry.hpp"
#include "guidewave/tdse.hpp"
#include "guidewave/transverse.hpp"

namespace guidewave::tdse {

struct DeviceRun {
  geometry::GeometryProfile profile;
  Grid2D grid;
  std::size_t n_in = 0;
  double z0 = 0.0;
  double sigma_z = 10.0;
  double k0 = 10.0;
  std::optional<ArmPhase> arm_phase;
  double dt = 0.01;
  /// Total propagation time; zero picks the time for the packet centre to
  /// travel to `output_cut + exit_margin` at speed k0, plus `post_time`.
  double duration = 0.0;
  double exit_margin = 60.0;
  double post_time = 0.0;
  /// Phase-wrap band; zero derives it from the packet.
  double band_energy = 0.0;
  bool track_window = true;
  std::size_t absorber_cells = 0;
  fft::Planner planner = fft::Planner::estimate;
  /// Station whose transverse spectrum defines the output modes; NaN means
  /// the straight guide beyond the device.
  double output_station = std::nan("");
  /// Populations count only the part of the packet beyond this z; NaN means
  /// the merge end.
  double output_cut = std::nan("");
  std::size_t n_project = 5;
  std::size_t snapshot_stride = 0;
  std::size_t snapshot_modes = 2;
  bool keep_final_state = false;
};

struct Snapshot {
  double time = 0.0;
  std::vector<double> z;
  std::vector<double> total;
  /// |c_n(z)|^2 on the output spectrum for n < snapshot_modes.
  std::vector<std::vector<double>> modes;
  /// Norm still short of the output cut.
  double inside = 0.0;
};

struct DeviceResult {
  std::vector<double> populations;
  double transmitted = 0.0;
  double inside = 0.0;
  double energy_initial = 0.0;
  double energy_final = 0.0;
  double norm_initial = 0.0;
  double duration = 0.0;
  std::size_t steps = 0;
  Trajectory trajectory;
  std::vector<Snapshot> snapshots;
  std::optional<WaveFunction2D> final_state;

  double energy_drift() const { return std::abs(energy_final - energy_initial) / std::abs(energy_initial); }
  double norm_drift() const { return std::abs(trajectory.final_norm + trajectory.absorbed - norm_initial); }
};

/// Transverse energy of input mode n at ω_in and of the arm level it feeds at ω_arm.
inline double arm_momentum(const geometry::GeometryProfile& p, std::size_t n_in, double k0) {
  const double e_in = p.omega_in * (double(n_in) + 0.5);
  const double e_arm = p.omega_arm * (double(n_in / 2) + 0.5);
  const double k2 = k0 * k0 - 2.0 * (e_arm - e_in);
  require(k2 > 0.0, ErrorCode::invalid_parameter, "packet cannot reach the arms");
  return std::sqrt(k2);
}

/// Arm potential on x > 0, centred on the plateau, giving phase `delta_phi` to a
/// packet of mean input momentum k0 (calibrated at the arm-local momentum).
inline ArmPhase plateau_phase(const geometry::GeometryProfile& p, double delta_phi, double k0, std::size_t n_in,
                              double width, bool both_arms = false) {
  const double zc = 0.5 * (p.z_split_end + p.z_merge_start);
  require(width <= p.z_merge_start - p.z_split_end, ErrorCode::invalid_parameter,
          "arm phase region is wider than the plateau");
  return ArmPhase::for_phase(delta_phi, arm_momentum(p, n_in, k0), zc, width, both_arms);
}

inline double default_band_energy(const DeviceRun& r) {
  const double k = packet_max_momentum(r.k0, r.sigma_z);
  const double w = std::max(r.profile.omega_in, r.profile.omega_arm);
  return 0.5 * k * k + 2.0 * w * (double(r.n_in) + 1.0);
}

inline DeviceResult run_device(const DeviceRun& run) {
  run.profile.validate();
  const double cut = std::isnan(run.output_cut) ? run.profile.z_merge_end : run.output_cut;
  const double station = std::isnan(run.output_station) ? run.profile.device_length() + 1.0 : run.output_station;

  const auto input = transverse::solve_transverse(
      [&](double x) { return geometry::potential(run.profile, x, run.z0); }, run.grid.x, run.n_in);
  auto psi = init_packet(run.grid, input, run.n_in, run.z0, run.sigma_z, run.k0);
  const std::size_t n_proj = std::max(run.n_project, run.snapshot_modes);
  const auto output = transverse::solve_transverse(
      [&](double x) { return geometry::potential(run.profile, x, station); }, run.grid.x, n_proj);

  PropagationConfig cfg;
  cfg.dt = run.dt;
  const double duration = run.duration > 0.0 ? run.duration
                                             : (cut + run.exit_margin - run.z0) / run.k0 + run.post_time;
  cfg.steps = static_cast<std::size_t>(std::llround(duration / run.dt));
  cfg.snapshot_stride = run.snapshot_stride;
  cfg.absorber_cells = run.absorber_cells;
  cfg.track_window = run.track_window;
  cfg.band_energy = run.band_energy > 0.0 ? run.band_energy : default_band_energy(run);
  cfg.planner = run.planner;

  SplitOperator stepper(run.grid, device_potential(run.profile, run.arm_phase), run.dt,
                        {run.absorber_cells, run.planner});
  DeviceResult res;
  res.norm_initial = psi.norm();
  res.energy_initial = stepper.energy(psi);
  res.duration = static_cast<double>(cfg.steps) * run.dt;
  res.steps = cfg.steps;

  Observer observer;
  if (run.snapshot_stride > 0) {
    observer = [&](const WaveFunction2D& w, SplitOperator&, std::size_t) {
      Snapshot s;
      s.time = w.time;
      s.z.resize(w.grid.nz);
      for (std::size_t j = 0; j < w.grid.nz; ++j) s.z[j] = w.grid.z(j);
      s.total = w.marginal_z();
      const auto pr = project_modes(w, output, run.snapshot_modes - 1);
      for (std::size_t n = 0; n < run.snapshot_modes; ++n) s.modes.push_back(pr.density(n));
      s.inside = w.norm() - w.norm_beyond(cut);
      res.snapshots.push_back(std::move(s));
    };
  }
  res.trajectory = propagate(psi, stepper, cfg, observer);
  res.energy_final = stepper.energy(psi);
  res.transmitted = psi.norm_beyond(cut);
  res.inside = psi.norm() - res.transmitted;
  const auto pr = project_modes(psi, output, run.n_project);
  for (std::size_t n = 0; n <= run.n_project; ++n) res.populations.push_back(pr.population(n, cut));
  if (run.keep_final_state) res.final_state = std::move(psi);
  return res;
}

/// Least-squares slope of the centroid of mode `n` over the snapshots taken
/// once the packet has fully passed the output cut.
inline double centroid_velocity(const std::vector<Snapshot>& snapshots, std::size_t n, double max_inside = 1e-6) {
  std::vector<double> t, c;
  for (const auto& s : snapshots) {
    if (s.inside > max_inside || n >= s.modes.size()) continue;
    const auto m = moments(s.z, s.modes[n]);
    if (m.mass <= 0.0) continue;
    t.push_back(s.time);
    c.push_back(m.mean);
  }
  require(t.size() >= 3, ErrorCode::invalid_parameter, "fewer than three post-exit snapshots for the centroid fit");
  double tm = 0.0, cm = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    tm += t[i];
    cm += c[i];
  }
  tm /= double(t.size());
  cm /= double(t.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    num += (t[i] - tm) * (c[i] - cm);
    den += (t[i] - tm) * (t[i] - tm);
  }
  return num / den;
}

}  // namespace guidewave::tdse
