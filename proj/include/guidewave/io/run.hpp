#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidewave/channel.hpp"
#include "guidewave/device_run.hpp"
#include "guidewave/fringe.hpp"
#include "guidewave/geometry.hpp"
#include "guidewave/io/config.hpp"
#include "guidewave/io/csv.hpp"
#include "guidewave/io/manifest.hpp"
#include "guidewave/parallel.hpp"
#include "guidewave/thermal.hpp"
#include "guidewave/transverse.hpp"
#include "guidewave/units.hpp"

namespace guidewave::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct RunOptions {
  fs::path out_dir = "out";
  unsigned threads = 1;
  bool dump_fields = false;
};

struct RunResult {
  json summary = json::object();
  std::vector<std::string> artifacts;
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Writer {
 public:
  Writer(const RunOptions& o, RunResult& r, const RunConfig& c) : opts_(o), res_(r), cfg_(c) {}

  void csv(const std::string& name, CsvTable t) {
    t.metadata.insert(t.metadata.begin(), {"command", cfg_.command});
    t.metadata.insert(t.metadata.begin() + 1, {"version", std::string(tool_version)});
    write_text(opts_.out_dir / name, t.str());
    res_.artifacts.push_back(name);
  }

  void json_file(const std::string& name, const json& j) {
    write_text(opts_.out_dir / name, j.dump(2) + "\n");
    res_.artifacts.push_back(name);
  }

 private:
  const RunOptions& opts_;
  RunResult& res_;
  const RunConfig& cfg_;
};

inline double nat_length(const RunConfig& cfg, double si) {
  return cfg.natural.to_natural(si, units::Dimension::length);
}

inline geometry::GeometryProfile profile_from(const RunConfig& cfg) {
  geometry::GeometryProfile p;
  p.z_split_start = cfg.real("geometry.z_split_start");
  p.z_split_end = cfg.real("geometry.z_split_end");
  p.z_merge_start = cfg.real("geometry.z_merge_start");
  p.z_merge_end = cfg.real("geometry.z_merge_end");
  p.d_max = cfg.real("geometry.d_max");
  p.ramp = geometry::ramp_from_string(cfg.text("geometry.ramp"));
  p.shape = geometry::shape_from_string(cfg.text("geometry.shape"));
  p.omega_in = 1.0;
  p.omega_arm = cfg.real("geometry.omega_arm");
  p.length = cfg.given("physical.device_length") ? nat_length(cfg, cfg.physical.device_length)
                                                 : p.z_merge_end + p.z_split_start;
  p.validate();
  return p;
}

inline transverse::XGrid xgrid_from(const RunConfig& cfg, std::size_t n) {
  const double h = cfg.real("numerics.x_half_width");
  return {-h, h, n};
}

inline json array_of(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

inline void dump_potential(Writer& w, const geometry::GeometryProfile& p, const transverse::XGrid& xg,
                           std::size_t nz) {
  CsvTable t;
  std::vector<double> xs, zs, vs;
  const double len = p.device_length();
  for (std::size_t j = 0; j < nz; ++j) {
    const double z = len * double(j) / double(nz - 1);
    for (std::size_t i = 0; i < xg.n_points; ++i) {
      xs.push_back(xg.point(i));
      zs.push_back(z);
      vs.push_back(geometry::potential(p, xg.point(i), z));
    }
  }
  t.meta("field", "V(x,z) in hbar omega");
  t.column("x", std::move(xs)).column("z", std::move(zs)).column("V", std::move(vs));
  w.csv("potential.csv", std::move(t));
}

inline void run_eigen(const RunConfig& cfg, const RunOptions& opts, Writer& w, RunResult& res) {
  const auto p = profile_from(cfg);
  const auto grid = xgrid_from(cfg, std::size_t(cfg.integer("numerics.eigen_nx")));
  const auto n_max = std::size_t(cfg.integer("numerics.n_max"));
  const auto samples = std::size_t(cfg.integer("numerics.z_samples"));
  require(samples >= 2, ErrorCode::config, "numerics.z_samples must be at least 2");
  const auto stencil =
      cfg.text("numerics.stencil") == "three_point" ? transverse::Stencil::three_point : transverse::Stencil::five_point;
  std::vector<double> zs(samples);
  for (std::size_t i = 0; i < samples; ++i) zs[i] = p.device_length() * double(i) / double(samples - 1);
  std::vector<transverse::CorrelationRow> rows(samples);
  parallel::for_each_index(samples, opts.threads, [&](std::size_t i) {
    auto s = transverse::solve_transverse(p, zs[i], grid, n_max, stencil);
    rows[i] = {zs[i], std::move(s.energies)};
  });
  CsvTable t;
  t.meta("units", "z in a0, energies in hbar omega");
  t.column("z", zs);
  for (std::size_t n = 0; n <= n_max; ++n) {
    std::vector<double> e(samples);
    for (std::size_t i = 0; i < samples; ++i) e[i] = rows[i].energies[n];
    t.column("E_" + std::to_string(n), std::move(e));
  }
  w.csv("correlation.csv", std::move(t));

  const double z_in = 0.0, z_mid = 0.5 * (p.z_split_end + p.z_merge_start);
  const auto s_in = transverse::solve_transverse(p, z_in, grid, n_max, stencil);
  const auto s_mid = transverse::solve_transverse(p, z_mid, grid, n_max, stencil);
  for (const auto* s : {&s_in, &s_mid}) {
    CsvTable e;
    e.meta("station", fmt17(s->z));
    std::vector<double> xs(grid.n_points);
    for (std::size_t i = 0; i < grid.n_points; ++i) xs[i] = grid.point(i);
    e.column("x", std::move(xs));
    for (std::size_t n = 0; n <= n_max; ++n) e.column("chi_" + std::to_string(n), s->states[n]);
    w.csv(s == &s_in ? "eigenfunctions_input.csv" : "eigenfunctions_plateau.csv", std::move(e));
  }

  json gaps_in = json::array(), gaps_mid = json::array(), decomposition = json::array();
  for (std::size_t q = 0; 2 * q + 1 <= n_max; ++q) {
    gaps_in.push_back(transverse::splitting_gap(s_in, q));
    gaps_mid.push_back(transverse::splitting_gap(s_mid, q));
    try {
      const auto d = transverse::symmetry_decompose(s_mid, q);
      decomposition.push_back({{"pair", q}, {"left_fraction", d.left_fraction}, {"right_fraction", d.right_fraction}});
    } catch (const Error&) {
      decomposition.push_back({{"pair", q}, {"split", false}});
    }
  }
  res.summary["input_energies"] = array_of(s_in.energies);
  res.summary["plateau_energies"] = array_of(s_mid.energies);
  res.summary["input_pair_gaps"] = gaps_in;
  res.summary["plateau_pair_gaps"] = gaps_mid;
  res.summary["plateau_decomposition"] = decomposition;
  if (opts.dump_fields) dump_potential(w, p, grid, samples);
}

inline void run_check_adiabatic(const RunConfig& cfg, const RunOptions& opts, Writer& w, RunResult& res) {
  const auto p = profile_from(cfg);
  const double e_kin = cfg.real("geometry.e_kin");
  const double ratio = p.d_max == 0.0 ? 0.0 : geometry::adiabaticity_ratio(p, e_kin);
  const auto samples = std::max<std::size_t>(2, std::size_t(cfg.integer("numerics.z_samples")));
  CsvTable t;
  t.meta("e_kin", fmt17(e_kin));
  std::vector<double> zs(samples), d(samples), om(samples), slope(samples), local(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const double z = p.device_length() * double(i) / double(samples - 1);
    zs[i] = z;
    d[i] = geometry::separation(p, z);
    om[i] = geometry::well_frequency(p, z);
    slope[i] = p.d_max * p.split_fraction_slope(z);
    local[i] = e_kin * slope[i] * slope[i] / p.omega_in;
  }
  t.column("z", zs).column("d", d).column("omega_w", om).column("d_slope", slope).column("local_ratio", local);
  w.csv("adiabatic_profile.csv", std::move(t));
  res.summary["e_kin"] = e_kin;
  res.summary["adiabaticity_ratio"] = ratio;
  res.summary["adiabatic"] = ratio < 0.01;
  if (opts.dump_fields) dump_potential(w, p, xgrid_from(cfg, std::size_t(cfg.integer("numerics.nx"))), samples);
}

inline tdse::DeviceRun device_run_from(const RunConfig& cfg, const geometry::GeometryProfile& p) {
  tdse::DeviceRun r;
  r.profile = p;
  const double z0 = cfg.real("packet.z0");
  const double window = cfg.real("numerics.z_window");
  r.grid = {xgrid_from(cfg, std::size_t(cfg.integer("numerics.nx"))), z0 - 0.5 * window, window,
            std::size_t(cfg.integer("numerics.nz"))};
  r.n_in = std::size_t(cfg.integer("packet.n_in"));
  r.z0 = z0;
  r.sigma_z = cfg.real("packet.sigma_z");
  r.k0 = cfg.real("packet.k0");
  r.dt = cfg.real("numerics.dt");
  r.duration = cfg.real("numerics.duration");
  r.post_time = cfg.real("numerics.post_time");
  r.exit_margin = cfg.real("numerics.exit_margin");
  r.absorber_cells = std::size_t(cfg.integer("numerics.absorber_cells"));
  r.track_window = cfg.boolean("numerics.track_window");
  r.planner = fft::planner_from_string(cfg.text("numerics.planner"));
  r.snapshot_stride = std::size_t(cfg.integer("numerics.snapshot_stride"));
  r.n_project = std::size_t(cfg.integer("numerics.n_project"));
  r.snapshot_modes = 2;
  return r;
}

inline void write_device(const RunConfig& cfg, const RunOptions& opts, Writer& w, RunResult& res,
                         const tdse::DeviceRun& run) {
  auto r = run;
  r.keep_final_state = opts.dump_fields;
  const auto out = tdse::run_device(r);
  CsvTable pops;
  std::vector<double> idx;
  for (std::size_t n = 0; n < out.populations.size(); ++n) idx.push_back(double(n));
  pops.column("n", std::move(idx)).column("population", out.populations);
  w.csv("populations.csv", std::move(pops));
  for (std::size_t s = 0; s < out.snapshots.size(); ++s) {
    const auto& snap = out.snapshots[s];
    CsvTable t;
    t.meta("time", fmt17(snap.time));
    t.column("z", snap.z).column("c0_sq", snap.modes[0]).column("c1_sq", snap.modes[1]).column("total", snap.total);
    char name[64];
    std::snprintf(name, sizeof name, "snapshot_%05zu.csv", s);
    w.csv(name, std::move(t));
  }
  if (out.final_state) {
    const auto& psi = *out.final_state;
    CsvTable t;
    std::vector<double> xs, zs, dens;
    for (std::size_t i = 0; i < psi.grid.nx(); ++i)
      for (std::size_t j = 0; j < psi.grid.nz; ++j) {
        xs.push_back(psi.grid.x.point(i));
        zs.push_back(psi.grid.z(j));
        dens.push_back(std::norm(psi.at(i, j)));
      }
    t.meta("time", fmt17(psi.time));
    t.column("x", std::move(xs)).column("z", std::move(zs)).column("density", std::move(dens));
    w.csv("final_density.csv", std::move(t));
  }
  res.summary["populations"] = array_of(out.populations);
  res.summary["transmitted"] = out.transmitted;
  res.summary["inside"] = out.inside;
  res.summary["norm_drift"] = out.norm_drift();
  res.summary["energy_drift"] = out.energy_drift();
  res.summary["absorbed"] = out.trajectory.absorbed;
  res.summary["window_shifts"] = out.trajectory.window_shifts;
  res.summary["duration"] = out.duration;
  res.summary["steps"] = out.steps;
  res.summary["adiabaticity_ratio"] =
      r.profile.d_max == 0.0 ? 0.0 : geometry::adiabaticity_ratio(r.profile, 0.5 * r.k0 * r.k0);
  if (out.snapshots.size() >= 3) {
    try {
      const double v0 = tdse::centroid_velocity(out.snapshots, 0);
      const double v1 = tdse::centroid_velocity(out.snapshots, 1);
      res.summary["centroid_velocity"] = json::array({v0, v1});
      res.summary["velocity_splitting"] = v0 - v1;
    } catch (const Error&) {
    }
  }
  (void)cfg;
}

inline void run_split(const RunConfig& cfg, const RunOptions& opts, Writer& w, RunResult& res) {
  auto p = profile_from(cfg);
  // Single splitter: the recombiner is moved out of reach.
  const double far = 1e6;
  p.z_merge_start = far;
  p.z_merge_end = far + (p.z_split_end - p.z_split_start);
  p.length = p.z_merge_end;
  auto r = device_run_from(cfg, p);
  r.output_station = p.z_split_end + 40.0;
  r.output_cut = p.z_split_end;
  write_device(cfg, opts, w, res, r);
  res.summary["retention"] = res.summary["populations"][r.n_in];
}

inline void run_interfere(const RunConfig& cfg, const RunOptions& opts, Writer& w, RunResult& res) {
  const auto p = profile_from(cfg);
  auto r = device_run_from(cfg, p);
  const double dphi = cfg.real("phase.delta_phi");
  if (dphi != 0.0)
    r.arm_phase = tdse::plateau_phase(p, dphi, r.k0, r.n_in, cfg.real("phase.width"), cfg.boolean("phase.both_arms"));
  write_device(cfg, opts, w, res, r);
  res.summary["delta_phi"] = dphi;
}

inline channel::TransferSettings settings_from(const RunConfig& cfg, double k_mean, std::size_t n_in) {
  const auto kind = channel::phase_kind_from_string(cfg.text("phase.kind"));
  const double dphi = cfg.real("phase.delta_phi");
  if (kind == channel::PhaseKind::path_length) {
    const double dl = std::isnan(cfg.real("phase.delta_l")) ? dphi / k_mean : cfg.real("phase.delta_l");
    return channel::TransferSettings::path_length(dl, n_in);
  }
  return channel::TransferSettings::potential(dphi * k_mean, n_in);
}

inline void run_channels(const RunConfig& cfg, const RunOptions& opts, Writer& w, RunResult& res) {
  const double k0 = cfg.real("packet.k0");
  const double sigma_z = cfg.real("packet.sigma_z");
  const double z0 = cfg.real("packet.z0");
  const auto n_in = std::size_t(cfg.integer("packet.n_in"));
  const auto packet = channel::LongitudinalPacket::gaussian(k0, 0.5 / sigma_z, z0,
                                                            std::size_t(cfg.integer("numerics.k_points")));
  const auto settings = settings_from(cfg, k0, n_in);
  const auto out = channel::apply_interferometer(packet, settings);
  double t = cfg.real("numerics.time");
  if (t <= 0.0) t = 1000.0 / k0;
  const double sk = packet.spread();
  const double width = std::sqrt(sigma_z * sigma_z + sk * sk * t * t);
  const double zc = z0 + k0 * t;
  const channel::ZGrid grid{zc - 8.0 * width - 2.0 * t / k0, zc + 8.0 * width,
                            std::size_t(cfg.integer("numerics.z_points"))};
  const auto d = channel::evolve_channels(out, t, grid);
  CsvTable tab;
  tab.meta("time", fmt17(t));
  tab.column("z", d.z).column("density_ch0", d.channel[0]).column("density_ch1", d.channel[1]).column("total", d.total);
  w.csv("channel_densities.csv", std::move(tab));

  const double c0 = channel::centroid(d.z, d.channel[0]), c1 = channel::centroid(d.z, d.channel[1]);
  res.summary["channel_norms"] = json::array({out.channels[0].norm(), out.channels[1].norm()});
  res.summary["channel_indices"] = json::array({out.channels[0].index, out.channels[1].index});
  res.summary["reflected_entrance"] = out.reflected.entrance;
  res.summary["reflected_exit"] = out.reflected.exit;
  res.summary["time"] = t;
  if (out.channels[0].norm() > 0.0 && out.channels[1].norm() > 0.0) {
    res.summary["centroid_separation"] = c0 - c1;
    res.summary["velocity_splitting_exact"] = k0 - std::sqrt(k0 * k0 - 2.0);
    res.summary["velocity_splitting_approx"] = 1.0 / k0;
  }
  const double t_max = cfg.real("numerics.t_max");
  if (t_max > 0.0) {
    const auto scan = channel::rephase_time(out, 0.0, t_max, std::size_t(cfg.integer("numerics.t_samples")), z0, 2.0,
                                            2048, opts.threads);
    CsvTable c;
    c.column("t", scan.times).column("contrast", scan.contrast);
    w.csv("rephase_curve.csv", std::move(c));
    res.summary["rephase_best_time"] = scan.best_time;
    res.summary["rephase_best_contrast"] = scan.best_contrast;
  }
}

inline json fringe_json(const fringe::FringeReport& r, double to_si) {
  json j;
  j["method"] = std::string(fringe::to_string(r.method));
  j["period_m"] = r.period ? json(*r.period * to_si) : json(nullptr);
  j["period_spectral_m"] = r.period_spectral ? json(*r.period_spectral * to_si) : json(nullptr);
  j["period_fit_m"] = r.period_fit ? json(*r.period_fit * to_si) : json(nullptr);
  j["contrast"] = r.contrast;
  j["significance"] = r.significance;
  j["window_m"] = json::array({r.window.z_min * to_si, r.window.z_max * to_si});
  return j;
}

inline void run_thermal(const RunConfig& cfg, const RunOptions& opts, Writer& w, RunResult& res) {
  const auto& ph = cfg.physical;
  const double a0 = cfg.natural.length_unit;
  thermal::SourceSpec spec;
  spec.length = ph.source_length / a0;
  spec.kT = units::thermal_energy_natural(ph);
  spec.omega = 1.0;
  spec.n_long_max = std::size_t(cfg.integer("source.n_long_max"));
  spec.n_trans_max = std::size_t(cfg.integer("source.n_trans_max"));
  spec.fixed_transverse = cfg.boolean("source.fixed_transverse");
  spec.weight_epsilon = cfg.real("source.weight_epsilon");
  spec.k_points = std::size_t(cfg.integer("source.k_points"));
  const auto ens = thermal::build_ensemble(spec);
  const double dl = ph.delta_l / a0;
  const double t = cfg.natural.to_natural(ph.detection_time, units::Dimension::time);
  const auto settings = channel::TransferSettings::path_length(dl, 0, spec.omega);
  thermal::PatternOptions po;
  po.grid = channel::ZGrid{0.0, cfg.real("source.z_max") / a0, std::size_t(cfg.integer("source.z_points"))};
  po.threads = opts.threads;
  const auto pat = thermal::interference_pattern(ens, settings, t, po);

  CsvTable tab;
  tab.meta("detection_time_s", fmt17(ph.detection_time));
  tab.meta("length_unit_m", fmt17(a0));
  std::vector<double> z_si(pat.densities.z.size());
  for (std::size_t j = 0; j < z_si.size(); ++j) z_si[j] = pat.densities.z[j] * a0;
  tab.column("z_SI", std::move(z_si))
      .column("I_total", pat.densities.total)
      .column("I_ch_even", pat.densities.channel[0])
      .column("I_ch_odd", pat.densities.channel[1]);
  w.csv("thermal_pattern.csv", std::move(tab));

  const fringe::Window win{cfg.real("source.window_min") / a0, cfg.real("source.window_max") / a0};
  const auto rep = fringe::fringe_analysis(pat.densities.z, pat.densities.total, win);
  res.summary["fringe"] = fringe_json(rep, a0);
  res.summary["period_m"] = rep.period ? json(*rep.period * a0) : json(nullptr);
  res.summary["predicted_period_m"] =
      2.0 * std::numbers::pi * units::constants::hbar * ph.detection_time / (ph.mass * ph.delta_l);
  res.summary["contrast"] = rep.contrast;
  res.summary["kT_hbar_omega"] = spec.kT;
  res.summary["transverse_levels"] = ens.transverse.size();
  res.summary["longitudinal_levels"] = ens.longitudinal.size();
  res.summary["transverse_tail"] = ens.transverse_tail;
  res.summary["longitudinal_tail"] = ens.longitudinal_tail;
  res.summary["reflected"] = pat.reflected;
}

}  // namespace detail

/// Runs one job and writes its artifacts under opts.out_dir (the manifest is
/// written by run_job).
inline RunResult run(const RunConfig& cfg, const RunOptions& opts) {
  fs::create_directories(opts.out_dir);
  RunResult res;
  detail::Writer w(opts, res, cfg);
  if (cfg.command == "eigen") detail::run_eigen(cfg, opts, w, res);
  else if (cfg.command == "check-adiabatic") detail::run_check_adiabatic(cfg, opts, w, res);
  else if (cfg.command == "split") detail::run_split(cfg, opts, w, res);
  else if (cfg.command == "interfere") detail::run_interfere(cfg, opts, w, res);
  else if (cfg.command == "channels") detail::run_channels(cfg, opts, w, res);
  else if (cfg.command == "thermal") detail::run_thermal(cfg, opts, w, res);
  else throw Error(ErrorCode::config, "unknown command '" + cfg.command + "'");
  return res;
}

/// Exit status for a library error category.
inline int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::config: return 2;
    case ErrorCode::io: return 3;
    default: return 4;
  }
}

/// Parses `text` (INI config or JSON manifest), runs it and writes
/// manifest.json, or error.json plus a nonzero status on failure.
inline int run_job(const std::string& text, const std::string& command, const RunOptions& opts,
                   const std::string& origin = "config") {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.command = command;
  m.threads = opts.threads;
  m.started_utc = utc_timestamp();
  m.input_sha256 = sha256_hex(text);
  try {
    std::string config_text = text;
    std::string cmd = command;
    if (is_manifest_text(text)) {
      json j;
      try {
        j = json::parse(text);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::config, origin + ": malformed JSON manifest: " + e.what());
      }
      const auto prev = RunManifest::from_json(j);
      config_text = prev.resolved_config;
      require(cmd.empty() || cmd == prev.command, ErrorCode::config,
              "manifest is for command '" + prev.command + "', not '" + cmd + "'");
      cmd = prev.command;
    }
    const auto cfg = parse_config(config_text, cmd, origin);
    m.command = cfg.command;
    m.resolved_config = cfg.resolved_text();
    m.resolved_sha256 = sha256_hex(m.resolved_config);
    const auto res = run(cfg, opts);
    m.summary = res.summary;
    for (const auto& a : res.artifacts) m.artifacts.push_back(a);
    m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(opts.out_dir / "manifest.json", m.to_json().dump(2) + "\n");
    return 0;
  } catch (const Error& e) {
    json err;
    err["status"] = "error";
    err["code"] = std::string(to_string(e.code()));
    err["message"] = e.what();
    err["command"] = m.command;
    err["input_sha256"] = m.input_sha256;
    try {
      write_text(opts.out_dir / "error.json", err.dump(2) + "\n");
    } catch (const Error&) {
    }
    std::fprintf(stderr, "guidewave: error [%s]: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    json err;
    err["status"] = "error";
    err["code"] = "internal";
    err["message"] = e.what();
    err["command"] = m.command;
    try {
      write_text(opts.out_dir / "error.json", err.dump(2) + "\n");
    } catch (const Error&) {
    }
    std::fprintf(stderr, "guidewave: error: %s\n", e.what());
    return 5;
  }
}

}  // namespace guidewave::io
