#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "guidewave/channel.hpp"
#include "guidewave/device_run.hpp"
#include "guidewave/fringe.hpp"
#include "guidewave/thermal.hpp"
#include "guidewave/transverse.hpp"
#include "guidewave/units.hpp"

using namespace guidewave;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

int failures = 0;

void report(int id, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("criterion %2d %s  %s  [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), sec);
  std::fflush(stdout);
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const transverse::XGrid reference_grid{-12.0, 12.0, 1024};

geometry::GeometryProfile interferometer() {
  geometry::GeometryProfile p;
  p.z_split_start = 60.0;
  p.z_split_end = 360.0;
  p.z_merge_start = 440.0;
  p.z_merge_end = 740.0;
  p.d_max = 8.0;
  return p;
}

constexpr double ifo_k0 = 10.0;
constexpr double ifo_sigma = 10.0;

tdse::DeviceResult ifo_run(double delta_phi, bool snapshots) {
  tdse::DeviceRun r;
  r.profile = interferometer();
  r.grid = {{-12.0, 12.0, 64}, -128.0, 256.0, 4096};
  r.k0 = ifo_k0;
  r.sigma_z = ifo_sigma;
  r.dt = 0.01;
  r.arm_phase = tdse::plateau_phase(r.profile, delta_phi, r.k0, 0, 60.0);
  if (snapshots) {
    r.snapshot_stride = 100;
    r.post_time = 40.0;
  }
  return tdse::run_device(r);
}

struct ThermalCase {
  units::PhysicalParams physical;
  units::NaturalUnits nat;
  thermal::SourceSpec spec;
  double delta_l = 0.0;
  double t = 0.0;
  thermal::PatternOptions options;
  fringe::Window window;
};

ThermalCase thermal_setup() {
  ThermalCase f;
  f.physical.mass = *units::isotope_mass("Li-7");
  f.physical.with_omega_in(1e5);
  f.physical.source_length = 100e-6;
  f.physical.delta_l = 2e-6;
  f.physical.detection_time = 20e-3;
  f.physical.temperature = 200e-6;
  f.nat = units::natural_units(f.physical);
  f.spec.length = f.physical.source_length / f.nat.length_unit;
  f.spec.kT = units::thermal_energy_natural(f.physical);
  f.delta_l = f.physical.delta_l / f.nat.length_unit;
  f.t = f.physical.detection_time / f.nat.time_unit;
  f.options.grid = channel::ZGrid{0.0, 4e-3 / f.nat.length_unit, 4096};
  f.window = {1.4e-3 / f.nat.length_unit, 3.4e-3 / f.nat.length_unit};
  return f;
}

}  // namespace

int main() {
  std::printf("guidewave acceptance suite\n");
  std::fflush(stdout);
  const auto suite_start = std::chrono::steady_clock::now();

  report(1, [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = transverse::solve_transverse([](double x) { return 0.5 * x * x; }, reference_grid, 10);
    double worst = 0.0;
    for (std::size_t n = 0; n <= 10; ++n) worst = std::max(worst, std::abs(s.energies[n] / (n + 0.5) - 1.0));
    const double sec = elapsed(t0);
    return Outcome{worst < 1e-4 && sec < 1.0,
                   format("max relative error %.2e for n<=10 (limit 1e-4), solve %.3f s (limit 1 s)", worst, sec)};
  });

  report(2, [] {
    const auto t0 = std::chrono::steady_clock::now();
    auto p = interferometer();
    p.d_max = 10.0;
    const double plateau = 0.5 * (p.z_split_end + p.z_merge_start);
    const auto split = transverse::solve_transverse(p, plateau, reference_grid, 7);
    double worst = 0.0;
    for (std::size_t n = 0; n <= 3; ++n) worst = std::max(worst, transverse::splitting_gap(split, n));
    const auto straight = transverse::solve_transverse(p, 0.0, reference_grid, 1);
    const double gap0 = transverse::splitting_gap(straight, 0);
    const double sec = elapsed(t0);
    return Outcome{worst < 1e-6 && std::abs(gap0 - 1.0) < 1e-4 && sec < 5.0,
                   format("d=10 max pair gap %.2e (limit 1e-6), d=0 gap %.8f (1 +- 1e-4), %.3f s", worst, gap0, sec)};
  });

  report(3, [] {
    auto p = interferometer();
    p.d_max = 10.0;
    const auto s = transverse::solve_transverse(p, 0.5 * (p.z_split_end + p.z_merge_start), reference_grid, 1);
    const auto d = transverse::symmetry_decompose(s, 0, 1e-4);
    const double worst = std::min(d.left_fraction, d.right_fraction);
    return Outcome{worst > 0.999, format("half-plane norm fractions %.7f / %.7f (limit 0.999)", d.left_fraction,
                                         d.right_fraction)};
  });

  report(4, [] {
    tdse::DeviceRun r;
    r.profile.z_split_start = 60.0;
    r.profile.z_split_end = 160.0;
    r.profile.z_merge_start = 200.0;
    r.profile.z_merge_end = 300.0;
    r.profile.d_max = 8.0;
    r.grid = {{-12.0, 12.0, 512}, -128.0, 256.0, 4096};
    r.k0 = 5.0;
    r.sigma_z = 10.0;
    r.dt = 0.04;
    r.planner = fft::Planner::measure;
    r.profile.shape = geometry::WellShape::quartic;
    const auto q = tdse::run_device(r);
    r.profile.shape = geometry::WellShape::piecewise_quadratic;
    const auto t0 = std::chrono::steady_clock::now();
    const auto c = tdse::run_device(r);
    std::printf("  info: piecewise-quadratic well at the same grid: norm drift %.2e, energy drift %.2e [%.1f s]\n",
                c.norm_drift(), c.energy_drift(), elapsed(t0));
    return Outcome{q.norm_drift() < 1e-9 && q.energy_drift() < 1e-6,
                   format("quartic well 512x4096, %zu steps: norm drift %.2e (limit 1e-9), energy drift %.2e "
                          "(limit 1e-6)",
                          q.steps, q.norm_drift(), q.energy_drift())};
  });

  report(5, [] {
    const tdse::Grid2D g{{-8.0, 8.0, 64}, -32.0, 64.0, 1024};
    const auto st = transverse::solve_transverse([](double x) { return 0.5 * x * x; }, g.x, 0);
    auto psi = tdse::init_packet(g, st, 0, 0.0, 1.0, 0.0);
    tdse::PropagationConfig cfg;
    cfg.dt = 0.01;
    cfg.band_energy = 40.0;
    cfg.steps = 200;
    tdse::propagate(psi, [](double x, double) { return 0.5 * x * x; }, cfg);
    std::vector<double> z(g.nz);
    for (std::size_t j = 0; j < g.nz; ++j) z[j] = g.z(j);
    const auto m = tdse::moments(z, psi.marginal_z());
    const double analytic = std::sqrt(1.0 + std::pow(2.0 / 2.0, 2));
    const double err = std::abs(m.rms / analytic - 1.0);
    return Outcome{err < 1e-3, format("sigma(2)=%.6f vs analytic %.6f, relative error %.2e (limit 1e-3)", m.rms,
                                      analytic, err)};
  });

  report(6, [] {
    bool ok = true;
    std::string detail;
    double ratio = 0.0;
    for (std::size_t n = 0; n <= 3; ++n) {
      tdse::DeviceRun r;
      r.profile.z_split_start = 60.0;
      r.profile.z_split_end = 360.0;
      r.profile.z_merge_start = 1e5;
      r.profile.z_merge_end = 1e5 + 300.0;
      r.profile.d_max = 8.0;
      r.grid = {{-12.0, 12.0, 64}, -100.0, 200.0, 1024};
      r.n_in = n;
      r.k0 = 3.0;
      r.sigma_z = 10.0;
      r.dt = 0.04;
      r.output_station = 400.0;
      r.output_cut = 360.0;
      ratio = geometry::adiabaticity_ratio(r.profile, 0.5 * r.k0 * r.k0);
      const auto res = tdse::run_device(r);
      ok = ok && res.populations[n] > 0.98;
      detail += format(" P%zu=%.5f", n, res.populations[n]);
    }
    ok = ok && ratio < 0.01;
    return Outcome{ok, format("single Y, adiabaticity ratio %.4f;", ratio) + detail + " (limit 0.98)"};
  });

  std::map<int, tdse::DeviceResult> ifo_runs;
  const std::vector<std::pair<int, double>> phases = {{1, 0.5 * pi}, {2, pi}, {3, 1.5 * pi}, {4, 2.0 * pi}};

  report(7, [&] {
    for (const auto& [q, phi] : phases) ifo_runs[q] = ifo_run(phi, q == 3);
    const auto& a = ifo_runs[2].populations;
    const auto& b = ifo_runs[4].populations;
    const auto& c = ifo_runs[3].populations;
    const bool ok = a[1] > 0.95 && b[0] > 0.95 && std::abs(c[0] - 0.5) < 0.05 && std::abs(c[1] - 0.5) < 0.05;
    return Outcome{ok, format("pi: P1=%.4f; 2pi: P0=%.4f; 3pi/2: P0=%.4f P1=%.4f", a[1], b[0], c[0], c[1])};
  });

  report(8, [] {
    tdse::DeviceRun r;
    r.profile.z_split_start = 40.0;
    r.profile.z_split_end = 140.0;
    r.profile.z_merge_start = 1e5;
    r.profile.z_merge_end = 1e5 + 300.0;
    r.profile.d_max = 8.0;
    r.grid = {{-12.0, 12.0, 64}, -200.0, 400.0, 1024};
    r.k0 = std::sqrt(0.5);
    r.sigma_z = 10.0;
    r.dt = 0.05;
    r.track_window = false;
    r.output_station = 200.0;
    r.output_cut = 140.0;
    r.duration = 300.0;
    r.n_project = 1;
    const auto res = tdse::run_device(r);

    bool exact = true;
    std::size_t probes = 0;
    const auto s = channel::TransferSettings::potential(0.77);
    for (double k = 0.02; k < 3.0; k += 0.01) {
      if (std::abs(k * k - 2.0) < 1e-9) continue;
      channel::LongitudinalPacket p;
      p.k = {k};
      p.amplitude = {1.0};
      p.dk = 1.0;
      const auto out = channel::apply_interferometer(p, s);
      const bool blocked = out.reflected.exit > 0.0;
      exact = exact && blocked == (k >= 1.0 && k * k < 2.0);
      exact = exact && std::abs(out.transmitted() + out.reflected.total() - 1.0) < 1e-14;
      ++probes;
    }
    return Outcome{res.transmitted < 0.01 && exact,
                   format("E_kin=0.25: transmitted %.2e (limit 0.01); exit block matches k^2<2 on %zu/%zu probes",
                          res.transmitted, exact ? probes : std::size_t(0), probes)};
  });

  report(9, [&] {
    if (!ifo_runs.count(3)) return Outcome{false, "3pi/2 run unavailable"};
    const auto& snaps = ifo_runs[3].snapshots;
    const double dv = tdse::centroid_velocity(snaps, 0) - tdse::centroid_velocity(snaps, 1);
    const double exact = ifo_k0 - std::sqrt(ifo_k0 * ifo_k0 - 2.0);
    const double approx = 1.0 / ifo_k0;
    const double e1 = std::abs(dv / exact - 1.0), e2 = std::abs(dv / approx - 1.0);
    return Outcome{e1 < 0.10 && e2 < 0.15,
                   format("dv=%.5f vs %.5f (%.1f%%, limit 10%%) and vs 1/k=%.5f (%.1f%%, limit 15%%)", dv, exact,
                          100 * e1, approx, 100 * e2)};
  });

  report(10, [&] {
    if (ifo_runs.size() != 4) return Outcome{false, "TDSE runs unavailable"};
    const auto packet = channel::LongitudinalPacket::gaussian(ifo_k0, 0.5 / ifo_sigma, 0.0, 4096);
    double worst = 0.0;
    std::string detail;
    const char* names[] = {"", "pi/2", "pi", "3pi/2", "2pi"};
    for (const auto& [q, phi] : phases) {
      const auto out = channel::apply_interferometer(packet, channel::TransferSettings::potential(phi * ifo_k0));
      const double d0 = std::abs(ifo_runs[q].populations[0] - out.channels[0].norm());
      const double d1 = std::abs(ifo_runs[q].populations[1] - out.channels[1].norm());
      worst = std::max({worst, d0, d1});
      detail += format(" %s: %.4f/%.4f vs %.4f/%.4f;", names[q], ifo_runs[q].populations[0], ifo_runs[q].populations[1],
                       out.channels[0].norm(), out.channels[1].norm());
    }
    return Outcome{worst < 0.03, format("max |TDSE - model| %.4f (limit 0.03);", worst) + detail};
  });

  fringe::FringeReport thermal_report;
  double thermal_dz = 0.0;
  report(11, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    auto f = thermal_setup();
    const auto ens = thermal::build_ensemble(f.spec);
    const auto pat = thermal::interference_pattern(ens, channel::TransferSettings::path_length(f.delta_l), f.t,
                                                   f.options);
    thermal_report = fringe::fringe_analysis(pat.densities.z, pat.densities.total, f.window);
    thermal_dz = f.options.grid.dz();
    const double sec = elapsed(t0);
    const double predicted = 2.0 * pi * units::constants::hbar * f.physical.detection_time /
                             (f.physical.mass * f.physical.delta_l);
    if (!thermal_report.has_fringes()) return Outcome{false, "no fringes detected"};
    const double period = *thermal_report.period * f.nat.length_unit;
    const double dev = std::abs(period / predicted - 1.0);
    return Outcome{dev < 0.10 && sec < 60.0,
                   format("period %.4e m vs 2 pi hbar t/(m dl) = %.4e m (%.2f%%, limit 10%%); %zu x %zu levels; "
                          "%.1f s (limit 60 s)",
                          period, predicted, 100 * dev, ens.transverse.size(), ens.longitudinal.size(), sec)};
  });

  report(12, [&] {
    auto f = thermal_setup();
    std::vector<fringe::FringeReport> reps;
    for (std::size_t n_max : {1u, 9u}) {
      auto spec = f.spec;
      spec.fixed_transverse = true;
      spec.n_trans_max = n_max;
      const auto ens = thermal::build_ensemble(spec);
      const auto pat = thermal::interference_pattern(ens, channel::TransferSettings::path_length(f.delta_l), f.t,
                                                     f.options);
      reps.push_back(fringe::fringe_analysis(pat.densities.z, pat.densities.total, f.window));
    }
    if (!reps[0].has_fringes() || !reps[1].has_fringes()) return Outcome{false, "no fringes detected"};
    const double dz = f.options.grid.dz();
    const double dp = std::abs(*reps[1].period - *reps[0].period);
    const double dc = std::abs(reps[1].contrast - reps[0].contrast);
    const double absolute = thermal_report.has_fringes() ? thermal_report.contrast : 0.0;
    return Outcome{dp <= dz && dc <= 0.02 && absolute > 0.5,
                   format("1 pair vs 5 pairs: period change %.3f cells (limit 1), contrast %.4f vs %.4f (limit "
                          "0.02); full-ensemble contrast %.3f (limit 0.5)",
                          dp / dz, reps[0].contrast, reps[1].contrast, absolute)};
  });

  report(13, [] {
    auto f = thermal_setup();
    auto ens = thermal::build_ensemble(f.spec);
    const auto s = channel::TransferSettings::path_length(f.delta_l);
    const auto a = thermal::interference_pattern(ens, s, f.t, f.options);
    ens.scale_weights(2.0);
    const auto b = thermal::interference_pattern(ens, s, f.t, f.options);
    std::size_t mismatches = 0;
    for (std::size_t j = 0; j < a.densities.total.size(); ++j)
      if (b.densities.total[j] != 2.0 * a.densities.total[j]) ++mismatches;
    return Outcome{mismatches == 0, format("%zu of %zu samples differ from exactly twice the original", mismatches,
                                           a.densities.total.size())};
  });

  std::printf("summary: %d of 13 criteria failed, total %.1f s\n", failures, elapsed(suite_start));
  return failures == 0 ? 0 : 1;
}
