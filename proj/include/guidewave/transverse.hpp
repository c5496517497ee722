#pragma once

// Stationary transverse problem -1/2 d^2/dx^2 + V(x) at fixed z, discretised
// with a banded finite-difference stencil on a cell-centred grid (Dirichlet walls).
// Mirror-symmetric grids are solved sector by sector (even / odd), which
// keeps parity exact even for nearly degenerate pairs.

#include <lapacke.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "guidewave/error.hpp"
#include "guidewave/geometry.hpp"
#include "guidewave/parallel.hpp"

namespace guidewave::transverse {

struct XGrid {
  double x_min = -12.0;
  double x_max = 12.0;
  std::size_t n_points = 1024;

  double spacing() const { return (x_max - x_min) / static_cast<double>(n_points); }
  double point(std::size_t i) const { return x_min + (static_cast<double>(i) + 0.5) * spacing(); }
  bool symmetric() const { return n_points % 2 == 0 && std::abs(x_min + x_max) <= 1e-12 * (x_max - x_min); }

  std::vector<double> points() const {
    std::vector<double> xs(n_points);
    for (std::size_t i = 0; i < n_points; ++i) xs[i] = point(i);
    return xs;
  }

  void validate() const {
    require(n_points >= 64, ErrorCode::invalid_parameter, "transverse grid needs at least 64 points");
    require(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min, ErrorCode::invalid_parameter,
            "transverse grid extent must be a finite, non-empty interval");
  }

  bool operator==(const XGrid&) const = default;
};

/// Finite-difference order of the kinetic term: second-order three-point or
/// fourth-order five-point.
enum class Stencil { three_point, five_point };

struct TransverseSpectrum {
  double z = 0.0;
  XGrid grid;
  std::vector<double> energies;
  std::vector<std::vector<double>> states;
  /// +1 even, -1 odd, 0 when the grid is not mirror symmetric.
  std::vector<int> parities;

  std::size_t size() const { return energies.size(); }
};

namespace detail {

// Lowest `count` eigenpairs of a symmetric tridiagonal matrix.
inline void tridiagonal_lowest(std::vector<double> diag, std::vector<double> off, std::size_t count,
                               std::vector<double>& values, std::vector<std::vector<double>>& vectors) {
  const auto n = static_cast<lapack_int>(diag.size());
  count = std::min<std::size_t>(count, diag.size());
  off.resize(diag.size());  // dstevr uses e as length-n workspace
  lapack_int found = 0;
  std::vector<double> w(diag.size());
  std::vector<double> zmat(diag.size() * count);
  std::vector<lapack_int> isuppz(2 * count);
  const lapack_int info =
      LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, diag.data(), off.data(), 0.0, 0.0, 1,
                     static_cast<lapack_int>(count), 0.0, &found, w.data(), zmat.data(), n, isuppz.data());
  require(info == 0 && found == static_cast<lapack_int>(count), ErrorCode::numerical_failure,
          "tridiagonal eigensolver failed (info=" + std::to_string(info) + ")");
  values.assign(w.begin(), w.begin() + found);
  vectors.assign(count, std::vector<double>(diag.size()));
  for (std::size_t k = 0; k < count; ++k)
    std::copy_n(zmat.begin() + static_cast<std::ptrdiff_t>(k * diag.size()), diag.size(), vectors[k].begin());
}

// Lowest `count` eigenpairs of a symmetric pentadiagonal matrix given by its
// diagonal, first and second super-diagonals.
inline void pentadiagonal_lowest(const std::vector<double>& d0, const std::vector<double>& d1,
                                 const std::vector<double>& d2, std::size_t count, std::vector<double>& values,
                                 std::vector<std::vector<double>>& vectors) {
  const std::size_t n = d0.size();
  count = std::min(count, n);
  constexpr lapack_int kd = 2, ldab = kd + 1;
  // Upper band storage, column major: ab(kd + i - j, j) = A(i, j).
  std::vector<double> ab(static_cast<std::size_t>(ldab) * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    ab[2 + j * ldab] = d0[j];
    if (j >= 1) ab[1 + j * ldab] = d1[j - 1];
    if (j >= 2) ab[0 + j * ldab] = d2[j - 2];
  }
  const auto nn = static_cast<lapack_int>(n);
  std::vector<double> q(n * n), w(n), zmat(n * count);
  std::vector<lapack_int> ifail(n);
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'V', 'I', 'U', nn, kd, ab.data(), ldab, q.data(), nn,
                                         0.0, 0.0, 1, static_cast<lapack_int>(count), 0.0, &found, w.data(),
                                         zmat.data(), nn, ifail.data());
  require(info == 0 && found == static_cast<lapack_int>(count), ErrorCode::numerical_failure,
          "banded eigensolver failed (info=" + std::to_string(info) + ")");
  values.assign(w.begin(), w.begin() + found);
  vectors.assign(count, std::vector<double>(n));
  for (std::size_t k = 0; k < count; ++k)
    std::copy_n(zmat.begin() + static_cast<std::ptrdiff_t>(k * n), n, vectors[k].begin());
}

// Sign fixed so the leftmost significant antinode is positive.
inline void fix_sign(std::vector<double>& v) {
  double peak = 0.0;
  for (double a : v) peak = std::max(peak, std::abs(a));
  const double floor = 1e-2 * peak;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a < floor) continue;
    const double left = i > 0 ? std::abs(v[i - 1]) : 0.0;
    const double right = i + 1 < v.size() ? std::abs(v[i + 1]) : 0.0;
    if (a >= left && a >= right) {
      if (v[i] < 0.0)
        for (double& x : v) x = -x;
      return;
    }
  }
}

inline void normalize(std::vector<double>& v, double dx) {
  double s = 0.0;
  for (double a : v) s += a * a;
  const double f = 1.0 / std::sqrt(s * dx);
  for (double& a : v) a *= f;
}

}  // namespace detail

/// Lowest n_max+1 eigenpairs of the transverse Hamiltonian for the potential slice V(x).
inline TransverseSpectrum solve_transverse(const std::function<double(double)>& slice, const XGrid& grid,
                                           std::size_t n_max, double z = 0.0,
                                           Stencil stencil = Stencil::five_point) {
  grid.validate();
  const std::size_t count = n_max + 1;
  require(count < grid.n_points / 4, ErrorCode::grid_too_small,
          "requested " + std::to_string(count) + " states on a " + std::to_string(grid.n_points) +
              "-point grid; refine the grid");
  const double dx = grid.spacing();
  const double kin = 0.5 / (dx * dx);
  const std::size_t n = grid.n_points;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = slice(grid.point(i));

  TransverseSpectrum spec;
  spec.z = z;
  spec.grid = grid;

  struct Pair {
    double e;
    std::vector<double> state;
    int parity;
  };
  std::vector<Pair> pairs;

  // -1/2 d^2/dx^2 stencil weights: c[0] on the diagonal, c[1], c[2] off it.
  const std::array<double, 3> c = stencil == Stencil::three_point
                                      ? std::array<double, 3>{2.0 * kin, -kin, 0.0}
                                      : std::array<double, 3>{2.5 * kin, -4.0 / 3.0 * kin, kin / 12.0};

  auto solve_band = [&](std::vector<double> d0, std::vector<double> d1, std::vector<double> d2,
                        std::vector<double>& values, std::vector<std::vector<double>>& vecs) {
    if (stencil == Stencil::three_point)
      detail::tridiagonal_lowest(std::move(d0), std::move(d1), count, values, vecs);
    else
      detail::pentadiagonal_lowest(d0, d1, d2, count, values, vecs);
  };

  bool mirror = grid.symmetric();
  for (std::size_t i = 0; mirror && i < n / 2; ++i)
    mirror = std::abs(v[i] - v[n - 1 - i]) <= 1e-12 * (1.0 + std::abs(v[i]));

  if (mirror) {
    const std::size_t half = n / 2;
    for (int parity : {+1, -1}) {
      std::vector<double> d0(half), d1(half - 1, c[1]), d2(half - 2, c[2]);
      for (std::size_t j = 0; j < half; ++j) d0[j] = c[0] + v[half + j];
      // Mirror images of the first interior points close the stencil at x = 0.
      d0[0] += parity * c[1];
      d1[0] += parity * c[2];
      std::vector<double> values;
      std::vector<std::vector<double>> vecs;
      solve_band(std::move(d0), std::move(d1), std::move(d2), values, vecs);
      for (std::size_t k = 0; k < values.size(); ++k) {
        std::vector<double> full(n);
        for (std::size_t j = 0; j < half; ++j) {
          full[half + j] = vecs[k][j];
          full[half - 1 - j] = parity * vecs[k][j];
        }
        pairs.push_back({values[k], std::move(full), parity});
      }
    }
  } else {
    std::vector<double> d0(n), d1(n - 1, c[1]), d2(n - 2, c[2]);
    for (std::size_t i = 0; i < n; ++i) d0[i] = c[0] + v[i];
    std::vector<double> values;
    std::vector<std::vector<double>> vecs;
    solve_band(std::move(d0), std::move(d1), std::move(d2), values, vecs);
    for (std::size_t k = 0; k < values.size(); ++k) pairs.push_back({values[k], std::move(vecs[k]), 0});
  }

  if (mirror) {
    // State n of a mirror-symmetric well has parity (-1)^n, so the sectors
    // interleave. This keeps the order of near-degenerate pairs independent of
    // roundoff; an odd level below its even partner by roundoff is lifted onto it.
    std::vector<Pair> ordered;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t idx = (k % 2 == 0) ? k / 2 : count + k / 2;
      ordered.push_back(std::move(pairs[idx]));
      if (k % 2 == 1) ordered[k].e = std::max(ordered[k].e, ordered[k - 1].e);
    }
    pairs = std::move(ordered);
  } else {
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.e < b.e; });
    pairs.resize(count);
  }

  const double edge = std::min(v.front(), v.back());
  require(pairs.back().e < 0.5 * edge, ErrorCode::grid_too_small,
          "state " + std::to_string(n_max) + " has energy " + std::to_string(pairs.back().e) +
              " but the potential at the grid edge is only " + std::to_string(edge) +
              "; widen the transverse grid or lower n_max");

  for (auto& p : pairs) {
    detail::normalize(p.state, dx);
    detail::fix_sign(p.state);
    spec.energies.push_back(p.e);
    spec.states.push_back(std::move(p.state));
    spec.parities.push_back(p.parity);
  }
  return spec;
}

/// Spectrum of the guide cross-section at station z.
inline TransverseSpectrum solve_transverse(const geometry::GeometryProfile& profile, double z, const XGrid& grid,
                                           std::size_t n_max, Stencil stencil = Stencil::five_point) {
  return solve_transverse([&](double x) { return geometry::potential(profile, x, z); }, grid, n_max, z, stencil);
}

/// E_{2n+1} - E_{2n}.
inline double splitting_gap(const TransverseSpectrum& spectrum, std::size_t n) {
  require(2 * n + 1 < spectrum.size(), ErrorCode::out_of_domain,
          "pair index " + std::to_string(n) + " needs state " + std::to_string(2 * n + 1) + " but only " +
              std::to_string(spectrum.size()) + " were computed");
  return spectrum.energies[2 * n + 1] - spectrum.energies[2 * n];
}

inline constexpr double degeneracy_threshold = 1e-4;

struct SplitPair {
  std::vector<double> left;
  std::vector<double> right;
  /// +1 when |2n> is the even member and |2n+1> the odd one.
  int parity_phase = 0;
  double left_fraction = 0.0;   // norm of `left` in x < 0
  double right_fraction = 0.0;  // norm of `right` in x > 0
};

/// Norm fraction of v on x < 0.
inline double left_norm_fraction(const XGrid& grid, const std::vector<double>& v) {
  double left = 0.0, total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double p = v[i] * v[i];
    total += p;
    if (grid.point(i) < 0.0) left += p;
  }
  return total > 0.0 ? left / total : 0.0;
}

/// Arm-localised states (chi_2n +- chi_2n+1)/sqrt(2) of a widely split pair.
inline SplitPair symmetry_decompose(const TransverseSpectrum& spectrum, std::size_t n,
                                    double threshold = degeneracy_threshold) {
  const double gap = splitting_gap(spectrum, n);
  require(gap < threshold, ErrorCode::not_split,
          "pair " + std::to_string(n) + " has gap " + std::to_string(gap) + " above the degeneracy threshold");
  const auto& even = spectrum.states[2 * n];
  const auto& odd = spectrum.states[2 * n + 1];
  SplitPair out;
  out.left.resize(even.size());
  out.right.resize(even.size());
  const double r = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < even.size(); ++i) {
    out.left[i] = r * (even[i] + odd[i]);
    out.right[i] = r * (even[i] - odd[i]);
  }
  const int pe = spectrum.parities[2 * n], po = spectrum.parities[2 * n + 1];
  out.parity_phase = (pe == 1 && po == -1) ? 1 : (pe == -1 && po == 1 ? -1 : 0);
  out.left_fraction = left_norm_fraction(spectrum.grid, out.left);
  out.right_fraction = 1.0 - left_norm_fraction(spectrum.grid, out.right);
  require(out.left_fraction > 0.999 && out.right_fraction > 0.999, ErrorCode::not_split,
          "decomposed pair " + std::to_string(n) + " is not localised in the arms (left " +
              std::to_string(out.left_fraction) + ", right " + std::to_string(out.right_fraction) + ")");
  return out;
}

struct CorrelationRow {
  double z = 0.0;
  std::vector<double> energies;
};

/// Spectrum at every station; rows come back in station order whatever the thread count.
inline std::vector<CorrelationRow> correlation_diagram(const geometry::GeometryProfile& profile,
                                                       const std::vector<double>& z_samples, std::size_t n_max,
                                                       const XGrid& grid, unsigned threads = 1) {
  for (double z : z_samples) profile.require_in_device(z);
  std::vector<CorrelationRow> rows(z_samples.size());
  parallel::for_each_index(z_samples.size(), threads, [&](std::size_t i) {
    auto s = solve_transverse(profile, z_samples[i], grid, n_max);
    rows[i] = {z_samples[i], std::move(s.energies)};
  });
  return rows;
}

}  // namespace guidewave::transverse
