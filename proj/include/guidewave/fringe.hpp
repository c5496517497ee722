#pragma once

// Fringe period and contrast of a sampled intensity profile I(z).

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guidewave/error.hpp"
#include "guidewave/fft.hpp"

namespace guidewave::fringe {

struct Window {
  double z_min = 0.0;
  double z_max = 0.0;
  double width() const { return z_max - z_min; }
};

enum class Method { spectral_peak, cos2_fit };

constexpr std::string_view to_string(Method m) { return m == Method::spectral_peak ? "spectral_peak" : "cos2_fit"; }

struct FringeOptions {
  std::size_t zero_pad = 8;
  /// Peak power over the median power of the searched band.
  double min_significance = 20.0;
  std::size_t min_periods = 3;
  /// Share of the detrended variance the fringe model must explain.
  double min_explained = 0.3;
  /// Envelope averaging length when no period is detected.
  std::optional<double> detrend_period;
  /// Selects which period estimate is reported as `period`.
  Method method = Method::spectral_peak;
};

struct FringeReport {
  std::optional<double> period;
  std::optional<double> period_spectral;
  std::optional<double> period_fit;
  double contrast = 0.0;
  double significance = 0.0;
  /// 1 - residual(fringe model) / residual(linear trend), at the fitted period.
  double explained = 0.0;
  Window window;
  Method method = Method::spectral_peak;

  bool has_fringes() const { return period.has_value(); }
};

namespace detail {

inline double golden_max(const auto& f, double a, double b, int iterations = 80) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Solves the normal equations of a small dense least-squares problem.
inline double lsq_residual(const std::vector<std::vector<double>>& basis, const std::vector<double>& y) {
  const std::size_t m = basis.size(), n = y.size();
  std::vector<double> a(m * m, 0.0), rhs(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += basis[i][k] * basis[j][k];
      a[i * m + j] = a[j * m + i] = s;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += basis[i][k] * y[k];
    rhs[i] = s;
  }
  // Cholesky with a tiny ridge for rank safety.
  for (std::size_t i = 0; i < m; ++i) a[i * m + i] *= 1.0 + 1e-12;
  std::vector<double> l(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * m + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * m + k] * l[j * m + k];
      l[i * m + j] = i == j ? std::sqrt(std::max(s, 1e-300)) : s / l[j * m + j];
    }
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * m + k] * w[k];
    w[i] = s / l[i * m + i];
  }
  std::vector<double> coef(m);
  for (std::size_t ii = m; ii-- > 0;) {
    double s = w[ii];
    for (std::size_t k = ii + 1; k < m; ++k) s -= l[k * m + ii] * coef[k];
    coef[ii] = s / l[ii * m + ii];
  }
  double r = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double f = 0.0;
    for (std::size_t i = 0; i < m; ++i) f += coef[i] * basis[i][k];
    r += (y[k] - f) * (y[k] - f);
  }
  return r;
}

}  // namespace detail

/// z must be uniformly spaced and ascending. The window must hold at least
/// `min_periods` periods for a period to be reported.
inline FringeReport fringe_analysis(const std::vector<double>& z, const std::vector<double>& intensity,
                                    const Window& window, const FringeOptions& options = {}) {
  require(z.size() == intensity.size() && z.size() >= 8, ErrorCode::invalid_parameter,
          "fringe analysis needs matching z and intensity samples");
  require(window.z_max > window.z_min, ErrorCode::invalid_parameter, "empty analysis window");
  const double dz = z[1] - z[0];
  std::size_t lo = z.size(), hi = 0;
  for (std::size_t j = 0; j < z.size(); ++j)
    if (z[j] >= window.z_min && z[j] <= window.z_max) {
      lo = std::min(lo, j);
      hi = std::max(hi, j + 1);
    }
  require(lo < hi && hi - lo >= 8, ErrorCode::invalid_parameter, "analysis window holds too few samples");
  const std::size_t n = hi - lo;

  FringeReport rep;
  rep.window = window;
  rep.method = options.method;

  // Linear detrend and Hann taper inside the window.
  std::vector<double> zs(z.begin() + lo, z.begin() + hi), ys(intensity.begin() + lo, intensity.begin() + hi);
  double zm = 0.0, ym = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    zm += zs[j];
    ym += ys[j];
  }
  zm /= double(n);
  ym /= double(n);
  double szz = 0.0, szy = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    szz += (zs[j] - zm) * (zs[j] - zm);
    szy += (zs[j] - zm) * (ys[j] - ym);
  }
  const double slope = szy / szz;
  std::vector<double> tapered(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (double(j) + 0.5) / double(n));
    tapered[j] = (ys[j] - ym - slope * (zs[j] - zm)) * hann;
  }

  std::size_t padded = 1;
  while (padded < n * options.zero_pad) padded <<= 1;
  std::vector<std::complex<double>> buf(padded);
  for (std::size_t j = 0; j < n; ++j) buf[j] = tapered[j];
  const auto spec = fft::forward_1d(std::move(buf));
  const double span = dz * double(padded);
  const double kappa_step = 2.0 * std::numbers::pi / span;
  const double kappa_min = 2.0 * std::numbers::pi * double(options.min_periods) / window.width();
  const std::size_t b_lo = std::max<std::size_t>(1, std::size_t(std::ceil(kappa_min / kappa_step)));
  const std::size_t b_hi = padded / 2;
  std::size_t best = 0;
  double best_p = 0.0;
  std::vector<double> powers;
  for (std::size_t b = b_lo; b < b_hi; ++b) {
    const double p = std::norm(spec[b]);
    powers.push_back(p);
    if (p > best_p) {
      best_p = p;
      best = b;
    }
  }
  if (!powers.empty()) {
    auto mid = powers.begin() + std::ptrdiff_t(powers.size() / 2);
    std::nth_element(powers.begin(), mid, powers.end());
    rep.significance = *mid > 0.0 ? best_p / *mid : (best_p > 0.0 ? 1e300 : 0.0);
  }

  // A fringe is an interior local maximum of the band; smooth envelopes peak at its lower edge.
  const bool interior = best > b_lo && best + 1 < b_hi && std::norm(spec[best - 1]) < best_p &&
                        std::norm(spec[best + 1]) < best_p;
  if (interior && rep.significance >= options.min_significance) {
    auto dtft = [&](double kappa) {
      std::complex<double> s{};
      const std::complex<double> step = std::polar(1.0, -kappa * dz);
      std::complex<double> ph = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        s += tapered[j] * ph;
        ph *= step;
      }
      return std::norm(s);
    };
    const double k0 = double(best) * kappa_step;
    const double kappa = detail::golden_max(dtft, std::max(k0 - kappa_step, 0.5 * k0), k0 + kappa_step);

    // Least-squares fit of (a + b z)(1 + c cos(kz + phi)) linearised in its coefficients.
    std::vector<double> u(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = (zs[j] - zm) / window.width();
    auto residual = [&](double k) {
      std::vector<std::vector<double>> basis(6, std::vector<double>(n));
      for (std::size_t j = 0; j < n; ++j) {
        const double c = std::cos(k * zs[j]), s = std::sin(k * zs[j]);
        basis[0][j] = 1.0;
        basis[1][j] = u[j];
        basis[2][j] = c;
        basis[3][j] = s;
        basis[4][j] = u[j] * c;
        basis[5][j] = u[j] * s;
      }
      return -detail::lsq_residual(basis, ys);
    };
    const double kfit = detail::golden_max(residual, kappa * (1.0 - 0.02), kappa * (1.0 + 0.02), 60);
    const double trend = detail::lsq_residual({std::vector<double>(n, 1.0), u}, ys);
    rep.explained = trend > 0.0 ? 1.0 + residual(kfit) / trend : 0.0;
    if (rep.explained >= options.min_explained) {
      rep.period_spectral = 2.0 * std::numbers::pi / kappa;
      rep.period_fit = 2.0 * std::numbers::pi / kfit;
      rep.period = options.method == Method::spectral_peak ? rep.period_spectral : rep.period_fit;
    }
  }

  // Envelope: running mean over one period, taken on the full profile.
  const double avg_len = rep.period ? *rep.period : options.detrend_period.value_or(window.width() / 4.0);
  const std::size_t half = std::max<std::size_t>(1, std::size_t(std::llround(0.5 * avg_len / dz)));
  std::vector<double> prefix(intensity.size() + 1, 0.0);
  for (std::size_t j = 0; j < intensity.size(); ++j) prefix[j + 1] = prefix[j] + intensity[j];
  double rmax = -1e300, rmin = 1e300;
  for (std::size_t j = lo; j < hi; ++j) {
    const std::size_t a = j >= half ? j - half : 0;
    const std::size_t b = std::min(intensity.size(), j + half);
    const double env = (prefix[b] - prefix[a]) / double(b - a);
    if (env <= 0.0) continue;
    const double r = intensity[j] / env;
    rmax = std::max(rmax, r);
    rmin = std::min(rmin, r);
  }
  if (rmax > rmin && rmax + rmin > 0.0) rep.contrast = std::clamp((rmax - rmin) / (rmax + rmin), 0.0, 1.0);
  return rep;
}

}  // namespace guidewave::fringe
