#pragma once

// Thermal multi-mode source: box eigenstates replaced by Gaussian packets,
// Boltzmann weights over transverse and longitudinal levels, and the
// incoherent interference pattern behind the interferometer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "guidewave/channel.hpp"
#include "guidewave/error.hpp"
#include "guidewave/parallel.hpp"

namespace guidewave::thermal {

struct SourceSpec {
  /// Box width (natural length).
  double length = 332.0;
  /// k_B T in units of the input-guide level spacing.
  double kT = 262.0;
  double omega = 1.0;
  /// Largest longitudinal / transverse index kept; 0 chooses the smallest
  /// bound meeting `weight_epsilon`.
  std::size_t n_long_max = 0;
  std::size_t n_trans_max = 0;
  double weight_epsilon = 1e-6;
  /// Keep exactly levels 0..n_trans_max and renormalise, without the tail check.
  bool fixed_transverse = false;
  std::size_t k_points = 1024;
  /// Packet grid half-width in units of the momentum spread.
  double k_span = 6.0;

  void validate() const {
    require(std::isfinite(length) && length > 0.0, ErrorCode::invalid_parameter, "source length must be positive");
    require(std::isfinite(kT) && kT > 0.0, ErrorCode::invalid_parameter, "temperature must be positive");
    require(std::isfinite(omega) && omega > 0.0, ErrorCode::invalid_parameter, "omega must be positive");
    require(weight_epsilon > 0.0 && weight_epsilon < 1.0, ErrorCode::invalid_parameter,
            "weight_epsilon must lie in (0, 1)");
    require(k_points >= 16 && k_span > 0.0, ErrorCode::invalid_parameter, "invalid packet grid");
  }

  double delta_k() const { return 2.0 * std::sqrt(std::numbers::pi) / length; }
  double mean_k(std::size_t n_long) const { return double(n_long + 1) * std::numbers::pi / length; }
  /// The box opens at z = 0; its centre sits at -L/2.
  double source_center() const { return -0.5 * length; }
};

struct EnsembleMember {
  double weight = 0.0;
  std::size_t n_trans = 0;
  std::size_t n_long = 0;
  const channel::LongitudinalPacket* packet = nullptr;
};

/// Factorised ensemble: weight(n_trans, n_long) = transverse[n_trans] * longitudinal[n_long].
struct ThermalEnsemble {
  SourceSpec spec;
  std::vector<double> transverse;
  std::vector<double> longitudinal;
  std::vector<channel::LongitudinalPacket> packets;
  double transverse_tail = 0.0;
  double longitudinal_tail = 0.0;

  std::size_t size() const { return transverse.size() * longitudinal.size(); }

  EnsembleMember member(std::size_t n_trans, std::size_t n_long) const {
    return {transverse[n_trans] * longitudinal[n_long], n_trans, n_long, &packets[n_long]};
  }

  std::vector<EnsembleMember> members() const {
    std::vector<EnsembleMember> out;
    out.reserve(size());
    for (std::size_t l = 0; l < longitudinal.size(); ++l)
      for (std::size_t t = 0; t < transverse.size(); ++t) out.push_back(member(t, l));
    return out;
  }

  double total_weight() const {
    double a = 0.0, b = 0.0;
    for (double w : transverse) a += w;
    for (double w : longitudinal) b += w;
    return a * b;
  }

  /// Summed transverse weight of even (0) or odd (1) levels.
  double parity_weight(std::size_t parity) const {
    double s = 0.0;
    for (std::size_t n = parity; n < transverse.size(); n += 2) s += transverse[n];
    return s;
  }

  /// Multiplies every weight by c (applied to the longitudinal factor).
  void scale_weights(double c) {
    for (double& w : longitudinal) w *= c;
  }
};

/// Number of transverse levels holding `fraction` of the Boltzmann mass.
inline std::size_t transverse_modes_for(double fraction, double kT, double omega = 1.0) {
  require(fraction > 0.0 && fraction < 1.0, ErrorCode::invalid_parameter, "fraction must lie in (0, 1)");
  // 1 - exp(-N omega / kT) >= fraction.
  return std::size_t(std::ceil(-std::log(1.0 - fraction) * kT / omega));
}

inline ThermalEnsemble build_ensemble(const SourceSpec& spec) {
  spec.validate();
  ThermalEnsemble ens;
  ens.spec = spec;
  const double beta = 1.0 / spec.kT;

  // Transverse: geometric weights exp(-omega n / kT); the zero-point factor cancels.
  const double r = std::exp(-beta * spec.omega);
  if (spec.fixed_transverse) {
    for (std::size_t n = 0; n <= spec.n_trans_max; ++n) ens.transverse.push_back(std::pow(r, double(n)));
  } else {
    const std::size_t auto_n = std::size_t(std::ceil(-std::log(spec.weight_epsilon) * spec.kT / spec.omega));
    const std::size_t n_max = spec.n_trans_max > 0 ? spec.n_trans_max : auto_n;
    ens.transverse_tail = std::pow(r, double(n_max + 1));
    require(ens.transverse_tail < spec.weight_epsilon, ErrorCode::truncation,
            "transverse truncation at n = " + std::to_string(n_max) + " drops weight " +
                std::to_string(ens.transverse_tail) + " > weight_epsilon; raise n_trans_max to at least " +
                std::to_string(auto_n));
    for (std::size_t n = 0; n <= n_max; ++n) ens.transverse.push_back(std::pow(r, double(n)));
  }
  const double t_sum = spec.fixed_transverse ? [&] {
    double s = 0.0;
    for (double w : ens.transverse) s += w;
    return s;
  }()
                                             : (1.0 - ens.transverse_tail) / (1.0 - r);
  for (double& w : ens.transverse) w /= t_sum;

  // Longitudinal: box energies k_n^2 / 2 with k_n = (n + 1) pi / L.
  std::vector<double> raw;
  double total = 0.0;
  for (std::size_t n = 0;; ++n) {
    const double k = spec.mean_k(n);
    const double w = std::exp(-0.5 * k * k * beta);
    raw.push_back(w);
    total += w;
    if (w < 1e-18 * total && 0.5 * k * k > spec.kT) break;
    require(n < 50'000'000, ErrorCode::truncation, "longitudinal weights do not converge");
  }
  std::size_t n_long = spec.n_long_max;
  if (n_long == 0) {
    double tail = 0.0;
    n_long = raw.size() - 1;
    while (n_long > 0 && tail + raw[n_long] < spec.weight_epsilon * total) tail += raw[n_long--];
  }
  double kept = 0.0;
  for (std::size_t n = 0; n <= n_long && n < raw.size(); ++n) kept += raw[n];
  ens.longitudinal_tail = 1.0 - kept / total;
  require(ens.longitudinal_tail < spec.weight_epsilon, ErrorCode::truncation,
          "longitudinal truncation at n = " + std::to_string(n_long) + " drops weight " +
              std::to_string(ens.longitudinal_tail) + " > weight_epsilon; raise n_long_max");
  for (std::size_t n = 0; n <= n_long; ++n) ens.longitudinal.push_back(n < raw.size() ? raw[n] / kept : 0.0);

  const double sigma = spec.delta_k() / std::sqrt(2.0);
  ens.packets.reserve(ens.longitudinal.size());
  for (std::size_t n = 0; n < ens.longitudinal.size(); ++n)
    ens.packets.push_back(channel::LongitudinalPacket::gaussian(spec.mean_k(n), sigma, spec.source_center(),
                                                                spec.k_points, spec.k_span * spec.delta_k()));
  return ens;
}

struct PatternOptions {
  channel::ZGrid grid{0.0, 13290.0, 4096};
  unsigned threads = 1;
  /// Per-member transfer settings; disables the pair aggregation.
  std::function<channel::TransferSettings(const EnsembleMember&)> member_settings;
};

struct Pattern {
  channel::ChannelDensities densities;
  /// Norm booked as reflected, weighted over the ensemble.
  double reflected = 0.0;
};

/// I(z, t) = sum over members of weight * sum over channels of density.
/// Without a per-member override, levels 2p + q share the output of level q,
/// so the transverse sum collapses to the two parity weights exactly.
inline Pattern interference_pattern(const ThermalEnsemble& ens, const channel::TransferSettings& settings, double t,
                                    const PatternOptions& opts = {}) {
  require(t > 0.0, ErrorCode::invalid_parameter, "interference pattern needs t > 0");
  opts.grid.validate();
  const std::size_t n_long = ens.longitudinal.size();
  const double width = 1.0 / (std::sqrt(2.0) * ens.spec.delta_k());
  channel::EvolveOptions eo;
  eo.restrict_support = true;
  eo.source_center = ens.spec.source_center();
  eo.source_width = width;

  // Fixed contiguous blocks reduced in order: the sum does not depend on the thread count.
  constexpr std::size_t blocks = 64;
  const std::size_t per_block = (n_long + blocks - 1) / blocks;
  std::vector<channel::ChannelDensities> partial(blocks);
  std::vector<double> reflected(blocks, 0.0);
  parallel::for_each_index(blocks, opts.threads, [&](std::size_t b) {
    auto acc = channel::empty_densities(opts.grid);
    auto run = [&](std::size_t l, const channel::TransferSettings& s, double weight) {
      if (weight == 0.0) return;
      const auto out = channel::apply_interferometer(ens.packets[l], s);
      reflected[b] += weight * out.reflected.total();
      auto o = eo;
      o.scale = weight;
      channel::accumulate_channels(out, t, opts.grid, o, acc);
    };
    for (std::size_t l = b * per_block; l < std::min(n_long, (b + 1) * per_block); ++l) {
      if (opts.member_settings) {
        for (std::size_t n = 0; n < ens.transverse.size(); ++n) {
          const auto m = ens.member(n, l);
          run(l, opts.member_settings(m), m.weight);
        }
      } else {
        for (std::size_t q = 0; q < 2; ++q) {
          auto s = settings;
          s.n_in = q;
          run(l, s, ens.longitudinal[l] * ens.parity_weight(q));
        }
      }
    }
    partial[b] = std::move(acc);
  });

  Pattern pat;
  pat.densities = channel::empty_densities(opts.grid);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t j = 0; j < opts.grid.n; ++j) pat.densities.channel[c][j] += partial[b].channel[c][j];
    pat.reflected += reflected[b];
  }
  channel::finish_total(pat.densities);
  return pat;
}

}  // namespace guidewave::thermal
