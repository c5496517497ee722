#include <gtest/gtest.h>

#include <cmath>

#include "guidewave/thermal.hpp"

namespace th = guidewave::thermal;
namespace ch = guidewave::channel;
using guidewave::Error;
using guidewave::ErrorCode;

namespace {

th::SourceSpec small_source() {
  th::SourceSpec s;
  s.length = 20.0;
  s.kT = 5.0;
  s.k_points = 128;
  return s;
}

th::PatternOptions small_options(unsigned threads = 1) {
  th::PatternOptions o;
  o.grid = ch::ZGrid{0.0, 300.0, 512};
  o.threads = threads;
  return o;
}

}  // namespace

TEST(Ensemble, WeightsAreNormalisedBoltzmannFactors) {
  const auto ens = th::build_ensemble(small_source());
  EXPECT_NEAR(ens.total_weight(), 1.0, 1e-12);
  EXPECT_NEAR(ens.transverse[1] / ens.transverse[0], std::exp(-1.0 / 5.0), 1e-14);
  const double k0 = ens.spec.mean_k(0), k1 = ens.spec.mean_k(1);
  EXPECT_NEAR(ens.longitudinal[1] / ens.longitudinal[0], std::exp(-0.5 * (k1 * k1 - k0 * k0) / 5.0), 1e-13);
  EXPECT_LT(ens.transverse_tail, 1e-6);
  EXPECT_LT(ens.longitudinal_tail, 1e-6);
  EXPECT_EQ(ens.size(), ens.transverse.size() * ens.longitudinal.size());
  EXPECT_EQ(ens.members().size(), ens.size());
  EXPECT_NEAR(ens.parity_weight(0) + ens.parity_weight(1), 1.0, 1e-12);
}

TEST(Ensemble, PacketsMatchBoxLevels) {
  const auto ens = th::build_ensemble(small_source());
  const double dk = ens.spec.delta_k();
  for (std::size_t n : {10u, 20u}) {
    EXPECT_NEAR(ens.packets[n].norm(), 1.0, 1e-12);
    EXPECT_NEAR(ens.packets[n].spread(), dk / std::sqrt(2.0), 0.02 * dk);
  }
  EXPECT_NEAR(ens.packets[10].mean(), ens.spec.mean_k(10), 1e-3);
  EXPECT_NEAR(ens.packets[0].norm(), 1.0, 1e-12);
  EXPECT_GT(ens.packets[0].truncated_mass, 0.05);
}

TEST(Ensemble, TruncationErrors) {
  auto s = small_source();
  s.n_trans_max = 5;
  try {
    th::build_ensemble(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::truncation);
  }
  s = small_source();
  s.n_long_max = 3;
  EXPECT_THROW(th::build_ensemble(s), Error);
  s = small_source();
  s.kT = -1.0;
  EXPECT_THROW(th::build_ensemble(s), Error);
}

TEST(Ensemble, FixedTransverseKeepsRequestedLevels) {
  auto s = small_source();
  s.fixed_transverse = true;
  s.n_trans_max = 1;
  const auto ens = th::build_ensemble(s);
  ASSERT_EQ(ens.transverse.size(), 2u);
  EXPECT_NEAR(ens.transverse[0] + ens.transverse[1], 1.0, 1e-15);
  EXPECT_NEAR(ens.transverse[1] / ens.transverse[0], std::exp(-0.2), 1e-14);
}

TEST(Ensemble, TransverseModesFor) {
  EXPECT_EQ(th::transverse_modes_for(0.5, 10.0), 7u);
  EXPECT_EQ(th::transverse_modes_for(0.9, 262.0), std::size_t(std::ceil(std::log(10.0) * 262.0)));
  EXPECT_THROW(th::transverse_modes_for(1.0, 10.0), Error);
}

TEST(Pattern, ParityAggregationEqualsMemberSum) {
  const auto ens = th::build_ensemble(small_source());
  const auto s = ch::TransferSettings::path_length(2.5);
  const auto fast = th::interference_pattern(ens, s, 20.0, small_options());
  auto o = small_options();
  o.member_settings = [&](const th::EnsembleMember& m) {
    auto x = s;
    x.n_in = m.n_trans;
    return x;
  };
  const auto slow = th::interference_pattern(ens, s, 20.0, o);
  double peak = 0.0;
  for (double v : slow.densities.total) peak = std::max(peak, v);
  ASSERT_GT(peak, 0.0);
  for (std::size_t j = 0; j < fast.densities.total.size(); ++j)
    EXPECT_NEAR(fast.densities.total[j], slow.densities.total[j], 1e-10 * peak);
  EXPECT_NEAR(fast.reflected, slow.reflected, 1e-12);
}

TEST(Pattern, LinearInWeights) {
  auto ens = th::build_ensemble(small_source());
  const auto s = ch::TransferSettings::path_length(2.5);
  const auto a = th::interference_pattern(ens, s, 20.0, small_options());
  ens.scale_weights(2.0);
  const auto b = th::interference_pattern(ens, s, 20.0, small_options());
  for (std::size_t j = 0; j < a.densities.total.size(); ++j) EXPECT_EQ(b.densities.total[j], 2.0 * a.densities.total[j]);
}

TEST(Pattern, IndependentOfThreadCount) {
  const auto ens = th::build_ensemble(small_source());
  const auto s = ch::TransferSettings::path_length(2.5);
  const auto a = th::interference_pattern(ens, s, 20.0, small_options(1));
  const auto b = th::interference_pattern(ens, s, 20.0, small_options(3));
  EXPECT_EQ(a.densities.total, b.densities.total);
  EXPECT_EQ(a.densities.channel[1], b.densities.channel[1]);
}

TEST(Pattern, TotalIsChannelSum) {
  const auto ens = th::build_ensemble(small_source());
  const auto p = th::interference_pattern(ens, ch::TransferSettings::path_length(1.0), 15.0, small_options());
  for (std::size_t j = 0; j < p.densities.z.size(); ++j)
    EXPECT_EQ(p.densities.total[j], p.densities.channel[0][j] + p.densities.channel[1][j]);
  EXPECT_THROW(th::interference_pattern(ens, ch::TransferSettings::path_length(1.0), 0.0, small_options()), Error);
}
