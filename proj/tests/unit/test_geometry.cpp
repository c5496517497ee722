#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "guidewave/geometry.hpp"

namespace gg = guidewave::geometry;
using guidewave::Error;

namespace {
gg::GeometryProfile linear_profile() {
  gg::GeometryProfile p;
  p.z_split_start = 10;
  p.z_split_end = 110;
  p.z_merge_start = 150;
  p.z_merge_end = 250;
  p.d_max = 10;
  p.ramp = gg::Ramp::linear;
  return p;
}
}  // namespace

TEST(Separation, StraightGuidePlateauAndLinearMidpoint) {
  const auto p = linear_profile();
  EXPECT_EQ(gg::separation(p, 5.0), 0.0);
  EXPECT_EQ(gg::separation(p, 130.0), 10.0);
  EXPECT_DOUBLE_EQ(gg::separation(p, 60.0), 5.0);
  EXPECT_DOUBLE_EQ(gg::separation(p, 200.0), 5.0);
}

TEST(Separation, OutsideDeviceIsAnError) {
  const auto p = linear_profile();
  EXPECT_THROW(gg::separation(p, -1.0), Error);
  EXPECT_THROW(gg::separation(p, 251.0), Error);
}

TEST(WellFrequency, InputArmAndLinearMidpoint) {
  const auto p = linear_profile();
  EXPECT_DOUBLE_EQ(gg::well_frequency(p, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(gg::well_frequency(p, 130.0), 2.0);
  EXPECT_DOUBLE_EQ(gg::well_frequency(p, 60.0), 1.5);
}

TEST(Potential, HarmonicLimitAndWellMinima) {
  const auto p = linear_profile();
  EXPECT_DOUBLE_EQ(gg::potential(p, 1.0, 0.0), 0.5);
  EXPECT_EQ(gg::potential(p, 5.0, 130.0), 0.0);
  EXPECT_EQ(gg::potential(p, -5.0, 130.0), 0.0);
  EXPECT_DOUBLE_EQ(gg::potential(p, 5.5, 130.0), 0.5);
}

TEST(Potential, QuarticShapeHasTheSameLimits) {
  auto p = linear_profile();
  p.shape = gg::WellShape::quartic;
  EXPECT_DOUBLE_EQ(gg::potential(p, 1.0, 0.0), 0.5);
  EXPECT_NEAR(gg::potential(p, 5.0, 130.0), 0.0, 1e-15);
  const double h = 1e-4;
  const double curv = (gg::potential(p, 5.0 + h, 130.0) - 2.0 * gg::potential(p, 5.0, 130.0) +
                       gg::potential(p, 5.0 - h, 130.0)) / (h * h);
  EXPECT_NEAR(curv, 4.0, 1e-5);
}

TEST(Adiabaticity, StraightGuideAndDirectEvaluations) {
  auto p = linear_profile();
  p.d_max = 0.0;
  EXPECT_EQ(gg::adiabaticity_ratio(p, 50.0), 0.0);
  p.d_max = 1.0;  // slope 1/100
  EXPECT_NEAR(gg::adiabaticity_ratio(p, 50.0), 0.005, 1e-15);
  p.d_max = 50.0;  // slope 0.5
  EXPECT_NEAR(gg::adiabaticity_ratio(p, 50.0), 12.5, 1e-12);
  EXPECT_THROW(gg::adiabaticity_ratio(p, 0.0), Error);
}

TEST(Adiabaticity, SmoothstepUsesPeakSlope) {
  auto p = linear_profile();
  p.ramp = gg::Ramp::smoothstep;
  p.d_max = 1.0;
  double peak = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double z = 10.0 + 100.0 * i / 20000.0;
    peak = std::max(peak, std::abs(p.d_max * p.split_fraction_slope(z)));
  }
  EXPECT_NEAR(gg::adiabaticity_ratio(p, 50.0), 50.0 * peak * peak, 1e-9);
}

TEST(Profile, InvalidStationOrderIsRejected) {
  auto p = linear_profile();
  p.z_split_end = 200;
  EXPECT_THROW(p.validate(), Error);
}

TEST(PotentialProperty, MirrorSymmetryOnRandomSamples) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> x(-15, 15), z(0, 250);
  for (auto shape : {gg::WellShape::piecewise_quadratic, gg::WellShape::quartic}) {
    auto p = linear_profile();
    p.ramp = gg::Ramp::smoothstep;
    p.shape = shape;
    for (int i = 0; i < 5000; ++i) {
      const double xi = x(rng), zi = z(rng);
      EXPECT_EQ(gg::potential(p, xi, zi), gg::potential(p, -xi, zi));
      EXPECT_GE(gg::potential(p, xi, zi), 0.0);
    }
  }
}

TEST(PotentialProperty, ContinuityInZ) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> x(-10, 10), z(0, 250);
  for (auto ramp : {gg::Ramp::linear, gg::Ramp::smoothstep}) {
    auto p = linear_profile();
    p.ramp = ramp;
    for (int i = 0; i < 2000; ++i) {
      const double xi = x(rng), zi = z(rng);
      for (double eps : {1e-3, 1e-6}) {
        const double dv = std::abs(gg::potential(p, xi, zi + eps) - gg::potential(p, xi, zi));
        // |dV/dz| <= (omega dOmega |u|^2 + omega^2 |u| d'/2) with |u| <= 15, slopes <= 1.5 * 10/100.
        EXPECT_LE(dv, 60.0 * eps);
      }
    }
  }
}

TEST(PotentialProperty, SmoothstepSlopeIsContinuous) {
  auto p = linear_profile();
  p.ramp = gg::Ramp::smoothstep;
  for (double z : {10.0, 110.0, 150.0, 250.0}) {
    EXPECT_NEAR(p.split_fraction_slope(z - 1e-7), p.split_fraction_slope(z + 1e-7), 1e-6);
  }
}

TEST(AdiabaticityProperty, ContinuousInRampLength) {
  auto p = linear_profile();
  p.ramp = gg::Ramp::smoothstep;
  double prev = gg::adiabaticity_ratio(p, 50.0);
  EXPECT_TRUE(std::isfinite(prev));
  for (int i = 1; i <= 100; ++i) {
    p.z_split_end = 110.0 + 0.01 * i;
    const double r = gg::adiabaticity_ratio(p, 50.0);
    EXPECT_LT(std::abs(r - prev), 1e-3 * prev);
    prev = r;
  }
}
