#include <array>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "liboost/sampling.hpp"

using namespace liboost;

namespace {

constexpr int kDraws = 100000;

const std::array<OffsetKind, 3> kMagnitudeKinds = {OffsetKind::kUniform, OffsetKind::kNormal,
                                                   OffsetKind::kLogarithmic};

std::size_t grid_index(Offset o, int k) {
  return static_cast<std::size_t>((o.j + k) * (2 * k + 1) + (o.i + k));
}

}  // namespace

TEST(Pmf, TabulatedValuesAtSix) {
  const OffsetDistribution uniform(OffsetKind::kUniform, 6);
  const OffsetDistribution logarithmic(OffsetKind::kLogarithmic, 6);
  const OffsetDistribution normal(OffsetKind::kNormal, 6);
  EXPECT_NEAR(uniform.pmf(3), 1.0 / 6.0, 1e-15);
  // The logarithmic table already sums to one.
  EXPECT_NEAR(logarithmic.pmf(1), 0.39, 1e-12);
  EXPECT_NEAR(logarithmic.pmf(6), 0.02, 1e-12);
  // The normal table sums to 0.98 before renormalisation.
  EXPECT_NEAR(normal.pmf(6), 0.010204081632653061, 1e-12);
  EXPECT_NEAR(normal.pmf(1), 0.44 / 0.98, 1e-12);
}

TEST(Pmf, NormalisedForEveryKindAndBound) {
  for (int k = 1; k <= 12; ++k) {
    for (OffsetKind kind : kMagnitudeKinds) {
      const OffsetDistribution d(kind, k);
      double total = 0;
      for (int m = 1; m <= k; ++m) {
        EXPECT_GE(d.pmf(m), 0.0);
        total += d.pmf(m);
      }
      EXPECT_NEAR(total, 1.0, 1e-12) << offset_kind_name(kind) << " k=" << k;
    }
    const OffsetDistribution grid(OffsetKind::kFullGrid, k);
    double total = 0;
    for (int m = 0; m <= k; ++m) total += grid.pmf(m);
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(grid.pmf(0), 1.0 / ((2 * k + 1) * (2 * k + 1)), 1e-15);
  }
}

TEST(Pmf, NormalExtensionTracksTableAtSix) {
  // exp(-m^2/8) over 1..6, normalised, against the tabulated values.
  double z = 0;
  for (int m = 1; m <= 6; ++m) z += std::exp(-m * m / 8.0);
  const std::array<double, 6> table = {0.44, 0.30, 0.15, 0.06, 0.02, 0.01};
  for (int m = 1; m <= 6; ++m) {
    EXPECT_NEAR(std::exp(-m * m / 8.0) / z, table[static_cast<std::size_t>(m - 1)] / 0.98, 0.02);
  }
  const OffsetDistribution normal(OffsetKind::kNormal, 4);
  double z4 = 0;
  for (int m = 1; m <= 4; ++m) z4 += std::exp(-m * m / 8.0);
  EXPECT_NEAR(normal.pmf(2), std::exp(-0.5) / z4, 1e-12);
}

TEST(Pmf, LogarithmicExtensionIsDecreasing) {
  for (int k : {2, 3, 4, 8, 10}) {
    const OffsetDistribution d(OffsetKind::kLogarithmic, k);
    for (int m = 2; m <= k; ++m) EXPECT_LE(d.pmf(m), d.pmf(m - 1)) << "k=" << k;
  }
}

TEST(Pmf, OutOfRangeMagnitudeIsRejected) {
  const OffsetDistribution d(OffsetKind::kUniform, 6);
  EXPECT_THROW(d.pmf(0), ConfigError);
  EXPECT_THROW(d.pmf(7), ConfigError);
  EXPECT_THROW(OffsetDistribution(OffsetKind::kUniform, -1), ConfigError);
}

TEST(Names, RoundTrip) {
  for (OffsetKind kind : {OffsetKind::kUniform, OffsetKind::kNormal, OffsetKind::kLogarithmic,
                          OffsetKind::kFullGrid}) {
    EXPECT_EQ(parse_offset_kind(offset_kind_name(kind)), kind);
  }
  EXPECT_EQ(parse_offset_mode("per_axis"), OffsetMode::kPerAxis);
  EXPECT_EQ(parse_offset_mode("ring"), OffsetMode::kRing);
  EXPECT_THROW(parse_offset_kind("cauchy"), ConfigError);
}

TEST(FullGrid, LengthsAndOrder) {
  EXPECT_EQ(full_grid(1).size(), 9u);
  EXPECT_EQ(full_grid(2).size(), 25u);
  ASSERT_EQ(full_grid(0).size(), 1u);
  EXPECT_EQ(full_grid(0)[0], (Offset{0, 0}));
  const auto g = full_grid(1);
  EXPECT_EQ(g.front(), (Offset{-1, -1}));
  EXPECT_EQ(g[1], (Offset{0, -1}));
  EXPECT_EQ(g[4], (Offset{0, 0}));
  EXPECT_EQ(g.back(), (Offset{1, 1}));
  EXPECT_THROW(full_grid(-1), ConfigError);
}

TEST(Sample, ZeroBoundGivesOriginWithoutDrawing) {
  for (OffsetKind kind : kMagnitudeKinds) {
    const OffsetDistribution d(kind, 0);
    Rng rng(3), untouched(3);
    EXPECT_EQ(d.sample(rng), (Offset{0, 0}));
    EXPECT_EQ(rng.next(), untouched.next());
  }
}

TEST(Sample, RingMagnitudesStayInBounds) {
  for (OffsetKind kind : kMagnitudeKinds) {
    for (OffsetMode mode : {OffsetMode::kRing, OffsetMode::kPerAxis}) {
      const OffsetDistribution d(kind, 4, mode);
      Rng rng(9);
      for (int n = 0; n < 5000; ++n) {
        const Offset o = d.sample(rng);
        ASSERT_GE(o.magnitude(), 1);
        ASSERT_LE(o.magnitude(), 4);
      }
    }
  }
}

TEST(Sample, DeterministicPerSeed) {
  const OffsetDistribution d(OffsetKind::kLogarithmic, 6);
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int n = 0; n < 1000; ++n) {
    const Offset x = d.sample(a);
    EXPECT_EQ(x, d.sample(b));
    differs |= !(x == d.sample(c));
  }
  EXPECT_TRUE(differs);
}

TEST(Sample, FullGridFrequenciesAreUniform) {
  const OffsetDistribution d(OffsetKind::kFullGrid, 1);
  Rng rng(5);
  std::vector<int> counts(9);
  for (int n = 0; n < kDraws; ++n) ++counts[grid_index(d.sample(rng), 1)];
  double chi2 = 0;
  const double expected = kDraws / 9.0;
  for (int c : counts) {
    EXPECT_NEAR(c / static_cast<double>(kDraws), 1.0 / 9.0, 0.01);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  EXPECT_LT(chi2, 20.09);  // chi-square 8 dof, p = 0.01
}

TEST(Sample, MagnitudeFrequenciesConvergeToPmf) {
  for (OffsetKind kind : kMagnitudeKinds) {
    const OffsetDistribution d(kind, 6);
    Rng rng(17);
    std::vector<int> counts(7);
    for (int n = 0; n < kDraws; ++n) ++counts[static_cast<std::size_t>(d.sample(rng).magnitude())];
    for (int m = 1; m <= 6; ++m) {
      EXPECT_NEAR(counts[static_cast<std::size_t>(m)] / static_cast<double>(kDraws), d.pmf(m), 0.01)
          << offset_kind_name(kind) << " m=" << m;
    }
  }
  const OffsetDistribution log6(OffsetKind::kLogarithmic, 6);
  Rng rng(18);
  int ones = 0;
  for (int n = 0; n < kDraws; ++n) ones += log6.sample(rng).magnitude() == 1;
  EXPECT_NEAR(ones / static_cast<double>(kDraws), 0.39, 0.01);
}

TEST(Sample, RingCellsAreUniformWithinMagnitude) {
  const OffsetDistribution d(OffsetKind::kUniform, 2);
  Rng rng(23);
  std::map<std::pair<int, int>, int> counts;
  int ring2 = 0;
  for (int n = 0; n < kDraws; ++n) {
    const Offset o = d.sample(rng);
    if (o.magnitude() == 2) {
      ++counts[{o.i, o.j}];
      ++ring2;
    }
  }
  ASSERT_EQ(counts.size(), 16u);
  const double expected = ring2 / 16.0;
  double chi2 = 0;
  for (const auto& [cell, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 30.58);  // chi-square 15 dof, p = 0.01
}

TEST(Sample, DistinctSeedsDecorrelate) {
  // Independence of paired draws from two seeds: chi-square on the 9x9
  // contingency table of full-grid offsets.
  const OffsetDistribution d(OffsetKind::kFullGrid, 1);
  Rng a(100), b(101);
  std::vector<std::vector<double>> table(9, std::vector<double>(9));
  for (int n = 0; n < kDraws; ++n) {
    table[grid_index(d.sample(a), 1)][grid_index(d.sample(b), 1)] += 1;
  }
  std::vector<double> rows(9), cols(9);
  for (std::size_t r = 0; r < 9; ++r) {
    for (std::size_t c = 0; c < 9; ++c) {
      rows[r] += table[r][c];
      cols[c] += table[r][c];
    }
  }
  double chi2 = 0;
  for (std::size_t r = 0; r < 9; ++r) {
    for (std::size_t c = 0; c < 9; ++c) {
      const double e = rows[r] * cols[c] / kDraws;
      chi2 += (table[r][c] - e) * (table[r][c] - e) / e;
    }
  }
  EXPECT_LT(chi2, 93.22);  // chi-square 64 dof, p = 0.01
}

TEST(Sample, PerAxisDrawsEachAxisFromThePmf) {
  const OffsetDistribution d(OffsetKind::kUniform, 3, OffsetMode::kPerAxis);
  Rng rng(31);
  std::vector<int> counts(4);
  for (int n = 0; n < kDraws; ++n) {
    const Offset o = d.sample(rng);
    ASSERT_GE(std::abs(o.i), 1);
    ASSERT_GE(std::abs(o.j), 1);
    ++counts[static_cast<std::size_t>(std::abs(o.i))];
  }
  for (int m = 1; m <= 3; ++m) {
    EXPECT_NEAR(counts[static_cast<std::size_t>(m)] / static_cast<double>(kDraws), 1.0 / 3.0, 0.01);
  }
}
