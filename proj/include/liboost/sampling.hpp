#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "liboost/rng.hpp"
#include "liboost/translate.hpp"

namespace liboost {

enum class OffsetKind { kUniform, kNormal, kLogarithmic, kFullGrid };

// How a magnitude draw becomes a 2-D offset. kRing: one magnitude m, then a
// uniform cell of the Chebyshev ring max(|i|,|j|) = m. kPerAxis: i and j
// each get an independent magnitude and a random sign.
enum class OffsetMode { kRing, kPerAxis };

std::string_view offset_kind_name(OffsetKind kind);
OffsetKind parse_offset_kind(std::string_view name);
std::string_view offset_mode_name(OffsetMode mode);
OffsetMode parse_offset_mode(std::string_view name);

// Distribution over translation offsets bounded by k.
//
// Magnitude kinds (Uniform, Normal, Logarithmic) put a pmf on m in 1..k and
// never produce (0,0). For k = 6 Normal and Logarithmic use the tabulated
// values
//   Normal      0.44 0.30 0.15 0.06 0.02 0.01
//   Logarithmic 0.39 0.27 0.16 0.11 0.05 0.02
// renormalised to sum to one. Other k use extensions: Normal is
// proportional to exp(-m^2/8); Logarithmic stretches the piecewise-linear
// cumulative curve of the k = 6 table over 1..k.
//
// FullGrid is uniform over all (2k+1)^2 offsets, (0,0) included.
//
// With k = 0 every kind yields (0,0) without touching the generator.
class OffsetDistribution {
 public:
  OffsetDistribution(OffsetKind kind, int k, OffsetMode mode = OffsetMode::kRing);

  OffsetKind kind() const { return kind_; }
  OffsetMode mode() const { return mode_; }
  int k() const { return k_; }

  // Probability of magnitude m (1 <= m <= k) for magnitude kinds; for
  // FullGrid, the probability that max(|i|,|j|) = m, 0 <= m <= k.
  double pmf(int m) const;

  Offset sample(Rng& rng) const;

 private:
  int draw_magnitude(Rng& rng) const;

  OffsetKind kind_;
  int k_;
  OffsetMode mode_;
  std::vector<double> pmf_;  // index m-1
  std::vector<double> cdf_;
};

// Row-major enumeration of {-k..k}^2: j outer, i inner.
std::vector<Offset> full_grid(int k);

}  // namespace liboost
