#include "liboost/sampling.hpp"

#include <array>
#include <cmath>
#include <string>

#include "liboost/errors.hpp"

namespace liboost {

namespace {

constexpr std::array<double, 6> kNormalTable{0.44, 0.30, 0.15, 0.06, 0.02, 0.01};
constexpr std::array<double, 6> kLogTable{0.39, 0.27, 0.16, 0.11, 0.05, 0.02};

std::vector<double> normalised(std::vector<double> w) {
  double total = 0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> normal_pmf(int k) {
  if (k == 6) return normalised({kNormalTable.begin(), kNormalTable.end()});
  std::vector<double> w;
  for (int m = 1; m <= k; ++m) w.push_back(std::exp(-static_cast<double>(m * m) / 8.0));
  return normalised(std::move(w));
}

std::vector<double> logarithmic_pmf(int k) {
  const auto table = normalised({kLogTable.begin(), kLogTable.end()});
  if (k == 6) return table;
  // Cumulative curve of the table at 0..6, evaluated by linear
  // interpolation at 6m/k.
  std::array<double, 7> cumulative{};
  for (int m = 1; m <= 6; ++m) cumulative[m] = cumulative[m - 1] + table[m - 1];
  auto curve = [&](double s) {
    const int lo = std::min(5, static_cast<int>(std::floor(s)));
    const double frac = s - lo;
    return cumulative[lo] + frac * (cumulative[lo + 1] - cumulative[lo]);
  };
  std::vector<double> w;
  for (int m = 1; m <= k; ++m) {
    w.push_back(curve(6.0 * m / k) - curve(6.0 * (m - 1) / k));
  }
  return normalised(std::move(w));
}

// Cell c in [0, 8m) of the ring max(|i|,|j|) = m: top row, bottom row, then
// the left and right columns without their corners.
Offset ring_cell(int m, int c) {
  const int row = 2 * m + 1;
  if (c < row) return {c - m, -m};
  c -= row;
  if (c < row) return {c - m, m};
  c -= row;
  const int side = 2 * m - 1;
  if (c < side) return {-m, c - m + 1};
  c -= side;
  return {m, c - m + 1};
}

}  // namespace

std::string_view offset_kind_name(OffsetKind kind) {
  switch (kind) {
    case OffsetKind::kUniform: return "uniform";
    case OffsetKind::kNormal: return "normal";
    case OffsetKind::kLogarithmic: return "logarithmic";
    case OffsetKind::kFullGrid: return "fullgrid";
  }
  return "?";
}

OffsetKind parse_offset_kind(std::string_view name) {
  for (auto kind : {OffsetKind::kUniform, OffsetKind::kNormal, OffsetKind::kLogarithmic,
                    OffsetKind::kFullGrid}) {
    if (offset_kind_name(kind) == name) return kind;
  }
  throw ConfigError("unknown offset distribution '" + std::string(name) +
                    "' (expected uniform, normal, logarithmic or fullgrid)");
}

std::string_view offset_mode_name(OffsetMode mode) {
  return mode == OffsetMode::kRing ? "ring" : "per_axis";
}

OffsetMode parse_offset_mode(std::string_view name) {
  if (name == "ring") return OffsetMode::kRing;
  if (name == "per_axis") return OffsetMode::kPerAxis;
  throw ConfigError("unknown offset mode '" + std::string(name) +
                    "' (expected ring or per_axis)");
}

OffsetDistribution::OffsetDistribution(OffsetKind kind, int k, OffsetMode mode)
    : kind_(kind), k_(k), mode_(mode) {
  if (k < 0) throw ConfigError("offset distribution: k must be >= 0");
  if (k == 0) return;
  switch (kind) {
    case OffsetKind::kUniform: pmf_.assign(static_cast<std::size_t>(k), 1.0 / k); break;
    case OffsetKind::kNormal: pmf_ = normal_pmf(k); break;
    case OffsetKind::kLogarithmic: pmf_ = logarithmic_pmf(k); break;
    case OffsetKind::kFullGrid: return;
  }
  double running = 0;
  for (double p : pmf_) cdf_.push_back(running += p);
  cdf_.back() = 1.0;
}

double OffsetDistribution::pmf(int m) const {
  if (kind_ == OffsetKind::kFullGrid) {
    if (m < 0 || m > k_) throw ConfigError("pmf: magnitude out of range");
    const double cells = m == 0 ? 1.0 : 8.0 * m;
    return cells / ((2.0 * k_ + 1) * (2.0 * k_ + 1));
  }
  if (m < 1 || m > k_) {
    throw ConfigError("pmf: magnitude " + std::to_string(m) + " outside 1.." +
                      std::to_string(k_));
  }
  return pmf_[static_cast<std::size_t>(m - 1)];
}

int OffsetDistribution::draw_magnitude(Rng& rng) const {
  const double u = rng.uniform();
  for (std::size_t m = 0; m < cdf_.size(); ++m) {
    if (u < cdf_[m]) return static_cast<int>(m) + 1;
  }
  return k_;
}

Offset OffsetDistribution::sample(Rng& rng) const {
  if (k_ == 0) return {0, 0};
  if (kind_ == OffsetKind::kFullGrid) {
    const int i = static_cast<int>(rng.between(-k_, k_));
    const int j = static_cast<int>(rng.between(-k_, k_));
    return {i, j};
  }
  if (mode_ == OffsetMode::kRing) {
    const int m = draw_magnitude(rng);
    return ring_cell(m, static_cast<int>(rng.below(static_cast<std::uint64_t>(8 * m))));
  }
  auto signed_draw = [&] {
    const int m = draw_magnitude(rng);
    return rng.below(2) == 0 ? -m : m;
  };
  const int i = signed_draw();
  const int j = signed_draw();
  return {i, j};
}

std::vector<Offset> full_grid(int k) {
  if (k < 0) throw ConfigError("full_grid: k must be >= 0");
  std::vector<Offset> grid;
  grid.reserve(static_cast<std::size_t>((2 * k + 1) * (2 * k + 1)));
  for (int j = -k; j <= k; ++j) {
    for (int i = -k; i <= k; ++i) grid.push_back({i, j});
  }
  return grid;
}

}  // namespace liboost
