#pragma once

#include <algorithm>
#include <cstdlib>

#include "liboost/tensor.hpp"

namespace liboost {

// Integer pixel shift: i moves content right (last axis), j moves it down
// (second-to-last axis).
struct Offset {
  int i = 0;
  int j = 0;

  int magnitude() const { return std::max(std::abs(i), std::abs(j)); }
  friend bool operator==(const Offset&, const Offset&) = default;
};

// out[..., y, x] = t[..., y - j, x - i] where the source is inside the image,
// zero elsewhere. Works on any tensor of rank >= 2; the leading axes are
// carried along unchanged. Requires |i| < width and |j| < height.
template <typename T>
Tensor<T> translate(const Tensor<T>& t, int i, int j);

template <typename T>
Tensor<T> translate(const Tensor<T>& t, Offset o) {
  return translate(t, o.i, o.j);
}

// Transpose of translate(., i, j), which is translate(., -i, -j).
template <typename T>
Tensor<T> translate_adjoint(const Tensor<T>& g, int i, int j) {
  return translate(g, -i, -j);
}

template <typename T>
Tensor<T> translate_adjoint(const Tensor<T>& g, Offset o) {
  return translate(g, -o.i, -o.j);
}

}  // namespace liboost
