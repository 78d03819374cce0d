#include "liboost/translate.hpp"

#include <string>

namespace liboost {

template <typename T>
Tensor<T> translate(const Tensor<T>& t, int i, int j) {
  if (t.rank() < 2) {
    throw ShapeError("translate: need at least 2 axes, got " + shape_string(t.shape()));
  }
  const auto height = static_cast<int>(t.dim(t.rank() - 2));
  const auto width = static_cast<int>(t.dim(t.rank() - 1));
  if (std::abs(i) >= width || std::abs(j) >= height) {
    throw ShapeError("translate: offset (" + std::to_string(i) + "," + std::to_string(j) +
                     ") not smaller than image extent " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  const std::size_t plane = static_cast<std::size_t>(height * width);
  const std::size_t planes = t.size() / plane;
  Tensor<T> out(t.shape(), T{0});
  // Rows y in [max(0, j), min(H, H + j)) receive source row y - j; columns
  // likewise with i.
  const int y0 = std::max(0, j), y1 = std::min(height, height + j);
  const int x0 = std::max(0, i), x1 = std::min(width, width + i);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = t.ptr() + p * plane;
    T* dst = out.ptr() + p * plane;
    for (int y = y0; y < y1; ++y) {
      const T* s = src + (y - j) * width + (x0 - i);
      std::copy(s, s + (x1 - x0), dst + y * width + x0);
    }
  }
  return out;
}

template Tensor<float> translate(const Tensor<float>&, int, int);
template Tensor<double> translate(const Tensor<double>&, int, int);

}  // namespace liboost
