#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "liboost/ops.hpp"
#include "liboost/rng.hpp"
#include "liboost/tensor.hpp"
#include "liboost/zoo.hpp"

namespace liboost::testing {

template <typename T>
Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("liboost-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// logits = flatten(x) @ W; W is [C*H*W, classes].
class LinearModel final : public LogitModel {
 public:
  LinearModel(Shape input, Tensor<double> weight)
      : input_(std::move(input)), w_(std::move(weight)) {}

  Shape input_shape() const override { return input_; }
  std::size_t classes() const override { return w_.dim(1); }
  Var<float> logits(Tape<float>& tape, Var<float> batch) const override {
    return matmul(flatten(batch), tape.constant(w_.cast<float>()));
  }
  Var<double> logits(Tape<double>& tape, Var<double> batch) const override {
    return matmul(flatten(batch), tape.constant(w_));
  }

 private:
  Shape input_;
  Tensor<double> w_;
};

// Two classes with logits [0, sum(x)]: the loss for label 0 grows with
// every pixel, so its input gradient is positive everywhere.
inline LinearModel sum_model(const Shape& input) {
  const std::size_t d = shape_size(input);
  Tensor<double> w({d, 2});
  for (std::size_t r = 0; r < d; ++r) w[r * 2 + 1] = 1.0;
  return LinearModel(input, w);
}

}  // namespace liboost::testing
