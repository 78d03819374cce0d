#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "liboost/autodiff.hpp"

namespace liboost {

enum class Reduction { kMean, kSum };

struct Conv2dParams {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

// Differentiable primitives. Every op checks its inputs for shape
// conformance and finiteness, and records itself on the inputs' tape.

// a[B,K] x b[K,N] -> [B,N]
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

// x[B,N] + b[N], or x[B,C,H,W] + b[C] per channel.
template <typename T>
Var<T> add_bias(Var<T> x, Var<T> b);

// x[B,Cin,H,W] (*) w[Cout,Cin,KH,KW] -> [B,Cout,Ho,Wo], cross-correlation.
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> w, Conv2dParams params = {});

template <typename T>
Var<T> relu(Var<T> x);

// Non-overlapping 2x2 max pooling; odd trailing rows/cols are dropped.
// Ties resolve to the first element in row-major order.
template <typename T>
Var<T> maxpool2x2(Var<T> x);

// [B, ...] -> [B, prod(...)]
template <typename T>
Var<T> flatten(Var<T> x);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

template <typename T>
Var<T> mul(Var<T> a, Var<T> b);

template <typename T>
Var<T> scale(Var<T> x, T factor);

template <typename T>
Var<T> sum(Var<T> x);

// Gathers rows of the leading axis.
template <typename T>
Var<T> select_rows(Var<T> x, std::vector<std::size_t> rows);

// Softmax cross-entropy of logits[B,C] against class indices.
template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const std::size_t> labels,
                     Reduction reduction = Reduction::kMean);

// Per-row -log softmax(logits)[label], the same arithmetic cross_entropy
// uses for its forward value.
template <typename T>
std::vector<T> row_cross_entropy(const Tensor<T>& logits,
                                 std::span<const std::size_t> labels);

// Transpose of conv2d with respect to its input: maps y[B,Cout,Ho,Wo] back
// to [B,Cin,height,width]. This is the kernel conv2d's backward uses.
template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& y, const Tensor<T>& w,
                           Conv2dParams params, std::size_t height,
                           std::size_t width);

// Index of the largest element; ties go to the lowest index.
template <typename T>
std::size_t argmax(std::span<const T> values);

}  // namespace liboost
