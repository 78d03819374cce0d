#include "liboost/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace liboost {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

template <typename T>
void require_finite(const Tensor<T>& t, const char* op) {
  if (!t.all_finite()) {
    throw NumericError(std::string(op) + ": non-finite input of shape " +
                       shape_string(t.shape()));
  }
}

void require(bool ok, const char* op, const Shape& a, const Shape& b) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": incompatible shapes " +
                     shape_string(a) + " and " + shape_string(b));
  }
}

template <typename T>
void same_tape(Var<T> a, Var<T> b, const char* op) {
  if (a.tape() != b.tape()) {
    throw Error(std::string(op) + ": operands live on different tapes");
  }
}

struct ConvGeometry {
  std::size_t batch, in_c, height, width;
  std::size_t out_c, kh, kw;
  std::size_t out_h, out_w;
  std::size_t stride, pad;

  std::size_t patch() const { return in_c * kh * kw; }
  std::size_t out_pixels() const { return out_h * out_w; }
};

ConvGeometry conv_geometry(const Shape& x, const Shape& w, Conv2dParams p) {
  require(x.size() == 4 && w.size() == 4 && x[1] == w[1], "conv2d", x, w);
  if (p.stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  require(x[2] + 2 * p.pad >= w[2] && x[3] + 2 * p.pad >= w[3], "conv2d", x, w);
  ConvGeometry g{};
  g.batch = x[0];
  g.in_c = x[1];
  g.height = x[2];
  g.width = x[3];
  g.out_c = w[0];
  g.kh = w[2];
  g.kw = w[3];
  g.stride = p.stride;
  g.pad = p.pad;
  g.out_h = (g.height + 2 * g.pad - g.kh) / g.stride + 1;
  g.out_w = (g.width + 2 * g.pad - g.kw) / g.stride + 1;
  return g;
}

// col[k][q], k = (ci, ky, kx), q = (oy, ox); zero outside the image.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col) {
  const std::size_t q_count = g.out_pixels();
  for (std::size_t ci = 0; ci < g.in_c; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        T* row = col + ((ci * g.kh + ky) * g.kw + kx) * q_count;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad);
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = image + (ci * g.height + static_cast<std::size_t>(iy)) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width))
                          ? T{0}
                          : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* image) {
  const std::size_t q_count = g.out_pixels();
  for (std::size_t ci = 0; ci < g.in_c; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const T* row = col + ((ci * g.kh + ky) * g.kw + kx) * q_count;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) continue;
          T* dst = image + (ci * g.height + static_cast<std::size_t>(iy)) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.width)) {
              dst[ix] += row[oy * g.out_w + ox];
            }
          }
        }
      }
    }
  }
}

// Dot product with eight interleaved partial sums, combined in a fixed
// order. Vectorises without reassociation flags and stays deterministic.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T lanes[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) lanes[l] += a[i + l] * b[i + l];
  }
  for (; i < n; ++i) lanes[i % 8] += a[i] * b[i];
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
         ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
}

// Input-gradient kernel shared by conv2d backward and conv2d_transpose.
// Per image: dcol = w^T dy, then scatter-add into dx.
template <typename T>
void conv_backward_data(const T* dy, const T* w, const ConvGeometry& g, T* dx) {
  const std::size_t patch = g.patch();
  const std::size_t q_count = g.out_pixels();
  std::vector<T> dcol(patch * q_count);
  for (std::size_t b = 0; b < g.batch; ++b) {
    std::fill(dcol.begin(), dcol.end(), T{0});
    const T* dy_b = dy + b * g.out_c * q_count;
    for (std::size_t co = 0; co < g.out_c; ++co) {
      const T* dy_row = dy_b + co * q_count;
      const T* w_row = w + co * patch;
      for (std::size_t k = 0; k < patch; ++k) {
        const T wv = w_row[k];
        T* dst = dcol.data() + k * q_count;
        for (std::size_t q = 0; q < q_count; ++q) dst[q] += wv * dy_row[q];
      }
    }
    col2im_add(dcol.data(), g, dx + b * g.in_c * g.height * g.width);
  }
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  same_tape(a, b, "matmul");
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require(av.rank() == 2 && bv.rank() == 2 && av.dim(1) == bv.dim(0), "matmul",
          av.shape(), bv.shape());
  require_finite(av, "matmul");
  require_finite(bv, "matmul");
  const std::size_t rows = av.dim(0), inner = av.dim(1), cols = bv.dim(1);
  Tensor<T> out({rows, cols});
  for (std::size_t i = 0; i < rows; ++i) {
    T* c = out.ptr() + i * cols;
    for (std::size_t k = 0; k < inner; ++k) {
      const T aik = av[i * inner + k];
      const T* brow = bv.ptr() + k * cols;
      for (std::size_t j = 0; j < cols; ++j) c[j] += aik * brow[j];
    }
  }
  return a.tape()->record(
      std::move(out), {a, b},
      [a, b, rows, inner, cols](Tape<T>& tape, const Tensor<T>& dc) {
        const Tensor<T>& av = a.value();
        const Tensor<T>& bv = b.value();
        if (a.requires_grad()) {
          Tensor<T>& da = tape.grad_buffer(a);
          for (std::size_t i = 0; i < rows; ++i) {
            const T* dci = dc.ptr() + i * cols;
            for (std::size_t k = 0; k < inner; ++k) {
              const T* brow = bv.ptr() + k * cols;
              da[i * inner + k] += dot(dci, brow, cols);
            }
          }
        }
        if (b.requires_grad()) {
          Tensor<T>& db = tape.grad_buffer(b);
          for (std::size_t i = 0; i < rows; ++i) {
            const T* dci = dc.ptr() + i * cols;
            for (std::size_t k = 0; k < inner; ++k) {
              const T aik = av[i * inner + k];
              T* dbrow = db.ptr() + k * cols;
              for (std::size_t j = 0; j < cols; ++j) dbrow[j] += aik * dci[j];
            }
          }
        }
      });
}

template <typename T>
Var<T> add_bias(Var<T> x, Var<T> b) {
  same_tape(x, b, "add_bias");
  const Tensor<T>& xv = x.value();
  const Tensor<T>& bv = b.value();
  require((xv.rank() == 2 || xv.rank() == 4) && bv.rank() == 1 &&
              xv.dim(1) == bv.dim(0),
          "add_bias", xv.shape(), bv.shape());
  require_finite(xv, "add_bias");
  require_finite(bv, "add_bias");
  const std::size_t batch = xv.dim(0), channels = xv.dim(1);
  const std::size_t inner = xv.size() / (batch * channels);
  Tensor<T> out = xv;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      T* p = out.ptr() + (n * channels + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) p[i] += bv[c];
    }
  }
  return x.tape()->record(
      std::move(out), {x, b},
      [x, b, batch, channels, inner](Tape<T>& tape, const Tensor<T>& dy) {
        if (x.requires_grad()) {
          Tensor<T>& dx = tape.grad_buffer(x);
          for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
        }
        if (b.requires_grad()) {
          Tensor<T>& db = tape.grad_buffer(b);
          for (std::size_t n = 0; n < batch; ++n) {
            for (std::size_t c = 0; c < channels; ++c) {
              const T* p = dy.ptr() + (n * channels + c) * inner;
              T acc{0};
              for (std::size_t i = 0; i < inner; ++i) acc += p[i];
              db[c] += acc;
            }
          }
        }
      });
}

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> w, Conv2dParams params) {
  same_tape(x, w, "conv2d");
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = w.value();
  const ConvGeometry g = conv_geometry(xv.shape(), wv.shape(), params);
  require_finite(xv, "conv2d");
  require_finite(wv, "conv2d");
  const std::size_t patch = g.patch();
  const std::size_t q_count = g.out_pixels();
  const std::size_t image_size = g.in_c * g.height * g.width;

  Tensor<T> out({g.batch, g.out_c, g.out_h, g.out_w});
  std::vector<T> col(patch * q_count);
  for (std::size_t b = 0; b < g.batch; ++b) {
    im2col(xv.ptr() + b * image_size, g, col.data());
    T* out_b = out.ptr() + b * g.out_c * q_count;
    for (std::size_t co = 0; co < g.out_c; ++co) {
      T* dst = out_b + co * q_count;
      const T* w_row = wv.ptr() + co * patch;
      for (std::size_t k = 0; k < patch; ++k) {
        const T wk = w_row[k];
        const T* src = col.data() + k * q_count;
        for (std::size_t q = 0; q < q_count; ++q) dst[q] += wk * src[q];
      }
    }
  }

  return x.tape()->record(
      std::move(out), {x, w},
      [x, w, g, image_size](Tape<T>& tape, const Tensor<T>& dy) {
        const std::size_t patch = g.patch();
        const std::size_t q_count = g.out_pixels();
        if (x.requires_grad()) {
          conv_backward_data(dy.ptr(), w.value().ptr(), g,
                             tape.grad_buffer(x).ptr());
        }
        if (w.requires_grad()) {
          Tensor<T>& dw = tape.grad_buffer(w);
          std::vector<T> col(patch * q_count);
          for (std::size_t b = 0; b < g.batch; ++b) {
            im2col(x.value().ptr() + b * image_size, g, col.data());
            const T* dy_b = dy.ptr() + b * g.out_c * q_count;
            for (std::size_t co = 0; co < g.out_c; ++co) {
              const T* dy_row = dy_b + co * q_count;
              T* dw_row = dw.ptr() + co * patch;
              for (std::size_t k = 0; k < patch; ++k) {
                const T* src = col.data() + k * q_count;
                dw_row[k] += dot(dy_row, src, q_count);
              }
            }
          }
        }
      });
}

template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& y, const Tensor<T>& w,
                           Conv2dParams params, std::size_t height,
                           std::size_t width) {
  const Shape x_shape{y.dim(0), w.dim(1), height, width};
  const ConvGeometry g = conv_geometry(x_shape, w.shape(), params);
  require(y.rank() == 4 && y.dim(1) == g.out_c && y.dim(2) == g.out_h &&
              y.dim(3) == g.out_w,
          "conv2d_transpose", y.shape(), w.shape());
  Tensor<T> x(x_shape);
  conv_backward_data(y.ptr(), w.ptr(), g, x.ptr());
  return x;
}

template <typename T>
Var<T> relu(Var<T> x) {
  const Tensor<T>& xv = x.value();
  require_finite(xv, "relu");
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > T{0} ? xv[i] : T{0};
  return x.tape()->record(std::move(out), {x},
                          [x](Tape<T>& tape, const Tensor<T>& dy) {
                            const Tensor<T>& xv = x.value();
                            Tensor<T>& dx = tape.grad_buffer(x);
                            for (std::size_t i = 0; i < dy.size(); ++i) {
                              if (xv[i] > T{0}) dx[i] += dy[i];
                            }
                          });
}

template <typename T>
Var<T> maxpool2x2(Var<T> x) {
  const Tensor<T>& xv = x.value();
  if (xv.rank() != 4 || xv.dim(2) < 2 || xv.dim(3) < 2) {
    throw ShapeError("maxpool2x2: expected [B,C,H>=2,W>=2], got " +
                     shape_string(xv.shape()));
  }
  require_finite(xv, "maxpool2x2");
  const std::size_t planes = xv.dim(0) * xv.dim(1);
  const std::size_t h = xv.dim(2), w = xv.dim(3);
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor<T> out({xv.dim(0), xv.dim(1), oh, ow});
  std::vector<std::size_t> source(out.size());
  for (std::size_t p = 0; p < planes; ++p) {
    const T* plane = xv.ptr() + p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (2 * oy) * w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (2 * oy + dy) * w + 2 * ox + dx;
            if (plane[idx] > plane[best]) best = idx;
          }
        }
        const std::size_t o = (p * oh + oy) * ow + ox;
        out[o] = plane[best];
        source[o] = p * h * w + best;
      }
    }
  }
  return x.tape()->record(
      std::move(out), {x},
      [x, source = std::move(source)](Tape<T>& tape, const Tensor<T>& dy) {
        Tensor<T>& dx = tape.grad_buffer(x);
        for (std::size_t o = 0; o < dy.size(); ++o) dx[source[o]] += dy[o];
      });
}

template <typename T>
Var<T> flatten(Var<T> x) {
  const Tensor<T>& xv = x.value();
  if (xv.rank() < 2) {
    throw ShapeError("flatten: expected a batch axis, got " + shape_string(xv.shape()));
  }
  Tensor<T> out = xv.reshaped({xv.dim(0), xv.size() / xv.dim(0)});
  return x.tape()->record(std::move(out), {x},
                          [x](Tape<T>& tape, const Tensor<T>& dy) {
                            Tensor<T>& dx = tape.grad_buffer(x);
                            for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
                          });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  same_tape(a, b, "add");
  require(a.shape() == b.shape(), "add", a.shape(), b.shape());
  require_finite(a.value(), "add");
  require_finite(b.value(), "add");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape()->record(std::move(out), {a, b},
                          [a, b](Tape<T>& tape, const Tensor<T>& dy) {
                            for (Var<T> v : {a, b}) {
                              if (!v.requires_grad()) continue;
                              Tensor<T>& dv = tape.grad_buffer(v);
                              for (std::size_t i = 0; i < dy.size(); ++i) dv[i] += dy[i];
                            }
                          });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  same_tape(a, b, "mul");
  require(a.shape() == b.shape(), "mul", a.shape(), b.shape());
  require_finite(a.value(), "mul");
  require_finite(b.value(), "mul");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.tape()->record(std::move(out), {a, b},
                          [a, b](Tape<T>& tape, const Tensor<T>& dy) {
                            if (a.requires_grad()) {
                              Tensor<T>& da = tape.grad_buffer(a);
                              for (std::size_t i = 0; i < dy.size(); ++i)
                                da[i] += dy[i] * b.value()[i];
                            }
                            if (b.requires_grad()) {
                              Tensor<T>& db = tape.grad_buffer(b);
                              for (std::size_t i = 0; i < dy.size(); ++i)
                                db[i] += dy[i] * a.value()[i];
                            }
                          });
}

template <typename T>
Var<T> scale(Var<T> x, T factor) {
  require_finite(x.value(), "scale");
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v *= factor;
  return x.tape()->record(std::move(out), {x},
                          [x, factor](Tape<T>& tape, const Tensor<T>& dy) {
                            Tensor<T>& dx = tape.grad_buffer(x);
                            for (std::size_t i = 0; i < dy.size(); ++i)
                              dx[i] += factor * dy[i];
                          });
}

template <typename T>
Var<T> sum(Var<T> x) {
  require_finite(x.value(), "sum");
  T acc{0};
  for (T v : x.value().data()) acc += v;
  return x.tape()->record(Tensor<T>(Shape{}, acc), {x},
                          [x](Tape<T>& tape, const Tensor<T>& dy) {
                            Tensor<T>& dx = tape.grad_buffer(x);
                            for (auto& v : dx.data()) v += dy[0];
                          });
}

template <typename T>
Var<T> select_rows(Var<T> x, std::vector<std::size_t> rows) {
  const Tensor<T>& xv = x.value();
  if (xv.rank() < 1 || rows.empty()) {
    throw ShapeError("select_rows: need a leading axis and at least one row");
  }
  const std::size_t row_size = xv.size() / xv.dim(0);
  Shape shape = xv.shape();
  shape[0] = rows.size();
  std::vector<T> data;
  data.reserve(rows.size() * row_size);
  for (std::size_t r : rows) {
    if (r >= xv.dim(0)) {
      throw ShapeError("select_rows: row " + std::to_string(r) +
                       " out of range for " + shape_string(xv.shape()));
    }
    auto first = xv.data().begin() + static_cast<std::ptrdiff_t>(r * row_size);
    data.insert(data.end(), first, first + static_cast<std::ptrdiff_t>(row_size));
  }
  return x.tape()->record(
      Tensor<T>(std::move(shape), std::move(data)), {x},
      [x, rows = std::move(rows), row_size](Tape<T>& tape, const Tensor<T>& dy) {
        Tensor<T>& dx = tape.grad_buffer(x);
        for (std::size_t n = 0; n < rows.size(); ++n) {
          for (std::size_t i = 0; i < row_size; ++i) {
            dx[rows[n] * row_size + i] += dy[n * row_size + i];
          }
        }
      });
}

namespace {

template <typename T>
void check_labels(const Tensor<T>& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2 || logits.dim(1) < 2) {
    throw ShapeError("cross_entropy: expected logits [B,C>=2], got " +
                     shape_string(logits.shape()));
  }
  if (labels.size() != logits.dim(0)) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(logits.dim(0)) + " rows");
  }
  for (std::size_t y : labels) {
    if (y >= logits.dim(1)) {
      throw DataError("cross_entropy: label " + std::to_string(y) +
                      " out of range for " + std::to_string(logits.dim(1)) +
                      " classes");
    }
  }
}

// Writes exp(l_i - max) into `weights` and returns (max, sum of the
// non-argmax terms). loss = (max - l_y) + log1p(rest) stays accurate when the
// labelled logit dominates.
template <typename T>
std::pair<T, T> softmax_terms(const T* row, std::size_t classes, T* weights) {
  const std::size_t top = argmax(std::span<const T>(row, classes));
  const T m = row[top];
  T rest{0};
  for (std::size_t c = 0; c < classes; ++c) {
    weights[c] = std::exp(row[c] - m);
    if (c != top) rest += weights[c];
  }
  return {m, rest};
}

}  // namespace

template <typename T>
std::size_t argmax(std::span<const T> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

template <typename T>
std::vector<T> row_cross_entropy(const Tensor<T>& logits,
                                 std::span<const std::size_t> labels) {
  check_labels(logits, labels);
  require_finite(logits, "cross_entropy");
  const std::size_t classes = logits.dim(1);
  std::vector<T> weights(classes);
  std::vector<T> losses(logits.dim(0));
  for (std::size_t n = 0; n < losses.size(); ++n) {
    const T* row = logits.ptr() + n * classes;
    auto [m, rest] = softmax_terms(row, classes, weights.data());
    losses[n] = (m - row[labels[n]]) + std::log1p(rest);
  }
  return losses;
}

template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const std::size_t> labels,
                     Reduction reduction) {
  const std::vector<T> losses = row_cross_entropy(logits.value(), labels);
  T total{0};
  for (T l : losses) total += l;
  if (reduction == Reduction::kMean) total /= static_cast<T>(losses.size());
  if (!std::isfinite(total)) throw NumericError("cross_entropy: non-finite loss");
  return logits.tape()->record(
      Tensor<T>(Shape{}, total), {logits},
      [logits, owned = std::vector<std::size_t>(labels.begin(), labels.end()),
       reduction](Tape<T>& tape, const Tensor<T>& dy) {
        const Tensor<T>& lv = logits.value();
        const std::size_t rows = lv.dim(0), classes = lv.dim(1);
        Tensor<T>& dl = tape.grad_buffer(logits);
        std::vector<T> weights(classes);
        for (std::size_t n = 0; n < rows; ++n) {
          const T* row = lv.ptr() + n * classes;
          const T rest = softmax_terms(row, classes, weights.data()).second;
          const T denom = T{1} + rest;
          for (std::size_t c = 0; c < classes; ++c) {
            T g = weights[c] / denom;
            if (c == owned[n]) g -= T{1};
            g *= dy[0];
            if (reduction == Reduction::kMean) g /= static_cast<T>(rows);
            dl[n * classes + c] += g;
          }
        }
      });
}

#define LIBOOST_INSTANTIATE(T)                                                  \
  template Var<T> matmul(Var<T>, Var<T>);                                       \
  template Var<T> add_bias(Var<T>, Var<T>);                                     \
  template Var<T> conv2d(Var<T>, Var<T>, Conv2dParams);                         \
  template Var<T> relu(Var<T>);                                                 \
  template Var<T> maxpool2x2(Var<T>);                                           \
  template Var<T> flatten(Var<T>);                                              \
  template Var<T> add(Var<T>, Var<T>);                                          \
  template Var<T> mul(Var<T>, Var<T>);                                          \
  template Var<T> scale(Var<T>, T);                                             \
  template Var<T> sum(Var<T>);                                                  \
  template Var<T> select_rows(Var<T>, std::vector<std::size_t>);                \
  template Var<T> cross_entropy(Var<T>, std::span<const std::size_t>, Reduction); \
  template std::vector<T> row_cross_entropy(const Tensor<T>&,                   \
                                            std::span<const std::size_t>);      \
  template Tensor<T> conv2d_transpose(const Tensor<T>&, const Tensor<T>&,       \
                                      Conv2dParams, std::size_t, std::size_t);  \
  template std::size_t argmax(std::span<const T>);

LIBOOST_INSTANTIATE(float)
LIBOOST_INSTANTIATE(double)

#undef LIBOOST_INSTANTIATE

}  // namespace liboost
