#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "liboost/gradcheck.hpp"
#include "liboost/ops.hpp"
#include "test_util.hpp"

namespace liboost {
namespace {

using testing::random_tensor;

constexpr double kH = 1e-5;
constexpr double kTol = 1e-5;
constexpr int kCases = 100;

// Reduces any tensor to a scalar through a fixed random projection, so the
// check exercises a non-uniform upstream gradient.
Var<double> project(Var<double> y, std::uint64_t seed) {
  Rng rng(seed);
  Tape<double>& tape = *y.tape();
  return sum(mul(y, tape.constant(random_tensor<double>(y.shape(), rng))));
}

TEST(Ops, ReluExample) {
  Tape<float> tape;
  auto y = relu(tape.constant(Tensor<float>::from({3}, {-1, 0, 2})));
  EXPECT_EQ(y.value(), Tensor<float>::from({3}, {0, 0, 2}));
}

TEST(Ops, IdentityKernelConvolutionKeepsInput) {
  Rng rng(1);
  Tape<float> tape;
  auto x = random_tensor<float>({1, 1, 4, 4}, rng);
  Tensor<float> w({1, 1, 3, 3});
  w[4] = 1;
  auto y = conv2d(tape.constant(x), tape.constant(w), {1, 1});
  EXPECT_TRUE(bit_identical(y.value(), x));
}

TEST(Ops, MaxpoolExample) {
  Tape<float> tape;
  auto y = maxpool2x2(tape.constant(Tensor<float>::from({1, 1, 2, 2}, {1, 2, 3, 4})));
  EXPECT_EQ(y.value(), Tensor<float>::from({1, 1, 1, 1}, {4}));
}

TEST(Ops, ConvOutputShapeFollowsStrideAndPadding) {
  Tape<float> tape;
  auto x = tape.constant(Tensor<float>({2, 3, 9, 7}));
  auto w = tape.constant(Tensor<float>({4, 3, 3, 3}));
  EXPECT_EQ(conv2d(x, w, {2, 1}).shape(), (Shape{2, 4, 5, 4}));
  EXPECT_EQ(conv2d(x, w, {1, 0}).shape(), (Shape{2, 4, 7, 5}));
}

TEST(Ops, MatmulShapeMismatchNamesBothShapes) {
  Tape<float> tape;
  auto a = tape.constant(Tensor<float>({2, 3}));
  auto b = tape.constant(Tensor<float>({4, 5}));
  try {
    matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4x5]"), std::string::npos) << msg;
  }
}

TEST(Ops, NonFiniteInputIsRejected) {
  Tape<float> tape;
  auto x = tape.constant(Tensor<float>::from({2}, {1, std::numeric_limits<float>::quiet_NaN()}));
  EXPECT_THROW(relu(x), NumericError);
  auto y = tape.constant(Tensor<float>::from({1, 2}, {std::numeric_limits<float>::infinity(), 0}));
  EXPECT_THROW(matmul(y, tape.constant(Tensor<float>({2, 2}))), NumericError);
}

TEST(Ops, ConvRejectsZeroStride) {
  Tape<float> tape;
  auto x = tape.constant(Tensor<float>({1, 1, 4, 4}));
  auto w = tape.constant(Tensor<float>({1, 1, 3, 3}));
  EXPECT_THROW(conv2d(x, w, {0, 0}), ShapeError);
  auto w_bad = tape.constant(Tensor<float>({1, 2, 3, 3}));
  EXPECT_THROW(conv2d(x, w_bad), ShapeError);
}

TEST(CrossEntropy, UniformLogitsGiveLn2) {
  Tape<double> tape;
  const std::size_t label[] = {0};
  auto l = cross_entropy(tape.constant(Tensor<double>::from({1, 2}, {0, 0})), label);
  EXPECT_NEAR(l.value()[0], 0.69314718055994530942, 1e-15);
}

TEST(CrossEntropy, MatchesHighPrecisionReference) {
  // Reference values computed with 50-digit arithmetic.
  Tape<double> tape;
  const std::size_t y0[] = {0};
  const std::size_t y2[] = {2};
  auto a = cross_entropy(tape.constant(Tensor<double>::from({1, 2}, {10, -10})), y0);
  EXPECT_NEAR(a.value()[0], 2.0611536203143807032e-9, 1e-22);
  auto b = cross_entropy(tape.constant(Tensor<double>::from({1, 3}, {1, 2, 3})), y2);
  EXPECT_NEAR(b.value()[0], 0.40760596444438030448, 1e-15);

  Tape<float> ftape;
  auto c = cross_entropy(ftape.constant(Tensor<float>::from({1, 2}, {10, -10})), y0);
  EXPECT_NEAR(c.value()[0], 2.0611536e-9f, 1e-15f);
}

TEST(CrossEntropy, MeanOverBatch) {
  Tape<double> tape;
  const std::size_t labels[] = {0, 2};
  auto logits = Tensor<double>::from({2, 3}, {0, 0, 0, 1, 2, 3});
  auto mean = cross_entropy(tape.constant(logits), labels);
  auto total = cross_entropy(tape.constant(logits), labels, Reduction::kSum);
  const double expected = (std::log(3.0) + 0.40760596444438030448) / 2;
  EXPECT_NEAR(mean.value()[0], expected, 1e-14);
  EXPECT_NEAR(total.value()[0], 2 * expected, 1e-14);
  EXPECT_GT(mean.value()[0], 0);
}

TEST(CrossEntropy, OutOfRangeLabel) {
  Tape<double> tape;
  const std::size_t bad[] = {3};
  EXPECT_THROW(cross_entropy(tape.constant(Tensor<double>({1, 3})), bad), DataError);
}

TEST(Backward, SumGivesOnes) {
  Tape<double> tape;
  Rng rng(2);
  auto x = tape.variable(random_tensor<double>({2, 3, 4}, rng));
  tape.backward(sum(x));
  EXPECT_EQ(tape.grad(x), Tensor<double>({2, 3, 4}, 1.0));
}

TEST(Backward, HalfSumOfSquares) {
  Tape<double> tape;
  auto x = tape.variable(Tensor<double>::from({2}, {3, -2}));
  tape.backward(scale(sum(mul(x, x)), 0.5));
  EXPECT_EQ(tape.grad(x), Tensor<double>::from({2}, {3, -2}));
}

TEST(Backward, RequiresRecordedScalar) {
  Tape<double> tape;
  auto x = tape.variable(Tensor<double>::from({1}, {1}));
  EXPECT_THROW(tape.backward(x), Error);
  auto v = tape.variable(Tensor<double>({3}));
  EXPECT_THROW(tape.backward(relu(v)), Error);
  auto s = sum(v);
  tape.backward(s);
  EXPECT_THROW(tape.backward(s), Error);
}

TEST(Backward, ReluSubgradientAtZeroIsZero) {
  Tape<double> tape;
  auto x = tape.variable(Tensor<double>::from({4}, {-1, 0, 1e-300, 2}));
  tape.backward(sum(relu(x)));
  EXPECT_EQ(tape.grad(x), Tensor<double>::from({4}, {0, 0, 1, 1}));
}

TEST(Backward, RandomTwoLayerNetInputGradient) {
  Rng rng(3);
  for (int c = 0; c < 20; ++c) {
    auto w1 = random_tensor<double>({6, 8}, rng);
    auto b1 = random_tensor<double>({8}, rng);
    auto w2 = random_tensor<double>({8, 4}, rng);
    const std::vector<std::size_t> labels{1, 3};
    auto f = [&](Tape<double>& t, Var<double> x) {
      auto h = relu(add_bias(matmul(x, t.constant(w1)), t.constant(b1)));
      return cross_entropy(matmul(h, t.constant(w2)), labels);
    };
    EXPECT_LT(check_gradient(f, random_tensor<double>({2, 6}, rng), kH), kTol);
  }
}

TEST(GradCheck, Examples) {
  auto squares = [](Tape<double>&, Var<double> x) { return sum(mul(x, x)); };
  EXPECT_LT(check_gradient(squares, Tensor<double>::from({3}, {1, 2, 3}), kH), 1e-8);
  auto constant = [](Tape<double>& t, Var<double>) {
    return t.constant(Tensor<double>(Shape{}, 5.0));
  };
  EXPECT_EQ(check_gradient(constant, Tensor<double>::from({2}, {1, 2}), kH), 0.0);
  EXPECT_THROW(check_gradient(squares, Tensor<double>::from({1}, {1}), 0.0), Error);
}

// Every differentiable primitive against central differences, with respect
// to each of its inputs, over at least 100 random instances.
class PrimitiveGradient : public ::testing::TestWithParam<int> {};

TEST_P(PrimitiveGradient, MatchesFiniteDifferences) {
  const int op = GetParam();
  Rng rng(100 + static_cast<std::uint64_t>(op));
  double worst = 0;
  for (int c = 0; c < kCases; ++c) {
    const auto s = static_cast<std::uint64_t>(c);
    TapedFunction f;
    Tensor<double> point;
    switch (op) {
      case 0: {  // matmul, left operand
        auto b = random_tensor<double>({4, 3}, rng);
        point = random_tensor<double>({2, 4}, rng);
        f = [b, s](Tape<double>& t, Var<double> x) { return project(matmul(x, t.constant(b)), s); };
        break;
      }
      case 1: {  // matmul, right operand
        auto a = random_tensor<double>({2, 4}, rng);
        point = random_tensor<double>({4, 3}, rng);
        f = [a, s](Tape<double>& t, Var<double> x) { return project(matmul(t.constant(a), x), s); };
        break;
      }
      case 2: {  // conv2d, input, stride and padding varied
        const std::size_t stride = 1 + c % 2, pad = c % 3 == 0 ? 0 : 1;
        auto w = random_tensor<double>({3, 2, 3, 3}, rng);
        point = random_tensor<double>({2, 2, 6, 5}, rng);
        f = [w, stride, pad, s](Tape<double>& t, Var<double> x) {
          return project(conv2d(x, t.constant(w), {stride, pad}), s);
        };
        break;
      }
      case 3: {  // conv2d, weights
        auto in = random_tensor<double>({2, 2, 5, 5}, rng);
        point = random_tensor<double>({3, 2, 3, 3}, rng);
        f = [in, s](Tape<double>& t, Var<double> w) {
          return project(conv2d(t.constant(in), w, {1, 1}), s);
        };
        break;
      }
      case 4:  // relu
        point = random_tensor<double>({3, 7}, rng);
        f = [s](Tape<double>&, Var<double> x) { return project(relu(x), s); };
        break;
      case 5:  // maxpool2x2, odd sizes included
        point = random_tensor<double>({2, 2, 5, 4}, rng);
        f = [s](Tape<double>&, Var<double> x) { return project(maxpool2x2(x), s); };
        break;
      case 6: {  // add_bias, input (rank 4) and bias (rank 2)
        auto b = random_tensor<double>({3}, rng);
        point = random_tensor<double>({2, 3, 2, 2}, rng);
        f = [b, s](Tape<double>& t, Var<double> x) { return project(add_bias(x, t.constant(b)), s); };
        break;
      }
      case 7: {
        auto x0 = random_tensor<double>({4, 3}, rng);
        point = random_tensor<double>({3}, rng);
        f = [x0, s](Tape<double>& t, Var<double> b) { return project(add_bias(t.constant(x0), b), s); };
        break;
      }
      case 8:  // flatten
        point = random_tensor<double>({2, 3, 2, 2}, rng);
        f = [s](Tape<double>&, Var<double> x) { return project(flatten(x), s); };
        break;
      case 9: {  // add, mul, scale
        auto other = random_tensor<double>({3, 4}, rng);
        point = random_tensor<double>({3, 4}, rng);
        f = [other, s](Tape<double>& t, Var<double> x) {
          auto o = t.constant(other);
          return project(scale(add(mul(x, o), mul(x, x)), -1.5), s);
        };
        break;
      }
      case 10: {  // select_rows with a repeated row
        point = random_tensor<double>({4, 3}, rng);
        f = [s](Tape<double>&, Var<double> x) { return project(select_rows(x, {2, 0, 2}), s); };
        break;
      }
      case 11: {  // cross_entropy, both reductions, wide logit range
        point = random_tensor<double>({3, 5}, rng, -8, 8);
        const std::vector<std::size_t> labels{s % 5, (s + 1) % 5, (s + 3) % 5};
        const Reduction r = c % 2 == 0 ? Reduction::kMean : Reduction::kSum;
        f = [labels, r](Tape<double>&, Var<double> x) { return cross_entropy(x, labels, r); };
        break;
      }
      default:
        FAIL();
    }
    worst = std::max(worst, check_gradient(f, point, kH));
  }
  EXPECT_LT(worst, kTol);
}

INSTANTIATE_TEST_SUITE_P(AllPrimitives, PrimitiveGradient, ::testing::Range(0, 12));

TEST(ConvAdjoint, InnerProductIdentity) {
  Rng rng(5);
  for (int c = 0; c < 50; ++c) {
    const Conv2dParams p{1 + static_cast<std::size_t>(c % 2), static_cast<std::size_t>(c % 3)};
    auto x = random_tensor<double>({2, 3, 7, 6}, rng);
    auto w = random_tensor<double>({4, 3, 3, 3}, rng);
    Tape<double> tape;
    auto y = conv2d(tape.constant(x), tape.constant(w), p).value();
    auto g = random_tensor<double>(y.shape(), rng);
    auto xt = conv2d_transpose(g, w, p, 7, 6);
    ASSERT_EQ(xt.shape(), x.shape());
    const double lhs = inner_product(y, g);
    const double rhs = inner_product(x, xt);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Argmax, LowestIndexOnTies) {
  const std::vector<float> tie{0.5f, 0.5f};
  EXPECT_EQ(argmax<float>(tie), 0u);
  const std::vector<float> second{0.1f, 0.9f};
  EXPECT_EQ(argmax<float>(second), 1u);
}

TEST(Tensor, RejectsInconsistentShape) {
  EXPECT_THROW(Tensor<float>({2, 0}), ShapeError);
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>(3)), ShapeError);
}

}  // namespace
}  // namespace liboost
