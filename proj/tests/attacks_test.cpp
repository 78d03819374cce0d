#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "liboost/attacks.hpp"
#include "liboost/ops.hpp"
#include "liboost/translate.hpp"
#include "test_util.hpp"

using namespace liboost;
using liboost::testing::LinearModel;
using liboost::testing::random_tensor;
using liboost::testing::sum_model;

namespace {

ModelSpec small_spec(std::size_t side, std::size_t classes) {
  ModelSpec s;
  s.arch = Architecture::kCnnA;
  s.height = s.width = side;
  s.classes = classes;
  return s;
}

struct Example {
  Tensor<float> x;
  std::size_t y;
};

Example example_for(const LogitModel& model, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> x = random_tensor<float>(model.input_shape(), rng, 0.0, 1.0);
  const std::size_t y = predict(model, x);
  return {std::move(x), y};
}

AttackConfig small_config() {
  AttackConfig c;
  c.epsilon = 0.1;
  c.iterations = 4;
  c.samples = 5;
  c.k = 2;
  c.seed = 9;
  return c;
}

void expect_within_budget(const Tensor<float>& delta, const Tensor<float>& x, double epsilon,
                          bool pixel_clamp, const std::string& what) {
  const float limit =
      std::nextafter(static_cast<float>(epsilon), std::numeric_limits<float>::infinity());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    ASSERT_LE(std::abs(delta[i]), limit) << what << " pixel " << i;
    if (pixel_clamp) {
      const float adv = x[i] + delta[i];
      ASSERT_GE(adv, 0.0f) << what << " pixel " << i;
      ASSERT_LE(adv, 1.0f) << what << " pixel " << i;
    }
  }
}

}  // namespace

TEST(Config, ValidationRejectsBadValues) {
  const std::vector<std::function<void(AttackConfig&)>> breakers = {
      [](AttackConfig& c) { c.epsilon = 0; },
      [](AttackConfig& c) { c.iterations = 0; },
      [](AttackConfig& c) { c.alpha = 0.0; },
      [](AttackConfig& c) { c.momentum = -0.1; },
      [](AttackConfig& c) { c.samples = 0; },
      [](AttackConfig& c) { c.k = -1; },
      [](AttackConfig& c) { c.resize_rate = 0.9; },
      [](AttackConfig& c) { c.diversity_prob = 1.5; },
  };
  for (std::size_t n = 0; n < breakers.size(); ++n) {
    AttackConfig c;
    breakers[n](c);
    EXPECT_THROW(c.validate(), ConfigError) << "case " << n;
  }
  EXPECT_NO_THROW(AttackConfig{}.validate());
  EXPECT_DOUBLE_EQ(AttackConfig{}.step(), 0.03);
}

TEST(Fgsm, ZeroBudgetGivesZeroPerturbation) {
  const Classifier m = build(small_spec(12, 3), 5);
  const auto ex = example_for(m, 1);
  const auto r = fgsm(m, ex.x, ex.y, 0.0);
  EXPECT_EQ(r.delta, Tensor<float>(ex.x.shape()));
  EXPECT_EQ(r.count, (PropagationCount{1, 1}));
}

TEST(Fgsm, PositiveGradientStepsUpEverywhere) {
  const Shape shape{1, 6, 6};
  const LinearModel m = sum_model(shape);
  const Tensor<float> x(shape, 0.5f);
  const auto r = fgsm(m, x, 0, 0.3);
  for (float d : r.delta.data()) EXPECT_EQ(d, 0.3f);
  // Near the top of the pixel range the clamp keeps x + delta <= 1.
  const Tensor<float> bright(shape, 0.9f);
  const auto clamped = fgsm(m, bright, 0, 0.3);
  for (std::size_t i = 0; i < bright.size(); ++i) {
    EXPECT_LE(bright[i] + clamped.delta[i], 1.0f);
    EXPECT_GT(clamped.delta[i], 0.09f);
  }
  const auto unclamped = fgsm(m, bright, 0, 0.3, false);
  for (float d : unclamped.delta.data()) EXPECT_EQ(d, 0.3f);
}

TEST(Fgsm, ShapeAndLabelErrors) {
  const Classifier m = build(small_spec(12, 3), 5);
  EXPECT_THROW(fgsm(m, Tensor<float>({1, 11, 12}), 0, 0.1), ShapeError);
  EXPECT_THROW(fgsm(m, Tensor<float>({1, 12, 12}), 3, 0.1), DataError);
}

TEST(MiFgsm, NoMomentumSingleStepEqualsFgsm) {
  const Classifier m = build(small_spec(12, 3), 5);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ex = example_for(m, seed);
    AttackConfig c;
    c.epsilon = 0.2;
    c.iterations = 1;
    c.momentum = 0;
    EXPECT_EQ(mi_fgsm(m, ex.x, ex.y, c).delta, fgsm(m, ex.x, ex.y, 0.2).delta);
  }
}

TEST(MiFgsm, ZeroGradientLeavesPerturbationAtZero) {
  const Shape shape{1, 6, 6};
  const LinearModel flat(shape, Tensor<double>({36, 2}));
  AttackConfig c;
  const auto r = mi_fgsm(flat, Tensor<float>(shape, 0.5f), 0, c);
  EXPECT_EQ(r.delta, Tensor<float>(shape));
}

TEST(MiFgsm, BudgetHoldsAtEveryIteration) {
  const Classifier m = build(small_spec(12, 3), 5);
  const auto ex = example_for(m, 2);
  AttackConfig c = small_config();
  c.alpha = 0.04;
  for (std::size_t t = 1; t <= 6; ++t) {
    c.iterations = t;
    expect_within_budget(mi_fgsm(m, ex.x, ex.y, c).delta, ex.x, c.epsilon, true,
                         "t=" + std::to_string(t));
  }
}

TEST(MiFgsm, NonFiniteLossAbortsWithIteration) {
  const Shape shape{1, 4, 4};
  Tensor<double> w({16, 2});
  w.fill(std::numeric_limits<double>::infinity());
  const LinearModel broken(shape, w);
  try {
    mi_fgsm(broken, Tensor<float>(shape, 0.5f), 0, AttackConfig{});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration 1"), std::string::npos) << e.what();
  }
}

TEST(Attacks, EveryAttackRespectsBudgetAndCounts) {
  const Classifier m = build(small_spec(12, 3), 5);
  const AttackConfig c = small_config();
  const std::uint64_t t = c.iterations, n = c.samples;
  const std::uint64_t grid = (2 * c.k + 1) * (2 * c.k + 1);
  const std::map<std::string, PropagationCount> expected = {
      {"fgsm", {1, 1}},
      {"i-fgsm", {t, t}},
      {"mi-fgsm", {t, t}},
      {"dim-mi", {t, t}},
      {"li-boost-fgsm", {n, n}},
      {"li-boost-ifgsm", {t * n, t * n}},
      {"li-boost-mi", {t * n, t * n}},
      {"li-boost-dim", {t * n, t * n}},
      {"bf-minmax", {t * grid, t}},
  };
  ASSERT_EQ(expected.size(), attack_names().size());
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto ex = example_for(m, seed);
    for (const auto& name : attack_names()) {
      const auto r = run_attack(name, m, ex.x, ex.y, c, seed);
      expect_within_budget(r.delta, ex.x, c.epsilon, true, name);
      EXPECT_EQ(r.count, expected.at(name)) << name;
      EXPECT_GT(r.delta.abs_max(), 0.0f) << name;
    }
  }
}

TEST(Attacks, BruteForceAllModeCountsEveryBackward) {
  const Classifier m = build(small_spec(12, 3), 5);
  const auto ex = example_for(m, 4);
  AttackConfig c = small_config();
  c.bf_grad = BruteForceGrad::kAll;
  const auto all = brute_force_minmax(m, ex.x, ex.y, c);
  EXPECT_EQ(all.count, (PropagationCount{4 * 25, 4 * 25}));
  // The step still follows the argmin gradient.
  c.bf_grad = BruteForceGrad::kArgmin;
  EXPECT_EQ(all.delta, brute_force_minmax(m, ex.x, ex.y, c).delta);
}

TEST(Attacks, PixelClampCanBeDisabled) {
  const Shape shape{1, 6, 6};
  const LinearModel m = sum_model(shape);
  const Tensor<float> x(shape, 0.95f);
  AttackConfig c;
  c.pixel_clamp = false;
  const auto r = run_attack("mi-fgsm", m, x, 0, c, 0);
  expect_within_budget(r.delta, x, c.epsilon, false, "unclamped");
  EXPECT_GT(x[0] + r.delta[0], 1.0f);
}

TEST(Attacks, IdenticalInputsGiveIdenticalResults) {
  const Classifier m = build(small_spec(12, 3), 5);
  const auto ex = example_for(m, 6);
  AttackConfig c = small_config();
  for (const auto& name : attack_names()) {
    const auto a = run_attack(name, m, ex.x, ex.y, c, 17);
    const auto b = run_attack(name, m, ex.x, ex.y, c, 17);
    EXPECT_EQ(a.delta, b.delta) << name;
    EXPECT_EQ(a.loss_trace, b.loss_trace) << name;
    EXPECT_EQ(a.count, b.count) << name;
  }
  const auto s1 = run_attack("li-boost-mi", m, ex.x, ex.y, c, 1);
  const auto s2 = run_attack("li-boost-mi", m, ex.x, ex.y, c, 2);
  EXPECT_NE(s1.loss_trace, s2.loss_trace);
}

TEST(Attacks, UnknownNameListsRegisteredAttacks) {
  const Classifier m = build(small_spec(12, 3), 5);
  try {
    run_attack("pgd", m, Tensor<float>({1, 12, 12}), 0, AttackConfig{}, 0);
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("pgd"), std::string::npos);
    for (const auto& name : attack_names()) EXPECT_NE(msg.find(name), std::string::npos) << name;
  }
}

TEST(LiBoost, SingleUntranslatedSampleReproducesEachBackbone) {
  const Classifier m = build(small_spec(12, 3), 5);
  AttackConfig c = small_config();
  c.samples = 1;
  c.k = 0;
  c.diversity_prob = 0.7;
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"li-boost-fgsm", "fgsm"},
      {"li-boost-ifgsm", "i-fgsm"},
      {"li-boost-mi", "mi-fgsm"},
      {"li-boost-dim", "dim-mi"},
  };
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto ex = example_for(m, seed);
    for (const auto& [boosted, backbone] : pairs) {
      EXPECT_EQ(run_attack(boosted, m, ex.x, ex.y, c, seed).delta,
                run_attack(backbone, m, ex.x, ex.y, c, seed).delta)
          << boosted;
    }
  }
}

TEST(LiBoost, UntranslatedGradientIsThePlainGradient) {
  const Classifier m = build(small_spec(12, 3), 5);
  const auto ex = example_for(m, 3);
  Rng rng(1);
  const auto delta = random_tensor<float>(ex.x.shape(), rng, -0.1, 0.1);
  Tensor<float> adv = ex.x;
  for (std::size_t i = 0; i < adv.size(); ++i) adv[i] += delta[i];
  const std::size_t labels[] = {ex.y};
  const auto plain = input_gradients(m, stack<float>(std::span(&adv, 1)), labels);

  AttackConfig c = small_config();
  c.k = 0;
  c.samples = 1;
  c.exhaustive_grid = true;
  PropagationCount count;
  const auto g = li_boost_gradient(m, ex.x, delta, ex.y, c, rng, count);
  EXPECT_EQ(g, unstack(plain.grad, 0));
  EXPECT_EQ(count, (PropagationCount{1, 1}));
}

TEST(LiBoost, ExhaustiveModeEqualsGridMeanExactly) {
  const Classifier m = build(small_spec(12, 3), 5);
  const auto ex = example_for(m, 4);
  Rng rng(2);
  const auto delta = random_tensor<float>(ex.x.shape(), rng, -0.1, 0.1);
  for (bool adjoint : {true, false}) {
    AttackConfig c = small_config();
    c.exhaustive_grid = true;
    c.adjoint_grad = adjoint;
    PropagationCount count;
    const auto g = li_boost_gradient(m, ex.x, delta, ex.y, c, rng, count);
    EXPECT_EQ(count, (PropagationCount{25, 25}));

    // Oracle: one gradient per offset, summed in grid order.
    Tensor<float> sum;
    for (const Offset& o : full_grid(c.k)) {
      Tensor<float> adv = ex.x;
      const auto shifted = translate(delta, o);
      for (std::size_t i = 0; i < adv.size(); ++i) adv[i] += shifted[i];
      const std::size_t labels[] = {ex.y};
      Tensor<float> go = unstack(input_gradients(m, stack<float>(std::span(&adv, 1)), labels).grad, 0);
      if (adjoint) go = translate_adjoint(go, o);
      if (sum.empty()) {
        sum = go;
      } else {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += go[i];
      }
    }
    for (auto& v : sum.data()) v /= 25.0f;
    EXPECT_EQ(g, sum) << "adjoint=" << adjoint;
  }
}

TEST(LiBoost, MonteCarloMeanMatchesExhaustiveMean) {
  const Classifier m = build(small_spec(8, 2), 11);
  const auto ex = example_for(m, 5);
  Rng rng(3);
  const auto delta = random_tensor<float>(ex.x.shape(), rng, -0.3, 0.3);
  PropagationCount count;

  AttackConfig exhaustive;
  exhaustive.k = 1;
  exhaustive.samples = 9;
  exhaustive.exhaustive_grid = true;
  const auto oracle = li_boost_gradient(m, ex.x, delta, ex.y, exhaustive, rng, count);

  AttackConfig sampled;
  sampled.k = 1;
  sampled.samples = 1;
  sampled.dist = OffsetKind::kFullGrid;
  constexpr int kDraws = 2000;
  std::vector<double> mean(oracle.size()), sq(oracle.size());
  for (int n = 0; n < kDraws; ++n) {
    Rng draw = Rng::stream(77, static_cast<std::uint64_t>(n));
    const auto g = li_boost_gradient(m, ex.x, delta, ex.y, sampled, draw, count);
    for (std::size_t i = 0; i < g.size(); ++i) {
      mean[i] += g[i];
      sq[i] += static_cast<double>(g[i]) * g[i];
    }
  }
  std::size_t checked = 0;
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    mean[i] /= kDraws;
    const double var = std::max(0.0, sq[i] / kDraws - mean[i] * mean[i]);
    const double se = std::sqrt(var * kDraws / (kDraws - 1) / kDraws);
    EXPECT_LE(std::abs(mean[i] - oracle[i]), 3 * se + 1e-7) << "coordinate " << i;
    checked += se > 0;
  }
  EXPECT_GT(checked, oracle.size() / 2);
}

TEST(BruteForce, ZeroBoundReducesToMiFgsm) {
  const Classifier m = build(small_spec(12, 3), 5);
  AttackConfig c = small_config();
  c.k = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto ex = example_for(m, seed);
    const auto bf = brute_force_minmax(m, ex.x, ex.y, c);
    EXPECT_EQ(bf.delta, mi_fgsm(m, ex.x, ex.y, c).delta);
    EXPECT_EQ(bf.count, (PropagationCount{c.iterations, c.iterations}));
  }
}

TEST(BruteForce, InnerMinimumNeverExceedsCenterLoss) {
  const Classifier m = build(small_spec(12, 3), 5);
  AttackConfig c = small_config();
  c.iterations = 6;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto ex = example_for(m, seed);
    const auto r = brute_force_minmax(m, ex.x, ex.y, c);
    ASSERT_EQ(r.loss_trace.size(), 6u);
    ASSERT_EQ(r.center_loss_trace.size(), 6u);
    for (std::size_t t = 0; t < 6; ++t) EXPECT_LE(r.loss_trace[t], r.center_loss_trace[t]);
  }
}

TEST(BruteForce, ForwardsPerIterationFollowGridSize) {
  const Classifier m = build(small_spec(12, 3), 5);
  const auto ex = example_for(m, 1);
  AttackConfig c = small_config();
  c.iterations = 1;
  for (int k : {0, 1, 2, 3}) {
    c.k = k;
    const std::uint64_t cells = static_cast<std::uint64_t>((2 * k + 1) * (2 * k + 1));
    EXPECT_EQ(brute_force_minmax(m, ex.x, ex.y, c).count.forward, cells);
  }
}

TEST(Dim, ZeroProbabilityAndUnitRateAreIdentity) {
  Rng data(1);
  const auto x = random_tensor<float>({1, 12, 12}, data, 0, 1);
  Rng rng(2);
  for (int n = 0; n < 20; ++n) {
    EXPECT_EQ(dim_transform(x, 1.1, 0.0, rng), x);
    EXPECT_EQ(dim_transform(x, 1.0, 1.0, rng), x);
  }
}

TEST(Dim, ShapePreservedAndDeterministicPerGeneratorState) {
  Rng data(1);
  const auto x = random_tensor<float>({2, 12, 12}, data, 0, 1);
  Rng a(5), b(5);
  std::size_t changed = 0;
  for (int n = 0; n < 40; ++n) {
    const auto ta = dim_transform(x, 1.5, 0.5, a);
    EXPECT_EQ(ta.shape(), x.shape());
    EXPECT_EQ(ta, dim_transform(x, 1.5, 0.5, b));
    changed += !(ta == x);
  }
  EXPECT_GT(changed, 5u);
  EXPECT_LT(changed, 35u);
  EXPECT_THROW(dim_transform(x, 0.5, 0.5, a), ConfigError);
}

TEST(Dim, MapAdjointSatisfiesInnerProductIdentity) {
  Rng rng(8);
  std::size_t fired = 0;
  for (int n = 0; n < 30; ++n) {
    const PixelMap map = draw_dim_map({1, 10, 10}, 1.4, 1.0, rng);
    fired += !map.identity();
    const auto a = random_tensor<float>({1, 10, 10}, rng);
    const auto b = random_tensor<float>({1, 10, 10}, rng);
    const auto ma = map.apply(a), mb = map.adjoint(b);
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      lhs += static_cast<double>(ma[i]) * b[i];
      rhs += static_cast<double>(a[i]) * mb[i];
    }
    EXPECT_NEAR(lhs, rhs, 1e-5);
  }
  EXPECT_GT(fired, 0u);
}

TEST(Ensemble, SingleMemberMatchesTheModel) {
  const Classifier m = build(small_spec(12, 3), 5);
  const Ensemble e({std::cref<LogitModel>(m)}, {1.0});
  const auto ex = example_for(m, 2);
  const auto batch = stack<float>(std::span(&ex.x, 1));
  EXPECT_EQ(logits(e, batch), logits(m, batch));
  const AttackConfig c = small_config();
  EXPECT_EQ(mi_fgsm(e, ex.x, ex.y, c).delta, mi_fgsm(m, ex.x, ex.y, c).delta);
  EXPECT_EQ(run_attack("li-boost-mi", e, ex.x, ex.y, c, 3).delta,
            run_attack("li-boost-mi", m, ex.x, ex.y, c, 3).delta);
}

TEST(Ensemble, EqualHalvesOfOneModelMatchIt) {
  const Classifier m = build(small_spec(12, 3), 5);
  const Ensemble e({std::cref<LogitModel>(m), std::cref<LogitModel>(m)}, {0.5, 0.5});
  const auto ex = example_for(m, 2);
  const auto batch = stack<float>(std::span(&ex.x, 1));
  EXPECT_EQ(logits(e, batch), logits(m, batch));
}

TEST(Ensemble, FusesWeightedLogits) {
  const Classifier a = build(small_spec(12, 3), 5);
  const Classifier b = build(small_spec(12, 3), 6);
  const Ensemble e({std::cref<LogitModel>(a), std::cref<LogitModel>(b)}, {0.25, 0.75});
  const auto ex = example_for(a, 2);
  const auto batch = stack<float>(std::span(&ex.x, 1));
  const auto la = logits(a, batch), lb = logits(b, batch), le = logits(e, batch);
  for (std::size_t i = 0; i < le.size(); ++i) EXPECT_NEAR(le[i], 0.25f * la[i] + 0.75f * lb[i], 1e-6);
}

TEST(Ensemble, InvalidMembersOrWeightsAreRejected) {
  const Classifier three = build(small_spec(12, 3), 5);
  const Classifier four = build(small_spec(12, 4), 5);
  const Classifier wide = build(small_spec(16, 3), 5);
  using Members = std::vector<std::reference_wrapper<const LogitModel>>;
  EXPECT_THROW(Ensemble(Members{}, {}), ConfigError);
  EXPECT_THROW(Ensemble(Members{three}, {0.5, 0.5}), ConfigError);
  EXPECT_THROW(Ensemble(Members{three, three}, {0.7, 0.7}), ConfigError);
  EXPECT_THROW(Ensemble(Members{three, three}, {1.5, -0.5}), ConfigError);
  EXPECT_THROW(Ensemble(Members{three, four}, {0.5, 0.5}), ConfigError);
  EXPECT_THROW(Ensemble(Members{three, wide}, {0.5, 0.5}), ConfigError);
}

TEST(Projection, ClampsToBallAndPixelRange) {
  Rng rng(4);
  for (int n = 0; n < 50; ++n) {
    const auto x = random_tensor<float>({1, 8, 8}, rng, 0, 1);
    auto d = random_tensor<float>({1, 8, 8}, rng, -1, 1);
    project_perturbation(d, x, 0.2f, true);
    expect_within_budget(d, x, 0.2, true, "projection");
  }
  const Tensor<float> x({1, 2, 2}, 0.5f);
  auto inside = Tensor<float>::from({1, 2, 2}, {0.1f, -0.1f, 0.0f, 0.05f});
  const auto before = inside;
  project_perturbation(inside, x, 0.2f, true);
  EXPECT_EQ(inside, before);
}
