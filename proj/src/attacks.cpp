#include "liboost/attacks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "liboost/ops.hpp"
#include "liboost/translate.hpp"

namespace liboost {

std::string_view asr_mode_name(AsrMode mode) {
  return mode == AsrMode::kCleanPredFlip ? "clean-pred-flip" : "ground-truth";
}

AsrMode parse_asr_mode(std::string_view name) {
  if (name == "clean-pred-flip") return AsrMode::kCleanPredFlip;
  if (name == "ground-truth") return AsrMode::kGroundTruth;
  throw ConfigError("unknown asr_mode '" + std::string(name) +
                    "' (expected clean-pred-flip or ground-truth)");
}

std::string_view backbone_name(Backbone b) {
  switch (b) {
    case Backbone::kFgsm: return "fgsm";
    case Backbone::kIfgsm: return "i-fgsm";
    case Backbone::kMiFgsm: return "mi-fgsm";
    case Backbone::kDimMi: return "dim-mi";
  }
  return "?";
}

void AttackConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("attack config: " + what); };
  if (!(epsilon > 0) || !std::isfinite(epsilon)) fail("epsilon must be > 0");
  if (iterations < 1) fail("iterations must be >= 1");
  if (!(step() > 0) || !std::isfinite(step())) fail("alpha must be > 0");
  if (!(momentum >= 0)) fail("momentum must be >= 0");
  if (samples < 1) fail("samples must be >= 1");
  if (k < 0) fail("k must be >= 0");
  if (!(resize_rate >= 1)) fail("resize_rate must be >= 1");
  if (!(diversity_prob >= 0 && diversity_prob <= 1)) fail("diversity_prob must lie in [0,1]");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Tensor<float> batch_of_one(const Tensor<float>& image) {
  Shape shape{1};
  shape.insert(shape.end(), image.shape().begin(), image.shape().end());
  return image.reshaped(std::move(shape));
}

Tensor<float> plus(const Tensor<float>& a, const Tensor<float>& b) {
  Tensor<float> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

float sign(float v) { return v > 0 ? 1.0f : (v < 0 ? -1.0f : 0.0f); }

// delta += alpha * sign(direction); sign(0) = 0.
void sign_step(Tensor<float>& delta, const Tensor<float>& direction, float alpha) {
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += alpha * sign(direction[i]);
}

// g = mu g + gbar / ||gbar||_inf, with the normalised term taken as zero
// when ||gbar||_inf < 1e-12.
void accumulate_momentum(Tensor<float>& g, const Tensor<float>& gbar, float mu) {
  const float norm = gbar.abs_max();
  const bool silent = static_cast<double>(norm) < 1e-12;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = mu * g[i] + (silent ? 0.0f : gbar[i] / norm);
  }
}

void require_image(const LogitModel& model, const Tensor<float>& x, std::size_t y) {
  if (x.shape() != model.input_shape()) {
    throw ShapeError("attack: image " + shape_string(x.shape()) + " does not match model input " +
                     shape_string(model.input_shape()));
  }
  if (y >= model.classes()) {
    throw DataError("attack: label " + std::to_string(y) + " out of range");
  }
}

// Gradient of J at one input image, with counters and the loss.
Tensor<float> plain_gradient(const LogitModel& model, const Tensor<float>& input,
                             std::size_t y, PropagationCount& count, double& loss) {
  const std::size_t labels[] = {y};
  BatchGradient bg = input_gradients(model, batch_of_one(input), labels);
  count.forward += 1;
  count.backward += 1;
  loss = bg.losses[0];
  return bg.grad.reshaped(input.shape());
}

template <typename F>
decltype(auto) with_iteration(std::size_t t, F&& f) {
  try {
    return f();
  } catch (const NumericError& e) {
    throw NumericError("attack aborted at iteration " + std::to_string(t + 1) + ": " +
                       e.what());
  }
}

}  // namespace

void project_perturbation(Tensor<float>& delta, const Tensor<float>& x, float epsilon,
                          bool pixel_clamp) {
  constexpr float kInf = std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < delta.size(); ++i) {
    float d = std::min(std::max(delta[i], -epsilon), epsilon);
    if (pixel_clamp) {
      const float xi = x[i];
      if (xi + d > 1.0f) {
        d = std::min(1.0f - xi, d);
        while (xi + d > 1.0f) d = std::nextafter(d, -kInf);
      }
      if (xi + d < 0.0f) {
        d = std::max(-xi, d);
        while (xi + d < 0.0f) d = std::nextafter(d, kInf);
      }
    }
    delta[i] = d;
  }
}

Tensor<float> PixelMap::apply(const Tensor<float>& image) const {
  if (identity()) return image;
  Tensor<float> out(image.shape());
  const std::size_t plane = source_.size();
  for (std::size_t c = 0; c < image.size() / plane; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      if (source_[p] >= 0) {
        out[c * plane + p] = image[c * plane + static_cast<std::size_t>(source_[p])];
      }
    }
  }
  return out;
}

Tensor<float> PixelMap::adjoint(const Tensor<float>& grad) const {
  if (identity()) return grad;
  Tensor<float> out(grad.shape());
  const std::size_t plane = source_.size();
  for (std::size_t c = 0; c < grad.size() / plane; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      if (source_[p] >= 0) {
        out[c * plane + static_cast<std::size_t>(source_[p])] += grad[c * plane + p];
      }
    }
  }
  return out;
}

PixelMap draw_dim_map(const Shape& image_shape, double resize_rate, double p, Rng& rng) {
  if (image_shape.size() != 3) {
    throw ShapeError("dim_transform: expected C,H,W, got " + shape_string(image_shape));
  }
  if (!(resize_rate >= 1) || !(p >= 0 && p <= 1)) {
    throw ConfigError("dim_transform: need resize_rate >= 1 and p in [0,1]");
  }
  if (p == 0 || rng.uniform() >= p) return {};

  const auto h = static_cast<std::int64_t>(image_shape[1]);
  const auto w = static_cast<std::int64_t>(image_shape[2]);
  const auto big_h = static_cast<std::int64_t>(std::floor(static_cast<double>(h) * resize_rate));
  const auto big_w = static_cast<std::int64_t>(std::floor(static_cast<double>(w) * resize_rate));
  const std::int64_t rnd_h = rng.between(h, big_h);
  const std::int64_t rnd_w =
      big_h == h ? w : w + (rnd_h - h) * (big_w - w) / (big_h - h);
  const std::int64_t top = rng.between(0, big_h - rnd_h);
  const std::int64_t left = rng.between(0, big_w - rnd_w);

  // Output pixel -> canvas pixel (nearest, big -> original size) -> resized
  // image pixel -> source pixel (nearest, rnd -> original size).
  std::vector<std::ptrdiff_t> source(static_cast<std::size_t>(h * w), -1);
  for (std::int64_t y = 0; y < h; ++y) {
    const auto cy = static_cast<std::int64_t>((static_cast<double>(y) + 0.5) * big_h / h);
    const std::int64_t ry = cy - top;
    if (ry < 0 || ry >= rnd_h) continue;
    const auto sy = static_cast<std::int64_t>((static_cast<double>(ry) + 0.5) * h / rnd_h);
    for (std::int64_t x = 0; x < w; ++x) {
      const auto cx = static_cast<std::int64_t>((static_cast<double>(x) + 0.5) * big_w / w);
      const std::int64_t rx = cx - left;
      if (rx < 0 || rx >= rnd_w) continue;
      const auto sx = static_cast<std::int64_t>((static_cast<double>(rx) + 0.5) * w / rnd_w);
      source[static_cast<std::size_t>(y * w + x)] = static_cast<std::ptrdiff_t>(sy * w + sx);
    }
  }
  return {image_shape, std::move(source), static_cast<std::size_t>(h * w)};
}

Tensor<float> dim_transform(const Tensor<float>& x, double resize_rate, double p, Rng& rng) {
  return draw_dim_map(x.shape(), resize_rate, p, rng).apply(x);
}

Ensemble::Ensemble(std::vector<std::reference_wrapper<const LogitModel>> members,
                   std::vector<double> weights)
    : members_(std::move(members)), weights_(std::move(weights)) {
  if (members_.empty()) throw ConfigError("ensemble: no members");
  if (members_.size() != weights_.size()) {
    throw ConfigError("ensemble: " + std::to_string(members_.size()) + " members but " +
                      std::to_string(weights_.size()) + " weights");
  }
  double total = 0;
  for (double w : weights_) {
    if (!(w >= 0)) throw ConfigError("ensemble: weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("ensemble: weights must sum to 1");
  for (const auto& m : members_) {
    if (m.get().classes() != classes()) {
      throw ConfigError("ensemble: class-count mismatch (" + std::to_string(m.get().classes()) +
                        " vs " + std::to_string(classes()) + ")");
    }
    if (m.get().input_shape() != input_shape()) {
      throw ConfigError("ensemble: input shape mismatch");
    }
  }
}

template <typename T>
Var<T> Ensemble::fuse(Tape<T>& tape, Var<T> batch) const {
  Var<T> fused = scale(members_[0].get().logits(tape, batch), static_cast<T>(weights_[0]));
  for (std::size_t m = 1; m < members_.size(); ++m) {
    fused = add(fused, scale(members_[m].get().logits(tape, batch), static_cast<T>(weights_[m])));
  }
  return fused;
}

Var<float> Ensemble::logits(Tape<float>& tape, Var<float> batch) const {
  return fuse(tape, batch);
}

Var<double> Ensemble::logits(Tape<double>& tape, Var<double> batch) const {
  return fuse(tape, batch);
}

BatchGradient input_gradients(const LogitModel& model, const Tensor<float>& batch,
                              std::span<const std::size_t> labels) {
  Tape<float> tape;
  Var<float> input = tape.variable(batch);
  Var<float> out = model.logits(tape, input);
  BatchGradient result;
  result.losses = row_cross_entropy(out.value(), labels);
  tape.backward(cross_entropy(out, labels, Reduction::kSum));
  result.grad = tape.grad(input);
  return result;
}

AttackResult fgsm(const LogitModel& model, const Tensor<float>& x, std::size_t y,
                  double epsilon, bool pixel_clamp) {
  const auto start = Clock::now();
  require_image(model, x, y);
  if (!(epsilon >= 0)) throw ConfigError("fgsm: epsilon must be >= 0");
  AttackResult result;
  double loss = 0;
  const Tensor<float> grad = with_iteration(0, [&] {
    return plain_gradient(model, x, y, result.count, loss);
  });
  result.loss_trace.push_back(loss);
  result.delta = Tensor<float>(x.shape());
  sign_step(result.delta, grad, static_cast<float>(epsilon));
  project_perturbation(result.delta, x, static_cast<float>(epsilon), pixel_clamp);
  result.wall_seconds = seconds_since(start);
  return result;
}

AttackResult ifgsm(const LogitModel& model, const Tensor<float>& x, std::size_t y,
                   const AttackConfig& cfg) {
  const auto start = Clock::now();
  cfg.validate();
  require_image(model, x, y);
  const auto eps = static_cast<float>(cfg.epsilon);
  const auto alpha = static_cast<float>(cfg.step());
  AttackResult result;
  result.delta = Tensor<float>(x.shape());
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    double loss = 0;
    const Tensor<float> grad = with_iteration(t, [&] {
      return plain_gradient(model, plus(x, result.delta), y, result.count, loss);
    });
    result.loss_trace.push_back(loss);
    sign_step(result.delta, grad, alpha);
    project_perturbation(result.delta, x, eps, cfg.pixel_clamp);
  }
  result.wall_seconds = seconds_since(start);
  return result;
}

AttackResult mi_fgsm(const LogitModel& model, const Tensor<float>& x, std::size_t y,
                     const AttackConfig& cfg) {
  const auto start = Clock::now();
  cfg.validate();
  require_image(model, x, y);
  const auto eps = static_cast<float>(cfg.epsilon);
  const auto alpha = static_cast<float>(cfg.step());
  const auto mu = static_cast<float>(cfg.momentum);
  AttackResult result;
  result.delta = Tensor<float>(x.shape());
  Tensor<float> momentum(x.shape());
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    double loss = 0;
    const Tensor<float> grad = with_iteration(t, [&] {
      return plain_gradient(model, plus(x, result.delta), y, result.count, loss);
    });
    result.loss_trace.push_back(loss);
    accumulate_momentum(momentum, grad, mu);
    sign_step(result.delta, momentum, alpha);
    project_perturbation(result.delta, x, eps, cfg.pixel_clamp);
  }
  result.wall_seconds = seconds_since(start);
  return result;
}

AttackResult dim_mi(const LogitModel& model, const Tensor<float>& x, std::size_t y,
                    const AttackConfig& cfg, Rng& rng) {
  const auto start = Clock::now();
  cfg.validate();
  require_image(model, x, y);
  const auto eps = static_cast<float>(cfg.epsilon);
  const auto alpha = static_cast<float>(cfg.step());
  const auto mu = static_cast<float>(cfg.momentum);
  AttackResult result;
  result.delta = Tensor<float>(x.shape());
  Tensor<float> momentum(x.shape());
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const PixelMap map = draw_dim_map(x.shape(), cfg.resize_rate, cfg.diversity_prob, rng);
    double loss = 0;
    const Tensor<float> grad = with_iteration(t, [&] {
      return map.adjoint(
          plain_gradient(model, map.apply(plus(x, result.delta)), y, result.count, loss));
    });
    result.loss_trace.push_back(loss);
    accumulate_momentum(momentum, grad, mu);
    sign_step(result.delta, momentum, alpha);
    project_perturbation(result.delta, x, eps, cfg.pixel_clamp);
  }
  result.wall_seconds = seconds_since(start);
  return result;
}

Tensor<float> translated_mean_gradient(const LogitModel& model, const Tensor<float>& x,
                                       const Tensor<float>& delta, std::size_t y,
                                       std::span<const Offset> offsets, bool adjoint,
                                       PropagationCount& count, double* mean_loss,
                                       const AttackConfig* dim_cfg, Rng* dim_rng) {
  if (offsets.empty()) throw ConfigError("translated gradient: no offsets");
  if (dim_cfg != nullptr && dim_rng == nullptr) {
    throw ConfigError("translated gradient: DIM needs a generator");
  }
  std::vector<Tensor<float>> inputs;
  std::vector<PixelMap> maps;
  inputs.reserve(offsets.size());
  for (const Offset& o : offsets) {
    Tensor<float> adv = plus(x, translate(delta, o));
    if (dim_cfg != nullptr) {
      maps.push_back(draw_dim_map(x.shape(), dim_cfg->resize_rate, dim_cfg->diversity_prob,
                                  *dim_rng));
      adv = maps.back().apply(adv);
    }
    inputs.push_back(std::move(adv));
  }
  const std::vector<std::size_t> labels(offsets.size(), y);
  const BatchGradient bg = input_gradients(model, stack<float>(inputs), labels);
  count.forward += offsets.size();
  count.backward += offsets.size();

  Tensor<float> mean;
  double loss_sum = 0;
  for (std::size_t n = 0; n < offsets.size(); ++n) {
    Tensor<float> g = unstack(bg.grad, n);
    if (dim_cfg != nullptr) g = maps[n].adjoint(g);
    if (adjoint) g = translate_adjoint(g, offsets[n]);
    if (n == 0) {
      mean = std::move(g);
    } else {
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += g[i];
    }
    loss_sum += bg.losses[n];
  }
  const auto n = static_cast<float>(offsets.size());
  for (auto& v : mean.data()) v /= n;
  if (mean_loss != nullptr) *mean_loss = loss_sum / static_cast<double>(offsets.size());
  return mean;
}

Tensor<float> li_boost_gradient(const LogitModel& model, const Tensor<float>& x,
                                const Tensor<float>& delta, std::size_t y,
                                const AttackConfig& cfg, Rng& rng, PropagationCount& count,
                                double* mean_loss, bool dim) {
  std::vector<Offset> offsets;
  if (cfg.exhaustive_grid) {
    offsets = full_grid(cfg.k);
  } else {
    const OffsetDistribution dist = cfg.distribution();
    offsets.reserve(cfg.samples);
    for (std::size_t n = 0; n < cfg.samples; ++n) offsets.push_back(dist.sample(rng));
  }
  return translated_mean_gradient(model, x, delta, y, offsets, cfg.adjoint_grad, count,
                                  mean_loss, dim ? &cfg : nullptr, dim ? &rng : nullptr);
}

AttackResult li_boost(Backbone backbone, const LogitModel& model, const Tensor<float>& x,
                      std::size_t y, const AttackConfig& cfg, Rng& rng) {
  const auto start = Clock::now();
  cfg.validate();
  require_image(model, x, y);
  const auto eps = static_cast<float>(cfg.epsilon);
  const auto mu = static_cast<float>(cfg.momentum);
  const bool single_step = backbone == Backbone::kFgsm;
  const auto alpha = single_step ? eps : static_cast<float>(cfg.step());
  const std::size_t iterations = single_step ? 1 : cfg.iterations;
  const bool use_momentum = backbone == Backbone::kMiFgsm || backbone == Backbone::kDimMi;

  AttackResult result;
  result.delta = Tensor<float>(x.shape());
  Tensor<float> momentum(x.shape());
  for (std::size_t t = 0; t < iterations; ++t) {
    double loss = 0;
    const Tensor<float> gbar = with_iteration(t, [&] {
      return li_boost_gradient(model, x, result.delta, y, cfg, rng, result.count, &loss,
                               backbone == Backbone::kDimMi);
    });
    result.loss_trace.push_back(loss);
    if (use_momentum) {
      accumulate_momentum(momentum, gbar, mu);
      sign_step(result.delta, momentum, alpha);
    } else {
      sign_step(result.delta, gbar, alpha);
    }
    project_perturbation(result.delta, x, eps, cfg.pixel_clamp);
  }
  result.wall_seconds = seconds_since(start);
  return result;
}

AttackResult brute_force_minmax(const LogitModel& model, const Tensor<float>& x,
                                std::size_t y, const AttackConfig& cfg) {
  const auto start = Clock::now();
  cfg.validate();
  require_image(model, x, y);
  const auto eps = static_cast<float>(cfg.epsilon);
  const auto alpha = static_cast<float>(cfg.step());
  const auto mu = static_cast<float>(cfg.momentum);
  const std::vector<Offset> grid = full_grid(cfg.k);
  const std::size_t center = grid.size() / 2;
  const std::vector<std::size_t> labels(grid.size(), y);

  AttackResult result;
  result.delta = Tensor<float>(x.shape());
  Tensor<float> momentum(x.shape());
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const Tensor<float> gbar = with_iteration(t, [&] {
      std::vector<Tensor<float>> inputs;
      inputs.reserve(grid.size());
      for (const Offset& o : grid) inputs.push_back(plus(x, translate(result.delta, o)));

      Tape<float> tape;
      Var<float> batch = tape.variable(stack<float>(inputs));
      Var<float> out = model.logits(tape, batch);
      const std::vector<float> losses = row_cross_entropy(out.value(), labels);
      std::size_t worst = 0;
      for (std::size_t n = 1; n < losses.size(); ++n) {
        if (losses[n] < losses[worst]) worst = n;
      }
      result.loss_trace.push_back(losses[worst]);
      result.center_loss_trace.push_back(losses[center]);
      result.count.forward += grid.size();

      if (cfg.bf_grad == BruteForceGrad::kArgmin) {
        const std::size_t label[] = {y};
        tape.backward(cross_entropy(select_rows(out, {worst}), label, Reduction::kSum));
        result.count.backward += 1;
      } else {
        tape.backward(cross_entropy(out, labels, Reduction::kSum));
        result.count.backward += grid.size();
      }
      Tensor<float> g = unstack(tape.grad(batch), worst);
      return cfg.adjoint_grad ? translate_adjoint(g, grid[worst]) : g;
    });
    accumulate_momentum(momentum, gbar, mu);
    sign_step(result.delta, momentum, alpha);
    project_perturbation(result.delta, x, eps, cfg.pixel_clamp);
  }
  result.wall_seconds = seconds_since(start);
  return result;
}

const std::vector<std::string>& attack_names() {
  static const std::vector<std::string> names{
      "fgsm",          "i-fgsm",         "mi-fgsm",     "dim-mi",       "li-boost-fgsm",
      "li-boost-ifgsm", "li-boost-mi",   "li-boost-dim", "bf-minmax"};
  return names;
}

void require_registered(std::string_view name) {
  const auto& names = attack_names();
  if (std::find(names.begin(), names.end(), name) != names.end()) return;
  std::string known;
  for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown attack '" + std::string(name) + "'; registered: " + known);
}

AttackResult run_attack(std::string_view name, const LogitModel& model,
                        const Tensor<float>& x, std::size_t y, const AttackConfig& cfg,
                        std::uint64_t stream) {
  Rng rng = Rng::stream(cfg.seed, stream);
  if (name == "fgsm") return fgsm(model, x, y, cfg.epsilon, cfg.pixel_clamp);
  if (name == "i-fgsm") return ifgsm(model, x, y, cfg);
  if (name == "mi-fgsm") return mi_fgsm(model, x, y, cfg);
  if (name == "dim-mi") return dim_mi(model, x, y, cfg, rng);
  if (name == "li-boost-fgsm") return li_boost(Backbone::kFgsm, model, x, y, cfg, rng);
  if (name == "li-boost-ifgsm") return li_boost(Backbone::kIfgsm, model, x, y, cfg, rng);
  if (name == "li-boost-mi") return li_boost(Backbone::kMiFgsm, model, x, y, cfg, rng);
  if (name == "li-boost-dim") return li_boost(Backbone::kDimMi, model, x, y, cfg, rng);
  if (name == "bf-minmax") return brute_force_minmax(model, x, y, cfg);
  require_registered(name);
  throw ConfigError("attack '" + std::string(name) + "' has no implementation");
}

}  // namespace liboost
