#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "liboost/rng.hpp"
#include "liboost/sampling.hpp"
#include "liboost/zoo.hpp"

namespace liboost {

enum class AsrMode { kCleanPredFlip, kGroundTruth };
std::string_view asr_mode_name(AsrMode mode);
AsrMode parse_asr_mode(std::string_view name);

// How the brute-force max-min attack differentiates its inner minimum.
// kArgmin back-propagates through the worst-case offset only; kAll
// back-propagates through every translated copy (the cost model that counts
// one backward per translation) and still steps along the argmin gradient.
enum class BruteForceGrad { kArgmin, kAll };

struct AttackConfig {
  double epsilon = 0.3;
  std::size_t iterations = 10;
  std::optional<double> alpha;  // step size, epsilon / iterations when unset
  double momentum = 1.0;
  std::size_t samples = 30;  // translated copies per gradient
  int k = 4;
  OffsetKind dist = OffsetKind::kLogarithmic;
  OffsetMode offset_mode = OffsetMode::kRing;
  // Replace random draws by every offset of full_grid(k), once each.
  bool exhaustive_grid = false;
  // Back-translate each sample gradient (exact derivative with respect to
  // the untranslated perturbation). false keeps the gradient taken at the
  // translated input as is.
  bool adjoint_grad = true;
  bool pixel_clamp = true;  // keep x + delta inside [0,1]
  AsrMode asr_mode = AsrMode::kCleanPredFlip;
  BruteForceGrad bf_grad = BruteForceGrad::kArgmin;
  double resize_rate = 1.1;     // DIM
  double diversity_prob = 0.5;  // DIM
  std::uint64_t seed = 0;

  double step() const { return alpha.value_or(epsilon / static_cast<double>(iterations)); }
  OffsetDistribution distribution() const { return {dist, k, offset_mode}; }
  void validate() const;
};

struct PropagationCount {
  std::uint64_t forward = 0;
  std::uint64_t backward = 0;
  friend bool operator==(const PropagationCount&, const PropagationCount&) = default;
};

struct AttackResult {
  Tensor<float> delta;
  // Objective seen by each iteration: the plain loss, the mean sampled loss
  // for translated gradients, the inner minimum for brute force.
  std::vector<double> loss_trace;
  // Brute force only: J(x + delta_{t-1}) at the untranslated perturbation.
  std::vector<double> center_loss_trace;
  PropagationCount count;
  double wall_seconds = 0;
};

// Gathers one image into another shape; DIM's resize-and-pad is one of
// these. Entry -1 means the output pixel is zero.
class PixelMap {
 public:
  PixelMap() = default;
  PixelMap(Shape out_shape, std::vector<std::ptrdiff_t> source, std::size_t in_size)
      : out_shape_(std::move(out_shape)), source_(std::move(source)), in_size_(in_size) {}

  bool identity() const { return source_.empty(); }
  Tensor<float> apply(const Tensor<float>& image) const;
  Tensor<float> adjoint(const Tensor<float>& grad) const;

 private:
  Shape out_shape_;
  std::vector<std::ptrdiff_t> source_;
  std::size_t in_size_ = 0;
};

// DIM-lite: with probability p, nearest-neighbour resize of the C,H,W image
// to a random side in [H, floor(H*r)], zero-pad at a random position to
// floor(H*r), and resize back to H. Identity otherwise. One uniform draw
// decides; the size and padding draws follow only when it fires.
PixelMap draw_dim_map(const Shape& image_shape, double resize_rate, double p, Rng& rng);
Tensor<float> dim_transform(const Tensor<float>& x, double resize_rate, double p, Rng& rng);

// Weighted sum of member logits. Members are borrowed and must outlive the
// ensemble.
class Ensemble final : public LogitModel {
 public:
  Ensemble(std::vector<std::reference_wrapper<const LogitModel>> members,
           std::vector<double> weights);

  Shape input_shape() const override { return members_[0].get().input_shape(); }
  std::size_t classes() const override { return members_[0].get().classes(); }
  Var<float> logits(Tape<float>& tape, Var<float> batch) const override;
  Var<double> logits(Tape<double>& tape, Var<double> batch) const override;

 private:
  template <typename T>
  Var<T> fuse(Tape<T>& tape, Var<T> batch) const;

  std::vector<std::reference_wrapper<const LogitModel>> members_;
  std::vector<double> weights_;
};

// Gradient of the summed cross-entropy of a [B,C,H,W] batch with respect to
// its input, one row per image, plus the per-image losses. Rows are
// computed independently of each other.
struct BatchGradient {
  Tensor<float> grad;
  std::vector<float> losses;
};
BatchGradient input_gradients(const LogitModel& model, const Tensor<float>& batch,
                              std::span<const std::size_t> labels);

// Backbones. x is one C,H,W image with label y.
AttackResult fgsm(const LogitModel& model, const Tensor<float>& x, std::size_t y,
                  double epsilon, bool pixel_clamp = true);
AttackResult ifgsm(const LogitModel& model, const Tensor<float>& x, std::size_t y,
                   const AttackConfig& cfg);
AttackResult mi_fgsm(const LogitModel& model, const Tensor<float>& x, std::size_t y,
                     const AttackConfig& cfg);
AttackResult dim_mi(const LogitModel& model, const Tensor<float>& x, std::size_t y,
                    const AttackConfig& cfg, Rng& rng);

// Mean over translated copies of the perturbation of the loss gradient:
// (1/N) sum_n A_n grad J(x + translate(delta, o_n), y), where A_n is the
// adjoint translation when cfg.adjoint_grad is set and the identity
// otherwise. Offsets come from cfg's distribution, or from full_grid(k) in
// exhaustive mode. `dim`, when set, passes each copy through a fresh DIM
// map first.
Tensor<float> li_boost_gradient(const LogitModel& model, const Tensor<float>& x,
                                const Tensor<float>& delta, std::size_t y,
                                const AttackConfig& cfg, Rng& rng,
                                PropagationCount& count, double* mean_loss = nullptr,
                                bool dim = false);

// Same average over an explicit offset list.
Tensor<float> translated_mean_gradient(const LogitModel& model, const Tensor<float>& x,
                                       const Tensor<float>& delta, std::size_t y,
                                       std::span<const Offset> offsets, bool adjoint,
                                       PropagationCount& count, double* mean_loss = nullptr,
                                       const AttackConfig* dim_cfg = nullptr,
                                       Rng* dim_rng = nullptr);

enum class Backbone { kFgsm, kIfgsm, kMiFgsm, kDimMi };
std::string_view backbone_name(Backbone b);

// Backbone control flow with every gradient replaced by li_boost_gradient.
AttackResult li_boost(Backbone backbone, const LogitModel& model, const Tensor<float>& x,
                      std::size_t y, const AttackConfig& cfg, Rng& rng);

// MI-FGSM on max_delta min_{|i|,|j|<=k} J(x + translate(delta, i, j)): each
// iteration evaluates all (2k+1)^2 translations and follows the gradient at
// the minimising one (first in full_grid order on ties).
AttackResult brute_force_minmax(const LogitModel& model, const Tensor<float>& x,
                                std::size_t y, const AttackConfig& cfg);

// Registered attack names, in a stable order.
const std::vector<std::string>& attack_names();

// Throws a ConfigError listing the registered names when `name` is unknown.
void require_registered(std::string_view name);

// Runs the named attack on one example. The generator stream is derived
// from (cfg.seed, stream) so results do not depend on scheduling.
AttackResult run_attack(std::string_view name, const LogitModel& model,
                        const Tensor<float>& x, std::size_t y, const AttackConfig& cfg,
                        std::uint64_t stream);

// Projects delta onto the epsilon ball and, with pixel_clamp, onto
// {d : 0 <= x + d <= 1} as evaluated in float arithmetic.
void project_perturbation(Tensor<float>& delta, const Tensor<float>& x, float epsilon,
                          bool pixel_clamp);

}  // namespace liboost
