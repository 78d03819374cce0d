#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "liboost/autodiff.hpp"
#include "liboost/datasets.hpp"

namespace liboost {

enum class Architecture : std::uint8_t {
  kMlp2x256 = 0,  // flatten, fc256, fc256, fc
  kCnnA = 1,      // conv16, conv32, fc
  kCnnB = 2,      // conv8, conv16, conv32, fc
};

std::string_view architecture_name(Architecture arch);
Architecture parse_architecture(std::string_view name);

struct ModelSpec {
  Architecture arch = Architecture::kCnnA;
  std::size_t channels = 1;
  std::size_t height = 28;
  std::size_t width = 28;
  std::size_t classes = 10;

  Shape input_shape() const { return {channels, height, width}; }
  void validate() const;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct Parameter {
  std::string name;
  Tensor<float> value;
};

struct ParameterSlot {
  std::string name;
  Shape shape;
  std::size_t fan_in;
};

// Names and shapes of an architecture's parameters, in storage order.
std::vector<ParameterSlot> parameter_layout(const ModelSpec& spec);

// Anything that maps a [B,C,H,W] batch to [B,classes] logits on a tape.
// Attacks and evaluation only see this interface, which is what lets a
// logit-fused ensemble stand in for a single surrogate.
class LogitModel {
 public:
  virtual ~LogitModel() = default;
  virtual Shape input_shape() const = 0;
  virtual std::size_t classes() const = 0;
  virtual Var<float> logits(Tape<float>& tape, Var<float> batch) const = 0;
  virtual Var<double> logits(Tape<double>& tape, Var<double> batch) const = 0;
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::uint32_t epochs = 0;
  float final_accuracy = 0;
};

class Classifier final : public LogitModel {
 public:
  Classifier(ModelSpec spec, std::vector<Parameter> parameters);

  const ModelSpec& spec() const { return spec_; }
  std::span<const Parameter> parameters() const { return parameters_; }
  std::span<Parameter> mutable_parameters() { return parameters_; }
  std::size_t parameter_count() const;

  TrainingMetadata metadata;

  Shape input_shape() const override { return spec_.input_shape(); }
  std::size_t classes() const override { return spec_.classes; }
  Var<float> logits(Tape<float>& tape, Var<float> batch) const override;
  Var<double> logits(Tape<double>& tape, Var<double> batch) const override;

  // Forward pass with caller-provided parameter variables (one per
  // parameter, layout order); training passes trainable leaves here.
  template <typename T>
  Var<T> forward(Var<T> batch, std::span<const Var<T>> params) const;

 private:
  ModelSpec spec_;
  std::vector<Parameter> parameters_;
};

// Uniform He initialisation, U(-sqrt(6/fan_in), sqrt(6/fan_in)) for weights
// and zero biases, drawn in layout order from a generator seeded by `seed`.
Classifier build(const ModelSpec& spec, std::uint64_t seed);

// Logits of a [B,C,H,W] batch without recording gradients.
Tensor<float> logits(const LogitModel& model, const Tensor<float>& batch);

// Argmax of the logits, lowest class on ties.
std::size_t predict(const LogitModel& model, const Tensor<float>& image);
std::vector<std::size_t> predict_batch(const LogitModel& model,
                                       const Tensor<float>& batch);

double accuracy(const LogitModel& model, const Dataset& data);

struct TrainOptions {
  std::size_t epochs = 3;
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0;
  double train_accuracy = 0;
  double test_accuracy = 0;  // NaN when no test set was given
};

// Minibatch SGD with momentum (v = m v + g; p -= lr v) on mean
// cross-entropy. Deterministic in all arguments.
std::vector<EpochStats> train(Classifier& model, const Dataset& train_set,
                              const Dataset* test_set, const TrainOptions& options);

// LIBC checkpoint: "LIBC" | u16 version | u8 arch | u32 C,H,W,classes |
// u16 array count | arrays (u16 name length, name, u8 rank, u32 dims,
// f32 payload) | u32 CRC32 of everything before it. Little-endian.
std::vector<std::uint8_t> serialize_checkpoint(const Classifier& model);
Classifier deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save(const Classifier& model, const std::filesystem::path& path);
Classifier load(const std::filesystem::path& path);

}  // namespace liboost
