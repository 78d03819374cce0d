#include "liboost/zoo.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "liboost/ops.hpp"
#include "liboost/rng.hpp"

namespace liboost {

std::string_view architecture_name(Architecture arch) {
  switch (arch) {
    case Architecture::kMlp2x256: return "mlp-2x256";
    case Architecture::kCnnA: return "cnn-a";
    case Architecture::kCnnB: return "cnn-b";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  for (auto arch : {Architecture::kMlp2x256, Architecture::kCnnA, Architecture::kCnnB}) {
    if (architecture_name(arch) == name) return arch;
  }
  throw ConfigError("unknown architecture id '" + std::string(name) +
                    "' (expected mlp-2x256, cnn-a or cnn-b)");
}

void ModelSpec::validate() const {
  if (classes < 2) {
    throw ConfigError("model spec: class count must be >= 2, got " +
                      std::to_string(classes));
  }
  if (channels == 0) throw ConfigError("model spec: zero channels");
  const std::size_t min_side = arch == Architecture::kCnnB   ? 8
                               : arch == Architecture::kCnnA ? 4
                                                             : 1;
  if (height < min_side || width < min_side) {
    throw ConfigError("model spec: " + std::string(architecture_name(arch)) +
                      " needs inputs of at least " + std::to_string(min_side) +
                      " pixels per side");
  }
}

namespace {

void conv_slots(std::vector<ParameterSlot>& out, const std::string& name,
                std::size_t in_c, std::size_t out_c) {
  out.push_back({name + ".weight", {out_c, in_c, 3, 3}, in_c * 9});
  out.push_back({name + ".bias", {out_c}, in_c * 9});
}

void fc_slots(std::vector<ParameterSlot>& out, const std::string& name,
              std::size_t in, std::size_t outputs) {
  out.push_back({name + ".weight", {in, outputs}, in});
  out.push_back({name + ".bias", {outputs}, in});
}

}  // namespace

std::vector<ParameterSlot> parameter_layout(const ModelSpec& spec) {
  spec.validate();
  std::vector<ParameterSlot> slots;
  const std::size_t c = spec.channels, h = spec.height, w = spec.width;
  switch (spec.arch) {
    case Architecture::kMlp2x256:
      fc_slots(slots, "fc1", c * h * w, 256);
      fc_slots(slots, "fc2", 256, 256);
      fc_slots(slots, "fc3", 256, spec.classes);
      break;
    case Architecture::kCnnA:
      conv_slots(slots, "conv1", c, 16);
      conv_slots(slots, "conv2", 16, 32);
      fc_slots(slots, "fc", 32 * (h / 2 / 2) * (w / 2 / 2), spec.classes);
      break;
    case Architecture::kCnnB:
      conv_slots(slots, "conv1", c, 8);
      conv_slots(slots, "conv2", 8, 16);
      conv_slots(slots, "conv3", 16, 32);
      fc_slots(slots, "fc", 32 * (h / 2 / 2 / 2) * (w / 2 / 2 / 2), spec.classes);
      break;
  }
  return slots;
}

Classifier::Classifier(ModelSpec spec, std::vector<Parameter> parameters)
    : spec_(spec), parameters_(std::move(parameters)) {
  const auto layout = parameter_layout(spec_);
  if (layout.size() != parameters_.size()) {
    throw ShapeError("classifier " + std::string(architecture_name(spec_.arch)) +
                     " expects " + std::to_string(layout.size()) + " parameters, got " +
                     std::to_string(parameters_.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (parameters_[i].name != layout[i].name ||
        parameters_[i].value.shape() != layout[i].shape) {
      throw ShapeError("parameter " + std::to_string(i) + " is '" + parameters_[i].name +
                       "' " + shape_string(parameters_[i].value.shape()) + ", expected '" +
                       layout[i].name + "' " + shape_string(layout[i].shape));
    }
  }
}

std::size_t Classifier::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters_) n += p.value.size();
  return n;
}

template <typename T>
Var<T> Classifier::forward(Var<T> batch, std::span<const Var<T>> params) const {
  const Shape& in = batch.shape();
  if (in.size() != 4 || in[1] != spec_.channels || in[2] != spec_.height ||
      in[3] != spec_.width) {
    throw ShapeError("classifier expects [B," + std::to_string(spec_.channels) + "," +
                     std::to_string(spec_.height) + "," + std::to_string(spec_.width) +
                     "] input, got " + shape_string(in));
  }
  const Conv2dParams same{1, 1};
  auto conv_block = [&](Var<T> x, std::size_t slot) {
    return maxpool2x2(relu(add_bias(conv2d(x, params[slot], same), params[slot + 1])));
  };
  auto dense = [&](Var<T> x, std::size_t slot) {
    return add_bias(matmul(x, params[slot]), params[slot + 1]);
  };

  switch (spec_.arch) {
    case Architecture::kMlp2x256: {
      Var<T> h = relu(dense(flatten(batch), 0));
      h = relu(dense(h, 2));
      return dense(h, 4);
    }
    case Architecture::kCnnA: {
      Var<T> h = conv_block(batch, 0);
      h = conv_block(h, 2);
      return dense(flatten(h), 4);
    }
    case Architecture::kCnnB: {
      Var<T> h = conv_block(batch, 0);
      h = conv_block(h, 2);
      h = conv_block(h, 4);
      return dense(flatten(h), 6);
    }
  }
  throw Error("unreachable architecture");
}

template Var<float> Classifier::forward(Var<float>, std::span<const Var<float>>) const;
template Var<double> Classifier::forward(Var<double>, std::span<const Var<double>>) const;

Var<float> Classifier::logits(Tape<float>& tape, Var<float> batch) const {
  std::vector<Var<float>> params;
  params.reserve(parameters_.size());
  for (const auto& p : parameters_) params.push_back(tape.constant(p.value));
  return forward<float>(batch, params);
}

Var<double> Classifier::logits(Tape<double>& tape, Var<double> batch) const {
  std::vector<Var<double>> params;
  params.reserve(parameters_.size());
  for (const auto& p : parameters_) params.push_back(tape.constant(p.value.cast<double>()));
  return forward<double>(batch, params);
}

Classifier build(const ModelSpec& spec, std::uint64_t seed) {
  const auto layout = parameter_layout(spec);
  Rng rng(seed);
  std::vector<Parameter> params;
  params.reserve(layout.size());
  for (const auto& slot : layout) {
    Tensor<float> value(slot.shape);
    if (slot.shape.size() > 1) {
      const double bound = std::sqrt(6.0 / static_cast<double>(slot.fan_in));
      for (auto& v : value.data()) v = static_cast<float>(rng.uniform(-bound, bound));
    }
    params.push_back({slot.name, std::move(value)});
  }
  Classifier model(spec, std::move(params));
  model.metadata.seed = seed;
  return model;
}

Tensor<float> logits(const LogitModel& model, const Tensor<float>& batch) {
  Tape<float> tape;
  return model.logits(tape, tape.constant(batch)).value();
}

std::vector<std::size_t> predict_batch(const LogitModel& model, const Tensor<float>& batch) {
  const Tensor<float> out = logits(model, batch);
  const std::size_t classes = out.dim(1);
  std::vector<std::size_t> predicted(out.dim(0));
  for (std::size_t n = 0; n < predicted.size(); ++n) {
    predicted[n] = argmax<float>(out.data().subspan(n * classes, classes));
  }
  return predicted;
}

std::size_t predict(const LogitModel& model, const Tensor<float>& image) {
  if (image.shape() != model.input_shape()) {
    throw ShapeError("predict: image " + shape_string(image.shape()) +
                     " does not match model input " + shape_string(model.input_shape()));
  }
  Shape batched{1};
  batched.insert(batched.end(), image.shape().begin(), image.shape().end());
  return predict_batch(model, image.reshaped(batched))[0];
}

double accuracy(const LogitModel& model, const Dataset& data) {
  if (data.empty()) throw DataError("accuracy: empty dataset");
  constexpr std::size_t kChunk = 256;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    std::vector<std::size_t> rows(std::min(kChunk, data.size() - start));
    std::iota(rows.begin(), rows.end(), start);
    const auto predicted = predict_batch(model, data.images(rows));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      correct += predicted[i] == data.examples[rows[i]].label;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<EpochStats> train(Classifier& model, const Dataset& train_set,
                              const Dataset* test_set, const TrainOptions& options) {
  if (train_set.empty()) throw DataError("train: empty dataset");
  if (!(options.lr >= 0) || !std::isfinite(options.lr)) {
    throw ConfigError("train: learning rate must be finite and >= 0");
  }
  if (!(options.momentum >= 0 && options.momentum < 1)) {
    throw ConfigError("train: momentum must lie in [0, 1)");
  }
  if (options.batch == 0) throw ConfigError("train: batch size must be >= 1");
  if (train_set.classes != model.classes()) {
    throw ConfigError("train: dataset has " + std::to_string(train_set.classes) +
                      " classes, model " + std::to_string(model.classes()));
  }

  auto params = model.mutable_parameters();
  std::vector<Tensor<float>> velocity;
  for (const auto& p : params) velocity.emplace_back(p.value.shape(), 0.0f);
  const auto lr = static_cast<float>(options.lr);
  const auto mu = static_cast<float>(options.momentum);

  std::vector<EpochStats> history;
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::stream(options.seed, epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0;
    std::size_t correct = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch) {
      const std::span<const std::size_t> rows(
          order.data() + start, std::min(options.batch, order.size() - start));
      const auto labels = train_set.labels(rows);

      Tape<float> tape;
      std::vector<Var<float>> vars;
      vars.reserve(params.size());
      for (const auto& p : params) vars.push_back(tape.variable(p.value));
      Var<float> out;
      Var<float> loss;
      try {
        out = model.forward<float>(tape.constant(train_set.images(rows)), vars);
        loss = cross_entropy(out, labels);
      } catch (const NumericError& e) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batches) + " (" + e.what() + ")");
      }
      tape.backward(loss);

      for (std::size_t n = 0; n < rows.size(); ++n) {
        const std::size_t classes = out.shape()[1];
        correct += argmax<float>(out.value().data().subspan(n * classes, classes)) == labels[n];
      }
      loss_sum += loss.value()[0];
      ++batches;

      for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor<float> g = tape.grad(vars[i]);
        auto& v = velocity[i];
        auto& p = params[i].value;
        for (std::size_t e = 0; e < p.size(); ++e) {
          v[e] = mu * v[e] + g[e];
          p[e] -= lr * v[e];
        }
      }
    }

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.mean_loss = loss_sum / static_cast<double>(batches);
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    stats.test_accuracy = test_set != nullptr && !test_set->empty()
                              ? accuracy(model, *test_set)
                              : std::numeric_limits<double>::quiet_NaN();
    history.push_back(stats);
  }
  model.metadata.seed = options.seed;
  model.metadata.epochs = static_cast<std::uint32_t>(options.epochs);
  if (!history.empty()) {
    const auto& last = history.back();
    model.metadata.final_accuracy = static_cast<float>(
        std::isnan(last.test_accuracy) ? last.train_accuracy : last.test_accuracy);
  }
  return history;
}

}  // namespace liboost
