#include "liboost/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "liboost/binary_io.hpp"
#include "liboost/rng.hpp"
#include "liboost/zoo.hpp"

namespace liboost {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

// In-place Fisher-Yates.
void shuffle(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kAttackEval: return "attack-eval";
    case Split::kAll: return "all";
  }
  return "?";
}

Tensor<float> Dataset::images(std::span<const std::size_t> rows) const {
  std::vector<Tensor<float>> items;
  items.reserve(rows.size());
  for (std::size_t r : rows) items.push_back(examples.at(r).image);
  return stack<float>(items);
}

std::vector<std::size_t> Dataset::labels(std::span<const std::size_t> rows) const {
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(examples.at(r).label);
  return out;
}

const LabeledExample& Dataset::by_id(std::size_t id) const {
  // Datasets loaded from files keep ids equal to positions.
  if (id < examples.size() && examples[id].id == id) return examples[id];
  auto it = std::find_if(examples.begin(), examples.end(),
                         [id](const LabeledExample& e) { return e.id == id; });
  if (it == examples.end()) {
    throw DataError("example id " + std::to_string(id) + " not in dataset");
  }
  return *it;
}

Dataset parse_idx(std::span<const std::uint8_t> images_file,
                  std::span<const std::uint8_t> labels_file, std::size_t classes) {
  ByteReader images(images_file.data(), images_file.size(), "IDX images");
  ByteReader labels(labels_file.data(), labels_file.size(), "IDX labels");

  const std::uint32_t image_magic = images.u32_be();
  if (image_magic != kIdxImagesMagic) {
    throw FormatError("IDX images: bad magic " + hex(image_magic) + ", expected " +
                      hex(kIdxImagesMagic));
  }
  const std::uint32_t label_magic = labels.u32_be();
  if (label_magic != kIdxLabelsMagic) {
    throw FormatError("IDX labels: bad magic " + hex(label_magic) + ", expected " +
                      hex(kIdxLabelsMagic));
  }
  const std::size_t count = images.u32_be();
  const std::size_t rows = images.u32_be();
  const std::size_t cols = images.u32_be();
  const std::size_t label_count = labels.u32_be();
  if (count != label_count) {
    throw DataError("IDX: " + std::to_string(count) + " images but " +
                    std::to_string(label_count) + " labels");
  }
  if (rows == 0 || cols == 0) throw FormatError("IDX images: zero-sized image");

  const std::size_t pixels = rows * cols;
  const std::uint8_t* image_bytes = images.take(count * pixels);
  const std::uint8_t* label_bytes = labels.take(count);

  Dataset data;
  data.classes = classes;
  data.examples.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<float> px(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
      px[p] = static_cast<float>(image_bytes[n * pixels + p]) / 255.0f;
    }
    const std::size_t label = label_bytes[n];
    if (label >= classes) {
      throw DataError("IDX labels: label " + std::to_string(label) + " at index " +
                      std::to_string(n) + " exceeds class count " +
                      std::to_string(classes));
    }
    data.examples.push_back({Tensor<float>({1, rows, cols}, std::move(px)), label, n});
  }
  return data;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, std::size_t classes) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);
  return parse_idx(images, labels, classes);
}

Dataset synth_shapes(std::size_t n, std::uint64_t seed, std::size_t size) {
  if (n == 0) throw DataError("synth_shapes: n must be >= 1");
  if (size < 24) throw DataError("synth_shapes: images must be at least 24 pixels");
  constexpr int kSuper = 4;
  constexpr double kMargin = 4.0;

  Rng rng(seed);
  Dataset data;
  data.classes = 3;
  data.examples.reserve(n);
  const double extent = static_cast<double>(size);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const auto shape = static_cast<ShapeClass>(rng.below(3));
    const double r = rng.uniform(4.0, 7.0);
    const double lo = kMargin + 0.5 + r;
    const double hi = extent - kMargin - 1.5 - r;
    const double cx = rng.uniform(lo, hi);
    const double cy = rng.uniform(lo, hi);
    const double arm = std::max(1.0, r / 3.0);

    auto inside = [&](double dx, double dy) {
      switch (shape) {
        case ShapeClass::kSquare:
          return std::abs(dx) <= r && std::abs(dy) <= r;
        case ShapeClass::kCross:
          return (std::abs(dx) <= r && std::abs(dy) <= arm) ||
                 (std::abs(dy) <= r && std::abs(dx) <= arm);
        case ShapeClass::kDisk:
          return dx * dx + dy * dy <= r * r;
      }
      return false;
    };

    Tensor<float> image({1, size, size});
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        int hits = 0;
        for (int sy = 0; sy < kSuper; ++sy) {
          for (int sx = 0; sx < kSuper; ++sx) {
            const double px = static_cast<double>(x) + (sx + 0.5) / kSuper - 0.5;
            const double py = static_cast<double>(y) + (sy + 0.5) / kSuper - 0.5;
            hits += inside(px - cx, py - cy);
          }
        }
        image.at(0, y, x) = static_cast<float>(hits) / (kSuper * kSuper);
      }
    }
    data.examples.push_back({std::move(image), static_cast<std::size_t>(shape), idx});
  }
  return data;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data,
                                             std::size_t train_count,
                                             std::uint64_t seed) {
  if (train_count > data.size()) {
    throw DataError("train_test_split: " + std::to_string(train_count) +
                    " training examples requested from " +
                    std::to_string(data.size()));
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(order, rng);

  Dataset train{{}, data.classes, Split::kTrain};
  Dataset test{{}, data.classes, Split::kTest};
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < train_count ? train : test).examples.push_back(data.examples[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

Dataset attack_subset(const Dataset& data, std::size_t n, std::uint64_t seed,
                      const LogitModel* require_correct) {
  if (n > data.size()) {
    throw DataError("attack_subset: n=" + std::to_string(n) + " exceeds dataset size " +
                    std::to_string(data.size()));
  }
  std::vector<std::size_t> eligible;
  if (require_correct == nullptr) {
    eligible.resize(data.size());
    std::iota(eligible.begin(), eligible.end(), std::size_t{0});
  } else {
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < data.size(); start += kChunk) {
      std::vector<std::size_t> rows(std::min(kChunk, data.size() - start));
      std::iota(rows.begin(), rows.end(), start);
      const auto predicted = predict_batch(*require_correct, data.images(rows));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (predicted[i] == data.examples[rows[i]].label) eligible.push_back(rows[i]);
      }
    }
  }
  if (eligible.size() < n) {
    throw DataError("attack_subset: fewer than n eligible examples (" +
                    std::to_string(eligible.size()) + " < " + std::to_string(n) + ")");
  }
  Rng rng(seed);
  shuffle(eligible, rng);
  Dataset subset{{}, data.classes, Split::kAttackEval};
  subset.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) subset.examples.push_back(data.examples[eligible[i]]);
  return subset;
}

}  // namespace liboost
