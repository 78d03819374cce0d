#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "liboost/tensor.hpp"

namespace liboost {

class LogitModel;

struct LabeledExample {
  Tensor<float> image;  // C,H,W with pixels in [0,1]
  std::size_t label = 0;
  // Position in the file or generator stream the example came from. Kept
  // through splits and subsets so archives can refer back to it.
  std::size_t id = 0;
};

enum class Split { kTrain, kTest, kAttackEval, kAll };

std::string_view split_name(Split split);

struct Dataset {
  std::vector<LabeledExample> examples;
  std::size_t classes = 0;
  Split split = Split::kAll;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  const LabeledExample& operator[](std::size_t i) const { return examples[i]; }

  // Images of the given rows stacked as [B,C,H,W].
  Tensor<float> images(std::span<const std::size_t> rows) const;
  std::vector<std::size_t> labels(std::span<const std::size_t> rows) const;

  // Example whose id is `id`; throws DataError when absent.
  const LabeledExample& by_id(std::size_t id) const;
};

// MNIST-style IDX pair: images magic 0x00000803 (count, rows, cols, u8
// pixels) and labels magic 0x00000801 (count, u8 labels). Pixels are
// scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path,
                 std::size_t classes = 10);

// Same as load_idx, from in-memory file contents.
Dataset parse_idx(std::span<const std::uint8_t> images_file,
                  std::span<const std::uint8_t> labels_file,
                  std::size_t classes = 10);

enum class ShapeClass : std::size_t { kSquare = 0, kCross = 1, kDisk = 2 };

// n single-channel images, each one antialiased square, cross or disk at a
// seeded random position at least 4 pixels from every border.
Dataset synth_shapes(std::size_t n, std::uint64_t seed, std::size_t size = 28);

// Seeded permutation, then the first `train_count` examples form the train
// split and the rest the test split.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data,
                                             std::size_t train_count,
                                             std::uint64_t seed);

// Seeded sample of n examples without replacement. With a model, only
// examples it classifies correctly are eligible.
Dataset attack_subset(const Dataset& data, std::size_t n, std::uint64_t seed,
                      const LogitModel* require_correct = nullptr);

}  // namespace liboost
