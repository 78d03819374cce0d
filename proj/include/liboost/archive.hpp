#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "liboost/tensor.hpp"

namespace liboost {

struct PerturbationRecord {
  std::uint32_t example_id = 0;
  float epsilon = 0;
  Tensor<float> delta;
};

// LIPD archive: "LIPD" | u16 version | u32 count | per record: u32 example
// id, f32 epsilon, u8 rank, u32 dims, f32 payload. Little-endian.
std::vector<std::uint8_t> serialize_archive(std::span<const PerturbationRecord> records);
std::vector<PerturbationRecord> deserialize_archive(std::span<const std::uint8_t> bytes);
void save_archive(std::span<const PerturbationRecord> records,
                  const std::filesystem::path& path);
std::vector<PerturbationRecord> load_archive(const std::filesystem::path& path);

}  // namespace liboost
