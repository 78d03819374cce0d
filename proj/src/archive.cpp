#include "liboost/archive.hpp"

#include <string>

#include "liboost/binary_io.hpp"

namespace liboost {

namespace {

constexpr char kMagic[] = "LIPD";
constexpr std::uint16_t kVersion = 1;

}  // namespace

std::vector<std::uint8_t> serialize_archive(std::span<const PerturbationRecord> records) {
  ByteWriter out;
  out.raw(kMagic);
  out.u16(kVersion);
  out.u32(static_cast<std::uint32_t>(records.size()));
  for (const PerturbationRecord& r : records) {
    out.u32(r.example_id);
    out.f32(r.epsilon);
    out.u8(static_cast<std::uint8_t>(r.delta.rank()));
    for (std::size_t d : r.delta.shape()) out.u32(static_cast<std::uint32_t>(d));
    for (float v : r.delta.data()) out.f32(v);
  }
  return out.bytes();
}

std::vector<PerturbationRecord> deserialize_archive(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes.data(), bytes.size(), "perturbation archive");
  if (in.raw(4) != kMagic) throw FormatError("perturbation archive: bad magic (expected LIPD)");
  const std::uint16_t version = in.u16();
  if (version != kVersion) {
    throw FormatError("perturbation archive: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32();
  std::vector<PerturbationRecord> records;
  for (std::uint32_t n = 0; n < count; ++n) {
    PerturbationRecord r;
    r.example_id = in.u32();
    r.epsilon = in.f32();
    const std::uint8_t rank = in.u8();
    if (rank == 0) throw FormatError("perturbation archive: record " + std::to_string(n) + " has rank 0");
    Shape shape;
    for (std::uint8_t d = 0; d < rank; ++d) shape.push_back(in.u32());
    for (std::size_t d : shape) {
      if (d == 0) throw FormatError("perturbation archive: zero dimension in record " + std::to_string(n));
    }
    const std::size_t size = shape_size(shape);
    if (size > in.remaining() / 4) in.take(size * 4);  // reports truncation
    std::vector<float> data(size);
    for (float& v : data) v = in.f32();
    r.delta = Tensor<float>(std::move(shape), std::move(data));
    records.push_back(std::move(r));
  }
  if (in.remaining() != 0) {
    throw FormatError("perturbation archive: " + std::to_string(in.remaining()) +
                      " unexpected trailing bytes");
  }
  return records;
}

void save_archive(std::span<const PerturbationRecord> records,
                  const std::filesystem::path& path) {
  write_file(path, serialize_archive(records));
}

std::vector<PerturbationRecord> load_archive(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return deserialize_archive(bytes);
}

}  // namespace liboost
