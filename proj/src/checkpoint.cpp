#include <bit>
#include <string>

#include "liboost/binary_io.hpp"
#include "liboost/zoo.hpp"

namespace liboost {

namespace {

constexpr std::string_view kMagic = "LIBC";
constexpr std::uint16_t kVersion = 1;
// Training metadata travels as an extra rank-1 array:
// [seed low 32 bits, seed high 32 bits, epochs] as raw bit patterns, then
// the final accuracy as a plain float.
constexpr std::string_view kMetaName = "meta.training";

void write_array(ByteWriter& w, std::string_view name, const Tensor<float>& t) {
  w.u16(static_cast<std::uint16_t>(name.size()));
  w.raw(name);
  w.u8(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
  for (float v : t.data()) w.f32(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Classifier& model) {
  const ModelSpec& spec = model.spec();
  ByteWriter w;
  w.raw(kMagic);
  w.u16(kVersion);
  w.u8(static_cast<std::uint8_t>(spec.arch));
  w.u32(static_cast<std::uint32_t>(spec.channels));
  w.u32(static_cast<std::uint32_t>(spec.height));
  w.u32(static_cast<std::uint32_t>(spec.width));
  w.u32(static_cast<std::uint32_t>(spec.classes));
  w.u16(static_cast<std::uint16_t>(model.parameters().size() + 1));
  for (const auto& p : model.parameters()) write_array(w, p.name, p.value);

  const TrainingMetadata& meta = model.metadata;
  Tensor<float> packed({4});
  packed[0] = std::bit_cast<float>(static_cast<std::uint32_t>(meta.seed));
  packed[1] = std::bit_cast<float>(static_cast<std::uint32_t>(meta.seed >> 32));
  packed[2] = std::bit_cast<float>(meta.epochs);
  packed[3] = meta.final_accuracy;
  write_array(w, kMetaName, packed);

  std::vector<std::uint8_t> bytes = w.bytes();
  const std::uint32_t crc = crc32(bytes.data(), bytes.size());
  for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
  return bytes;
}

Classifier deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kMagic.size()) != kMagic) {
    throw FormatError("checkpoint: bad magic (expected \"LIBC\")");
  }
  if (bytes.size() < kMagic.size() + 2 + 4) throw FormatError("checkpoint: truncated file");
  const std::size_t body = bytes.size() - 4;
  ByteReader r(bytes.data(), body, "checkpoint");
  r.raw(kMagic.size());
  const std::uint16_t version = r.u16();
  if (version != kVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }

  const std::uint8_t arch_id = r.u8();
  if (arch_id > static_cast<std::uint8_t>(Architecture::kCnnB)) {
    throw FormatError("checkpoint: unknown architecture id " + std::to_string(arch_id));
  }
  ModelSpec spec;
  spec.arch = static_cast<Architecture>(arch_id);
  spec.channels = r.u32();
  spec.height = r.u32();
  spec.width = r.u32();
  spec.classes = r.u32();
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  const auto layout = parameter_layout(spec);

  const std::size_t arrays = r.u16();
  std::vector<Parameter> params;
  TrainingMetadata meta;
  for (std::size_t a = 0; a < arrays; ++a) {
    const std::string name = r.raw(r.u16());
    const std::size_t rank = r.u8();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::size_t count = shape_size(shape);
    if (count * 4 > r.remaining()) {
      throw FormatError("checkpoint: array '" + name + "' " + shape_string(shape) +
                        " is larger than the remaining payload");
    }
    std::vector<float> values(count);
    for (auto& v : values) v = r.f32();

    if (name == kMetaName) {
      if (count != 4) throw FormatError("checkpoint: malformed training metadata");
      meta.seed = std::bit_cast<std::uint32_t>(values[0]) |
                  (std::uint64_t{std::bit_cast<std::uint32_t>(values[1])} << 32);
      meta.epochs = std::bit_cast<std::uint32_t>(values[2]);
      meta.final_accuracy = values[3];
      continue;
    }
    const std::size_t slot = params.size();
    if (slot >= layout.size() || layout[slot].name != name || layout[slot].shape != shape) {
      throw FormatError("checkpoint: shape table inconsistent with " +
                        std::string(architecture_name(spec.arch)) + " at array '" + name +
                        "' " + shape_string(shape));
    }
    params.push_back({name, Tensor<float>(std::move(shape), std::move(values))});
  }
  if (params.size() != layout.size()) {
    throw FormatError("checkpoint: " + std::to_string(params.size()) + " parameter arrays, " +
                      std::string(architecture_name(spec.arch)) + " needs " +
                      std::to_string(layout.size()));
  }
  if (r.position() != body) {
    throw FormatError("checkpoint: " + std::to_string(body - r.position()) +
                      " unexpected bytes before the checksum");
  }
  ByteReader tail(bytes.data() + body, 4, "checkpoint");
  const std::uint32_t stored = tail.u32();
  if (stored != crc32(bytes.data(), body)) throw FormatError("checkpoint: CRC32 mismatch");

  Classifier model(spec, std::move(params));
  model.metadata = meta;
  return model;
}

void save(const Classifier& model, const std::filesystem::path& path) {
  write_file(path, serialize_checkpoint(model));
}

Classifier load(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return deserialize_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace liboost
