#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "liboost/attacks.hpp"
#include "liboost/zoo.hpp"

namespace liboost {

struct DatasetConfig {
  std::string source = "synth";  // synth | idx
  std::string images;            // idx only
  std::string labels;            // idx only
  std::size_t count = 1200;      // synth: examples generated; idx: leading examples kept (0 = all)
  std::size_t train_count = 900;
  std::size_t attack_count = 100;
  std::uint64_t seed = 0;
};

struct ModelConfig {
  std::string name;
  Architecture arch = Architecture::kCnnA;
  std::uint64_t seed = 0;
  TrainOptions train;
};

struct EvalConfig {
  std::vector<std::string> victims;
  int k = 4;
  AsrMode asr_mode = AsrMode::kCleanPredFlip;
};

struct RunConfig {
  DatasetConfig dataset;
  std::vector<ModelConfig> models;
  std::vector<std::string> surrogates;  // several = equal-weight logit ensemble
  std::vector<std::string> attacks;     // attacks run by `report`
  AttackConfig attack;
  EvalConfig eval;
  std::string output_dir = "runs/default";

  const ModelConfig& model(std::string_view name) const;
  std::string surrogate_name() const;  // names joined by '+'
};

// Parses and validates a run config. Unknown keys, missing seeds and
// inconsistent references are ConfigErrors naming the offending key.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides = {});

// Applies "section.key=value" to a config document. The value is read as
// JSON when it parses, as a string otherwise. Array elements are addressed
// by index ("models.0.epochs=1").
void apply_override(nlohmann::json& doc, std::string_view assignment);

// Fully resolved config, every default filled in.
nlohmann::ordered_json to_json(const RunConfig& cfg);

// 8 hex digits identifying everything but the output directory.
std::string config_hash(const RunConfig& cfg);

}  // namespace liboost
