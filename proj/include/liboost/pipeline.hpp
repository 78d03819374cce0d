#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "liboost/config.hpp"
#include "liboost/evalsuite.hpp"

namespace liboost {

// Fixed layout under the run's output directory.
struct Workspace {
  std::filesystem::path root;

  explicit Workspace(const RunConfig& cfg) : root(cfg.output_dir) {}
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path archives() const { return root / "archives"; }
  std::filesystem::path reports() const { return root / "reports"; }
  std::filesystem::path checkpoint(const std::string& model) const {
    return checkpoints() / (model + ".libc");
  }
};

struct SplitData {
  Dataset train;
  Dataset test;
};

SplitData load_data(const DatasetConfig& cfg);

ModelSpec model_spec(Architecture arch, const Dataset& data);

struct TrainedModel {
  std::string name;
  std::string arch;
  std::size_t parameters = 0;
  std::size_t epochs = 0;
  double test_accuracy = 0;
};

// Trains every model of the config and writes its checkpoint.
std::vector<TrainedModel> cmd_train(const RunConfig& cfg, std::ostream& log,
                                    std::size_t workers = 1);

// Single checkpoint or equal-weight ensemble of several.
class Surrogate {
 public:
  Surrogate(std::vector<std::string> names, std::vector<Classifier> members);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& names() const { return names_; }
  const LogitModel& model() const;

 private:
  std::vector<std::string> names_;
  std::string name_;
  std::vector<Classifier> members_;
  std::unique_ptr<Ensemble> ensemble_;
};

Classifier load_model(const RunConfig& cfg, const std::string& name);
Surrogate load_surrogate(const RunConfig& cfg,
                         const std::optional<std::filesystem::path>& checkpoint = {});

// Correctly classified test examples the attacks run on.
Dataset evaluation_set(const RunConfig& cfg, const SplitData& data, const LogitModel& surrogate);

struct AttackOutput {
  std::filesystem::path archive;
  std::filesystem::path sidecar;
  PerturbationSet set;
  Dataset examples;
};

// archives/<attack>-<surrogate>-s<seed>-<config hash>.lipd; the surrogate
// defaults to the configured one.
std::filesystem::path archive_path(const RunConfig& cfg, const std::string& attack,
                                   const std::string& surrogate = "");

// Runs one attack over the evaluation set and writes the LIPD archive and
// its JSON sidecar.
AttackOutput cmd_attack(const RunConfig& cfg, const std::string& attack, std::ostream& log,
                        std::size_t workers = 1,
                        const std::optional<std::filesystem::path>& surrogate_checkpoint = {});

// An archive matched back to its examples through the sidecar.
struct OpenedArchive {
  std::string attack;
  std::string label;  // attack name, plus k and N for translation attacks
  std::string surrogate;
  std::vector<std::string> surrogate_checkpoints;
  std::vector<PerturbationRecord> records;
  Dataset examples;
  std::vector<Tensor<float>> deltas;
};

OpenedArchive open_archive(const SplitData& data, const std::filesystem::path& archive);

struct TransferOutput {
  TransferMatrix matrix;
  std::filesystem::path csv;
};

TransferOutput cmd_eval_transfer(const RunConfig& cfg,
                                 const std::vector<std::filesystem::path>& archives,
                                 std::ostream& log);

struct InvarianceOutput {
  std::vector<InvarianceRecord> records;
  std::optional<Correlation> correlation;
  std::filesystem::path csv;
};

InvarianceOutput cmd_eval_invariance(const RunConfig& cfg,
                                     const std::vector<std::filesystem::path>& archives,
                                     std::ostream& log, std::size_t workers = 1);

struct SweepRow {
  std::string param;
  long value = 0;
  std::string attack;
  std::size_t examples = 0;
  double white_box_asr = 0;
  double mean_victim_asr = 0;
  double mean_invariance = 0;
  PropagationCount per_example;  // every example costs the same
};

struct SweepOutput {
  std::vector<SweepRow> rows;
  std::filesystem::path csv;
};

// param is "k" (attack.li.k) or "N" (attack.li.samples).
SweepOutput cmd_sweep(const RunConfig& cfg, const std::string& attack, const std::string& param,
                      const std::vector<long>& values, std::ostream& log,
                      std::size_t workers = 1);

struct ReportOutput {
  std::vector<std::filesystem::path> archives;
  TransferOutput transfer;
  InvarianceOutput invariance;
  std::filesystem::path summary;
};

// Runs every attack named in the config (reusing archives already on disk),
// evaluates them and writes a markdown summary.
ReportOutput cmd_report(const RunConfig& cfg, std::ostream& log, std::size_t workers = 1);

}  // namespace liboost
