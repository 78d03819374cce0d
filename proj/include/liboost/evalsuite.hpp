#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "liboost/archive.hpp"
#include "liboost/attacks.hpp"
#include "liboost/datasets.hpp"

namespace liboost {

// Fraction of examples the perturbations fool. kCleanPredFlip counts
// f(x) != f(x + delta); kGroundTruth counts f(x + delta) != y.
double attack_success_rate(const LogitModel& model, const Dataset& examples,
                           std::span<const Tensor<float>> deltas, AsrMode mode);

struct InvarianceCount {
  std::size_t flips = 0;  // translations whose prediction differs from f(x)
  std::size_t total = 0;  // (2k+1)^2

  double value() const { return static_cast<double>(flips) / static_cast<double>(total); }
};

// Evaluates f(x + translate(delta, i, j)) for every offset of full_grid(k)
// and counts disagreements with the clean prediction f(x).
InvarianceCount local_invariance(const LogitModel& model, const Tensor<float>& x,
                                 const Tensor<float>& delta, int k);

double mean_local_invariance(const LogitModel& model, const Dataset& examples,
                             std::span<const Tensor<float>> deltas, int k,
                             std::size_t workers = 1);

struct NamedModel {
  std::string name;
  std::reference_wrapper<const LogitModel> model;
};

// Perturbations of one attack over an evaluation set, one per example, with
// the propagation counts each one cost. Example e uses generator stream
// examples[e].id.
struct PerturbationSet {
  std::string attack;
  std::vector<Tensor<float>> deltas;
  std::vector<PropagationCount> counts;

  PropagationCount total() const;
};

PerturbationSet generate_perturbations(std::string_view attack, const LogitModel& surrogate,
                                       const Dataset& examples, const AttackConfig& cfg,
                                       std::size_t workers = 1);

std::vector<PerturbationRecord> to_records(const PerturbationSet& set, const Dataset& examples,
                                           float epsilon);

// Rows are attacks, columns victims; cells hold ASR in [0,1].
struct TransferMatrix {
  std::string surrogate;
  std::string eval_set;
  std::vector<std::string> attacks;
  std::vector<std::string> victims;
  std::vector<bool> white_box;  // per victim: is it the surrogate
  std::vector<std::vector<double>> cells;
};

TransferMatrix transfer_matrix(std::span<const PerturbationSet> attacks,
                               const NamedModel& surrogate, std::span<const NamedModel> victims,
                               const Dataset& examples, AsrMode mode,
                               std::string eval_set = "attack-eval");

// Runs each attack once on the surrogate, then evaluates every victim.
TransferMatrix transfer_matrix(std::span<const std::string> attacks,
                               const NamedModel& surrogate, std::span<const NamedModel> victims,
                               const Dataset& examples, const AttackConfig& cfg,
                               std::size_t workers = 1);

struct InvarianceRecord {
  std::string attack;
  std::string surrogate;
  int k = 0;
  double mean_invariance = 0;
  double mean_victim_asr = 0;
};

struct Correlation {
  double pearson_r = 0;
  std::vector<InvarianceRecord> points;
};

// Pearson r between mean invariance and mean victim ASR. Needs at least
// three records and non-zero variance on both axes.
Correlation invariance_transfer_correlation(std::span<const InvarianceRecord> records);

// Report writers. Percentages carry one decimal.
std::string transfer_csv(const TransferMatrix& m);
std::string invariance_csv(std::span<const InvarianceRecord> records);
std::string correlation_json(const Correlation& c);

// Every record must satisfy |delta| <= epsilon + 1 ulp and, with
// pixel_clamp, 0 <= x + delta <= 1 in float arithmetic.
struct BudgetReport {
  std::size_t records = 0;
  std::size_t violations = 0;
  std::vector<std::string> details;  // first few violations

  bool ok() const { return violations == 0; }
};

BudgetReport verify_budget(std::span<const PerturbationRecord> records, const Dataset& examples,
                           bool pixel_clamp);

}  // namespace liboost
