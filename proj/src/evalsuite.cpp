#include "liboost/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "liboost/parallel.hpp"
#include "liboost/translate.hpp"

namespace liboost {

namespace {

constexpr std::size_t kChunk = 256;

void require_counts(const Dataset& examples, std::size_t deltas, const char* what) {
  if (examples.empty()) throw DataError(std::string(what) + ": empty example set");
  if (examples.size() != deltas) {
    throw DataError(std::string(what) + ": " + std::to_string(examples.size()) +
                    " examples but " + std::to_string(deltas) + " perturbations");
  }
}

Tensor<float> perturbed(const Tensor<float>& x, const Tensor<float>& delta) {
  if (x.shape() != delta.shape()) {
    throw ShapeError("perturbation " + shape_string(delta.shape()) + " does not match image " +
                     shape_string(x.shape()));
  }
  Tensor<float> out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += delta[i];
  return out;
}

// Predictions for x (clean) or x + delta, in chunks.
std::vector<std::size_t> predictions(const LogitModel& model, const Dataset& examples,
                                     std::span<const Tensor<float>> deltas) {
  std::vector<std::size_t> out;
  out.reserve(examples.size());
  for (std::size_t start = 0; start < examples.size(); start += kChunk) {
    const std::size_t end = std::min(examples.size(), start + kChunk);
    std::vector<Tensor<float>> batch;
    for (std::size_t e = start; e < end; ++e) {
      batch.push_back(deltas.empty() ? examples[e].image
                                     : perturbed(examples[e].image, deltas[e]));
    }
    for (std::size_t p : predict_batch(model, stack<float>(batch))) out.push_back(p);
  }
  return out;
}

std::string percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * rate);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

double attack_success_rate(const LogitModel& model, const Dataset& examples,
                           std::span<const Tensor<float>> deltas, AsrMode mode) {
  require_counts(examples, deltas.size(), "attack_success_rate");
  const auto adv = predictions(model, examples, deltas);
  std::vector<std::size_t> reference;
  if (mode == AsrMode::kCleanPredFlip) {
    reference = predictions(model, examples, {});
  } else {
    for (const auto& ex : examples.examples) reference.push_back(ex.label);
  }
  std::size_t fooled = 0;
  for (std::size_t e = 0; e < adv.size(); ++e) fooled += adv[e] != reference[e];
  return static_cast<double>(fooled) / static_cast<double>(adv.size());
}

InvarianceCount local_invariance(const LogitModel& model, const Tensor<float>& x,
                                 const Tensor<float>& delta, int k) {
  if (k < 0) throw ConfigError("local_invariance: k must be >= 0");
  if (x.rank() != 3 || static_cast<std::size_t>(k) >= std::min(x.dim(1), x.dim(2))) {
    throw ConfigError("local_invariance: k = " + std::to_string(k) + " too large for image " +
                      shape_string(x.shape()));
  }
  const std::size_t clean = predict(model, x);
  const std::vector<Offset> grid = full_grid(k);
  std::vector<Tensor<float>> batch;
  batch.reserve(grid.size());
  for (const Offset& o : grid) batch.push_back(perturbed(x, translate(delta, o)));
  InvarianceCount count;
  count.total = grid.size();
  for (std::size_t p : predict_batch(model, stack<float>(batch))) count.flips += p != clean;
  return count;
}

double mean_local_invariance(const LogitModel& model, const Dataset& examples,
                             std::span<const Tensor<float>> deltas, int k,
                             std::size_t workers) {
  require_counts(examples, deltas.size(), "mean_local_invariance");
  std::vector<double> values(examples.size());
  parallel_for(examples.size(), workers, [&](std::size_t e) {
    values[e] = local_invariance(model, examples[e].image, deltas[e], k).value();
  });
  double total = 0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

PropagationCount PerturbationSet::total() const {
  PropagationCount sum;
  for (const auto& c : counts) {
    sum.forward += c.forward;
    sum.backward += c.backward;
  }
  return sum;
}

PerturbationSet generate_perturbations(std::string_view attack, const LogitModel& surrogate,
                                       const Dataset& examples, const AttackConfig& cfg,
                                       std::size_t workers) {
  if (examples.empty()) throw DataError("generate_perturbations: empty example set");
  cfg.validate();
  PerturbationSet set;
  set.attack = std::string(attack);
  set.deltas.resize(examples.size());
  set.counts.resize(examples.size());
  parallel_for(examples.size(), workers, [&](std::size_t e) {
    const LabeledExample& ex = examples[e];
    AttackResult r = run_attack(attack, surrogate, ex.image, ex.label, cfg, ex.id);
    set.deltas[e] = std::move(r.delta);
    set.counts[e] = r.count;
  });
  return set;
}

std::vector<PerturbationRecord> to_records(const PerturbationSet& set, const Dataset& examples,
                                           float epsilon) {
  require_counts(examples, set.deltas.size(), "to_records");
  std::vector<PerturbationRecord> records;
  for (std::size_t e = 0; e < examples.size(); ++e) {
    records.push_back({static_cast<std::uint32_t>(examples[e].id), epsilon, set.deltas[e]});
  }
  return records;
}

TransferMatrix transfer_matrix(std::span<const PerturbationSet> attacks,
                               const NamedModel& surrogate, std::span<const NamedModel> victims,
                               const Dataset& examples, AsrMode mode, std::string eval_set) {
  if (attacks.empty()) throw ConfigError("transfer_matrix: no attacks");
  if (victims.empty()) throw ConfigError("transfer_matrix: no victims");
  TransferMatrix m;
  m.surrogate = surrogate.name;
  m.eval_set = std::move(eval_set);
  for (const auto& v : victims) {
    m.victims.push_back(v.name);
    m.white_box.push_back(v.name == surrogate.name);
  }
  for (const auto& a : attacks) {
    m.attacks.push_back(a.attack);
    std::vector<double> row;
    for (const auto& v : victims) {
      row.push_back(attack_success_rate(v.model.get(), examples, a.deltas, mode));
    }
    m.cells.push_back(std::move(row));
  }
  return m;
}

TransferMatrix transfer_matrix(std::span<const std::string> attacks,
                               const NamedModel& surrogate, std::span<const NamedModel> victims,
                               const Dataset& examples, const AttackConfig& cfg,
                               std::size_t workers) {
  if (attacks.empty()) throw ConfigError("transfer_matrix: no attacks");
  std::vector<PerturbationSet> sets;
  for (const auto& name : attacks) {
    sets.push_back(generate_perturbations(name, surrogate.model.get(), examples, cfg, workers));
  }
  return transfer_matrix(sets, surrogate, victims, examples, cfg.asr_mode);
}

Correlation invariance_transfer_correlation(std::span<const InvarianceRecord> records) {
  if (records.size() < 3) {
    throw DataError("correlation needs at least 3 records, got " + std::to_string(records.size()));
  }
  const double n = static_cast<double>(records.size());
  double mx = 0, my = 0;
  for (const auto& r : records) {
    mx += r.mean_invariance;
    my += r.mean_victim_asr;
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& r : records) {
    const double dx = r.mean_invariance - mx;
    const double dy = r.mean_victim_asr - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  // Compared directly: a constant column can leave rounding residue in sxx.
  auto constant = [&](auto field) {
    return std::all_of(records.begin(), records.end(),
                       [&](const InvarianceRecord& r) { return field(r) == field(records[0]); });
  };
  if (constant([](const InvarianceRecord& r) { return r.mean_invariance; }) || sxx == 0) {
    throw DataError("correlation: zero variance in mean invariance");
  }
  if (constant([](const InvarianceRecord& r) { return r.mean_victim_asr; }) || syy == 0) {
    throw DataError("correlation: zero variance in mean victim ASR");
  }
  Correlation c;
  c.pearson_r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  c.points.assign(records.begin(), records.end());
  return c;
}

std::string transfer_csv(const TransferMatrix& m) {
  std::ostringstream out;
  out << "attack,victim,asr_percent,white_box\n";
  for (std::size_t a = 0; a < m.attacks.size(); ++a) {
    for (std::size_t v = 0; v < m.victims.size(); ++v) {
      out << m.attacks[a] << ',' << m.victims[v] << ',' << percent(m.cells[a][v]) << ','
          << (m.white_box[v] ? "true" : "false") << '\n';
    }
  }
  return out.str();
}

std::string invariance_csv(std::span<const InvarianceRecord> records) {
  std::ostringstream out;
  out << "attack,surrogate,k,mean_invariance,mean_victim_asr\n";
  for (const auto& r : records) {
    out << r.attack << ',' << r.surrogate << ',' << r.k << ',' << fixed(r.mean_invariance, 4)
        << ',' << percent(r.mean_victim_asr) << '\n';
  }
  return out.str();
}

std::string correlation_json(const Correlation& c) {
  nlohmann::ordered_json doc;
  doc["pearson_r"] = c.pearson_r;
  doc["n"] = c.points.size();
  doc["points"] = nlohmann::ordered_json::array();
  for (const auto& r : c.points) {
    nlohmann::ordered_json p;
    p["attack"] = r.attack;
    p["surrogate"] = r.surrogate;
    p["k"] = r.k;
    p["mean_invariance"] = r.mean_invariance;
    p["mean_victim_asr"] = r.mean_victim_asr;
    doc["points"].push_back(std::move(p));
  }
  return doc.dump(2) + "\n";
}

BudgetReport verify_budget(std::span<const PerturbationRecord> records, const Dataset& examples,
                           bool pixel_clamp) {
  BudgetReport report;
  auto flag = [&](const std::string& what) {
    ++report.violations;
    if (report.details.size() < 10) report.details.push_back(what);
  };
  for (const auto& r : records) {
    ++report.records;
    const Tensor<float>& x = examples.by_id(r.example_id).image;
    if (x.shape() != r.delta.shape()) {
      flag("example " + std::to_string(r.example_id) + ": shape mismatch");
      continue;
    }
    const float limit = std::nextafter(r.epsilon, std::numeric_limits<float>::infinity());
    bool bad = false;
    for (std::size_t i = 0; i < x.size() && !bad; ++i) {
      const float d = r.delta[i];
      if (!(std::abs(d) <= limit)) bad = true;
      const float adv = x[i] + d;
      if (pixel_clamp && !(adv >= 0.0f && adv <= 1.0f)) bad = true;
    }
    if (bad) flag("example " + std::to_string(r.example_id) + ": budget violated");
  }
  return report;
}

}  // namespace liboost
