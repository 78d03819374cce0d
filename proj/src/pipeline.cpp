#include "liboost/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "liboost/binary_io.hpp"
#include "liboost/parallel.hpp"

namespace liboost {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * rate);
  return buf;
}

std::string run_tag(const RunConfig& cfg) {
  return "s" + std::to_string(cfg.attack.seed) + "-" + config_hash(cfg);
}

fs::path sidecar_for(const fs::path& archive) {
  fs::path p = archive;
  return p.replace_extension(".json");
}

bool is_white_box(const std::string& model, const std::vector<std::string>& surrogates) {
  return std::find(surrogates.begin(), surrogates.end(), model) != surrogates.end();
}

struct LoadedModels {
  std::vector<std::string> names;
  std::vector<Classifier> models;

  std::vector<NamedModel> named() const {
    std::vector<NamedModel> out;
    for (std::size_t i = 0; i < names.size(); ++i) out.push_back({names[i], models[i]});
    return out;
  }
};

// Surrogate members first (white-box columns), then the configured victims.
LoadedModels load_columns(const RunConfig& cfg, const OpenedArchive& archive) {
  LoadedModels out;
  for (std::size_t i = 0; i < archive.surrogate_checkpoints.size(); ++i) {
    const fs::path path = archive.surrogate_checkpoints[i];
    out.names.push_back(path.stem().string());
    out.models.push_back(load(path));
  }
  for (const auto& v : cfg.eval.victims) {
    if (std::find(out.names.begin(), out.names.end(), v) != out.names.end()) continue;
    out.names.push_back(v);
    out.models.push_back(load_model(cfg, v));
  }
  return out;
}

std::vector<std::string> split_names(const std::string& joined) {
  std::vector<std::string> out;
  std::stringstream in(joined);
  for (std::string part; std::getline(in, part, '+');) out.push_back(part);
  return out;
}

}  // namespace

SplitData load_data(const DatasetConfig& cfg) {
  Dataset all;
  if (cfg.source == "idx") {
    if (!fs::exists(cfg.images) || !fs::exists(cfg.labels)) {
      throw DataError("dataset files missing: " + cfg.images + ", " + cfg.labels);
    }
    all = load_idx(cfg.images, cfg.labels);
    if (cfg.count > 0 && cfg.count < all.size()) all.examples.resize(cfg.count);
  } else {
    all = synth_shapes(cfg.count, cfg.seed);
  }
  if (cfg.train_count >= all.size()) {
    throw DataError("dataset has " + std::to_string(all.size()) +
                    " examples, not enough for train_count " + std::to_string(cfg.train_count) +
                    " plus a test split");
  }
  auto [train, test] = train_test_split(all, cfg.train_count, cfg.seed);
  return {std::move(train), std::move(test)};
}

ModelSpec model_spec(Architecture arch, const Dataset& data) {
  if (data.empty()) throw DataError("cannot derive a model spec from an empty dataset");
  const Shape& shape = data[0].image.shape();
  ModelSpec spec;
  spec.arch = arch;
  spec.channels = shape[0];
  spec.height = shape[1];
  spec.width = shape[2];
  spec.classes = data.classes;
  spec.validate();
  return spec;
}

std::vector<TrainedModel> cmd_train(const RunConfig& cfg, std::ostream& log,
                                    std::size_t workers) {
  const SplitData data = load_data(cfg.dataset);
  const Workspace ws(cfg);
  std::vector<TrainedModel> rows(cfg.models.size());
  parallel_for(cfg.models.size(), workers, [&](std::size_t i) {
    const ModelConfig& mc = cfg.models[i];
    Classifier model = build(model_spec(mc.arch, data.train), mc.seed);
    std::vector<EpochStats> history;
    try {
      history = train(model, data.train, &data.test, mc.train);
    } catch (const NumericError& e) {
      throw NumericError("training " + mc.name + ": " + e.what());
    }
    save(model, ws.checkpoint(mc.name));
    rows[i] = {mc.name, std::string(architecture_name(mc.arch)), model.parameter_count(),
               mc.train.epochs, history.back().test_accuracy};
  });

  std::ostringstream csv;
  csv << "model,arch,parameters,epochs,test_accuracy_percent\n";
  log << "model        arch        params  epochs  test acc\n";
  for (const auto& r : rows) {
    csv << r.name << ',' << r.arch << ',' << r.parameters << ',' << r.epochs << ','
        << percent(r.test_accuracy) << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %-10s %7zu  %6zu  %6s%%\n", r.name.c_str(),
                  r.arch.c_str(), r.parameters, r.epochs, percent(r.test_accuracy).c_str());
    log << line;
  }
  write_text(ws.reports() / "train.csv", csv.str());
  return rows;
}

Surrogate::Surrogate(std::vector<std::string> names, std::vector<Classifier> members)
    : names_(std::move(names)), members_(std::move(members)) {
  if (members_.empty()) throw ConfigError("surrogate: no models");
  for (const auto& n : names_) name_ += (name_.empty() ? "" : "+") + n;
  if (members_.size() > 1) {
    std::vector<std::reference_wrapper<const LogitModel>> refs(members_.begin(), members_.end());
    std::vector<double> weights(members_.size(), 1.0 / static_cast<double>(members_.size()));
    double total = 0;
    for (double w : weights) total += w;
    weights.back() += 1.0 - total;
    ensemble_ = std::make_unique<Ensemble>(std::move(refs), std::move(weights));
  }
}

const LogitModel& Surrogate::model() const {
  if (ensemble_) return *ensemble_;
  return members_.front();
}

Classifier load_model(const RunConfig& cfg, const std::string& name) {
  cfg.model(name);
  const fs::path path = Workspace(cfg).checkpoint(name);
  if (!fs::exists(path)) {
    throw DataError("checkpoint " + path.string() + " is missing; run `train` first");
  }
  return load(path);
}

Surrogate load_surrogate(const RunConfig& cfg, const std::optional<fs::path>& checkpoint) {
  if (checkpoint) {
    if (!fs::exists(*checkpoint)) {
      throw DataError("surrogate checkpoint " + checkpoint->string() + " does not exist");
    }
    std::vector<Classifier> members;
    members.push_back(load(*checkpoint));
    return Surrogate({checkpoint->stem().string()}, std::move(members));
  }
  std::vector<Classifier> members;
  for (const auto& name : cfg.surrogates) members.push_back(load_model(cfg, name));
  return Surrogate(cfg.surrogates, std::move(members));
}

Dataset evaluation_set(const RunConfig& cfg, const SplitData& data, const LogitModel& surrogate) {
  return attack_subset(data.test, cfg.dataset.attack_count, cfg.dataset.seed, &surrogate);
}

fs::path archive_path(const RunConfig& cfg, const std::string& attack,
                      const std::string& surrogate) {
  const std::string who = surrogate.empty() ? cfg.surrogate_name() : surrogate;
  return Workspace(cfg).archives() / (attack + "-" + who + "-" + run_tag(cfg) + ".lipd");
}

AttackOutput cmd_attack(const RunConfig& cfg, const std::string& attack, std::ostream& log,
                        std::size_t workers, const std::optional<fs::path>& surrogate_checkpoint) {
  require_registered(attack);
  const SplitData data = load_data(cfg.dataset);
  const Surrogate surrogate = load_surrogate(cfg, surrogate_checkpoint);
  AttackOutput out;
  out.examples = evaluation_set(cfg, data, surrogate.model());
  out.set = generate_perturbations(attack, surrogate.model(), out.examples, cfg.attack, workers);
  out.archive = archive_path(cfg, attack, surrogate.name());
  out.sidecar = sidecar_for(out.archive);
  save_archive(to_records(out.set, out.examples, static_cast<float>(cfg.attack.epsilon)),
               out.archive);

  std::vector<std::string> checkpoints;
  if (surrogate_checkpoint) {
    checkpoints.push_back(surrogate_checkpoint->string());
  } else {
    for (const auto& n : cfg.surrogates) checkpoints.push_back(Workspace(cfg).checkpoint(n).string());
  }
  const PropagationCount total = out.set.total();
  ojson side;
  side["attack"] = attack;
  side["surrogate"] = surrogate.name();
  side["surrogate_checkpoints"] = checkpoints;
  side["records"] = out.examples.size();
  side["split"] = split_name(out.examples.split);
  side["counters"]["forward"] = total.forward;
  side["counters"]["backward"] = total.backward;
  const bool uniform = std::all_of(out.set.counts.begin(), out.set.counts.end(),
                                   [&](const PropagationCount& c) { return c == out.set.counts[0]; });
  side["counters"]["forward_per_example"] =
      uniform ? ojson(out.set.counts[0].forward) : ojson(nullptr);
  side["counters"]["backward_per_example"] =
      uniform ? ojson(out.set.counts[0].backward) : ojson(nullptr);
  side["config"] = to_json(cfg);
  write_text(out.sidecar, side.dump(2) + "\n");

  log << attack << " on " << surrogate.name() << ": " << out.examples.size() << " examples, "
      << total.forward << " forward / " << total.backward << " backward -> "
      << out.archive.string() << '\n';
  return out;
}

OpenedArchive open_archive(const SplitData& data, const fs::path& archive) {
  const fs::path sidecar = sidecar_for(archive);
  if (!fs::exists(archive)) throw DataError("archive " + archive.string() + " does not exist");
  if (!fs::exists(sidecar)) throw DataError("sidecar " + sidecar.string() + " does not exist");
  const auto bytes = read_file(sidecar);
  const ojson side = ojson::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (side.is_discarded() || !side.is_object()) {
    throw FormatError("sidecar " + sidecar.string() + " is not valid JSON");
  }
  OpenedArchive out;
  try {
    out.attack = side.at("attack").get<std::string>();
    out.label = out.attack;
    const auto& li = side.at("config").at("attack").at("li");
    if (out.attack.starts_with("li-boost")) {
      out.label += "[k=" + std::to_string(li.at("k").get<int>()) +
                   ",N=" + std::to_string(li.at("samples").get<std::size_t>()) + "]";
    } else if (out.attack == "bf-minmax") {
      out.label += "[k=" + std::to_string(li.at("k").get<int>()) + "]";
    }
    out.surrogate = side.at("surrogate").get<std::string>();
    out.surrogate_checkpoints = side.at("surrogate_checkpoints").get<std::vector<std::string>>();
    const std::size_t expected = side.at("records").get<std::size_t>();
    out.records = load_archive(archive);
    if (out.records.size() != expected) {
      throw DataError("archive " + archive.string() + " holds " +
                      std::to_string(out.records.size()) + " records, sidecar says " +
                      std::to_string(expected));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("sidecar " + sidecar.string() + ": " + e.what());
  }
  out.examples = Dataset{{}, data.test.classes, Split::kAttackEval};
  for (const auto& r : out.records) {
    const LabeledExample* ex = nullptr;
    try {
      ex = &data.test.by_id(r.example_id);
    } catch (const DataError&) {
      throw DataError("archive " + archive.string() + " refers to example " +
                      std::to_string(r.example_id) + ", which is not in the test split");
    }
    if (ex->image.shape() != r.delta.shape()) {
      throw DataError("archive " + archive.string() + ": perturbation shape " +
                      shape_string(r.delta.shape()) + " does not match example " +
                      std::to_string(r.example_id));
    }
    out.examples.examples.push_back(*ex);
    out.deltas.push_back(r.delta);
  }
  if (out.records.empty()) throw DataError("archive " + archive.string() + " is empty");
  return out;
}

TransferOutput cmd_eval_transfer(const RunConfig& cfg, const std::vector<fs::path>& archives,
                                 std::ostream& log) {
  if (archives.empty()) throw ConfigError("eval-transfer: no archives given");
  const SplitData data = load_data(cfg.dataset);
  TransferOutput out;
  std::map<AsrMode, TransferMatrix> by_mode;
  for (const auto& path : archives) {
    const OpenedArchive a = open_archive(data, path);
    const LoadedModels columns = load_columns(cfg, a);
    const auto white = split_names(a.surrogate);
    PerturbationSet set{a.label, a.deltas, {}};
    for (AsrMode mode : {AsrMode::kCleanPredFlip, AsrMode::kGroundTruth}) {
      const auto named = columns.named();
      TransferMatrix m = transfer_matrix(std::span(&set, 1), NamedModel{a.surrogate, columns.models[0]},
                                         named, a.examples, mode);
      for (std::size_t v = 0; v < m.victims.size(); ++v) m.white_box[v] = is_white_box(m.victims[v], white);
      auto [it, fresh] = by_mode.try_emplace(mode, m);
      if (!fresh) {
        it->second.attacks.push_back(m.attacks[0]);
        it->second.cells.push_back(m.cells[0]);
        if (it->second.victims != m.victims) {
          throw DataError("eval-transfer: archives disagree on surrogate/victim columns");
        }
      }
    }
  }
  const Workspace ws(cfg);
  const std::string tag = run_tag(cfg);
  for (const auto& [mode, m] : by_mode) {
    write_text(ws.reports() / ("transfer-" + std::string(asr_mode_name(mode)) + "-" + tag + ".csv"),
               transfer_csv(m));
  }
  out.matrix = by_mode.at(cfg.eval.asr_mode);
  out.csv = ws.reports() / ("transfer-" + tag + ".csv");
  write_text(out.csv, transfer_csv(out.matrix));

  log << "ASR % (" << asr_mode_name(cfg.eval.asr_mode) << ")\n";
  for (std::size_t a = 0; a < out.matrix.attacks.size(); ++a) {
    log << "  " << out.matrix.attacks[a] << ':';
    for (std::size_t v = 0; v < out.matrix.victims.size(); ++v) {
      log << ' ' << out.matrix.victims[v] << (out.matrix.white_box[v] ? "*" : "") << '='
          << percent(out.matrix.cells[a][v]);
    }
    log << '\n';
  }
  log << "wrote " << out.csv.string() << '\n';
  return out;
}

InvarianceOutput cmd_eval_invariance(const RunConfig& cfg, const std::vector<fs::path>& archives,
                                     std::ostream& log, std::size_t workers) {
  if (archives.empty()) throw ConfigError("eval-invariance: no archives given");
  const SplitData data = load_data(cfg.dataset);
  InvarianceOutput out;
  for (const auto& path : archives) {
    const OpenedArchive a = open_archive(data, path);
    const LoadedModels columns = load_columns(cfg, a);
    const auto white = split_names(a.surrogate);

    std::vector<Classifier> members;
    for (const auto& c : a.surrogate_checkpoints) members.push_back(load(c));
    const Surrogate surrogate(white, std::move(members));

    InvarianceRecord r;
    r.attack = a.label;
    r.surrogate = a.surrogate;
    r.k = cfg.eval.k;
    r.mean_invariance = mean_local_invariance(surrogate.model(), a.examples, a.deltas, r.k, workers);
    double asr = 0;
    std::size_t victims = 0;
    for (std::size_t v = 0; v < columns.names.size(); ++v) {
      if (is_white_box(columns.names[v], white)) continue;
      asr += attack_success_rate(columns.models[v], a.examples, a.deltas, cfg.eval.asr_mode);
      ++victims;
    }
    if (victims == 0) throw ConfigError("eval-invariance: no victims besides the surrogate");
    r.mean_victim_asr = asr / static_cast<double>(victims);
    log << "  " << r.attack << ": invariance(k=" << r.k << ") = " << r.mean_invariance
        << ", mean victim ASR = " << percent(r.mean_victim_asr) << "%\n";
    out.records.push_back(std::move(r));
  }
  const Workspace ws(cfg);
  const std::string tag = run_tag(cfg);
  out.csv = ws.reports() / ("invariance-" + tag + ".csv");
  write_text(out.csv, invariance_csv(out.records));
  log << "wrote " << out.csv.string() << '\n';
  if (out.records.size() >= 3) {
    try {
      out.correlation = invariance_transfer_correlation(out.records);
      const fs::path json = ws.reports() / ("correlation-" + tag + ".json");
      write_text(json, correlation_json(*out.correlation));
      log << "pearson r = " << out.correlation->pearson_r << " -> " << json.string() << '\n';
    } catch (const DataError& e) {
      log << "correlation skipped: " << e.what() << '\n';
    }
  } else {
    log << "correlation skipped: needs at least 3 archives\n";
  }
  return out;
}

SweepOutput cmd_sweep(const RunConfig& cfg, const std::string& attack, const std::string& param,
                      const std::vector<long>& values, std::ostream& log, std::size_t workers) {
  require_registered(attack);
  if (values.empty()) throw ConfigError("sweep: empty value list");
  if (param != "k" && param != "N") throw ConfigError("sweep: --param must be k or N");
  for (long v : values) {
    if (v < 0 || (param == "N" && v < 1)) {
      throw ConfigError("sweep: invalid value " + std::to_string(v) + " for " + param);
    }
  }
  const Workspace ws(cfg);
  const fs::path dir = ws.reports() / ("sweep-" + attack + "-" + param + "-" + run_tag(cfg));
  SweepOutput out;
  std::ostringstream csv;
  csv << "param,value,attack,examples,white_box_asr_percent,mean_victim_asr_percent,"
         "mean_invariance,forward_per_example,backward_per_example\n";
  for (long v : values) {
    RunConfig point = cfg;
    if (param == "k") {
      point.attack.k = static_cast<int>(v);
    } else {
      point.attack.samples = static_cast<std::size_t>(v);
    }
    point.attack.validate();
    log << "sweep " << param << " = " << v << '\n';
    const AttackOutput run = cmd_attack(point, attack, log, workers);
    const TransferOutput transfer = cmd_eval_transfer(point, {run.archive}, log);
    const InvarianceOutput inv = cmd_eval_invariance(point, {run.archive}, log, workers);
    fs::create_directories(dir);
    fs::copy_file(transfer.csv, dir / ("value-" + std::to_string(v) + "-transfer.csv"),
                  fs::copy_options::overwrite_existing);
    fs::copy_file(inv.csv, dir / ("value-" + std::to_string(v) + "-invariance.csv"),
                  fs::copy_options::overwrite_existing);

    SweepRow row;
    row.param = param;
    row.value = v;
    row.attack = attack;
    row.examples = run.examples.size();
    for (std::size_t c = 0; c < transfer.matrix.victims.size(); ++c) {
      if (transfer.matrix.white_box[c]) row.white_box_asr = transfer.matrix.cells[0][c];
    }
    row.mean_victim_asr = inv.records[0].mean_victim_asr;
    row.mean_invariance = inv.records[0].mean_invariance;
    const PropagationCount total = run.set.total();
    row.per_example = {total.forward / row.examples, total.backward / row.examples};
    for (const auto& c : run.set.counts) {
      if (!(c == run.set.counts[0])) {
        throw Error("sweep: propagation counts differ between examples");
      }
    }
    char line[64];
    std::snprintf(line, sizeof line, "%.4f", row.mean_invariance);
    csv << param << ',' << v << ',' << attack << ',' << row.examples << ','
        << percent(row.white_box_asr) << ',' << percent(row.mean_victim_asr) << ',' << line << ','
        << row.per_example.forward << ',' << row.per_example.backward << '\n';
    out.rows.push_back(std::move(row));
  }
  out.csv = dir / "sweep.csv";
  write_text(out.csv, csv.str());
  log << "wrote " << out.csv.string() << '\n';
  return out;
}

ReportOutput cmd_report(const RunConfig& cfg, std::ostream& log, std::size_t workers) {
  if (cfg.attacks.empty()) throw ConfigError("report: attack.names is empty");
  ReportOutput out;
  for (const auto& name : cfg.attacks) {
    const fs::path path = archive_path(cfg, name);
    if (fs::exists(path) && fs::exists(sidecar_for(path))) {
      log << "reusing " << path.string() << '\n';
      out.archives.push_back(path);
    } else {
      out.archives.push_back(cmd_attack(cfg, name, log, workers).archive);
    }
  }
  out.transfer = cmd_eval_transfer(cfg, out.archives, log);
  out.invariance = cmd_eval_invariance(cfg, out.archives, log, workers);

  const TransferMatrix& m = out.transfer.matrix;
  std::ostringstream md;
  md << "# Run summary\n\n";
  md << "Surrogate: " << m.surrogate << ". Examples per attack: " << cfg.dataset.attack_count
     << ". epsilon = " << cfg.attack.epsilon << ", T = " << cfg.attack.iterations
     << ", N = " << cfg.attack.samples << ", k = " << cfg.attack.k << " ("
     << offset_kind_name(cfg.attack.dist) << ").\n\n";
  md << "## Attack success rate (%, " << asr_mode_name(cfg.eval.asr_mode) << ")\n\n| attack |";
  for (std::size_t v = 0; v < m.victims.size(); ++v) {
    md << ' ' << m.victims[v] << (m.white_box[v] ? " (white-box)" : "") << " |";
  }
  md << "\n|---|";
  for (std::size_t v = 0; v < m.victims.size(); ++v) md << "---|";
  md << '\n';
  for (std::size_t a = 0; a < m.attacks.size(); ++a) {
    md << "| " << m.attacks[a] << " |";
    for (std::size_t v = 0; v < m.victims.size(); ++v) md << ' ' << percent(m.cells[a][v]) << " |";
    md << '\n';
  }
  md << "\n## Local invariance (k = " << cfg.eval.k << ")\n\n"
     << "| attack | mean invariance | mean victim ASR (%) |\n|---|---|---|\n";
  for (const auto& r : out.invariance.records) {
    char inv[32];
    std::snprintf(inv, sizeof inv, "%.4f", r.mean_invariance);
    md << "| " << r.attack << " | " << inv << " | " << percent(r.mean_victim_asr) << " |\n";
  }
  if (out.invariance.correlation) {
    char r[32];
    std::snprintf(r, sizeof r, "%.4f", out.invariance.correlation->pearson_r);
    md << "\nPearson r (invariance vs victim ASR): " << r << '\n';
  }
  out.summary = Workspace(cfg).reports() / ("summary-" + run_tag(cfg) + ".md");
  write_text(out.summary, md.str());
  log << "wrote " << out.summary.string() << '\n';
  return out;
}

}  // namespace liboost
