#include "liboost/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "liboost/binary_io.hpp"

namespace liboost {

using nlohmann::json;

namespace {

// One JSON object of the config. Every key read is remembered so finish()
// can reject the rest as typos.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError("'" + path_ + "' must be a JSON object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return doc_.contains(key) && !doc_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return doc_.at(key);
  }

  std::string key_path(const std::string& key) const { return path_ + "." + key; }

  std::string str(const std::string& key, std::string def) {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_string()) fail(key, "a string");
    return v.get<std::string>();
  }

  std::uint64_t uint(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_number_unsigned()) fail(key, "a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::uint64_t required_uint(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key '" + key_path(key) + "'");
    return uint(key, 0);
  }

  int integer(const std::string& key, int def) {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_number_integer()) fail(key, "an integer");
    return v.get<int>();
  }

  double number(const std::string& key, double def) {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_number()) fail(key, "a number");
    return v.get<double>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_boolean()) fail(key, "true or false");
    return v.get<bool>();
  }

  // A string or an array of strings.
  std::vector<std::string> names(const std::string& key, std::vector<std::string> def) {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    if (!v.is_array()) fail(key, "a string or an array of strings");
    std::vector<std::string> out;
    for (const json& e : v) {
      if (!e.is_string()) fail(key, "a string or an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (const auto& item : doc_.items()) {
      if (!used_.contains(item.key())) {
        throw ConfigError("unknown key '" + key_path(item.key()) + "'");
      }
    }
  }

 private:
  [[noreturn]] void fail(const std::string& key, const char* expected) const {
    throw ConfigError("key '" + key_path(key) + "' must be " + expected);
  }

  const json& doc_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename F>
auto parse_enum(const std::string& key, F&& parse) {
  try {
    return parse();
  } catch (const ConfigError& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

DatasetConfig parse_dataset(const json& doc) {
  Section s(doc, "dataset");
  DatasetConfig d;
  d.source = s.str("source", d.source);
  d.images = s.str("images", "");
  d.labels = s.str("labels", "");
  d.count = s.uint("count", d.source == "idx" ? 0 : d.count);
  d.train_count = s.uint("train_count", d.train_count);
  d.attack_count = s.uint("attack_count", d.attack_count);
  d.seed = s.required_uint("seed");
  s.finish();
  if (d.source == "idx") {
    if (d.images.empty() || d.labels.empty()) {
      throw ConfigError("dataset.source = idx needs dataset.images and dataset.labels");
    }
  } else if (d.source == "synth") {
    if (d.count <= d.train_count) {
      throw ConfigError("dataset.count must exceed dataset.train_count for synth data");
    }
  } else {
    throw ConfigError("key 'dataset.source': unknown source '" + d.source +
                      "' (expected synth or idx)");
  }
  if (d.train_count == 0) throw ConfigError("dataset.train_count must be >= 1");
  if (d.attack_count == 0) throw ConfigError("dataset.attack_count must be >= 1");
  return d;
}

ModelConfig parse_model(const json& doc, std::size_t index) {
  Section s(doc, "models." + std::to_string(index));
  ModelConfig m;
  m.name = s.str("name", "");
  const std::string arch = s.str("arch", "");
  m.seed = s.required_uint("seed");
  m.train.epochs = s.uint("epochs", m.train.epochs);
  m.train.lr = s.number("lr", m.train.lr);
  m.train.momentum = s.number("momentum", m.train.momentum);
  m.train.batch = s.uint("batch", m.train.batch);
  s.finish();
  if (arch.empty()) throw ConfigError("missing required key '" + s.key_path("arch") + "'");
  m.arch = parse_enum(s.key_path("arch"), [&] { return parse_architecture(arch); });
  if (m.name.empty()) m.name = arch;
  m.train.seed = m.seed;
  if (m.train.epochs == 0) throw ConfigError(s.key_path("epochs") + " must be >= 1");
  if (!(m.train.lr > 0)) throw ConfigError(s.key_path("lr") + " must be > 0");
  if (!(m.train.momentum >= 0 && m.train.momentum < 1)) {
    throw ConfigError(s.key_path("momentum") + " must lie in [0,1)");
  }
  if (m.train.batch == 0) throw ConfigError(s.key_path("batch") + " must be >= 1");
  return m;
}

void parse_attack(const json& doc, RunConfig& cfg) {
  Section s(doc, "attack");
  AttackConfig& a = cfg.attack;
  cfg.surrogates = s.names("surrogate", {});
  cfg.attacks = s.names("names", {"mi-fgsm", "li-boost-mi"});
  a.epsilon = s.number("epsilon", a.epsilon);
  a.iterations = s.uint("iterations", a.iterations);
  if (s.has("alpha")) a.alpha = s.number("alpha", 0);
  a.momentum = s.number("momentum", a.momentum);
  a.pixel_clamp = s.boolean("pixel_clamp", a.pixel_clamp);
  a.seed = s.required_uint("seed");

  if (s.has("li")) {
    Section li(s.raw("li"), "attack.li");
    const std::string dist = li.str("dist", std::string(offset_kind_name(a.dist)));
    a.dist = parse_enum(li.key_path("dist"), [&] { return parse_offset_kind(dist); });
    a.k = li.integer("k", a.k);
    a.samples = li.uint("samples", a.samples);
    const std::string mode = li.str("offset_mode", std::string(offset_mode_name(a.offset_mode)));
    a.offset_mode = parse_enum(li.key_path("offset_mode"), [&] { return parse_offset_mode(mode); });
    a.adjoint_grad = li.boolean("adjoint_grad", a.adjoint_grad);
    a.exhaustive_grid = li.boolean("exhaustive", a.exhaustive_grid);
    li.finish();
  }
  if (s.has("bf")) {
    Section bf(s.raw("bf"), "attack.bf");
    const std::string mode = bf.str("grad_mode", "argmin");
    if (mode == "argmin") {
      a.bf_grad = BruteForceGrad::kArgmin;
    } else if (mode == "all") {
      a.bf_grad = BruteForceGrad::kAll;
    } else {
      throw ConfigError("key 'attack.bf.grad_mode': unknown mode '" + mode +
                        "' (expected argmin or all)");
    }
    bf.finish();
  }
  if (s.has("dim")) {
    Section dim(s.raw("dim"), "attack.dim");
    a.resize_rate = dim.number("resize_rate", a.resize_rate);
    a.diversity_prob = dim.number("prob", a.diversity_prob);
    dim.finish();
  }
  s.finish();
  a.validate();
}

void parse_eval(const json& doc, RunConfig& cfg) {
  Section s(doc, "eval");
  cfg.eval.victims = s.names("victims", {});
  cfg.eval.k = s.integer("k", cfg.attack.k);
  const std::string mode = s.str("asr_mode", std::string(asr_mode_name(cfg.eval.asr_mode)));
  cfg.eval.asr_mode = parse_enum(s.key_path("asr_mode"), [&] { return parse_asr_mode(mode); });
  s.finish();
  if (cfg.eval.k < 0) throw ConfigError("eval.k must be >= 0");
}

}  // namespace

const ModelConfig& RunConfig::model(std::string_view name) const {
  for (const auto& m : models) {
    if (m.name == name) return m;
  }
  throw ConfigError("no model named '" + std::string(name) + "' in the models section");
}

std::string RunConfig::surrogate_name() const {
  std::string out;
  for (const auto& s : surrogates) out += (out.empty() ? "" : "+") + s;
  return out;
}

RunConfig parse_config(const json& doc) {
  Section top(doc, "config");
  RunConfig cfg;
  if (!top.has("dataset")) throw ConfigError("missing required section 'dataset'");
  cfg.dataset = parse_dataset(top.raw("dataset"));

  if (!top.has("models") || !top.raw("models").is_array()) {
    throw ConfigError("'models' must be a non-empty array");
  }
  const json& models = top.raw("models");
  for (std::size_t i = 0; i < models.size(); ++i) cfg.models.push_back(parse_model(models[i], i));
  if (cfg.models.empty()) throw ConfigError("config has no models");
  for (std::size_t i = 0; i < cfg.models.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (cfg.models[i].name == cfg.models[j].name) {
        throw ConfigError("duplicate model name '" + cfg.models[i].name + "'");
      }
    }
  }

  if (!top.has("attack")) throw ConfigError("missing required section 'attack'");
  parse_attack(top.raw("attack"), cfg);
  if (cfg.surrogates.empty()) cfg.surrogates = {cfg.models.front().name};
  for (const auto& s : cfg.surrogates) cfg.model(s);
  for (const auto& name : cfg.attacks) require_registered(name);

  parse_eval(top.has("eval") ? top.raw("eval") : json::object(), cfg);
  if (cfg.eval.victims.empty()) {
    for (const auto& m : cfg.models) {
      if (std::find(cfg.surrogates.begin(), cfg.surrogates.end(), m.name) == cfg.surrogates.end()) {
        cfg.eval.victims.push_back(m.name);
      }
    }
  }
  for (const auto& v : cfg.eval.victims) cfg.model(v);
  cfg.attack.asr_mode = cfg.eval.asr_mode;

  cfg.output_dir = top.str("output_dir", cfg.output_dir);
  top.finish();
  return cfg;
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (node->is_array()) {
      std::size_t index = 0;
      try {
        index = std::stoul(part);
      } catch (const std::exception&) {
        throw ConfigError("override key '" + key + "': '" + part + "' is not an array index");
      }
      if (index >= node->size()) {
        throw ConfigError("override key '" + key + "': index " + part + " out of range");
      }
      node = &(*node)[index];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) {
        throw ConfigError("override key '" + key + "' descends into a non-object value");
      }
      node = &(*node)[part];
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("config file " + path.string() + " does not exist");
  }
  const auto bytes = read_file(path);
  json doc = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json out;
  auto& d = out["dataset"];
  d["source"] = cfg.dataset.source;
  d["images"] = cfg.dataset.images;
  d["labels"] = cfg.dataset.labels;
  d["count"] = cfg.dataset.count;
  d["train_count"] = cfg.dataset.train_count;
  d["attack_count"] = cfg.dataset.attack_count;
  d["seed"] = cfg.dataset.seed;

  out["models"] = nlohmann::ordered_json::array();
  for (const auto& m : cfg.models) {
    nlohmann::ordered_json j;
    j["name"] = m.name;
    j["arch"] = architecture_name(m.arch);
    j["seed"] = m.seed;
    j["epochs"] = m.train.epochs;
    j["lr"] = m.train.lr;
    j["momentum"] = m.train.momentum;
    j["batch"] = m.train.batch;
    out["models"].push_back(std::move(j));
  }

  const AttackConfig& a = cfg.attack;
  auto& at = out["attack"];
  at["surrogate"] = cfg.surrogates;
  at["names"] = cfg.attacks;
  at["epsilon"] = a.epsilon;
  at["iterations"] = a.iterations;
  at["alpha"] = a.step();
  at["momentum"] = a.momentum;
  at["pixel_clamp"] = a.pixel_clamp;
  at["seed"] = a.seed;
  at["li"]["dist"] = offset_kind_name(a.dist);
  at["li"]["k"] = a.k;
  at["li"]["samples"] = a.samples;
  at["li"]["offset_mode"] = offset_mode_name(a.offset_mode);
  at["li"]["adjoint_grad"] = a.adjoint_grad;
  at["li"]["exhaustive"] = a.exhaustive_grid;
  at["bf"]["grad_mode"] = a.bf_grad == BruteForceGrad::kArgmin ? "argmin" : "all";
  at["dim"]["resize_rate"] = a.resize_rate;
  at["dim"]["prob"] = a.diversity_prob;

  auto& ev = out["eval"];
  ev["victims"] = cfg.eval.victims;
  ev["k"] = cfg.eval.k;
  ev["asr_mode"] = asr_mode_name(cfg.eval.asr_mode);

  out["output_dir"] = cfg.output_dir;
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  auto doc = to_json(cfg);
  doc.erase("output_dir");
  const std::string text = doc.dump();
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x",
                crc32(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return buf;
}

}  // namespace liboost
