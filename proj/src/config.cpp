#include "lospec/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lospec/baselines.hpp"

namespace lospec {
namespace {

using json = nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

std::vector<std::filesystem::path> resolve_all(const std::filesystem::path& base,
                                               const std::vector<std::string>& ps) {
  std::vector<std::filesystem::path> out;
  for (const auto& p : ps) out.push_back(resolve(base, p));
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    if (schema_version != kSchemaVersion) {
      throw ConfigError("schema_version " + std::to_string(schema_version) +
                        " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
    }
    workload.validate();
    css.validate();
    weights.validate();
    budget.validate();
    for (const auto& p : predictors) {
      if (p != "aloc") parse_baseline(p);
    }
    if (!(density > 0.0 && density <= 1.0)) throw ConfigError("compare.density must be in (0, 1]");
    if (ladder.empty()) throw ConfigError("tune.ladder must not be empty");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      if (ladder[i] < 1) throw ConfigError("tune.ladder entries must be >= 1");
      if (i > 0 && ladder[i] <= ladder[i - 1]) throw ConfigError("tune.ladder must be strictly increasing");
    }
    if (threads < 1) throw ConfigError("threads must be >= 1");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(doc, "config",
                 {"schema_version", "workload", "css", "compare", "tune", "cost_weights", "threads"});
  ExperimentConfig cfg;
  if (!doc.contains("schema_version")) throw ConfigError("config: schema_version is required");
  cfg.schema_version = get<int>(doc, "schema_version", "config", 0);
  cfg.threads = get<int>(doc, "threads", "config", 1);

  if (doc.contains("workload")) {
    const auto& w = doc["workload"];
    reject_unknown(w, "workload", {"seq_len", "hidden", "heads", "seed", "source", "rounding", "files"});
    auto& spec = cfg.workload;
    spec.seq_len = get<std::size_t>(w, "seq_len", "workload", spec.seq_len);
    spec.hidden = get<std::size_t>(w, "hidden", "workload", spec.hidden);
    spec.heads = get<std::size_t>(w, "heads", "workload", spec.heads);
    spec.seed = get<std::uint64_t>(w, "seed", "workload", spec.seed);
    const auto source = get<std::string>(w, "source", "workload", "gaussian");
    if (source == "gaussian") {
      spec.source = WorkloadSource::Gaussian;
    } else if (source == "tensor-files") {
      spec.source = WorkloadSource::TensorFiles;
    } else {
      throw ConfigError("workload.source: unsupported source '" + source +
                        "' (expected gaussian or tensor-files)");
    }
    const auto rounding = get<std::string>(w, "rounding", "workload", "half_away_from_zero");
    if (rounding == "half_away_from_zero") {
      spec.rounding = RoundingMode::HalfAwayFromZero;
    } else if (rounding == "half_to_even") {
      spec.rounding = RoundingMode::HalfToEven;
    } else {
      throw ConfigError("workload.rounding: unknown mode '" + rounding + "'");
    }
    if (w.contains("files")) {
      const auto& f = w["files"];
      reject_unknown(f, "workload.files", {"x", "wq", "wk", "wv"});
      spec.files.x = resolve(base_dir, get<std::string>(f, "x", "workload.files", ""));
      spec.files.wq = resolve_all(base_dir, get<std::vector<std::string>>(f, "wq", "workload.files", {}));
      spec.files.wk = resolve_all(base_dir, get<std::vector<std::string>>(f, "wk", "workload.files", {}));
      spec.files.wv = resolve_all(base_dir, get<std::vector<std::string>>(f, "wv", "workload.files", {}));
    }
  }

  if (doc.contains("css")) {
    const auto& c = doc["css"];
    reject_unknown(c, "css", {"eta_tenths", "nibble_schedule", "emit_round_stats"});
    const auto eta = get<std::vector<int>>(c, "eta_tenths", "css", {5, 5});
    for (int e : eta) {
      if (e < 0 || e > 10) throw ConfigError("css.eta_tenths: entries must be in [0, 10]");
    }
    const auto schedule = get<std::vector<int>>(c, "nibble_schedule", "css", {4, 4});
    try {
      cfg.css = CssConfig::from_tenths(eta, schedule);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("css: ") + e.what());
    }
    cfg.css.emit_round_stats = get<bool>(c, "emit_round_stats", "css", false);
  }

  if (doc.contains("compare")) {
    const auto& c = doc["compare"];
    reject_unknown(c, "compare", {"predictors", "density"});
    cfg.predictors = get<std::vector<std::string>>(c, "predictors", "compare", cfg.predictors);
    cfg.density = get<double>(c, "density", "compare", cfg.density);
  }

  if (doc.contains("tune")) {
    const auto& t = doc["tune"];
    reject_unknown(t, "tune", {"ladder", "budget", "label"});
    cfg.ladder = get<std::vector<std::size_t>>(t, "ladder", "tune", cfg.ladder);
    cfg.budget.max_rel_error = get<double>(t, "budget", "tune", cfg.budget.max_rel_error);
    cfg.budget.label = get<std::string>(t, "label", "tune", cfg.budget.label);
  }

  if (doc.contains("cost_weights")) {
    const auto& c = doc["cost_weights"];
    reject_unknown(c, "cost_weights", {"name", "mult", "add", "shift", "compare", "loe", "mem_per_bit"});
    auto& w = cfg.weights;
    w.name = get<std::string>(c, "name", "cost_weights", "custom");
    w.mult = get<double>(c, "mult", "cost_weights", w.mult);
    w.add = get<double>(c, "add", "cost_weights", w.add);
    w.shift = get<double>(c, "shift", "cost_weights", w.shift);
    w.compare = get<double>(c, "compare", "cost_weights", w.compare);
    w.loe = get<double>(c, "loe", "cost_weights", w.loe);
    w.mem_per_bit = get<double>(c, "mem_per_bit", "cost_weights", w.mem_per_bit);
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::string to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["schema_version"] = cfg.schema_version;
  const auto& w = cfg.workload;
  j["workload"] = {{"seq_len", w.seq_len},
                   {"hidden", w.hidden},
                   {"heads", w.heads},
                   {"seed", w.seed},
                   {"source", w.source == WorkloadSource::Gaussian ? "gaussian" : "tensor-files"},
                   {"rounding", w.rounding == RoundingMode::HalfAwayFromZero ? "half_away_from_zero"
                                                                             : "half_to_even"}};
  std::vector<int> tenths;
  for (const auto& e : cfg.css.eta) tenths.push_back(static_cast<int>(e.num * 10 / e.den));
  j["css"] = {{"eta_tenths", tenths}, {"nibble_schedule", cfg.css.nibble_schedule}};
  j["compare"] = {{"predictors", cfg.predictors}, {"density", cfg.density}};
  j["tune"] = {{"ladder", cfg.ladder}, {"budget", cfg.budget.max_rel_error}, {"label", cfg.budget.label}};
  j["cost_weights"] = {{"name", cfg.weights.name}, {"mult", cfg.weights.mult}, {"add", cfg.weights.add},
                       {"shift", cfg.weights.shift}, {"compare", cfg.weights.compare},
                       {"loe", cfg.weights.loe}, {"mem_per_bit", cfg.weights.mem_per_bit}};
  j["threads"] = cfg.threads;
  return j.dump(2);
}

}  // namespace lospec
