// lospec command-line driver.
//
//   lospec gen-workload | predict | compare | sweep | tune | report
//     --config PATH  --seed N  --out DIR  --threads N
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error, 3 tune
// found no candidate within budget.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lospec/config.hpp"
#include "lospec/experiments.hpp"
#include "lospec/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace lospec;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> threads;
  std::string against;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ExperimentConfig resolve_config(const Options& opt) {
  ExperimentConfig cfg = opt.config.empty() ? ExperimentConfig{} : load_config(opt.config);
  if (opt.seed) cfg.workload.seed = *opt.seed;
  if (opt.threads) cfg.threads = *opt.threads;
  cfg.validate();
  return cfg;
}

std::string head_suffix(std::size_t head, std::size_t heads) {
  return heads == 1 ? "" : "_h" + std::to_string(head);
}

int gen_workload_cmd(const ExperimentConfig& cfg, const fs::path& out) {
  const auto w = gen_workload(cfg.workload);
  write_tensor(out / "x.qt8", w.x);
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (std::size_t h = 0; h < w.heads.size(); ++h) {
    const auto sfx = head_suffix(h, w.heads.size());
    const auto& hw = w.heads[h];
    write_tensor(out / ("wq" + sfx + ".qt8"), hw.wq);
    write_tensor(out / ("wk" + sfx + ".qt8"), hw.wk);
    write_tensor(out / ("wv" + sfx + ".qt8"), hw.wv);
    write_tensor(out / ("wq_lo" + sfx + ".qt8"), hw.wq_codes);
    write_tensor(out / ("wk_lo" + sfx + ".qt8"), hw.wk_codes);
    files.push_back({{"wq", "wq" + sfx + ".qt8"}, {"wk", "wk" + sfx + ".qt8"}, {"wv", "wv" + sfx + ".qt8"}});
  }
  char hex[19];
  std::snprintf(hex, sizeof hex, "0x%016llx", static_cast<unsigned long long>(checksum(w.x)));
  nlohmann::ordered_json j;
  j["seq_len"] = w.seq_len();
  j["hidden"] = w.hidden();
  j["heads"] = w.heads.size();
  j["seed"] = cfg.workload.seed;
  j["x_checksum"] = hex;
  j["x"] = "x.qt8";
  j["weights"] = files;
  write_text(out / "workload.json", j.dump(2) + "\n");
  std::cout << "wrote workload S=" << w.seq_len() << " H=" << w.hidden() << " heads=" << w.heads.size()
            << " checksum " << hex << " to " << out.string() << "\n";
  return 0;
}

int predict_cmd(const ExperimentConfig& cfg, const fs::path& out) {
  const auto w = gen_workload(cfg.workload);
  const auto run = run_predict(w, cfg.css, cfg.weights, cfg.threads);
  nlohmann::ordered_json rounds = nlohmann::ordered_json::array();
  for (std::size_t h = 0; h < run.heads.size(); ++h) {
    const auto sfx = head_suffix(h, run.heads.size());
    const auto& mask = run.heads[h].prediction.mask;
    write_text(out / ("mask" + sfx + ".txt"), mask.to_text());
    write_text(out / ("mask_dense" + sfx + ".txt"), mask.to_dense_text());
    rounds.push_back({{"head", h}, {"survivors", mask.round_history}});
  }
  write_text(out / "metrics.json", run.metrics.to_json() + "\n");
  write_text(out / "cost.csv", run.total_cost.to_csv());
  auto summary = nlohmann::ordered_json::parse(run.total_cost.to_json_summary());
  summary["dense_units"] = run.dense_cost.units();
  const auto red = compare_reports(run.total_cost, run.dense_cost);
  summary["reduction_pct"] = red.total ? nlohmann::ordered_json(*red.total) : nlohmann::ordered_json(nullptr);
  write_text(out / "cost_summary.json", summary.dump(2) + "\n");
  if (cfg.css.emit_round_stats) write_text(out / "round_stats.json", rounds.dump(2) + "\n");
  std::cout << run.metrics.to_json() << "\n";
  return 0;
}

int compare_cmd(const ExperimentConfig& cfg, const fs::path& out) {
  const auto w = gen_workload(cfg.workload);
  for (std::size_t h = 0; h < w.heads.size(); ++h) {
    const auto rows = run_compare(w, h, cfg.predictors, cfg.density, cfg.css.nibble_schedule, cfg.weights);
    const auto sfx = head_suffix(h, w.heads.size());
    write_text(out / ("compare" + sfx + ".csv"), compare_csv(rows));
    for (const auto& r : rows) {
      write_text(out / ("mask_" + r.predictor + sfx + ".txt"), r.mask.to_text());
      if (!r.density_reached) {
        std::cerr << "note: " << r.predictor << " reached density " << r.density << " for target "
                  << r.target_density << "\n";
      }
    }
    std::cout << compare_csv(rows);
  }
  return 0;
}

int sweep_cmd(const ExperimentConfig& cfg, const fs::path& out) {
  const auto w = gen_workload(cfg.workload);
  const auto pts = run_sweep(w, cfg.css.rounds, cfg.css.nibble_schedule, cfg.weights, cfg.threads);
  write_text(out / "sweep.csv", sweep_csv(pts));
  std::cout << "wrote " << pts.size() << " sweep points to " << (out / "sweep.csv").string() << "\n";
  return 0;
}

int tune_cmd(const ExperimentConfig& cfg, const fs::path& out) {
  const auto result = run_tune(cfg.workload, cfg.ladder, cfg.budget, cfg.css.rounds, cfg.css.nibble_schedule,
                               cfg.weights, cfg.threads);
  write_text(out / "tune.json", result.to_json() + "\n");
  std::cout << (result.feasible ? "feasible" : "infeasible") << " eta_tenths=";
  for (std::size_t i = 0; i < result.eta.size(); ++i) std::cout << (i ? "," : "") << result.eta[i];
  std::cout << " rel_error=" << result.rel_error << " cost_reduction=" << result.cost_reduction << "\n";
  if (!result.feasible) {
    std::cerr << "no candidate met max_rel_error " << cfg.budget.max_rel_error << "; best-error candidate reported\n";
    return kExitInfeasible;
  }
  return 0;
}

std::string pct_or_null(const std::optional<double>& v) {
  if (!v) return "undefined";
  std::ostringstream s;
  s << *v << "%";
  return s.str();
}

int report_cmd(const ExperimentConfig& cfg, const fs::path& out, const std::string& against) {
  const auto cost = CostReport::from_csv(read_text(out / "cost.csv"), cfg.weights);
  nlohmann::ordered_json rep;
  if (fs::exists(out / "metrics.json")) rep["metrics"] = nlohmann::ordered_json::parse(read_text(out / "metrics.json"));
  rep["cost"] = nlohmann::ordered_json::parse(cost.to_json_summary());
  std::cout << "total units " << cost.units() << ", memory bits " << cost.memory_bits() << "\n";
  for (auto s : {Stage::Speculation, Stage::Selection, Stage::Formal}) {
    std::cout << "  " << to_string(s) << ": " << cost.units(s) << "\n";
  }
  if (!against.empty()) {
    const auto base = CostReport::from_csv(read_text(fs::path(against) / "cost.csv"), cfg.weights);
    const auto red = compare_reports(cost, base);
    nlohmann::ordered_json r;
    for (const auto& [stage, v] : red.per_stage) {
      r[std::string(to_string(stage))] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
      std::cout << "  reduction " << to_string(stage) << ": " << pct_or_null(v) << "\n";
    }
    r["total"] = red.total ? nlohmann::ordered_json(*red.total) : nlohmann::ordered_json(nullptr);
    std::cout << "  reduction total: " << pct_or_null(red.total) << "\n";
    rep["reduction_pct_vs"] = {{"baseline", against}, {"per_stage", r}};
  }
  write_text(out / "report.json", rep.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-stage attention sparsity prediction experiments"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "Override workload seed");
  app.add_option("--out", opt.out, "Output directory")->capture_default_str();
  app.add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen-workload", "Write quantized workload tensors");
  auto* predict = app.add_subcommand("predict", "Predict masks, run sparse attention, write metrics and cost");
  auto* compare = app.add_subcommand("compare", "Compare predictors at a matched density");
  auto* sweep = app.add_subcommand("sweep", "Evaluate the whole eta grid");
  auto* tune = app.add_subcommand("tune", "Successive-halving search for eta");
  auto* report = app.add_subcommand("report", "Summarize cost and metrics in --out");
  report->add_option("--against", opt.against, "Directory holding a baseline cost.csv");
  for (auto* sub : {gen, predict, compare, sweep, tune, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    cfg = resolve_config(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const fs::path out(opt.out);
    fs::create_directories(out);
    if (*gen) return gen_workload_cmd(cfg, out);
    if (*predict) return predict_cmd(cfg, out);
    if (*compare) return compare_cmd(cfg, out);
    if (*sweep) return sweep_cmd(cfg, out);
    if (*tune) return tune_cmd(cfg, out);
    if (*report) return report_cmd(cfg, out, opt.against);
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
