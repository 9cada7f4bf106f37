// Experiment configuration document (JSON, schema_version 1).
//
//   {
//     "schema_version": 1,
//     "workload": {"seq_len": 32, "hidden": 16, "heads": 1, "seed": 42,
//                  "source": "gaussian" | "tensor-files",
//                  "rounding": "half_away_from_zero" | "half_to_even",
//                  "files": {"x": "x.qt8", "wq": [...], "wk": [...], "wv": [...]}},
//     "css": {"eta_tenths": [5, 5], "nibble_schedule": [4, 4]},
//     "compare": {"predictors": ["aloc", "symmetric_lo", "msb4", "topk"], "density": 0.25},
//     "tune": {"ladder": [16, 32], "budget": 0.02, "label": "aggressive"},
//     "cost_weights": {"name": "gate-count-v1", "mult": 1, "add": 1, "shift": 1,
//                      "compare": 1, "loe": 1, "mem_per_bit": 0},
//     "threads": 1
//   }
//
// Every section is optional; unknown keys are rejected.
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "lospec/costmodel.hpp"
#include "lospec/css.hpp"
#include "lospec/tune.hpp"
#include "lospec/workload.hpp"

namespace lospec {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  WorkloadSpec workload;
  CssConfig css;
  CostWeights weights;
  std::vector<std::string> predictors = {"aloc", "symmetric_lo", "msb4", "topk"};
  double density = 0.25;
  std::vector<std::size_t> ladder = {16, 32};
  TuneBudget budget;
  int threads = 1;

  /// Throws ConfigError describing the first problem found.
  void validate() const;
};

/// Relative tensor paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

std::string to_json(const ExperimentConfig& cfg);

}  // namespace lospec
