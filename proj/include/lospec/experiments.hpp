// Experiment drivers shared by the command-line tool and the Python module.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lospec/baselines.hpp"
#include "lospec/costmodel.hpp"
#include "lospec/css.hpp"
#include "lospec/sparsexec.hpp"
#include "lospec/tune.hpp"
#include "lospec/workload.hpp"

namespace lospec {

struct HeadRun {
  PredictionResult prediction;
  SparsityMask oracle;
  FloatTensor output;
  FloatTensor dense_output;
  ExecMetrics metrics;
  CostReport prediction_cost;  // speculation + selection
  CostReport formal_cost;
  CostReport dense_cost;       // dense formal execution of the same head
};

struct PredictRun {
  std::vector<HeadRun> heads;
  ExecMetrics metrics;  // mean over heads
  CostReport total_cost;
  CostReport dense_cost;
};

/// Predict, execute sparsely and score one head. Recall is measured against
/// oracle_mask(exact scores, cfg.eta).
HeadRun run_head(const Workload& w, std::size_t head, const CssConfig& cfg,
                 const CostWeights& weights = {}, int threads = 1);

PredictRun run_predict(const Workload& w, const CssConfig& cfg, const CostWeights& weights = {},
                       int threads = 1);

/// Dense formal execution cost of one head (all Q/K/V rows, all S^2 scores).
CostReport dense_formal_cost(const Workload& w, std::size_t head, const CostWeights& weights = {});

struct DensityCalibration {
  Eta eta;
  double density = 0.0;
  bool reached = false;  // |density - target| <= tolerance
};

inline constexpr double kDensityTolerance = 0.02;
inline constexpr std::int64_t kCalibrationDenominator = 1024;

/// Bisection on a uniform eta (same in every round) for the predictor.
DensityCalibration calibrate_predictor_eta(const QuantTensor8& x, const HeadWeights& head,
                                           const std::vector<int>& schedule, double target,
                                           double tolerance = kDensityTolerance);

/// Bisection on a single-round eta for the oracle mask.
DensityCalibration calibrate_oracle_eta(const AccumTensor32& exact, double target,
                                        double tolerance = kDensityTolerance);

struct ThresholdCalibration {
  std::int64_t threshold = 0;
  double density = 0.0;
  bool reached = false;
};

ThresholdCalibration calibrate_static_threshold(const AccumTensor32& scores, double target,
                                                double tolerance = kDensityTolerance);

/// k = ceil(density * S), at least 1.
std::size_t topk_for_density(double density, std::size_t seq_len);

struct CompareRow {
  std::string predictor;
  double target_density = 0.0;
  double density = 0.0;
  bool density_reached = false;
  std::string setting;  // eta, k or threshold used to hit the density
  double recall = 0.0;
  double pruning_ratio = 0.0;
  double weighted_cost = 0.0;  // speculation + selection units
  std::uint64_t memory_bits = 0;
  std::uint64_t weight_bits = 0;
  SparsityMask mask;
  CostReport cost;
};

/// Predictor tags: "aloc" plus the baseline tags. The oracle mask for recall
/// is the exact-score threshold mask calibrated to the same density.
std::vector<CompareRow> run_compare(const Workload& w, std::size_t head,
                                    const std::vector<std::string>& predictors, double density,
                                    const std::vector<int>& schedule = {4, 4},
                                    const CostWeights& weights = {});

std::string compare_csv(const std::vector<CompareRow>& rows);

struct SweepPoint {
  EtaTenths eta;
  double density = 0.0;
  double rel_error = 0.0;
  double cost_reduction = 0.0;
  double recall = 0.0;
};

/// Every grid candidate evaluated on `w`.
std::vector<SweepPoint> run_sweep(const Workload& w, int rounds, const std::vector<int>& schedule,
                                  const CostWeights& weights = {}, int threads = 1);

std::string sweep_csv(const std::vector<SweepPoint>& points);

/// Evaluator over a ladder of Gaussian workloads: rung r uses seq_len = ladder[r]
/// and the remaining fields of `base`.
CandidateEvaluator workload_evaluator(const WorkloadSpec& base, const std::vector<std::size_t>& ladder,
                                      const std::vector<int>& schedule, const CostWeights& weights = {});

TuneResult run_tune(const WorkloadSpec& base, const std::vector<std::size_t>& ladder,
                    const TuneBudget& budget, int rounds, const std::vector<int>& schedule,
                    const CostWeights& weights = {}, int threads = 1);

}  // namespace lospec
