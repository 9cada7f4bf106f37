#include "lospec/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace lospec {
namespace {

// Smallest num in [0, den] whose density reaches `target`, assuming density
// is non-decreasing in num; then the closer of num and num - 1.
DensityCalibration bisect_eta(const std::function<double(std::int64_t)>& density_at,
                              std::int64_t den, double target, double tolerance) {
  std::map<std::int64_t, double> seen;
  auto density = [&](std::int64_t num) {
    auto it = seen.find(num);
    if (it == seen.end()) it = seen.emplace(num, density_at(num)).first;
    return it->second;
  };
  std::int64_t lo = 0;
  std::int64_t hi = den;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (density(mid) >= target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  std::int64_t best = lo;
  if (lo > 0 && std::abs(density(lo - 1) - target) < std::abs(density(lo) - target)) best = lo - 1;
  DensityCalibration cal{Eta{best, den}, density(best), false};
  cal.reached = std::abs(cal.density - target) <= tolerance;
  return cal;
}

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)),
                                             std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::string eta_text(Eta e) {
  std::ostringstream out;
  out << e.num << '/' << e.den;
  return out.str();
}

}  // namespace

CostReport dense_formal_cost(const Workload& w, std::size_t head, const CostWeights& weights) {
  const auto& hw = w.heads.at(head);
  CostReport cost(weights);
  cost.record_load(Stage::Formal, MemClass::Activation, 8, w.x.size());
  cost.record_load(Stage::Formal, MemClass::Weight, 8, hw.wq.size() + hw.wk.size() + hw.wv.size());
  attention_ref(w.x, hw.wq, hw.wk, hw.wv, hw.wq.cols(), &cost);
  return cost;
}

HeadRun run_head(const Workload& w, std::size_t head, const CssConfig& cfg,
                 const CostWeights& weights, int threads) {
  const auto& hw = w.heads.at(head);
  HeadRun run{.prediction = {},
              .oracle = {},
              .output = {},
              .dense_output = {},
              .metrics = {},
              .prediction_cost = CostReport(weights),
              .formal_cost = CostReport(weights),
              .dense_cost = dense_formal_cost(w, head, weights)};

  const auto dense = attention_ref(w.x, hw.wq, hw.wk, hw.wv, hw.wq.cols());
  run.dense_output = dense.output;
  run.prediction = predict_mask(w.x, hw.wq_codes, hw.wk_codes, cfg, &run.prediction_cost, threads);
  auto formal = execute_sparse(w.x, hw.wq, hw.wk, hw.wv, run.prediction.mask, dense.output,
                               &run.formal_cost);
  run.output = std::move(formal.output);
  run.metrics = formal.metrics;
  run.oracle = oracle_mask(dense.scores, cfg.eta);
  run.metrics.recall = mask_recall(run.prediction.mask, run.oracle);

  CostReport total = run.prediction_cost;
  total.merge(run.formal_cost);
  run.metrics.cost_reduction_pct = compare_reports(total, run.dense_cost).total;
  return run;
}

PredictRun run_predict(const Workload& w, const CssConfig& cfg, const CostWeights& weights,
                       int threads) {
  cfg.validate();
  PredictRun run{.heads = {}, .metrics = {}, .total_cost = CostReport(weights),
                 .dense_cost = CostReport(weights)};
  run.heads.resize(w.heads.size());
  // heads in the pool; rows inside a head stay single threaded
  parallel_for(w.heads.size(), threads, [&](std::size_t h) { run.heads[h] = run_head(w, h, cfg, weights, 1); });

  double recall = 0.0;
  for (const auto& h : run.heads) {
    run.metrics.pruning_ratio += h.metrics.pruning_ratio;
    run.metrics.kv_coverage += h.metrics.kv_coverage;
    run.metrics.rel_error += h.metrics.rel_error;
    recall += h.metrics.recall.value_or(0.0);
    run.total_cost.merge(h.prediction_cost);
    run.total_cost.merge(h.formal_cost);
    run.dense_cost.merge(h.dense_cost);
  }
  const double n = static_cast<double>(run.heads.size());
  run.metrics.pruning_ratio /= n;
  run.metrics.kv_coverage /= n;
  run.metrics.rel_error /= n;
  run.metrics.recall = recall / n;
  run.metrics.cost_reduction_pct = compare_reports(run.total_cost, run.dense_cost).total;
  return run;
}

DensityCalibration calibrate_predictor_eta(const QuantTensor8& x, const HeadWeights& head,
                                           const std::vector<int>& schedule, double target,
                                           double tolerance) {
  const auto den = kCalibrationDenominator;
  return bisect_eta(
      [&](std::int64_t num) {
        const auto cfg = CssConfig::uniform(Eta{num, den}, schedule);
        return predict_mask(x, head.wq_codes, head.wk_codes, cfg).mask.density();
      },
      den, target, tolerance);
}

DensityCalibration calibrate_oracle_eta(const AccumTensor32& exact, double target,
                                        double tolerance) {
  const auto den = kCalibrationDenominator;
  return bisect_eta(
      [&](std::int64_t num) {
        const Eta eta{num, den};
        return oracle_mask(exact, std::span<const Eta>(&eta, 1)).density();
      },
      den, target, tolerance);
}

ThresholdCalibration calibrate_static_threshold(const AccumTensor32& scores, double target,
                                                double tolerance) {
  if (scores.size() == 0) throw std::invalid_argument("calibrate_static_threshold: empty scores");
  const auto [mn, mx] = std::minmax_element(scores.data().begin(), scores.data().end());
  auto density = [&](std::int64_t t) { return static_threshold_mask(scores, t).density(); };
  // density is non-increasing in the threshold
  std::int64_t lo = *mn;
  std::int64_t hi = std::int64_t{*mx} + 1;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo + 1) / 2;
    if (density(mid) >= target) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  ThresholdCalibration cal{lo, density(lo), false};
  const double above = density(lo + 1);
  if (std::abs(above - target) < std::abs(cal.density - target)) cal = {lo + 1, above, false};
  cal.reached = std::abs(cal.density - target) <= tolerance;
  return cal;
}

std::size_t topk_for_density(double density, std::size_t seq_len) {
  const auto k = static_cast<std::size_t>(std::ceil(density * static_cast<double>(seq_len) - 1e-9));
  return std::clamp<std::size_t>(k, 1, seq_len);
}

std::vector<CompareRow> run_compare(const Workload& w, std::size_t head,
                                    const std::vector<std::string>& predictors, double density,
                                    const std::vector<int>& schedule, const CostWeights& weights) {
  if (predictors.size() < 2) throw std::invalid_argument("compare: need at least two predictors");
  if (!(density > 0.0 && density <= 1.0)) throw std::invalid_argument("compare: density must be in (0, 1]");
  const auto& hw = w.heads.at(head);
  const std::size_t s = w.seq_len();
  const std::size_t h = w.hidden();

  const auto exact = exact_scores(w.x, hw.wq, hw.wk);
  const auto oracle_cal = calibrate_oracle_eta(exact, density);
  const auto oracle = oracle_mask(exact, std::span<const Eta>(&oracle_cal.eta, 1));

  std::vector<CompareRow> rows;
  for (const auto& tag : predictors) {
    CompareRow row;
    row.predictor = tag;
    row.target_density = density;
    row.cost = CostReport(weights);
    if (tag == "aloc") {
      const auto cal = calibrate_predictor_eta(w.x, hw, schedule, density);
      row.mask = predict_mask(w.x, hw.wq_codes, hw.wk_codes, CssConfig::uniform(cal.eta, schedule),
                              &row.cost)
                     .mask;
      row.setting = "eta=" + eta_text(cal.eta);
      row.density_reached = cal.reached;
    } else {
      switch (parse_baseline(tag)) {
        case BaselineKind::SymmetricLO: {
          const auto k = topk_for_density(density, s);
          const auto scores = symmetric_scores(w.x, hw.wq, hw.wk, &row.cost);
          row.mask = topk_mask(scores, k, &row.cost, baseline_score_width(BaselineKind::SymmetricLO, h));
          row.setting = "k=" + std::to_string(k);
          break;
        }
        case BaselineKind::Msb4: {
          const auto scores = msb4_scores(w.x, hw.wq, hw.wk, &row.cost);
          const auto cal = calibrate_static_threshold(scores, density);
          row.mask = static_threshold_mask(scores, cal.threshold, &row.cost,
                                           baseline_score_width(BaselineKind::Msb4, h));
          row.setting = "threshold=" + std::to_string(cal.threshold);
          break;
        }
        case BaselineKind::TopK: {
          const auto k = topk_for_density(density, s);
          const auto scores = exact_scores(w.x, hw.wq, hw.wk, &row.cost, Stage::Speculation);
          row.mask = topk_mask(scores, k, &row.cost, baseline_score_width(BaselineKind::TopK, h));
          row.setting = "k=" + std::to_string(k);
          break;
        }
        case BaselineKind::Oracle:
          row.mask = oracle;
          row.setting = "eta=" + eta_text(oracle_cal.eta);
          break;
      }
    }
    row.density = row.mask.density();
    if (tag != "aloc") row.density_reached = std::abs(row.density - density) <= kDensityTolerance;
    row.recall = mask_recall(row.mask, oracle);
    row.pruning_ratio = 1.0 - row.density;
    row.weighted_cost = row.cost.units();
    row.memory_bits = row.cost.memory_bits();
    row.weight_bits = row.cost.memory_bits(MemClass::Weight);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream out;
  out << "predictor,target_density,density,density_reached,setting,recall,pruning_ratio,"
         "weighted_cost,memory_bits,weight_bits\n";
  for (const auto& r : rows) {
    out << r.predictor << ',' << r.target_density << ',' << r.density << ','
        << (r.density_reached ? "true" : "false") << ',' << r.setting << ',' << r.recall << ','
        << r.pruning_ratio << ',' << r.weighted_cost << ',' << r.memory_bits << ','
        << r.weight_bits << '\n';
  }
  return out.str();
}

std::vector<SweepPoint> run_sweep(const Workload& w, int rounds, const std::vector<int>& schedule,
                                  const CostWeights& weights, int threads) {
  const auto grid = grid_candidates(rounds);
  std::vector<SweepPoint> points(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const auto run = run_predict(w, CssConfig::from_tenths(grid[i], schedule), weights, 1);
    double density = 0.0;
    for (const auto& h : run.heads) density += h.prediction.mask.density();
    points[i] = SweepPoint{grid[i], density / static_cast<double>(run.heads.size()),
                           run.metrics.rel_error, run.metrics.cost_reduction_pct.value_or(0.0) / 100.0,
                           run.metrics.recall.value_or(0.0)};
  });
  return points;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << "eta_tenths,density,rel_error,cost_reduction,recall\n";
  for (const auto& p : points) {
    for (std::size_t r = 0; r < p.eta.size(); ++r) out << (r ? ";" : "") << p.eta[r];
    out << ',' << p.density << ',' << p.rel_error << ',' << p.cost_reduction << ',' << p.recall << '\n';
  }
  return out.str();
}

CandidateEvaluator workload_evaluator(const WorkloadSpec& base, const std::vector<std::size_t>& ladder,
                                      const std::vector<int>& schedule, const CostWeights& weights) {
  auto workloads = std::make_shared<std::vector<Workload>>();
  for (auto s : ladder) {
    auto spec = base;
    spec.seq_len = s;
    spec.source = WorkloadSource::Gaussian;
    workloads->push_back(gen_workload(spec));
  }
  return [workloads, schedule, weights](const EtaTenths& eta, std::size_t rung) {
    const auto run = run_predict(workloads->at(rung), CssConfig::from_tenths(eta, schedule), weights, 1);
    CandidateEval e;
    e.eta = eta;
    e.rel_error = run.metrics.rel_error;
    e.cost_reduction = run.metrics.cost_reduction_pct.value_or(0.0) / 100.0;
    return e;
  };
}

TuneResult run_tune(const WorkloadSpec& base, const std::vector<std::size_t>& ladder,
                    const TuneBudget& budget, int rounds, const std::vector<int>& schedule,
                    const CostWeights& weights, int threads) {
  return successive_halving(grid_candidates(rounds), ladder, budget,
                            workload_evaluator(base, ladder, schedule, weights), threads);
}

}  // namespace lospec
