#include "lospec/tune.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace lospec {
namespace {

int eta_sum(const EtaTenths& e) { return std::accumulate(e.begin(), e.end(), 0); }

std::vector<CandidateEval> evaluate_all(const std::vector<EtaTenths>& candidates, std::size_t rung,
                                        const CandidateEvaluator& evaluate, int threads) {
  std::vector<CandidateEval> out(candidates.size());
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)),
                                             std::max<std::size_t>(candidates.size(), 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = evaluate(candidates[i], rung);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < candidates.size(); i = next++) {
          try {
            out[i] = evaluate(candidates[i], rung);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

nlohmann::ordered_json eval_json(const CandidateEval& e) {
  return {{"eta_tenths", e.eta},
          {"rel_error", e.rel_error},
          {"cost_reduction", e.cost_reduction},
          {"feasible", e.feasible}};
}

}  // namespace

std::vector<EtaTenths> grid_candidates(int rounds) {
  if (rounds < 1) throw std::invalid_argument("grid_candidates: rounds must be >= 1");
  std::vector<EtaTenths> out;
  EtaTenths current(static_cast<std::size_t>(rounds), 2);
  while (true) {
    out.push_back(current);
    int pos = rounds - 1;
    while (pos >= 0 && current[static_cast<std::size_t>(pos)] == 8) {
      current[static_cast<std::size_t>(pos)] = 2;
      --pos;
    }
    if (pos < 0) break;
    ++current[static_cast<std::size_t>(pos)];
  }
  return out;
}

void TuneBudget::validate() const {
  if (!(max_rel_error > 0.0)) throw std::invalid_argument("tune budget must be positive");
}

bool ranks_before(const CandidateEval& a, const CandidateEval& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.feasible) {
    if (a.cost_reduction != b.cost_reduction) return a.cost_reduction > b.cost_reduction;
  } else {
    if (a.rel_error != b.rel_error) return a.rel_error < b.rel_error;
  }
  const int sa = eta_sum(a.eta);
  const int sb = eta_sum(b.eta);
  if (sa != sb) return sa > sb;
  return a.eta < b.eta;
}

TuneResult successive_halving(const std::vector<EtaTenths>& candidates,
                              const std::vector<std::size_t>& ladder, const TuneBudget& budget,
                              const CandidateEvaluator& evaluate, int threads) {
  budget.validate();
  if (candidates.empty()) throw std::invalid_argument("successive_halving: no candidates");
  if (ladder.empty()) throw std::invalid_argument("successive_halving: empty ladder");
  for (std::size_t r = 1; r < ladder.size(); ++r) {
    if (ladder[r] <= ladder[r - 1]) {
      throw std::invalid_argument("successive_halving: ladder must be strictly increasing");
    }
  }

  TuneResult result;
  result.budget = budget;
  std::vector<EtaTenths> alive = candidates;
  for (std::size_t rung = 0; rung < ladder.size(); ++rung) {
    auto evals = evaluate_all(alive, rung, evaluate, threads);
    for (auto& e : evals) e.feasible = e.rel_error <= budget.max_rel_error;
    std::sort(evals.begin(), evals.end(), ranks_before);

    RungLog log;
    log.rung = rung;
    log.resource = ladder[rung];
    const bool last = rung + 1 == ladder.size();
    const std::size_t keep = last ? 1 : (evals.size() + 1) / 2;
    alive.clear();
    for (std::size_t i = 0; i < keep; ++i) alive.push_back(evals[i].eta);
    log.kept = alive;
    log.evaluations = evals;
    result.log.push_back(std::move(log));

    if (last) {
      // with nothing feasible the ranking is by error, so front() is the best-error candidate
      const auto& best = evals.front();
      result.feasible = best.feasible;
      result.eta = best.eta;
      result.rel_error = best.rel_error;
      result.cost_reduction = best.cost_reduction;
    }
  }
  return result;
}

std::string TuneResult::to_json() const {
  nlohmann::ordered_json j;
  j["feasible"] = feasible;
  j["eta_tenths"] = eta;
  j["rel_error"] = rel_error;
  j["cost_reduction"] = cost_reduction;
  j["budget"] = {{"label", budget.label}, {"max_rel_error", budget.max_rel_error}};
  auto rungs = nlohmann::ordered_json::array();
  for (const auto& r : log) {
    auto evals = nlohmann::ordered_json::array();
    for (const auto& e : r.evaluations) evals.push_back(eval_json(e));
    rungs.push_back({{"rung", r.rung}, {"resource", r.resource}, {"evaluations", evals}, {"kept", r.kept}});
  }
  j["rungs"] = rungs;
  return j.dump(2);
}

}  // namespace lospec
