// Threshold-schedule search: a grid over per-round eta in tenths, pruned by
// successive halving over a ladder of increasingly large workloads.
#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace lospec {

using EtaTenths = std::vector<int>;

/// {2..8}^rounds in lexicographic order. Throws for rounds < 1.
std::vector<EtaTenths> grid_candidates(int rounds);

struct TuneBudget {
  double max_rel_error = 0.02;
  std::string label = "aggressive";

  void validate() const;

  static TuneBudget conservative() { return {0.005, "conservative"}; }
  static TuneBudget aggressive() { return {0.02, "aggressive"}; }
};

struct CandidateEval {
  EtaTenths eta;
  double rel_error = 0.0;
  double cost_reduction = 0.0;  // fraction of dense cost saved, may be negative
  bool feasible = false;
};

struct RungLog {
  std::size_t rung = 0;
  std::size_t resource = 0;  // workload size evaluated at this rung
  std::vector<CandidateEval> evaluations;  // ranked best first
  std::vector<EtaTenths> kept;
};

struct TuneResult {
  bool feasible = false;
  EtaTenths eta;  // chosen, or the best-error candidate when infeasible
  double rel_error = 0.0;
  double cost_reduction = 0.0;
  TuneBudget budget;
  std::vector<RungLog> log;

  std::string to_json() const;
};

/// Evaluates one candidate on ladder rung `rung`. Must be deterministic.
using CandidateEvaluator = std::function<CandidateEval(const EtaTenths& eta, std::size_t rung)>;

/// Ordering used at every rung: feasible before infeasible; feasible by
/// higher cost reduction, then larger eta sum, then lexicographic eta;
/// infeasible by lower error, then larger eta sum, then lexicographic eta.
bool ranks_before(const CandidateEval& a, const CandidateEval& b);

/// Keep the top ceil(n/2) at each rung but the last; the final rung returns
/// its best feasible candidate or an infeasible result carrying the
/// lowest-error candidate. `ladder` holds the resource of each rung.
TuneResult successive_halving(const std::vector<EtaTenths>& candidates,
                              const std::vector<std::size_t>& ladder, const TuneBudget& budget,
                              const CandidateEvaluator& evaluate, int threads = 1);

}  // namespace lospec
