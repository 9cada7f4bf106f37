#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>

#include "lospec/experiments.hpp"
#include "lospec/tune.hpp"
#include "test_util.hpp"

using namespace lospec;

namespace {

int eta_sum(const EtaTenths& e) { return std::accumulate(e.begin(), e.end(), 0); }

// Smaller eta prunes harder: lower cost, higher error. The rung adds a small
// candidate-dependent wobble so rankings are not identical at every rung.
CandidateEval synthetic(const EtaTenths& eta, std::size_t rung) {
  const double s = eta_sum(eta);
  const double n = static_cast<double>(eta.size());
  double wobble = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) wobble += static_cast<double>((eta[i] * 7 + static_cast<int>(i) * 3 + static_cast<int>(rung)) % 5);
  CandidateEval e;
  e.eta = eta;
  e.cost_reduction = 0.9 - s / (10.0 * n) + 1e-3 * wobble;
  e.rel_error = (8.0 * n - s) / (60.0 * n) + 1e-4 * wobble;
  return e;
}

// Rung-independent metrics: halving then keeps the global best.
CandidateEval consistent(const EtaTenths& eta, std::size_t) {
  auto e = synthetic(eta, 0);
  return e;
}

// Independent ranking written out as a key tuple.
bool oracle_better(const CandidateEval& a, const CandidateEval& b) {
  auto key = [](const CandidateEval& e) {
    return std::make_tuple(e.feasible ? 0 : 1, e.feasible ? -e.cost_reduction : e.rel_error, -eta_sum(e.eta), e.eta);
  };
  return key(a) < key(b);
}

}  // namespace

TEST_CASE("grid_candidates") {
  CHECK(grid_candidates(1).size() == 7);
  CHECK(grid_candidates(2).size() == 49);
  CHECK(grid_candidates(3).size() == 343);
  CHECK(grid_candidates(2).front() == EtaTenths{2, 2});
  CHECK(grid_candidates(2).back() == EtaTenths{8, 8});
  const auto g = grid_candidates(2);
  CHECK(std::is_sorted(g.begin(), g.end()));
  CHECK_THROWS_AS(grid_candidates(0), std::invalid_argument);
}

TEST_CASE("budget validation and presets") {
  CHECK(TuneBudget::conservative().max_rel_error == 0.005);
  CHECK(TuneBudget::aggressive().max_rel_error == 0.02);
  CHECK_THROWS(TuneBudget{0.0, "x"}.validate());
  CHECK_THROWS(TuneBudget{-1.0, "x"}.validate());
  CHECK_THROWS(successive_halving({}, {4}, TuneBudget{}, synthetic));
  CHECK_THROWS(successive_halving(grid_candidates(1), {8, 8}, TuneBudget{}, synthetic));
  CHECK_THROWS(successive_halving(grid_candidates(1), {}, TuneBudget{}, synthetic));
}

TEST_CASE("unbounded budget picks the minimum eta sum") {
  const TuneBudget inf{std::numeric_limits<double>::infinity(), "unbounded"};
  const auto r = successive_halving(grid_candidates(2), {1, 2, 3}, inf, consistent);
  CHECK(r.feasible);
  CHECK(r.eta == EtaTenths{2, 2});
}

TEST_CASE("vanishing budget keeps the least pruning or reports infeasibility") {
  auto exact_at_top = [](const EtaTenths& eta, std::size_t rung) {
    auto e = synthetic(eta, rung);
    if (eta_sum(eta) == 16) e.rel_error = 0.0;
    return e;
  };
  const auto r = successive_halving(grid_candidates(2), {1, 2, 3}, TuneBudget{1e-12, "tight"}, exact_at_top);
  CHECK(r.feasible);
  CHECK(r.eta == EtaTenths{8, 8});

  const auto none = successive_halving(grid_candidates(2), {1, 2, 3}, TuneBudget{1e-12, "tight"}, synthetic);
  CHECK_FALSE(none.feasible);
  // the infeasible result carries the lowest-error candidate of the final rung
  const auto& last = none.log.back().evaluations;
  const auto best = std::min_element(last.begin(), last.end(),
                                     [](const auto& a, const auto& b) { return a.rel_error < b.rel_error; });
  CHECK(none.eta == best->eta);
  CHECK(none.rel_error == best->rel_error);
}

TEST_CASE("halving schedule and log") {
  const auto r = successive_halving(grid_candidates(2), {8, 16, 32}, TuneBudget{0.05, "b"}, synthetic);
  REQUIRE(r.log.size() == 3);
  CHECK(r.log[0].evaluations.size() == 49);
  CHECK(r.log[0].kept.size() == 25);
  CHECK(r.log[1].evaluations.size() == 25);
  CHECK(r.log[1].kept.size() == 13);
  CHECK(r.log[2].evaluations.size() == 13);
  CHECK(r.log[2].resource == 32);
  for (const auto& rung : r.log) {
    for (std::size_t i = 1; i < rung.evaluations.size(); ++i) {
      CHECK_FALSE(oracle_better(rung.evaluations[i], rung.evaluations[i - 1]));
    }
    for (const auto& e : rung.evaluations) CHECK(e.feasible == (e.rel_error <= 0.05));
  }
  if (r.feasible) CHECK(r.rel_error <= 0.05);

  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["rungs"].size() == 3);
  CHECK(j["rungs"][0]["evaluations"].size() == 49);
  CHECK(j["eta_tenths"].get<EtaTenths>() == r.eta);
  CHECK(j["budget"]["max_rel_error"] == 0.05);
}

TEST_CASE("final choice survives exhaustive evaluation at the last rung") {
  for (double budget : {0.01, 0.03, 0.05, 0.08}) {
    const auto r = successive_halving(grid_candidates(2), {4, 8}, TuneBudget{budget, "b"}, synthetic);
    auto chosen = synthetic(r.eta, 1);
    chosen.feasible = chosen.rel_error <= budget;
    CHECK(chosen.rel_error == r.rel_error);
    CHECK(chosen.cost_reduction == r.cost_reduction);
    CHECK(r.feasible == chosen.feasible);
    // re-evaluate the final-rung survivors from scratch; nothing beats the choice
    for (const auto& kept : r.log.back().evaluations) {
      auto e = synthetic(kept.eta, 1);
      e.feasible = e.rel_error <= budget;
      CHECK_FALSE(oracle_better(e, chosen));
    }
  }
}

TEST_CASE("loosening the budget never lowers the achieved cost reduction") {
  double prev = -std::numeric_limits<double>::infinity();
  for (double budget : {0.002, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 1.0}) {
    const auto r = successive_halving(grid_candidates(2), {4, 8, 16}, TuneBudget{budget, "b"}, consistent);
    if (!r.feasible) continue;
    CHECK(r.cost_reduction >= prev);
    prev = r.cost_reduction;
  }
}

TEST_CASE("results do not depend on thread count") {
  const auto a = successive_halving(grid_candidates(2), {8, 16}, TuneBudget{0.05, "b"}, synthetic, 1);
  const auto b = successive_halving(grid_candidates(2), {8, 16}, TuneBudget{0.05, "b"}, synthetic, 6);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("evaluator exceptions propagate") {
  auto failing = [](const EtaTenths& eta, std::size_t rung) -> CandidateEval {
    if (eta == EtaTenths{5, 5}) throw std::runtime_error("boom");
    return synthetic(eta, rung);
  };
  CHECK_THROWS_AS(successive_halving(grid_candidates(2), {8}, TuneBudget{}, failing, 4), std::runtime_error);
}

TEST_CASE("seed-42 tune on ladder {16, 32} is pinned and deterministic") {
  WorkloadSpec base;
  base.seed = 42;
  const TuneBudget budget{0.05, "aggressive"};
  const auto r = run_tune(base, {16, 32}, budget, 2, {4, 4});
  // frozen from the first deterministic run
  CHECK(r.feasible);
  CHECK(r.eta == EtaTenths{5, 6});
  CHECK(r.rel_error == doctest::Approx(0.00026721464444876968).epsilon(1e-12));
  CHECK(r.cost_reduction == doctest::Approx(-0.013614358161027518).epsilon(1e-12));
  CHECK(run_tune(base, {16, 32}, budget, 2, {4, 4}, {}, 4).to_json() == r.to_json());
}
