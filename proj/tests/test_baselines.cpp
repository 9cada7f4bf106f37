#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "lospec/baselines.hpp"
#include "test_util.hpp"

using namespace lospec;
using lospec::testing::gaussian_spec;
using lospec::testing::random_q8;
using lospec::testing::random_scores;

TEST_CASE("tags") {
  for (auto k : {BaselineKind::SymmetricLO, BaselineKind::Msb4, BaselineKind::TopK, BaselineKind::Oracle}) {
    CHECK(parse_baseline(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_baseline("aloc"), std::invalid_argument);
}

TEST_CASE("symmetric_lo_mul examples") {
  CHECK(symmetric_lo_mul(loe(5), loe(12)) == 32);
  CHECK(symmetric_lo_mul(loe(4), loe(8)) == 32);
  CHECK(symmetric_lo_mul(loe(0), loe(12)) == 0);
  CHECK(symmetric_lo_mul(loe(-5), loe(12)) == -32);
  CHECK(symmetric_lo_mul(loe(-5), loe(-12)) == 32);
}

TEST_CASE("msb4_predict examples") {
  CHECK(msb4_predict(QuantTensor8(1, 1, {127}), QuantTensor8(1, 1, {112}))(0, 0) == 49 * 256);
  CHECK(msb4_predict(QuantTensor8(1, 2, {15, -3}), QuantTensor8(1, 2, {100, 9}))(0, 0) == 0);

  // +-16 truncates to +-1 and reproduces the exact sign pattern
  QuantTensor8 q(2, 2, {16, 0, 0, -16});
  QuantTensor8 k(2, 2, {16, 0, 0, 16});
  const auto s = msb4_predict(q, k);
  const auto exact = matmul_exact(q, transpose(k));
  for (std::size_t i = 0; i < 4; ++i) {
    const auto a = s.data()[i];
    const auto b = exact.data()[i];
    CHECK((a > 0) == (b > 0));
    CHECK((a < 0) == (b < 0));
  }

  CostReport cost;
  Xoshiro256ss rng(2);
  msb4_predict(random_q8(rng, 3, 5), random_q8(rng, 4, 5), &cost);
  CHECK(cost.count(Category::Mult) == 3 * 4 * 5);
  CHECK(cost.units(Stage::Speculation, Category::Mult) == 3 * 4 * 5 * 16);
}

TEST_CASE("topk_select examples") {
  const std::vector<std::int32_t> s{40, -8, 16, 2};
  CHECK(topk_select(s, 2) == std::vector<std::uint32_t>{0, 2});
  CHECK(topk_select(s, 4) == std::vector<std::uint32_t>{0, 1, 2, 3});
  const std::vector<std::int32_t> flat{3, 3, 3, 3};
  CHECK(topk_select(flat, 2) == std::vector<std::uint32_t>{0, 1});
  CHECK_THROWS_AS(topk_select(s, 0), std::invalid_argument);
  CHECK_THROWS_AS(topk_select(s, 5), std::invalid_argument);

  CostReport cost;
  topk_select(std::vector<std::int32_t>(8, 1), 3, &cost);
  CHECK(cost.count(Stage::Selection, Category::Compare) == 24);
}

TEST_CASE("topk_select agrees with a full sort oracle") {
  Xoshiro256ss rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.next() % 30;
    const auto s = random_scores(rng, n, 10);
    const std::size_t k = 1 + rng.next() % n;
    std::vector<std::pair<std::int64_t, std::uint32_t>> keyed;
    for (std::uint32_t j = 0; j < n; ++j) keyed.push_back({-static_cast<std::int64_t>(s[j]), j});
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::uint32_t> want;
    for (std::size_t t = 0; t < k; ++t) want.push_back(keyed[t].second);
    std::sort(want.begin(), want.end());
    CHECK(topk_select(s, k) == want);
  }
}

TEST_CASE("oracle_mask examples") {
  const AccumTensor32 one_row(1, 1, {5});
  const std::vector<Eta> full{Eta::tenths(10)};
  CHECK(oracle_mask(one_row, full).selected.front() == std::vector<std::uint32_t>{0});

  AccumTensor32 s(4, 4, {40, -8, 16, 2,  //
                         1, 1, 1, 1,     //
                         -3, 9, 9, 0,    //
                         0, 0, 0, 7});
  CHECK(oracle_mask(s, full).same_selection(SparsityMask::full(4, 4)));
  const std::vector<Eta> zero{Eta::tenths(0)};
  const auto am = oracle_mask(s, zero);
  CHECK(am.selected[0] == std::vector<std::uint32_t>{0});
  CHECK(am.selected[1] == std::vector<std::uint32_t>{0, 1, 2, 3});
  CHECK(am.selected[2] == std::vector<std::uint32_t>{1, 2});
  CHECK(am.selected[3] == std::vector<std::uint32_t>{3});
  const std::vector<Eta> half{Eta::tenths(5)};
  CHECK(oracle_mask(s, half).selected[0] == std::vector<std::uint32_t>{0, 2});

  CHECK_THROWS_AS(oracle_mask(AccumTensor32(2, 3), half), DimensionError);
}

TEST_CASE("static threshold keeps the argmax") {
  AccumTensor32 s(2, 3, {5, 1, 5, -9, -7, -8});
  CostReport cost;
  const auto m = static_threshold_mask(s, 3, &cost);
  CHECK(m.selected[0] == std::vector<std::uint32_t>{0, 2});
  CHECK(m.selected[1] == std::vector<std::uint32_t>{1});
  CHECK(cost.count(Category::Compare) == 2 * 3 + 2 * 2);
}

TEST_CASE("baseline score paths") {
  const auto w = gen_workload(gaussian_spec(12, 8, 3));
  const auto& h = w.heads[0];

  CostReport exact_cost;
  const auto exact = exact_scores(w.x, h.wq, h.wk, &exact_cost);
  const auto q = requantize_pow2(matmul_exact(w.x, h.wq));
  const auto k = requantize_pow2(matmul_exact(w.x, h.wk));
  CHECK(exact == matmul_exact(q, transpose(k)));
  CHECK(exact_cost.count(Category::Mult) == 2 * 12 * 8 * 8 + 12 * 12 * 8);

  CostReport msb_cost;
  CHECK(msb4_scores(w.x, h.wq, h.wk, &msb_cost) == msb4_predict(q, k));
  CHECK(msb_cost.count(Stage::Speculation, Category::Mult) == 2 * 12 * 8 * 8 + 12 * 12 * 8);
  CHECK(msb_cost.memory_bits(MemClass::Weight) == 2 * 8 * 8 * 8);

  CostReport sym_cost;
  const auto sym = symmetric_scores(w.x, h.wq, h.wk, &sym_cost);
  CHECK(sym.rows() == 12);
  CHECK(sym_cost.count(Category::Mult) == 0);
  CHECK(sym_cost.count(Category::Loe) == 2 * (2 * 12 * 8 * 8 + 12 * 12 * 8));
  CHECK(sym_cost.memory_bits(MemClass::Weight) == 2 * 8 * 8 * 8);

  CHECK_THROWS_AS(exact_scores(w.x, QuantTensor8(7, 8), h.wk), DimensionError);
}

TEST_CASE("ALOC is never worse than symmetric leading-one on 8-bit pairs") {
  Xoshiro256ss rng(17);
  for (int trial = 0; trial < 20000; ++trial) {
    const int x = lospec::testing::random_i8(rng);
    const int y = lospec::testing::random_i8(rng);
    if (x == 0 || y == 0) continue;
    const auto exact = static_cast<std::int64_t>(x) * y;
    CHECK(std::llabs(exact - aloc_mul(x, loe(y))) <= std::llabs(exact - symmetric_lo_mul(loe(x), loe(y))));
  }
}
