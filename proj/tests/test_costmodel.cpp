#include <doctest.h>

#include <algorithm>
#include <json.hpp>

#include "lospec/costmodel.hpp"
#include "test_util.hpp"

using namespace lospec;

TEST_CASE("record weights by category") {
  CostReport r;
  r.record(Category::Mult, Stage::Formal, 8, 8);
  CHECK(r.units() == 64.0);
  r.record(Category::Shift, Stage::Speculation, 14);
  CHECK(r.units() == 78.0);
  r.record_load(Stage::Speculation, MemClass::Weight, 5, 1);
  CHECK(r.memory_bits() == 5);
  CHECK(r.memory_bits(MemClass::Weight) == 5);
  CHECK(r.memory_bits(MemClass::Activation) == 0);
  CHECK(r.units() == 78.0);
  CHECK(r.units(Stage::Formal) == 64.0);
  CHECK(r.units(Stage::Speculation, Category::Shift) == 14.0);
  CHECK(r.count(Category::Mem) == 1);
}

TEST_CASE("string categories") {
  CostReport r;
  r.record("mult", Stage::Formal, 4, 4, 3);
  r.record("compare", Stage::Selection, 10);
  r.record("mem", Stage::Formal, 8, 0, 2);
  CHECK(r.count(Category::Mult) == 3);
  CHECK(r.units() == 3 * 16 + 10);
  CHECK(r.memory_bits(MemClass::Activation) == 16);
  CHECK_THROWS_AS(r.record("divide", Stage::Formal, 8), std::invalid_argument);
  CHECK_THROWS_AS(parse_stage("decode"), std::invalid_argument);
  CHECK(parse_category("loe") == Category::Loe);
}

TEST_CASE("memory units only count when weighted") {
  CostWeights w;
  w.mem_per_bit = 0.5;
  CostReport r(w);
  r.record_load(Stage::Formal, MemClass::Weight, 8, 4);
  CHECK(r.units() == 16.0);
  CostWeights bad;
  bad.add = -1;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("compare_reports examples") {
  CostReport a;
  a.record(Category::Add, Stage::Formal, 21);
  CostReport b;
  b.record(Category::Add, Stage::Formal, 100);
  CHECK(*compare_reports(a, b).total == doctest::Approx(79.0));
  CHECK(*compare_reports(a, a).total == doctest::Approx(0.0));

  CostReport shifts;
  shifts.record(Category::Shift, Stage::Speculation, 14, 0, 1000);
  CostReport mults;
  mults.record(Category::Mult, Stage::Speculation, 8, 8, 1000);
  const auto s = compare_reports(shifts, mults);
  CHECK(*s.per_stage.at(Stage::Speculation) == doctest::Approx(100.0 * (1.0 - 14.0 / 64.0)));
  CHECK_FALSE(s.per_stage.at(Stage::Formal).has_value());

  CHECK_FALSE(compare_reports(a, CostReport{}).total.has_value());
}

TEST_CASE("an ALOC inner product is cheaper than the multiplier one for every length") {
  for (std::uint64_t n = 1; n <= 1024; ++n) {
    CostReport aloc;
    aloc.record(Category::Shift, Stage::Speculation, 14, 0, n);
    if (n > 1) aloc.record(Category::Add, Stage::Speculation, 14, 0, n - 1);
    CostReport mul;
    mul.record(Category::Mult, Stage::Speculation, 8, 8, n);
    if (n > 1) mul.record(Category::Add, Stage::Speculation, 16, 0, n - 1);
    CHECK(aloc.count(Category::Mult) == 0);
    CHECK(aloc.units() < mul.units());
  }
}

TEST_CASE("merge is order-independent") {
  Xoshiro256ss rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CostReport> parts(6);
    for (auto& p : parts) {
      const int events = 1 + static_cast<int>(rng.next() % 20);
      for (int e = 0; e < events; ++e) {
        const auto cat = static_cast<Category>(rng.next() % 5);
        const auto stage = static_cast<Stage>(rng.next() % 3);
        const int wa = 1 + static_cast<int>(rng.next() % 32);
        const int wb = cat == Category::Mult ? 1 + static_cast<int>(rng.next() % 16) : 0;
        p.record(cat, stage, wa, wb, 1 + rng.next() % 1000);
      }
      p.record_load(Stage::Formal, MemClass::Weight, 8, rng.next() % 100);
    }
    CostReport forward;
    for (const auto& p : parts) forward.merge(p);

    std::vector<std::size_t> order{0, 1, 2, 3, 4, 5};
    for (int perm = 0; perm < 5; ++perm) {
      for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.next() % (i + 1)]);
      // pairwise tree merge in shuffled order
      CostReport left;
      CostReport right;
      for (std::size_t i = 0; i < 3; ++i) left.merge(parts[order[i]]);
      for (std::size_t i = 3; i < 6; ++i) right.merge(parts[order[i]]);
      right.merge(left);
      CHECK(right.entries() == forward.entries());
      CHECK(right.units() == forward.units());
      CHECK(right.to_csv() == forward.to_csv());
    }
  }
}

TEST_CASE("merge rejects a different weight set") {
  CostWeights other;
  other.name = "other";
  CostReport a;
  CostReport b(other);
  b.record(Category::Add, Stage::Formal, 8);
  CHECK_THROWS(a.merge(b));
}

TEST_CASE("CSV round trip and JSON summary") {
  CostReport r;
  r.record(Category::Mult, Stage::Formal, 8, 8, 10);
  r.record(Category::Add, Stage::Selection, 12, 0, 7);
  r.record_load(Stage::Speculation, MemClass::Weight, 5, 32);
  const auto csv = r.to_csv();
  CHECK(csv.rfind("stage,category,count,width_profile,weighted_units\n", 0) == 0);
  CHECK(csv.find("formal,mult,10,8x8,640") != std::string::npos);
  CHECK(csv.find("speculation,mem,32,5:weight,0") != std::string::npos);
  const auto back = CostReport::from_csv(csv);
  CHECK(back.entries() == r.entries());

  const auto j = nlohmann::json::parse(r.to_json_summary());
  CHECK(j["weight_set"] == "gate-count-v1");
  CHECK(j["total_units"].get<double>() == doctest::Approx(640 + 84));
  CHECK(j["memory_bits"]["weight"].get<std::uint64_t>() == 160);

  CHECK_THROWS(CostReport::from_csv("stage,category\nformal,mult\n"));
}

TEST_CASE("ceil_log2") {
  CHECK(ceil_log2(1) == 0);
  CHECK(ceil_log2(2) == 1);
  CHECK(ceil_log2(3) == 2);
  CHECK(ceil_log2(64) == 6);
  CHECK(ceil_log2(65) == 7);
}
