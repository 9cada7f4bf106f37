#include <doctest.h>

#include <cstdlib>
#include <numeric>

#include "lospec/baselines.hpp"
#include "lospec/locodec.hpp"
#include "test_util.hpp"

using namespace lospec;

namespace {

// floor(log2 |y|) by repeated halving.
int floor_log2(std::int64_t y) {
  std::int64_t m = std::llabs(y);
  int p = 0;
  while (m > 1) {
    m /= 2;
    ++p;
  }
  return p;
}

int sign(std::int64_t v) { return (v > 0) - (v < 0); }

}  // namespace

TEST_CASE("loe examples") {
  CHECK(loe(1) == LOCode::make(false, 0));
  CHECK(loe(-96) == LOCode::make(true, 6));
  CHECK(loe(0).zero);
  CHECK(loe(-128) == LOCode::make(true, 7));
  CHECK(loe(127) == LOCode::make(false, 6));
  CHECK_THROWS_AS(loe(128), std::out_of_range);
  CHECK_THROWS_AS(loe(-129), std::out_of_range);
  CHECK(loe(5000, 16) == LOCode::make(false, 12));
}

TEST_CASE("loe matches floor(log2) for every 8-bit value") {
  for (int y = -128; y <= 127; ++y) {
    const auto c = loe(y);
    if (y == 0) {
      CHECK(c.zero);
      continue;
    }
    CHECK_FALSE(c.zero);
    CHECK(c.negative == (y < 0));
    CHECK(c.lo == floor_log2(y));
    if (y != -128) CHECK(c.lo <= kMaxLo8);
  }
}

TEST_CASE("aloc_mul examples") {
  CHECK(aloc_mul(5, loe(12)) == 40);
  CHECK(aloc_mul(-7, loe(-1)) == 7);
  CHECK(aloc_mul(3, loe(0)) == 0);
  CHECK(aloc_mul(0, loe(-50)) == 0);
}

TEST_CASE("aloc_mul envelope, exhaustive over 8-bit pairs") {
  for (int x = -128; x <= 127; ++x) {
    for (int y = -128; y <= 127; ++y) {
      if (x == 0 || y == 0) continue;
      const std::int64_t exact = static_cast<std::int64_t>(x) * y;
      const std::int64_t got = aloc_mul(x, loe(y));
      REQUIRE(sign(got) == sign(exact));
      REQUIRE(2 * std::llabs(got) > std::llabs(exact));
      REQUIRE(std::llabs(got) <= std::llabs(exact));
      // no worse than dropping both mantissas
      const std::int64_t sym = symmetric_lo_mul(loe(x), loe(y));
      REQUIRE(std::llabs(exact - got) <= std::llabs(exact - sym));
    }
  }
}

TEST_CASE("aloc_mul is exact on powers of two") {
  for (int x = -128; x <= 127; ++x) {
    for (int p = 0; p <= 6; ++p) {
      CHECK(aloc_mul(x, loe(1 << p)) == x * (1 << p));
      CHECK(aloc_mul(x, loe(-(1 << p))) == -x * (1 << p));
    }
  }
}

TEST_CASE("negate-then-shift equals shift-then-negate") {
  for (int x = -128; x <= 127; ++x) {
    for (std::uint8_t lo = 0; lo <= 6; ++lo) {
      const std::int32_t shifted = x * (1 << lo);
      CHECK(aloc_mul(x, LOCode::make(true, lo)) == -shifted);
      CHECK(aloc_mul(x, LOCode::make(false, lo)) == shifted);
    }
  }
}

TEST_CASE("aloc_dot examples and fold equivalence") {
  const std::vector<std::int8_t> ones{1, 1};
  const std::vector<LOCode> one_codes{loe(1), loe(1)};
  CHECK(aloc_dot(ones, one_codes) == 2);

  const std::vector<std::int8_t> x{5, -7};
  const std::vector<LOCode> y{loe(12), loe(-1)};
  CHECK(aloc_dot(x, y) == 47);

  const std::vector<LOCode> zeros(2);
  CHECK(aloc_dot(x, zeros) == 0);

  Xoshiro256ss rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.next() % 64;
    std::vector<std::int8_t> a(n);
    std::vector<LOCode> c(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = lospec::testing::random_i8(rng);
      c[i] = loe(lospec::testing::random_i8(rng));
    }
    std::int64_t fold = 0;
    for (std::size_t i = 0; i < n; ++i) fold += aloc_mul(a[i], c[i]);
    CHECK(aloc_dot(a, c) == fold);
    // any split point gives the same sum
    const std::size_t cut = rng.next() % (n + 1);
    const std::span<const std::int8_t> as(a);
    const std::span<const LOCode> cs(c);
    CHECK(aloc_dot(as.first(cut), cs.first(cut)) + aloc_dot(as.subspan(cut), cs.subspan(cut)) == fold);
  }

  CHECK_THROWS_AS(aloc_dot(x, std::vector<LOCode>(3)), DimensionError);
}

TEST_CASE("loe_tensor examples and cost") {
  const auto id = loe_tensor(QuantTensor8(2, 2, {1, 0, 0, 1}));
  CHECK(id(0, 0) == LOCode::make(false, 0));
  CHECK(id(0, 1).zero);
  CHECK(id(1, 0).zero);
  CHECK(id(1, 1) == LOCode::make(false, 0));

  CostReport cost;
  const auto t = loe_tensor(QuantTensor8(1, 2, {-96, 5}), &cost);
  CHECK(t(0, 0) == LOCode::make(true, 6));
  CHECK(t(0, 1) == LOCode::make(false, 2));
  CHECK(cost.count(Category::Loe) == 2);

  const auto z = loe_tensor(QuantTensor8(3, 3));
  for (const auto& c : z.data()) CHECK(c.zero);
}

TEST_CASE("pack and unpack round-trip") {
  for (int y = -128; y <= 127; ++y) {
    const auto c = loe(y);
    const auto b = pack_code(c);
    CHECK((b & 0x30) == 0);
    CHECK(unpack_code(b) == c);
  }
  CHECK(pack_code(loe(0)) == 0x80);
  CHECK(pack_code(loe(-96)) == 0x46);
  CHECK_THROWS_AS(unpack_code(0x10), std::invalid_argument);
  CHECK_THROWS_AS(unpack_code(0x20), std::invalid_argument);
}
