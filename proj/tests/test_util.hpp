// Shared generators for tests. Oracles stay in the individual test files.
#pragma once

#include <cstdint>
#include <vector>

#include "lospec/qtensor.hpp"
#include "lospec/workload.hpp"

namespace lospec::testing {

inline std::int8_t random_i8(Xoshiro256ss& rng, int lo = -127, int hi = 127) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return static_cast<std::int8_t>(lo + static_cast<int>(rng.next() % span));
}

inline QuantTensor8 random_q8(Xoshiro256ss& rng, std::size_t rows, std::size_t cols,
                              int lo = -127, int hi = 127) {
  QuantTensor8 t(rows, cols);
  for (auto& v : t.data()) v = random_i8(rng, lo, hi);
  return t;
}

inline std::vector<std::int32_t> random_scores(Xoshiro256ss& rng, std::size_t n,
                                               std::int32_t range = 1000) {
  std::vector<std::int32_t> row(n);
  for (auto& v : row) {
    v = static_cast<std::int32_t>(rng.next() % static_cast<std::uint64_t>(2 * range + 1)) - range;
  }
  return row;
}

inline WorkloadSpec gaussian_spec(std::size_t s, std::size_t h, std::uint64_t seed) {
  WorkloadSpec spec;
  spec.seq_len = s;
  spec.hidden = h;
  spec.seed = seed;
  return spec;
}

}  // namespace lospec::testing
