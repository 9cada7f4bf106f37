// Brute-force reference for the cross-stage predictor.
#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "lospec/css.hpp"

namespace lospec::testing {

// Keeps j when den * s_j >= den * max - num * (max - min).
inline std::vector<std::uint32_t> select_oracle(const std::vector<std::uint32_t>& ids,
                                                const std::vector<std::int64_t>& scores, Eta eta) {
  const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::int64_t lhs = eta.den * scores[i];
    const std::int64_t rhs = eta.den * *mx - eta.num * (*mx - *mn);
    if (lhs >= rhs) out.push_back(ids[i]);
  }
  return out;
}

// Single-pass oracle: the round-r score of key j is the ALOC score of the
// top `consumed_r` bits of each K^ element, computed directly without any
// partial-sum reuse.
inline SparsityMask brute_force_mask(const SpeculationResult& spec, const CssConfig& cfg) {
  const std::size_t s = spec.k_hat.rows();
  const std::size_t h = spec.k_hat.cols();
  SparsityMask m;
  m.rows = s;
  m.cols = s;
  for (std::size_t i = 0; i < s; ++i) {
    std::vector<std::uint32_t> ids(s);
    std::iota(ids.begin(), ids.end(), 0u);
    int consumed = 0;
    for (int r = 0; r < cfg.rounds; ++r) {
      consumed += cfg.nibble_schedule[static_cast<std::size_t>(r)];
      std::vector<std::int64_t> scores;
      for (auto j : ids) {
        std::int64_t acc = 0;
        for (std::size_t k = 0; k < h; ++k) {
          const std::int32_t prefix = spec.k_hat(j, k) >> (8 - consumed);
          const auto q = spec.q_codes(i, k);
          if (q.zero) continue;
          acc += (q.negative ? -prefix : prefix) * (std::int64_t{1} << q.lo);
        }
        scores.push_back(acc);
      }
      ids = select_oracle(ids, scores, cfg.eta[static_cast<std::size_t>(r)]);
    }
    m.selected.push_back(ids);
  }
  return m;
}

}  // namespace lospec::testing
