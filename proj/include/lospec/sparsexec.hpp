// Formal computation over a predicted mask: K and V rows are generated only
// for tokens some query selected, scores only for selected pairs, and the
// softmax is taken over each row's selected subset.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lospec/costmodel.hpp"
#include "lospec/css.hpp"
#include "lospec/qtensor.hpp"

namespace lospec {

struct ExecMetrics {
  double pruning_ratio = 0.0;  // 1 - selected pairs / S^2
  double kv_coverage = 0.0;    // fraction of tokens whose K/V rows were generated
  std::optional<double> recall;  // |pred & oracle| / |oracle|
  double rel_error = 0.0;      // Frobenius error vs dense output
  std::optional<double> cost_reduction_pct;

  std::string to_json() const;
};

/// Union of all rows' selected keys, ascending.
std::vector<std::uint32_t> gather_needed_keys(const SparsityMask& mask);

struct SparseKV {
  std::vector<std::uint32_t> tokens;  // row r of k/v belongs to token tokens[r]
  AccumTensor32 k;
  AccumTensor32 v;
};

/// Exact K and V projections for the listed tokens only.
SparseKV ondemand_kv(const QuantTensor8& x, const QuantTensor8& wk, const QuantTensor8& wv,
                     const std::vector<std::uint32_t>& keys, CostReport* cost = nullptr);

/// Sparse attention output. `q` is the exact query projection narrowed to
/// 8 bits; K is narrowed with an exponent taken from the generated rows.
FloatTensor sparse_attention(const QuantTensor8& q, const SparseKV& kv, const SparsityMask& mask,
                             std::size_t d_k, CostReport* cost = nullptr);

/// Share of `oracle` pairs also present in `pred`.
double mask_recall(const SparsityMask& pred, const SparsityMask& oracle);

struct FormalResult {
  FloatTensor output;
  ExecMetrics metrics;  // recall and cost reduction left unset
  std::vector<std::uint32_t> generated_keys;
};

/// Q for every token, on-demand K/V, sparse attention, compared against `dense_output`.
FormalResult execute_sparse(const QuantTensor8& x, const QuantTensor8& wq, const QuantTensor8& wk,
                            const QuantTensor8& wv, const SparsityMask& mask,
                            const FloatTensor& dense_output, CostReport* cost = nullptr);

}  // namespace lospec
