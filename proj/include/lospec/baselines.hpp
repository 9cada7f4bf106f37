// Reference predictors used for comparison.
//
// Event profiles recorded into the cost sink (per head, S tokens, H hidden):
//
//   SymmetricLO  Both operands leading-one encoded for every product (two
//                LOE per operand pair), exponent add, one-hot shift. Used for
//                Q^/K^ generation and for Q^ K^T. Weights load at 8 bits.
//                Selection: one-shot top-k, ceil(n log2 n) compares per row.
//   Msb4         Dense exact 8-bit Q/K projection (8x8 multiplies), then
//                4-bit MSB truncation of Q and K and 4x4 multiplies for the
//                scores. Selection: static threshold, one compare per pair,
//                plus a running max per row so no row is left empty.
//   TopK         Dense exact 8-bit Q/K projection and exact 8x8 scores,
//                followed by one-shot top-k.
//   Oracle       Exact scores filtered with the same max-centred threshold
//                schedule as the predictor. Not a hardware design; no cost.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lospec/costmodel.hpp"
#include "lospec/css.hpp"
#include "lospec/locodec.hpp"
#include "lospec/qtensor.hpp"

namespace lospec {

enum class BaselineKind { SymmetricLO, Msb4, TopK, Oracle };

std::string_view to_string(BaselineKind k);
/// Accepts "symmetric_lo", "msb4", "topk", "oracle".
BaselineKind parse_baseline(std::string_view tag);

/// Both mantissas dropped: XOR-signed 1 << (lo_x + lo_y).
std::int32_t symmetric_lo_mul(LOCode xcode, LOCode ycode);

/// Top 4 bits of each 8-bit operand (arithmetic shift right by 4), exact
/// 4x4 products, result shifted left by 8: scores[i][j] = (q_i>>4).(k_j>>4) << 8.
/// q and k are token-major (S x H).
AccumTensor32 msb4_predict(const QuantTensor8& q, const QuantTensor8& k,
                           CostReport* cost = nullptr);

/// Indices of the k largest scores, ascending; ties go to the lower index.
/// Throws std::invalid_argument for k == 0 or k > row length.
std::vector<std::uint32_t> topk_select(std::span<const std::int32_t> row, std::size_t k,
                                       CostReport* cost = nullptr, int score_width = 32);

/// Row-wise top-k over a score matrix.
SparsityMask topk_mask(const AccumTensor32& scores, std::size_t k, CostReport* cost = nullptr,
                       int score_width = 32);

/// Keep every pair with score >= threshold, plus each row's first argmax.
SparsityMask static_threshold_mask(const AccumTensor32& scores, std::int64_t threshold,
                                   CostReport* cost = nullptr, int score_width = 32);

/// Max-centred threshold rounds applied to exact scores; each round filters
/// the survivors of the previous one.
SparsityMask oracle_mask(const AccumTensor32& exact_scores, std::span<const Eta> eta);

/// Symmetric leading-one speculation of the full score matrix.
AccumTensor32 symmetric_scores(const QuantTensor8& x, const QuantTensor8& wq,
                               const QuantTensor8& wk, CostReport* cost = nullptr);

/// Dense exact Q/K followed by msb4_predict.
AccumTensor32 msb4_scores(const QuantTensor8& x, const QuantTensor8& wq, const QuantTensor8& wk,
                          CostReport* cost = nullptr);

/// Exact 8-bit scores of the formal path (Q and K narrowed to 8 bits).
/// Recorded under the given stage.
AccumTensor32 exact_scores(const QuantTensor8& x, const QuantTensor8& wq, const QuantTensor8& wk,
                           CostReport* cost = nullptr, Stage stage = Stage::Speculation);

/// Bit width used for selection-stage compares of an H-term score matrix.
int baseline_score_width(BaselineKind kind, std::size_t hidden);

}  // namespace lospec
