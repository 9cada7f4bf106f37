// Cross-stage sparsity predictor.
//
// Pipeline for one attention head:
//   1. Q^ = X (*) LO(Wq), K^ = X (*) LO(Wk) with (*) the shift-only ALOC
//      product; both narrowed to 8 bits, then Q^ is leading-one encoded.
//   2. For every query row, R scoring rounds over the surviving keys. Round r
//      consumes the r-th bit slice of K^ (most significant first) and folds it
//      into the previous partial score: partial = (partial << width_r) + slice
//      contribution. After the last round the partial is the full 8-bit score.
//   3. After each round a max-centred threshold
//        phi = max - eta * (max - min)
//      keeps keys whose partial score is >= phi.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lospec/costmodel.hpp"
#include "lospec/locodec.hpp"
#include "lospec/qtensor.hpp"

namespace lospec {

/// Threshold ratio eta = num / den in [0, 1]. Tenths (den = 10) is the tuning
/// grid; finer denominators are used for density calibration.
struct Eta {
  std::int64_t num = 5;
  std::int64_t den = 10;

  static constexpr Eta tenths(int t) { return {t, 10}; }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  void validate() const;

  friend bool operator==(const Eta& a, const Eta& b) { return a.num * b.den == b.num * a.den; }
};

/// phi scaled by den; a score s survives iff den * s >= scaled.
struct Threshold {
  std::int64_t scaled = 0;
  std::int64_t den = 10;

  bool admits(std::int64_t score) const { return den * score >= scaled; }
};

struct CssConfig {
  int rounds = 2;
  std::vector<Eta> eta = {Eta::tenths(5), Eta::tenths(5)};
  std::vector<int> nibble_schedule = {4, 4};  // most significant slice first
  bool emit_round_stats = false;

  /// Throws std::invalid_argument on any inconsistency.
  void validate() const;

  static CssConfig from_tenths(const std::vector<int>& eta_tenths,
                               std::vector<int> nibble_schedule = {4, 4});
  /// Same eta in every round.
  static CssConfig uniform(Eta eta, std::vector<int> nibble_schedule = {4, 4});
};

struct SparsityMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<std::uint32_t>> selected;  // ascending key indices per query row
  std::vector<std::size_t> round_history;            // total survivors after each round

  static SparsityMask full(std::size_t rows, std::size_t cols);

  std::size_t selected_pairs() const;
  double density() const;
  Matrix<std::uint8_t> to_dense() const;

  /// "row <i>: j0 j1 ..." one line per row.
  std::string to_text() const;
  /// Dense 0/1 matrix, space separated, one line per row.
  std::string to_dense_text() const;

  /// Non-empty ascending rows with in-range indices.
  void validate() const;

  bool same_selection(const SparsityMask& other) const {
    return rows == other.rows && cols == other.cols && selected == other.selected;
  }
};

struct RoundState {
  std::vector<std::uint32_t> survivors;  // strictly increasing key indices
  std::vector<std::int32_t> partials;    // aligned with survivors
};

struct SpeculationResult {
  QuantTensor8 q_hat;
  QuantTensor8 k_hat;
  LOTensor q_codes;
  AccumTensor32 q_acc;  // before narrowing
  AccumTensor32 k_acc;
};

/// Shift-only Q^/K^ generation. Scales carry X's exponent only; the weight
/// exponent is not part of a code tensor and cannot change the selection.
SpeculationResult speculate_qk(const QuantTensor8& x, const LOTensor& wq_codes,
                               const LOTensor& wk_codes, CostReport* cost = nullptr);

/// Slice r of an 8-bit value under `schedule`. Slice 0 is two's-complement
/// signed; later slices are unsigned.
std::int32_t bit_slice(std::int8_t value, std::span<const int> schedule, int round);

/// Score one round for every survivor and fold into the partial sums.
void mrsa_round(std::span<const LOCode> q_code_row, const QuantTensor8& k_hat, RoundState& state,
                int round, std::span<const int> schedule, CostReport* cost = nullptr);

/// Throws std::invalid_argument on an empty score list.
Threshold ddf_threshold(std::span<const std::int32_t> scores, Eta eta);

std::vector<std::uint32_t> ddf_select(std::span<const std::uint32_t> survivors,
                                      std::span<const std::int32_t> scores, Threshold phi);

struct PredictionResult {
  SparsityMask mask;
  SpeculationResult speculation;
  Matrix<std::int64_t> thresholds;  // rows x rounds, scaled by the round's eta denominator
};

PredictionResult predict_mask(const QuantTensor8& x, const LOTensor& wq_codes,
                              const LOTensor& wk_codes, const CssConfig& cfg,
                              CostReport* cost = nullptr, int threads = 1);

/// Full-precision single-pass ALOC scores: A^[i][j] = sum_k aloc_mul(K^[j][k], LO(Q^[i][k])).
AccumTensor32 aloc_score_matrix(const LOTensor& q_codes, const QuantTensor8& k_hat);

}  // namespace lospec
