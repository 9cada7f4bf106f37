#include "lospec/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lospec {
namespace {

// Output width of a symmetric leading-one product: one-hot of lo_x + lo_y plus sign.
constexpr int kSymProductWidth = 2 * kMaxLo8 + 2;
constexpr int kLoSumWidth = 4;

// Symmetric leading-one matrix product of token-major a (M x H) against
// b^T where b is token-major (N x H) or, with b_is_weight, feature-major (H x N).
AccumTensor32 symmetric_product(const QuantTensor8& a, const QuantTensor8& b, bool b_is_weight,
                                CostReport* cost) {
  const std::size_t m = a.rows();
  const std::size_t h = a.cols();
  const std::size_t n = b_is_weight ? b.cols() : b.rows();
  if ((b_is_weight ? b.rows() : b.cols()) != h) throw DimensionError("symmetric: width mismatch");
  AccumTensor32 out(m, n);
  out.scale = a.scale + b.scale;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::int32_t acc = 0;
      for (std::size_t k = 0; k < h; ++k) {
        const auto bv = b_is_weight ? b(k, j) : b(j, k);
        acc += symmetric_lo_mul(loe(a(i, k)), loe(bv));
      }
      out(i, j) = acc;
    }
  }
  if (cost && h > 0) {
    const std::uint64_t products = m * n * h;
    cost->record(Category::Loe, Stage::Speculation, 8, 0, 2 * products);
    cost->record(Category::Add, Stage::Speculation, kLoSumWidth, 0, products);
    cost->record(Category::Shift, Stage::Speculation, kSymProductWidth, 0, products);
    if (h > 1) cost->record(Category::Add, Stage::Speculation, kSymProductWidth, 0, m * n * (h - 1));
  }
  return out;
}

void record_dense_loads(CostReport* cost, const QuantTensor8& x, const QuantTensor8& wq,
                        const QuantTensor8& wk) {
  if (!cost) return;
  cost->record_load(Stage::Speculation, MemClass::Activation, 8, x.size());
  cost->record_load(Stage::Speculation, MemClass::Weight, 8, wq.size() + wk.size());
}

void check_projection(const QuantTensor8& x, const QuantTensor8& wq, const QuantTensor8& wk) {
  if (x.cols() != wq.rows() || x.cols() != wk.rows() || wq.cols() != wk.cols()) {
    throw DimensionError("baseline: projection shapes are incompatible");
  }
}

}  // namespace

std::string_view to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::SymmetricLO: return "symmetric_lo";
    case BaselineKind::Msb4: return "msb4";
    case BaselineKind::TopK: return "topk";
    case BaselineKind::Oracle: return "oracle";
  }
  return "?";
}

BaselineKind parse_baseline(std::string_view tag) {
  for (auto k : {BaselineKind::SymmetricLO, BaselineKind::Msb4, BaselineKind::TopK,
                 BaselineKind::Oracle}) {
    if (to_string(k) == tag) return k;
  }
  throw std::invalid_argument("unknown baseline '" + std::string(tag) +
                              "' (expected symmetric_lo, msb4, topk or oracle)");
}

std::int32_t symmetric_lo_mul(LOCode xcode, LOCode ycode) {
  if (xcode.zero || ycode.zero) return 0;
  const std::int32_t mag = std::int32_t{1} << (xcode.lo + ycode.lo);
  return xcode.negative != ycode.negative ? -mag : mag;
}

AccumTensor32 msb4_predict(const QuantTensor8& q, const QuantTensor8& k, CostReport* cost) {
  if (q.cols() != k.cols()) throw DimensionError("msb4_predict: width mismatch");
  const std::size_t h = q.cols();
  AccumTensor32 out(q.rows(), k.rows());
  out.scale = q.scale + k.scale;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const auto qi = q.row(i);
    for (std::size_t j = 0; j < k.rows(); ++j) {
      const auto kj = k.row(j);
      std::int32_t acc = 0;
      for (std::size_t c = 0; c < h; ++c) acc += (std::int32_t{qi[c]} >> 4) * (std::int32_t{kj[c]} >> 4);
      out(i, j) = acc * 256;
    }
  }
  if (cost && h > 0) {
    const std::uint64_t pairs = q.rows() * k.rows();
    cost->record(Category::Mult, Stage::Speculation, 4, 4, pairs * h);
    if (h > 1) cost->record(Category::Add, Stage::Speculation, 8, 0, pairs * (h - 1));
  }
  return out;
}

std::vector<std::uint32_t> topk_select(std::span<const std::int32_t> row, std::size_t k,
                                       CostReport* cost, int score_width) {
  if (k == 0) throw std::invalid_argument("topk_select: k must be positive");
  if (k > row.size()) throw std::invalid_argument("topk_select: k exceeds row length");
  std::vector<std::uint32_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return row[a] > row[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  if (cost && row.size() > 1) {
    const auto n = row.size();
    const auto compares = static_cast<std::uint64_t>(std::ceil(n * std::log2(static_cast<double>(n))));
    cost->record(Category::Compare, Stage::Selection, score_width, 0, compares);
  }
  return idx;
}

SparsityMask topk_mask(const AccumTensor32& scores, std::size_t k, CostReport* cost,
                       int score_width) {
  SparsityMask mask;
  mask.rows = scores.rows();
  mask.cols = scores.cols();
  mask.selected.reserve(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    mask.selected.push_back(topk_select(scores.row(i), k, cost, score_width));
  }
  mask.round_history = {mask.selected_pairs()};
  return mask;
}

SparsityMask static_threshold_mask(const AccumTensor32& scores, std::int64_t threshold,
                                   CostReport* cost, int score_width) {
  SparsityMask mask;
  mask.rows = scores.rows();
  mask.cols = scores.cols();
  mask.selected.resize(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto row = scores.row(i);
    if (row.empty()) continue;
    const auto argmax = static_cast<std::uint32_t>(
        std::distance(row.begin(), std::max_element(row.begin(), row.end())));
    for (std::uint32_t j = 0; j < row.size(); ++j) {
      if (row[j] >= threshold || j == argmax) mask.selected[i].push_back(j);
    }
  }
  if (cost && scores.cols() > 0) {
    const std::uint64_t s = scores.rows();
    const std::uint64_t n = scores.cols();
    cost->record(Category::Compare, Stage::Selection, score_width, 0, s * n + s * (n - 1));
  }
  mask.round_history = {mask.selected_pairs()};
  return mask;
}

SparsityMask oracle_mask(const AccumTensor32& exact_scores, std::span<const Eta> eta) {
  if (exact_scores.rows() != exact_scores.cols()) {
    throw DimensionError("oracle_mask: score matrix must be square");
  }
  if (eta.empty()) throw std::invalid_argument("oracle_mask: need at least one round");
  SparsityMask mask;
  mask.rows = exact_scores.rows();
  mask.cols = exact_scores.cols();
  mask.selected.resize(mask.rows);
  mask.round_history.assign(eta.size(), 0);
  for (std::size_t i = 0; i < mask.rows; ++i) {
    std::vector<std::uint32_t> survivors(mask.cols);
    std::iota(survivors.begin(), survivors.end(), 0u);
    for (std::size_t r = 0; r < eta.size(); ++r) {
      std::vector<std::int32_t> scores;
      scores.reserve(survivors.size());
      for (auto j : survivors) scores.push_back(exact_scores(i, j));
      survivors = ddf_select(survivors, scores, ddf_threshold(scores, eta[r]));
      mask.round_history[r] += survivors.size();
    }
    mask.selected[i] = std::move(survivors);
  }
  return mask;
}

AccumTensor32 symmetric_scores(const QuantTensor8& x, const QuantTensor8& wq,
                               const QuantTensor8& wk, CostReport* cost) {
  check_projection(x, wq, wk);
  record_dense_loads(cost, x, wq, wk);
  const auto q = requantize_pow2(symmetric_product(x, wq, true, cost), 8, cost, Stage::Speculation);
  const auto k = requantize_pow2(symmetric_product(x, wk, true, cost), 8, cost, Stage::Speculation);
  return symmetric_product(q, k, false, cost);
}

AccumTensor32 msb4_scores(const QuantTensor8& x, const QuantTensor8& wq, const QuantTensor8& wk,
                          CostReport* cost) {
  check_projection(x, wq, wk);
  record_dense_loads(cost, x, wq, wk);
  const auto q = requantize_pow2(matmul_exact(x, wq, cost, Stage::Speculation), 8, cost,
                                 Stage::Speculation);
  const auto k = requantize_pow2(matmul_exact(x, wk, cost, Stage::Speculation), 8, cost,
                                 Stage::Speculation);
  return msb4_predict(q, k, cost);
}

AccumTensor32 exact_scores(const QuantTensor8& x, const QuantTensor8& wq, const QuantTensor8& wk,
                           CostReport* cost, Stage stage) {
  check_projection(x, wq, wk);
  if (cost) {
    cost->record_load(stage, MemClass::Activation, 8, x.size());
    cost->record_load(stage, MemClass::Weight, 8, wq.size() + wk.size());
  }
  const auto q = requantize_pow2(matmul_exact(x, wq, cost, stage), 8, cost, stage);
  const auto k = requantize_pow2(matmul_exact(x, wk, cost, stage), 8, cost, stage);
  return matmul_exact(q, transpose(k), cost, stage);
}

int baseline_score_width(BaselineKind kind, std::size_t hidden) {
  const int growth = ceil_log2(hidden);
  switch (kind) {
    case BaselineKind::SymmetricLO: return kSymProductWidth + growth;
    case BaselineKind::Msb4: return 8 + growth;
    case BaselineKind::TopK:
    case BaselineKind::Oracle: return 16 + growth;
  }
  return 32;
}

}  // namespace lospec
