#include "lospec/sparsexec.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

namespace lospec {

std::string ExecMetrics::to_json() const {
  nlohmann::ordered_json j;
  j["pruning_ratio"] = pruning_ratio;
  j["kv_coverage"] = kv_coverage;
  j["recall"] = recall ? nlohmann::ordered_json(*recall) : nlohmann::ordered_json(nullptr);
  j["rel_error"] = rel_error;
  j["cost_reduction_pct"] =
      cost_reduction_pct ? nlohmann::ordered_json(*cost_reduction_pct) : nlohmann::ordered_json(nullptr);
  return j.dump(2);
}

std::vector<std::uint32_t> gather_needed_keys(const SparsityMask& mask) {
  std::vector<std::uint8_t> needed(mask.cols, 0);
  for (const auto& row : mask.selected) {
    for (auto j : row) needed.at(j) = 1;
  }
  std::vector<std::uint32_t> keys;
  for (std::uint32_t j = 0; j < mask.cols; ++j) {
    if (needed[j]) keys.push_back(j);
  }
  return keys;
}

SparseKV ondemand_kv(const QuantTensor8& x, const QuantTensor8& wk, const QuantTensor8& wv,
                     const std::vector<std::uint32_t>& keys, CostReport* cost) {
  if (x.cols() != wk.rows() || x.cols() != wv.rows()) {
    throw DimensionError("ondemand_kv: weights do not match input width");
  }
  QuantTensor8 xs(keys.size(), x.cols());
  xs.scale = x.scale;
  for (std::size_t r = 0; r < keys.size(); ++r) {
    if (keys[r] >= x.rows()) throw std::out_of_range("ondemand_kv: token index out of range");
    std::copy_n(x.row(keys[r]).begin(), x.cols(), xs.row(r).begin());
  }
  if (cost) {
    cost->record_load(Stage::Formal, MemClass::Activation, 8, xs.size());
    cost->record_load(Stage::Formal, MemClass::Weight, 8, wk.size() + wv.size());
  }
  SparseKV kv;
  kv.tokens = keys;
  kv.k = matmul_exact(xs, wk, cost, Stage::Formal);
  kv.v = matmul_exact(xs, wv, cost, Stage::Formal);
  return kv;
}

FloatTensor sparse_attention(const QuantTensor8& q, const SparseKV& kv, const SparsityMask& mask,
                             std::size_t d_k, CostReport* cost) {
  if (d_k == 0) throw std::invalid_argument("sparse_attention: d_k must be positive");
  if (mask.rows != q.rows()) throw DimensionError("sparse_attention: mask rows differ from Q rows");
  if (kv.k.cols() != q.cols()) throw DimensionError("sparse_attention: Q and K widths differ");

  std::vector<std::int64_t> slot(mask.cols, -1);
  for (std::size_t r = 0; r < kv.tokens.size(); ++r) slot.at(kv.tokens[r]) = static_cast<std::int64_t>(r);

  const auto k8 = requantize_pow2(kv.k, 8, cost, Stage::Formal);
  const auto vf = dequantize(kv.v);
  const double logit_scale = std::ldexp(1.0, q.scale + k8.scale) / std::sqrt(static_cast<double>(d_k));

  FloatTensor out(q.rows(), kv.v.cols());
  std::uint64_t pairs = 0;
  std::vector<double> probs;
  for (std::size_t i = 0; i < mask.rows; ++i) {
    const auto& sel = mask.selected[i];
    if (sel.empty()) throw std::logic_error("sparse_attention: row " + std::to_string(i) + " selects no keys");
    const auto qi = q.row(i);
    probs.assign(sel.size(), 0.0);
    double mx = -INFINITY;
    for (std::size_t n = 0; n < sel.size(); ++n) {
      const auto s = slot.at(sel[n]);
      if (s < 0) throw std::logic_error("sparse_attention: selected key has no generated K row");
      const auto kj = k8.row(static_cast<std::size_t>(s));
      std::int64_t acc = 0;
      for (std::size_t c = 0; c < qi.size(); ++c) acc += std::int64_t{qi[c]} * kj[c];
      probs[n] = static_cast<double>(acc) * logit_scale;
      mx = std::max(mx, probs[n]);
    }
    double sum = 0.0;
    for (auto& p : probs) {
      p = std::exp(p - mx);
      sum += p;
    }
    auto dst = out.row(i);
    for (std::size_t n = 0; n < sel.size(); ++n) {
      const double p = probs[n] / sum;
      const auto vrow = vf.row(static_cast<std::size_t>(slot[sel[n]]));
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += p * vrow[c];
    }
    pairs += sel.size();
  }
  if (cost && q.cols() > 0) {
    cost->record(Category::Mult, Stage::Formal, 8, 8, pairs * q.cols());
    if (q.cols() > 1) cost->record(Category::Add, Stage::Formal, 16, 0, pairs * (q.cols() - 1));
  }
  return out;
}

double mask_recall(const SparsityMask& pred, const SparsityMask& oracle) {
  if (pred.rows != oracle.rows || pred.cols != oracle.cols) {
    throw DimensionError("mask_recall: mask shapes differ");
  }
  std::size_t hit = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < oracle.rows; ++i) {
    const auto& a = pred.selected[i];
    const auto& b = oracle.selected[i];
    std::vector<std::uint32_t> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    hit += common.size();
    total += b.size();
  }
  return total == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(total);
}

FormalResult execute_sparse(const QuantTensor8& x, const QuantTensor8& wq, const QuantTensor8& wk,
                            const QuantTensor8& wv, const SparsityMask& mask,
                            const FloatTensor& dense_output, CostReport* cost) {
  if (mask.rows != x.rows() || mask.cols != x.rows()) {
    throw DimensionError("execute_sparse: mask must be S x S");
  }
  if (cost) {
    cost->record_load(Stage::Formal, MemClass::Activation, 8, x.size());
    cost->record_load(Stage::Formal, MemClass::Weight, 8, wq.size());
  }
  const auto q = requantize_pow2(matmul_exact(x, wq, cost, Stage::Formal), 8, cost, Stage::Formal);
  FormalResult result;
  result.generated_keys = gather_needed_keys(mask);
  const auto kv = ondemand_kv(x, wk, wv, result.generated_keys, cost);
  result.output = sparse_attention(q, kv, mask, wq.cols(), cost);

  const double s = static_cast<double>(x.rows());
  result.metrics.pruning_ratio = 1.0 - static_cast<double>(mask.selected_pairs()) / (s * s);
  result.metrics.kv_coverage = static_cast<double>(result.generated_keys.size()) / s;
  result.metrics.rel_error = relative_frobenius_error(result.output, dense_output);
  return result;
}

}  // namespace lospec
