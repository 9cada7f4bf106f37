#include "lospec/qtensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace lospec {
namespace {

double round_value(double v, RoundingMode mode) {
  return mode == RoundingMode::HalfAwayFromZero ? std::round(v) : std::nearbyint(v);
}

// Right shift by s with round-half-away-from-zero on the discarded bits.
std::int64_t shift_round(std::int64_t v, int s) {
  if (s == 0) return v;
  const std::int64_t mag = v < 0 ? -v : v;
  const std::int64_t q = (mag + (std::int64_t{1} << (s - 1))) >> s;
  return v < 0 ? -q : q;
}

int bit_width(std::uint64_t v) {
  int w = 0;
  while (v) {
    ++w;
    v >>= 1;
  }
  return w;
}

std::int32_t narrow_checked(std::int64_t v) {
  if (v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max()) {
    throw std::overflow_error("accumulator overflow: value exceeds 32 bits");
  }
  return static_cast<std::int32_t>(v);
}

}  // namespace

QuantTensor8 quantize(const FloatTensor& t, RoundingMode mode) {
  double max_abs = 0.0;
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("quantize: non-finite value");
    max_abs = std::max(max_abs, std::abs(v));
  }
  int scale = 0;
  if (max_abs > 0.0) {
    scale = static_cast<int>(std::ceil(std::log2(max_abs / 128.0)));
    // log2 may be off by one ulp near exact powers of two.
    while (std::ldexp(max_abs, -scale) > 128.0) ++scale;
    while (std::ldexp(max_abs, -(scale - 1)) <= 128.0) --scale;
  }
  QuantTensor8 out(t.rows(), t.cols());
  out.scale = scale;
  auto dst = out.data();
  auto src = t.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double r = round_value(std::ldexp(src[i], -scale), mode);
    dst[i] = static_cast<std::int8_t>(std::clamp(r, -128.0, 127.0));
  }
  return out;
}

FloatTensor dequantize(const QuantTensor8& t) {
  FloatTensor out(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) out.data()[i] = std::ldexp(t.data()[i], t.scale);
  return out;
}

FloatTensor dequantize(const AccumTensor32& t) {
  FloatTensor out(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.data()[i] = std::ldexp(static_cast<double>(t.data()[i]), t.scale);
  }
  return out;
}

AccumTensor32 matmul_exact(const QuantTensor8& a, const QuantTensor8& b, CostReport* cost,
                           Stage stage) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul_exact: inner dimensions differ (" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + ")");
  }
  const std::size_t n = a.cols();
  AccumTensor32 out(a.rows(), b.cols());
  out.scale = a.scale + b.scale;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto arow = a.row(i);
    for (std::size_t j = 0; j < b.cols(); ++j) {
      std::int64_t acc = 0;
      for (std::size_t k = 0; k < n; ++k) acc += std::int64_t{arow[k]} * b(k, j);
      out(i, j) = narrow_checked(acc);
    }
  }
  if (cost && n > 0) {
    const std::uint64_t dots = a.rows() * b.cols();
    cost->record(Category::Mult, stage, 8, 8, dots * n);
    cost->record(Category::Add, stage, 16, 0, dots * (n - 1));
  }
  return out;
}

QuantTensor8 transpose(const QuantTensor8& t) {
  QuantTensor8 out(t.cols(), t.rows());
  out.scale = t.scale;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) out(j, i) = t(i, j);
  }
  return out;
}

QuantTensor8 requantize_pow2(const AccumTensor32& t, int target_bits, CostReport* cost,
                             Stage stage) {
  if (target_bits != 8) throw std::invalid_argument("requantize_pow2: only 8-bit targets");
  std::uint64_t max_abs = 0;
  for (auto v : t.data()) max_abs = std::max<std::uint64_t>(max_abs, std::llabs(v));
  const int shift = std::max(0, bit_width(max_abs) - (target_bits - 1));
  QuantTensor8 out(t.rows(), t.cols());
  out.scale = t.scale + shift;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto r = shift_round(t.data()[i], shift);
    out.data()[i] = static_cast<std::int8_t>(std::clamp<std::int64_t>(r, -128, 127));
  }
  if (cost && shift > 0) cost->record(Category::Shift, stage, 32, 0, t.size());
  return out;
}

FloatTensor softmax_rows(const AccumTensor32& scores, std::size_t d_k) {
  if (d_k == 0) throw std::invalid_argument("softmax_rows: d_k must be positive");
  const double scale = std::ldexp(1.0, scores.scale) / std::sqrt(static_cast<double>(d_k));
  FloatTensor probs(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto row = scores.row(i);
    if (row.empty()) continue;
    const double mx = *std::max_element(row.begin(), row.end()) * scale;
    double sum = 0.0;
    auto out = probs.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      out[j] = std::exp(row[j] * scale - mx);
      sum += out[j];
    }
    for (auto& p : out) p /= sum;
  }
  return probs;
}

AttentionOutput attention_ref(const QuantTensor8& x, const QuantTensor8& wq,
                              const QuantTensor8& wk, const QuantTensor8& wv, std::size_t d_k,
                              CostReport* cost) {
  if (x.cols() != wq.rows() || x.cols() != wk.rows() || x.cols() != wv.rows()) {
    throw DimensionError("attention_ref: projection weights do not match input width");
  }
  if (wq.cols() != wk.cols()) throw DimensionError("attention_ref: Wq and Wk widths differ");
  if (d_k != wq.cols()) throw DimensionError("attention_ref: d_k must equal the head dimension");

  const auto q = requantize_pow2(matmul_exact(x, wq, cost), 8, cost);
  const auto k = requantize_pow2(matmul_exact(x, wk, cost), 8, cost);
  const auto v = matmul_exact(x, wv, cost);

  AttentionOutput out;
  out.scores = matmul_exact(q, transpose(k), cost);
  out.probs = softmax_rows(out.scores, d_k);

  const auto vf = dequantize(v);
  out.output = FloatTensor(x.rows(), wv.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto dst = out.output.row(i);
    for (std::size_t j = 0; j < x.rows(); ++j) {
      const double p = out.probs(i, j);
      const auto vrow = vf.row(j);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += p * vrow[c];
    }
  }
  return out;
}

double relative_frobenius_error(const FloatTensor& a, const FloatTensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("relative_frobenius_error: shape mismatch");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    num += d * d;
    den += b.data()[i] * b.data()[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

}  // namespace lospec
