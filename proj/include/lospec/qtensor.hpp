// Fixed-width integer tensors and the exact full-precision reference path.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lospec/costmodel.hpp"

namespace lospec {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Largest supported hidden width; keeps 8x8-bit dot products inside 32 bits.
inline constexpr std::size_t kMaxHidden = 1024;

/// Dense row-major matrix.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                           " does not match shape " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Matrix whose real value is data * 2^scale.
template <typename T>
class ScaledMatrix : public Matrix<T> {
 public:
  using Matrix<T>::Matrix;
  ScaledMatrix(Matrix<T> m, int scale) : Matrix<T>(std::move(m)), scale(scale) {}

  int scale = 0;

  bool operator==(const ScaledMatrix&) const = default;
};

using FloatTensor = Matrix<double>;
using QuantTensor8 = ScaledMatrix<std::int8_t>;
using AccumTensor32 = ScaledMatrix<std::int32_t>;

enum class RoundingMode { HalfAwayFromZero, HalfToEven };

/// Power-of-two per-tensor quantization to int8. The exponent is the smallest
/// s with max|t| / 2^s <= 128; values are rounded and clamped to [-128, 127].
QuantTensor8 quantize(const FloatTensor& t, RoundingMode mode = RoundingMode::HalfAwayFromZero);

FloatTensor dequantize(const QuantTensor8& t);
FloatTensor dequantize(const AccumTensor32& t);

/// Exact integer product; result scale is a.scale + b.scale.
/// Records rows*cols*inner 8x8 multiplies into `cost` when given.
AccumTensor32 matmul_exact(const QuantTensor8& a, const QuantTensor8& b,
                           CostReport* cost = nullptr, Stage stage = Stage::Formal);

QuantTensor8 transpose(const QuantTensor8& t);

/// Narrow a 32-bit accumulator tensor to 8 bits with a single right shift
/// (round half away from zero on the discarded bits).
QuantTensor8 requantize_pow2(const AccumTensor32& t, int target_bits = 8,
                             CostReport* cost = nullptr, Stage stage = Stage::Formal);

/// Row-wise softmax of `scores * 2^scores.scale / sqrt(d_k)`, max-subtracted
/// and summed left to right.
FloatTensor softmax_rows(const AccumTensor32& scores, std::size_t d_k);

struct AttentionOutput {
  AccumTensor32 scores;  // exact A = Q K^T
  FloatTensor probs;
  FloatTensor output;
};

/// Dense reference attention head. Q and K are narrowed to 8 bits before the
/// score product; V stays at accumulator precision and is dequantized.
AttentionOutput attention_ref(const QuantTensor8& x, const QuantTensor8& wq,
                              const QuantTensor8& wk, const QuantTensor8& wv, std::size_t d_k,
                              CostReport* cost = nullptr);

/// ||a - b||_F / ||b||_F; 0 when both are zero.
double relative_frobenius_error(const FloatTensor& a, const FloatTensor& b);

}  // namespace lospec
