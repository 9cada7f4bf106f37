// Leading-one codes and the asymmetric shift multiply.
//
// A nonzero integer y is written sign * m * 2^lo with m in [1, 2). Only the
// sign and lo are kept; the product x * y is then approximated by shifting x
// (or -x, chosen by the sign of y) left by lo. The mantissa of y is dropped,
// so |x*y| / 2 < |approx| <= |x*y|.
#pragma once

#include <cstdint>
#include <span>

#include "lospec/costmodel.hpp"
#include "lospec/qtensor.hpp"

namespace lospec {

struct LOCode {
  bool zero = true;
  bool negative = false;
  std::uint8_t lo = 0;

  static constexpr LOCode make(bool negative, std::uint8_t lo) { return {false, negative, lo}; }

  /// Zero codes compare equal regardless of their ignored fields.
  friend constexpr bool operator==(const LOCode& a, const LOCode& b) {
    if (a.zero || b.zero) return a.zero == b.zero;
    return a.negative == b.negative && a.lo == b.lo;
  }
};

using LOTensor = Matrix<LOCode>;

/// Bits loaded per pre-converted weight: sign plus a 4-bit leading-one position.
inline constexpr int kLoadedCodeBits = 5;
/// Largest leading-one position of an 8-bit magnitude <= 127.
inline constexpr int kMaxLo8 = 6;

/// Leading-one encode. Requires -2^(width-1) <= y < 2^(width-1);
/// -2^(width-1) encodes as lo = width-1.
LOCode loe(std::int64_t y, int width = 8);

/// Sign pre-assign then shift: (y < 0 ? -x : x) << lo. x must fit in 8 bits.
std::int32_t aloc_mul(std::int32_t x, LOCode ycode);

/// Sum of aloc_mul over equal-length ranges (length <= kMaxHidden).
std::int32_t aloc_dot(std::span<const std::int8_t> x, std::span<const LOCode> ycodes);

LOTensor loe_tensor(const QuantTensor8& t, CostReport* cost = nullptr,
                    Stage stage = Stage::Speculation);

/// One-byte packing: bit7 zero flag, bit6 sign (1 = negative), bits3..0 lo.
std::uint8_t pack_code(LOCode c);
/// Throws std::invalid_argument when reserved bits 5..4 are set.
LOCode unpack_code(std::uint8_t byte);

}  // namespace lospec
