#include "lospec/locodec.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace lospec {

LOCode loe(std::int64_t y, int width) {
  if (width < 2 || width > 32) throw std::invalid_argument("loe: width must be in [2, 32]");
  const std::int64_t limit = std::int64_t{1} << (width - 1);
  if (y < -limit || y >= limit) {
    throw std::out_of_range("loe: " + std::to_string(y) + " does not fit in " +
                            std::to_string(width) + " bits");
  }
  if (y == 0) return LOCode{};
  const auto mag = static_cast<std::uint64_t>(y < 0 ? -y : y);
  return LOCode::make(y < 0, static_cast<std::uint8_t>(std::bit_width(mag) - 1));
}

std::int32_t aloc_mul(std::int32_t x, LOCode ycode) {
  if (ycode.zero || x == 0) return 0;
  const std::int32_t pre = ycode.negative ? -x : x;
  return pre << ycode.lo;
}

std::int32_t aloc_dot(std::span<const std::int8_t> x, std::span<const LOCode> ycodes) {
  if (x.size() != ycodes.size()) {
    throw DimensionError("aloc_dot: length mismatch (" + std::to_string(x.size()) + " vs " +
                         std::to_string(ycodes.size()) + ")");
  }
  if (x.size() > kMaxHidden) throw DimensionError("aloc_dot: length exceeds 1024");
  std::int32_t acc = 0;
  for (std::size_t k = 0; k < x.size(); ++k) acc += aloc_mul(x[k], ycodes[k]);
  return acc;
}

LOTensor loe_tensor(const QuantTensor8& t, CostReport* cost, Stage stage) {
  LOTensor out(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) out.data()[i] = loe(t.data()[i], 8);
  if (cost) cost->record(Category::Loe, stage, 8, 0, t.size());
  return out;
}

std::uint8_t pack_code(LOCode c) {
  if (c.zero) return 0x80;
  if (c.lo > 15) throw std::invalid_argument("pack_code: lo exceeds 4 bits");
  return static_cast<std::uint8_t>((c.negative ? 0x40 : 0x00) | c.lo);
}

LOCode unpack_code(std::uint8_t byte) {
  if (byte & 0x30) throw std::invalid_argument("unpack_code: reserved bits set");
  if (byte & 0x80) return LOCode{};
  return LOCode::make((byte & 0x40) != 0, static_cast<std::uint8_t>(byte & 0x0F));
}

}  // namespace lospec
