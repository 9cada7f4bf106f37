// Binary tensor container.
//
// 16-byte little-endian header followed by the row-major payload:
//   0..3   magic "QT8\0"
//   4      dtype tag (see DType)
//   5      scale exponent, signed byte (0 for float64)
//   6..7   reserved, zero
//   8..11  rows (u32)
//   12..15 cols (u32)
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "lospec/locodec.hpp"
#include "lospec/qtensor.hpp"

namespace lospec {

enum class DType : std::uint8_t { Int8 = 1, Int32 = 2, Float64 = 3, LO1 = 4 };

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using AnyTensor = std::variant<QuantTensor8, AccumTensor32, FloatTensor, LOTensor>;

std::vector<std::uint8_t> encode_tensor(const QuantTensor8& t);
std::vector<std::uint8_t> encode_tensor(const AccumTensor32& t);
std::vector<std::uint8_t> encode_tensor(const FloatTensor& t);
std::vector<std::uint8_t> encode_tensor(const LOTensor& t);

AnyTensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const AnyTensor& t);
AnyTensor read_tensor(const std::filesystem::path& path);

/// Reads a tensor and requires it to be int8.
QuantTensor8 read_quant8(const std::filesystem::path& path);

}  // namespace lospec
