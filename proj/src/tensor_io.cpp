#include "lospec/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace lospec {
namespace {

constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[at + i]} << (8 * i);
  return v;
}

std::vector<std::uint8_t> header(DType dtype, int scale, std::size_t rows, std::size_t cols) {
  if (scale < -128 || scale > 127) throw FormatError("scale exponent does not fit a signed byte");
  if (rows > UINT32_MAX || cols > UINT32_MAX) throw FormatError("tensor too large for container");
  std::vector<std::uint8_t> out = {'Q', 'T', '8', '\0', static_cast<std::uint8_t>(dtype),
                                   static_cast<std::uint8_t>(static_cast<std::int8_t>(scale)),
                                   0, 0};
  put_u32(out, static_cast<std::uint32_t>(rows));
  put_u32(out, static_cast<std::uint32_t>(cols));
  return out;
}

std::size_t element_bytes(DType d) {
  switch (d) {
    case DType::Int8: return 1;
    case DType::Int32: return 4;
    case DType::Float64: return 8;
    case DType::LO1: return 1;
  }
  throw FormatError("unknown dtype tag");
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const QuantTensor8& t) {
  auto out = header(DType::Int8, t.scale, t.rows(), t.cols());
  for (auto v : t.data()) out.push_back(static_cast<std::uint8_t>(v));
  return out;
}

std::vector<std::uint8_t> encode_tensor(const AccumTensor32& t) {
  auto out = header(DType::Int32, t.scale, t.rows(), t.cols());
  for (auto v : t.data()) put_u32(out, static_cast<std::uint32_t>(v));
  return out;
}

std::vector<std::uint8_t> encode_tensor(const FloatTensor& t) {
  auto out = header(DType::Float64, 0, t.rows(), t.cols());
  for (double v : t.data()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    put_u32(out, static_cast<std::uint32_t>(bits));
    put_u32(out, static_cast<std::uint32_t>(bits >> 32));
  }
  return out;
}

std::vector<std::uint8_t> encode_tensor(const LOTensor& t) {
  auto out = header(DType::LO1, 0, t.rows(), t.cols());
  for (const auto& c : t.data()) out.push_back(pack_code(c));
  return out;
}

AnyTensor decode_tensor(std::span<const std::uint8_t> b) {
  if (b.size() < kHeaderBytes) throw FormatError("truncated tensor header");
  if (std::memcmp(b.data(), "QT8\0", 4) != 0) throw FormatError("bad magic, expected QT8");
  const auto dtype = static_cast<DType>(b[4]);
  const int scale = static_cast<std::int8_t>(b[5]);
  if (b[6] != 0 || b[7] != 0) throw FormatError("reserved header bytes must be zero");
  const std::size_t rows = get_u32(b, 8);
  const std::size_t cols = get_u32(b, 12);
  const std::size_t n = rows * cols;
  if (b.size() != kHeaderBytes + n * element_bytes(dtype)) {
    throw FormatError("payload length does not match header shape");
  }
  const auto payload = b.subspan(kHeaderBytes);
  switch (dtype) {
    case DType::Int8: {
      QuantTensor8 t(rows, cols);
      t.scale = scale;
      for (std::size_t i = 0; i < n; ++i) t.data()[i] = static_cast<std::int8_t>(payload[i]);
      return t;
    }
    case DType::Int32: {
      AccumTensor32 t(rows, cols);
      t.scale = scale;
      for (std::size_t i = 0; i < n; ++i) {
        t.data()[i] = static_cast<std::int32_t>(get_u32(payload, 4 * i));
      }
      return t;
    }
    case DType::Float64: {
      FloatTensor t(rows, cols);
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t bits = get_u32(payload, 8 * i) |
                                   (std::uint64_t{get_u32(payload, 8 * i + 4)} << 32);
        t.data()[i] = std::bit_cast<double>(bits);
      }
      return t;
    }
    case DType::LO1: {
      LOTensor t(rows, cols);
      for (std::size_t i = 0; i < n; ++i) t.data()[i] = unpack_code(payload[i]);
      return t;
    }
  }
  throw FormatError("unknown dtype tag");
}

void write_tensor(const std::filesystem::path& path, const AnyTensor& t) {
  const auto bytes = std::visit([](const auto& x) { return encode_tensor(x); }, t);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AnyTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

QuantTensor8 read_quant8(const std::filesystem::path& path) {
  auto t = read_tensor(path);
  if (auto* q = std::get_if<QuantTensor8>(&t)) return std::move(*q);
  throw FormatError(path.string() + ": expected an int8 tensor");
}

}  // namespace lospec
