// Synthetic and file-backed attention workloads.
//
// Gaussian workloads are drawn from xoshiro256** seeded through splitmix64.
// Normals use the Box-Muller transform on 53-bit uniforms built from the raw
// 64-bit draws, so the quantized tensors are reproducible on any platform.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lospec/locodec.hpp"
#include "lospec/qtensor.hpp"

namespace lospec {

class Xoshiro256ss {
 public:
  explicit Xoshiro256ss(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform in (0, 1) with 53 bits of resolution.
  double uniform_open();
  /// Standard normal via Box-Muller (both outputs of each pair are used).
  double normal();

 private:
  std::array<std::uint64_t, 4> s_{};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

enum class WorkloadSource { Gaussian, TensorFiles };

struct TensorFiles {
  std::filesystem::path x;
  std::vector<std::filesystem::path> wq, wk, wv;  // one per head
};

struct WorkloadSpec {
  std::size_t seq_len = 32;
  std::size_t hidden = 16;
  std::size_t heads = 1;
  std::uint64_t seed = 42;
  WorkloadSource source = WorkloadSource::Gaussian;
  RoundingMode rounding = RoundingMode::HalfAwayFromZero;
  TensorFiles files;

  void validate() const;
};

struct HeadWeights {
  QuantTensor8 wq, wk, wv;
  LOTensor wq_codes, wk_codes;  // offline leading-one preprocessing
};

struct Workload {
  QuantTensor8 x;
  std::vector<HeadWeights> heads;

  std::size_t seq_len() const { return x.rows(); }
  std::size_t hidden() const { return x.cols(); }
};

/// X is drawn first (S x H), then Wq, Wk, Wv (H x H) for each head in order.
Workload gen_workload(const WorkloadSpec& spec);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t checksum(const QuantTensor8& t);

}  // namespace lospec
