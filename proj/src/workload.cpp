#include "lospec/workload.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lospec/tensor_io.hpp"

namespace lospec {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

FloatTensor gaussian(Xoshiro256ss& rng, std::size_t rows, std::size_t cols) {
  FloatTensor t(rows, cols);
  for (auto& v : t.data()) v = rng.normal();
  return t;
}

HeadWeights preprocess(QuantTensor8 wq, QuantTensor8 wk, QuantTensor8 wv) {
  HeadWeights h{std::move(wq), std::move(wk), std::move(wv), {}, {}};
  h.wq_codes = loe_tensor(h.wq);
  h.wk_codes = loe_tensor(h.wk);
  return h;
}

}  // namespace

Xoshiro256ss::Xoshiro256ss(std::uint64_t seed) {
  for (auto& word : s_) word = splitmix64(seed);
}

std::uint64_t Xoshiro256ss::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Xoshiro256ss::uniform_open() {
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double Xoshiro256ss::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform_open();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

void WorkloadSpec::validate() const {
  if (seq_len < 1) throw std::invalid_argument("workload: seq_len must be >= 1");
  if (hidden < 1) throw std::invalid_argument("workload: hidden must be >= 1");
  if (hidden > kMaxHidden) throw std::invalid_argument("workload: hidden must be <= 1024");
  if (heads < 1) throw std::invalid_argument("workload: heads must be >= 1");
  if (source == WorkloadSource::TensorFiles) {
    if (files.x.empty()) throw std::invalid_argument("workload: tensor-files source needs x");
    if (files.wq.size() != heads || files.wk.size() != heads || files.wv.size() != heads) {
      throw std::invalid_argument("workload: need one wq/wk/wv file per head");
    }
  }
}

Workload gen_workload(const WorkloadSpec& spec) {
  spec.validate();
  Workload w;
  if (spec.source == WorkloadSource::Gaussian) {
    Xoshiro256ss rng(spec.seed);
    w.x = quantize(gaussian(rng, spec.seq_len, spec.hidden), spec.rounding);
    for (std::size_t h = 0; h < spec.heads; ++h) {
      auto wq = quantize(gaussian(rng, spec.hidden, spec.hidden), spec.rounding);
      auto wk = quantize(gaussian(rng, spec.hidden, spec.hidden), spec.rounding);
      auto wv = quantize(gaussian(rng, spec.hidden, spec.hidden), spec.rounding);
      w.heads.push_back(preprocess(std::move(wq), std::move(wk), std::move(wv)));
    }
    return w;
  }

  w.x = read_quant8(spec.files.x);
  if (w.x.rows() != spec.seq_len || w.x.cols() != spec.hidden) {
    throw DimensionError("workload: x is " + std::to_string(w.x.rows()) + "x" +
                         std::to_string(w.x.cols()) + ", expected " + std::to_string(spec.seq_len) +
                         "x" + std::to_string(spec.hidden));
  }
  for (std::size_t h = 0; h < spec.heads; ++h) {
    auto wq = read_quant8(spec.files.wq[h]);
    auto wk = read_quant8(spec.files.wk[h]);
    auto wv = read_quant8(spec.files.wv[h]);
    for (const auto* m : {&wq, &wk, &wv}) {
      if (m->rows() != spec.hidden || m->cols() != spec.hidden) {
        throw DimensionError("workload: head " + std::to_string(h) +
                             " weights must be hidden x hidden (" + std::to_string(spec.hidden) + ")");
      }
    }
    w.heads.push_back(preprocess(std::move(wq), std::move(wk), std::move(wv)));
  }
  return w;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t checksum(const QuantTensor8& t) {
  const auto data = t.data();
  return fnv1a64({reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
}

}  // namespace lospec
