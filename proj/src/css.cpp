#include "lospec/css.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace lospec {
namespace {

int consumed_bits(std::span<const int> schedule, int round) {
  return std::accumulate(schedule.begin(), schedule.begin() + round + 1, 0);
}

// Width of a partial score after `round`: slice bits consumed so far, the
// largest shift, and the adder-tree growth over `h` terms.
int score_width(std::span<const int> schedule, int round, std::size_t h) {
  return consumed_bits(schedule, round) + kMaxLo8 + ceil_log2(h);
}

// Nonzero digits in the canonical signed-digit form of c.
int csd_digits(std::int64_t c) {
  int digits = 0;
  while (c != 0) {
    if (c & 1) {
      const std::int64_t d = 2 - (c & 3);  // +1 or -1
      c -= d;
      ++digits;
    }
    c >>= 1;
  }
  return digits;
}

// Multiplication by a constant realised as shifts and adds.
void record_constant_multiply(CostReport& cost, Stage stage, std::int64_t c, int width) {
  const int digits = csd_digits(c);
  if (digits == 0) return;
  cost.record(Category::Shift, stage, width, 0, static_cast<std::uint64_t>(digits));
  if (digits > 1) cost.record(Category::Add, stage, width, 0, static_cast<std::uint64_t>(digits - 1));
}

void record_threshold_cost(CostReport& cost, std::size_t n, Eta eta, int width) {
  const auto stage = Stage::Selection;
  // running max and min
  if (n > 1) cost.record(Category::Compare, stage, width, 0, 2 * (n - 1));
  // range, den * max, eta * range, final subtraction
  cost.record(Category::Add, stage, width, 0, 2);
  record_constant_multiply(cost, stage, eta.den, width + 4);
  record_constant_multiply(cost, stage, eta.num, width + 4);
  cost.record(Category::Compare, stage, width + 4, 0, n);
}

LOTensor transpose_codes(const LOTensor& t) {
  LOTensor out(t.cols(), t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) out(j, i) = t(i, j);
  }
  return out;
}

AccumTensor32 aloc_project(const QuantTensor8& x, const LOTensor& codes_t) {
  AccumTensor32 out(x.rows(), codes_t.rows());
  out.scale = x.scale;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < codes_t.rows(); ++j) out(i, j) = aloc_dot(x.row(i), codes_t.row(j));
  }
  return out;
}

}  // namespace

void Eta::validate() const {
  if (den <= 0) throw std::invalid_argument("eta denominator must be positive");
  if (num < 0 || num > den) throw std::invalid_argument("eta must lie in [0, 1]");
}

void CssConfig::validate() const {
  if (rounds < 1) throw std::invalid_argument("css: rounds must be >= 1");
  if (eta.size() != static_cast<std::size_t>(rounds)) {
    throw std::invalid_argument("css: need one eta per round (" + std::to_string(rounds) +
                                "), got " + std::to_string(eta.size()));
  }
  for (const auto& e : eta) e.validate();
  if (nibble_schedule.size() != static_cast<std::size_t>(rounds)) {
    throw std::invalid_argument("css: nibble schedule must have one width per round");
  }
  int total = 0;
  for (int w : nibble_schedule) {
    if (w < 1) throw std::invalid_argument("css: nibble widths must be >= 1");
    total += w;
  }
  if (total != 8) throw std::invalid_argument("css: nibble schedule must sum to 8 bits");
}

CssConfig CssConfig::from_tenths(const std::vector<int>& eta_tenths,
                                 std::vector<int> nibble_schedule) {
  CssConfig cfg;
  cfg.rounds = static_cast<int>(eta_tenths.size());
  cfg.eta.clear();
  for (int t : eta_tenths) cfg.eta.push_back(Eta::tenths(t));
  cfg.nibble_schedule = std::move(nibble_schedule);
  cfg.validate();
  return cfg;
}

CssConfig CssConfig::uniform(Eta eta, std::vector<int> nibble_schedule) {
  CssConfig cfg;
  cfg.rounds = static_cast<int>(nibble_schedule.size());
  cfg.eta.assign(nibble_schedule.size(), eta);
  cfg.nibble_schedule = std::move(nibble_schedule);
  cfg.validate();
  return cfg;
}

SparsityMask SparsityMask::full(std::size_t rows, std::size_t cols) {
  SparsityMask m;
  m.rows = rows;
  m.cols = cols;
  m.selected.resize(rows);
  for (auto& r : m.selected) {
    r.resize(cols);
    std::iota(r.begin(), r.end(), 0u);
  }
  return m;
}

std::size_t SparsityMask::selected_pairs() const {
  std::size_t n = 0;
  for (const auto& r : selected) n += r.size();
  return n;
}

double SparsityMask::density() const {
  if (rows == 0 || cols == 0) return 0.0;
  return static_cast<double>(selected_pairs()) / static_cast<double>(rows * cols);
}

Matrix<std::uint8_t> SparsityMask::to_dense() const {
  Matrix<std::uint8_t> out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (auto j : selected[i]) out(i, j) = 1;
  }
  return out;
}

std::string SparsityMask::to_text() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < rows; ++i) {
    out << "row " << i << ':';
    for (auto j : selected[i]) out << ' ' << j;
    out << '\n';
  }
  return out.str();
}

std::string SparsityMask::to_dense_text() const {
  const auto dense = to_dense();
  std::ostringstream out;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out << (j ? " " : "") << int{dense(i, j)};
    out << '\n';
  }
  return out.str();
}

void SparsityMask::validate() const {
  if (selected.size() != rows) throw std::logic_error("mask: row count mismatch");
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& r = selected[i];
    if (r.empty()) throw std::logic_error("mask: row " + std::to_string(i) + " is empty");
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (r[k] >= cols) throw std::logic_error("mask: index out of range");
      if (k > 0 && r[k] <= r[k - 1]) throw std::logic_error("mask: indices not ascending");
    }
  }
}

SpeculationResult speculate_qk(const QuantTensor8& x, const LOTensor& wq_codes,
                               const LOTensor& wk_codes, CostReport* cost) {
  if (x.cols() != wq_codes.rows() || x.cols() != wk_codes.rows()) {
    throw DimensionError("speculate_qk: weight codes do not match input width " +
                         std::to_string(x.cols()));
  }
  if (wq_codes.cols() != wk_codes.cols()) {
    throw DimensionError("speculate_qk: query and key projections differ in width");
  }
  if (x.cols() > kMaxHidden) throw DimensionError("speculate_qk: hidden width exceeds 1024");

  SpeculationResult r;
  r.q_acc = aloc_project(x, transpose_codes(wq_codes));
  r.k_acc = aloc_project(x, transpose_codes(wk_codes));
  r.q_hat = requantize_pow2(r.q_acc, 8, cost, Stage::Speculation);
  r.k_hat = requantize_pow2(r.k_acc, 8, cost, Stage::Speculation);
  r.q_codes = loe_tensor(r.q_hat, cost, Stage::Speculation);

  if (cost) {
    const std::uint64_t s = x.rows();
    const std::uint64_t h = x.cols();
    const std::uint64_t d = wq_codes.cols();
    cost->record_load(Stage::Speculation, MemClass::Activation, 8, s * h);
    cost->record_load(Stage::Speculation, MemClass::Weight, kLoadedCodeBits, 2 * h * d);
    const int w = 8 + kMaxLo8;
    cost->record(Category::Shift, Stage::Speculation, w, 0, 2 * s * d * h);
    if (h > 1) cost->record(Category::Add, Stage::Speculation, w, 0, 2 * s * d * (h - 1));
  }
  return r;
}

std::int32_t bit_slice(std::int8_t value, std::span<const int> schedule, int round) {
  const int end = consumed_bits(schedule, round);
  const int width = schedule[static_cast<std::size_t>(round)];
  if (round == 0) return std::int32_t{value} >> (8 - width);
  const auto bits = static_cast<std::uint8_t>(value);
  return (bits >> (8 - end)) & ((1 << width) - 1);
}

void mrsa_round(std::span<const LOCode> q_code_row, const QuantTensor8& k_hat, RoundState& state,
                int round, std::span<const int> schedule, CostReport* cost) {
  if (round < 0 || static_cast<std::size_t>(round) >= schedule.size()) {
    throw std::out_of_range("mrsa_round: round outside the schedule");
  }
  if (state.partials.size() != state.survivors.size()) {
    throw std::invalid_argument("mrsa_round: partials not aligned with survivors");
  }
  if (q_code_row.size() != k_hat.cols()) throw DimensionError("mrsa_round: width mismatch");
  const int width = schedule[static_cast<std::size_t>(round)];
  for (std::size_t n = 0; n < state.survivors.size(); ++n) {
    const auto j = state.survivors[n];
    if (j >= k_hat.rows()) throw std::out_of_range("mrsa_round: key index out of range");
    const auto key = k_hat.row(j);
    std::int32_t contribution = 0;
    for (std::size_t k = 0; k < key.size(); ++k) {
      contribution += aloc_mul(bit_slice(key[k], schedule, round), q_code_row[k]);
    }
    state.partials[n] = static_cast<std::int32_t>(state.partials[n] * (1 << width)) + contribution;
  }
  if (cost && !state.survivors.empty()) {
    const std::uint64_t pairs = state.survivors.size();
    const std::uint64_t h = k_hat.cols();
    const int w = width + kMaxLo8;
    cost->record(Category::Shift, Stage::Speculation, w, 0, pairs * h);
    if (h > 1) cost->record(Category::Add, Stage::Speculation, w, 0, pairs * (h - 1));
    if (round > 0) {
      // result reuse: shift the previous partial and add the new slice
      const int pw = score_width(schedule, round, h);
      cost->record(Category::Shift, Stage::Speculation, pw, 0, pairs);
      cost->record(Category::Add, Stage::Speculation, pw, 0, pairs);
    }
  }
}

Threshold ddf_threshold(std::span<const std::int32_t> scores, Eta eta) {
  if (scores.empty()) throw std::invalid_argument("ddf_threshold: empty score list");
  eta.validate();
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const std::int64_t mx = *hi;
  const std::int64_t mn = *lo;
  return Threshold{eta.den * mx - eta.num * (mx - mn), eta.den};
}

std::vector<std::uint32_t> ddf_select(std::span<const std::uint32_t> survivors,
                                      std::span<const std::int32_t> scores, Threshold phi) {
  if (survivors.size() != scores.size()) {
    throw std::invalid_argument("ddf_select: survivors and scores differ in length");
  }
  std::vector<std::uint32_t> kept;
  for (std::size_t n = 0; n < survivors.size(); ++n) {
    if (phi.admits(scores[n])) kept.push_back(survivors[n]);
  }
  return kept;
}

PredictionResult predict_mask(const QuantTensor8& x, const LOTensor& wq_codes,
                              const LOTensor& wk_codes, const CssConfig& cfg, CostReport* cost,
                              int threads) {
  cfg.validate();
  PredictionResult result;
  result.speculation = speculate_qk(x, wq_codes, wk_codes, cost);
  const auto& spec = result.speculation;
  const std::size_t s = x.rows();
  const auto rounds = static_cast<std::size_t>(cfg.rounds);
  const std::span<const int> schedule = cfg.nibble_schedule;

  result.mask.rows = s;
  result.mask.cols = s;
  result.mask.selected.resize(s);
  result.thresholds = Matrix<std::int64_t>(s, rounds);
  Matrix<std::size_t> survivors_after(s, rounds);

  auto run_rows = [&](std::size_t begin, std::size_t end, CostReport* sink) {
    for (std::size_t i = begin; i < end; ++i) {
      RoundState state;
      state.survivors.resize(s);
      std::iota(state.survivors.begin(), state.survivors.end(), 0u);
      state.partials.assign(s, 0);
      const auto q_row = spec.q_codes.row(i);
      for (std::size_t r = 0; r < rounds; ++r) {
        const int round = static_cast<int>(r);
        mrsa_round(q_row, spec.k_hat, state, round, schedule, sink);
        const auto phi = ddf_threshold(state.partials, cfg.eta[r]);
        result.thresholds(i, r) = phi.scaled;
        if (sink) {
          record_threshold_cost(*sink, state.survivors.size(), cfg.eta[r],
                                score_width(schedule, round, x.cols()));
        }
        RoundState next;
        for (std::size_t n = 0; n < state.survivors.size(); ++n) {
          if (phi.admits(state.partials[n])) {
            next.survivors.push_back(state.survivors[n]);
            next.partials.push_back(state.partials[n]);
          }
        }
        state = std::move(next);
        survivors_after(i, r) = state.survivors.size();
      }
      result.mask.selected[i] = std::move(state.survivors);
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(s, 1));
  if (workers == 1) {
    run_rows(0, s, cost);
  } else {
    std::vector<CostReport> local(workers, cost ? CostReport(cost->weights()) : CostReport());
    {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (s + workers - 1) / workers;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(s, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end, w] { run_rows(begin, end, cost ? &local[w] : nullptr); });
      }
    }
    if (cost) {
      for (const auto& l : local) cost->merge(l);
    }
  }

  result.mask.round_history.assign(rounds, 0);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t r = 0; r < rounds; ++r) result.mask.round_history[r] += survivors_after(i, r);
  }
  return result;
}

AccumTensor32 aloc_score_matrix(const LOTensor& q_codes, const QuantTensor8& k_hat) {
  if (q_codes.cols() != k_hat.cols()) throw DimensionError("aloc_score_matrix: width mismatch");
  AccumTensor32 out(q_codes.rows(), k_hat.rows());
  out.scale = k_hat.scale;
  for (std::size_t i = 0; i < q_codes.rows(); ++i) {
    const auto q = q_codes.row(i);
    for (std::size_t j = 0; j < k_hat.rows(); ++j) {
      const auto key = k_hat.row(j);
      std::int32_t acc = 0;
      for (std::size_t k = 0; k < key.size(); ++k) acc += aloc_mul(key[k], q[k]);
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace lospec
