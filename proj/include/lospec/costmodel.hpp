// Arithmetic-complexity and memory-traffic accounting.
//
// Every arithmetic event of the predictors and of the formal execution path
// is recorded here as (stage, category, operand widths, count). Reports store
// raw event counts only; weighted units are derived from the weight set on
// demand, so merging reports is exact and order-independent.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace lospec {

enum class Category { Mult, Add, Shift, Compare, Loe, Mem };
enum class Stage { Speculation, Selection, Formal };

/// Only meaningful for Category::Mem; None for every compute category.
enum class MemClass { None, Weight, Activation };

std::string_view to_string(Category c);
std::string_view to_string(Stage s);
std::string_view to_string(MemClass m);

/// Throws std::invalid_argument for anything outside the known vocabulary.
Category parse_category(std::string_view name);
Stage parse_stage(std::string_view name);

/// Gate-count heuristic: an a x b array multiplier costs about a*b full-adder
/// cells; ripple adders, comparators, barrel shifters and leading-one encoders
/// scale linearly with width. Each coefficient multiplies its base formula.
struct CostWeights {
  std::string name = "gate-count-v1";
  double mult = 1.0;
  double add = 1.0;
  double shift = 1.0;
  double compare = 1.0;
  double loe = 1.0;
  double mem_per_bit = 0.0;

  /// Weighted units of one event. width_b is only used by Mult.
  double units(Category c, int width_a, int width_b = 0) const;

  void validate() const;
};

struct CostKey {
  Stage stage = Stage::Speculation;
  Category category = Category::Add;
  int width_a = 0;
  int width_b = 0;
  MemClass mem = MemClass::None;

  auto operator<=>(const CostKey&) const = default;

  /// "8x8" for multiplies, "14" for single-width ops, "5:weight" for loads.
  std::string width_profile() const;
};

struct ReductionSummary {
  std::map<Stage, std::optional<double>> per_stage;  // percent, undefined if baseline is 0
  std::optional<double> total;
};

class CostReport {
 public:
  CostReport() = default;
  explicit CostReport(CostWeights weights);

  void record(Category category, Stage stage, int width_a, int width_b = 0,
              std::uint64_t count = 1, MemClass mem = MemClass::None);

  /// String-keyed variant used by config-driven callers.
  void record(std::string_view category, Stage stage, int width_a, int width_b = 0,
              std::uint64_t count = 1);

  void record_load(Stage stage, MemClass mem, int bits_per_element, std::uint64_t elements);

  /// Commutative and associative. Weight sets must match by name.
  void merge(const CostReport& other);

  std::uint64_t count(Category c) const;
  std::uint64_t count(Stage s, Category c) const;

  /// Weighted compute units; memory is excluded unless mem_per_bit > 0.
  double units() const;
  double units(Stage s) const;
  double units(Stage s, Category c) const;

  std::uint64_t memory_bits() const;
  std::uint64_t memory_bits(MemClass m) const;
  std::uint64_t memory_bits(Stage s, MemClass m) const;

  const CostWeights& weights() const { return weights_; }
  const std::map<CostKey, std::uint64_t>& entries() const { return counts_; }
  bool empty() const { return counts_.empty(); }

  /// Columns: stage,category,count,width_profile,weighted_units
  std::string to_csv() const;
  static CostReport from_csv(std::string_view csv, CostWeights weights = {});

  /// Totals per stage and category, memory bits and the weight-set name.
  std::string to_json_summary() const;

 private:
  CostWeights weights_;
  std::map<CostKey, std::uint64_t> counts_;
};

/// Percentage reduction of `a` relative to `b`, per stage and overall.
ReductionSummary compare_reports(const CostReport& a, const CostReport& b);

/// Number of bits needed to hold values in [0, n); ceil(log2(n)) for n >= 1.
int ceil_log2(std::uint64_t n);

}  // namespace lospec
