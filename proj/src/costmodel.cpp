#include "lospec/costmodel.hpp"

#include <array>
#include <charconv>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace lospec {
namespace {

constexpr std::array<Category, 6> kCategories = {Category::Mult,    Category::Add,
                                                 Category::Shift,   Category::Compare,
                                                 Category::Loe,     Category::Mem};
constexpr std::array<Stage, 3> kStages = {Stage::Speculation, Stage::Selection, Stage::Formal};

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s) {
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("cost csv: bad number '" + std::string(s) + "'");
  }
  return value;
}

MemClass parse_mem_class(std::string_view s) {
  if (s == "weight") return MemClass::Weight;
  if (s == "activation") return MemClass::Activation;
  throw std::invalid_argument("cost csv: unknown memory class '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Mult: return "mult";
    case Category::Add: return "add";
    case Category::Shift: return "shift";
    case Category::Compare: return "compare";
    case Category::Loe: return "loe";
    case Category::Mem: return "mem";
  }
  return "?";
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Speculation: return "speculation";
    case Stage::Selection: return "selection";
    case Stage::Formal: return "formal";
  }
  return "?";
}

std::string_view to_string(MemClass m) {
  switch (m) {
    case MemClass::None: return "none";
    case MemClass::Weight: return "weight";
    case MemClass::Activation: return "activation";
  }
  return "?";
}

Category parse_category(std::string_view name) {
  for (auto c : kCategories) {
    if (to_string(c) == name) return c;
  }
  throw std::invalid_argument("unknown cost category '" + std::string(name) + "'");
}

Stage parse_stage(std::string_view name) {
  for (auto s : kStages) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown pipeline stage '" + std::string(name) + "'");
}

double CostWeights::units(Category c, int width_a, int width_b) const {
  switch (c) {
    case Category::Mult: return mult * width_a * width_b;
    case Category::Add: return add * width_a;
    case Category::Shift: return shift * width_a;
    case Category::Compare: return compare * width_a;
    case Category::Loe: return loe * width_a;
    case Category::Mem: return mem_per_bit * width_a;
  }
  return 0.0;
}

void CostWeights::validate() const {
  for (double w : {mult, add, shift, compare, loe, mem_per_bit}) {
    if (!(w >= 0.0)) throw std::invalid_argument("cost weights must be non-negative");
  }
}

std::string CostKey::width_profile() const {
  if (category == Category::Mult) return std::to_string(width_a) + "x" + std::to_string(width_b);
  if (category == Category::Mem) return std::to_string(width_a) + ":" + std::string(to_string(mem));
  return std::to_string(width_a);
}

CostReport::CostReport(CostWeights weights) : weights_(std::move(weights)) {
  weights_.validate();
}

void CostReport::record(Category category, Stage stage, int width_a, int width_b,
                        std::uint64_t count, MemClass mem) {
  if (count == 0) return;
  if (width_a < 0 || width_b < 0) throw std::invalid_argument("negative operand width");
  if (category == Category::Mem) {
    if (mem == MemClass::None) throw std::invalid_argument("memory event needs a memory class");
    width_b = 0;
  } else {
    mem = MemClass::None;
    if (category != Category::Mult) width_b = 0;
  }
  counts_[CostKey{stage, category, width_a, width_b, mem}] += count;
}

void CostReport::record(std::string_view category, Stage stage, int width_a, int width_b,
                        std::uint64_t count) {
  const auto c = parse_category(category);
  record(c, stage, width_a, width_b, count,
         c == Category::Mem ? MemClass::Activation : MemClass::None);
}

void CostReport::record_load(Stage stage, MemClass mem, int bits_per_element,
                             std::uint64_t elements) {
  record(Category::Mem, stage, bits_per_element, 0, elements, mem);
}

void CostReport::merge(const CostReport& other) {
  if (other.weights_.name != weights_.name) {
    throw std::invalid_argument("cannot merge reports with different weight sets ('" +
                                weights_.name + "' vs '" + other.weights_.name + "')");
  }
  for (const auto& [key, n] : other.counts_) counts_[key] += n;
}

std::uint64_t CostReport::count(Category c) const {
  std::uint64_t n = 0;
  for (const auto& [key, k] : counts_) {
    if (key.category == c) n += k;
  }
  return n;
}

std::uint64_t CostReport::count(Stage s, Category c) const {
  std::uint64_t n = 0;
  for (const auto& [key, k] : counts_) {
    if (key.stage == s && key.category == c) n += k;
  }
  return n;
}

double CostReport::units() const {
  double total = 0.0;
  for (const auto& [key, n] : counts_) {
    total += static_cast<double>(n) * weights_.units(key.category, key.width_a, key.width_b);
  }
  return total;
}

double CostReport::units(Stage s) const {
  double total = 0.0;
  for (const auto& [key, n] : counts_) {
    if (key.stage != s) continue;
    total += static_cast<double>(n) * weights_.units(key.category, key.width_a, key.width_b);
  }
  return total;
}

double CostReport::units(Stage s, Category c) const {
  double total = 0.0;
  for (const auto& [key, n] : counts_) {
    if (key.stage != s || key.category != c) continue;
    total += static_cast<double>(n) * weights_.units(key.category, key.width_a, key.width_b);
  }
  return total;
}

std::uint64_t CostReport::memory_bits() const {
  std::uint64_t bits = 0;
  for (const auto& [key, n] : counts_) {
    if (key.category == Category::Mem) bits += n * static_cast<std::uint64_t>(key.width_a);
  }
  return bits;
}

std::uint64_t CostReport::memory_bits(MemClass m) const {
  std::uint64_t bits = 0;
  for (const auto& [key, n] : counts_) {
    if (key.category == Category::Mem && key.mem == m) {
      bits += n * static_cast<std::uint64_t>(key.width_a);
    }
  }
  return bits;
}

std::uint64_t CostReport::memory_bits(Stage s, MemClass m) const {
  std::uint64_t bits = 0;
  for (const auto& [key, n] : counts_) {
    if (key.category == Category::Mem && key.mem == m && key.stage == s) {
      bits += n * static_cast<std::uint64_t>(key.width_a);
    }
  }
  return bits;
}

std::string CostReport::to_csv() const {
  std::ostringstream out;
  out << "stage,category,count,width_profile,weighted_units\n";
  for (const auto& [key, n] : counts_) {
    const double w = static_cast<double>(n) * weights_.units(key.category, key.width_a, key.width_b);
    out << to_string(key.stage) << ',' << to_string(key.category) << ',' << n << ','
        << key.width_profile() << ',' << w << '\n';
  }
  return out.str();
}

CostReport CostReport::from_csv(std::string_view csv, CostWeights weights) {
  CostReport report(std::move(weights));
  bool header = true;
  for (auto line : split(csv, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.starts_with("stage,")) continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 5) throw std::invalid_argument("cost csv: expected 5 columns");
    const auto stage = parse_stage(cols[0]);
    const auto category = parse_category(cols[1]);
    const auto count = parse_number<std::uint64_t>(cols[2]);
    const auto profile = cols[3];
    if (category == Category::Mult) {
      const auto x = profile.find('x');
      if (x == std::string_view::npos) throw std::invalid_argument("cost csv: bad mult profile");
      report.record(category, stage, parse_number<int>(profile.substr(0, x)),
                    parse_number<int>(profile.substr(x + 1)), count);
    } else if (category == Category::Mem) {
      const auto colon = profile.find(':');
      if (colon == std::string_view::npos) throw std::invalid_argument("cost csv: bad mem profile");
      report.record(category, stage, parse_number<int>(profile.substr(0, colon)), 0, count,
                    parse_mem_class(profile.substr(colon + 1)));
    } else {
      report.record(category, stage, parse_number<int>(profile), 0, count);
    }
  }
  return report;
}

std::string CostReport::to_json_summary() const {
  nlohmann::ordered_json j;
  j["weight_set"] = weights_.name;
  j["total_units"] = units();
  nlohmann::ordered_json stages = nlohmann::ordered_json::object();
  for (auto s : kStages) {
    nlohmann::ordered_json cats = nlohmann::ordered_json::object();
    for (auto c : kCategories) {
      if (c == Category::Mem) continue;
      const auto n = count(s, c);
      if (n == 0) continue;
      cats[std::string(to_string(c))] = {{"count", n}, {"units", units(s, c)}};
    }
    stages[std::string(to_string(s))] = {{"units", units(s)}, {"categories", cats}};
  }
  j["stages"] = stages;
  j["memory_bits"] = {{"total", memory_bits()},
                      {"weight", memory_bits(MemClass::Weight)},
                      {"activation", memory_bits(MemClass::Activation)}};
  return j.dump(2);
}

ReductionSummary compare_reports(const CostReport& a, const CostReport& b) {
  auto pct = [](double ua, double ub) -> std::optional<double> {
    if (ub == 0.0) return std::nullopt;
    return 100.0 * (1.0 - ua / ub);
  };
  ReductionSummary summary;
  for (auto s : kStages) summary.per_stage[s] = pct(a.units(s), b.units(s));
  summary.total = pct(a.units(), b.units());
  return summary;
}

int ceil_log2(std::uint64_t n) {
  int bits = 0;
  while ((std::uint64_t{1} << bits) < n) ++bits;
  return bits;
}

}  // namespace lospec
