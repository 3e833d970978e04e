#include "failscope/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "failscope/rng.hpp"

namespace failscope {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NoGroundTruth: return "NoGroundTruth";
    case ErrorCode::TooFewMinority: return "TooFewMinority";
    case ErrorCode::DatasetTooSmall: return "DatasetTooSmall";
    case ErrorCode::SpaceMismatch: return "SpaceMismatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DegenerateModel: return "DegenerateModel";
    case ErrorCode::EmptyPathRegion: return "EmptyPathRegion";
    case ErrorCode::TooManyVariables: return "TooManyVariables";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptySamples: return "EmptySamples";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void raise(ErrorCode code, const std::string& message) { throw Error(code, message); }

std::string_view to_string(Verdict v) { return v == Verdict::Pass ? "pass" : "fail"; }
std::string_view to_string(RowSource s) { return s == RowSource::Executed ? "executed" : "predicted"; }

Scalar FitnessBounds::clamp(Scalar f) const noexcept {
  if (std::isnan(f)) return 0.0;
  return std::clamp(f, lower, upper);
}

// ---------------------------------------------------------------- variables

InputVariable::InputVariable(std::string name, std::variant<RealRange, std::vector<std::string>> kind)
    : name_(std::move(name)), kind_(std::move(kind)) {}

InputVariable InputVariable::real(std::string name, Scalar lower, Scalar upper) {
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper))
    raise(ErrorCode::InvalidConfig, "real variable '" + name + "' needs lower < upper");
  return InputVariable(std::move(name), RealRange{lower, upper});
}

InputVariable InputVariable::enumerated(std::string name, std::vector<std::string> symbols) {
  std::set<std::string> distinct(symbols.begin(), symbols.end());
  if (distinct.size() < 2 || distinct.size() != symbols.size())
    raise(ErrorCode::InvalidConfig, "enumerated variable '" + name + "' needs >= 2 distinct symbols");
  return InputVariable(std::move(name), std::move(symbols));
}

const RealRange& InputVariable::range() const {
  if (!is_real()) raise(ErrorCode::InvalidInput, "variable '" + name_ + "' is not real");
  return std::get<RealRange>(kind_);
}

const std::vector<std::string>& InputVariable::symbols() const {
  if (is_real()) raise(ErrorCode::InvalidInput, "variable '" + name_ + "' is not enumerated");
  return std::get<std::vector<std::string>>(kind_);
}

RealRange InputVariable::numeric_range() const {
  if (is_real()) return std::get<RealRange>(kind_);
  return RealRange{0.0, static_cast<Scalar>(symbols().size() - 1)};
}

bool InputVariable::admits(Scalar value) const noexcept {
  if (const auto* r = std::get_if<RealRange>(&kind_)) return r->contains(value);
  const auto& syms = std::get<std::vector<std::string>>(kind_);
  return value >= 0.0 && value < static_cast<Scalar>(syms.size()) && std::floor(value) == value;
}

// -------------------------------------------------------------------- space

InputSpace::InputSpace(std::vector<InputVariable> variables) : variables_(std::move(variables)) {
  if (variables_.empty()) raise(ErrorCode::InvalidConfig, "input space must not be empty");
  std::set<std::string> names;
  for (const auto& v : variables_)
    if (!names.insert(v.name()).second) raise(ErrorCode::InvalidConfig, "duplicate variable name '" + v.name() + "'");
}

std::ptrdiff_t InputSpace::index_of(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].name() == name) return static_cast<std::ptrdiff_t>(i);
  return -1;
}

bool InputSpace::all_real() const noexcept {
  return std::all_of(variables_.begin(), variables_.end(), [](const auto& v) { return v.is_real(); });
}

bool InputSpace::conforms(const TestInput& t) const noexcept {
  if (static_cast<std::size_t>(t.size()) != variables_.size()) return false;
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (!variables_[i].admits(t[static_cast<Eigen::Index>(i)])) return false;
  return true;
}

void InputSpace::validate(const TestInput& t) const {
  if (static_cast<std::size_t>(t.size()) != variables_.size())
    raise(ErrorCode::InvalidInput, "test input arity " + std::to_string(t.size()) + " != " +
                                       std::to_string(variables_.size()));
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (!variables_[i].admits(t[static_cast<Eigen::Index>(i)]))
      raise(ErrorCode::InvalidInput, "value for '" + variables_[i].name() + "' outside its domain");
}

bool InputSpace::operator==(const InputSpace& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& a = variables_[i];
    const auto& b = other.variables_[i];
    if (a.name() != b.name() || a.is_real() != b.is_real()) return false;
    if (a.is_real()) {
      if (a.range().lower != b.range().lower || a.range().upper != b.range().upper) return false;
    } else if (a.symbols() != b.symbols()) {
      return false;
    }
  }
  return true;
}

// ------------------------------------------------------------------ dataset

void LabeledDataset::append(LabeledRow row) {
  space_.validate(row.input);
  rows_.push_back(std::move(row));
}

void LabeledDataset::append(const LabeledDataset& other) {
  if (!(other.space() == space_)) raise(ErrorCode::SpaceMismatch, "cannot merge datasets over different spaces");
  rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
}

std::size_t LabeledDataset::count(Verdict v) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(rows_.begin(), rows_.end(), [v](const LabeledRow& r) { return r.label() == v; }));
}

std::size_t LabeledDataset::count(RowSource s) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(rows_.begin(), rows_.end(), [s](const LabeledRow& r) { return r.source == s; }));
}

LabeledDataset LabeledDataset::executed_only() const {
  LabeledDataset out(space_);
  for (const auto& r : rows_)
    if (r.source == RowSource::Executed) out.rows_.push_back(r);
  return out;
}

// ------------------------------------------------------------------- budget

ExecutionBudget::ExecutionBudget(std::size_t max_executions, Scalar max_simulated_time, Scalar exec_cost)
    : max_executions_(max_executions), max_time_(max_simulated_time), exec_cost_(exec_cost) {
  if (!(exec_cost > 0.0)) raise(ErrorCode::InvalidConfig, "exec_cost must be positive");
  if (!(max_simulated_time >= 0.0)) raise(ErrorCode::InvalidConfig, "max_simulated_time must be non-negative");
}

bool ExecutionBudget::can_execute() const noexcept {
  return used_executions_ < max_executions_ && used_time_ + exec_cost_ <= max_time_;
}

bool ExecutionBudget::can_spend(Scalar seconds) const noexcept { return used_time_ + seconds <= max_time_; }

void ExecutionBudget::charge_execution() {
  if (!can_execute())
    raise(ErrorCode::BudgetExhausted, "execution " + std::to_string(used_executions_ + 1) + " does not fit");
  ++used_executions_;
  used_time_ += exec_cost_;
}

void ExecutionBudget::charge_overhead(Scalar seconds) {
  if (seconds < 0.0) raise(ErrorCode::InvalidInput, "negative overhead");
  if (!can_spend(seconds)) raise(ErrorCode::BudgetExhausted, "overhead does not fit in the time budget");
  used_time_ += seconds;
}

// ---------------------------------------------------------------------- rng

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t Rng::below(std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace failscope
