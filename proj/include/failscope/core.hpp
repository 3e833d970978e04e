#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace failscope {

using Scalar = double;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
// Row-major so that a training row is contiguous and binds to Ref<const RowVector>.
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A test input is a point of the input space. Enumerated variables hold the
// index of their symbol.
using TestInput = Vector;

enum class ErrorCode {
  BudgetExhausted,
  InvalidInput,
  InvalidConfig,
  NoGroundTruth,
  TooFewMinority,
  DatasetTooSmall,
  SpaceMismatch,
  SingleClass,
  DegenerateModel,
  EmptyPathRegion,
  TooManyVariables,
  TooFewSamples,
  EmptySamples,
  ParseError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

enum class Verdict { Pass, Fail };
enum class RowSource { Executed, Predicted };

std::string_view to_string(Verdict v);
std::string_view to_string(RowSource s);

/// Pass iff the fitness is non-negative; zero is a pass.
constexpr Verdict verdict(Scalar fitness) noexcept {
  return fitness >= 0.0 ? Verdict::Pass : Verdict::Fail;
}

/// Declared fitness range [-a, b] of a subject, a, b > 0.
struct FitnessBounds {
  Scalar lower = -1.0;
  Scalar upper = 1.0;

  Scalar clamp(Scalar f) const noexcept;
};

struct RealRange {
  Scalar lower = 0.0;
  Scalar upper = 1.0;

  Scalar width() const noexcept { return upper - lower; }
  bool contains(Scalar v) const noexcept { return v >= lower && v <= upper; }
};

class InputVariable {
 public:
  static InputVariable real(std::string name, Scalar lower, Scalar upper);
  static InputVariable enumerated(std::string name, std::vector<std::string> symbols);

  const std::string& name() const noexcept { return name_; }
  bool is_real() const noexcept { return std::holds_alternative<RealRange>(kind_); }
  const RealRange& range() const;
  const std::vector<std::string>& symbols() const;
  /// Real range, or [0, k-1] over symbol indices for enumerated variables.
  RealRange numeric_range() const;
  bool admits(Scalar value) const noexcept;

 private:
  InputVariable(std::string name, std::variant<RealRange, std::vector<std::string>> kind);

  std::string name_;
  std::variant<RealRange, std::vector<std::string>> kind_;
};

class InputSpace {
 public:
  InputSpace() = default;
  explicit InputSpace(std::vector<InputVariable> variables);

  std::size_t size() const noexcept { return variables_.size(); }
  const InputVariable& operator[](std::size_t i) const { return variables_.at(i); }
  const std::vector<InputVariable>& variables() const noexcept { return variables_; }
  std::ptrdiff_t index_of(std::string_view name) const noexcept;
  bool all_real() const noexcept;

  bool conforms(const TestInput& t) const noexcept;
  /// Throws InvalidInput when t has the wrong arity or a value outside its variable.
  void validate(const TestInput& t) const;

  bool operator==(const InputSpace& other) const;

 private:
  std::vector<InputVariable> variables_;
};

struct LabeledRow {
  TestInput input;
  Scalar fitness = 0.0;
  RowSource source = RowSource::Executed;

  Verdict label() const noexcept { return verdict(fitness); }
};

/// Test inputs paired with fitness values. Rows are only ever appended.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(InputSpace space) : space_(std::move(space)) {}

  const InputSpace& space() const noexcept { return space_; }
  const std::vector<LabeledRow>& rows() const noexcept { return rows_; }
  const LabeledRow& operator[](std::size_t i) const { return rows_.at(i); }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  void append(LabeledRow row);
  void append(const LabeledDataset& other);

  std::size_t count(Verdict v) const noexcept;
  std::size_t count(RowSource s) const noexcept;
  LabeledDataset executed_only() const;

 private:
  InputSpace space_;
  std::vector<LabeledRow> rows_;
};

/// Simulated-time execution budget shared by every generation strategy.
class ExecutionBudget {
 public:
  ExecutionBudget() = default;
  ExecutionBudget(std::size_t max_executions, Scalar max_simulated_time, Scalar exec_cost);

  std::size_t max_executions() const noexcept { return max_executions_; }
  Scalar max_simulated_time() const noexcept { return max_time_; }
  Scalar exec_cost() const noexcept { return exec_cost_; }
  std::size_t consumed_executions() const noexcept { return used_executions_; }
  Scalar consumed_time() const noexcept { return used_time_; }

  bool can_execute() const noexcept;
  bool can_spend(Scalar seconds) const noexcept;

  /// One system execution. Throws BudgetExhausted without mutating when it does not fit.
  void charge_execution();
  /// Non-execution overhead (training, tuning, prediction).
  void charge_overhead(Scalar seconds);

 private:
  std::size_t max_executions_ = 0;
  Scalar max_time_ = 0.0;
  Scalar exec_cost_ = 1.0;
  std::size_t used_executions_ = 0;
  Scalar used_time_ = 0.0;
};

}  // namespace failscope
