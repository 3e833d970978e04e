#include <doctest.h>

#include "failscope/core.hpp"
#include "failscope/rng.hpp"

using namespace failscope;

TEST_CASE("verdict boundary and monotonicity") {
  CHECK(verdict(8.0) == Verdict::Pass);
  CHECK(verdict(-1.0) == Verdict::Fail);
  CHECK(verdict(0.0) == Verdict::Pass);
  CHECK(verdict(-0.0) == Verdict::Pass);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Scalar f1 = rng.uniform(0, 5), f2 = f1 + rng.uniform(0, 5);
    CHECK(verdict(f2) == Verdict::Pass);
  }
}

TEST_CASE("fitness bounds clamp") {
  FitnessBounds b{-3.0, 10.0};
  CHECK(b.clamp(12.0) == 10.0);
  CHECK(b.clamp(-7.0) == -3.0);
  CHECK(b.clamp(4.0) == 4.0);
}

TEST_CASE("input variables and spaces validate their invariants") {
  CHECK_THROWS_AS(InputVariable::real("x", 1.0, 1.0), Error);
  CHECK_THROWS_AS(InputVariable::enumerated("e", {"A"}), Error);
  CHECK_THROWS_AS(InputVariable::enumerated("e", {"A", "A"}), Error);
  CHECK_THROWS_AS(InputSpace(std::vector<InputVariable>{}), Error);
  CHECK_THROWS_AS(InputSpace({InputVariable::real("x", 0, 1), InputVariable::real("x", 0, 2)}), Error);

  const InputSpace space({InputVariable::real("x", 0, 1), InputVariable::enumerated("mode", {"A", "B", "C"})});
  TestInput ok(2);
  ok << 0.5, 2.0;
  CHECK(space.conforms(ok));
  TestInput out_of_range(2);
  out_of_range << 1.5, 0.0;
  CHECK_FALSE(space.conforms(out_of_range));
  TestInput bad_symbol(2);
  bad_symbol << 0.5, 1.5;
  CHECK_FALSE(space.conforms(bad_symbol));
  CHECK_THROWS_AS(space.validate(TestInput::Zero(3)), Error);
  CHECK(space.index_of("mode") == 1);
  CHECK(space.index_of("nope") == -1);
}

TEST_CASE("labeled dataset is append-only and counts rows") {
  const InputSpace space({InputVariable::real("x", 0, 1)});
  LabeledDataset ds(space);
  ds.append({TestInput::Constant(1, 0.2), 1.0, RowSource::Executed});
  ds.append({TestInput::Constant(1, 0.8), -1.0, RowSource::Predicted});
  ds.append({TestInput::Constant(1, 0.5), 0.0, RowSource::Executed});
  CHECK(ds.size() == 3);
  CHECK(ds.count(Verdict::Fail) == 1);
  CHECK(ds.count(Verdict::Pass) == 2);
  CHECK(ds.count(RowSource::Predicted) == 1);
  CHECK(ds.executed_only().size() == 2);
  CHECK(ds[0].input[0] == 0.2);
  CHECK_THROWS_AS(ds.append({TestInput::Constant(1, 2.0), 1.0, RowSource::Executed}), Error);
}

TEST_CASE("execution budget charging") {
  ExecutionBudget b(2, 100.0, 30.0);
  b.charge_execution();
  CHECK(b.consumed_executions() == 1);
  CHECK(b.consumed_time() == 30.0);
  b.charge_overhead(2.5);
  CHECK(b.consumed_time() == 32.5);
  CHECK(b.consumed_executions() == 1);
  b.charge_execution();
  CHECK_FALSE(b.can_execute());
  try {
    b.charge_execution();
    FAIL("expected BudgetExhausted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BudgetExhausted);
  }
  CHECK(b.consumed_executions() == 2);

  ExecutionBudget cap(1, 1000.0, 30.0);
  cap.charge_execution();
  CHECK_THROWS_AS(cap.charge_execution(), Error);

  ExecutionBudget time(10, 50.0, 30.0);
  time.charge_execution();
  CHECK_FALSE(time.can_execute());
  CHECK_THROWS_AS(time.charge_overhead(25.0), Error);
  CHECK(time.consumed_time() == 30.0);
  CHECK_THROWS_AS(ExecutionBudget(1, 10.0, 0.0), Error);
}

TEST_CASE("budget counters never exceed their caps") {
  Rng rng(9);
  ExecutionBudget b(20, 500.0, 7.0);
  Scalar last_time = 0.0;
  std::size_t last_exec = 0;
  for (int i = 0; i < 200; ++i) {
    try {
      if (rng.below(2)) b.charge_execution();
      else b.charge_overhead(rng.uniform(0, 5));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BudgetExhausted);
    }
    CHECK(b.consumed_time() >= last_time);
    CHECK(b.consumed_executions() >= last_exec);
    CHECK(b.consumed_time() <= 500.0);
    CHECK(b.consumed_executions() <= 20);
    last_time = b.consumed_time();
    last_exec = b.consumed_executions();
  }
}

TEST_CASE("rng streams are reproducible and independent of draw history") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
  Rng c(42);
  const auto s1 = c.split("stream")();
  c();
  c();
  CHECK(c.split("stream")() == s1);
  CHECK(Rng(42).split("x")() != Rng(42).split("y")());
  CHECK(Rng(42).split(1)() != Rng(43).split(1)());
  Rng u(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(u.below(7) < 7);
  }
  auto perm = Rng(5).permutation(50);
  std::sort(perm.begin(), perm.end());
  for (std::size_t i = 0; i < 50; ++i) CHECK(perm[i] == i);
}

TEST_CASE("error codes render their names") {
  CHECK(to_string(ErrorCode::SingleClass) == "SingleClass");
  CHECK(to_string(Verdict::Fail) == "fail");
  CHECK(to_string(RowSource::Predicted) == "predicted");
}
