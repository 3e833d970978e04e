#include <doctest.h>

#include <cmath>

#include "failscope/rng.hpp"
#include "failscope/sampling.hpp"
#include "failscope/subjects.hpp"

using namespace failscope;

namespace {

TestInput vec(std::initializer_list<Scalar> xs) {
  TestInput t(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (Scalar x : xs) t[i++] = x;
  return t;
}

}  // namespace

TEST_CASE("sum_cap closed-form margin") {
  const Subject s = make_sum_cap({{"n", 3}, {"cap", 10.0}, {"subset", {0, 1, 2}}});
  CHECK(s.evaluate(vec({3, 3, 3})) == doctest::Approx(1.0));
  CHECK(verdict(s.evaluate(vec({3, 3, 3}))) == Verdict::Pass);
  CHECK(s.evaluate(vec({4, 4, 4})) == doctest::Approx(-2.0));
  CHECK(ground_truth_verdict(s, vec({4, 4, 4})) == Verdict::Fail);
}

TEST_CASE("catalog contents") {
  const auto catalog = builtin_catalog();
  CHECK(catalog.size() >= 5);
  REQUIRE(catalog.count("sum_cap") == 1);
  CHECK(catalog.at("sum_cap").space.size() == 8);
  for (const char* name : {"threshold_mix", "band", "step_controller", "xor_regions"}) CHECK(catalog.count(name) == 1);
  CHECK_THROWS_AS(make_subject("no_such_subject"), Error);
  CHECK_THROWS_AS(make_band({{"radius", -1.0}}), Error);
}

TEST_CASE("band center and boundary") {
  const Subject s = make_band({{"center", {6.0, 4.0}}, {"radius", 3.0}});
  CHECK(s.evaluate(vec({6, 4})) == doctest::Approx(3.0));
  CHECK(s.evaluate(vec({9, 4})) == doctest::Approx(0.0));
  CHECK(verdict(s.evaluate(vec({9, 4}))) == Verdict::Pass);
  CHECK(ground_truth_verdict(s, vec({9, 4})) == Verdict::Pass);
  CHECK(ground_truth_verdict(s, vec({9.5, 4})) == Verdict::Fail);
}

TEST_CASE("step_controller without a step has no overshoot") {
  const Subject s = make_step_controller({});
  const Scalar limit = s.params["overshoot_limit"].get<Scalar>();
  CHECK(s.evaluate(vec({5, 5, 5, 5})) == doctest::Approx(limit));
  CHECK(s.evaluate(vec({0, 0, 0, 0})) == doctest::Approx(limit));
  // 25 steps towards 10, then one step towards 0: y = 10 (1 - 0.8^25) 0.8
  const auto r = simulate_step_controller(vec({10, 0, 0, 0}), 0.2, 100);
  CHECK(r.max_overshoot == doctest::Approx(10 * (1 - std::pow(0.8, 25)) * 0.8));
  CHECK(r.output.size() == 100);
}

TEST_CASE("fitness agrees with ground truth and stays in bounds") {
  const auto catalog = builtin_catalog();
  for (const auto& [name, s] : catalog) {
    Rng rng = Rng(17).split(name);
    std::size_t disagreements = 0;
    for (int i = 0; i < 10000; ++i) {
      const TestInput t = sample_uniform(s.space, rng);
      const Scalar f = s.evaluate(t);
      CHECK(f >= s.bounds.lower);
      CHECK(f <= s.bounds.upper);
      disagreements += verdict(f) != ground_truth_verdict(s, t);
    }
    INFO(name);
    CHECK(disagreements == 0);
  }
}

TEST_CASE("segments between a pass and a fail input cross the boundary once") {
  for (const char* name : {"sum_cap", "band"}) {
    const Subject s = make_subject(name);
    Rng rng = Rng(5).split(name);
    int crossing_rays = 0;
    for (int ray = 0; ray < 100; ++ray) {
      const TestInput a = sample_uniform(s.space, rng);
      const TestInput b = sample_uniform(s.space, rng);
      if (verdict(s.evaluate(a)) == verdict(s.evaluate(b))) continue;
      ++crossing_rays;
      // Both passing regions are convex, so the segment crosses the boundary once.
      const TestInput& pass_end = verdict(s.evaluate(a)) == Verdict::Pass ? a : b;
      const TestInput& fail_end = verdict(s.evaluate(a)) == Verdict::Pass ? b : a;
      int sign_changes = 0;
      Verdict prev = Verdict::Pass;
      for (int k = 0; k <= 200; ++k) {
        const Scalar lambda = k / 200.0;
        const TestInput t = (1 - lambda) * pass_end + lambda * fail_end;
        const Verdict v = verdict(s.evaluate(t));
        sign_changes += v != prev;
        prev = v;
      }
      CHECK(sign_changes == 1);
    }
    CHECK(crossing_rays > 0);
  }
}

TEST_CASE("sum_cap fitness strictly decreases along the load direction") {
  const Subject s = make_sum_cap({});
  Rng rng(11);
  for (int ray = 0; ray < 100; ++ray) {
    TestInput t = sample_uniform(s.space, rng) * 0.5;
    Scalar prev = s.evaluate(t);
    for (int k = 0; k < 20; ++k) {
      t.array() += 0.25;
      const Scalar f = s.evaluate(t);
      CHECK(f < prev);
      prev = f;
    }
  }
}

TEST_CASE("band fitness strictly decreases moving away from the center") {
  const Subject s = make_band({{"norm", "l2"}});
  const TestInput c = vec({6, 4});
  Rng rng(13);
  for (int ray = 0; ray < 100; ++ray) {
    const Scalar angle = rng.uniform(0, 2 * M_PI);
    const TestInput dir = vec({std::cos(angle), std::sin(angle)});
    Scalar prev = s.evaluate(c);
    for (int k = 1; k <= 20; ++k) {
      const TestInput t = c + dir * (0.2 * k);
      const Scalar f = s.evaluate(t);
      CHECK(f < prev);
      prev = f;
    }
  }
}

TEST_CASE("execute charges the budget and refuses inputs outside the space") {
  const Subject s = make_sum_cap({});
  ExecutionBudget b(10, 1000.0, s.exec_cost);
  const TestInput t = TestInput::Constant(8, 1.0);
  CHECK(execute(s, t, b) == doctest::Approx(12.0));
  CHECK(b.consumed_executions() == 1);
  CHECK(b.consumed_time() == doctest::Approx(30.0));
  CHECK_THROWS_AS(execute(s, TestInput::Constant(8, 11.0), b), Error);
  CHECK(b.consumed_executions() == 1);
}
