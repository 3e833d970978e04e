#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "failscope/evaluation.hpp"
#include "failscope/sampling.hpp"

using namespace failscope;

namespace {

const InputSpace kUnit({InputVariable::real("x", 0, 1)});
const InputSpace kUnit2({InputVariable::real("x", 0, 1), InputVariable::real("y", 0, 1)});

TestInput vec(std::initializer_list<Scalar> xs) {
  TestInput t(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (Scalar x : xs) t[i++] = x;
  return t;
}

// Fails on the executions whose 1-based index is listed in `fails`.
Subject scripted_subject(std::vector<std::size_t> fails) {
  Subject s;
  s.name = "scripted";
  s.space = kUnit2;
  auto counter = std::make_shared<std::size_t>(0);
  s.fitness_fn = [counter, fails](const TestInput&) {
    const std::size_t k = ++*counter;
    return std::find(fails.begin(), fails.end(), k) != fails.end() ? -1.0 : 1.0;
  };
  s.bounds = {-1.0, 1.0};
  s.exec_cost = 1.0;
  return s;
}

Scalar min_pairwise(const std::vector<TestInput>& pts) {
  Scalar best = INFINITY;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, (pts[i] - pts[j]).norm());
  return best;
}

// True when p lies on the segment [a, b].
bool on_segment(const TestInput& p, const TestInput& a, const TestInput& b) {
  const TestInput d = b - a;
  const Scalar len2 = d.squaredNorm();
  if (len2 == 0.0) return (p - a).norm() < 1e-12;
  const Scalar u = (p - a).dot(d) / len2;
  return u >= -1e-12 && u <= 1 + 1e-12 && (a + u * d - p).norm() < 1e-9;
}

}  // namespace

TEST_CASE("uniform generation covers ranges and symbols") {
  Rng rng(1);
  const auto one = generate_tests(kUnit, 1, rng);
  REQUIRE(one.size() == 1);
  CHECK(one[0][0] >= 0.0);
  CHECK(one[0][0] <= 1.0);

  auto xs = generate_tests(kUnit, 1000, rng);
  std::vector<Scalar> v;
  for (const auto& t : xs) v.push_back(t[0]);
  std::sort(v.begin(), v.end());
  Scalar ks = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Scalar n = static_cast<Scalar>(v.size());
    ks = std::max({ks, (i + 1) / n - v[i], v[i] - i / n});
  }
  CHECK(ks < 0.05);

  const InputSpace sym({InputVariable::enumerated("e", {"A", "B"})});
  std::size_t a = 0;
  for (const auto& t : generate_tests(sym, 10000, rng)) a += t[0] == 0.0;
  CHECK(a / 10000.0 >= 0.47);
  CHECK(a / 10000.0 <= 0.53);
}

TEST_CASE("adaptive random picks the farthest candidate") {
  const std::vector<TestInput> existing{vec({0.0})};
  const std::vector<TestInput> cands{vec({0.1}), vec({0.9})};
  CHECK(farthest_candidate(kUnit, existing, cands) == 1);
  const std::vector<TestInput> single{vec({0.4})};
  CHECK(farthest_candidate(kUnit, {}, single) == 0);

  const InputSpace mixed({InputVariable::real("x", 0, 10), InputVariable::enumerated("e", {"A", "B"})});
  CHECK(normalized_distance(mixed, vec({0, 0}), vec({10, 1})) == doctest::Approx(std::sqrt(2.0)));
  CHECK(normalized_distance(mixed, vec({5, 1}), vec({5, 1})) == 0.0);
}

TEST_CASE("adaptive random spreads points further than uniform sampling") {
  std::vector<Scalar> art, uni;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r1 = Rng(seed).split("art"), r2 = Rng(seed).split("uniform");
    art.push_back(min_pairwise(adaptive_random(kUnit2, 50, {}, 10, r1)));
    uni.push_back(min_pairwise(generate_tests(kUnit2, 50, r2)));
  }
  CHECK(median(art) >= median(uni));
}

TEST_CASE("smote interpolates between a base and one neighbour") {
  CHECK(smote_interpolate(kUnit2, vec({0.2, 0.4}), vec({0.8, 0.6}), 0.0).isApprox(vec({0.2, 0.4})));
  CHECK(smote_interpolate(kUnit2, vec({0.2, 0.4}), vec({0.8, 0.6}), 0.5).isApprox(vec({0.5, 0.5})));

  Rng rng(3);
  const std::vector<TestInput> pair{vec({0, 0}), vec({1, 1})};
  for (const auto& s : smote_samples(kUnit2, pair, 1, 50, rng)) CHECK(on_segment(s.input, pair[0], pair[1]));

  std::vector<TestInput> minority;
  for (int i = 0; i < 10; ++i) minority.push_back(sample_uniform(kUnit2, rng));
  const auto samples = smote_samples(kUnit2, minority, 3, 30, rng);
  REQUIRE(samples.size() == 30);
  for (const auto& s : samples) {
    CHECK(s.base != s.neighbor);
    CHECK(on_segment(s.input, minority[s.base], minority[s.neighbor]));
  }

  const InputSpace mixed({InputVariable::real("x", 0, 1), InputVariable::enumerated("e", {"A", "B", "C"})});
  CHECK(smote_interpolate(mixed, vec({0.0, 2.0}), vec({1.0, 0.0}), 0.7)[1] == 2.0);
  const std::vector<LabeledRow> lone{{vec({0.5, 0.5}), -1.0, RowSource::Executed}};
  CHECK_THROWS_AS(smote(kUnit2, lone, 1, 5, rng), Error);
}

TEST_CASE("preprocess follows the balancing arithmetic") {
  SamplerConfig cfg;
  cfg.initial_dataset_size = 100;
  Rng rng(7);

  SUBCASE("40 pass / 10 fail") {
    const Subject s = scripted_subject({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    ExecutionBudget b(1000, 1e9, 1.0);
    const auto r = preprocess(s, cfg, b, rng);
    CHECK(r.initial_pass == 40);
    CHECK(r.initial_fail == 10);
    CHECK(r.smote_count == 30);
    CHECK(r.dataset.size() == 100);
    CHECK(b.consumed_executions() == 100);
    CHECK_FALSE(r.truncated);
  }
  SUBCASE("balanced") {
    std::vector<std::size_t> fails;
    for (std::size_t i = 1; i <= 25; ++i) fails.push_back(2 * i);
    const Subject s = scripted_subject(fails);
    ExecutionBudget b(1000, 1e9, 1.0);
    const auto r = preprocess(s, cfg, b, rng);
    CHECK(r.smote_count == 0);
    CHECK(r.dataset.size() == 100);
  }
  SUBCASE("all pass") {
    const Subject s = scripted_subject({});
    ExecutionBudget b(1000, 1e9, 1.0);
    const auto r = preprocess(s, cfg, b, rng);
    CHECK(r.initial_fail == 0);
    CHECK(r.smote_count == 0);
    CHECK(r.dataset.size() == 100);
  }
  SUBCASE("truncated by the budget") {
    const Subject s = scripted_subject({});
    ExecutionBudget b(30, 1e9, 1.0);
    const auto r = preprocess(s, cfg, b, rng);
    CHECK(r.truncated);
    CHECK(r.dataset.size() == 30);
  }
}

TEST_CASE("preprocess returns executed rows only and is deterministic") {
  const Subject s = make_band({});
  SamplerConfig cfg;
  ExecutionBudget b1(1000, 1e9, s.exec_cost), b2(1000, 1e9, s.exec_cost);
  Rng r1(21), r2(21);
  const auto a = preprocess(s, cfg, b1, r1);
  const auto c = preprocess(s, cfg, b2, r2);
  CHECK(a.dataset.size() == cfg.initial_dataset_size);
  CHECK(a.dataset.count(RowSource::Executed) == a.dataset.size());
  REQUIRE(a.dataset.size() == c.dataset.size());
  for (std::size_t i = 0; i < a.dataset.size(); ++i) CHECK(a.dataset[i].input == c.dataset[i].input);
}

TEST_CASE("preprocessing does not worsen class imbalance on band") {
  const Subject s = make_band({});
  SamplerConfig cfg;
  std::vector<Scalar> pre, uniform;
  // 20 seeds leave the comparison at the mercy of a single lucky uniform draw
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    ExecutionBudget b(1000, 1e9, s.exec_cost);
    Rng rng = Rng(seed).split("pre");
    const auto r = preprocess(s, cfg, b, rng);
    pre.push_back(std::abs(Scalar(r.dataset.count(Verdict::Pass)) - Scalar(r.dataset.count(Verdict::Fail))));
    Rng urng = Rng(seed).split("uniform");
    Scalar diff = 0;
    for (const auto& t : generate_tests(s.space, cfg.initial_dataset_size, urng))
      diff += verdict(s.evaluate(t)) == Verdict::Pass ? 1 : -1;
    uniform.push_back(std::abs(diff));
  }
  CHECK(median(pre) <= median(uniform));
}

TEST_CASE("sampler config validation") {
  SamplerConfig cfg;
  cfg.initial_dataset_size = 5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.initial_dataset_size = 2;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.initial_dataset_size = 4;
  cfg.smote_k = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
