#include <doctest.h>

#include <cmath>

#include "failscope/evaluation.hpp"
#include "failscope/generators.hpp"

using namespace failscope;

namespace {

class ConstantRegressor final : public Regressor {
 public:
  explicit ConstantRegressor(Scalar v) : value(v) {}
  Scalar value;
  Scalar predict(const Eigen::Ref<const RowVector>&) const override { return value; }
  nlohmann::json summary() const override { return {{"constant", value}}; }
};

// Every model type predicts `fbar`; holdout errors come from `mae`.
GeneratorHooks stub(Scalar fbar, std::function<Scalar(ModelType)> mae) {
  GeneratorHooks hooks;
  hooks.trainer = [fbar, mae](ModelType t, const LabeledDataset& ds, Rng&) {
    TrainedModel m;
    m.type = t;
    m.regressor = std::make_shared<ConstantRegressor>(fbar);
    m.encoder = Encoder(ds.space());
    m.holdout_mae = mae(t);
    return m;
  };
  return hooks;
}

GenerationResult run(const std::string& label, const Subject& s, ExecutionBudget budget, std::uint64_t seed,
                     const GeneratorHooks& hooks = {}, GeneratorConfig base = {}) {
  GeneratorConfig cfg = parse_strategy(label, base);
  Rng rng = Rng(seed).split(s.name);
  return generate(s, cfg, budget, rng, hooks);
}

std::vector<const TraceEvent*> events(const GenerationResult& r, const std::string& action) {
  std::vector<const TraceEvent*> out;
  for (const auto& e : r.trace)
    if (e.action == action) out.push_back(&e);
  return out;
}

}  // namespace

TEST_CASE("confidence gate") {
  CHECK(prediction_is_confident(8.0, 2.0));
  CHECK_FALSE(prediction_is_confident(-1.0, 2.0));
  CHECK(prediction_is_confident(-3.0, 2.0));
  CHECK(prediction_is_confident(0.0, 0.0));
  CHECK_FALSE(prediction_is_confident(0.0, 0.1));
  CHECK(prediction_is_confident(-0.5, 0.0));
  CHECK_FALSE(prediction_is_confident(1.0, 1.5));
}

TEST_CASE("strategy labels") {
  CHECK(strategy_label(parse_strategy("SA_RF")) == "SA_RF");
  CHECK(parse_strategy("SA_RF").sa_type == ModelType::RF);
  for (const char* l : {"SA_DYN", "RT_GUIDED", "LR_GUIDED", "SOTA", "RS"}) CHECK(strategy_label(parse_strategy(l)) == l);
  CHECK_THROWS_AS(parse_strategy("SA_ClassTree"), Error);
  CHECK_THROWS_AS(parse_strategy("GREEDY"), Error);
}

TEST_CASE("stubbed surrogate gating") {
  const Subject s = make_band({});
  GeneratorConfig base;
  base.sampler.initial_dataset_size = 10;
  base.max_iterations = 50;

  SUBCASE("zero error: nothing beyond preprocessing is executed") {
    const auto r = run("SA_GL", s, ExecutionBudget(1000, 1e6, s.exec_cost), 1, stub(-1.0, [](ModelType) { return 0.0; }), base);
    CHECK(r.executed.size() == 10);
    CHECK(r.consumed_executions == 10);
    CHECK(r.dataset.count(RowSource::Predicted) == r.dataset.size() - 10);
    CHECK(r.dataset.size() > 10);
    CHECK(events(r, "train").size() == 1);
  }
  SUBCASE("interval across zero: every input is executed and the model retrained") {
    const auto r = run("SA_GL", s, ExecutionBudget(1000, 1e6, s.exec_cost), 1, stub(-1.0, [](ModelType) { return 2.0; }), base);
    CHECK(r.dataset.count(RowSource::Predicted) == 0);
    CHECK(r.executed.size() == r.dataset.size());
    CHECK(events(r, "train").size() == events(r, "execute").size());
  }
  SUBCASE("predicted rows carry the prediction") {
    const auto r = run("SA_GL", s, ExecutionBudget(1000, 1e6, s.exec_cost), 1, stub(8.0, [](ModelType) { return 2.0; }), base);
    for (const auto& row : r.dataset.rows())
      if (row.source == RowSource::Predicted) CHECK(row.fitness == 8.0);
  }
}

TEST_CASE("dynamic selection picks the lowest holdout error") {
  const Subject s = make_band({});
  GeneratorConfig base;
  base.sampler.initial_dataset_size = 10;
  base.max_iterations = 5;
  base.dyn_types = {ModelType::GL, ModelType::RT};

  auto maes = [](ModelType t) { return t == ModelType::GL ? 2.0 : 0.5; };
  auto r = run("SA_DYN", s, ExecutionBudget(1000, 1e6, s.exec_cost), 2, stub(-1.0, maes), base);
  for (const auto* e : events(r, "train")) CHECK(e->payload["active"] == "RT");

  auto tie = [](ModelType) { return 1.0; };
  base.dyn_types = {ModelType::RT, ModelType::GL};
  r = run("SA_DYN", s, ExecutionBudget(1000, 1e6, s.exec_cost), 2, stub(-1.0, tie), base);
  for (const auto* e : events(r, "train")) CHECK(e->payload["active"] == "GL");

  base.dyn_types = {ModelType::RT};
  CHECK_THROWS_AS(run("SA_DYN", s, ExecutionBudget(1000, 1e6, s.exec_cost), 2, {}, base), Error);
}

TEST_CASE("surrogate runs: gating soundness and retraining after executions") {
  const Subject s = make_band({});
  for (const char* label : {"SA_RT", "SA_DYN"}) {
    const auto r = run(label, s, ExecutionBudget(1000000, 1800, s.exec_cost), 3);
    INFO(label);
    // executed rows are a row-wise subset of the dataset
    std::size_t k = 0;
    for (const auto& row : r.dataset.rows())
      if (row.source == RowSource::Executed) CHECK(row.input == r.executed[k++].input);
    CHECK(k == r.executed.size());

    std::size_t predicted = 0;
    bool awaiting_training = false;
    for (const auto& e : r.trace) {
      if (e.action == "predict") {
        const Scalar fbar = e.payload["fbar"], err = e.payload["e"];
        CHECK(((fbar >= 0 && fbar - err >= 0 && fbar + err >= 0) || (fbar < 0 && fbar - err < 0 && fbar + err < 0)));
        CHECK_FALSE(awaiting_training);
        ++predicted;
      } else if (e.action == "execute") {
        awaiting_training = true;
      } else if (e.action == "train") {
        awaiting_training = false;
      }
    }
    CHECK(predicted == r.dataset.count(RowSource::Predicted));
    CHECK(predicted > 0);
  }
}

TEST_CASE("regression-tree guidance narrows ranges without widening") {
  // boundary constants 10, 20 and 5 on ranges [0,20], [10,30], [1,7]
  const InputSpace space({InputVariable::real("v1", 0, 20), InputVariable::real("v2", 10, 30),
                          InputVariable::real("v3", 1, 7), InputVariable::real("v4", 0, 1)});
  const Encoder enc(space);
  BoundaryLeaves leaves;
  leaves.non_negative.predicates = {{0, false, 10.0}, {1, false, 20.0}, {2, false, 5.0}};
  leaves.negative.predicates = {{0, false, 10.0}, {1, false, 20.0}, {2, true, 5.0}};
  const auto original = space_ranges(space);
  const auto reduced = reduce_ranges(leaves, enc, original, original, 0.05);
  CHECK(reduced[0].lower == doctest::Approx(9.5));
  CHECK(reduced[0].upper == doctest::Approx(10.5));
  CHECK(reduced[1].lower == doctest::Approx(19));
  CHECK(reduced[1].upper == doctest::Approx(21));
  CHECK(reduced[2].lower == doctest::Approx(4.75));
  CHECK(reduced[2].upper == doctest::Approx(5.25));
  CHECK(reduced[3].lower == 0.0);
  CHECK(reduced[3].upper == 1.0);

  // a wider candidate leaves the current range in place
  std::vector<RealRange> narrow = original;
  narrow[0] = {9.9, 10.1};
  const auto kept = reduce_ranges(leaves, enc, original, narrow, 0.05);
  CHECK(kept[0].lower == 9.9);
  CHECK(kept[0].upper == 10.1);

  // c = 0 uses the original width
  BoundaryLeaves zero;
  zero.non_negative.predicates = {{3, false, 0.0}};
  zero.negative.predicates = {{3, true, 0.0}};
  const auto z = reduce_ranges(zero, enc, original, original, 0.05);
  CHECK(z[3].lower == 0.0);
  CHECK(z[3].upper == doctest::Approx(0.05));

  const Subject s = make_threshold_mix({});
  const auto r = run("RT_GUIDED", s, ExecutionBudget(1000000, 1800, s.exec_cost), 4);
  const auto orig = space_ranges(s.space);
  std::vector<RealRange> prev = orig;
  std::size_t shrinks = 0;
  for (const auto* e : events(r, "shrink_range")) {
    ++shrinks;
    for (std::size_t v = 0; v < orig.size(); ++v) {
      const Scalar lo = e->payload["ranges"][v][0], hi = e->payload["ranges"][v][1];
      CHECK(lo >= orig[v].lower);
      CHECK(hi <= orig[v].upper);
      CHECK(hi - lo <= prev[v].width() + 1e-12);
      prev[v] = {lo, hi};
    }
  }
  CHECK(shrinks > 0);
  CHECK(r.dataset.count(RowSource::Predicted) == 0);
}

TEST_CASE("boundary leaves are the values closest to zero") {
  DecisionTree t;
  // root: x0 <= 1 ? (x1 <= 1 ? 3 : 0.5) : (x1 <= 2 ? -0.2 : -4)
  t.nodes = {TreeNode{0, 1.0, 1, 2}, TreeNode{1, 1.0, 3, 4}, TreeNode{1, 2.0, 5, 6},
             TreeNode{-1, 0, -1, -1, 3.0}, TreeNode{-1, 0, -1, -1, 0.5}, TreeNode{-1, 0, -1, -1, -0.2},
             TreeNode{-1, 0, -1, -1, -4.0}};
  const auto b = boundary_leaves(t);
  REQUIRE(b);
  CHECK(b->non_negative.leaf == 4);
  CHECK(b->negative.leaf == 5);
  CHECK_FALSE(boundary_leaves(DecisionTree::leaf(2.0)));
}

TEST_CASE("logistic guidance samples near the failure boundary") {
  const Subject s = make_sum_cap({});
  std::vector<Scalar> guided, uniform;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = run("LR_GUIDED", s, ExecutionBudget(1000000, 1800, s.exec_cost), seed);
    Scalar acc = 0;
    for (std::size_t i = r.preprocessing_rows; i < r.dataset.size(); ++i) acc += std::abs(r.dataset[i].fitness);
    guided.push_back(acc / Scalar(r.dataset.size() - r.preprocessing_rows));
    Rng u = Rng(seed).split("uniform");
    Scalar uacc = 0;
    for (const auto& t : generate_tests(s.space, 200, u)) uacc += std::abs(s.evaluate(t));
    uniform.push_back(uacc / 200);
  }
  CHECK(median(guided) < median(uniform));
}

TEST_CASE("SOTA samples inside its tree paths") {
  const InputSpace space({InputVariable::real("x", 0, 10), InputVariable::real("y", 0, 10)});
  const Encoder enc(space);
  Rng rng(5);
  TreePath root;
  for (int i = 0; i < 100; ++i) CHECK(space.conforms(sample_in_path(enc, root, rng)));

  TreePath p;
  p.predicates = {{0, true, 3.0}, {1, false, 4.0}, {0, false, 5.0}};
  for (int i = 0; i < 1000; ++i) {
    const TestInput t = sample_in_path(enc, p, rng);
    for (const auto& pred : p.predicates) CHECK(pred.holds(enc.encode(t)));
  }
  TreePath empty;
  empty.predicates = {{0, true, 6.0}, {0, false, 5.0}};
  CHECK_THROWS_AS(sample_in_path(enc, empty, rng), Error);

  // one input per leaf and iteration
  const Subject s = make_band({});
  const auto r = run("SOTA", s, ExecutionBudget(1000000, 1800, s.exec_cost), 6);
  std::size_t leaves = 0, executes = 0, checked = 0;
  for (const auto& e : r.trace) {
    if (e.action == "train") {
      if (leaves && executes == leaves) ++checked;
      leaves = e.payload["leaves"];
      executes = 0;
    } else if (e.action == "execute") {
      ++executes;
    }
  }
  CHECK(checked > 0);
  CHECK(r.final_tree.has_value());
  CHECK(r.dataset.count(RowSource::Predicted) == 0);
}

TEST_CASE("random search") {
  const Subject s = make_band({});
  GeneratorConfig base;
  base.sampler.initial_dataset_size = 20;
  const auto exact = run("RS", s, ExecutionBudget(20, 1e9, s.exec_cost), 7, {}, base);
  ExecutionBudget b(20, 1e9, s.exec_cost);
  Rng pre_rng = Rng(7).split(s.name).split("preprocess");
  const auto pre = preprocess(s, base.sampler, b, pre_rng);
  REQUIRE(exact.dataset.size() == pre.dataset.size());
  for (std::size_t i = 0; i < pre.dataset.size(); ++i) CHECK(exact.dataset[i].input == pre.dataset[i].input);

  const auto counted = run("RS", s, ExecutionBudget(60, 1e9, s.exec_cost), 7, {}, base);
  CHECK(counted.dataset.size() == 60);
  CHECK(counted.executed.size() == 60);
  CHECK(counted.dataset.count(RowSource::Predicted) == 0);
}

TEST_CASE("time budgets are used up to one execution") {
  const Subject s = make_step_controller({});
  const Scalar max_time = 1500;
  std::map<std::string, std::size_t> sizes;
  for (const char* label : {"SA_DYN", "SA_GL", "RT_GUIDED", "LR_GUIDED", "SOTA", "RS"}) {
    const auto r = run(label, s, ExecutionBudget(1000000, max_time, s.exec_cost), 8);
    INFO(label);
    CHECK(r.consumed_time <= max_time);
    CHECK(r.consumed_time > max_time - s.exec_cost);
    sizes[label] = r.dataset.size();
  }
  CHECK(sizes["SA_DYN"] >= sizes["RS"]);
}

TEST_CASE("generation is deterministic per seed") {
  const Subject s = make_xor_regions({});
  for (const char* label : {"SA_DYN", "RT_GUIDED", "LR_GUIDED", "SOTA", "RS"}) {
    const auto a = run(label, s, ExecutionBudget(1000000, 1200, s.exec_cost), 9);
    const auto b = run(label, s, ExecutionBudget(1000000, 1200, s.exec_cost), 9);
    REQUIRE(a.dataset.size() == b.dataset.size());
    for (std::size_t i = 0; i < a.dataset.size(); ++i) {
      CHECK(a.dataset[i].input == b.dataset[i].input);
      CHECK(a.dataset[i].fitness == b.dataset[i].fitness);
    }
  }
}

TEST_CASE("dynamic selection mislabels no more than the best single surrogate") {
  const Subject s = make_band({});
  const ExecutionBudget budget(1000000, 3000, s.exec_cost);
  auto ratio = [&](const std::string& label, std::uint64_t seed) {
    const auto r = run(label, s, budget, seed);
    return Scalar(mislabel_count(r, s)) / Scalar(r.dataset.size());
  };
  std::vector<Scalar> dyn;
  for (std::uint64_t seed = 0; seed < 10; ++seed) dyn.push_back(ratio("SA_DYN", seed));
  Scalar best_single = INFINITY;
  for (auto t : kSurrogateTypes) {
    std::vector<Scalar> single;
    for (std::uint64_t seed = 0; seed < 10; ++seed) single.push_back(ratio("SA_" + std::string(to_string(t)), seed));
    best_single = std::min(best_single, median(single));
  }
  INFO("SA_DYN median " << median(dyn) << ", best single " << best_single);
  CHECK(median(dyn) <= best_single + 0.02);
}
