#include "failscope/rules.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace failscope {

// ---------------------------------------------------------------- features

Feature Feature::var(const InputSpace& space, std::size_t index) {
  if (index >= space.size()) raise(ErrorCode::InvalidInput, "feature index out of range");
  Feature f;
  f.kind = Kind::Var;
  f.indices = {index};
  f.name = space[index].name();
  return f;
}

Feature Feature::sum(const InputSpace& space, std::vector<std::size_t> indices, std::vector<Scalar> weights) {
  if (!weights.empty() && weights.size() != indices.size())
    raise(ErrorCode::InvalidInput, "sum feature weights must match its indices");
  std::vector<std::size_t> order(indices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return indices[a] < indices[b]; });
  Feature f;
  f.kind = Kind::Sum;
  for (auto k : order) {
    f.indices.push_back(indices[k]);
    if (!weights.empty()) f.weights.push_back(weights[k]);
  }
  if (f.indices.size() < 2) raise(ErrorCode::InvalidInput, "a sum feature needs at least two variables");
  if (std::adjacent_find(f.indices.begin(), f.indices.end()) != f.indices.end())
    raise(ErrorCode::InvalidInput, "sum feature indices must be distinct");
  for (std::size_t k = 0; k < f.indices.size(); ++k) {
    if (f.indices[k] >= space.size()) raise(ErrorCode::InvalidInput, "feature index out of range");
    if (k) f.name += "+";
    if (!f.weights.empty() && f.weights[k] != 1.0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g*", f.weights[k]);
      f.name += buf;
    }
    f.name += space[f.indices[k]].name();
  }
  return f;
}

Scalar Feature::value(const TestInput& t) const {
  Scalar acc = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k)
    acc += (weights.empty() ? 1.0 : weights[k]) * t[static_cast<Eigen::Index>(indices[k])];
  return acc;
}

LinearForm Feature::form() const {
  LinearForm f;
  for (std::size_t k = 0; k < indices.size(); ++k) f[indices[k]] += weights.empty() ? 1.0 : weights[k];
  return f;
}

std::string_view to_string(Op op) {
  switch (op) {
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::Lt: return "<";
  }
  return "?";
}

Op op_from_string(std::string_view s) {
  if (s == "<=") return Op::Le;
  if (s == ">") return Op::Gt;
  if (s == ">=") return Op::Ge;
  if (s == "<") return Op::Lt;
  raise(ErrorCode::ParseError, "unknown operator '" + std::string(s) + "'");
}

namespace {

bool compare(Scalar v, Op op, Scalar c) {
  switch (op) {
    case Op::Le: return v <= c;
    case Op::Gt: return v > c;
    case Op::Ge: return v >= c;
    case Op::Lt: return v < c;
  }
  return false;
}

}  // namespace

bool Predicate::holds(const TestInput& t) const { return compare(feature.value(t), op, constant); }

bool Rule::matches(const TestInput& t) const {
  return std::all_of(condition.begin(), condition.end(), [&](const Predicate& p) { return p.holds(t); });
}

BinarizedDataset binarize(const LabeledDataset& ds) {
  BinarizedDataset out{ds.space(), {}, {}, {}};
  for (const auto& r : ds.rows()) {
    out.inputs.push_back(r.input);
    out.labels.push_back(r.label());
    out.fitness.push_back(r.fitness);
  }
  return out;
}

FeatureSet individual_features(const InputSpace& space) {
  FeatureSet fs;
  for (std::size_t i = 0; i < space.size(); ++i) fs.push_back(Feature::var(space, i));
  return fs;
}

std::vector<FeatureSet> enumerate_sum_features(const InputSpace& space) {
  const std::size_t n = space.size();
  if (n < 2) raise(ErrorCode::InvalidInput, "sum features need at least two variables");
  if (n > 16) raise(ErrorCode::TooManyVariables, "sum-feature enumeration is capped at 16 variables");
  std::vector<FeatureSet> out{individual_features(space)};
  for (std::size_t size = 2; size <= n; ++size) {
    // Subsets of one size in lexicographic order of their indices.
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(size), true);
    do {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < n; ++i)
        if (pick[i]) idx.push_back(i);
      out.push_back({Feature::sum(space, idx)});
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return out;
}

std::vector<FeatureSet> enumerate_sum_features(std::size_t n_vars) {
  if (n_vars > 16) raise(ErrorCode::TooManyVariables, "sum-feature enumeration is capped at 16 variables");
  std::vector<InputVariable> vars;
  for (std::size_t i = 0; i < n_vars; ++i) vars.push_back(InputVariable::real("v" + std::to_string(i + 1), 0.0, 1.0));
  if (vars.empty()) raise(ErrorCode::InvalidInput, "sum features need at least two variables");
  return enumerate_sum_features(InputSpace(std::move(vars)));
}

nlohmann::json RuleLearnerParams::to_json() const {
  return {{"mdl_bits", mdl_bits},
          {"grow_fraction", grow_fraction},
          {"max_conditions", max_conditions},
          {"max_thresholds", max_thresholds},
          {"optimize", optimize}};
}

RuleLearnerParams RuleLearnerParams::from_json(const nlohmann::json& j) {
  RuleLearnerParams p;
  p.mdl_bits = j.value("mdl_bits", p.mdl_bits);
  p.grow_fraction = j.value("grow_fraction", p.grow_fraction);
  p.max_conditions = j.value("max_conditions", p.max_conditions);
  p.max_thresholds = j.value("max_thresholds", p.max_thresholds);
  p.optimize = j.value("optimize", p.optimize);
  if (!(p.grow_fraction > 0.0 && p.grow_fraction < 1.0)) raise(ErrorCode::InvalidConfig, "grow_fraction must lie in (0, 1)");
  if (p.max_conditions < 1) raise(ErrorCode::InvalidConfig, "max_conditions must be at least 1");
  if (p.max_thresholds < 1) raise(ErrorCode::InvalidConfig, "max_thresholds must be at least 1");
  return p;
}

// ------------------------------------------------------------ rule learner

namespace {

struct Cond {
  std::size_t feature = 0;
  bool greater = false;
  Scalar threshold = 0.0;
};

using Conds = std::vector<Cond>;

class Learner {
 public:
  Learner(const BinarizedDataset& data, const FeatureSet& features, const RuleLearnerParams& params, Rng& rng)
      : params_(params), rng_(rng), n_(data.size()), m_(features.size()), values_(n_ * m_) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t f = 0; f < m_; ++f) values_[f * n_ + i] = features[f].value(data.inputs[i]);
    thresholds_.resize(m_);
    std::size_t total = 0;
    for (std::size_t f = 0; f < m_; ++f) {
      std::vector<Scalar> v(values_.begin() + static_cast<std::ptrdiff_t>(f * n_),
                            values_.begin() + static_cast<std::ptrdiff_t>((f + 1) * n_));
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      std::vector<Scalar> cuts;
      for (std::size_t k = 0; k + 1 < v.size(); ++k) cuts.push_back(v[k] + (v[k + 1] - v[k]) / 2.0);
      if (cuts.size() > params.max_thresholds) {
        std::vector<Scalar> sub;
        for (std::size_t q = 0; q < params.max_thresholds; ++q)
          sub.push_back(cuts[(q * (cuts.size() - 1)) / std::max<std::size_t>(1, params.max_thresholds - 1)]);
        sub.erase(std::unique(sub.begin(), sub.end()), sub.end());
        cuts = std::move(sub);
      }
      total += cuts.size();
      thresholds_[f] = std::move(cuts);
    }
    possible_conditions_ = std::max<Scalar>(1.0, 2.0 * static_cast<Scalar>(total));
  }

  Scalar value(std::size_t row, std::size_t f) const { return values_[f * n_ + row]; }

  bool covers(const Cond& c, std::size_t row) const {
    const Scalar v = value(row, c.feature);
    return c.greater ? v > c.threshold : v <= c.threshold;
  }
  bool covers(const Conds& cs, std::size_t row) const {
    return std::all_of(cs.begin(), cs.end(), [&](const Cond& c) { return covers(c, row); });
  }

  /// Rules for `positive` over `rows` (labels[i] == positive marks a positive row).
  std::vector<Conds> cover(const std::vector<std::size_t>& rows, const std::vector<char>& positive) {
    std::vector<Conds> rules;
    std::vector<std::size_t> uncovered = rows;
    Scalar best_dl = std::numeric_limits<Scalar>::infinity();
    while (true) {
      std::vector<std::size_t> pos, neg;
      for (auto r : uncovered) (positive[r] ? pos : neg).push_back(r);
      if (pos.empty()) break;
      auto [grow, prune] = split(pos, neg);
      Conds rule = grow_rule({}, grow, positive);
      if (!prune.empty()) rule = prune_rule(rule, prune, positive);
      if (rule.empty()) break;

      std::size_t pp = 0, pn = 0;
      for (auto r : prune)
        if (covers(rule, r)) (positive[r] ? pp : pn)++;
      if (pp + pn > 0 && pn > pp) break;  // worse than chance on unseen rows

      rules.push_back(rule);
      const Scalar dl = description_length(rules, rows, positive);
      if (dl > best_dl + params_.mdl_bits) {
        rules.pop_back();
        break;
      }
      best_dl = std::min(best_dl, dl);

      std::vector<std::size_t> rest;
      for (auto r : uncovered)
        if (!covers(rule, r)) rest.push_back(r);
      if (rest.size() == uncovered.size()) {
        rules.pop_back();
        break;
      }
      uncovered = std::move(rest);
    }
    if (params_.optimize) optimize(rules, rows, positive);
    return rules;
  }

 private:
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split(std::vector<std::size_t> pos,
                                                                       std::vector<std::size_t> neg) {
    std::vector<std::size_t> grow, prune;
    for (auto* cls : {&pos, &neg}) {
      rng_.shuffle(*cls);
      auto n_grow = static_cast<std::size_t>(std::ceil(params_.grow_fraction * static_cast<Scalar>(cls->size())));
      n_grow = std::min(n_grow, cls->size());
      grow.insert(grow.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(n_grow));
      prune.insert(prune.end(), cls->begin() + static_cast<std::ptrdiff_t>(n_grow), cls->end());
    }
    return {grow, prune};
  }

  static Scalar foil_gain(std::size_t p1, std::size_t n1, Scalar base_info) {
    if (p1 == 0) return 0.0;
    const Scalar info = std::log2(static_cast<Scalar>(p1) / static_cast<Scalar>(p1 + n1));
    return static_cast<Scalar>(p1) * (info - base_info);
  }

  // Greedy FOIL-gain growth until no negatives remain or no condition helps.
  Conds grow_rule(Conds rule, const std::vector<std::size_t>& rows, const std::vector<char>& positive) const {
    std::vector<std::size_t> cur;
    for (auto r : rows)
      if (covers(rule, r)) cur.push_back(r);
    while (rule.size() < params_.max_conditions) {
      std::size_t p0 = 0;
      for (auto r : cur) p0 += positive[r] != 0;
      const std::size_t n0 = cur.size() - p0;
      if (n0 == 0 || p0 == 0) break;
      const Scalar base = std::log2(static_cast<Scalar>(p0) / static_cast<Scalar>(p0 + n0));

      Scalar best_gain = 1e-12;
      std::optional<Cond> best;
      std::vector<std::size_t> order(cur);
      for (std::size_t f = 0; f < m_; ++f) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a, f) < value(b, f); });
        std::size_t k = 0, lp = 0, ln = 0;
        for (Scalar c : thresholds_[f]) {
          while (k < order.size() && value(order[k], f) <= c) {
            (positive[order[k]] ? lp : ln)++;
            ++k;
          }
          const Scalar g_le = foil_gain(lp, ln, base);
          if (g_le > best_gain) {
            best_gain = g_le;
            best = Cond{f, false, c};
          }
          const Scalar g_gt = foil_gain(p0 - lp, n0 - ln, base);
          if (g_gt > best_gain) {
            best_gain = g_gt;
            best = Cond{f, true, c};
          }
        }
      }
      if (!best) break;
      rule.push_back(*best);
      std::vector<std::size_t> next;
      for (auto r : cur)
        if (covers(*best, r)) next.push_back(r);
      cur = std::move(next);
    }
    return rule;
  }

  // Keeps the prefix maximising (p - n) / (p + n) on the prune rows; shorter wins ties.
  Conds prune_rule(const Conds& rule, const std::vector<std::size_t>& rows, const std::vector<char>& positive) const {
    std::size_t best_len = rule.size();
    Scalar best_value = -std::numeric_limits<Scalar>::infinity();
    for (std::size_t len = 1; len <= rule.size(); ++len) {
      const Conds prefix(rule.begin(), rule.begin() + static_cast<std::ptrdiff_t>(len));
      std::size_t p = 0, n = 0;
      for (auto r : rows)
        if (covers(prefix, r)) (positive[r] ? p : n)++;
      if (p + n == 0) continue;
      const Scalar v = (static_cast<Scalar>(p) - static_cast<Scalar>(n)) / static_cast<Scalar>(p + n);
      if (v > best_value) {
        best_value = v;
        best_len = len;
      }
    }
    return Conds(rule.begin(), rule.begin() + static_cast<std::ptrdiff_t>(best_len));
  }

  static Scalar log2_choose(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    return (std::lgamma(static_cast<Scalar>(n) + 1) - std::lgamma(static_cast<Scalar>(k) + 1) -
            std::lgamma(static_cast<Scalar>(n - k) + 1)) /
           std::log(2.0);
  }

  Scalar rule_bits(std::size_t k) const {
    const Scalar kk = static_cast<Scalar>(k);
    const Scalar t = std::max(possible_conditions_, kk + 1.0);
    return 0.5 * (std::log2(kk) + kk * std::log2(t / kk) + (t - kk) * std::log2(t / (t - kk)));
  }

  Scalar description_length(const std::vector<Conds>& rules, const std::vector<std::size_t>& rows,
                            const std::vector<char>& positive) const {
    Scalar bits = 0.0;
    for (const auto& r : rules) bits += rule_bits(r.size());
    std::size_t covered = 0, fp = 0, uncovered = 0, fn = 0;
    for (auto row : rows) {
      const bool hit = std::any_of(rules.begin(), rules.end(), [&](const Conds& r) { return covers(r, row); });
      if (hit) {
        ++covered;
        fp += positive[row] == 0;
      } else {
        ++uncovered;
        fn += positive[row] != 0;
      }
    }
    return bits + log2_choose(covered, fp) + log2_choose(uncovered, fn);
  }

  // One pass: each rule may be swapped for a regrown or extended version when
  // that lowers the description length of the whole set.
  void optimize(std::vector<Conds>& rules, const std::vector<std::size_t>& rows, const std::vector<char>& positive) {
    for (std::size_t i = 0; i < rules.size(); ++i) {
      std::vector<std::size_t> rest;
      for (auto r : rows) {
        bool other = false;
        for (std::size_t j = 0; j < rules.size() && !other; ++j) other = j != i && covers(rules[j], r);
        if (!other) rest.push_back(r);
      }
      std::vector<std::size_t> pos, neg;
      for (auto r : rest) (positive[r] ? pos : neg).push_back(r);
      if (pos.empty()) continue;
      auto [grow, prune] = split(pos, neg);
      std::vector<Conds> options{rules[i]};
      for (Conds cand : {grow_rule({}, grow, positive), grow_rule(rules[i], grow, positive)}) {
        if (!prune.empty()) cand = prune_rule(cand, prune, positive);
        if (!cand.empty()) options.push_back(std::move(cand));
      }
      Scalar best = std::numeric_limits<Scalar>::infinity();
      Conds chosen = rules[i];
      for (const auto& opt : options) {
        auto trial = rules;
        trial[i] = opt;
        const Scalar dl = description_length(trial, rows, positive);
        if (dl < best) {
          best = dl;
          chosen = opt;
        }
      }
      rules[i] = std::move(chosen);
    }
  }

  const RuleLearnerParams& params_;
  Rng& rng_;
  std::size_t n_;
  std::size_t m_;
  std::vector<Scalar> values_;  // feature-major
  std::vector<std::vector<Scalar>> thresholds_;
  Scalar possible_conditions_ = 1.0;
};

Rule to_rule(const Conds& conds, const FeatureSet& features, Verdict prediction) {
  Rule r;
  r.prediction = prediction;
  for (const auto& c : conds) r.condition.push_back({features[c.feature], c.greater ? Op::Gt : Op::Le, c.threshold});
  return r;
}

}  // namespace

void score_rules(RuleSet& rs, const BinarizedDataset& data) {
  for (auto& rule : rs.rules) {
    rule.correct = rule.support = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!rule.matches(data.inputs[i])) continue;
      ++rule.support;
      rule.correct += data.labels[i] == rule.prediction;
    }
  }
}

RuleSet learn_ruleset(const BinarizedDataset& data, const FeatureSet& features, const RuleLearnerParams& params,
                      Rng& rng) {
  if (data.size() == 0) raise(ErrorCode::EmptySamples, "cannot learn rules from an empty dataset");
  if (features.empty()) raise(ErrorCode::InvalidInput, "rule learning needs at least one feature");
  const auto fails = static_cast<std::size_t>(std::count(data.labels.begin(), data.labels.end(), Verdict::Fail));
  if (fails == 0 || fails == data.size()) raise(ErrorCode::SingleClass, "rule learning needs both pass and fail rows");

  // Fail rules come first so that the failure model is stated as explicit
  // fail conditions whichever class is the minority.
  const Verdict target = Verdict::Fail;
  const Verdict other = Verdict::Pass;

  Learner learner(data, features, params, rng);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<char> is_target(data.size()), is_other(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    is_target[i] = data.labels[i] == target;
    is_other[i] = !is_target[i];
  }

  RuleSet rs;
  for (const auto& v : data.space.variables()) rs.variables.push_back(v.name());
  const auto target_rules = learner.cover(all, is_target);
  std::vector<std::size_t> residual;
  for (auto i : all)
    if (std::none_of(target_rules.begin(), target_rules.end(), [&](const Conds& c) { return learner.covers(c, i); }))
      residual.push_back(i);
  for (const auto& c : target_rules) rs.rules.push_back(to_rule(c, features, target));

  const bool residual_has_target = std::any_of(residual.begin(), residual.end(), [&](auto i) { return is_target[i] != 0; });
  std::vector<std::size_t> uncovered = residual;
  if (residual_has_target) {
    const auto other_rules = learner.cover(residual, is_other);
    std::vector<std::size_t> rest;
    for (auto i : residual)
      if (std::none_of(other_rules.begin(), other_rules.end(), [&](const Conds& c) { return learner.covers(c, i); }))
        rest.push_back(i);
    for (const auto& c : other_rules) rs.rules.push_back(to_rule(c, features, other));
    uncovered = std::move(rest);
  }
  if (uncovered.empty()) {
    rs.default_prediction = other;
  } else {
    const auto t = static_cast<std::size_t>(std::count_if(uncovered.begin(), uncovered.end(), [&](auto i) { return is_target[i] != 0; }));
    rs.default_prediction = t > uncovered.size() - t ? target : other;
  }
  score_rules(rs, data);
  return rs;
}

std::vector<Rule> extract_fail_rules(const RuleSet& rs) {
  std::vector<Rule> out;
  for (const auto& r : rs.rules)
    if (r.prediction == Verdict::Fail && r.support > 0 && r.correct == r.support) out.push_back(r);
  return out;
}

Verdict apply_ruleset(const RuleSet& rs, const TestInput& t) {
  for (const auto& r : rs.rules)
    if (r.matches(t)) return r.prediction;
  return rs.default_prediction;
}

Scalar accuracy(const RuleSet& rs, const BinarizedDataset& test) {
  if (test.size() == 0) raise(ErrorCode::EmptySamples, "accuracy needs at least one row");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < test.size(); ++i) ok += apply_ruleset(rs, test.inputs[i]) == test.labels[i];
  return static_cast<Scalar>(ok) / static_cast<Scalar>(test.size());
}

RuleTuneResult tune_rule_learner(const BinarizedDataset& data, const FeatureSet& features, std::size_t folds, Rng& rng) {
  folds = std::clamp<std::size_t>(folds, 2, std::max<std::size_t>(2, data.size()));
  const auto perm = rng.split("rules.folds").permutation(data.size());
  std::vector<std::size_t> fold_of(data.size());
  for (std::size_t k = 0; k < perm.size(); ++k) fold_of[perm[k]] = k % folds;

  RuleTuneResult res;
  res.best_accuracy = -1.0;
  for (Scalar bits : {32.0, 64.0, 128.0}) {
    for (std::size_t conds : {2, 4, 8}) {
      RuleLearnerParams p;
      p.mdl_bits = bits;
      p.max_conditions = conds;
      std::size_t ok = 0;
      for (std::size_t f = 0; f < folds; ++f) {
        BinarizedDataset tr{data.space, {}, {}, {}}, te{data.space, {}, {}, {}};
        for (std::size_t i = 0; i < data.size(); ++i) {
          auto& dst = fold_of[i] == f ? te : tr;
          dst.inputs.push_back(data.inputs[i]);
          dst.labels.push_back(data.labels[i]);
          dst.fitness.push_back(data.fitness[i]);
        }
        if (te.size() == 0) continue;
        const auto fails = std::count(tr.labels.begin(), tr.labels.end(), Verdict::Fail);
        if (fails == 0 || static_cast<std::size_t>(fails) == tr.size()) {
          const Verdict only = tr.labels.empty() ? Verdict::Pass : tr.labels.front();
          ok += static_cast<std::size_t>(std::count(te.labels.begin(), te.labels.end(), only));
          continue;
        }
        Rng fold_rng = rng.split(f);
        const auto rs = learn_ruleset(tr, features, p, fold_rng);
        for (std::size_t i = 0; i < te.size(); ++i) ok += apply_ruleset(rs, te.inputs[i]) == te.labels[i];
      }
      const Scalar acc = static_cast<Scalar>(ok) / static_cast<Scalar>(data.size());
      if (acc > res.best_accuracy) {
        res.best_accuracy = acc;
        res.best = p;
      }
    }
  }
  return res;
}

// -------------------------------------------------------------- implication

namespace {

struct Bound {
  Scalar value;
  bool open;
};

struct Interval {
  Bound lo{-std::numeric_limits<Scalar>::infinity(), false};
  Bound hi{std::numeric_limits<Scalar>::infinity(), false};

  bool empty() const { return lo.value > hi.value || (lo.value == hi.value && (lo.open || hi.open)); }

  void restrict(Op op, Scalar c) {
    switch (op) {
      case Op::Le: tighten_hi({c, false}); break;
      case Op::Lt: tighten_hi({c, true}); break;
      case Op::Ge: tighten_lo({c, false}); break;
      case Op::Gt: tighten_lo({c, true}); break;
    }
  }
  void tighten_lo(Bound b) {
    if (b.value > lo.value || (b.value == lo.value && b.open)) lo = b;
  }
  void tighten_hi(Bound b) {
    if (b.value < hi.value || (b.value == hi.value && b.open)) hi = b;
  }

  /// Every point of the interval satisfies `x op c`.
  bool entails(Op op, Scalar c) const {
    switch (op) {
      case Op::Gt: return lo.value > c || (lo.value == c && lo.open);
      case Op::Ge: return lo.value >= c;
      case Op::Le: return hi.value <= c;
      case Op::Lt: return hi.value < c || (hi.value == c && hi.open);
    }
    return false;
  }
};

// Slack added to interval sums so rounding never makes the checker unsound.
// It depends only on the form and the space, which keeps the relation transitive.
Scalar rounding_slack(const LinearForm& f, const InputSpace& space) {
  Scalar mag = 1.0;
  for (const auto& [i, w] : f) {
    const auto r = space[i].numeric_range();
    mag += std::abs(w) * std::max(std::abs(r.lower), std::abs(r.upper));
  }
  return 1e-9 * mag;
}

struct RuleRegion {
  std::vector<Interval> box;  // per variable
  const Rule* rule = nullptr;

  Interval interval(const LinearForm& f, const InputSpace& space) const {
    Interval out;
    if (f.size() == 1 && f.begin()->second == 1.0) {
      out = box[f.begin()->first];
    } else {
      Scalar lo = 0.0, hi = 0.0;
      bool lo_open = false, hi_open = false;
      for (const auto& [i, w] : f) {
        if (w == 0.0) continue;
        const auto& b = box[i];
        const Bound& for_lo = w > 0 ? b.lo : b.hi;
        const Bound& for_hi = w > 0 ? b.hi : b.lo;
        lo += w * for_lo.value;
        hi += w * for_hi.value;
        lo_open = lo_open || for_lo.open;
        hi_open = hi_open || for_hi.open;
      }
      const Scalar slack = rounding_slack(f, space);
      out.lo = {lo - slack, lo_open};
      out.hi = {hi + slack, hi_open};
    }
    for (const auto& p : rule->condition)
      if (p.feature.form() == f) out.restrict(p.op, p.constant);
    return out;
  }
};

RuleRegion region_of(const Rule& r, const InputSpace& space) {
  RuleRegion reg;
  reg.rule = &r;
  for (const auto& v : space.variables()) {
    const auto range = v.numeric_range();
    Interval iv;
    iv.lo = {range.lower, false};
    iv.hi = {range.upper, false};
    reg.box.push_back(iv);
  }
  for (const auto& p : r.condition) {
    const auto f = p.feature.form();
    if (f.size() == 1 && f.begin()->second == 1.0) reg.box[f.begin()->first].restrict(p.op, p.constant);
  }
  return reg;
}

void check_space(const Rule& r, const InputSpace& space) {
  for (const auto& p : r.condition)
    for (auto i : p.feature.indices)
      if (i >= space.size()) raise(ErrorCode::SpaceMismatch, "rule feature refers to a variable outside the space");
}

}  // namespace

bool implies(const Rule& a, const Rule& b, const InputSpace& space) {
  check_space(a, space);
  check_space(b, space);
  const RuleRegion rb = region_of(b, space);
  if (std::any_of(rb.box.begin(), rb.box.end(), [](const Interval& iv) { return iv.empty(); })) return true;
  for (const auto& p : b.condition)
    if (rb.interval(p.feature.form(), space).empty()) return true;
  for (const auto& p : a.condition) {
    const Interval iv = rb.interval(p.feature.form(), space);
    if (iv.empty()) return true;
    if (!iv.entails(p.op, p.constant)) return false;
  }
  return true;
}

std::vector<Rule> minimize_rules(const std::vector<Rule>& rules, const InputSpace& space) {
  std::vector<std::size_t> order(rules.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return rules[x].support > rules[y].support; });

  std::vector<bool> kept(rules.size(), false);
  for (auto r : order) {
    if (rules[r].prediction != Verdict::Fail) {
      kept[r] = true;
      continue;
    }
    bool subsumed = false;
    for (std::size_t k = 0; k < rules.size() && !subsumed; ++k)
      subsumed = kept[k] && rules[k].prediction == Verdict::Fail && implies(rules[k], rules[r], space);
    if (subsumed) continue;
    for (std::size_t k = 0; k < rules.size(); ++k)
      if (kept[k] && rules[k].prediction == Verdict::Fail && implies(rules[r], rules[k], space)) kept[k] = false;
    kept[r] = true;
  }
  std::vector<Rule> out;
  for (std::size_t i = 0; i < rules.size(); ++i)
    if (kept[i]) out.push_back(rules[i]);
  return out;
}

// ------------------------------------------------------------ serialization

namespace {

nlohmann::json feature_json(const Feature& f) {
  nlohmann::json j = {{"kind", f.kind == Feature::Kind::Var ? "var" : "sum"}, {"indices", f.indices}, {"name", f.name}};
  if (!f.weights.empty()) j["weights"] = f.weights;
  return j;
}

Feature feature_from_json(const nlohmann::json& j) {
  Feature f;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "var") {
    f.kind = Feature::Kind::Var;
  } else if (kind == "sum") {
    f.kind = Feature::Kind::Sum;
  } else {
    raise(ErrorCode::ParseError, "unknown feature kind '" + kind + "'");
  }
  f.indices = j.at("indices").get<std::vector<std::size_t>>();
  if (j.contains("weights")) f.weights = j.at("weights").get<std::vector<Scalar>>();
  f.name = j.at("name").get<std::string>();
  if (f.indices.empty() || (f.kind == Feature::Kind::Sum && f.indices.size() < 2))
    raise(ErrorCode::ParseError, "feature '" + f.name + "' has the wrong number of variables");
  return f;
}

}  // namespace

nlohmann::json to_json(const Rule& r) {
  nlohmann::json cond = nlohmann::json::array();
  for (const auto& p : r.condition)
    cond.push_back({{"feature", feature_json(p.feature)}, {"op", to_string(p.op)}, {"constant", p.constant}});
  return {{"condition", cond},
          {"prediction", to_string(r.prediction)},
          {"correct", r.correct},
          {"support", r.support},
          {"confidence", r.confidence()}};
}

Rule rule_from_json(const nlohmann::json& j) {
  Rule r;
  for (const auto& p : j.at("condition")) {
    const Scalar c = p.at("constant").get<Scalar>();
    if (!std::isfinite(c)) raise(ErrorCode::ParseError, "predicate constant must be finite");
    r.condition.push_back({feature_from_json(p.at("feature")), op_from_string(p.at("op").get<std::string>()), c});
  }
  const auto pred = j.at("prediction").get<std::string>();
  if (pred != "pass" && pred != "fail") raise(ErrorCode::ParseError, "prediction must be pass or fail");
  r.prediction = pred == "fail" ? Verdict::Fail : Verdict::Pass;
  r.correct = j.at("correct").get<std::size_t>();
  r.support = j.at("support").get<std::size_t>();
  if (r.correct > r.support) raise(ErrorCode::ParseError, "rule has more correct rows than support");
  return r;
}

nlohmann::json to_json(const RuleSet& rs) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : rs.rules) rules.push_back(to_json(r));
  return {{"schema_version", 1},
          {"variables", rs.variables},
          {"rules", rules},
          {"default", to_string(rs.default_prediction)}};
}

RuleSet ruleset_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != 1) raise(ErrorCode::ParseError, "unsupported rules schema version");
    RuleSet rs;
    rs.variables = j.at("variables").get<std::vector<std::string>>();
    for (const auto& r : j.at("rules")) {
      rs.rules.push_back(rule_from_json(r));
      for (const auto& p : rs.rules.back().condition)
        for (auto i : p.feature.indices)
          if (i >= rs.variables.size()) raise(ErrorCode::ParseError, "feature index out of range");
    }
    const auto def = j.at("default").get<std::string>();
    if (def != "pass" && def != "fail") raise(ErrorCode::ParseError, "default must be pass or fail");
    rs.default_prediction = def == "fail" ? Verdict::Fail : Verdict::Pass;
    return rs;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::ParseError, std::string("malformed rules document: ") + e.what());
  }
}

namespace {

std::string_view op_symbol(Op op) {
  switch (op) {
    case Op::Le: return "≤";
    case Op::Gt: return ">";
    case Op::Ge: return "≥";
    case Op::Lt: return "<";
  }
  return "?";
}

std::string constant_text(const Predicate& p, const std::vector<ReferenceValue>& refs) {
  char buf[64];
  if (p.feature.weights.empty()) {
    for (const auto& ref : refs) {
      auto idx = ref.indices;
      std::sort(idx.begin(), idx.end());
      if (idx == p.feature.indices && ref.value != 0.0) {
        std::snprintf(buf, sizeof buf, "%.0f%%·%s", 100.0 * p.constant / ref.value, ref.label.c_str());
        return buf;
      }
    }
  }
  std::snprintf(buf, sizeof buf, "%.4g", p.constant);
  return buf;
}

}  // namespace

std::string render(const Rule& r, const std::vector<ReferenceValue>& refs) {
  std::string out = "IF ";
  if (r.condition.empty()) out += "TRUE";
  for (std::size_t k = 0; k < r.condition.size(); ++k) {
    const auto& p = r.condition[k];
    if (k) out += " ∧ ";
    out += p.feature.name;
    out += " ";
    out += op_symbol(p.op);
    out += " ";
    out += constant_text(p, refs);
  }
  out += r.prediction == Verdict::Fail ? " THEN FAIL" : " THEN PASS";
  return out;
}

std::string render(const RuleSet& rs, const std::vector<ReferenceValue>& refs) {
  std::ostringstream os;
  for (const auto& r : rs.rules) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "  [confidence %zu/%zu]", r.correct, r.support);
    os << render(r, refs) << buf << "\n";
  }
  os << "ELSE " << (rs.default_prediction == Verdict::Fail ? "FAIL" : "PASS") << "\n";
  return os.str();
}

}  // namespace failscope
