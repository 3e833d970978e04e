#include "failscope/subjects.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace failscope {

namespace {

template <typename T>
T param(const nlohmann::json& p, const char* key, T fallback) {
  if (p.is_object() && p.contains(key)) return p.at(key).get<T>();
  return fallback;
}

std::vector<InputVariable> real_variables(const std::string& prefix, std::size_t n, Scalar lo, Scalar hi) {
  std::vector<InputVariable> vars;
  vars.reserve(n);
  for (std::size_t i = 0; i < n; ++i) vars.push_back(InputVariable::real(prefix + std::to_string(i + 1), lo, hi));
  return vars;
}

void require_bounds(const Subject& s) {
  if (!(s.bounds.lower < 0.0 && s.bounds.upper > 0.0))
    raise(ErrorCode::InvalidConfig, "subject '" + s.name + "' must admit both pass and fail fitness values");
  if (!(s.exec_cost > 0.0)) raise(ErrorCode::InvalidConfig, "subject '" + s.name + "' needs exec_cost > 0");
}

}  // namespace

Scalar Subject::evaluate(const TestInput& t) const {
  space.validate(t);
  return bounds.clamp(fitness_fn(t));
}

Scalar execute(const Subject& s, const TestInput& t, ExecutionBudget& budget) {
  s.space.validate(t);
  budget.charge_execution();
  return s.bounds.clamp(s.fitness_fn(t));
}

Verdict ground_truth_verdict(const Subject& s, const TestInput& t) {
  if (!s.ground_truth) raise(ErrorCode::NoGroundTruth, "subject '" + s.name + "' has no analytic verdict");
  s.space.validate(t);
  return s.ground_truth(t);
}

// ------------------------------------------------------------------ sum_cap
// Cumulative-load analog: fails once the weighted load on a hidden subset of
// channels exceeds a cap.

Subject make_sum_cap(const nlohmann::json& p) {
  const auto n = param<std::size_t>(p, "n", 8);
  const auto lo = param<Scalar>(p, "lower", 0.0);
  const auto hi = param<Scalar>(p, "upper", 10.0);
  const auto cap = param<Scalar>(p, "cap", 15.0);
  auto subset = param<std::vector<std::size_t>>(p, "subset", {4, 5, 6});
  auto weights = param<std::vector<Scalar>>(p, "weights", std::vector<Scalar>(subset.size(), 1.0));
  if (subset.empty() || weights.size() != subset.size())
    raise(ErrorCode::InvalidConfig, "sum_cap: subset and weights must be non-empty and aligned");
  for (auto i : subset)
    if (i >= n) raise(ErrorCode::InvalidConfig, "sum_cap: subset index out of range");

  Scalar min_load = 0.0;
  Scalar max_load = 0.0;
  for (std::size_t k = 0; k < subset.size(); ++k) {
    min_load += std::min(weights[k] * lo, weights[k] * hi);
    max_load += std::max(weights[k] * lo, weights[k] * hi);
  }

  Subject s;
  s.name = "sum_cap";
  s.space = InputSpace(real_variables("v", n, lo, hi));
  s.fitness_fn = [subset, weights, cap](const TestInput& t) {
    Scalar load = 0.0;
    for (std::size_t k = 0; k < subset.size(); ++k) load += weights[k] * t[static_cast<Eigen::Index>(subset[k])];
    return cap - load;
  };
  s.ground_truth = [subset, weights, cap](const TestInput& t) {
    Scalar load = 0.0;
    for (std::size_t k = 0; k < subset.size(); ++k) load += weights[k] * t[static_cast<Eigen::Index>(subset[k])];
    return load > cap ? Verdict::Fail : Verdict::Pass;
  };
  s.bounds = {cap - max_load, cap - min_load};
  s.exec_cost = param<Scalar>(p, "exec_cost", 30.0);
  s.sum_features = true;
  s.references.push_back({subset, "cap", cap});
  s.params = {{"n", n}, {"lower", lo}, {"upper", hi}, {"cap", cap}, {"subset", subset}, {"weights", weights},
              {"exec_cost", s.exec_cost}};
  require_bounds(s);
  return s;
}

// ------------------------------------------------------------ threshold_mix

Subject make_threshold_mix(const nlohmann::json& p) {
  const auto lo = param<Scalar>(p, "lower", 0.0);
  const auto hi = param<Scalar>(p, "upper", 10.0);
  auto thresholds = param<std::vector<Scalar>>(p, "thresholds", {8.0, 7.0, 9.0, 6.0});
  if (thresholds.empty()) raise(ErrorCode::InvalidConfig, "threshold_mix: thresholds must be non-empty");
  const std::size_t n = thresholds.size();

  Subject s;
  s.name = "threshold_mix";
  s.space = InputSpace(real_variables("v", n, lo, hi));
  s.fitness_fn = [thresholds](const TestInput& t) {
    Scalar margin = thresholds[0] - t[0];
    for (std::size_t i = 1; i < thresholds.size(); ++i)
      margin = std::min(margin, thresholds[i] - t[static_cast<Eigen::Index>(i)]);
    return margin;
  };
  s.ground_truth = [thresholds](const TestInput& t) {
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      if (t[static_cast<Eigen::Index>(i)] > thresholds[i]) return Verdict::Fail;
    return Verdict::Pass;
  };
  Scalar upper = thresholds[0] - lo;
  Scalar lower = thresholds[0] - hi;
  for (Scalar thr : thresholds) {
    upper = std::min(upper, thr - lo);
    lower = std::min(lower, thr - hi);
  }
  s.bounds = {lower, upper};
  s.exec_cost = param<Scalar>(p, "exec_cost", 30.0);
  for (std::size_t i = 0; i < n; ++i) s.references.push_back({{i}, "thresh" + std::to_string(i + 1), thresholds[i]});
  s.params = {{"lower", lo}, {"upper", hi}, {"thresholds", thresholds}, {"exec_cost", s.exec_cost}};
  require_bounds(s);
  return s;
}

// --------------------------------------------------------------------- band
// Passing region is a ball (l2) or box (linf) around a center; everything
// outside fails.

Subject make_band(const nlohmann::json& p) {
  const auto lo = param<Scalar>(p, "lower", 0.0);
  const auto hi = param<Scalar>(p, "upper", 10.0);
  auto center = param<std::vector<Scalar>>(p, "center", {6.0, 4.0});
  const auto radius = param<Scalar>(p, "radius", 3.0);
  const auto norm = param<std::string>(p, "norm", "linf");
  if (norm != "linf" && norm != "l2") raise(ErrorCode::InvalidConfig, "band: norm must be 'linf' or 'l2'");
  if (center.empty() || !(radius > 0.0)) raise(ErrorCode::InvalidConfig, "band: needs a center and radius > 0");
  const std::size_t n = center.size();
  const bool linf = norm == "linf";

  auto distance = [center, linf](const TestInput& t) {
    Scalar acc = 0.0;
    for (std::size_t i = 0; i < center.size(); ++i) {
      const Scalar d = std::abs(t[static_cast<Eigen::Index>(i)] - center[i]);
      acc = linf ? std::max(acc, d) : acc + d * d;
    }
    return linf ? acc : std::sqrt(acc);
  };

  Subject s;
  s.name = "band";
  s.space = InputSpace(real_variables("v", n, lo, hi));
  s.fitness_fn = [distance, radius](const TestInput& t) { return radius - distance(t); };
  s.ground_truth = [distance, radius](const TestInput& t) {
    return distance(t) > radius ? Verdict::Fail : Verdict::Pass;
  };
  TestInput far(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    far[static_cast<Eigen::Index>(i)] = std::abs(lo - center[i]) > std::abs(hi - center[i]) ? lo : hi;
  s.bounds = {radius - distance(far), radius};
  s.exec_cost = param<Scalar>(p, "exec_cost", 30.0);
  s.params = {{"lower", lo}, {"upper", hi}, {"center", center}, {"radius", radius}, {"norm", norm},
              {"exec_cost", s.exec_cost}};
  require_bounds(s);
  return s;
}

// ---------------------------------------------------------- step_controller
// First-order lag y' = k (u - y) tracking a piecewise-constant reference built
// from equally spaced control points; overshoot is how far the output sits
// above the reference.

StepResponse simulate_step_controller(const TestInput& control_points, Scalar gain_dt, std::size_t steps) {
  StepResponse out;
  const auto m = static_cast<std::size_t>(control_points.size());
  out.reference.reserve(steps);
  out.output.reserve(steps);
  Scalar y = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t seg = std::min(m - 1, k * m / steps);
    const Scalar r = control_points[static_cast<Eigen::Index>(seg)];
    y += gain_dt * (r - y);
    out.reference.push_back(r);
    out.output.push_back(y);
    out.max_overshoot = std::max(out.max_overshoot, y - r);
  }
  return out;
}

Subject make_step_controller(const nlohmann::json& p) {
  const auto m = param<std::size_t>(p, "control_points", 4);
  const auto lo = param<Scalar>(p, "lower", 0.0);
  const auto hi = param<Scalar>(p, "upper", 10.0);
  const auto gain_dt = param<Scalar>(p, "gain_dt", 0.2);
  const auto steps = param<std::size_t>(p, "steps", 100);
  const auto limit = param<Scalar>(p, "overshoot_limit", 4.0);
  if (m < 1 || steps < m || !(gain_dt > 0.0 && gain_dt <= 1.0) || !(limit > 0.0))
    raise(ErrorCode::InvalidConfig, "step_controller: invalid parameters");

  Subject s;
  s.name = "step_controller";
  s.space = InputSpace(real_variables("u", m, lo, hi));
  s.fitness_fn = [gain_dt, steps, limit](const TestInput& t) {
    return limit - simulate_step_controller(t, gain_dt, steps).max_overshoot;
  };
  s.ground_truth = [gain_dt, steps, limit](const TestInput& t) {
    return simulate_step_controller(t, gain_dt, steps).max_overshoot > limit ? Verdict::Fail : Verdict::Pass;
  };
  s.bounds = {limit - (hi - lo), limit};
  s.exec_cost = param<Scalar>(p, "exec_cost", 30.0);
  s.references.push_back({{}, "limit", limit});
  s.params = {{"control_points", m}, {"lower", lo},     {"upper", hi},
              {"gain_dt", gain_dt},  {"steps", steps}, {"overshoot_limit", limit},
              {"exec_cost", s.exec_cost}};
  require_bounds(s);
  return s;
}

// -------------------------------------------------------------- xor_regions

Subject make_xor_regions(const nlohmann::json& p) {
  const auto lo = param<Scalar>(p, "lower", 0.0);
  const auto hi = param<Scalar>(p, "upper", 10.0);
  using Box = std::vector<std::vector<Scalar>>;  // per dimension [lo, hi]
  auto boxes = param<std::vector<Box>>(p, "boxes", {Box{{1.0, 4.0}, {1.0, 4.0}}, Box{{6.0, 9.0}, {6.0, 9.0}}});
  if (boxes.empty()) raise(ErrorCode::InvalidConfig, "xor_regions: needs at least one box");
  const std::size_t n = boxes.front().size();
  Scalar max_half_width = 0.0;
  for (const auto& b : boxes) {
    if (b.size() != n) raise(ErrorCode::InvalidConfig, "xor_regions: boxes must share a dimension");
    Scalar half = std::numeric_limits<Scalar>::infinity();
    for (const auto& side : b) {
      if (side.size() != 2 || !(side[0] < side[1])) raise(ErrorCode::InvalidConfig, "xor_regions: bad box side");
      half = std::min(half, (side[1] - side[0]) / 2.0);
    }
    max_half_width = std::max(max_half_width, half);
  }

  // Positive inside a box, negative outside.
  auto depth = [boxes](const TestInput& t) {
    Scalar best = -std::numeric_limits<Scalar>::infinity();
    for (const auto& b : boxes) {
      Scalar m = std::numeric_limits<Scalar>::infinity();
      for (std::size_t i = 0; i < b.size(); ++i) {
        const Scalar v = t[static_cast<Eigen::Index>(i)];
        m = std::min({m, v - b[i][0], b[i][1] - v});
      }
      best = std::max(best, m);
    }
    return best;
  };

  Subject s;
  s.name = "xor_regions";
  s.space = InputSpace(real_variables("v", n, lo, hi));
  s.fitness_fn = [depth](const TestInput& t) { return -depth(t); };
  s.ground_truth = [boxes](const TestInput& t) {
    for (const auto& b : boxes) {
      bool inside = true;
      for (std::size_t i = 0; i < b.size() && inside; ++i) {
        const Scalar v = t[static_cast<Eigen::Index>(i)];
        inside = v > b[i][0] && v < b[i][1];
      }
      if (inside) return Verdict::Fail;
    }
    return Verdict::Pass;
  };
  s.bounds = {-max_half_width, hi - lo};
  s.exec_cost = param<Scalar>(p, "exec_cost", 30.0);
  s.params = {{"lower", lo}, {"upper", hi}, {"boxes", boxes}, {"exec_cost", s.exec_cost}};
  require_bounds(s);
  return s;
}

// ------------------------------------------------------------------ catalog

Subject make_subject(const std::string& name, const nlohmann::json& params) {
  if (name == "sum_cap") return make_sum_cap(params);
  if (name == "threshold_mix") return make_threshold_mix(params);
  if (name == "band") return make_band(params);
  if (name == "step_controller") return make_step_controller(params);
  if (name == "xor_regions") return make_xor_regions(params);
  raise(ErrorCode::InvalidConfig, "unknown subject '" + name + "'");
}

SubjectCatalog builtin_catalog(const nlohmann::json& overrides) {
  SubjectCatalog catalog;
  for (const char* name : {"sum_cap", "threshold_mix", "band", "step_controller", "xor_regions"}) {
    const nlohmann::json params = overrides.is_object() && overrides.contains(name) ? overrides.at(name) : nlohmann::json{};
    catalog.emplace(name, make_subject(name, params));
  }
  return catalog;
}

}  // namespace failscope
