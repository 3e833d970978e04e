#include "failscope/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace failscope {

void SamplerConfig::validate() const {
  if (initial_dataset_size < 4 || initial_dataset_size % 2 != 0)
    raise(ErrorCode::InvalidConfig, "initial_dataset_size must be even and >= 4");
  if (smote_k < 1) raise(ErrorCode::InvalidConfig, "smote_k must be >= 1");
  if (adaptive_candidates < 1) raise(ErrorCode::InvalidConfig, "adaptive_candidates must be >= 1");
}

TestInput sample_uniform(const InputSpace& space, Rng& rng) {
  TestInput t(static_cast<Eigen::Index>(space.size()));
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& v = space[i];
    if (v.is_real()) {
      const auto& r = v.range();
      t[static_cast<Eigen::Index>(i)] = std::min(r.upper, rng.uniform(r.lower, r.upper));
    } else {
      t[static_cast<Eigen::Index>(i)] = static_cast<Scalar>(rng.below(v.symbols().size()));
    }
  }
  return t;
}

std::vector<TestInput> generate_tests(const InputSpace& space, std::size_t n, Rng& rng) {
  std::vector<TestInput> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_uniform(space, rng));
  return out;
}

Scalar normalized_distance(const InputSpace& space, const TestInput& a, const TestInput& b) {
  Scalar acc = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const auto& v = space[i];
    if (v.is_real()) {
      const Scalar d = (a[k] - b[k]) / v.range().width();
      acc += d * d;
    } else if (a[k] != b[k]) {
      acc += 1.0;
    }
  }
  return std::sqrt(acc);
}

std::size_t farthest_candidate(const InputSpace& space, std::span<const TestInput> existing,
                               std::span<const TestInput> candidates) {
  if (candidates.empty()) raise(ErrorCode::InvalidInput, "no candidates to choose from");
  if (existing.empty()) return 0;
  std::size_t best = 0;
  Scalar best_dist = -1.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    Scalar nearest = std::numeric_limits<Scalar>::infinity();
    for (const auto& e : existing) {
      nearest = std::min(nearest, normalized_distance(space, candidates[c], e));
      if (nearest <= best_dist) break;  // cannot beat the incumbent
    }
    if (nearest > best_dist) {
      best_dist = nearest;
      best = c;
    }
  }
  return best;
}

std::vector<TestInput> adaptive_random(const InputSpace& space, std::size_t n, std::span<const TestInput> existing,
                                       std::size_t candidates_per_pick, Rng& rng) {
  if (candidates_per_pick < 1) raise(ErrorCode::InvalidConfig, "candidates_per_pick must be >= 1");
  std::vector<TestInput> pool(existing.begin(), existing.end());
  std::vector<TestInput> picked;
  picked.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto candidates = generate_tests(space, candidates_per_pick, rng);
    const std::size_t best = farthest_candidate(space, pool, candidates);
    pool.push_back(candidates[best]);
    picked.push_back(std::move(candidates[best]));
  }
  return picked;
}

TestInput smote_interpolate(const InputSpace& space, const TestInput& base, const TestInput& neighbor, Scalar u) {
  TestInput out = base;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!space[i].is_real()) continue;
    const auto k = static_cast<Eigen::Index>(i);
    const auto& r = space[i].range();
    out[k] = std::clamp(base[k] + u * (neighbor[k] - base[k]), r.lower, r.upper);
  }
  return out;
}

namespace {

Scalar real_distance(const InputSpace& space, const TestInput& a, const TestInput& b) {
  Scalar acc = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!space[i].is_real()) continue;
    const auto k = static_cast<Eigen::Index>(i);
    const Scalar d = (a[k] - b[k]) / space[i].range().width();
    acc += d * d;
  }
  return acc;
}

}  // namespace

std::vector<SmoteSample> smote_samples(const InputSpace& space, std::span<const TestInput> minority, std::size_t k,
                                       std::size_t m, Rng& rng) {
  const std::size_t n = minority.size();
  if (n < 2 || k < 1 || k > n - 1)
    raise(ErrorCode::TooFewMinority,
          "SMOTE needs >= 2 minority rows and 1 <= k <= |minority| - 1 (got " + std::to_string(n) + ", k=" +
              std::to_string(k) + ")");

  // k nearest minority neighbours per row, ties by index.
  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<Scalar, std::size_t>> d;
    d.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d.emplace_back(real_distance(space, minority[i], minority[j]), j);
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    for (std::size_t q = 0; q < k; ++q) neighbours[i].push_back(d[q].second);
  }

  std::vector<SmoteSample> out;
  out.reserve(m);
  for (std::size_t s = 0; s < m; ++s) {
    SmoteSample sample;
    sample.base = s % n;
    sample.neighbor = neighbours[sample.base][rng.below(k)];
    sample.u = rng.uniform();
    sample.input = smote_interpolate(space, minority[sample.base], minority[sample.neighbor], sample.u);
    out.push_back(std::move(sample));
  }
  return out;
}

std::vector<TestInput> smote(const InputSpace& space, std::span<const LabeledRow> minority_rows, std::size_t k,
                             std::size_t m, Rng& rng) {
  std::vector<TestInput> minority;
  minority.reserve(minority_rows.size());
  for (const auto& r : minority_rows) minority.push_back(r.input);
  std::vector<TestInput> out;
  for (auto& s : smote_samples(space, minority, k, m, rng)) out.push_back(std::move(s.input));
  return out;
}

PreprocessResult preprocess(const Subject& s, const SamplerConfig& cfg, ExecutionBudget& budget, Rng& rng) {
  cfg.validate();
  PreprocessResult result{LabeledDataset(s.space)};
  const std::size_t half = cfg.initial_dataset_size / 2;
  Rng initial_rng = rng.split("preprocess.initial");
  Rng smote_rng = rng.split("preprocess.smote");
  Rng fill_rng = rng.split("preprocess.fill");

  std::vector<TestInput> seen;
  auto run = [&](const std::vector<TestInput>& inputs) {
    for (const auto& t : inputs) {
      if (!budget.can_execute()) {
        result.truncated = true;
        return false;
      }
      const Scalar f = execute(s, t, budget);
      result.dataset.append({t, f, RowSource::Executed});
      seen.push_back(t);
    }
    return true;
  };
  auto space_filling = [&](std::size_t n, Rng& r) {
    return cfg.adaptive ? adaptive_random(s.space, n, seen, cfg.adaptive_candidates, r) : generate_tests(s.space, n, r);
  };

  if (!run(space_filling(half, initial_rng))) return result;

  const auto& rows = result.dataset.rows();
  result.initial_pass = result.dataset.count(Verdict::Pass);
  result.initial_fail = result.dataset.count(Verdict::Fail);
  const Verdict minority_label = result.initial_fail <= result.initial_pass ? Verdict::Fail : Verdict::Pass;
  const std::size_t minor = std::min(result.initial_pass, result.initial_fail);
  const std::size_t major = std::max(result.initial_pass, result.initial_fail);
  std::size_t m = std::min(major - minor, half);

  if (m > 0 && minor >= 2) {
    std::vector<LabeledRow> minority;
    for (const auto& r : rows)
      if (r.label() == minority_label) minority.push_back(r);
    const std::size_t k = std::min(cfg.smote_k, minor - 1);
    // Labels implied by SMOTE are never kept: every synthetic input is executed.
    auto synthetic = smote(s.space, minority, k, m, smote_rng);
    result.smote_count = synthetic.size();
    if (!run(synthetic)) return result;
  } else {
    m = 0;
  }

  run(space_filling(half - result.smote_count, fill_rng));
  return result;
}

}  // namespace failscope
