#pragma once

#include <span>
#include <vector>

#include "failscope/core.hpp"
#include "failscope/rng.hpp"
#include "failscope/subjects.hpp"

namespace failscope {

struct SamplerConfig {
  std::size_t initial_dataset_size = 40;  // d, even and >= 4
  std::size_t smote_k = 5;
  std::size_t adaptive_candidates = 10;
  bool adaptive = true;  // false: plain uniform sampling in preprocessing

  void validate() const;
};

TestInput sample_uniform(const InputSpace& space, Rng& rng);
std::vector<TestInput> generate_tests(const InputSpace& space, std::size_t n, Rng& rng);

/// Euclidean distance over min-max normalised reals; enumerated dimensions
/// contribute a 0/1 mismatch.
Scalar normalized_distance(const InputSpace& space, const TestInput& a, const TestInput& b);

/// Index of the candidate maximising the minimum distance to `existing`.
/// Ties go to the lower index; with no existing points the first candidate wins.
std::size_t farthest_candidate(const InputSpace& space, std::span<const TestInput> existing,
                               std::span<const TestInput> candidates);

std::vector<TestInput> adaptive_random(const InputSpace& space, std::size_t n, std::span<const TestInput> existing,
                                       std::size_t candidates_per_pick, Rng& rng);

/// base + u (neighbor - base) on real coordinates; enumerated coordinates keep the base symbol.
TestInput smote_interpolate(const InputSpace& space, const TestInput& base, const TestInput& neighbor, Scalar u);

struct SmoteSample {
  TestInput input;
  std::size_t base = 0;
  std::size_t neighbor = 0;
  Scalar u = 0.0;
};

/// Synthetic minority samples with their provenance. Bases cycle through the
/// minority rows; each neighbour is drawn from the base's k nearest minority rows.
std::vector<SmoteSample> smote_samples(const InputSpace& space, std::span<const TestInput> minority, std::size_t k,
                                       std::size_t m, Rng& rng);

std::vector<TestInput> smote(const InputSpace& space, std::span<const LabeledRow> minority_rows, std::size_t k,
                             std::size_t m, Rng& rng);

struct PreprocessResult {
  LabeledDataset dataset;
  bool truncated = false;  // budget ran out before d rows
  std::size_t smote_count = 0;
  std::size_t initial_pass = 0;
  std::size_t initial_fail = 0;
};

/// Initial dataset of d executed rows: d/2 space-filling inputs, SMOTE
/// rebalancing of the minority class (synthetic labels are discarded and the
/// inputs executed), then space-filling inputs up to d.
PreprocessResult preprocess(const Subject& s, const SamplerConfig& cfg, ExecutionBudget& budget, Rng& rng);

}  // namespace failscope
