#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace failscope {

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t hash_tag(std::string_view tag) noexcept;

// Seeded generator with platform-independent conversions. The standard
// distributions are implementation-defined, so none of them are used here.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const noexcept { return seed_; }

  /// Independent stream derived from this generator's seed.
  Rng split(std::uint64_t stream) const { return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x9e37u))); }
  Rng split(std::string_view tag) const { return split(hash_tag(tag)); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), n > 0.
  std::size_t below(std::size_t n);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    shuffle(idx);
    return idx;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace failscope
