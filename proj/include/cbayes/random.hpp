#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace cbayes {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives an independent child seed from a parent seed and a stream label.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) noexcept {
  return mix64(mix64(parent) ^ mix64(label + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b) noexcept {
  return derive_seed(derive_seed(parent, a), b);
}

/// Counter-based generator: the n-th output is a pure function of (key, n).
///
/// Any stream can be reconstructed from its key alone, which is what lets a
/// field sample grow its truncation without disturbing the draws already made
/// for lower modes. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(mix64(key)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    return mix64(key_ ^ mix64(counter_++ * 0xD1B54A32D192ED03ULL));
  }

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  constexpr double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  constexpr std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Standard normal by Box-Muller (two uniforms per draw).
double standard_normal(CounterRng& rng) noexcept;

/// Uniform point on the sphere of the given radius in R^dim.
std::vector<double> uniform_on_sphere(CounterRng& rng, std::size_t dim, double radius);

/// Uniform point in the open ball of the given radius in R^dim.
std::vector<double> uniform_in_ball(CounterRng& rng, std::size_t dim, double radius);

/// Pairwise (cascade) summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values) noexcept;

}  // namespace cbayes
