#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace pwb {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive hash of a tuple of integers. Used as the key of every
// counter-based stream so that draws depend only on their coordinates.
constexpr std::uint64_t hash_key(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p + 0x3c6ef372fe94f82bULL));
  return h;
}

// Maps 64 random bits to a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Stateless-by-construction generator: output i is splitmix64(key, i).
// Satisfies UniformRandomBitGenerator, so it plugs into <random>
// distributions.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterEngine(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept { return splitmix64(key_ ^ splitmix64(counter_++)); }

  double uniform() noexcept { return to_unit((*this)()); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace pwb
