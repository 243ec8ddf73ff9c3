#pragma once

// Counter-based random streams. A stream is keyed by (seed, tags...) so any
// worker can regenerate the draws of any cell without shared state.

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace cte {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t derive_key(std::uint64_t seed,
                                          std::initializer_list<std::uint64_t> tags) {
  std::uint64_t k = splitmix64(seed);
  for (std::uint64_t t : tags) k = splitmix64(k ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return k;
}

// Stateless mapping counter -> 64 random bits, wrapped with a cursor.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0) : key_(key) {}
  CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags)
      : key_(derive_key(seed, tags)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    return splitmix64(key_ ^ splitmix64(counter_++ * 0xd1b54a32d192ed03ULL));
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  std::uint64_t uniform_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace cte
