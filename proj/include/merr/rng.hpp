#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace merr {

/// Stream families; part of every derived key so streams never collide
/// across roles.
enum class StreamKind : std::uint64_t {
  meta = 1,
  points = 2,
  label_noise = 3,
  linear_map = 4,
  fold_shuffle = 5,
  pair_sample = 6,
  cell = 7,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Hash of a sequence of 64-bit words; order-sensitive.
std::uint64_t derive_key(std::initializer_list<std::uint64_t> words);

inline std::uint64_t derive_key(std::uint64_t seed, StreamKind kind,
                                std::initializer_list<std::uint64_t> indices) {
  std::uint64_t h = derive_key({seed, static_cast<std::uint64_t>(kind)});
  for (std::uint64_t i : indices) h = derive_key({h, i});
  return h;
}

/// Counter-based generator: the n-th output is a pure function of (key, n),
/// so any stream can be regenerated independently of every other stream.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ ^ splitmix64(counter_++)); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace merr
