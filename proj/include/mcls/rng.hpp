#pragma once

#include <cstdint>
#include <limits>

namespace mcls {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Key of the independent stream `stream` under `seed`.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed ^ 0x6A09E667F3BCC909ULL) + (stream + 1) * kGolden);
}

/// 53-bit uniform in [0,1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// 52-bit midpoint uniform in the open interval (0,1); 53 bits would round
/// the top value to 1.
constexpr double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Counter-based access to one stream: the value at `counter` depends only on
/// (key, counter), so any draw can be recomputed without replaying the stream.
class CounterRng {
public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(stream_key(seed, stream)) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(key_ + (counter + 1) * kGolden);
  }
  constexpr double uniform(std::uint64_t counter) const noexcept { return to_unit(bits(counter)); }
  constexpr double open_uniform(std::uint64_t counter) const noexcept {
    return to_open_unit(bits(counter));
  }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t counter, std::uint64_t bound) const noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits(counter)) * bound) >> 64);
  }

private:
  std::uint64_t key_;
};

/// Sequential engine over one stream; satisfies UniformRandomBitGenerator.
/// The k-th output equals CounterRng(seed, stream).bits(k).
class StreamEngine {
public:
  using result_type = std::uint64_t;

  constexpr StreamEngine(std::uint64_t seed, std::uint64_t stream) noexcept
      : state_(stream_key(seed, stream)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += kGolden;
    return mix64(state_);
  }
  constexpr double uniform() noexcept { return to_unit((*this)()); }
  constexpr double open_uniform() noexcept { return to_open_unit((*this)()); }
  std::uint64_t below(std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * bound) >> 64);
  }

private:
  std::uint64_t state_;
};

}  // namespace mcls
