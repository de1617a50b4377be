#pragma once

#include <cstdint>

namespace fdplab {

/// Counter-based uniform stream. Each draw is a pure function of
/// (seed, replicate, index), so samples do not depend on evaluation order
/// or on how replicates are split across workers.
class CounterStream {
public:
  constexpr CounterStream(std::uint64_t seed, std::uint64_t replicate) noexcept
      : key_(mix(mix(seed ^ 0x6a09e667f3bcc909ULL) + replicate * kGolden)) {}

  constexpr std::uint64_t bits(std::uint64_t index) const noexcept {
    return mix(key_ + (index + 1) * kGolden);
  }

  /// Uniform on [0,1) with 53 random bits.
  constexpr double uniform(std::uint64_t index) const noexcept {
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
  }

  // SplitMix64 finalizer.
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
};

}  // namespace fdplab
