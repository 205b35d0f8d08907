// Counter-based random streams.
//
// A stream is keyed by (seed, stream id); draw k of a stream is a pure
// function of (key, k). Substreams are therefore independent of how work is
// scheduled across threads.
#pragma once

#include <concepts>
#include <cstdint>

#include "seqstop/special.hpp"

namespace seqstop {

template <class R>
concept RandomStream = requires(R& r) {
  { r.uniform() } -> std::convertible_to<double>;
  { r.normal() } -> std::convertible_to<double>;
};

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_(mix64(seed ^ mix64(stream_id + 0x9e3779b97f4a7c15ULL))) {}

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  // Standard normal deviate by inversion.
  double normal() { return special::Phi_inverse(uniform()); }

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace seqstop
