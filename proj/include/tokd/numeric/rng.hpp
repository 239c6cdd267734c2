#pragma once

#include <array>
#include <cstdint>

namespace tokd {

/// Counter-based generator (Philox4x32-10).
///
/// Output is a pure function of (seed, stream, counter): identical on every
/// platform, and any draw can be produced out of order with the `*_at`
/// accessors. Sequential calls advance an internal counter by one per draw.
class Rng {
 public:
  struct State {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t counter = 0;
    friend bool operator==(const State&, const State&) = default;
  };

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0) : state_{seed, stream, 0} {}
  explicit Rng(State state) : state_(state) {}

  /// Independent generator sharing the seed; `stream` is mixed with this stream id.
  Rng split(std::uint64_t stream) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (one block per draw).
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t u64_at(std::uint64_t index) const;
  double uniform_at(std::uint64_t index) const;
  double normal_at(std::uint64_t index) const;

  const State& state() const { return state_; }
  std::uint64_t seed() const { return state_.seed; }
  std::uint64_t stream() const { return state_.stream; }
  std::uint64_t counter() const { return state_.counter; }

  /// Raw Philox4x32-10 block.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

 private:
  std::array<std::uint32_t, 4> block_at(std::uint64_t index) const;

  State state_;
};

}  // namespace tokd
