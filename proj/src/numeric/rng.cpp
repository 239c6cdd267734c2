#include "tokd/numeric/rng.hpp"

#include <cmath>
#include <numbers>

namespace tokd {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double box_muller(std::uint64_t a, std::uint64_t b) {
  const double u1 = 1.0 - to_unit(a);  // (0, 1]
  const double u2 = to_unit(b);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::array<std::uint32_t, 4> Rng::block(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<std::uint32_t, 4> Rng::block_at(std::uint64_t index) const {
  return block({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                static_cast<std::uint32_t>(state_.stream), static_cast<std::uint32_t>(state_.stream >> 32)},
               {static_cast<std::uint32_t>(state_.seed), static_cast<std::uint32_t>(state_.seed >> 32)});
}

Rng Rng::split(std::uint64_t stream) const { return Rng(state_.seed, splitmix(state_.stream ^ splitmix(stream))); }

std::uint64_t Rng::u64_at(std::uint64_t index) const {
  const auto b = block_at(index);
  return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
}

double Rng::uniform_at(std::uint64_t index) const { return to_unit(u64_at(index)); }

double Rng::normal_at(std::uint64_t index) const {
  const auto b = block_at(index);
  return box_muller((static_cast<std::uint64_t>(b[1]) << 32) | b[0], (static_cast<std::uint64_t>(b[3]) << 32) | b[2]);
}

std::uint64_t Rng::next_u64() { return u64_at(state_.counter++); }

double Rng::uniform() { return uniform_at(state_.counter++); }

double Rng::normal() { return normal_at(state_.counter++); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

}  // namespace tokd
