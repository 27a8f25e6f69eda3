#include "clipflow/rng.hpp"

#include <cmath>
#include <numbers>

namespace clipflow {

namespace {

// SplitMix64 finalizer; full-avalanche mixing of one 64-bit word.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t combine(std::uint64_t h, std::uint64_t w) { return mix64(h ^ mix64(w)); }

}  // namespace

std::uint64_t CounterRng::word(std::uint64_t counter, std::uint64_t lane) const {
  std::uint64_t h = mix64(seed_);
  h = combine(h, salt_);
  h = combine(h, step_);
  h = combine(h, counter);
  h = combine(h, lane);
  return h;
}

double CounterRng::uniform(std::uint64_t counter) const {
  // 53 mantissa bits, offset half a ulp so the result is strictly inside (0,1).
  const std::uint64_t bits = word(counter, 0);
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::gaussian(std::uint64_t counter) const {
  const double u1 = (static_cast<double>(word(counter, 0) >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = (static_cast<double>(word(counter, 1) >> 11) + 0.5) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::uniform_index(std::uint64_t counter, std::uint64_t bound) const {
  if (bound == 0) return 0;
  // Multiply-shift range reduction; bias is negligible for desk-scale bounds.
  const std::uint64_t bits = word(counter, 2);
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits) * bound) >> 64);
}

}  // namespace clipflow
