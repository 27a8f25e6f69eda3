#pragma once

#include <cstdint>

namespace clipflow {

// Disjoint stream domains; every call site draws from its own salt so
// streams never collide across uses of the same (seed, step).
enum class StreamSalt : std::uint64_t {
  kWeightInit = 1,
  kGradientNoise = 2,
  kSubsample = 3,
  kJlProjection = 4,
  kSgldNoise = 5,
  kDataset = 6,
  kGeneric = 7,
};

// Counter-based random stream: every value is a pure function of
// (seed, salt, step, counter), so parallel callers and paired runs with
// identical seeds see identical draws regardless of execution order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, StreamSalt salt, std::uint64_t step = 0)
      : seed_(seed), salt_(static_cast<std::uint64_t>(salt)), step_(step) {}

  // Uniform in the open interval (0, 1).
  double uniform(std::uint64_t counter) const;

  // Standard normal via the Box-Muller cosine branch; one value per counter.
  double gaussian(std::uint64_t counter) const;

  // Uniform integer in [0, bound).
  std::uint64_t uniform_index(std::uint64_t counter, std::uint64_t bound) const;

  std::uint64_t word(std::uint64_t counter, std::uint64_t lane) const;

 private:
  std::uint64_t seed_;
  std::uint64_t salt_;
  std::uint64_t step_;
};

}  // namespace clipflow
