#pragma once

#include <cstdint>

namespace uavnet {

enum class SeedStream : std::uint64_t {
  kEnvironment = 1,
  kInitialization = 2,
  kSampling = 3,
  kEvaluation = 4,
};

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based derivation: independent sub-seeds for each randomness source
// from one master seed.
std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index = 0);

}  // namespace uavnet
