#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace relembed {

using Rng = std::mt19937_64;

/// Stream seed for a named component: splitmix64(root ^ fnv1a(component) + index).
///
/// All randomness in a run flows from one root seed through this function,
/// so independent components never share a stream.
std::uint64_t derive_seed(std::uint64_t root, std::string_view component, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view component, std::uint64_t index = 0) {
  return Rng(derive_seed(root, component, index));
}

/// Uniform integer in [0, n); n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace relembed
