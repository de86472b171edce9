#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hlt::num {

using Rng = std::mt19937_64;

/// Builds an independent generator from a run seed plus stream coordinates
/// (step, episode index, ...). Same inputs always give the same stream.
Rng derive_rng(std::initializer_list<std::uint64_t> coordinates);

/// Same derivation, collapsed to a 64-bit seed value.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> coordinates);

/// Uniform draw in [0, 1).
double uniform01(Rng& rng);

}  // namespace hlt::num
