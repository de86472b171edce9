#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hlt/numkit/rng.hpp"

namespace hlt::num {

/// 1 = action allowed, 0 = masked out.
using ActionMask = std::vector<std::uint8_t>;

struct CategoricalDraw {
    std::size_t action = 0;
    double log_prob = 0.0;
};

/// Log-softmax restricted to unmasked entries; masked entries get -inf.
/// Throws NoLegalActionError when everything is masked.
std::vector<double> masked_log_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask);

/// Shannon entropy (nats) of the masked softmax.
double masked_entropy(std::span<const double> logits, std::span<const std::uint8_t> mask);

/// Draws from the masked softmax with a single uniform; masked entries have
/// probability exactly zero.
CategoricalDraw categorical_sample(std::span<const double> logits, std::span<const std::uint8_t> mask, Rng& rng);

/// Highest-probability unmasked entry (lowest index on ties).
std::size_t masked_argmax(std::span<const double> logits, std::span<const std::uint8_t> mask);

}  // namespace hlt::num
