#include "hlt/numkit/sampling.hpp"

#include <cmath>
#include <limits>

#include "hlt/errors.hpp"

namespace hlt::num {

std::vector<double> masked_log_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask) {
    if (logits.size() != mask.size()) throw DimensionError("logits and mask lengths differ");
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(logits[i])) throw NumericError("non-finite logit");
        if (mask[i] && logits[i] > max_logit) max_logit = logits[i];
    }
    if (max_logit == -std::numeric_limits<double>::infinity()) {
        throw NoLegalActionError("every action is masked");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (mask[i]) sum += std::exp(logits[i] - max_logit);
    }
    const double log_norm = max_logit + std::log(sum);
    std::vector<double> out(logits.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (mask[i]) out[i] = logits[i] - log_norm;
    }
    return out;
}

double masked_entropy(std::span<const double> logits, std::span<const std::uint8_t> mask) {
    const auto lp = masked_log_softmax(logits, mask);
    double h = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i) {
        if (mask[i]) h -= std::exp(lp[i]) * lp[i];
    }
    return h;
}

CategoricalDraw categorical_sample(std::span<const double> logits, std::span<const std::uint8_t> mask, Rng& rng) {
    const auto lp = masked_log_softmax(logits, mask);
    const double u = uniform01(rng);
    double cumulative = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < lp.size(); ++i) {
        if (!mask[i]) continue;
        last = i;
        cumulative += std::exp(lp[i]);
        if (u < cumulative) return {i, lp[i]};
    }
    // Rounding left the cumulative sum just below 1.
    return {last, lp[last]};
}

std::size_t masked_argmax(std::span<const double> logits, std::span<const std::uint8_t> mask) {
    if (logits.size() != mask.size()) throw DimensionError("logits and mask lengths differ");
    std::size_t best = logits.size();
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (mask[i] && (best == logits.size() || logits[i] > logits[best])) best = i;
    }
    if (best == logits.size()) throw NoLegalActionError("every action is masked");
    return best;
}

}  // namespace hlt::num
