#include "hlt/numkit/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hlt/errors.hpp"
#include "hlt/numkit/sampling.hpp"

namespace hlt::num {

DualClipTerm dual_clip_ppo_loss(double ratio, double advantage, double clip_eps, double dual_c) {
    if (!std::isfinite(ratio) || !std::isfinite(advantage) || !std::isfinite(clip_eps) || !std::isfinite(dual_c)) {
        throw NumericError("dual_clip_ppo_loss: non-finite input");
    }
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw std::invalid_argument("clip_eps must lie in (0, 1)");
    if (!(dual_c > 1.0)) throw std::invalid_argument("dual_c must exceed 1");

    if (advantage >= 0.0) {
        if (ratio <= 1.0 + clip_eps) return {-ratio * advantage, -advantage};
        return {-(1.0 + clip_eps) * advantage, 0.0};
    }
    if (ratio < 1.0 - clip_eps) return {-(1.0 - clip_eps) * advantage, 0.0};
    if (ratio <= dual_c) return {-ratio * advantage, -advantage};
    return {-dual_c * advantage, 0.0};
}

AdvantageEstimate gae_advantages(std::span<const double> rewards, std::span<const double> values,
                                 double bootstrap_value, double gamma, double lambda) {
    if (rewards.size() != values.size()) {
        throw DimensionError("gae: rewards and values have different lengths");
    }
    const std::size_t n = rewards.size();
    AdvantageEstimate out{std::vector<double>(n), std::vector<double>(n)};
    double next_value = bootstrap_value;
    double running = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double delta = rewards[t] + gamma * next_value - values[t];
        running = delta + gamma * lambda * running;
        out.advantages[t] = running;
        out.returns[t] = running + values[t];
        next_value = values[t];
    }
    return out;
}

PolicySampleLoss ppo_sample_loss(std::span<const double> logits, std::span<const std::uint8_t> mask,
                                 std::size_t action, double old_log_prob, double advantage,
                                 const PpoCoefficients& coefficients) {
    if (action >= logits.size() || !mask[action]) throw DimensionError("ppo: action outside the legal set");
    const auto log_probs = masked_log_softmax(logits, mask);
    const std::size_t n = logits.size();
    std::vector<double> probs(n, 0.0);
    double entropy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        probs[i] = std::exp(log_probs[i]);
        entropy -= probs[i] * log_probs[i];
    }
    PolicySampleLoss out;
    out.ratio = std::exp(log_probs[action] - old_log_prob);
    const auto term = dual_clip_ppo_loss(out.ratio, advantage, coefficients.clip_eps, coefficients.dual_c);
    out.surrogate = term.loss;
    out.entropy = entropy;
    out.loss = term.loss - coefficients.entropy_coef * entropy;
    out.clipped = term.grad_ratio == 0.0 && advantage != 0.0;
    out.grad_logits.assign(n, 0.0);
    // d log p_a / d z_i = [i == a] - p_i ;  d H / d z_i = -p_i (log p_i + H)
    const double g_logp = term.grad_ratio * out.ratio;
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        const double dlogp = (i == action ? 1.0 : 0.0) - probs[i];
        const double dentropy = -probs[i] * (log_probs[i] + entropy);
        out.grad_logits[i] = g_logp * dlogp - coefficients.entropy_coef * dentropy;
    }
    return out;
}

}  // namespace hlt::num
