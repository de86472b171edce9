#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hlt::num {

struct DualClipTerm {
    double loss = 0.0;
    double grad_ratio = 0.0;  ///< d loss / d ratio (subgradient; zero on clipped pieces)
};

/// Dual-clip PPO surrogate for one sample.
///
///   A >= 0: -min(r A, clip(r, 1-eps, 1+eps) A)
///   A <  0: -max(min(r A, clip(r, 1-eps, 1+eps) A), c A)
///
/// Requires 0 < clip_eps < 1 and dual_c > 1; non-finite inputs throw NumericError.
DualClipTerm dual_clip_ppo_loss(double ratio, double advantage, double clip_eps, double dual_c);

struct AdvantageEstimate {
    std::vector<double> advantages;
    std::vector<double> returns;
};

/// GAE(lambda) over one trajectory. `bootstrap_value` is V(s_T) after the last
/// step (0 for a terminal state). returns = advantages + values.
AdvantageEstimate gae_advantages(std::span<const double> rewards, std::span<const double> values,
                                 double bootstrap_value, double gamma, double lambda);

struct PpoCoefficients {
    double clip_eps = 0.2;
    double dual_c = 3.0;
    double entropy_coef = 0.01;
};

struct PolicySampleLoss {
    double loss = 0.0;       ///< surrogate - entropy_coef * entropy
    double surrogate = 0.0;
    double entropy = 0.0;
    double ratio = 1.0;
    bool clipped = false;  ///< surrogate gradient zeroed by a clip piece
    std::vector<double> grad_logits;
};

/// Per-sample PPO objective and its gradient with respect to the logits of a
/// masked categorical policy.
PolicySampleLoss ppo_sample_loss(std::span<const double> logits, std::span<const std::uint8_t> mask,
                                 std::size_t action, double old_log_prob, double advantage,
                                 const PpoCoefficients& coefficients);

}  // namespace hlt::num
