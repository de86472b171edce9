#pragma once

// Finite-difference check of policy_loss_and_grad on small random groups.
// Shared by the unit tests and the acceptance binary.

#include <algorithm>

#include "hlt/numkit/rng.hpp"
#include "hlt/policy/policy_group.hpp"
#include "support/finite_diff.hpp"

namespace hlt::testing {

struct PolicyGradErrors {
    double trunk = 0.0;
    double hyper = 0.0;
};

inline policy::GroupShape small_shape() { return {{"a", "b", "c"}, 7, 5}; }

/// Batch of `rows` samples for `type` with two distinct team-info vectors.
/// Old log-probs sit within 5% of the current ones so ratios stay away from
/// the clip kinks, where central differences are meaningless.
inline policy::PolicyBatch random_policy_batch(const policy::PolicyGroup& group, int type, std::size_t rows,
                                               num::Rng& rng) {
    const auto& shape = group.shape();
    policy::PolicyBatch batch;
    batch.observations = num::Tensor({rows, shape.obs_dim});
    for (double& x : batch.observations.data()) x = 2.0 * num::uniform01(rng) - 1.0;
    const int n = group.num_types();
    batch.team_infos.push_back(policy::build_frozen_team_info(type, n).concat());
    const int past = (type + 1) % n;
    auto mixed = policy::MixedAssignment::with_past(n, past, 0, 1);
    batch.team_infos.push_back(policy::build_team_info(type, mixed, 0.2 + 0.6 * num::uniform01(rng)).concat());
    for (std::size_t r = 0; r < rows; ++r) {
        batch.team_info_keys.push_back(r % 2);
        num::ActionMask mask(shape.num_actions, 1);
        mask[rng() % shape.num_actions] = 0;
        std::vector<int> legal;
        for (std::size_t a = 0; a < mask.size(); ++a) {
            if (mask[a]) legal.push_back(static_cast<int>(a));
        }
        batch.masks.push_back(mask);
        batch.actions.push_back(legal[rng() % legal.size()]);
        batch.advantages.push_back(2.0 * num::uniform01(rng) - 1.0);

        policy::TeamInfo info{{}, {}};
        info.source_values.assign(batch.team_infos[r % 2].begin(), batch.team_infos[r % 2].begin() + n);
        info.type_one_hot.assign(batch.team_infos[r % 2].begin() + n, batch.team_infos[r % 2].end());
        const auto prepared = policy::prepare(group, type, info);
        const auto obs = batch.observations.data().subspan(r * shape.obs_dim, shape.obs_dim);
        const auto lp = num::masked_log_softmax(prepared.logits(obs), mask);
        batch.old_log_probs.push_back(lp[static_cast<std::size_t>(batch.actions.back())] +
                                      0.1 * (num::uniform01(rng) - 0.5));
    }
    return batch;
}

/// Worst relative error between analytic and central-difference gradients
/// of the summed PPO loss, split into trunk and hyper-network parameters.
inline PolicyGradErrors policy_gradient_errors(std::uint64_t seed, policy::NetworkConfig network) {
    num::Rng rng = num::derive_rng({seed, 0x9c});
    auto group = policy::PolicyGroup::create(small_shape(), network, rng);
    const int type = static_cast<int>(rng() % 3);
    const auto batch = random_policy_batch(group, type, 6, rng);
    const num::PpoCoefficients coeff;
    const double scale = 1.0 / 6.0;

    auto analytic = policy::policy_loss_and_grad(group, type, batch, coeff, scale);
    auto loss = [&] { return policy::policy_loss_and_grad(group, type, batch, coeff, scale).loss_sum * scale; };

    PolicyGradErrors err;
    const auto trunk_params = group.mutable_trunk(group.type_policy(type).trunk_index).parameters();
    const auto trunk_grads = analytic.grads.trunk.spans();
    for (std::size_t p = 0; p < trunk_params.size(); ++p) {
        const auto fd = central_difference(trunk_params[p], loss);
        err.trunk = std::max(err.trunk, relative_error(trunk_grads[p], fd));
    }
    auto& tp = group.mutable_type(type);
    for (std::size_t g = 0; g < tp.hypernets.size(); ++g) {
        const auto params = tp.hypernets[g].parameters();
        const auto grads = analytic.grads.hypernets[g].spans();
        for (std::size_t p = 0; p < params.size(); ++p) {
            const auto fd = central_difference(params[p], loss);
            err.hyper = std::max(err.hyper, relative_error(grads[p], fd));
        }
    }
    return err;
}

inline policy::NetworkConfig small_network() {
    policy::NetworkConfig n;
    n.hidden = 8;
    n.depth = 3;
    n.hyper_hidden = 6;
    return n;
}

}  // namespace hlt::testing
