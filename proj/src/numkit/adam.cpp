#include "hlt/numkit/adam.hpp"

#include <cmath>
#include <string>

#include "hlt/errors.hpp"

namespace hlt::num {

AdamState AdamState::for_parameters(std::span<const std::span<double>> params, AdamConfig config) {
    std::vector<std::size_t> sizes;
    for (const auto& p : params) sizes.push_back(p.size());
    return for_sizes(sizes, config);
}

AdamState AdamState::for_sizes(std::span<const std::size_t> sizes, AdamConfig config) {
    AdamState s;
    s.config = config;
    for (std::size_t n : sizes) {
        s.m.emplace_back(n, 0.0);
        s.v.emplace_back(n, 0.0);
    }
    return s;
}

void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw DimensionError("adam: " + std::to_string(params.size()) + " parameter blocks, " +
                             std::to_string(grads.size()) + " gradient blocks, " + std::to_string(state.m.size()) +
                             " moment blocks");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].size() != grads[k].size() || params[k].size() != state.m[k].size()) {
            throw DimensionError("adam: block " + std::to_string(k) + " size mismatch");
        }
    }
    const auto& c = state.config;
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params[k];
        auto g = grads[k];
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
        }
    }
}

double clip_global_norm(std::span<const std::span<double>> grads, double max_norm) {
    double sq = 0.0;
    for (const auto& g : grads) for (double x : g) sq += x * x;
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
    if (max_norm > 0.0 && norm > max_norm) {
        const double f = max_norm / norm;
        for (const auto& g : grads) for (double& x : g) x *= f;
    }
    return norm;
}

}  // namespace hlt::num
