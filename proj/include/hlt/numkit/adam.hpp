#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hlt::num {

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// First/second moment buffers for a fixed list of parameter blocks.
struct AdamState {
    AdamConfig config;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t t = 0;

    /// Zero moments shaped like `params`.
    static AdamState for_parameters(std::span<const std::span<double>> params, AdamConfig config = {});
    static AdamState for_sizes(std::span<const std::size_t> sizes, AdamConfig config = {});

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update applied in place. Throws DimensionError when
/// the parameter, gradient and moment blocks do not align.
void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads);

/// Scales `grads` so their global L2 norm is at most `max_norm`; returns the
/// norm before scaling.
double clip_global_norm(std::span<const std::span<double>> grads, double max_norm);

}  // namespace hlt::num
