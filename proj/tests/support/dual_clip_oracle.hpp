#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "hlt/numkit/ppo.hpp"

namespace hlt::testing {

// Literal transcription of the piecewise dual-clip definition.
inline double dual_clip_oracle(double r, double a, double eps, double c) {
    const double unclipped = r * a;
    const double clipped = std::clamp(r, 1.0 - eps, 1.0 + eps) * a;
    const double standard = std::min(unclipped, clipped);
    if (a >= 0.0) return -standard;
    return -std::max(standard, c * a);
}

struct DualClipGridResult {
    int points = 0;
    int loss_mismatches = 0;
    int grad_mismatches = 0;
    // A >= 0: unclipped, clipped above. A < 0: clipped below, unclipped, dual floor.
    std::array<int, 5> pieces{};
};

/// Loss against the oracle (relative 1e-12) and d loss / d ratio against its
/// central difference (relative 1e-6) over a (ratio, A, eps, c) grid.
inline DualClipGridResult dual_clip_grid() {
    DualClipGridResult out;
    auto close = [](double x, double y, double rel) { return std::abs(x - y) <= rel * std::max(1.0, std::abs(y)); };
    for (double eps : {0.1, 0.2, 0.3}) {
        for (double c : {1.5, 3.0, 10.0}) {
            for (double a : {-2.0, -0.3, 0.4, 1.7}) {
                for (double r = 0.013; r < 12.0; r += 0.071) {
                    const auto t = num::dual_clip_ppo_loss(r, a, eps, c);
                    const double h = 1e-6;
                    const double fd = (dual_clip_oracle(r + h, a, eps, c) - dual_clip_oracle(r - h, a, eps, c)) / (2 * h);
                    ++out.points;
                    out.loss_mismatches += close(t.loss, dual_clip_oracle(r, a, eps, c), 1e-12) ? 0 : 1;
                    out.grad_mismatches += close(t.grad_ratio, fd, 1e-6) ? 0 : 1;
                    if (a >= 0) {
                        ++out.pieces[r <= 1 + eps ? 0 : 1];
                    } else {
                        ++out.pieces[r < 1 - eps ? 2 : (r <= c ? 3 : 4)];
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace hlt::testing
