#pragma once

#include <filesystem>
#include <span>

#include "hlt/numkit/mlp.hpp"
#include "hlt/numkit/tensor_io.hpp"

namespace hlt::trainer {

/// The run's single centralized critic. Input: every learner agent's local
/// observation in id order (zeros for dead agents) followed by F_v.
struct CriticNet {
    num::Mlp mlp;

    static CriticNet create(std::size_t input_dim, std::size_t hidden, num::Rng& rng);
    std::size_t input_dim() const { return mlp.in_dim(); }
    friend bool operator==(const CriticNet&, const CriticNet&) = default;
};

std::size_t critic_input_dim(std::size_t team_size, std::size_t obs_dim, std::size_t num_types);

/// Writes team_obs followed by source_values into `out`.
void fill_critic_input(std::span<const double> team_obs, std::span<const double> source_values, std::span<double> out);

struct ValueLossResult {
    num::MlpGrads grads;
    double loss_sum = 0.0;  ///< sum of 0.5 (V - R)^2
};

/// `inputs` is [rows x input_dim]; each row's gradient is scaled by `scale`.
ValueLossResult value_loss_and_grad(const CriticNet& critic, const num::Tensor& inputs, std::span<const double> returns,
                                    double scale);

std::vector<double> critic_values(const CriticNet& critic, const num::Tensor& inputs);

void save_critic(const std::filesystem::path& dir, const CriticNet& critic, num::DType dtype = num::DType::f64);
CriticNet load_critic(const std::filesystem::path& dir);

}  // namespace hlt::trainer
