#include "hlt/trainer/critic.hpp"

#include <algorithm>
#include <fstream>

#include "hlt/errors.hpp"
#include "json.hpp"

namespace hlt::trainer {

namespace fs = std::filesystem;
using nlohmann::json;

CriticNet CriticNet::create(std::size_t input_dim, std::size_t hidden, num::Rng& rng) {
    const std::vector<std::size_t> dims{input_dim, hidden, hidden, 1};
    const std::vector<num::Activation> acts{num::Activation::tanh, num::Activation::tanh, num::Activation::identity};
    return {num::Mlp::random(dims, acts, rng)};
}

std::size_t critic_input_dim(std::size_t team_size, std::size_t obs_dim, std::size_t num_types) {
    return team_size * obs_dim + num_types;
}

void fill_critic_input(std::span<const double> team_obs, std::span<const double> source_values, std::span<double> out) {
    if (out.size() != team_obs.size() + source_values.size()) throw DimensionError("critic input length mismatch");
    std::copy(team_obs.begin(), team_obs.end(), out.begin());
    std::copy(source_values.begin(), source_values.end(), out.begin() + static_cast<std::ptrdiff_t>(team_obs.size()));
}

ValueLossResult value_loss_and_grad(const CriticNet& critic, const num::Tensor& inputs, std::span<const double> returns,
                                    double scale) {
    const auto fwd = num::mlp_forward(critic.mlp, inputs);
    const std::size_t rows = returns.size();
    if (fwd.output.size() != rows) throw DimensionError("critic batch and returns differ in length");
    num::Tensor grad(fwd.output.shape());
    ValueLossResult result;
    for (std::size_t r = 0; r < rows; ++r) {
        const double diff = fwd.output.data()[r] - returns[r];
        result.loss_sum += 0.5 * diff * diff;
        grad.data()[r] = diff * scale;
    }
    result.grads = num::mlp_backward(critic.mlp, fwd.cache, grad, false).grads;
    return result;
}

std::vector<double> critic_values(const CriticNet& critic, const num::Tensor& inputs) {
    const auto out = num::mlp_predict(critic.mlp, inputs);
    return {out.data().begin(), out.data().end()};
}

void save_critic(const fs::path& dir, const CriticNet& critic, num::DType dtype) {
    fs::create_directories(dir);
    json layers = json::array();
    for (std::size_t k = 0; k < critic.mlp.layers().size(); ++k) {
        const auto& layer = critic.mlp.layers()[k];
        const std::string w = "l" + std::to_string(k) + "_weight.hltt";
        const std::string b = "l" + std::to_string(k) + "_bias.hltt";
        num::save_tensor(dir / w, layer.weight, dtype);
        num::save_tensor(dir / b, layer.bias, dtype);
        layers.push_back({{"weight", w}, {"bias", b}, {"activation", std::string(num::to_string(layer.activation))}});
    }
    std::ofstream out(dir / "critic.json", std::ios::trunc);
    out << json{{"format", "hlt-critic"}, {"layers", layers}}.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (dir / "critic.json").string());
}

CriticNet load_critic(const fs::path& dir) {
    std::ifstream in(dir / "critic.json");
    if (!in) throw CorruptArtifactError("no critic manifest in " + dir.string());
    try {
        const json j = json::parse(in);
        if (j.at("format") != "hlt-critic") throw CorruptArtifactError("not a critic manifest");
        std::vector<num::DenseLayer> layers;
        for (const auto& l : j.at("layers")) {
            layers.push_back({num::load_tensor(dir / l.at("weight").get<std::string>()),
                              num::load_tensor(dir / l.at("bias").get<std::string>()),
                              num::activation_from_string(l.at("activation").get<std::string>())});
        }
        return {num::Mlp(std::move(layers))};
    } catch (const json::exception& e) {
        throw CorruptArtifactError("malformed critic manifest: " + std::string(e.what()));
    } catch (const DimensionError& e) {
        throw CorruptArtifactError("inconsistent critic: " + std::string(e.what()));
    }
}

}  // namespace hlt::trainer
