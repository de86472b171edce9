#include "hlt/policy/policy_group.hpp"

#include <map>

#include "hlt/errors.hpp"
#include "hlt/util/hash.hpp"

namespace hlt::policy {

using num::Activation;
using num::Mlp;
using num::Tensor;

namespace {

void check_network(const NetworkConfig& n) {
    if (n.depth < 2) throw ConfigError("policy network depth must be at least 2");
    if (n.generated_layers < 1 || n.generated_layers >= n.depth) {
        throw ConfigError("generated_layers must lie in [1, depth - 1]");
    }
    if (n.hidden < 1 || n.hyper_hidden < 1) throw ConfigError("layer widths must be positive");
}

std::size_t layer_in(const GroupShape& s, const NetworkConfig& n, std::size_t k) {
    return k == 0 ? s.obs_dim : n.hidden;
}

std::size_t layer_out(const GroupShape& s, const NetworkConfig& n, std::size_t k) {
    return k + 1 == n.depth ? s.num_actions : n.hidden;
}

}  // namespace

PolicyGroup::PolicyGroup(GroupShape shape, NetworkConfig network, std::vector<Mlp> trunks,
                         std::vector<TypePolicy> types, std::uint64_t version, bool frozen,
                         std::optional<double> omega)
    : shape_(std::move(shape)),
      network_(network),
      trunks_(std::move(trunks)),
      types_(std::move(types)),
      version_(version),
      frozen_(frozen),
      omega_(omega) {
    check_network(network_);
    if (static_cast<int>(types_.size()) != shape_.num_types() || types_.empty()) {
        throw DimensionError("policy group needs exactly one policy per agent type");
    }
    const std::size_t expected_trunks = network_.shared_trunk ? 1 : types_.size();
    if (trunks_.size() != expected_trunks) throw DimensionError("unexpected trunk count");
    const auto dims = generated_dims();
    for (std::size_t j = 0; j < types_.size(); ++j) {
        const auto& tp = types_[j];
        if (tp.trunk_index >= trunks_.size()) throw DimensionError("trunk index out of range");
        const auto& trunk = trunks_[tp.trunk_index];
        if (trunk.in_dim() != shape_.obs_dim || trunk.out_dim() != dims.front().first) {
            throw DimensionError("trunk dimensions do not match the group shape");
        }
        if (tp.hypernets.size() != dims.size()) throw DimensionError("wrong number of hyper-networks");
        for (std::size_t g = 0; g < dims.size(); ++g) {
            const auto [in, out] = dims[g];
            if (tp.hypernets[g].in_dim() != 2 * types_.size() || tp.hypernets[g].out_dim() != in * out + out) {
                throw DimensionError("hyper-network " + std::to_string(g) + " of type " + std::to_string(j) +
                                     " has the wrong input or output length");
            }
        }
    }
    if (omega_ && !(*omega_ >= 0.0 && *omega_ <= 1.0)) throw std::domain_error("omega outside [0, 1]");
}

PolicyGroup PolicyGroup::create(GroupShape shape, NetworkConfig network, num::Rng& rng) {
    check_network(network);
    const std::size_t trunk_layers = network.depth - network.generated_layers;
    std::vector<std::size_t> trunk_dims{shape.obs_dim};
    for (std::size_t k = 0; k < trunk_layers; ++k) trunk_dims.push_back(layer_out(shape, network, k));
    const std::vector<Activation> trunk_acts(trunk_layers, network.activation);

    const std::size_t n_types = shape.type_names.size();
    std::vector<Mlp> trunks;
    const std::size_t n_trunks = network.shared_trunk ? 1 : n_types;
    for (std::size_t t = 0; t < n_trunks; ++t) trunks.push_back(Mlp::random(trunk_dims, trunk_acts, rng));

    std::vector<TypePolicy> types(n_types);
    for (std::size_t j = 0; j < n_types; ++j) {
        types[j].trunk_index = network.shared_trunk ? 0 : j;
        for (std::size_t k = trunk_layers; k < network.depth; ++k) {
            const std::size_t in = layer_in(shape, network, k);
            const std::size_t out = layer_out(shape, network, k);
            const bool head = k + 1 == network.depth;
            const std::vector<std::size_t> dims{2 * n_types, network.hyper_hidden, in * out + out};
            const std::vector<Activation> acts{network.activation, Activation::identity};
            Mlp hyper = Mlp::random(dims, acts, rng, 1.0, 0.1);
            if (!head) {
                // Hidden generated layers start near an ordinary Xavier layer
                // carried by the output bias; the team-info path adds a small modulation.
                auto layer = Mlp::random(std::vector<std::size_t>{in, out},
                                         std::vector<Activation>{Activation::identity}, rng);
                auto& bias = hyper.mutable_layers().back().bias;
                const auto w = layer.layers().front().weight.data();
                std::copy(w.begin(), w.end(), bias.data().begin());
            }
            types[j].hypernets.push_back(std::move(hyper));
        }
    }
    return PolicyGroup(std::move(shape), network, std::move(trunks), std::move(types), 1, false, std::nullopt);
}

const TypePolicy& PolicyGroup::type_policy(int type) const {
    if (type < 0 || type >= num_types()) throw std::out_of_range("agent type " + std::to_string(type) + " out of range");
    return types_[static_cast<std::size_t>(type)];
}

const Mlp& PolicyGroup::trunk_for(int type) const { return trunks_[type_policy(type).trunk_index]; }

Mlp& PolicyGroup::mutable_trunk(std::size_t index) {
    if (frozen_) throw FrozenGroupError("policy group " + std::to_string(version_) + " is frozen");
    return trunks_.at(index);
}

TypePolicy& PolicyGroup::mutable_type(int type) {
    if (frozen_) throw FrozenGroupError("policy group " + std::to_string(version_) + " is frozen");
    type_policy(type);
    return types_[static_cast<std::size_t>(type)];
}

std::vector<std::pair<std::size_t, std::size_t>> PolicyGroup::generated_dims() const {
    std::vector<std::pair<std::size_t, std::size_t>> dims;
    for (std::size_t k = network_.depth - network_.generated_layers; k < network_.depth; ++k) {
        dims.emplace_back(layer_in(shape_, network_, k), layer_out(shape_, network_, k));
    }
    return dims;
}

std::vector<Activation> PolicyGroup::generated_activations() const {
    std::vector<Activation> acts(network_.generated_layers, network_.activation);
    acts.back() = Activation::identity;
    return acts;
}

std::uint64_t PolicyGroup::parameter_hash() const noexcept {
    std::uint64_t h = util::kFnvOffset;
    for (const auto& t : trunks_) {
        for (const auto& p : t.parameters()) h = util::fnv1a64_values(p, h);
    }
    for (const auto& tp : types_) {
        for (const auto& hyper : tp.hypernets) {
            for (const auto& p : hyper.parameters()) h = util::fnv1a64_values(p, h);
        }
    }
    return h;
}

PolicyGroup duplicate_and_freeze(PolicyGroup& frontier, double omega) {
    if (frontier.frozen_) throw FrozenGroupError("cannot duplicate a frozen group as a frontier");
    if (!(omega >= 0.0 && omega <= 1.0)) throw std::domain_error("omega outside [0, 1]");
    PolicyGroup copy = frontier;
    copy.frozen_ = true;
    copy.omega_ = omega;
    frontier.version_ += 1;
    return copy;
}

num::DenseLayer hypernet_generate(const Mlp& hyper, std::span<const double> team_info, std::size_t n_in,
                                  std::size_t n_out, Activation activation) {
    if (hyper.out_dim() != n_out * n_in + n_out) {
        throw DimensionError("hyper-network output length " + std::to_string(hyper.out_dim()) + " != " +
                             std::to_string(n_out * n_in + n_out));
    }
    const auto theta = num::mlp_predict(hyper, Tensor::vector({team_info.begin(), team_info.end()}));
    const auto data = theta.data();
    std::vector<double> w(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n_out * n_in));
    std::vector<double> b(data.begin() + static_cast<std::ptrdiff_t>(n_out * n_in), data.end());
    return {Tensor::matrix(n_out, n_in, std::move(w)), Tensor::vector(std::move(b)), activation};
}

Mlp generate_head(const PolicyGroup& group, int type, std::span<const double> team_info) {
    const auto& tp = group.type_policy(type);
    const auto dims = group.generated_dims();
    const auto acts = group.generated_activations();
    std::vector<num::DenseLayer> layers;
    for (std::size_t g = 0; g < dims.size(); ++g) {
        layers.push_back(hypernet_generate(tp.hypernets[g], team_info, dims[g].first, dims[g].second, acts[g]));
    }
    return Mlp(std::move(layers));
}

std::vector<double> PreparedPolicy::logits(std::span<const double> observation) const {
    const auto h = num::mlp_predict(*trunk, Tensor::vector({observation.begin(), observation.end()}));
    const auto out = num::mlp_predict(head, h);
    return {out.data().begin(), out.data().end()};
}

Tensor PreparedPolicy::logits_batch(const Tensor& observations) const {
    return num::mlp_predict(head, num::mlp_predict(*trunk, observations));
}

PreparedPolicy prepare(const PolicyGroup& group, int type, const TeamInfo& info) {
    if (static_cast<int>(info.source_values.size()) != group.num_types()) {
        throw DimensionError("team info length does not match the group's type count");
    }
    return {&group.trunk_for(type), generate_head(group, type, info.concat())};
}

ActResult act(const PreparedPolicy& policy, std::span<const double> observation,
              std::span<const std::uint8_t> legal_mask, num::Rng& rng) {
    const auto logits = policy.logits(observation);
    const auto draw = num::categorical_sample(logits, legal_mask, rng);
    return {static_cast<int>(draw.action), draw.log_prob, num::masked_entropy(logits, legal_mask)};
}

ActResult act(const PolicyGroup& group, int type, std::span<const double> observation, const TeamInfo& info,
              std::span<const std::uint8_t> legal_mask, num::Rng& rng) {
    return act(prepare(group, type, info), observation, legal_mask, rng);
}

TypeGrads TypeGrads::zeros_like(const PolicyGroup& group, int type) {
    TypeGrads g;
    g.trunk = num::MlpGrads::zeros_like(group.trunk_for(type));
    for (const auto& hyper : group.type_policy(type).hypernets) g.hypernets.push_back(num::MlpGrads::zeros_like(hyper));
    return g;
}

void TypeGrads::add(const TypeGrads& other) {
    trunk.add(other.trunk);
    for (std::size_t g = 0; g < hypernets.size(); ++g) hypernets[g].add(other.hypernets[g]);
}

std::vector<std::span<double>> TypeGrads::spans() {
    auto out = trunk.spans();
    for (auto& h : hypernets) {
        auto s = h.spans();
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

PolicyLossResult policy_loss_and_grad(const PolicyGroup& group, int type, const PolicyBatch& batch,
                                      const num::PpoCoefficients& coefficients, double scale) {
    const std::size_t rows = batch.rows();
    if (batch.team_info_keys.size() != rows || batch.masks.size() != rows || batch.old_log_probs.size() != rows ||
        batch.advantages.size() != rows || batch.observations.rank() != 2 || batch.observations.dim(0) != rows) {
        throw DimensionError("policy batch columns have different lengths");
    }
    const auto& tp = group.type_policy(type);
    const auto& trunk = group.trunk_for(type);
    const auto dims = group.generated_dims();
    const auto acts = group.generated_activations();
    const std::size_t hidden = trunk.out_dim();
    const std::size_t n_actions = group.shape().num_actions;

    PolicyLossResult result{TypeGrads::zeros_like(group, type)};
    const auto trunk_fwd = num::mlp_forward(trunk, batch.observations);
    Tensor grad_hidden({rows, hidden});

    std::map<std::size_t, std::vector<std::size_t>> rows_by_key;
    for (std::size_t r = 0; r < rows; ++r) rows_by_key[batch.team_info_keys[r]].push_back(r);

    for (const auto& [key, members] : rows_by_key) {
        const auto& info = batch.team_infos.at(key);
        const Tensor info_t = Tensor::vector(info);
        std::vector<num::MlpForward> hyper_fwd;
        std::vector<num::DenseLayer> layers;
        for (std::size_t g = 0; g < dims.size(); ++g) {
            hyper_fwd.push_back(num::mlp_forward(tp.hypernets[g], info_t));
            const auto theta = hyper_fwd.back().output.data();
            const auto [in, out] = dims[g];
            std::vector<double> w(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(in * out));
            std::vector<double> b(theta.begin() + static_cast<std::ptrdiff_t>(in * out), theta.end());
            layers.push_back({Tensor::matrix(out, in, std::move(w)), Tensor::vector(std::move(b)), acts[g]});
        }
        const Mlp head(std::move(layers));

        Tensor h({members.size(), hidden});
        for (std::size_t i = 0; i < members.size(); ++i) {
            const auto src = trunk_fwd.output.data().subspan(members[i] * hidden, hidden);
            std::copy(src.begin(), src.end(), h.data().begin() + static_cast<std::ptrdiff_t>(i * hidden));
        }
        const auto head_fwd = num::mlp_forward(head, h);
        Tensor grad_logits({members.size(), n_actions});
        for (std::size_t i = 0; i < members.size(); ++i) {
            const std::size_t r = members[i];
            const auto logits = head_fwd.output.data().subspan(i * n_actions, n_actions);
            const auto s = num::ppo_sample_loss(logits, batch.masks[r], static_cast<std::size_t>(batch.actions[r]),
                                                batch.old_log_probs[r], batch.advantages[r], coefficients);
            result.loss_sum += s.loss;
            result.surrogate_sum += s.surrogate;
            result.entropy_sum += s.entropy;
            result.clipped += s.clipped ? 1.0 : 0.0;
            for (std::size_t a = 0; a < n_actions; ++a) grad_logits.at(i, a) = s.grad_logits[a] * scale;
        }
        const auto head_back = num::mlp_backward(head, head_fwd.cache, grad_logits);
        for (std::size_t i = 0; i < members.size(); ++i) {
            const auto src = head_back.grad_input.data().subspan(i * hidden, hidden);
            auto dst = grad_hidden.data().subspan(members[i] * hidden, hidden);
            for (std::size_t c = 0; c < hidden; ++c) dst[c] += src[c];
        }
        for (std::size_t g = 0; g < dims.size(); ++g) {
            std::vector<double> theta_grad(head_back.grads.weight[g].data().begin(),
                                           head_back.grads.weight[g].data().end());
            theta_grad.insert(theta_grad.end(), head_back.grads.bias[g].data().begin(),
                              head_back.grads.bias[g].data().end());
            const auto hyper_back =
                num::mlp_backward(tp.hypernets[g], hyper_fwd[g].cache, Tensor::vector(std::move(theta_grad)));
            result.grads.hypernets[g].add(hyper_back.grads);
        }
    }
    result.grads.trunk = num::mlp_backward(trunk, trunk_fwd.cache, grad_hidden, false).grads;
    return result;
}

}  // namespace hlt::policy
