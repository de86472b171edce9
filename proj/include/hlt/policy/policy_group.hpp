#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hlt/numkit/mlp.hpp"
#include "hlt/numkit/ppo.hpp"
#include "hlt/numkit/rng.hpp"
#include "hlt/numkit/sampling.hpp"
#include "hlt/policy/team_info.hpp"

namespace hlt::policy {

/// Network sizes. The policy for a type is the stack
///   obs -> hidden -> ... -> hidden -> actions
/// whose last `generated_layers` layers get their weights from hyper-networks
/// fed with F_h; the rest form an ordinary trunk.
struct NetworkConfig {
    std::size_t hidden = 64;
    std::size_t depth = 3;             ///< dense layers from observation to logits
    std::size_t hyper_hidden = 32;
    std::size_t generated_layers = 1;  ///< 1 = only the output head is generated
    bool shared_trunk = false;         ///< one trunk for all types instead of one each
    num::Activation activation = num::Activation::tanh;

    friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct GroupShape {
    std::vector<std::string> type_names;
    std::size_t obs_dim = 0;
    std::size_t num_actions = 0;

    int num_types() const noexcept { return static_cast<int>(type_names.size()); }
    friend bool operator==(const GroupShape&, const GroupShape&) = default;
};

/// Per-type policy: a trunk (possibly shared) plus one hyper-network per
/// generated layer.
struct TypePolicy {
    std::size_t trunk_index = 0;
    std::vector<num::Mlp> hypernets;

    friend bool operator==(const TypePolicy&, const TypePolicy&) = default;
};

struct FrozenGroupError : std::logic_error {
    using std::logic_error::logic_error;
};

/// One policy per agent type, jointly controlling a whole team.
///
/// Frozen groups refuse mutable parameter access, so a league member stays
/// byte-identical for the rest of a run.
class PolicyGroup {
public:
    PolicyGroup() = default;
    PolicyGroup(GroupShape shape, NetworkConfig network, std::vector<num::Mlp> trunks, std::vector<TypePolicy> types,
                std::uint64_t version, bool frozen, std::optional<double> omega);

    static PolicyGroup create(GroupShape shape, NetworkConfig network, num::Rng& rng);

    const GroupShape& shape() const noexcept { return shape_; }
    const NetworkConfig& network() const noexcept { return network_; }
    int num_types() const noexcept { return shape_.num_types(); }
    std::uint64_t version() const noexcept { return version_; }
    bool frozen() const noexcept { return frozen_; }
    std::optional<double> omega() const noexcept { return omega_; }

    const std::vector<num::Mlp>& trunks() const noexcept { return trunks_; }
    const std::vector<TypePolicy>& types() const noexcept { return types_; }
    const TypePolicy& type_policy(int type) const;
    const num::Mlp& trunk_for(int type) const;

    /// Mutable views; throw FrozenGroupError on a frozen group.
    num::Mlp& mutable_trunk(std::size_t index);
    TypePolicy& mutable_type(int type);

    /// Dimensions of each generated layer, (in, out) pairs, in stack order.
    std::vector<std::pair<std::size_t, std::size_t>> generated_dims() const;
    std::vector<num::Activation> generated_activations() const;

    /// FNV-1a over every parameter byte, in trunk then type order.
    std::uint64_t parameter_hash() const noexcept;

    friend PolicyGroup duplicate_and_freeze(PolicyGroup& frontier, double omega);
    friend bool operator==(const PolicyGroup&, const PolicyGroup&) = default;

private:
    GroupShape shape_;
    NetworkConfig network_;
    std::vector<num::Mlp> trunks_;
    std::vector<TypePolicy> types_;
    std::uint64_t version_ = 1;
    bool frozen_ = false;
    std::optional<double> omega_;
};

/// Deep copy marked frozen with the recorded omega. The copy takes the
/// frontier's current version id and the frontier moves on to the next one,
/// so repeated snapshots carry distinct, increasing ids.
PolicyGroup duplicate_and_freeze(PolicyGroup& frontier, double omega);

/// Splits a hyper-network output theta into a weight matrix [n_out x n_in]
/// (first n_out * n_in entries, row-major) and a bias vector (the rest).
num::DenseLayer hypernet_generate(const num::Mlp& hyper, std::span<const double> team_info, std::size_t n_in,
                                  std::size_t n_out, num::Activation activation);

/// Generated part of a type's network for one team-info vector.
num::Mlp generate_head(const PolicyGroup& group, int type, std::span<const double> team_info);

/// Trunk plus generated head, ready to map observations to logits.
struct PreparedPolicy {
    const num::Mlp* trunk = nullptr;
    num::Mlp head;

    std::vector<double> logits(std::span<const double> observation) const;
    /// Row-major [batch x actions].
    num::Tensor logits_batch(const num::Tensor& observations) const;
};

PreparedPolicy prepare(const PolicyGroup& group, int type, const TeamInfo& info);

struct ActResult {
    int action = 0;
    double log_prob = 0.0;
    double entropy = 0.0;
};

/// Decentralized execution: local observation and team info only.
ActResult act(const PolicyGroup& group, int type, std::span<const double> observation, const TeamInfo& info,
              std::span<const std::uint8_t> legal_mask, num::Rng& rng);
ActResult act(const PreparedPolicy& policy, std::span<const double> observation,
              std::span<const std::uint8_t> legal_mask, num::Rng& rng);

/// Gradients for one type's parameters.
struct TypeGrads {
    num::MlpGrads trunk;
    std::vector<num::MlpGrads> hypernets;

    static TypeGrads zeros_like(const PolicyGroup& group, int type);
    void add(const TypeGrads& other);
    std::vector<std::span<double>> spans();
};

/// Rows of policy samples for one type. `team_info_keys[k]` indexes
/// `team_infos`; samples sharing a key share the generated head.
struct PolicyBatch {
    num::Tensor observations;  ///< [rows x obs_dim]
    std::vector<std::size_t> team_info_keys;
    std::vector<std::vector<double>> team_infos;
    std::vector<num::ActionMask> masks;
    std::vector<int> actions;
    std::vector<double> old_log_probs;
    std::vector<double> advantages;

    std::size_t rows() const noexcept { return actions.size(); }
};

struct PolicyLossResult {
    TypeGrads grads;
    double loss_sum = 0.0;
    double surrogate_sum = 0.0;
    double entropy_sum = 0.0;
    double clipped = 0.0;  ///< samples whose surrogate gradient was zeroed
};

/// Sum over rows of the per-sample PPO objective, each row's gradient
/// multiplied by `scale` (pass 1/minibatch size for a mean).
PolicyLossResult policy_loss_and_grad(const PolicyGroup& group, int type, const PolicyBatch& batch,
                                      const num::PpoCoefficients& coefficients, double scale);

}  // namespace hlt::policy
