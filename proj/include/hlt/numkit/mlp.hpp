#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hlt/numkit/rng.hpp"
#include "hlt/numkit/tensor.hpp"

namespace hlt::num {

enum class Activation : std::uint8_t { relu = 0, tanh = 1, identity = 2 };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

/// y = act(W x + b), W stored [out x in].
struct DenseLayer {
    Tensor weight;
    Tensor bias;
    Activation activation = Activation::identity;

    std::size_t in_dim() const { return weight.dim(1); }
    std::size_t out_dim() const { return weight.dim(0); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Fully connected feed-forward stack. Adjacent layer dimensions are checked
/// on construction.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<DenseLayer> layers);

    /// `dims` holds in, hidden..., out; one activation per layer. Weights are
    /// Xavier-uniform scaled by `gain` (last layer by `last_gain`), biases zero.
    static Mlp random(std::span<const std::size_t> dims, std::span<const Activation> activations, Rng& rng,
                      double gain = 1.0, double last_gain = 1.0);

    std::size_t in_dim() const;
    std::size_t out_dim() const;
    std::size_t depth() const noexcept { return layers_.size(); }
    std::size_t parameter_count() const noexcept;

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& mutable_layers() noexcept { return layers_; }

    /// Weight and bias of each layer in order: W0, b0, W1, b1, ...
    std::vector<std::span<double>> parameters();
    std::vector<std::span<const double>> parameters() const;

    /// Hash of every parameter byte; used to detect stale caches.
    std::uint64_t fingerprint() const noexcept;

    friend bool operator==(const Mlp&, const Mlp&) = default;

private:
    std::vector<DenseLayer> layers_;
};

/// Activation record of one forward pass. activations[0] is the input batch,
/// activations[k + 1] the post-activation output of layer k.
struct MlpCache {
    std::size_t batch = 0;
    bool batched_input = false;
    std::vector<std::vector<double>> activations;
    std::uint64_t fingerprint = 0;
};

/// Gradients shaped like the layers of an Mlp.
struct MlpGrads {
    std::vector<Tensor> weight;
    std::vector<Tensor> bias;

    static MlpGrads zeros_like(const Mlp& mlp);
    void add(const MlpGrads& other);
    void scale(double factor);
    std::vector<std::span<double>> spans();
    std::vector<std::span<const double>> spans() const;
};

struct MlpForward {
    Tensor output;
    MlpCache cache;
};

struct MlpBackward {
    MlpGrads grads;
    Tensor grad_input;
};

/// Input is [in] or [batch, in]; the output keeps the input's rank.
MlpForward mlp_forward(const Mlp& mlp, const Tensor& input);

/// Forward pass without keeping the activation record.
Tensor mlp_predict(const Mlp& mlp, const Tensor& input);

/// Gradients summed over the batch. Throws ConsistencyError when the cache
/// came from different parameters or a different batch shape. With
/// `input_grad` false the input gradient is skipped and left empty.
MlpBackward mlp_backward(const Mlp& mlp, const MlpCache& cache, const Tensor& grad_output, bool input_grad = true);

}  // namespace hlt::num
