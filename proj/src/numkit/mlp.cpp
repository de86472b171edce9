#include "hlt/numkit/mlp.hpp"

#include <cmath>
#include <string>

#include "hlt/errors.hpp"
#include "hlt/util/hash.hpp"

namespace hlt::num {

std::string_view to_string(Activation a) noexcept {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::identity: return "identity";
    }
    return "identity";
}

Activation activation_from_string(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

namespace {

void check_layer(const DenseLayer& layer, std::size_t index) {
    if (layer.weight.rank() != 2 || layer.bias.rank() != 1 || layer.bias.dim(0) != layer.weight.dim(0)) {
        throw DimensionError("layer " + std::to_string(index) + " has inconsistent weight/bias shapes");
    }
}

double apply(Activation a, double z) noexcept {
    switch (a) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::tanh: return std::tanh(z);
        case Activation::identity: return z;
    }
    return z;
}

// Derivative expressed through the post-activation value y.
double derivative(Activation a, double y) noexcept {
    switch (a) {
        case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: return 1.0 - y * y;
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

struct BatchView {
    std::size_t batch;
    bool batched;
};

BatchView input_view(const Mlp& mlp, const Tensor& input) {
    if (mlp.depth() == 0) throw DimensionError("empty MLP");
    const std::size_t in = mlp.in_dim();
    if (input.rank() == 1 && input.dim(0) == in) return {1, false};
    if (input.rank() == 2 && input.dim(1) == in) return {input.dim(0), true};
    throw DimensionError("MLP input last dimension must be " + std::to_string(in));
}

// out[b, o] = bias[o] + sum_i x[b, i] * W[o, i], accumulated in i order.
// Zero inputs are skipped; both paths perform the same additions in the same
// order, so small and large batches give identical bits.
void dense_forward(const DenseLayer& layer, std::span<const double> x, std::size_t batch, std::vector<double>& out) {
    const std::size_t in = layer.in_dim();
    const std::size_t n_out = layer.out_dim();
    const auto w = layer.weight.data();
    const auto bias = layer.bias.data();
    out.assign(batch * n_out, 0.0);
    if (batch < 8) {
        for (std::size_t b = 0; b < batch; ++b) {
            const double* xb = x.data() + b * in;
            for (std::size_t o = 0; o < n_out; ++o) {
                const double* row = w.data() + o * in;
                double acc = bias[o];
                for (std::size_t i = 0; i < in; ++i) {
                    if (xb[i] != 0.0) acc += xb[i] * row[i];
                }
                out[b * n_out + o] = apply(layer.activation, acc);
            }
        }
        return;
    }
    std::vector<double> wt(in * n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
        for (std::size_t i = 0; i < in; ++i) wt[i * n_out + o] = w[o * in + i];
    }
    for (std::size_t b = 0; b < batch; ++b) {
        double* y = out.data() + b * n_out;
        for (std::size_t o = 0; o < n_out; ++o) y[o] = bias[o];
        const double* xb = x.data() + b * in;
        for (std::size_t i = 0; i < in; ++i) {
            const double xi = xb[i];
            if (xi == 0.0) continue;
            const double* row = wt.data() + i * n_out;
            for (std::size_t o = 0; o < n_out; ++o) y[o] += xi * row[o];
        }
        for (std::size_t o = 0; o < n_out; ++o) y[o] = apply(layer.activation, y[o]);
    }
}

void require_finite(std::span<const double> values, std::string_view what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericError("non-finite value in " + std::string(what));
    }
}

}  // namespace

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        check_layer(layers_[k], k);
        if (k > 0 && layers_[k].in_dim() != layers_[k - 1].out_dim()) {
            throw DimensionError("layer " + std::to_string(k) + " input " + std::to_string(layers_[k].in_dim()) +
                                 " does not chain with previous output " + std::to_string(layers_[k - 1].out_dim()));
        }
    }
}

Mlp Mlp::random(std::span<const std::size_t> dims, std::span<const Activation> activations, Rng& rng, double gain,
                 double last_gain) {
    if (dims.size() < 2 || activations.size() != dims.size() - 1) {
        throw DimensionError("MLP needs dims.size() == activations.size() + 1 >= 2");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        const std::size_t in = dims[k];
        const std::size_t out = dims[k + 1];
        const double g = (k + 2 == dims.size()) ? last_gain : gain;
        const double limit = g * std::sqrt(6.0 / static_cast<double>(in + out));
        std::vector<double> w(in * out);
        for (double& x : w) x = (2.0 * uniform01(rng) - 1.0) * limit;
        layers.push_back({Tensor::matrix(out, in, std::move(w)), Tensor({out}), activations[k]});
    }
    return Mlp(std::move(layers));
}

std::size_t Mlp::in_dim() const {
    if (layers_.empty()) throw DimensionError("empty MLP");
    return layers_.front().in_dim();
}

std::size_t Mlp::out_dim() const {
    if (layers_.empty()) throw DimensionError("empty MLP");
    return layers_.back().out_dim();
}

std::size_t Mlp::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

std::vector<std::span<double>> Mlp::parameters() {
    std::vector<std::span<double>> out;
    for (auto& l : layers_) {
        out.push_back(l.weight.data());
        out.push_back(l.bias.data());
    }
    return out;
}

std::vector<std::span<const double>> Mlp::parameters() const {
    std::vector<std::span<const double>> out;
    for (const auto& l : layers_) {
        out.push_back(l.weight.data());
        out.push_back(l.bias.data());
    }
    return out;
}

std::uint64_t Mlp::fingerprint() const noexcept {
    std::uint64_t h = util::kFnvOffset;
    for (const auto& p : parameters()) h = util::fnv1a64_values(p, h);
    return h;
}

MlpGrads MlpGrads::zeros_like(const Mlp& mlp) {
    MlpGrads g;
    for (const auto& l : mlp.layers()) {
        g.weight.emplace_back(l.weight.shape());
        g.bias.emplace_back(l.bias.shape());
    }
    return g;
}

void MlpGrads::add(const MlpGrads& other) {
    if (other.weight.size() != weight.size()) throw DimensionError("gradient layer count mismatch");
    for (std::size_t k = 0; k < weight.size(); ++k) {
        if (weight[k].size() != other.weight[k].size() || bias[k].size() != other.bias[k].size()) {
            throw DimensionError("gradient shape mismatch");
        }
        for (std::size_t i = 0; i < weight[k].size(); ++i) weight[k][i] += other.weight[k][i];
        for (std::size_t i = 0; i < bias[k].size(); ++i) bias[k][i] += other.bias[k][i];
    }
}

void MlpGrads::scale(double factor) {
    for (auto& t : weight) for (double& x : t.data()) x *= factor;
    for (auto& t : bias) for (double& x : t.data()) x *= factor;
}

std::vector<std::span<double>> MlpGrads::spans() {
    std::vector<std::span<double>> out;
    for (std::size_t k = 0; k < weight.size(); ++k) {
        out.push_back(weight[k].data());
        out.push_back(bias[k].data());
    }
    return out;
}

std::vector<std::span<const double>> MlpGrads::spans() const {
    std::vector<std::span<const double>> out;
    for (std::size_t k = 0; k < weight.size(); ++k) {
        out.push_back(weight[k].data());
        out.push_back(bias[k].data());
    }
    return out;
}

MlpForward mlp_forward(const Mlp& mlp, const Tensor& input) {
    const auto view = input_view(mlp, input);
    input.require_finite("MLP input");
    MlpForward result;
    auto& cache = result.cache;
    cache.batch = view.batch;
    cache.batched_input = view.batched;
    cache.fingerprint = mlp.fingerprint();
    cache.activations.reserve(mlp.depth() + 1);
    cache.activations.emplace_back(input.data().begin(), input.data().end());
    for (const auto& layer : mlp.layers()) {
        std::vector<double> out;
        dense_forward(layer, cache.activations.back(), view.batch, out);
        cache.activations.push_back(std::move(out));
    }
    require_finite(cache.activations.back(), "MLP output");
    std::vector<std::size_t> shape = view.batched ? std::vector<std::size_t>{view.batch, mlp.out_dim()}
                                                  : std::vector<std::size_t>{mlp.out_dim()};
    result.output = Tensor(std::move(shape), cache.activations.back());
    return result;
}

Tensor mlp_predict(const Mlp& mlp, const Tensor& input) {
    const auto view = input_view(mlp, input);
    input.require_finite("MLP input");
    std::vector<double> current(input.data().begin(), input.data().end());
    std::vector<double> next;
    for (const auto& layer : mlp.layers()) {
        dense_forward(layer, current, view.batch, next);
        current.swap(next);
    }
    require_finite(current, "MLP output");
    std::vector<std::size_t> shape = view.batched ? std::vector<std::size_t>{view.batch, mlp.out_dim()}
                                                  : std::vector<std::size_t>{mlp.out_dim()};
    return Tensor(std::move(shape), std::move(current));
}

MlpBackward mlp_backward(const Mlp& mlp, const MlpCache& cache, const Tensor& grad_output, bool input_grad) {
    if (cache.activations.size() != mlp.depth() + 1 || cache.fingerprint != mlp.fingerprint()) {
        throw ConsistencyError("MLP cache does not match the current parameters");
    }
    if (grad_output.size() != cache.batch * mlp.out_dim()) {
        throw DimensionError("grad_output size does not match forward batch");
    }
    grad_output.require_finite("MLP grad_output");

    MlpBackward result{MlpGrads::zeros_like(mlp), {}};
    std::vector<double> grad(grad_output.data().begin(), grad_output.data().end());
    const std::size_t batch = cache.batch;
    std::vector<double> g(0);
    for (std::size_t k = mlp.depth(); k-- > 0;) {
        const auto& layer = mlp.layers()[k];
        const std::size_t in = layer.in_dim();
        const std::size_t n_out = layer.out_dim();
        const auto& x = cache.activations[k];
        const auto& y = cache.activations[k + 1];
        const bool need_gx = k > 0 || input_grad;
        // dW accumulated transposed [in x out] so the inner loop runs over outputs.
        std::vector<double> dwt(in * n_out, 0.0);
        auto db = result.grads.bias[k].data();
        const auto w = layer.weight.data();
        std::vector<double> grad_in(need_gx ? batch * in : 0, 0.0);
        g.resize(n_out);
        for (std::size_t b = 0; b < batch; ++b) {
            const double* xb = x.data() + b * in;
            for (std::size_t o = 0; o < n_out; ++o) {
                g[o] = grad[b * n_out + o] * derivative(layer.activation, y[b * n_out + o]);
                db[o] += g[o];
            }
            for (std::size_t i = 0; i < in; ++i) {
                const double xi = xb[i];
                if (xi == 0.0) continue;
                double* col = dwt.data() + i * n_out;
                for (std::size_t o = 0; o < n_out; ++o) col[o] += g[o] * xi;
            }
            if (!need_gx) continue;
            double* gx = grad_in.data() + b * in;
            for (std::size_t o = 0; o < n_out; ++o) {
                if (g[o] == 0.0) continue;
                const double* w_row = w.data() + o * in;
                for (std::size_t i = 0; i < in; ++i) gx[i] += g[o] * w_row[i];
            }
        }
        auto dw = result.grads.weight[k].data();
        for (std::size_t o = 0; o < n_out; ++o) {
            for (std::size_t i = 0; i < in; ++i) dw[o * in + i] = dwt[i * n_out + o];
        }
        grad.swap(grad_in);
    }
    if (!input_grad) return result;
    require_finite(grad, "MLP grad_input");
    std::vector<std::size_t> shape = cache.batched_input ? std::vector<std::size_t>{batch, mlp.in_dim()}
                                                         : std::vector<std::size_t>{mlp.in_dim()};
    result.grad_input = Tensor(std::move(shape), std::move(grad));
    return result;
}

}  // namespace hlt::num
