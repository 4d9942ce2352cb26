#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ehcrn/error.hpp"
#include "ehcrn/random.hpp"

namespace ehcrn {

/// Hidden-layer nonlinearity. The output layer is always linear.
enum class Activation : std::uint32_t { ReLU = 1, Tanh = 2, Identity = 3 };

inline double activate(Activation act, double x) {
    switch (act) {
    case Activation::ReLU:
        return x > 0.0 ? x : 0.0;
    case Activation::Tanh:
        return std::tanh(x);
    case Activation::Identity:
        break;
    }
    return x;
}

/// Derivative expressed through the activation output y = f(x).
inline double activate_derivative(Activation act, double y) {
    switch (act) {
    case Activation::ReLU:
        return y > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh:
        return 1.0 - y * y;
    case Activation::Identity:
        break;
    }
    return 1.0;
}

/// Parameter initialization range.
enum class WeightInit {
    HeUniform,    ///< bound sqrt(6 / fan_in): keeps ReLU activation variance across layers
    FanInUniform  ///< bound 1 / sqrt(fan_in)
};

/// One affine map; weights are row-major, outputs x inputs.
struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;
    std::vector<double> biases;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out) : inputs(in), outputs(out), weights(in * out, 0.0), biases(out, 0.0) {}

    bool same_shape(const DenseLayer& o) const { return inputs == o.inputs && outputs == o.outputs; }
    bool operator==(const DenseLayer&) const = default;
};

/// Holds dL/dtheta, shape-congruent with the network it was produced for.
struct GradientSet {
    std::vector<DenseLayer> layers;

    void set_zero() {
        for (auto& l : layers) {
            std::fill(l.weights.begin(), l.weights.end(), 0.0);
            std::fill(l.biases.begin(), l.biases.end(), 0.0);
        }
    }

    void scale(double factor) {
        for (auto& l : layers) {
            for (double& w : l.weights) w *= factor;
            for (double& b : l.biases) b *= factor;
        }
    }

    double squared_norm() const {
        double s = 0.0;
        for (const auto& l : layers) {
            for (double w : l.weights) s += w * w;
            for (double b : l.biases) s += b * b;
        }
        return s;
    }
};

/// A replay record in network-input space.
struct Transition {
    std::vector<double> state;
    std::size_t action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

/// Dense feed-forward Q(s, .; theta) approximator.
class QNetwork {
public:
    QNetwork() = default;

    /// Zero-initialized network with the given layer widths (input first, output last).
    explicit QNetwork(std::vector<std::size_t> dims, Activation hidden = Activation::ReLU)
        : dims_(std::move(dims)), hidden_(hidden) {
        if (dims_.size() < 2) {
            throw ShapeError("QNetwork needs at least an input and an output width");
        }
        for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
            if (dims_[i] == 0 || dims_[i + 1] == 0) {
                throw ShapeError("QNetwork layer widths must be positive");
            }
            layers_.emplace_back(dims_[i], dims_[i + 1]);
        }
    }

    /// Weights and biases drawn uniformly in [-bound, bound]; see WeightInit.
    static QNetwork random(std::vector<std::size_t> dims, RandomStream& stream,
                           Activation hidden = Activation::ReLU, WeightInit init = WeightInit::HeUniform) {
        QNetwork net(std::move(dims), hidden);
        for (auto& l : net.layers_) {
            const double fan_in = static_cast<double>(l.inputs);
            const double bound = init == WeightInit::HeUniform ? std::sqrt(6.0 / fan_in) : 1.0 / std::sqrt(fan_in);
            for (double& w : l.weights) w = stream.uniform(-bound, bound);
            for (double& b : l.biases) b = stream.uniform(-bound, bound);
        }
        return net;
    }

    const std::vector<std::size_t>& dims() const { return dims_; }
    Activation hidden_activation() const { return hidden_; }
    std::size_t input_size() const { return dims_.front(); }
    std::size_t output_size() const { return dims_.back(); }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
        return n;
    }

    /// Flat parameter view: layer by layer, weights then biases.
    double& parameter(std::size_t flat) {
        for (auto& l : layers_) {
            if (flat < l.weights.size()) return l.weights[flat];
            flat -= l.weights.size();
            if (flat < l.biases.size()) return l.biases[flat];
            flat -= l.biases.size();
        }
        throw ShapeError("parameter index out of range");
    }

    GradientSet zero_gradients() const {
        GradientSet g;
        for (const auto& l : layers_) g.layers.emplace_back(l.inputs, l.outputs);
        return g;
    }

    bool all_finite() const {
        for (const auto& l : layers_) {
            for (double w : l.weights)
                if (!std::isfinite(w)) return false;
            for (double b : l.biases)
                if (!std::isfinite(b)) return false;
        }
        return true;
    }

    std::vector<double> forward(std::span<const double> state) const {
        std::vector<std::vector<double>> acts;
        forward_cached(state, acts);
        return std::move(acts.back());
    }

    /// Forward pass that keeps every layer's output; acts[0] is the input.
    void forward_cached(std::span<const double> state, std::vector<std::vector<double>>& acts) const {
        if (state.size() != input_size()) {
            throw ShapeError("forward: state has " + std::to_string(state.size()) + " entries, network expects " +
                             std::to_string(input_size()));
        }
        acts.resize(layers_.size() + 1);
        acts[0].assign(state.begin(), state.end());
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            const DenseLayer& l = layers_[li];
            const std::vector<double>& in = acts[li];
            std::vector<double>& out = acts[li + 1];
            out.resize(l.outputs);
            const bool last = li + 1 == layers_.size();
            for (std::size_t o = 0; o < l.outputs; ++o) {
                const double* row = l.weights.data() + o * l.inputs;
                double z = l.biases[o];
                for (std::size_t i = 0; i < l.inputs; ++i) z += row[i] * in[i];
                out[o] = last ? z : activate(hidden_, z);
            }
        }
    }

    bool operator==(const QNetwork&) const = default;

private:
    std::vector<std::size_t> dims_;
    Activation hidden_ = Activation::ReLU;
    std::vector<DenseLayer> layers_;
};

inline std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

inline QNetwork clone_parameters(const QNetwork& src) { return src; }

/// Largest absolute parameter difference between two same-shaped networks.
inline double parameter_distance(const QNetwork& a, const QNetwork& b) {
    if (a.dims() != b.dims()) throw ShapeError("parameter_distance: shape mismatch");
    double d = 0.0;
    for (std::size_t li = 0; li < a.layers().size(); ++li) {
        const auto& la = a.layers()[li];
        const auto& lb = b.layers()[li];
        for (std::size_t k = 0; k < la.weights.size(); ++k) d = std::max(d, std::abs(la.weights[k] - lb.weights[k]));
        for (std::size_t k = 0; k < la.biases.size(); ++k) d = std::max(d, std::abs(la.biases[k] - lb.biases[k]));
    }
    return d;
}

struct LossResult {
    double loss = 0.0;
    GradientSet grads;
};

/// Mean squared TD error of `net` against bootstrapped targets from `target`,
/// together with its gradient w.r.t. the parameters of `net`. Targets are
/// constants: no gradient flows into `target`, and terminal transitions drop
/// the bootstrap term.
inline LossResult td_loss(const QNetwork& net, const QNetwork& target, std::span<const Transition* const> batch,
                          double gamma) {
    if (batch.empty()) throw InvalidParameter("td_loss: empty batch");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidParameter("td_loss: gamma must lie in [0, 1]");
    if (net.dims() != target.dims()) throw ShapeError("td_loss: online and target networks differ in shape");

    LossResult result{0.0, net.zero_gradients()};
    const auto& layers = net.layers();
    const std::size_t depth = layers.size();
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> target_acts;
    std::vector<double> delta;
    std::vector<double> delta_prev;

    for (const Transition* t : batch) {
        if (t->action >= net.output_size()) throw ShapeError("td_loss: action index outside output layer");

        double y = t->reward;
        if (!t->terminal && gamma > 0.0) {
            target.forward_cached(t->next_state, target_acts);
            const auto& q_next = target_acts.back();
            y += gamma * *std::max_element(q_next.begin(), q_next.end());
        }

        net.forward_cached(t->state, acts);
        const double err = acts.back()[t->action] - y;
        result.loss += err * err * inv_batch;

        // Output delta is non-zero only at the taken action.
        delta.assign(net.output_size(), 0.0);
        delta[t->action] = 2.0 * err * inv_batch;

        for (std::size_t li = depth; li-- > 0;) {
            const DenseLayer& l = layers[li];
            DenseLayer& g = result.grads.layers[li];
            const std::vector<double>& in = acts[li];
            for (std::size_t o = 0; o < l.outputs; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                g.biases[o] += d;
                double* grow = g.weights.data() + o * l.inputs;
                for (std::size_t i = 0; i < l.inputs; ++i) grow[i] += d * in[i];
            }
            if (li == 0) break;
            delta_prev.assign(l.inputs, 0.0);
            for (std::size_t o = 0; o < l.outputs; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                const double* row = l.weights.data() + o * l.inputs;
                for (std::size_t i = 0; i < l.inputs; ++i) delta_prev[i] += row[i] * d;
            }
            for (std::size_t i = 0; i < l.inputs; ++i) {
                delta_prev[i] *= activate_derivative(net.hidden_activation(), in[i]);
            }
            delta.swap(delta_prev);
        }
    }
    return result;
}

inline LossResult td_loss(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                          double gamma) {
    std::vector<const Transition*> ptrs;
    ptrs.reserve(batch.size());
    for (const auto& t : batch) ptrs.push_back(&t);
    return td_loss(net, target, std::span<const Transition* const>(ptrs), gamma);
}

/// Plain gradient descent: theta <- theta - alpha * grads.
inline void sgd_step(QNetwork& net, const GradientSet& grads, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("sgd_step: learning rate must lie in (0, 1)");
    auto& layers = net.layers();
    if (grads.layers.size() != layers.size()) throw ShapeError("sgd_step: gradient depth mismatch");
    for (std::size_t li = 0; li < layers.size(); ++li) {
        DenseLayer& l = layers[li];
        const DenseLayer& g = grads.layers[li];
        if (!l.same_shape(g)) throw ShapeError("sgd_step: gradient shape mismatch at layer " + std::to_string(li));
        for (std::size_t k = 0; k < l.weights.size(); ++k) l.weights[k] -= alpha * g.weights[k];
        for (std::size_t k = 0; k < l.biases.size(); ++k) l.biases[k] -= alpha * g.biases[k];
    }
    if (!net.all_finite()) throw std::runtime_error("sgd_step: non-finite parameter after update");
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Little-endian throughout:
//   8 bytes  magic "EHCRNQN\0"
//   u32      format version (1)
//   u32      hidden activation tag (1 ReLU, 2 Tanh, 3 Identity)
//   u32      number of widths L+1
//   u32[L+1] layer widths, input first
//   f64[]    per layer: weights row-major (outputs x inputs), then biases
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 8> kCheckpointMagic{'E', 'H', 'C', 'R', 'N', 'Q', 'N', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b, 4);
}

inline void put_f64(std::ostream& os, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b, 8);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

} // namespace detail

inline void save_checkpoint(const QNetwork& net, std::ostream& os) {
    os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    detail::put_u32(os, kCheckpointVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(net.hidden_activation()));
    detail::put_u32(os, static_cast<std::uint32_t>(net.dims().size()));
    for (std::size_t d : net.dims()) detail::put_u32(os, static_cast<std::uint32_t>(d));
    for (const auto& l : net.layers()) {
        for (double w : l.weights) detail::put_f64(os, w);
        for (double b : l.biases) detail::put_f64(os, b);
    }
    if (!os) throw std::runtime_error("checkpoint write failed");
}

inline QNetwork load_checkpoint(std::istream& is) {
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kCheckpointMagic) {
        throw std::runtime_error("not a Q-network checkpoint");
    }
    const std::uint32_t version = detail::get_u32(is);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint32_t tag = detail::get_u32(is);
    if (tag < 1 || tag > 3) throw std::runtime_error("unknown activation tag in checkpoint");
    const std::uint32_t count = detail::get_u32(is);
    if (count < 2 || count > 64) throw std::runtime_error("implausible layer count in checkpoint");
    std::vector<std::size_t> dims(count);
    for (auto& d : dims) d = detail::get_u32(is);
    QNetwork net(dims, static_cast<Activation>(tag));
    for (auto& l : net.layers()) {
        for (double& w : l.weights) w = detail::get_f64(is);
        for (double& b : l.biases) b = detail::get_f64(is);
    }
    return net;
}

} // namespace ehcrn
