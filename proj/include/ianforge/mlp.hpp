#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ianforge/graph.hpp"
#include "ianforge/rng.hpp"
#include "ianforge/tensor.hpp"

namespace ianforge {

enum class Act { Tanh, Sigmoid, LeakyRelu, Linear };

constexpr double kLeakySlope = 0.2;

// Fully-connected network description: widths per layer and one activation
// per transition (the last entry is the output activation).
struct MlpSpec {
    std::vector<int> layer_widths;
    std::vector<Act> activations;

    static MlpSpec make(std::vector<int> widths, Act hidden, Act output) {
        if (widths.size() < 2) throw std::invalid_argument("mlp spec: needs at least 2 layers");
        for (int w : widths)
            if (w <= 0) throw std::invalid_argument("mlp spec: widths must be positive");
        MlpSpec s;
        s.layer_widths = std::move(widths);
        s.activations.assign(s.layer_widths.size() - 1, hidden);
        s.activations.back() = output;
        return s;
    }

    int input_dim() const { return layer_widths.front(); }
    int output_dim() const { return layer_widths.back(); }
    int transitions() const { return static_cast<int>(layer_widths.size()) - 1; }
};

// Named tensor collection for one network (weights W_i: [in,out], biases b_i).
struct NetworkParams {
    std::string name;
    std::vector<std::pair<std::string, Tensor>> tensors;
    MlpSpec spec;
    std::uint64_t seed = 0;

    const Tensor& find(const std::string& layer) const {
        for (const auto& [n, t] : tensors)
            if (n == layer) return t;
        throw std::invalid_argument("network '" + name + "': no tensor '" + layer + "'");
    }

    Tensor& find(const std::string& layer) {
        for (auto& [n, t] : tensors)
            if (n == layer) return t;
        throw std::invalid_argument("network '" + name + "': no tensor '" + layer + "'");
    }
};

// Glorot-uniform weights, zero biases, all draws from one seeded stream.
inline NetworkParams init_params(const std::string& name, const MlpSpec& spec, std::uint64_t seed) {
    NetworkParams p;
    p.name = name;
    p.spec = spec;
    p.seed = seed;
    Rng rng(seed);
    for (int l = 0; l < spec.transitions(); ++l) {
        const int fan_in = spec.layer_widths[static_cast<std::size_t>(l)];
        const int fan_out = spec.layer_widths[static_cast<std::size_t>(l) + 1];
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        p.tensors.emplace_back("W" + std::to_string(l), sample_uniform(rng, {fan_in, fan_out}, -a, a));
        p.tensors.emplace_back("b" + std::to_string(l), Tensor::zeros({fan_out}));
    }
    return p;
}

// FNV-1a over the raw parameter bytes; used to assert the freezing contract.
inline std::uint64_t params_checksum(const NetworkParams& p) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto eat = [&h](const void* ptr, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(ptr);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& [n, t] : p.tensors) {
        eat(n.data(), n.size());
        eat(t.data.data(), t.data.size() * sizeof(double));
    }
    return h;
}

// Appends the transitions [first, last) of the MLP to g, starting from node x.
// Leaf names are "<net>/W<l>"; trainable decides whether gradients flow to
// them. Per-transition post-activation node ids land in *taps when given.
inline int build_mlp_range(Graph& g, const MlpSpec& spec, int x, const std::string& net, bool trainable,
                           int first, int last, std::vector<int>* taps = nullptr) {
    int h = x;
    for (int l = first; l < last; ++l) {
        const int in = spec.layer_widths[static_cast<std::size_t>(l)];
        const int out = spec.layer_widths[static_cast<std::size_t>(l) + 1];
        const std::string w_name = net + "/W" + std::to_string(l);
        const std::string b_name = net + "/b" + std::to_string(l);
        const int w = trainable ? g.param(w_name, {in, out}) : g.input(w_name, {in, out});
        const int b = trainable ? g.param(b_name, {out}) : g.input(b_name, {out});
        int z = g.add(g.matmul(h, w), b);
        switch (spec.activations[static_cast<std::size_t>(l)]) {
            case Act::Tanh: z = g.tanh(z); break;
            case Act::Sigmoid: z = g.sigmoid(z); break;
            case Act::LeakyRelu: z = g.leaky_relu(z, kLeakySlope); break;
            case Act::Linear: break;
        }
        if (taps) taps->push_back(z);
        h = z;
    }
    return h;
}

inline int build_mlp(Graph& g, const MlpSpec& spec, int x, const std::string& net, bool trainable,
                     std::vector<int>* taps = nullptr) {
    return build_mlp_range(g, spec, x, net, trainable, 0, spec.transitions(), taps);
}

inline void bind_params(Bindings& b, const NetworkParams& p) {
    for (const auto& [lname, t] : p.tensors) b[p.name + "/" + lname] = t;
}

// ---- role-specific specs ------------------------------------------------

inline MlpSpec generator_spec(int latent_dim, int data_dim, std::vector<int> hidden = {64, 64}) {
    std::vector<int> widths{latent_dim};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(data_dim);
    return MlpSpec::make(std::move(widths), Act::LeakyRelu, Act::Tanh);
}

inline MlpSpec classifier_disc_spec(int data_dim, std::vector<int> hidden = {64, 64}) {
    std::vector<int> widths{data_dim};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(1);
    return MlpSpec::make(std::move(widths), Act::LeakyRelu, Act::Sigmoid);
}

// Symmetric encoder/decoder stack [D, h, code, h, D]; the code layer is
// linear, the reconstruction is tanh-bounded. Code width equals the
// generator latent so traversal can decode through the translation path.
inline MlpSpec autoencoder_disc_spec(int data_dim, int code_dim, int hidden = 64) {
    MlpSpec s = MlpSpec::make({data_dim, hidden, code_dim, hidden, data_dim}, Act::LeakyRelu, Act::Tanh);
    s.activations[1] = Act::Linear;  // code layer
    return s;
}

inline MlpSpec translator_spec(int data_dim, std::vector<int> hidden = {64, 64}) {
    std::vector<int> widths{data_dim};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(data_dim);
    return MlpSpec::make(std::move(widths), Act::LeakyRelu, Act::Tanh);
}

// Comparator: [D, 64, s_lo, s_hi, 1] with the two designated feature layers
// at widths s_lo = 32 and s_hi = 16. The sigmoid head is only used when the
// comparator doubles as a shape classifier.
inline MlpSpec comparator_spec(int data_dim, int s_lo = 32, int s_hi = 16) {
    return MlpSpec::make({data_dim, 64, s_lo, s_hi, 1}, Act::LeakyRelu, Act::Sigmoid);
}

constexpr int kComparatorLoTap = 1;  // transition producing the s_lo layer
constexpr int kComparatorHiTap = 2;  // transition producing the s_hi layer

inline int comparator_lo_dim(const MlpSpec& s) { return s.layer_widths[kComparatorLoTap + 1]; }
inline int comparator_hi_dim(const MlpSpec& s) { return s.layer_widths[kComparatorHiTap + 1]; }

// Middle layer of the symmetric autoencoder stack.
inline int autoencoder_code_layer(const MlpSpec& s) {
    return (static_cast<int>(s.layer_widths.size()) - 1) / 2;
}

inline int autoencoder_code_dim(const MlpSpec& s) {
    return s.layer_widths[static_cast<std::size_t>(autoencoder_code_layer(s))];
}

// ---- standalone forwards -------------------------------------------------

inline Tensor generator_forward(const NetworkParams& g_params, const Tensor& z) {
    if (z.cols() != g_params.spec.input_dim() || z.shape.size() != 2)
        throw std::invalid_argument("generator_forward: z must be [batch, " +
                                    std::to_string(g_params.spec.input_dim()) + "]");
    Graph g;
    const int z_node = g.input("z", z.shape);
    g.mark("out", build_mlp(g, g_params.spec, z_node, g_params.name, false));
    Bindings b;
    b["z"] = z;
    bind_params(b, g_params);
    const Forward f = forward_eval(g, b);
    return f.of(g.names().at("out"));
}

enum class DiscVariant { Classifier, Autoencoder };

struct DiscOutput {
    Tensor score;                          // [B,1] probabilities, or [B,1] per-sample energies
    std::optional<Tensor> code;            // autoencoder only
    std::optional<Tensor> reconstruction;  // autoencoder only
};

inline DiscOutput discriminator_forward(const NetworkParams& d_params, const Tensor& x,
                                        DiscVariant variant) {
    if (x.shape.size() != 2 || x.cols() != d_params.spec.input_dim())
        throw std::invalid_argument("discriminator_forward: x must be [batch, " +
                                    std::to_string(d_params.spec.input_dim()) + "]");
    Graph g;
    const int x_node = g.input("x", x.shape);
    Bindings b;
    b["x"] = x;
    bind_params(b, d_params);

    if (variant == DiscVariant::Classifier) {
        g.mark("p", build_mlp(g, d_params.spec, x_node, d_params.name, false));
        const Forward f = forward_eval(g, b);
        return DiscOutput{f.of(g.names().at("p")), std::nullopt, std::nullopt};
    }

    std::vector<int> taps;
    g.mark("rec", build_mlp(g, d_params.spec, x_node, d_params.name, false, &taps));
    const int code_tap = autoencoder_code_layer(d_params.spec) - 1;
    g.mark("code", taps[static_cast<std::size_t>(code_tap)]);
    const Forward f = forward_eval(g, b);
    const Tensor& rec = f.of(g.names().at("rec"));

    const int batch = x.shape[0];
    const int dim = x.shape[1];
    Tensor energy = Tensor::zeros({batch, 1});
    for (int i = 0; i < batch; ++i) {
        double acc = 0.0;
        for (int j = 0; j < dim; ++j) acc += std::abs(x.at(i, j) - rec.at(i, j));
        energy.data[static_cast<std::size_t>(i)] = acc / static_cast<double>(dim);
    }
    return DiscOutput{std::move(energy), f.of(g.names().at("code")), rec};
}

struct ComparatorFeatures {
    Tensor f_lo;  // [B, s_lo]
    Tensor f_hi;  // [B, s_hi]
};

// Designated hidden-layer activations of the frozen comparator. Gradients
// never reach C's tensors (they enter graphs as plain inputs), but do flow
// through C into whatever produced x.
inline ComparatorFeatures comparator_features(const NetworkParams& c_params, const Tensor& x) {
    if (x.shape.size() != 2 || x.cols() != c_params.spec.input_dim())
        throw std::invalid_argument("comparator_features: x must be [batch, " +
                                    std::to_string(c_params.spec.input_dim()) + "]");
    Graph g;
    const int x_node = g.input("x", x.shape);
    std::vector<int> taps;
    build_mlp(g, c_params.spec, x_node, c_params.name, false, &taps);
    g.mark("f_lo", taps[kComparatorLoTap]);
    g.mark("f_hi", taps[kComparatorHiTap]);
    Bindings b;
    b["x"] = x;
    bind_params(b, c_params);
    const Forward f = forward_eval(g, b);
    return ComparatorFeatures{f.of(g.names().at("f_lo")), f.of(g.names().at("f_hi"))};
}

// Rows of a [B, s] activation matrix as individual feature vectors.
inline std::vector<std::vector<double>> tensor_rows(const Tensor& t) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(t.rows()));
    for (int i = 0; i < t.rows(); ++i)
        rows[static_cast<std::size_t>(i)] =
            std::vector<double>(t.data.begin() + static_cast<std::ptrdiff_t>(i) * t.cols(),
                                t.data.begin() + static_cast<std::ptrdiff_t>(i + 1) * t.cols());
    return rows;
}

}  // namespace ianforge
