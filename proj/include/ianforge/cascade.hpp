#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ianforge/mlp.hpp"

namespace ianforge {

// IAN composition: sampler G followed by translator A.
struct IanPipeline {
    NetworkParams sampler;
    NetworkParams translator;
    std::string provenance;  // config hashes of both trainings

    IanPipeline(NetworkParams g, NetworkParams a, std::string prov = "")
        : sampler(std::move(g)), translator(std::move(a)), provenance(std::move(prov)) {
        if (sampler.spec.output_dim() != translator.spec.input_dim())
            throw std::invalid_argument("ian pipeline: sampler output space " +
                                        std::to_string(sampler.spec.output_dim()) +
                                        " does not match translator input space " +
                                        std::to_string(translator.spec.input_dim()));
    }
};

inline Tensor ian_sample(const IanPipeline& pipe, const Tensor& z) {
    return generator_forward(pipe.translator, generator_forward(pipe.sampler, z));
}

// Encoder half of the autoencoder discriminator: x -> code.
inline Tensor autoencoder_encode(const NetworkParams& d, const Tensor& x) {
    Graph g;
    const int x_node = g.input("x", x.shape);
    const int code_layer = autoencoder_code_layer(d.spec);
    g.mark("code", build_mlp_range(g, d.spec, x_node, d.name, false, 0, code_layer));
    Bindings b;
    b["x"] = x;
    bind_params(b, d);
    return forward_eval(g, b).of(g.names().at("code"));
}

// Decoder half: code -> reconstruction.
inline Tensor autoencoder_decode(const NetworkParams& d, const Tensor& codes) {
    Graph g;
    const int code_layer = autoencoder_code_layer(d.spec);
    const int c_node = g.input("code", codes.shape);
    g.mark("rec", build_mlp_range(g, d.spec, c_node, d.name, false, code_layer, d.spec.transitions()));
    Bindings b;
    b["code"] = codes;
    bind_params(b, d);
    return forward_eval(g, b).of(g.names().at("rec"));
}

struct TraversalPlan {
    Tensor x_a;  // [1, D]
    Tensor x_b;  // [1, D]
    int n_points = 2;
    std::vector<const NetworkParams*> translators;

    void check() const {
        if (n_points < 2) throw std::invalid_argument("traversal: N must be >= 2");
        if (!same_shape(x_a.shape, x_b.shape) || x_a.shape.size() != 2 || x_a.shape[0] != 1)
            throw std::invalid_argument("traversal: endpoints must be two [1,D] samples");
    }
};

// rows x cols grid of data-space samples, cell (r,c) at row r*cols+c.
struct TraversalGrid {
    int rows = 0;
    int cols = 0;
    Tensor cells;  // [rows*cols, D]

    const double* cell(int r, int c) const {
        return &cells.data[static_cast<std::size_t>(r * cols + c) * cells.cols()];
    }
};

// Encodes the two endpoints with the autoencoder discriminator's encoder,
// decodes N convex combinations of the codes (row 0), and translates that
// row through each translator (rows 1..T).
inline TraversalGrid manifold_traverse(const TraversalPlan& plan, const NetworkParams& ae_disc,
                                       DiscVariant variant) {
    plan.check();
    if (variant != DiscVariant::Autoencoder)
        throw std::invalid_argument("manifold_traverse: needs the autoencoder discriminator variant");
    const Tensor za = autoencoder_encode(ae_disc, plan.x_a);
    const Tensor zb = autoencoder_encode(ae_disc, plan.x_b);

    const int n = plan.n_points;
    const int code_dim = za.cols();
    Tensor codes = Tensor::zeros({n, code_dim});
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        for (int j = 0; j < code_dim; ++j)
            codes.at(i, j) = (1.0 - t) * za.data[static_cast<std::size_t>(j)] +
                             t * zb.data[static_cast<std::size_t>(j)];
    }

    const Tensor base = autoencoder_decode(ae_disc, codes);
    const int dim = base.cols();
    TraversalGrid grid;
    grid.rows = 1 + static_cast<int>(plan.translators.size());
    grid.cols = n;
    grid.cells = Tensor::zeros({grid.rows * n, dim});

    auto put_row = [&](int r, const Tensor& row_samples) {
        for (int c = 0; c < n; ++c)
            for (int j = 0; j < dim; ++j) grid.cells.at(r * n + c, j) = row_samples.at(c, j);
    };
    put_row(0, base);
    for (std::size_t t = 0; t < plan.translators.size(); ++t)
        put_row(static_cast<int>(t) + 1, generator_forward(*plan.translators[t], base));
    return grid;
}

}  // namespace ianforge
