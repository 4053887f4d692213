#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ianforge/graph.hpp"
#include "ianforge/mlp.hpp"

namespace ianforge {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moment buffers mirroring one network's parameters.
struct AdamState {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments;
    long t = 0;
};

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
inline double clip_global_norm(GradMap& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads)
        for (double v : g.data) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double s = max_norm / norm;
        for (auto& [name, g] : grads)
            for (auto& v : g.data) v *= s;
    }
    return norm;
}

// One bias-corrected Adam step: p <- p - lr * m_hat / (sqrt(v_hat) + eps).
// Gradient keys are "<net>/<layer>"; tensors without a gradient entry keep
// their value (their moments still decay-free since t is global).
inline void adam_update(AdamState& state, NetworkParams& params, const GradMap& grads,
                        const AdamConfig& cfg) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (auto& [lname, tensor] : params.tensors) {
        const std::string key = params.name + "/" + lname;
        auto git = grads.find(key);
        if (git == grads.end()) continue;
        const Tensor& g = git->second;
        if (g.data.size() != tensor.data.size())
            throw std::invalid_argument("adam_update: gradient shape mismatch for " + key);
        auto& [m, v] = state.moments[key];
        if (m.empty()) {
            m.assign(tensor.data.size(), 0.0);
            v.assign(tensor.data.size(), 0.0);
        }
        for (std::size_t i = 0; i < tensor.data.size(); ++i) {
            const double gi = g.data[i];
            if (!std::isfinite(gi)) throw NumericError("adam_update: non-finite gradient in " + key);
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            tensor.data[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

}  // namespace ianforge
