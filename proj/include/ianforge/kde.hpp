#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ianforge/ball_tree.hpp"
#include "ianforge/rng.hpp"

namespace ianforge {

// Gaussian KDE over the M target features, kernel exp(-||f - c_i||^2 / sigma^2)
// with normalizer 1/(M sigma sqrt(2 pi)).
struct KdeEstimator {
    FeatureSet fs;
    double sigma = 1.0;

    KdeEstimator(FeatureSet f, double s) : fs(std::move(f)), sigma(s) {
        fs.check();
        if (!(sigma > 0.0)) throw std::invalid_argument("kde: sigma must be positive");
    }
};

namespace detail {

inline double log_sum_exp(const std::vector<double>& args) {
    double m = args[0];
    for (double a : args) m = std::max(m, a);
    double acc = 0.0;
    for (double a : args) acc += std::exp(a - m);
    return m + std::log(acc);
}

inline double kde_log_norm(const KdeEstimator& est) {
    return -std::log(static_cast<double>(est.fs.size()) * est.sigma * std::sqrt(2.0 * M_PI));
}

}  // namespace detail

// log of the KDE density, stabilized with log-sum-exp so distant queries
// stay finite instead of underflowing to -inf.
inline double kde_log_density(const KdeEstimator& est, const std::vector<double>& f) {
    if (static_cast<int>(f.size()) != est.fs.dim)
        throw std::invalid_argument("kde: query dimension mismatch");
    const double s2 = est.sigma * est.sigma;
    std::vector<double> exponents(est.fs.size());
    for (std::size_t i = 0; i < est.fs.size(); ++i)
        exponents[i] = -squared_dist(f, est.fs.points[i]) / s2;
    return detail::kde_log_norm(est) + detail::log_sum_exp(exponents);
}

// Truncated variant: the sum runs over the k nearest features only, while the
// normalizer keeps M. Always <= kde_log_density.
inline double kde_topk_log_density(const KdeEstimator& est, const std::vector<double>& f, int k,
                                   const BallTree& tree) {
    const auto nbrs = tree.query(f, k);
    const double s2 = est.sigma * est.sigma;
    std::vector<double> exponents(nbrs.size());
    for (std::size_t i = 0; i < nbrs.size(); ++i)
        exponents[i] = -(nbrs[i].distance * nbrs[i].distance) / s2;
    return detail::kde_log_norm(est) + detail::log_sum_exp(exponents);
}

// Slack of the Jensen upper bound at sigma = 1:
//   RHS - LHS, LHS = -log P_topk(f), RHS = log(M sqrt(2pi)/k) + mean_i ||f - r_i||^2.
// Nonnegative for every input; zero exactly when the k neighbor distances tie.
inline double jensen_bound_gap(const KdeEstimator& est, const std::vector<double>& f, int k,
                               const BallTree& tree) {
    if (est.sigma != 1.0)
        throw std::invalid_argument("jensen_bound_gap: bound established for sigma == 1 only");
    const auto nbrs = tree.query(f, k);
    double mean_sq = 0.0;
    for (const auto& nb : nbrs) mean_sq += nb.distance * nb.distance;
    mean_sq /= static_cast<double>(k);
    const double rhs =
        std::log(static_cast<double>(est.fs.size()) * std::sqrt(2.0 * M_PI) / static_cast<double>(k)) +
        mean_sq;
    const double lhs = -kde_topk_log_density(est, f, k, tree);
    return rhs - lhs;
}

constexpr int kDefaultMcSamples = 512;

// Monte-Carlo estimate of the proxy cross-entropy: mean over n_z latent draws
// z ~ U[-1,1]^d of -log P(gen_fn(z)).
inline double cross_entropy_mc(const std::function<std::vector<double>(const std::vector<double>&)>& gen_fn,
                               const KdeEstimator& est, int n_z, int latent_dim, Rng& rng) {
    if (n_z < 1) throw std::invalid_argument("cross_entropy_mc: n_z must be >= 1");
    double acc = 0.0;
    std::vector<double> z(static_cast<std::size_t>(latent_dim));
    for (int i = 0; i < n_z; ++i) {
        for (auto& v : z) v = rng.uniform(-1.0, 1.0);
        acc += -kde_log_density(est, gen_fn(z));
    }
    return acc / static_cast<double>(n_z);
}

}  // namespace ianforge
