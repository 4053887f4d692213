#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ianforge/mlp.hpp"
#include "ianforge/parallel.hpp"
#include "ianforge/rng.hpp"
#include "ianforge/tensor.hpp"

namespace ianforge {

namespace detail {

// Distance from one row vector to its nearest row of the set (brute force;
// eval sets stay small enough that the tree is not worth it here).
inline double nearest_row_dist(const Tensor& set, const double* row, int dim) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < set.rows(); ++i) {
        const double* p = &set.data[static_cast<std::size_t>(i) * dim];
        double acc = 0.0;
        for (int j = 0; j < dim; ++j) {
            const double d = row[j] - p[j];
            acc += d * d;
        }
        best = std::min(best, acc);
    }
    return std::sqrt(best);
}

}  // namespace detail

// J: mean distance from uniform [-1,1] noise to its nearest training example;
// the normalizer of err(x).
inline double noise_baseline_J(const Tensor& train_set, int n_noise, Rng& rng) {
    if (train_set.rows() < 1 || train_set.data.empty())
        throw std::invalid_argument("noise_baseline_J: empty training set");
    if (n_noise < 1) throw std::invalid_argument("noise_baseline_J: n_noise must be >= 1");
    const int dim = train_set.cols();
    const Tensor noise = sample_uniform(rng, {n_noise, dim}, -1.0, 1.0);
    std::vector<double> dist(static_cast<std::size_t>(n_noise));
    parallel_for(n_noise, [&](int i) {
        dist[static_cast<std::size_t>(i)] =
            detail::nearest_row_dist(train_set, &noise.data[static_cast<std::size_t>(i) * dim], dim);
    });
    double acc = 0.0;
    for (double d : dist) acc += d;
    return acc / static_cast<double>(n_noise);
}

// err(x) = ||x - NN(x)||_2 / J. Zero exactly when x is a training example;
// about 1 when x is no better than uniform noise.
inline double nn_pixel_error(const std::vector<double>& sample, const Tensor& train_set, double J) {
    if (!(J > 0.0)) throw std::invalid_argument("nn_pixel_error: requires J > 0");
    if (static_cast<int>(sample.size()) != train_set.cols())
        throw std::invalid_argument("nn_pixel_error: sample dimension mismatch");
    return detail::nearest_row_dist(train_set, sample.data(), train_set.cols()) / J;
}

inline double mean_nn_pixel_error(const Tensor& samples, const Tensor& train_set, double J) {
    if (!(J > 0.0)) throw std::invalid_argument("nn_pixel_error: requires J > 0");
    const int dim = train_set.cols();
    std::vector<double> err(static_cast<std::size_t>(samples.rows()));
    parallel_for(samples.rows(), [&](int i) {
        err[static_cast<std::size_t>(i)] =
            detail::nearest_row_dist(train_set, &samples.data[static_cast<std::size_t>(i) * dim], dim) / J;
    });
    double acc = 0.0;
    for (double e : err) acc += e;
    return acc / static_cast<double>(samples.rows());
}

// Mean softmax probability of class_id under the binary proxy classifier
// (sigmoid head: class 1 gets p, class 0 gets 1-p).
inline double proxy_class_score(const NetworkParams& classifier, const Tensor& samples, int class_id) {
    if (class_id != 0 && class_id != 1)
        throw std::invalid_argument("proxy_class_score: class_id out of range for a binary classifier");
    Graph g;
    const int x = g.input("x", samples.shape);
    g.mark("p", build_mlp(g, classifier.spec, x, classifier.name, false));
    Bindings b;
    b["x"] = samples;
    bind_params(b, classifier);
    const Tensor p = forward_eval(g, b).of(g.names().at("p"));
    double acc = 0.0;
    for (double v : p.data) acc += class_id == 1 ? v : 1.0 - v;
    return acc / static_cast<double>(p.data.size());
}

// Row-structure matches the paper-style score/err table.
struct EvalReport {
    double err_x = 0.0;
    double err_y = 0.0;
    double score_x = 0.0;
    double score_y = 0.0;
    double score_avg = 0.0;
    int n_samples = 0;
    std::string config_hash;
};

// Scores and normalized errors of one sample set against both domains.
// Class convention: the proxy classifier was trained with X as class 0 and
// Y as class 1.
inline EvalReport evaluate(const Tensor& samples, const Tensor& x_set, const Tensor& y_set,
                           const NetworkParams& classifier, int n_noise, Rng& rng,
                           std::string config_hash = "") {
    if (samples.rows() < 1) throw std::invalid_argument("evaluate: needs at least one sample");
    EvalReport r;
    r.n_samples = samples.rows();
    r.config_hash = std::move(config_hash);
    const double jx = noise_baseline_J(x_set, n_noise, rng);
    const double jy = noise_baseline_J(y_set, n_noise, rng);
    r.err_x = mean_nn_pixel_error(samples, x_set, jx);
    r.err_y = mean_nn_pixel_error(samples, y_set, jy);
    r.score_x = proxy_class_score(classifier, samples, 0);
    r.score_y = proxy_class_score(classifier, samples, 1);
    r.score_avg = 0.5 * (r.score_x + r.score_y);
    return r;
}

// Mean distance from the comparator features of samples to their nearest
// target features, averaged over the two designated layers. The quantity the
// KNN regularizer acts on.
inline double mean_feature_nn_distance(const NetworkParams& comparator, const Tensor& samples,
                                       const Tensor& y_set) {
    const ComparatorFeatures fs = comparator_features(comparator, samples);
    const ComparatorFeatures fy = comparator_features(comparator, y_set);
    double acc = 0.0;
    for (const auto& [f, ref] : {std::pair<const Tensor&, const Tensor&>{fs.f_hi, fy.f_hi},
                                 std::pair<const Tensor&, const Tensor&>{fs.f_lo, fy.f_lo}}) {
        double layer = 0.0;
        for (int i = 0; i < f.rows(); ++i)
            layer += detail::nearest_row_dist(ref, &f.data[static_cast<std::size_t>(i) * f.cols()], f.cols());
        acc += layer / static_cast<double>(f.rows());
    }
    return acc / 2.0;
}

}  // namespace ianforge
