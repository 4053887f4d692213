#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ianforge/adam.hpp"
#include "ianforge/ball_tree.hpp"
#include "ianforge/graph.hpp"
#include "ianforge/mlp.hpp"
#include "ianforge/parallel.hpp"
#include "ianforge/rng.hpp"

namespace ianforge {

enum class KnnMode { Nearest, Random };
enum class TrainModel { Vanilla, Kgan };

// Hinge target for the energy (autoencoder) discriminator update.
constexpr double kEnergyMargin = 1.0;

struct TrainConfig {
    TrainModel model = TrainModel::Vanilla;
    int k = 4;
    double mu_hi = 0.001;  // coefficient on the high feature layer (FC7 analog)
    double mu_lo = 0.0001;  // coefficient on the low feature layer (FC6 analog)
    double lambda_cyc = 10.0;
    double lr = 1e-3;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch = 64;
    int steps = 3000;
    std::uint64_t seed = 1;
    KnnMode knn_mode = KnnMode::Nearest;
    bool mix_datasets = false;
    DiscVariant disc_variant = DiscVariant::Classifier;
    int leaf_size = 16;
    double clip_norm = 10.0;
    int checkpoint_every = 0;  // 0: only the final checkpoint

    void check() const {
        if (k < 1) throw std::invalid_argument("config: k must be >= 1");
        if (mu_hi < 0 || mu_lo < 0) throw std::invalid_argument("config: mu must be >= 0");
        if (lambda_cyc < 0) throw std::invalid_argument("config: lambda must be >= 0");
        if (!(lr > 0)) throw std::invalid_argument("config: lr must be > 0");
        if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
            throw std::invalid_argument("config: betas must be in [0,1)");
        if (batch < 1) throw std::invalid_argument("config: batch must be >= 1");
        if (steps < 0) throw std::invalid_argument("config: steps must be >= 0");
    }

    AdamConfig adam() const { return AdamConfig{lr, beta1, beta2, eps}; }
};

struct StepReport {
    double loss_d = 0.0;
    double loss_g = 0.0;
    double loss_knn_hi = 0.0;
    double loss_knn_lo = 0.0;
    double loss_cyc = 0.0;
    double utilization = 0.0;
};

struct GanNets {
    NetworkParams g;
    NetworkParams d;
};

struct GanOptims {
    AdamState g;
    AdamState d;
};

// Per-layer KNN search state for K-GAN: target features of one comparator
// layer, the tree over them, and the utilization set.
struct KnnLayer {
    std::unique_ptr<BallTree> tree;
    std::unique_ptr<UtilizationTracker> tracker;

    explicit KnnLayer(FeatureSet fs, int leaf_size)
        : tree(std::make_unique<BallTree>(std::move(fs), leaf_size)),
          tracker(std::make_unique<UtilizationTracker>(static_cast<int>(tree->features().size()))) {}
};

struct KnnContext {
    KnnLayer hi;
    KnnLayer lo;
    const NetworkParams* comparator;

    // Extracts both feature layers of the target set through the comparator
    // and indexes them.
    KnnContext(const NetworkParams& c, const Tensor& y_set, int leaf_size)
        : hi(make_layer_set(c, y_set, /*high=*/true), leaf_size),
          lo(make_layer_set(c, y_set, /*high=*/false), leaf_size),
          comparator(&c) {}

    static FeatureSet make_layer_set(const NetworkParams& c, const Tensor& y_set, bool high) {
        const ComparatorFeatures feats = comparator_features(c, y_set);
        return FeatureSet(high ? feats.f_hi.cols() : feats.f_lo.cols(),
                          tensor_rows(high ? feats.f_hi : feats.f_lo));
    }
};

namespace detail {

inline std::vector<int> draw_indices(Rng& rng, int n, int count) {
    std::vector<int> idx(static_cast<std::size_t>(count));
    for (auto& i : idx) i = std::min(n - 1, static_cast<int>(rng.uniform01() * n));
    return idx;
}

inline Tensor gather_rows(const Tensor& set, const std::vector<int>& idx) {
    const int cols = set.cols();
    Tensor out = Tensor::zeros({static_cast<int>(idx.size()), cols});
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < cols; ++j) out.at(static_cast<int>(i), j) = set.at(idx[i], j);
    return out;
}

// k distinct uniformly random stored features, partial Fisher-Yates.
inline std::vector<double> random_mean_target(const FeatureSet& fs, int k, Rng& rng,
                                              UtilizationTracker& tracker) {
    const int m = static_cast<int>(fs.size());
    std::vector<int> pool(static_cast<std::size_t>(m));
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<double> mean(static_cast<std::size_t>(fs.dim), 0.0);
    for (int i = 0; i < k; ++i) {
        const int j = i + std::min(m - 1 - i, static_cast<int>(rng.uniform01() * (m - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        const int pick = pool[static_cast<std::size_t>(i)];
        tracker.record(pick);
        const auto& p = fs.points[static_cast<std::size_t>(pick)];
        for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[c];
    }
    for (auto& v : mean) v /= static_cast<double>(k);
    return mean;
}

// Per-sample regression targets for one comparator layer. Nearest mode fans
// out across workers (tree is read-only); tracker updates happen afterwards
// on the calling thread, in input order.
inline Tensor layer_targets(const Tensor& feats, KnnLayer& layer, int k, KnnMode mode, Rng& rng) {
    const int batch = feats.rows();
    const int dim = feats.cols();
    Tensor targets = Tensor::zeros({batch, dim});
    if (mode == KnnMode::Nearest) {
        std::vector<std::vector<Neighbor>> found(static_cast<std::size_t>(batch));
        const auto rows = tensor_rows(feats);
        const BallTree& tree = *layer.tree;
        parallel_for(batch, [&](int i) { found[static_cast<std::size_t>(i)] = tree.query(rows[static_cast<std::size_t>(i)], k); });
        for (int i = 0; i < batch; ++i) {
            for (const auto& nb : found[static_cast<std::size_t>(i)]) {
                layer.tracker->record(nb.index);
                const auto& p = tree.features().points[static_cast<std::size_t>(nb.index)];
                for (int j = 0; j < dim; ++j) targets.at(i, j) += p[static_cast<std::size_t>(j)];
            }
            for (int j = 0; j < dim; ++j) targets.at(i, j) /= static_cast<double>(k);
        }
    } else {
        const auto rows = tensor_rows(feats);
        (void)rows;
        for (int i = 0; i < batch; ++i) {
            const auto mean = random_mean_target(layer.tree->features(), k, rng, *layer.tracker);
            for (int j = 0; j < dim; ++j) targets.at(i, j) = mean[static_cast<std::size_t>(j)];
        }
    }
    return targets;
}

// Mean per-sample reconstruction energy node: |x - rec| averaged over every
// element of the batch.
inline int energy_node(Graph& g, int x, int rec, int batch, int dim) {
    return g.scale(g.l1(x, rec), 1.0 / (static_cast<double>(batch) * static_cast<double>(dim)));
}

// Discriminator update: classifier ascends Eq.-1-style real/fake BCE;
// autoencoder minimizes energy(real) + max(0, margin - energy(fake)).
inline double update_discriminator(const TrainConfig& cfg, NetworkParams& d, AdamState& opt,
                                   const Tensor& x_real, const Tensor& x_fake) {
    const int batch = x_real.rows();
    const int dim = x_real.cols();
    Graph g;
    const int xr = g.input("x_real", {batch, dim});
    const int xf = g.input("x_fake", {batch, dim});
    int loss;
    if (cfg.disc_variant == DiscVariant::Classifier) {
        const int pr = build_mlp(g, d.spec, xr, d.name, true);
        const int pf = build_mlp(g, d.spec, xf, d.name, true);
        const int ones = g.constant(Tensor::full({batch, 1}, 1.0));
        const int zeros = g.constant(Tensor::full({batch, 1}, 0.0));
        loss = g.add(g.bce(pr, ones), g.bce(pf, zeros));
    } else {
        const int rec_r = build_mlp(g, d.spec, xr, d.name, true);
        const int rec_f = build_mlp(g, d.spec, xf, d.name, true);
        const int e_r = energy_node(g, xr, rec_r, batch, dim);
        const int e_f = energy_node(g, xf, rec_f, batch, dim);
        const int hinge =
            g.leaky_relu(g.add(g.constant(Tensor::scalar(kEnergyMargin)), g.scale(e_f, -1.0)), 0.0);
        loss = g.add(e_r, hinge);
    }
    g.mark("loss_d", loss);
    g.set_root(loss);

    Bindings b;
    b["x_real"] = x_real;
    b["x_fake"] = x_fake;
    bind_params(b, d);
    const Forward f = forward_eval(g, b);
    GradMap grads = backward(g, f);
    clip_global_norm(grads, cfg.clip_norm);
    adam_update(opt, d, grads, cfg.adam());
    return f.of(g.names().at("loss_d")).data[0];
}

}  // namespace detail

// One alternating GAN update (Eq.-1 game): the discriminator sees a real and
// a generated batch, then the generator descends the non-saturating loss
// (-log D(G(z)) for the classifier variant, reconstruction energy for the
// autoencoder variant). When knn is given and mu > 0, the K-GAN per-sample
// feature targets are searched before the generator update, frozen for the
// step, and added as mu-weighted squared distances (Eq. 8/9).
inline StepReport kgan_step(const TrainConfig& cfg, GanNets& nets, GanOptims& opt, const Tensor& x_batch,
                            Rng& rng, KnnContext* knn) {
    const int batch = x_batch.rows();
    const int latent = nets.g.spec.input_dim();
    StepReport report;

    // Discriminator phase.
    const Tensor z_d = sample_uniform(rng, {batch, latent}, -1.0, 1.0);
    const Tensor x_fake = generator_forward(nets.g, z_d);
    report.loss_d = detail::update_discriminator(cfg, nets.d, opt.d, x_batch, x_fake);

    // Generator phase; KNN targets are taken at the current G, before the
    // update, and enter the graph as constants.
    const Tensor z_g = sample_uniform(rng, {batch, latent}, -1.0, 1.0);
    const bool use_knn = knn != nullptr && (cfg.mu_hi > 0.0 || cfg.mu_lo > 0.0);

    Tensor targets_hi, targets_lo;
    if (use_knn) {
        const Tensor x_probe = generator_forward(nets.g, z_g);
        const ComparatorFeatures feats = comparator_features(*knn->comparator, x_probe);
        targets_hi = detail::layer_targets(feats.f_hi, knn->hi, cfg.k, cfg.knn_mode, rng);
        targets_lo = detail::layer_targets(feats.f_lo, knn->lo, cfg.k, cfg.knn_mode, rng);
    }

    Graph g;
    const int z = g.input("z", {batch, latent});
    const int xhat = build_mlp(g, nets.g.spec, z, nets.g.name, true);
    int adv;
    if (cfg.disc_variant == DiscVariant::Classifier) {
        const int p = build_mlp(g, nets.d.spec, xhat, nets.d.name, false);
        adv = g.bce(p, g.constant(Tensor::full({batch, 1}, 1.0)));
    } else {
        const int rec = build_mlp(g, nets.d.spec, xhat, nets.d.name, false);
        adv = detail::energy_node(g, xhat, rec, batch, x_batch.cols());
    }
    g.mark("loss_g", adv);
    int loss = adv;
    if (use_knn) {
        std::vector<int> taps;
        build_mlp(g, knn->comparator->spec, xhat, knn->comparator->name, false, &taps);
        const int knn_hi = g.scale(g.sq_l2(taps[kComparatorHiTap], g.input("target_hi", targets_hi.shape)),
                                   1.0 / batch);
        const int knn_lo = g.scale(g.sq_l2(taps[kComparatorLoTap], g.input("target_lo", targets_lo.shape)),
                                   1.0 / batch);
        g.mark("loss_knn_hi", knn_hi);
        g.mark("loss_knn_lo", knn_lo);
        loss = g.add(loss, g.add(g.scale(knn_hi, cfg.mu_hi), g.scale(knn_lo, cfg.mu_lo)));
    }
    g.set_root(loss);

    Bindings b;
    b["z"] = z_g;
    bind_params(b, nets.g);
    bind_params(b, nets.d);
    if (use_knn) {
        bind_params(b, *knn->comparator);
        b["target_hi"] = targets_hi;
        b["target_lo"] = targets_lo;
    }
    const Forward f = forward_eval(g, b);
    GradMap grads = backward(g, f);
    clip_global_norm(grads, cfg.clip_norm);
    adam_update(opt.g, nets.g, grads, cfg.adam());

    report.loss_g = f.of(g.names().at("loss_g")).data[0];
    if (use_knn) {
        report.loss_knn_hi = f.of(g.names().at("loss_knn_hi")).data[0];
        report.loss_knn_lo = f.of(g.names().at("loss_knn_lo")).data[0];
        report.utilization =
            0.5 * (utilization(*knn->hi.tracker) + utilization(*knn->lo.tracker));
    }
    return report;
}

inline StepReport gan_step(const TrainConfig& cfg, GanNets& nets, GanOptims& opt, const Tensor& x_batch,
                           Rng& rng) {
    return kgan_step(cfg, nets, opt, x_batch, rng, nullptr);
}

// ---- cycle-consistent translator pair --------------------------------------

struct CycleNets {
    NetworkParams a;   // X -> Y
    NetworkParams b;   // Y -> X
    NetworkParams dx;  // discriminates domain X
    NetworkParams dy;  // discriminates domain Y
};

struct CycleOptims {
    AdamState a, b, dx, dy;
};

// One alternating update of both discriminators, then both translators
// against the adversarial terms plus the lambda-weighted L1 cycle loss.
inline StepReport cyclegan_step(const TrainConfig& cfg, CycleNets& nets, CycleOptims& opt,
                                const Tensor& x_batch, const Tensor& y_batch, Rng& rng) {
    (void)rng;  // translators are conditioned on data; no latent draws
    const int batch = x_batch.rows();
    const int dim = x_batch.cols();
    StepReport report;

    const Tensor fake_y = generator_forward(nets.a, x_batch);
    const Tensor fake_x = generator_forward(nets.b, y_batch);
    report.loss_d = detail::update_discriminator(cfg, nets.dy, opt.dy, y_batch, fake_y) +
                    detail::update_discriminator(cfg, nets.dx, opt.dx, x_batch, fake_x);

    Graph g;
    const int x = g.input("x", {batch, dim});
    const int y = g.input("y", {batch, dim});
    const int ay = build_mlp(g, nets.a.spec, x, nets.a.name, true);     // A(x)
    const int bx = build_mlp(g, nets.b.spec, y, nets.b.name, true);     // B(y)
    const int bay = build_mlp(g, nets.b.spec, ay, nets.b.name, true);   // B(A(x))
    const int abx = build_mlp(g, nets.a.spec, bx, nets.a.name, true);   // A(B(y))
    const int py = build_mlp(g, nets.dy.spec, ay, nets.dy.name, false);
    const int px = build_mlp(g, nets.dx.spec, bx, nets.dx.name, false);
    const int ones = g.constant(Tensor::full({batch, 1}, 1.0));
    const int adv = g.add(g.bce(py, ones), g.bce(px, ones));
    const int cyc = g.add(g.scale(g.l1(bay, x), 1.0 / batch), g.scale(g.l1(abx, y), 1.0 / batch));
    g.mark("loss_adv", adv);
    g.mark("loss_cyc", cyc);
    const int loss = g.add(adv, g.scale(cyc, cfg.lambda_cyc));
    g.set_root(loss);

    Bindings bind;
    bind["x"] = x_batch;
    bind["y"] = y_batch;
    bind_params(bind, nets.a);
    bind_params(bind, nets.b);
    bind_params(bind, nets.dx);
    bind_params(bind, nets.dy);
    const Forward f = forward_eval(g, bind);
    GradMap grads = backward(g, f);
    clip_global_norm(grads, cfg.clip_norm);
    adam_update(opt.a, nets.a, grads, cfg.adam());
    adam_update(opt.b, nets.b, grads, cfg.adam());

    report.loss_g = f.of(g.names().at("loss_adv")).data[0];
    report.loss_cyc = f.of(g.names().at("loss_cyc")).data[0];
    return report;
}

// ---- loops -----------------------------------------------------------------

struct SamplerArch {
    MlpSpec g;
    MlpSpec d;
};

struct SamplerResult {
    GanNets nets;
    std::vector<StepReport> log;
    double util_hi = 0.0;
    double util_lo = 0.0;
};

using CheckpointFn = std::function<void(int step, const GanNets&)>;

// Full sampler training: vanilla GAN, K-GAN, and the mx/perceptual baselines
// via mix_datasets/knn_mode. Pure function of (config, data, architecture).
inline SamplerResult train_loop(const TrainConfig& cfg, const SamplerArch& arch, const Tensor& x_set,
                                const std::optional<Tensor>& y_set,
                                const NetworkParams* comparator = nullptr,
                                const CheckpointFn& checkpoint_cb = {}) {
    cfg.check();
    Rng meta(cfg.seed);
    const std::uint64_t seed_g = meta.next_u64();
    const std::uint64_t seed_d = meta.next_u64();

    SamplerResult out;
    out.nets.g = init_params("G", arch.g, seed_g);
    out.nets.d = init_params("D", arch.d, seed_d);
    GanOptims opt;

    Tensor train_x = x_set;
    if (cfg.mix_datasets) {
        if (!y_set) throw std::invalid_argument("train_loop: mix_datasets requires a target set");
        std::vector<double> joined = x_set.data;
        joined.insert(joined.end(), y_set->data.begin(), y_set->data.end());
        train_x = Tensor({x_set.rows() + y_set->rows(), x_set.cols()}, std::move(joined));
    }

    std::optional<KnnContext> knn;
    std::uint64_t c_checksum = 0;
    if (cfg.model == TrainModel::Kgan) {
        if (!y_set || comparator == nullptr)
            throw std::invalid_argument("train_loop: kgan requires a target set and a comparator");
        if (cfg.k > y_set->rows())
            throw std::invalid_argument("train_loop: k exceeds the target set size");
        c_checksum = params_checksum(*comparator);
        knn.emplace(*comparator, *y_set, cfg.leaf_size);
    }

    out.log.reserve(static_cast<std::size_t>(cfg.steps));
    for (int step = 0; step < cfg.steps; ++step) {
        const Tensor batch = detail::gather_rows(train_x, detail::draw_indices(meta, train_x.rows(), cfg.batch));
        StepReport r = kgan_step(cfg, out.nets, opt, batch, meta, knn ? &*knn : nullptr);
        out.log.push_back(r);
        if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 && checkpoint_cb)
            checkpoint_cb(step + 1, out.nets);
    }
    if (checkpoint_cb) checkpoint_cb(cfg.steps, out.nets);

    if (knn) {
        out.util_hi = utilization(*knn->hi.tracker);
        out.util_lo = utilization(*knn->lo.tracker);
        if (params_checksum(*comparator) != c_checksum)
            throw std::logic_error("train_loop: comparator tensors changed during training");
    }
    return out;
}

struct CycleArch {
    MlpSpec translator;  // used for both A and B
    MlpSpec disc;        // used for both D_X and D_Y
};

struct CycleResult {
    CycleNets nets;
    std::vector<StepReport> log;
};

// Batches come from providers so the same loop trains on real data and on
// sampler outputs (fine-tuning).
using BatchProvider = std::function<Tensor(int batch, Rng&)>;

inline BatchProvider dataset_provider(Tensor set) {
    return [set = std::move(set)](int batch, Rng& rng) {
        return detail::gather_rows(set, detail::draw_indices(rng, set.rows(), batch));
    };
}

inline BatchProvider sampler_provider(NetworkParams g) {
    return [g = std::move(g)](int batch, Rng& rng) {
        const Tensor z = sample_uniform(rng, {batch, g.spec.input_dim()}, -1.0, 1.0);
        return generator_forward(g, z);
    };
}

inline CycleResult train_translator_loop(const TrainConfig& cfg, CycleNets nets, const BatchProvider& x_batches,
                                         const BatchProvider& y_batches) {
    cfg.check();
    Rng meta(cfg.seed);
    CycleResult out;
    out.nets = std::move(nets);
    CycleOptims opt;
    out.log.reserve(static_cast<std::size_t>(cfg.steps));
    for (int step = 0; step < cfg.steps; ++step) {
        const Tensor xb = x_batches(cfg.batch, meta);
        const Tensor yb = y_batches(cfg.batch, meta);
        out.log.push_back(cyclegan_step(cfg, out.nets, opt, xb, yb, meta));
    }
    return out;
}

inline CycleResult init_and_train_translators(const TrainConfig& cfg, const CycleArch& arch,
                                              const BatchProvider& x_batches, const BatchProvider& y_batches) {
    const Rng meta(cfg.seed);
    CycleNets nets;
    nets.a = init_params("A", arch.translator, meta.derive(11).next_u64());
    nets.b = init_params("B", arch.translator, meta.derive(12).next_u64());
    nets.dx = init_params("DX", arch.disc, meta.derive(13).next_u64());
    nets.dy = init_params("DY", arch.disc, meta.derive(14).next_u64());
    return train_translator_loop(cfg, std::move(nets), x_batches, y_batches);
}

// Binary shape classifier, trainable on any comparator-style spec: X rows
// get label 0, Y rows label 1, and a slice of uniform-noise inputs gets the
// soft target 0.5 so off-manifold samples score near the prior instead of
// saturating.
inline NetworkParams train_proxy_classifier(const MlpSpec& spec, const Tensor& x_set, const Tensor& y_set,
                                            int steps, int batch, std::uint64_t seed, double lr = 1e-3) {
    if (batch < 3) throw std::invalid_argument("train_proxy_classifier: batch must be >= 3");
    Rng meta(seed);
    NetworkParams net = init_params("C", spec, meta.next_u64());
    AdamState opt;
    const AdamConfig acfg{lr, 0.9, 0.999, 1e-8};
    const int dim = x_set.cols();
    const int nn = std::max(1, batch / 4);  // noise-calibration share
    const int nx = (batch - nn) / 2;
    const int ny = batch - nn - nx;
    for (int step = 0; step < steps; ++step) {
        Tensor xb = Tensor::zeros({batch, dim});
        Tensor labels = Tensor::zeros({batch, 1});
        const auto xi = detail::draw_indices(meta, x_set.rows(), nx);
        const auto yi = detail::draw_indices(meta, y_set.rows(), ny);
        for (int r = 0; r < nx; ++r)
            for (int j = 0; j < dim; ++j) xb.at(r, j) = x_set.at(xi[static_cast<std::size_t>(r)], j);
        for (int r = 0; r < ny; ++r) {
            for (int j = 0; j < dim; ++j) xb.at(nx + r, j) = y_set.at(yi[static_cast<std::size_t>(r)], j);
            labels.data[static_cast<std::size_t>(nx + r)] = 1.0;
        }
        for (int r = 0; r < nn; ++r) {
            for (int j = 0; j < dim; ++j) xb.at(nx + ny + r, j) = meta.uniform(-1.0, 1.0);
            labels.data[static_cast<std::size_t>(nx + ny + r)] = 0.5;
        }
        Graph g;
        const int x = g.input("x", {batch, dim});
        const int p = build_mlp(g, spec, x, net.name, true);
        const int loss = g.bce(p, g.input("labels", {batch, 1}));
        g.set_root(loss);
        Bindings b;
        b["x"] = xb;
        b["labels"] = labels;
        bind_params(b, net);
        const Forward f = forward_eval(g, b);
        GradMap grads = backward(g, f);
        clip_global_norm(grads, 10.0);
        adam_update(opt, net, grads, acfg);
    }
    return net;
}

// Continues translator training with X batches drawn from the trained
// sampler instead of the real X set.
inline CycleResult fine_tune_translator(const TrainConfig& cfg, CycleNets nets, const NetworkParams& sampler_g,
                                        const Tensor& y_set) {
    if (sampler_g.spec.output_dim() != nets.a.spec.input_dim())
        throw std::invalid_argument("fine_tune_translator: sampler output dimension " +
                                    std::to_string(sampler_g.spec.output_dim()) +
                                    " does not match translator input " +
                                    std::to_string(nets.a.spec.input_dim()));
    return train_translator_loop(cfg, std::move(nets), sampler_provider(sampler_g), dataset_provider(y_set));
}

}  // namespace ianforge
