#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ianforge/cascade.hpp"
#include "ianforge/checkpoint.hpp"
#include "ianforge/config.hpp"
#include "ianforge/dataset.hpp"
#include "ianforge/finite_diff.hpp"
#include "ianforge/kde.hpp"
#include "ianforge/metrics.hpp"
#include "ianforge/train.hpp"

namespace ianforge {

// Exit codes shared by every subcommand.
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInvariant = 3;

namespace cli {

inline std::vector<int> parse_widths(const std::string& csv) {
    std::vector<int> widths;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const auto comma = csv.find(',', pos);
        const std::string item = csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!item.empty()) widths.push_back(std::stoi(item));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (widths.empty()) throw std::invalid_argument("empty width list '" + csv + "'");
    return widths;
}

// Writes through a temp file so a crash never leaves a half-written artifact
// at the destination.
inline void save_networks_atomic(const std::string& path, const std::vector<const NetworkParams*>& nets) {
    const std::string tmp = path + ".tmp";
    save_networks(tmp, nets);
    std::filesystem::rename(tmp, path);
}

inline void write_step_log(const std::string& path, const std::vector<StepReport>& log) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "step,loss_d,loss_g,loss_knn_hi,loss_knn_lo,loss_cyc,utilization\n";
    char buf[256];
    for (std::size_t i = 0; i < log.size(); ++i) {
        const StepReport& r = log[i];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i + 1, r.loss_d,
                      r.loss_g, r.loss_knn_hi, r.loss_knn_lo, r.loss_cyc, r.utilization);
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// ---- config plumbing -------------------------------------------------------

struct ModelDims {
    int data_dim = 2;
    int latent = 8;
    std::vector<int> g_hidden{64, 64};
    std::vector<int> d_hidden{64, 64};
    std::vector<int> t_hidden{64, 64};
    DiscVariant variant = DiscVariant::Classifier;
    int s_lo = 32;
    int s_hi = 16;
};

inline ModelDims model_dims(const Config& cfg, DataMode mode, int data_dim) {
    ModelDims d;
    d.data_dim = data_dim;
    d.latent = cfg.get_int_or("model", "latent_dim", mode == DataMode::Points2d ? 8 : 32);
    d.g_hidden = parse_widths(cfg.get_str_or("model", "g_hidden", "64,64"));
    d.d_hidden = parse_widths(cfg.get_str_or("model", "d_hidden", "64,64"));
    d.t_hidden = parse_widths(cfg.get_str_or("model", "t_hidden", "64,64"));
    d.variant = cfg.get_str_or("model", "disc_variant", "classifier") == "autoencoder"
                    ? DiscVariant::Autoencoder
                    : DiscVariant::Classifier;
    d.s_lo = cfg.get_int_or("model", "s_lo", 32);
    d.s_hi = cfg.get_int_or("model", "s_hi", 16);
    return d;
}

inline MlpSpec disc_spec_for(const ModelDims& d) {
    return d.variant == DiscVariant::Autoencoder
               ? autoencoder_disc_spec(d.data_dim, d.latent, d.d_hidden.front())
               : classifier_disc_spec(d.data_dim, d.d_hidden);
}

inline TrainConfig train_config(const Config& cfg, const std::string& model_override = "") {
    TrainConfig t;
    const std::string model = model_override.empty() ? cfg.get_str_or("train", "model", "vanilla")
                                                     : model_override;
    if (model == "vanilla") {
        t.model = TrainModel::Vanilla;
    } else if (model == "kgan") {
        t.model = TrainModel::Kgan;
    } else if (model == "mx") {
        t.model = TrainModel::Vanilla;
        t.mix_datasets = true;
    } else if (model == "perceptual") {
        t.model = TrainModel::Kgan;
        t.knn_mode = KnnMode::Random;
    } else {
        throw std::invalid_argument("unknown train model '" + model + "'");
    }
    t.k = cfg.get_int_or("train", "k", t.k);
    t.mu_hi = cfg.get_f64_or("train", "mu_hi", t.mu_hi);
    t.mu_lo = cfg.get_f64_or("train", "mu_lo", t.mu_lo);
    t.lambda_cyc = cfg.get_f64_or("train", "lambda", t.lambda_cyc);
    t.lr = cfg.get_f64_or("train", "lr", t.lr);
    t.beta1 = cfg.get_f64_or("train", "beta1", t.beta1);
    t.beta2 = cfg.get_f64_or("train", "beta2", t.beta2);
    t.eps = cfg.get_f64_or("train", "eps", t.eps);
    t.batch = cfg.get_int_or("train", "batch", t.batch);
    t.steps = cfg.get_int_or("train", "steps", t.steps);
    t.seed = cfg.get_u64_or("train", "seed", t.seed);
    if (cfg.get_str_or("train", "knn_mode", "") == "random") t.knn_mode = KnnMode::Random;
    if (cfg.get_bool_or("train", "mix_datasets", false)) t.mix_datasets = true;
    t.leaf_size = cfg.get_int_or("train", "leaf_size", t.leaf_size);
    t.clip_norm = cfg.get_f64_or("train", "clip_norm", t.clip_norm);
    t.checkpoint_every = cfg.get_int_or("train", "checkpoint_every", t.checkpoint_every);
    t.check();
    return t;
}

// ---- checkpoint role loaders -----------------------------------------------

enum class NetRole { Generator, ClassifierDisc, AutoDisc, Translator, Comparator };

inline MlpSpec spec_for_role(NetRole role, const std::vector<int>& widths) {
    switch (role) {
        case NetRole::Generator: {
            MlpSpec s = MlpSpec::make(widths, Act::LeakyRelu, Act::Tanh);
            return s;
        }
        case NetRole::ClassifierDisc:
            return MlpSpec::make(widths, Act::LeakyRelu, Act::Sigmoid);
        case NetRole::AutoDisc: {
            MlpSpec s = MlpSpec::make(widths, Act::LeakyRelu, Act::Tanh);
            s.activations[static_cast<std::size_t>(autoencoder_code_layer(s)) - 1] = Act::Linear;
            return s;
        }
        case NetRole::Translator:
            return MlpSpec::make(widths, Act::LeakyRelu, Act::Tanh);
        case NetRole::Comparator:
            return MlpSpec::make(widths, Act::LeakyRelu, Act::Sigmoid);
    }
    throw std::logic_error("unreachable");
}

inline NetworkParams load_network(const std::string& path, const std::string& name, NetRole role) {
    const auto flat = load_tensors(path);
    const auto mine = tensors_for(flat, name);
    if (mine.empty())
        throw std::runtime_error("checkpoint '" + path + "' has no network named '" + name + "'");
    const auto widths = widths_from_tensors(mine);
    return network_from_tensors(name, spec_for_role(role, widths), mine);
}

// A discriminator checkpoint is the autoencoder variant iff its stack is
// symmetric back to the data dimension; the classifier head is width 1.
inline bool looks_autoencoder(const std::string& path, const std::string& name = "D") {
    const auto widths = widths_from_tensors(tensors_for(load_tensors(path), name));
    return widths.front() == widths.back();
}

inline void write_samples(const std::string& out, const Tensor& samples) {
    if (samples.cols() == kImageDim) {
        write_image_set(out, samples);
    } else {
        write_points_csv(out, samples);
    }
}

inline Tensor clamp_to_unit(Tensor t) {
    for (auto& v : t.data) v = std::min(1.0, std::max(-1.0, v));
    return t;
}

// ---- subcommand handlers -----------------------------------------------------

inline int cmd_make_data(const std::string& kind, int n, std::uint64_t seed, const std::string& out) {
    make_data(data_kind_from(kind), n, seed, out);
    std::cout << "wrote " << n << " " << kind << " samples to " << out << "\n";
    return kExitOk;
}

inline int cmd_pretrain_comparator(const std::string& x_path, const std::string& y_path,
                                   const std::string& out, const std::string& mode, int steps, int batch,
                                   double lr, std::uint64_t seed, int s_lo, int s_hi) {
    const Dataset x = load_dataset(x_path);
    const MlpSpec spec = comparator_spec(x.dim(), s_lo, s_hi);
    NetworkParams net;
    if (mode == "random") {
        net = init_params("C", spec, seed);
    } else if (mode == "classifier") {
        const Dataset y = load_dataset(y_path);
        if (y.dim() != x.dim()) throw std::runtime_error("comparator: x and y dimensions differ");
        net = train_proxy_classifier(spec, x.samples, y.samples, steps, batch, seed, lr);
    } else {
        throw std::invalid_argument("unknown comparator mode '" + mode + "'");
    }
    save_networks_atomic(out, {&net});
    std::cout << "wrote comparator (" << mode << ") to " << out << "\n";
    return kExitOk;
}

inline int cmd_train(const std::string& config_path, const std::string& out, std::string log_path,
                     const std::string& model_override) {
    const Config cfg = Config::parse_file(config_path);
    const Dataset x = load_dataset(cfg.get_str("data", "x"));
    std::optional<Dataset> y;
    if (cfg.has("data", "y")) y = load_dataset(cfg.get_str("data", "y"));

    const TrainConfig tc = train_config(cfg, model_override);
    const ModelDims dims = model_dims(cfg, x.mode, x.dim());
    const SamplerArch arch{generator_spec(dims.latent, dims.data_dim, dims.g_hidden), disc_spec_for(dims)};
    TrainConfig tc2 = tc;
    tc2.disc_variant = dims.variant;

    std::optional<NetworkParams> comparator;
    if (tc2.model == TrainModel::Kgan) {
        if (!cfg.has("model", "comparator"))
            throw std::runtime_error("kgan training needs [model] comparator = <checkpoint>");
        comparator = load_network(cfg.get_str("model", "comparator"), "C", NetRole::Comparator);
    }

    if (log_path.empty()) log_path = out + ".log.csv";
    std::optional<Tensor> y_samples;
    if (y) y_samples = y->samples;
    const SamplerResult r =
        train_loop(tc2, arch, x.samples, y_samples, comparator ? &*comparator : nullptr,
                   [&](int step, const GanNets& nets) {
                       (void)step;
                       save_networks_atomic(out, {&nets.g, &nets.d});
                   });
    write_step_log(log_path, r.log);
    if (tc2.model == TrainModel::Kgan) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "utilization hi=%.6f lo=%.6f mean=%.6f\n", r.util_hi, r.util_lo,
                      0.5 * (r.util_hi + r.util_lo));
        std::cout << buf;
    }
    std::cout << "wrote checkpoint " << out << " and log " << log_path << "\n";
    return kExitOk;
}

inline int cmd_train_translator(const std::string& config_path, const std::string& out,
                                std::string log_path) {
    const Config cfg = Config::parse_file(config_path);
    const Dataset x = load_dataset(cfg.get_str("data", "x"));
    const Dataset y = load_dataset(cfg.get_str("data", "y"));
    if (x.dim() != y.dim()) throw std::runtime_error("translator training needs matching dimensions");

    const TrainConfig tc = train_config(cfg);
    const ModelDims dims = model_dims(cfg, x.mode, x.dim());
    const CycleArch arch{translator_spec(dims.data_dim, dims.t_hidden),
                         classifier_disc_spec(dims.data_dim, dims.d_hidden)};
    const CycleResult r = init_and_train_translators(tc, arch, dataset_provider(x.samples),
                                                     dataset_provider(y.samples));
    save_networks_atomic(out, {&r.nets.a, &r.nets.b, &r.nets.dx, &r.nets.dy});
    if (log_path.empty()) log_path = out + ".log.csv";
    write_step_log(log_path, r.log);
    std::cout << "wrote translator checkpoint " << out << "\n";
    return kExitOk;
}

inline int cmd_fine_tune(const std::string& config_path, const std::string& translator_path,
                         const std::string& sampler_path, const std::string& out, int steps_override) {
    const Config cfg = Config::parse_file(config_path);
    const Dataset y = load_dataset(cfg.get_str("data", "y"));
    TrainConfig tc = train_config(cfg);
    if (steps_override >= 0) tc.steps = steps_override;

    CycleNets nets;
    nets.a = load_network(translator_path, "A", NetRole::Translator);
    nets.b = load_network(translator_path, "B", NetRole::Translator);
    nets.dx = load_network(translator_path, "DX", NetRole::ClassifierDisc);
    nets.dy = load_network(translator_path, "DY", NetRole::ClassifierDisc);
    const NetworkParams sampler = load_network(sampler_path, "G", NetRole::Generator);

    const CycleResult r = fine_tune_translator(tc, std::move(nets), sampler, y.samples);
    save_networks_atomic(out, {&r.nets.a, &r.nets.b, &r.nets.dx, &r.nets.dy});
    std::cout << "wrote fine-tuned translator " << out << "\n";
    return kExitOk;
}

inline int cmd_sample(const std::string& ckpt, const std::string& from_data, int n, std::uint64_t seed,
                      const std::string& out, const std::string& comparator_path,
                      const std::string& features_out) {
    Tensor samples;
    if (!from_data.empty()) {
        const Dataset d = load_dataset(from_data);
        const int take = n > 0 ? std::min(n, d.size()) : d.size();
        samples = Tensor::zeros({take, d.dim()});
        for (int i = 0; i < take; ++i)
            for (int j = 0; j < d.dim(); ++j) samples.at(i, j) = d.samples.at(i, j);
    } else if (!ckpt.empty()) {
        const NetworkParams g = load_network(ckpt, "G", NetRole::Generator);
        Rng rng(seed);
        const Tensor z = sample_uniform(rng, {n, g.spec.input_dim()}, -1.0, 1.0);
        samples = generator_forward(g, z);
    } else {
        throw std::invalid_argument("sample: need --ckpt or --from-data");
    }
    if (!out.empty()) write_samples(out, clamp_to_unit(samples));
    if (!features_out.empty()) {
        if (comparator_path.empty()) throw std::invalid_argument("sample: --features-out needs --comparator");
        const NetworkParams c = load_network(comparator_path, "C", NetRole::Comparator);
        const ComparatorFeatures f = comparator_features(c, samples);
        save_tensors(features_out, {{"features_hi", f.f_hi}, {"features_lo", f.f_lo}});
    }
    std::cout << "sampled " << samples.rows() << " items\n";
    return kExitOk;
}

inline int cmd_cascade(const std::string& sampler_path, const std::string& translator_path, int n,
                       std::uint64_t seed, const std::string& out) {
    const IanPipeline pipe(load_network(sampler_path, "G", NetRole::Generator),
                           load_network(translator_path, "A", NetRole::Translator));
    Rng rng(seed);
    const Tensor z = sample_uniform(rng, {n, pipe.sampler.spec.input_dim()}, -1.0, 1.0);
    write_samples(out, clamp_to_unit(ian_sample(pipe, z)));
    std::cout << "wrote " << n << " cascade samples to " << out << "\n";
    return kExitOk;
}

inline int cmd_eval(const std::string& config_path, const std::string& samples_path,
                    const std::string& out) {
    const Config cfg = Config::parse_file(config_path);
    const Dataset x = load_dataset(cfg.get_str("data", "x"));
    const Dataset y = load_dataset(cfg.get_str("data", "y"));
    const Dataset s = load_dataset(samples_path);
    const int n_cap = cfg.get_int_or("eval", "n_samples", 1000);
    const int n_noise = cfg.get_int_or("eval", "n_noise", 1000);
    Rng rng(cfg.get_u64_or("eval", "seed", 7));
    const NetworkParams clf = load_network(cfg.get_str("eval", "classifier"), "C", NetRole::Comparator);

    Tensor samples = s.samples;
    if (samples.rows() > n_cap) {
        Tensor cut = Tensor::zeros({n_cap, samples.cols()});
        std::copy_n(samples.data.begin(), cut.data.size(), cut.data.begin());
        samples = std::move(cut);
    }
    const EvalReport r = evaluate(samples, x.samples, y.samples, clf, n_noise, rng, cfg.hash_hex());

    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + out + "'");
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "score_x,score_y,score_avg,err_x,err_y,err_avg,n_samples,config_hash\n"
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%s\n",
                  r.score_x, r.score_y, r.score_avg, r.err_x, r.err_y, 0.5 * (r.err_x + r.err_y),
                  r.n_samples, r.config_hash.c_str());
    f << buf;
    std::cout << buf;
    return kExitOk;
}

inline int cmd_traverse(const std::string& disc_path, const std::string& translators_csv,
                        const std::string& data_path, int ia, int ib, int n, const std::string& out) {
    if (!looks_autoencoder(disc_path))
        throw std::runtime_error("traverse: '" + disc_path + "' is not an autoencoder discriminator");
    const NetworkParams ae = load_network(disc_path, "D", NetRole::AutoDisc);
    const Dataset d = load_dataset(data_path);
    if (ia < 0 || ia >= d.size() || ib < 0 || ib >= d.size())
        throw std::runtime_error("traverse: endpoint index out of range");

    std::vector<NetworkParams> translators;
    if (!translators_csv.empty()) {
        std::size_t pos = 0;
        while (pos <= translators_csv.size()) {
            const auto comma = translators_csv.find(',', pos);
            const std::string item = translators_csv.substr(
                pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if (!item.empty()) translators.push_back(load_network(item, "A", NetRole::Translator));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }

    TraversalPlan plan;
    plan.n_points = n;
    plan.x_a = Tensor::zeros({1, d.dim()});
    plan.x_b = Tensor::zeros({1, d.dim()});
    for (int j = 0; j < d.dim(); ++j) {
        plan.x_a.at(0, j) = d.samples.at(ia, j);
        plan.x_b.at(0, j) = d.samples.at(ib, j);
    }
    for (const auto& t : translators) plan.translators.push_back(&t);

    const TraversalGrid grid = manifold_traverse(plan, ae, DiscVariant::Autoencoder);

    if (d.mode == DataMode::Points2d) {
        std::ofstream f(out, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write '" + out + "'");
        f << "row,col,x0,x1\n";
        char buf[128];
        for (int r = 0; r < grid.rows; ++r)
            for (int c = 0; c < grid.cols; ++c) {
                std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", r, c, grid.cell(r, c)[0],
                              grid.cell(r, c)[1]);
                f << buf;
            }
    } else {
        // one montage: rows of the grid stacked vertically, N tiles per row
        const int w = kImageSide * grid.cols;
        const int h = kImageSide * grid.rows;
        std::vector<double> montage(static_cast<std::size_t>(w) * h, -1.0);
        for (int r = 0; r < grid.rows; ++r)
            for (int c = 0; c < grid.cols; ++c)
                for (int py = 0; py < kImageSide; ++py)
                    for (int px = 0; px < kImageSide; ++px)
                        montage[static_cast<std::size_t>(r * kImageSide + py) * w + c * kImageSide + px] =
                            grid.cell(r, c)[py * kImageSide + px];
        write_pgm(out, montage.data(), w, h);
    }
    std::cout << "wrote " << grid.rows << "x" << grid.cols << " traversal grid to " << out << "\n";
    return kExitOk;
}

inline int cmd_bound_check(const std::string& features_path, const std::string& queries_path, int k) {
    const auto feats = load_tensors(features_path);
    const auto queries = load_tensors(queries_path);
    auto pick = [](const std::vector<std::pair<std::string, Tensor>>& ts, const std::string& name,
                   const std::string& path) -> const Tensor& {
        for (const auto& [n, t] : ts)
            if (n == name) return t;
        throw std::runtime_error("'" + path + "' has no tensor '" + name + "'");
    };

    double min_gap = std::numeric_limits<double>::infinity();
    for (const std::string layer : {"hi", "lo"}) {
        const Tensor& f = pick(feats, "features_" + layer, features_path);
        const Tensor& q = pick(queries, "features_" + layer, queries_path);
        if (f.cols() != q.cols()) throw std::runtime_error("feature dimensions differ between files");
        const FeatureSet fs(f.cols(), tensor_rows(f));
        if (k > static_cast<int>(fs.size()))
            throw std::runtime_error("k exceeds the stored feature count");
        const KdeEstimator est(fs, 1.0);
        const BallTree tree(fs, 16);
        double layer_min = std::numeric_limits<double>::infinity();
        for (const auto& row : tensor_rows(q))
            layer_min = std::min(layer_min, jensen_bound_gap(est, row, k, tree));
        char buf[128];
        std::snprintf(buf, sizeof buf, "layer %s: min gap %.12g over %d queries\n", layer.c_str(),
                      layer_min, q.rows());
        std::cout << buf;
        min_gap = std::min(min_gap, layer_min);
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "min gap %.12g\n", min_gap);
    std::cout << buf;
    return min_gap >= -1e-9 ? kExitOk : kExitInvariant;
}

inline int cmd_grad_check(std::uint64_t seed) {
    // Every primitive op plus the end-to-end KNN-regularized generator loss,
    // against central differences at h = 1e-5.
    double worst = 0.0;
    auto check_graph = [&worst](Graph& g, Bindings in, const std::vector<std::string>& params) {
        const auto grads = backward(g, forward_eval(g, in));
        for (const auto& pname : params) {
            const Tensor fd = finite_diff_grad(
                [&](const Tensor& p) {
                    Bindings probe = in;
                    probe[pname] = p;
                    return forward_eval(g, probe).of(g.root()).data[0];
                },
                in.at(pname), 1e-5);
            for (std::size_t i = 0; i < fd.data.size(); ++i)
                worst = std::max(worst, rel_err(grads.at(pname).data[i], fd.data[i]));
        }
    };

    Rng rng(seed);
    {  // primitive ops, one fused graph
        Graph g;
        const int a = g.param("a", {3, 4});
        const int b = g.param("b", {4, 3});
        const int bias = g.param("bias", {3});
        const int m = g.matmul(a, b);
        const int act = g.add(g.tanh(m), g.add(g.sigmoid(m), g.leaky_relu(m, 0.2)));
        const int h = g.add(act, bias);
        const int labels = g.constant(Tensor::full({3, 3}, 1.0));
        const int loss = g.add(
            g.add(g.bce(g.sigmoid(h), labels), g.scale(g.mean_all(h), 0.3)),
            g.add(g.sq_l2(h, labels), g.l1(h, labels)));
        g.set_root(loss);
        Bindings in;
        in["a"] = sample_uniform(rng, {3, 4}, -1.0, 1.0);
        in["b"] = sample_uniform(rng, {4, 3}, -1.0, 1.0);
        in["bias"] = sample_uniform(rng, {3}, -0.5, 0.5);
        check_graph(g, in, {"a", "b", "bias"});
    }
    {  // end-to-end K-GAN generator loss
        const MlpSpec gspec = generator_spec(4, 2, {8});
        const MlpSpec dspec = classifier_disc_spec(2, {8});
        const MlpSpec cspec = comparator_spec(2, 6, 3);
        const NetworkParams gp = init_params("G", gspec, rng.next_u64());
        const NetworkParams dp = init_params("D", dspec, rng.next_u64());
        const NetworkParams cp = init_params("C", cspec, rng.next_u64());

        Graph g;
        const int z = g.input("z", {4, 4});
        const int xhat = build_mlp(g, gspec, z, "G", true);
        const int p = build_mlp(g, dspec, xhat, "D", false);
        std::vector<int> taps;
        build_mlp(g, cspec, xhat, "C", false, &taps);
        const int adv = g.bce(p, g.constant(Tensor::full({4, 1}, 1.0)));
        const int knn_hi = g.scale(g.sq_l2(taps[kComparatorHiTap], g.input("t_hi", {4, 3})), 0.25);
        const int knn_lo = g.scale(g.sq_l2(taps[kComparatorLoTap], g.input("t_lo", {4, 6})), 0.25);
        g.set_root(g.add(adv, g.add(g.scale(knn_hi, 0.001), g.scale(knn_lo, 0.0001))));

        Bindings in;
        in["z"] = sample_uniform(rng, {4, 4}, -1.0, 1.0);
        in["t_hi"] = sample_uniform(rng, {4, 3}, -1.0, 1.0);
        in["t_lo"] = sample_uniform(rng, {4, 6}, -1.0, 1.0);
        bind_params(in, gp);
        bind_params(in, dp);
        bind_params(in, cp);
        std::vector<std::string> params;
        for (const auto& [lname, t] : gp.tensors) params.push_back("G/" + lname);
        check_graph(g, in, params);
    }

    char buf[64];
    std::snprintf(buf, sizeof buf, "max rel err %.3g\n", worst);
    std::cout << buf;
    return worst < 1e-5 ? kExitOk : kExitInvariant;
}

inline int cmd_bench_knn(int m, int queries, int k, std::uint64_t seed) {
    // clustered cloud in R^16: 10 tight gaussian clusters
    const int dim = 16;
    Rng rng(seed);
    std::vector<std::vector<double>> centers(10, std::vector<double>(dim));
    for (auto& c : centers)
        for (auto& v : c) v = rng.uniform(-1.0, 1.0);
    std::vector<std::vector<double>> pts(static_cast<std::size_t>(m), std::vector<double>(dim));
    for (auto& p : pts) {
        const auto& c = centers[static_cast<std::size_t>(std::min(9, static_cast<int>(rng.uniform01() * 10)))];
        for (int j = 0; j < dim; ++j) p[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)] + 0.05 * rng.normal();
    }
    const BallTree tree(FeatureSet(dim, std::move(pts)), 16);

    BallTree::QueryStats stats;
    for (int q = 0; q < queries; ++q) {
        std::vector<double> query(dim);
        const auto& c = centers[static_cast<std::size_t>(std::min(9, static_cast<int>(rng.uniform01() * 10)))];
        for (int j = 0; j < dim; ++j) query[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)] + 0.05 * rng.normal();
        tree.query(query, k, &stats);
    }
    const double frac = static_cast<double>(stats.point_distance_evals) /
                        (static_cast<double>(queries) * static_cast<double>(m));
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "%d queries over %d points, k=%d: %.2f%% of points distance-evaluated per query\n",
                  queries, m, k, 100.0 * frac);
    std::cout << buf;
    std::cout << (frac < 0.25 ? "PASS" : "FAIL") << " (threshold 25%)\n";
    return frac < 0.25 ? kExitOk : kExitInvariant;
}

}  // namespace cli

// Entry point shared by the binary and the tests; argv excludes the program
// name. All randomness flows from explicit --seed / config seeds.
inline int run_command(const std::vector<std::string>& argv) {
    CLI::App app{"desk-scale GAN laboratory: knn-regularized adversarial training and cascades"};
    app.require_subcommand(1);
    int rc = kExitOk;

    // make-data
    auto* mk = app.add_subcommand("make-data", "generate a synthetic dataset");
    std::string mk_kind = "ring", mk_out;
    int mk_n = 1000;
    std::uint64_t mk_seed = 1;
    mk->add_option("--kind", mk_kind, "ring|blobs|shifted|disks|crosses");
    mk->add_option("--n", mk_n, "sample count")->required();
    mk->add_option("--seed", mk_seed, "rng seed");
    mk->add_option("--out", mk_out, "output path (csv or directory)")->required();
    mk->callback([&] { rc = cli::cmd_make_data(mk_kind, mk_n, mk_seed, mk_out); });

    // pretrain-comparator
    auto* pc = app.add_subcommand("pretrain-comparator", "build the frozen comparator / proxy classifier");
    std::string pc_x, pc_y, pc_out, pc_mode = "random";
    int pc_steps = 1000, pc_batch = 64, pc_slo = 32, pc_shi = 16;
    double pc_lr = 2e-3;
    std::uint64_t pc_seed = 1;
    pc->add_option("--x", pc_x, "class-0 dataset")->required();
    pc->add_option("--y", pc_y, "class-1 dataset (classifier mode)");
    pc->add_option("--out", pc_out, "output checkpoint")->required();
    pc->add_option("--mode", pc_mode, "random|classifier");
    pc->add_option("--steps", pc_steps, "training steps (classifier mode)");
    pc->add_option("--batch", pc_batch, "batch size");
    pc->add_option("--lr", pc_lr, "learning rate (classifier mode)");
    pc->add_option("--seed", pc_seed, "rng seed");
    pc->add_option("--s-lo", pc_slo, "low feature layer width");
    pc->add_option("--s-hi", pc_shi, "high feature layer width");
    pc->callback([&] {
        rc = cli::cmd_pretrain_comparator(pc_x, pc_y, pc_out, pc_mode, pc_steps, pc_batch, pc_lr, pc_seed,
                                          pc_slo, pc_shi);
    });

    // train
    auto* tr = app.add_subcommand("train", "train a sampling GAN (vanilla|kgan|mx|perceptual)");
    std::string tr_cfg, tr_out, tr_log, tr_model;
    tr->add_option("--config", tr_cfg, "ini config")->required();
    tr->add_option("--out", tr_out, "checkpoint path")->required();
    tr->add_option("--log", tr_log, "step log csv (default <out>.log.csv)");
    tr->add_option("--model", tr_model, "override [train] model");
    tr->callback([&] { rc = cli::cmd_train(tr_cfg, tr_out, tr_log, tr_model); });

    // train-translator
    auto* tt = app.add_subcommand("train-translator", "train the cycle-consistent translator pair");
    std::string tt_cfg, tt_out, tt_log;
    tt->add_option("--config", tt_cfg, "ini config")->required();
    tt->add_option("--out", tt_out, "checkpoint path")->required();
    tt->add_option("--log", tt_log, "step log csv");
    tt->callback([&] { rc = cli::cmd_train_translator(tt_cfg, tt_out, tt_log); });

    // fine-tune
    auto* ft = app.add_subcommand("fine-tune", "fine-tune a translator on sampler outputs");
    std::string ft_cfg, ft_tr, ft_sm, ft_out;
    int ft_steps = -1;
    ft->add_option("--config", ft_cfg, "ini config")->required();
    ft->add_option("--translator", ft_tr, "translator checkpoint")->required();
    ft->add_option("--sampler", ft_sm, "sampler checkpoint")->required();
    ft->add_option("--out", ft_out, "output checkpoint")->required();
    ft->add_option("--steps", ft_steps, "override step count");
    ft->callback([&] { rc = cli::cmd_fine_tune(ft_cfg, ft_tr, ft_sm, ft_out, ft_steps); });

    // sample
    auto* sm = app.add_subcommand("sample", "draw samples from a checkpoint or pass a dataset through");
    std::string sm_ckpt, sm_from, sm_out, sm_comp, sm_feat;
    int sm_n = 100;
    std::uint64_t sm_seed = 1;
    sm->add_option("--ckpt", sm_ckpt, "sampler checkpoint");
    sm->add_option("--from-data", sm_from, "dataset to pass through instead of sampling");
    sm->add_option("--n", sm_n, "sample count (0 with --from-data: all rows)");
    sm->add_option("--seed", sm_seed, "rng seed");
    sm->add_option("--out", sm_out, "samples output (csv or directory)");
    sm->add_option("--comparator", sm_comp, "comparator checkpoint for --features-out");
    sm->add_option("--features-out", sm_feat, "write comparator features of the samples");
    sm->callback([&] { rc = cli::cmd_sample(sm_ckpt, sm_from, sm_n, sm_seed, sm_out, sm_comp, sm_feat); });

    // cascade
    auto* cs = app.add_subcommand("cascade", "sample the full IAN: translator(sampler(z))");
    std::string cs_sampler, cs_translator, cs_out;
    int cs_n = 100;
    std::uint64_t cs_seed = 1;
    cs->add_option("--sampler", cs_sampler, "sampler checkpoint")->required();
    cs->add_option("--translator", cs_translator, "translator checkpoint")->required();
    cs->add_option("--n", cs_n, "sample count");
    cs->add_option("--seed", cs_seed, "rng seed");
    cs->add_option("--out", cs_out, "output path")->required();
    cs->callback([&] { rc = cli::cmd_cascade(cs_sampler, cs_translator, cs_n, cs_seed, cs_out); });

    // eval
    auto* ev = app.add_subcommand("eval", "score a sample set against both domains");
    std::string ev_cfg, ev_samples, ev_out;
    ev->add_option("--config", ev_cfg, "ini config with [data] and [eval]")->required();
    ev->add_option("--samples", ev_samples, "samples to score")->required();
    ev->add_option("--out", ev_out, "report csv")->required();
    ev->callback([&] { rc = cli::cmd_eval(ev_cfg, ev_samples, ev_out); });

    // traverse
    auto* tv = app.add_subcommand("traverse", "multi-domain manifold traversal grid");
    std::string tv_disc, tv_translators, tv_data, tv_out;
    int tv_ia = 0, tv_ib = 1, tv_n = 7;
    tv->add_option("--disc", tv_disc, "autoencoder discriminator checkpoint")->required();
    tv->add_option("--translators", tv_translators, "comma-separated translator checkpoints");
    tv->add_option("--data", tv_data, "dataset holding the endpoints")->required();
    tv->add_option("--ia", tv_ia, "index of endpoint a");
    tv->add_option("--ib", tv_ib, "index of endpoint b");
    tv->add_option("--n", tv_n, "number of convex points");
    tv->add_option("--out", tv_out, "grid output (csv or pgm montage)")->required();
    tv->callback([&] { rc = cli::cmd_traverse(tv_disc, tv_translators, tv_data, tv_ia, tv_ib, tv_n, tv_out); });

    // bound-check
    auto* bc = app.add_subcommand("bound-check", "verify the jensen cross-entropy bound numerically");
    std::string bc_features, bc_queries;
    int bc_k = 4;
    bc->add_option("--features", bc_features, "target feature file (from sample --features-out)")->required();
    bc->add_option("--queries", bc_queries, "query feature file")->required();
    bc->add_option("--k", bc_k, "neighbors");
    bc->callback([&] { rc = cli::cmd_bound_check(bc_features, bc_queries, bc_k); });

    // grad-check
    auto* gc = app.add_subcommand("grad-check", "verify gradients against finite differences");
    std::uint64_t gc_seed = 3;
    gc->add_option("--seed", gc_seed, "rng seed");
    gc->callback([&] { rc = cli::cmd_grad_check(gc_seed); });

    // bench-knn
    auto* bk = app.add_subcommand("bench-knn", "ball-tree pruning benchmark on clustered points");
    int bk_m = 10000, bk_q = 200, bk_k = 4;
    std::uint64_t bk_seed = 1;
    bk->add_option("--m", bk_m, "point count");
    bk->add_option("--queries", bk_q, "query count");
    bk->add_option("--k", bk_k, "neighbors");
    bk->add_option("--seed", bk_seed, "rng seed");
    bk->callback([&] { rc = cli::cmd_bench_knn(bk_m, bk_q, bk_k, bk_seed); });

    try {
        std::vector<std::string> reversed(argv.rbegin(), argv.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return rc;
}

}  // namespace ianforge
