#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ianforge/checkpoint.hpp"
#include "ianforge/finite_diff.hpp"
#include "ianforge/mlp.hpp"

using namespace ianforge;

TEST_CASE("init_params is deterministic with zero biases", "[models]") {
    const MlpSpec spec = generator_spec(8, 2);
    const NetworkParams a = init_params("G", spec, 42);
    const NetworkParams b = init_params("G", spec, 42);
    REQUIRE(params_checksum(a) == params_checksum(b));
    for (const auto& [name, t] : a.tensors) {
        if (name[0] != 'b') continue;
        for (double v : t.data) REQUIRE(v == 0.0);
    }
}

TEST_CASE("init_params weight moments follow the uniform fan bound", "[models]") {
    const MlpSpec spec = MlpSpec::make({100, 100, 100}, Act::Tanh, Act::Tanh);
    const NetworkParams p = init_params("N", spec, 7);
    const Tensor& w = p.find("W0");
    REQUIRE(w.data.size() == 10000);
    const double a = std::sqrt(6.0 / 200.0);
    double mean = 0.0;
    for (double v : w.data) {
        REQUIRE(v >= -a);
        REQUIRE(v < a);
        mean += v;
    }
    mean /= static_cast<double>(w.data.size());
    const double sigma = a / std::sqrt(3.0);  // stddev of U(-a,a)
    REQUIRE(std::abs(mean) < 3.0 * sigma / 100.0);
}

TEST_CASE("generator output is tanh-bounded and shape-preserving", "[models]") {
    const NetworkParams g = init_params("G", generator_spec(8, 2), 3);
    Rng rng(5);
    const Tensor z = sample_uniform(rng, {17, 8}, -1.0, 1.0);
    const Tensor out = generator_forward(g, z);
    REQUIRE(out.shape == Shape{17, 2});
    for (double v : out.data) {
        REQUIRE(v >= -1.0);
        REQUIRE(v <= 1.0);
    }
    const Tensor again = generator_forward(g, z);
    REQUIRE(out.data == again.data);  // deterministic per (params, z)
    REQUIRE_THROWS_AS(generator_forward(g, Tensor::zeros({17, 5})), std::invalid_argument);
}

TEST_CASE("classifier discriminator outputs probabilities strictly inside (0,1)", "[models]") {
    const NetworkParams d = init_params("D", classifier_disc_spec(2), 9);
    Rng rng(10);
    const Tensor x = sample_uniform(rng, {32, 2}, -1.0, 1.0);
    const DiscOutput out = discriminator_forward(d, x, DiscVariant::Classifier);
    REQUIRE(out.score.shape == Shape{32, 1});
    for (double v : out.score.data) {
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
    REQUIRE(!out.code);
}

TEST_CASE("autoencoder discriminator energy", "[models]") {
    SECTION("identity stack has zero energy") {
        MlpSpec spec = MlpSpec::make({2, 2, 2}, Act::Linear, Act::Linear);
        NetworkParams d = init_params("D", spec, 1);
        d.find("W0") = Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0});
        d.find("W1") = Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0});
        const Tensor x({1, 2}, {0.25, -0.75});
        const DiscOutput out = discriminator_forward(d, x, DiscVariant::Autoencoder);
        REQUIRE(out.score.data[0] == 0.0);
        REQUIRE(out.reconstruction->data == x.data);
        REQUIRE(out.code->shape == Shape{1, 2});
    }
    SECTION("energy is nonnegative on random inputs") {
        const NetworkParams d = init_params("D", autoencoder_disc_spec(2, 8), 2);
        Rng rng(3);
        for (int i = 0; i < 100; ++i) {
            const Tensor x = sample_uniform(rng, {1, 2}, -1.0, 1.0);
            const DiscOutput out = discriminator_forward(d, x, DiscVariant::Autoencoder);
            REQUIRE(out.score.data[0] >= 0.0);
        }
    }
    SECTION("code dimension equals the requested latent") {
        const NetworkParams d = init_params("D", autoencoder_disc_spec(2, 8), 4);
        REQUIRE(autoencoder_code_dim(d.spec) == 8);
        const DiscOutput out = discriminator_forward(d, Tensor::zeros({3, 2}), DiscVariant::Autoencoder);
        REQUIRE(out.code->shape == Shape{3, 8});
    }
}

TEST_CASE("comparator features are deterministic and batch-consistent", "[models]") {
    const NetworkParams c = init_params("C", comparator_spec(2), 19);
    Rng rng(20);
    const Tensor x = sample_uniform(rng, {5, 2}, -1.0, 1.0);
    const ComparatorFeatures a = comparator_features(c, x);
    const ComparatorFeatures b = comparator_features(c, x);
    REQUIRE(a.f_lo.data == b.f_lo.data);
    REQUIRE(a.f_hi.data == b.f_hi.data);
    REQUIRE(a.f_lo.shape == Shape{5, 32});
    REQUIRE(a.f_hi.shape == Shape{5, 16});

    // batch features equal per-sample features stacked
    for (int i = 0; i < 5; ++i) {
        Tensor row = Tensor::zeros({1, 2});
        row.at(0, 0) = x.at(i, 0);
        row.at(0, 1) = x.at(i, 1);
        const ComparatorFeatures one = comparator_features(c, row);
        for (int j = 0; j < 16; ++j) REQUIRE(one.f_hi.at(0, j) == a.f_hi.at(i, j));
        for (int j = 0; j < 32; ++j) REQUIRE(one.f_lo.at(0, j) == a.f_lo.at(i, j));
    }
}

TEST_CASE("gradient flows through the frozen comparator into the generator", "[models][oracle]") {
    // loss(w_G) = ||C(G(z)) - t||^2 with C frozen
    const MlpSpec gspec = generator_spec(4, 2, {8});
    const MlpSpec cspec = comparator_spec(2, 6, 3);
    const NetworkParams gp = init_params("G", gspec, 31);
    const NetworkParams cp = init_params("C", cspec, 32);
    Rng rng(33);
    const Tensor z = sample_uniform(rng, {3, 4}, -1.0, 1.0);
    const Tensor target = sample_uniform(rng, {3, 3}, -0.5, 0.5);

    Graph g;
    const int zn = g.input("z", {3, 4});
    const int xhat = build_mlp(g, gspec, zn, "G", true);
    std::vector<int> taps;
    build_mlp(g, cspec, xhat, "C", false, &taps);
    const int loss = g.sq_l2(taps[kComparatorHiTap], g.input("t", {3, 3}));
    g.set_root(loss);

    Bindings in;
    in["z"] = z;
    in["t"] = target;
    bind_params(in, gp);
    bind_params(in, cp);
    const auto grads = backward(g, forward_eval(g, in));
    REQUIRE(grads.count("C/W0") == 0);  // frozen: no gradient entries for C

    for (const auto& [lname, tensor] : gp.tensors) {
        const std::string key = "G/" + lname;
        const Tensor fd = finite_diff_grad(
            [&](const Tensor& p) {
                Bindings probe = in;
                probe[key] = p;
                return forward_eval(g, probe).of(g.root()).data[0];
            },
            in[key], 1e-5);
        for (std::size_t i = 0; i < fd.data.size(); ++i)
            REQUIRE(rel_err(grads.at(key).data[i], fd.data[i]) < 1e-5);
    }
}

TEST_CASE("checkpoint round trip is byte-identical", "[models]") {
    const NetworkParams g = init_params("G", generator_spec(4, 2), 77);
    const NetworkParams d = init_params("D", classifier_disc_spec(2), 78);
    const std::string p1 = "ckpt_roundtrip_a.kgan1";
    const std::string p2 = "ckpt_roundtrip_b.kgan1";
    save_networks(p1, {&g, &d});

    const auto flat = load_tensors(p1);
    std::vector<std::pair<std::string, Tensor>> copy = flat;
    save_tensors(p2, copy);

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    REQUIRE(b1 == b2);
    REQUIRE(!b1.empty());

    // reconstruct and compare within float32 precision
    const NetworkParams g2 = network_from_tensors("G", g.spec, tensors_for(flat, "G"));
    for (std::size_t t = 0; t < g.tensors.size(); ++t)
        for (std::size_t i = 0; i < g.tensors[t].second.data.size(); ++i)
            REQUIRE(g2.tensors[t].second.data[i] ==
                    static_cast<double>(static_cast<float>(g.tensors[t].second.data[i])));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("checkpoint detects corruption and wrong shapes", "[models]") {
    const NetworkParams g = init_params("G", generator_spec(4, 2), 5);
    const std::string path = "ckpt_corrupt.kgan1";
    save_networks(path, {&g});
    {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(20);
        f.put('\x7f');
    }
    REQUIRE_THROWS_WITH(load_tensors(path), Catch::Matchers::ContainsSubstring("CRC"));
    std::remove(path.c_str());

    save_networks(path, {&g});
    const auto flat = load_tensors(path);
    REQUIRE_THROWS_AS(network_from_tensors("G", generator_spec(5, 2), tensors_for(flat, "G")),
                      std::runtime_error);
    REQUIRE_THROWS_AS(network_from_tensors("Q", generator_spec(4, 2), tensors_for(flat, "Q")),
                      std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("widths can be rebuilt from checkpoint tensors", "[models]") {
    const NetworkParams g = init_params("G", generator_spec(4, 2, {10, 6}), 5);
    const std::string path = "ckpt_widths.kgan1";
    save_networks(path, {&g});
    const auto widths = widths_from_tensors(tensors_for(load_tensors(path), "G"));
    REQUIRE(widths == std::vector<int>{4, 10, 6, 2});
    std::remove(path.c_str());
}
