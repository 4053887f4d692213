#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ianforge/dataset.hpp"
#include "ianforge/metrics.hpp"
#include "ianforge/train.hpp"

using namespace ianforge;

TEST_CASE("noise baseline J recovers E|u| for a single zero point in 1-D", "[metrics]") {
    const Tensor train({1, 1}, {0.0});
    Rng rng(8);
    const double j = noise_baseline_J(train, 10000, rng);
    // E|U(-1,1)| = 0.5, sigma = sqrt(1/12); 3 sigma / sqrt(n) ~ 0.0087
    REQUIRE(std::abs(j - 0.5) < 0.01);
}

TEST_CASE("noise baseline with a single draw equals that draw's NN distance", "[metrics]") {
    const Tensor train({2, 2}, {0.0, 0.0, 1.0, 1.0});
    Rng rng_a(3);
    const double j = noise_baseline_J(train, 1, rng_a);
    Rng rng_b(3);
    const Tensor noise = sample_uniform(rng_b, {1, 2}, -1.0, 1.0);
    auto dist = [&](double px, double py) {
        const double dx = noise.at(0, 0) - px;
        const double dy = noise.at(0, 1) - py;
        return std::sqrt(dx * dx + dy * dy);
    };
    const double d0 = dist(0.0, 0.0);
    const double d1 = dist(1.0, 1.0);
    REQUIRE(j == std::min(d0, d1));
    REQUIRE(j > 0.0);
}

TEST_CASE("noise baseline validation", "[metrics]") {
    Rng rng(1);
    REQUIRE_THROWS_AS(noise_baseline_J(Tensor({1, 1}, {0.0}), 0, rng), std::invalid_argument);
}

TEST_CASE("err is zero exactly on training samples", "[metrics]") {
    const Tensor train = generate_dataset(DataKind::Blobs, 50, 4).samples;
    const double j = 0.37;
    for (int i = 0; i < 50; i += 7) {
        const std::vector<double> s{train.at(i, 0), train.at(i, 1)};
        REQUIRE(nn_pixel_error(s, train, j) == 0.0);
    }
}

TEST_CASE("fresh uniform noise scores err near one", "[metrics]") {
    const Tensor train = generate_dataset(DataKind::Ring, 400, 9).samples;
    Rng rng(10);
    const double j = noise_baseline_J(train, 2000, rng);
    const Tensor noise = sample_uniform(rng, {2000, 2}, -1.0, 1.0);
    const double mean_err = mean_nn_pixel_error(noise, train, j);
    REQUIRE(mean_err > 0.9);
    REQUIRE(mean_err < 1.1);
}

TEST_CASE("midpoint of two nearest training points scores delta over J", "[metrics]") {
    const double delta = 0.2;
    const Tensor train({2, 2}, {-delta, 0.0, delta, 0.0});  // distance 2 delta apart
    const double j = 0.5;
    REQUIRE(nn_pixel_error({0.0, 0.0}, train, j) == Catch::Approx(delta / j).epsilon(1e-12));
}

TEST_CASE("err is translation-consistent", "[metrics]") {
    Rng rng(11);
    Tensor train = sample_uniform(rng, {40, 3}, -0.5, 0.5);
    const std::vector<double> s{0.1, -0.2, 0.3};
    const double j = 0.8;
    const double base = nn_pixel_error(s, train, j);
    const std::vector<double> shift{0.07, -0.03, 0.11};
    Tensor train2 = train;
    for (int i = 0; i < 40; ++i)
        for (int k = 0; k < 3; ++k) train2.at(i, k) += shift[static_cast<std::size_t>(k)];
    std::vector<double> s2 = s;
    for (int k = 0; k < 3; ++k) s2[static_cast<std::size_t>(k)] += shift[static_cast<std::size_t>(k)];
    REQUIRE(nn_pixel_error(s2, train2, j) == Catch::Approx(base).epsilon(1e-12));
}

TEST_CASE("err requires a positive J", "[metrics]") {
    const Tensor train({1, 2}, {0.0, 0.0});
    REQUIRE_THROWS_AS(nn_pixel_error({0.0, 0.0}, train, 0.0), std::invalid_argument);
}

TEST_CASE("proxy score of a single sample equals its softmax entry", "[metrics]") {
    const NetworkParams c = init_params("C", comparator_spec(2), 33);
    Rng rng(34);
    const Tensor x = sample_uniform(rng, {1, 2}, -1.0, 1.0);

    Graph g;
    const int xn = g.input("x", {1, 2});
    g.mark("p", build_mlp(g, c.spec, xn, "C", false));
    Bindings b;
    b["x"] = x;
    bind_params(b, c);
    const double p = forward_eval(g, b).of(g.names().at("p")).data[0];

    REQUIRE(proxy_class_score(c, x, 1) == p);
    REQUIRE(proxy_class_score(c, x, 0) == Catch::Approx(1.0 - p).epsilon(1e-12));
    REQUIRE_THROWS_AS(proxy_class_score(c, x, 2), std::invalid_argument);
}

TEST_CASE("trained proxy classifier separates its classes and stays calibrated on noise",
          "[metrics][oracle]") {
    const Tensor disks = generate_dataset(DataKind::Disks, 240, 41).samples;
    const Tensor crosses = generate_dataset(DataKind::Crosses, 240, 42).samples;
    const NetworkParams clf =
        train_proxy_classifier(comparator_spec(kImageDim), disks, crosses, 1000, 64, 43, 2e-3);

    const Tensor disks_eval = generate_dataset(DataKind::Disks, 80, 44).samples;
    const Tensor crosses_eval = generate_dataset(DataKind::Crosses, 80, 45).samples;
    REQUIRE(proxy_class_score(clf, disks_eval, 0) > 0.9);
    REQUIRE(proxy_class_score(clf, crosses_eval, 1) > 0.9);

    Rng rng(46);
    const Tensor noise = sample_uniform(rng, {200, kImageDim}, -1.0, 1.0);
    const double noise_score = proxy_class_score(clf, noise, 1);
    REQUIRE(std::abs(noise_score - 0.5) < 0.15);  // near the two-class prior
}

TEST_CASE("evaluate assembles the report", "[metrics]") {
    const Tensor x_set = generate_dataset(DataKind::Blobs, 60, 51).samples;
    const Tensor y_set = generate_dataset(DataKind::Shifted, 60, 52).samples;
    const NetworkParams clf = init_params("C", comparator_spec(2), 53);

    SECTION("samples from the x set give err_x = 0") {
        Tensor samples = Tensor::zeros({10, 2});
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 2; ++j) samples.at(i, j) = x_set.at(i * 3, j);
        Rng rng(54);
        const EvalReport r = evaluate(samples, x_set, y_set, clf, 500, rng);
        REQUIRE(r.err_x == 0.0);
        REQUIRE(r.err_y > 0.0);
        REQUIRE(r.n_samples == 10);
    }

    SECTION("score_avg is the mean of both scores") {
        Rng rng(55);
        const Tensor samples = sample_uniform(rng, {20, 2}, -1.0, 1.0);
        const EvalReport r = evaluate(samples, x_set, y_set, clf, 200, rng);
        REQUIRE(r.score_avg == Catch::Approx(0.5 * (r.score_x + r.score_y)).epsilon(1e-12));
        REQUIRE(r.score_x >= 0.0);
        REQUIRE(r.score_x <= 1.0);
    }

    SECTION("evaluate is deterministic per seed") {
        Rng rng_a(56), rng_b(56);
        const Tensor samples = generate_dataset(DataKind::Blobs, 15, 57).samples;
        const EvalReport a = evaluate(samples, x_set, y_set, clf, 300, rng_a);
        const EvalReport b = evaluate(samples, x_set, y_set, clf, 300, rng_b);
        REQUIRE(a.err_x == b.err_x);
        REQUIRE(a.err_y == b.err_y);
        REQUIRE(a.score_y == b.score_y);
    }
}

TEST_CASE("feature distance to the target set responds to the knn pull", "[metrics]") {
    // sanity: feature NN distance of the y set against itself is zero
    const Tensor y = generate_dataset(DataKind::Crosses, 30, 61).samples;
    const NetworkParams comp = init_params("C", comparator_spec(kImageDim), 62);
    REQUIRE(mean_feature_nn_distance(comp, y, y) == 0.0);
    const Tensor x = generate_dataset(DataKind::Disks, 30, 63).samples;
    REQUIRE(mean_feature_nn_distance(comp, x, y) > 0.0);
}
