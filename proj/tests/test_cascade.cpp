#include <catch2/catch_amalgamated.hpp>

#include "ianforge/cascade.hpp"
#include "ianforge/rng.hpp"

using namespace ianforge;

namespace {

NetworkParams identity_translator() {
    MlpSpec lin = MlpSpec::make({2, 2}, Act::Linear, Act::Linear);
    NetworkParams t = init_params("A", lin, 0);
    t.find("W0") = Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0});
    return t;
}

}  // namespace

TEST_CASE("ian_sample through an identity translator equals the generator", "[cascade]") {
    const NetworkParams g = init_params("G", generator_spec(4, 2, {8}), 3);
    const IanPipeline pipe(g, identity_translator());
    Rng rng(1);
    const Tensor z = sample_uniform(rng, {6, 4}, -1.0, 1.0);
    const Tensor direct = generator_forward(g, z);
    const Tensor cascaded = ian_sample(pipe, z);
    REQUIRE(cascaded.data == direct.data);
}

TEST_CASE("ian_sample batch equals per-sample stacking and stays bounded", "[cascade]") {
    const NetworkParams g = init_params("G", generator_spec(4, 2, {8}), 5);
    const NetworkParams a = init_params("A", translator_spec(2, {8}), 6);
    const IanPipeline pipe(g, a);
    Rng rng(2);
    const Tensor z = sample_uniform(rng, {5, 4}, -1.0, 1.0);
    const Tensor batch = ian_sample(pipe, z);
    for (double v : batch.data) {
        REQUIRE(v >= -1.0);
        REQUIRE(v <= 1.0);
    }
    for (int i = 0; i < 5; ++i) {
        Tensor zi = Tensor::zeros({1, 4});
        for (int j = 0; j < 4; ++j) zi.at(0, j) = z.at(i, j);
        const Tensor one = ian_sample(pipe, zi);
        for (int j = 0; j < 2; ++j) REQUIRE(one.at(0, j) == batch.at(i, j));
    }
}

TEST_CASE("pipeline rejects mismatched spaces", "[cascade]") {
    const NetworkParams g = init_params("G", generator_spec(4, 3, {8}), 1);
    const NetworkParams a = init_params("A", translator_spec(2, {8}), 2);
    REQUIRE_THROWS_AS(IanPipeline(g, a), std::invalid_argument);
}

TEST_CASE("manifold traversal", "[cascade]") {
    const NetworkParams ae = init_params("D", autoencoder_disc_spec(2, 4), 9);
    Rng rng(3);
    TraversalPlan plan;
    plan.x_a = sample_uniform(rng, {1, 2}, -1.0, 1.0);
    plan.x_b = sample_uniform(rng, {1, 2}, -1.0, 1.0);

    SECTION("N=2 columns are exactly the decoded endpoint codes") {
        plan.n_points = 2;
        const TraversalGrid grid = manifold_traverse(plan, ae, DiscVariant::Autoencoder);
        REQUIRE(grid.rows == 1);
        REQUIRE(grid.cols == 2);
        const Tensor da = autoencoder_decode(ae, autoencoder_encode(ae, plan.x_a));
        const Tensor db = autoencoder_decode(ae, autoencoder_encode(ae, plan.x_b));
        for (int j = 0; j < 2; ++j) {
            REQUIRE(grid.cell(0, 0)[j] == da.data[static_cast<std::size_t>(j)]);
            REQUIRE(grid.cell(0, 1)[j] == db.data[static_cast<std::size_t>(j)]);
        }
    }

    SECTION("identical endpoints give constant columns") {
        plan.x_b = plan.x_a;
        plan.n_points = 5;
        const NetworkParams tr = init_params("A", translator_spec(2, {8}), 12);
        plan.translators = {&tr};
        const TraversalGrid grid = manifold_traverse(plan, ae, DiscVariant::Autoencoder);
        REQUIRE(grid.rows == 2);
        REQUIRE(grid.cols == 5);
        for (int r = 0; r < grid.rows; ++r)
            for (int c = 1; c < grid.cols; ++c)
                for (int j = 0; j < 2; ++j) REQUIRE(grid.cell(r, c)[j] == grid.cell(r, 0)[j]);
    }

    SECTION("grid shape is (1 + #translators) x N") {
        plan.n_points = 7;
        const NetworkParams t1 = init_params("A", translator_spec(2, {8}), 13);
        const NetworkParams t2 = init_params("A", translator_spec(2, {8}), 14);
        plan.translators = {&t1, &t2};
        const TraversalGrid grid = manifold_traverse(plan, ae, DiscVariant::Autoencoder);
        REQUIRE(grid.rows == 3);
        REQUIRE(grid.cols == 7);
        REQUIRE(grid.cells.shape == Shape{21, 2});
    }

    SECTION("classifier-variant discriminator is rejected") {
        REQUIRE_THROWS_AS(manifold_traverse(plan, ae, DiscVariant::Classifier), std::invalid_argument);
    }

    SECTION("N < 2 is rejected") {
        plan.n_points = 1;
        REQUIRE_THROWS_AS(manifold_traverse(plan, ae, DiscVariant::Autoencoder), std::invalid_argument);
    }
}

TEST_CASE("interpolated codes lie on the segment between the endpoint codes", "[cascade]") {
    const NetworkParams ae = init_params("D", autoencoder_disc_spec(2, 3), 21);
    Rng rng(22);
    const Tensor xa = sample_uniform(rng, {1, 2}, -1.0, 1.0);
    const Tensor xb = sample_uniform(rng, {1, 2}, -1.0, 1.0);
    const Tensor za = autoencoder_encode(ae, xa);
    const Tensor zb = autoencoder_encode(ae, xb);

    const int n = 6;
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        // definitional: the convex combination built by traversal
        for (int j = 0; j < 3; ++j) {
            const double zi = (1.0 - t) * za.data[static_cast<std::size_t>(j)] + t * zb.data[static_cast<std::size_t>(j)];
            const double back = (1.0 - t) * za.data[static_cast<std::size_t>(j)] + t * zb.data[static_cast<std::size_t>(j)];
            REQUIRE(zi == back);
        }
    }
}
