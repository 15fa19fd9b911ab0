#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "rae/attacks.hpp"
#include "rae/dataset.hpp"
#include "rae/errors.hpp"
#include "rae/model.hpp"
#include "rae/rng.hpp"

using namespace rae;
using attacks::AttackResult;
using classifier::ModelParams;
using nn::Tensor;

namespace {

// Frozen regression baselines, produced by the deterministic runs in the
// tests below (quick 6-epoch model, seeds as written). Update only when the
// pipeline intentionally changes.
constexpr double kFgsmEps32SuccessBaseline = 1.0;
constexpr double kDeepfoolSurvivalBaseline = 0.875;

// 1 x 2 grayscale "image" classifier with explicit logit rows; consumes
// pixels/255.
ModelParams linear_model(std::vector<double> w0, std::vector<double> w1, double b0, double b1) {
    ModelParams params;
    params.widths = {2, 2};
    params.class_count = 2;
    params.input_h = 1;
    params.input_w = 2;
    params.input_c = 1;
    params.graph = nn::Graph(params.widths);
    params.graph.layers()[0].w.data = {w0[0], w0[1], w1[0], w1[1]};
    params.graph.layers()[0].b.data = {b0, b1};
    return params;
}

Image two_pixel_image(std::uint8_t a, std::uint8_t b) {
    Image img(1, 2, 1);
    img.px = {a, b};
    return img;
}

ModelParams quick_trained_model() {
    const auto full = classifier::generate_shapes_dataset(21, 1400);
    const auto [train_set, test_set] = classifier::split_dataset(full, 0.8);
    classifier::TrainConfig cfg;
    cfg.epochs = 28;
    cfg.seed = 3;
    static const ModelParams cached =
        classifier::train(train_set, cfg, nullptr, {96, 48}).params;
    return cached;
}

}  // namespace

TEST_CASE("fgsm with eps 0 returns the input unchanged and fails") {
    const auto params = linear_model({0, 0}, {1, 1}, 0.0, -1.0);
    const Image img = two_pixel_image(100, 50);
    const auto result = attacks::fgsm(params, img, 0, 0.0);
    CHECK(result.adversarial == img);
    CHECK_FALSE(result.success);
    CHECK(result.l2_distortion == 0.0);
}

TEST_CASE("fgsm follows the analytic two-class gradient sign") {
    // w1 - w0 = (1, -2), y = 0: grad_X J = softmax_1 * (1,-2), sign (+1,-1).
    const auto params = linear_model({0.5, 0.3}, {1.5, -1.7}, 0.0, -0.2);
    const Image img = two_pixel_image(100, 100);
    REQUIRE(classifier::predict(params, img).label == 0);
    const double eps = 12.0;
    const auto result = attacks::fgsm(params, img, 0, eps);
    CHECK(result.float_iterate.data[0] == doctest::Approx(100.0 + eps).epsilon(1e-12));
    CHECK(result.float_iterate.data[1] == doctest::Approx(100.0 - eps).epsilon(1e-12));
    CHECK(result.adversarial.px[0] == 112);
    CHECK(result.adversarial.px[1] == 88);
}

TEST_CASE("fgsm pre-clip change is exactly -eps, 0 or +eps per pixel") {
    const auto model = quick_trained_model();
    const auto ds = classifier::generate_shapes_dataset(22, 6);
    const double eps = 9.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto result = attacks::fgsm(model, ds.images[i], ds.labels[i], eps);
        for (std::size_t j = 0; j < ds.images[i].size(); ++j) {
            const double px = ds.images[i].px[j];
            if (px < eps || px > 255.0 - eps) continue;  // clip region
            const double change = result.float_iterate.data[j] - px;
            const bool ok = change == 0.0 || change == eps || change == -eps;
            if (!ok) CAPTURE(change);
            CHECK(ok);
        }
    }
}

TEST_CASE("project_l2_ball returns interior points bitwise-unchanged") {
    Tensor x({3}, {1.0, 2.0, 3.0});
    Tensor x0({3}, {1.1, 2.1, 3.1});
    const Tensor out = attacks::project_l2_ball(x, x0, 10.0);
    CHECK(out.data == x.data);
}

TEST_CASE("project_l2_ball on the 3-4-5 triangle") {
    Tensor x({2}, {3.0, 4.0});
    Tensor x0({2}, {0.0, 0.0});
    const Tensor out = attacks::project_l2_ball(x, x0, 1.0);
    CHECK(out.data[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(out.data[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("project_l2_ball output never leaves the ball") {
    Rng rng(55);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(1, 8));
        Tensor x({n}), x0({n});
        for (double& v : x.data) v = rng.uniform_real(-50, 50);
        for (double& v : x0.data) v = rng.uniform_real(-50, 50);
        const double eps = rng.uniform_real(0.0, 20.0);
        const Tensor out = attacks::project_l2_ball(x, x0, eps);
        double norm = 0;
        for (int i = 0; i < n; ++i) {
            const double d = out.data[i] - x0.data[i];
            norm += d * d;
        }
        CHECK(std::sqrt(norm) <= eps + 1e-12);
    }
}

TEST_CASE("igsm with eps 0 returns the input") {
    const auto params = linear_model({0, 0}, {2, 1}, 0.0, -1.0);
    const Image img = two_pixel_image(90, 30);  // correctly classified as 0
    REQUIRE(classifier::predict(params, img).label == 0);
    const auto result = attacks::igsm_l2(params, img, 0, 0.0);
    CHECK(result.adversarial == img);
    CHECK_FALSE(result.success);
}

TEST_CASE("igsm succeeds exactly when eps clears the boundary distance") {
    // Z1 - Z0 = w.(x/255) + b; boundary distance in 0-255 units is
    // 255*|w.x/255 + b| / ||w||.
    const std::vector<double> w{3.0, 4.0};
    const double b = -1.8;
    const Image img = two_pixel_image(60, 40);
    const auto params = linear_model({0, 0}, w, 0.0, b);
    REQUIRE(classifier::predict(params, img).label == 0);
    const double margin =
        w[0] * (img.px[0] / 255.0) + w[1] * (img.px[1] / 255.0) + b;
    const double d = 255.0 * std::abs(margin) / 5.0;
    REQUIRE(d > 5.0);

    const auto too_small = attacks::igsm_l2(params, img, 0, d - 1.5, 0.0, 40);
    CHECK_FALSE(too_small.success);
    const auto enough = attacks::igsm_l2(params, img, 0, d + 1.5, 0.0, 40);
    CHECK(enough.success);
}

TEST_CASE("igsm iterates never leave the eps ball or the pixel box") {
    const auto model = quick_trained_model();
    const auto ds = classifier::generate_shapes_dataset(23, 10);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double eps = 24.0;
        const auto result = attacks::igsm_l2(model, ds.images[i], ds.labels[i], eps, 0.0, 20);
        for (double norm : result.iterate_norms) CHECK(norm <= eps + 1e-9);
        for (double v : result.float_iterate.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 255.0);
        }
        CHECK(result.iterations <= 20);
    }
}

TEST_CASE("igsm reports a degenerate gradient on a zero-weight model") {
    const auto params = linear_model({0, 0}, {0, 0}, 0.0, 0.0);
    const Image img = two_pixel_image(10, 20);
    CHECK_THROWS_AS(attacks::igsm_l2(params, img, 0, 8.0), DegenerateGradientError);
}

TEST_CASE("deepfool returns zero perturbation when already misclassified") {
    const auto params = linear_model({0, 0}, {1, 1}, 0.0, 1.0);  // label 1 everywhere
    const Image img = two_pixel_image(40, 40);
    const auto result = attacks::deepfool_l2(params, img, 0);
    CHECK(result.success);
    CHECK(result.iterations == 0);
    CHECK(result.adversarial == img);
    CHECK(result.l2_distortion == 0.0);
}

TEST_CASE("deepfool float core reproduces the analytic linear step") {
    // w = (3,4), b = 0, x = (1,1): delta = -(7/25)*(3,4) = (-0.84, -1.12).
    nn::Graph g({2, 2});
    g.layers()[0].w.data = {0, 0, 3, 4};
    Tensor x0({2}, {1.0, 1.0});
    const auto trace = attacks::deepfool_l2_float(g, x0, 50, 0.02);
    CHECK(trace.iterations == 1);
    CHECK(trace.flipped);
    CHECK(trace.delta.data[0] == doctest::Approx(-0.84).epsilon(1e-9));
    CHECK(trace.delta.data[1] == doctest::Approx(-1.12).epsilon(1e-9));
    CHECK(trace.final_x.data[0] == doctest::Approx(1.0 - 1.02 * 0.84).epsilon(1e-9));
    CHECK(trace.final_x.data[1] == doctest::Approx(1.0 - 1.02 * 1.12).epsilon(1e-9));
}

TEST_CASE("deepfool takes one step on random linear classifiers") {
    Rng rng(66);
    for (int trial = 0; trial < 40; ++trial) {
        const int k = static_cast<int>(rng.uniform_int(2, 5));
        const int n = static_cast<int>(rng.uniform_int(2, 6));
        nn::Graph g({n, k});
        for (double& v : g.layers()[0].w.data) v = rng.uniform_real(-1, 1);
        for (double& v : g.layers()[0].b.data) v = rng.uniform_real(-0.3, 0.3);
        Tensor x0({n});
        for (double& v : x0.data) v = rng.uniform_real(-2, 2);

        const auto acts = g.forward(x0);
        int cur = 0;
        for (int i = 1; i < k; ++i)
            if (acts.logits.data[i] > acts.logits.data[cur]) cur = i;

        // Independent closed form: nearest-boundary projection.
        double best_ratio = std::numeric_limits<double>::infinity();
        std::vector<double> best_w;
        double best_f = 0;
        for (int c = 0; c < k; ++c) {
            if (c == cur) continue;
            std::vector<double> wk(static_cast<std::size_t>(n));
            double norm = 0;
            for (int i = 0; i < n; ++i) {
                wk[i] = g.layers()[0].w.data[static_cast<std::size_t>(c) * n + i] -
                        g.layers()[0].w.data[static_cast<std::size_t>(cur) * n + i];
                norm += wk[i] * wk[i];
            }
            norm = std::sqrt(norm);
            if (norm == 0) continue;
            const double f = acts.logits.data[c] - acts.logits.data[cur];
            if (std::abs(f) / norm < best_ratio) {
                best_ratio = std::abs(f) / norm;
                best_w = wk;
                best_f = f;
            }
        }
        REQUIRE(!best_w.empty());
        double wnorm_sq = 0;
        for (double v : best_w) wnorm_sq += v * v;

        const auto trace = attacks::deepfool_l2_float(g, x0, 50, 0.02);
        CHECK(trace.iterations == 1);
        CHECK(trace.flipped);
        for (int i = 0; i < n; ++i) {
            const double expected = std::abs(best_f) / wnorm_sq * best_w[i];
            CHECK(trace.delta.data[i] == doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("cw_loss arithmetic") {
    // The margin is floored at -kappa, so kappa = 0 clamps misclassified
    // inputs to exactly 0.
    CHECK(attacks::cw_loss(Tensor({2}, {2.0, 5.0}), 0, 0.0) == doctest::Approx(0.0));
    CHECK(attacks::cw_loss(Tensor({2}, {2.0, 5.0}), 0, 3.5) == doctest::Approx(-3.0));
    CHECK(attacks::cw_loss(Tensor({2}, {5.0, 4.8}), 0, 0.5) == doctest::Approx(0.2));
    // Misclassified input: true logit below the max, so the loss is <= 0.
    CHECK(attacks::cw_loss(Tensor({3}, {1.0, 4.0, 2.0}), 0, 0.0) <= 0.0);
}

TEST_CASE("cw returns the input when it is already misclassified") {
    const auto params = linear_model({0, 0}, {1, 1}, 0.0, 2.0);
    const Image img = two_pixel_image(30, 200);
    const auto result = attacks::cw_l2(params, img, 0);
    CHECK(result.success);
    CHECK(result.adversarial == img);
    CHECK(result.l2_distortion == 0.0);
}

namespace {

struct GridOracle {
    double best_norm = std::numeric_limits<double>::infinity();  // normalized units
};

// Exhaustive search over the [0,1]^2 box at resolution 1/512 for the
// smallest-l2 point with cw_loss <= 0.
GridOracle grid_search(const ModelParams& params, const Image& img, int label) {
    GridOracle oracle;
    const double x0 = img.px[0] / 255.0;
    const double x1 = img.px[1] / 255.0;
    for (int a = 0; a <= 512; ++a)
        for (int b = 0; b <= 512; ++b) {
            Tensor x({2}, {a / 512.0, b / 512.0});
            const auto logits = params.graph.forward(x).logits;
            if (attacks::cw_loss(logits, label, 0.0) <= 0.0) {
                const double d0 = x.data[0] - x0, d1 = x.data[1] - x1;
                oracle.best_norm = std::min(oracle.best_norm, std::sqrt(d0 * d0 + d1 * d1));
            }
        }
    return oracle;
}

}  // namespace

TEST_CASE("cw lands within 5% of the exhaustive grid oracle") {
    // Boundary roughly 60/255 away from the start in normalized units.
    const auto params = linear_model({0, 0}, {2.0, 1.0}, 0.0, -1.25);
    const Image img = two_pixel_image(70, 90);
    REQUIRE(classifier::predict(params, img).label == 0);

    const auto oracle = grid_search(params, img, 0);
    REQUIRE(oracle.best_norm < std::numeric_limits<double>::infinity());

    const auto result = attacks::cw_l2(params, img, 0);
    REQUIRE(result.success);
    double float_norm = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double d = result.float_iterate.data[i] / 255.0 - img.px[i] / 255.0;
        float_norm += d * d;
    }
    float_norm = std::sqrt(float_norm);
    CHECK(float_norm <= oracle.best_norm * 1.05);
    CHECK(float_norm >= oracle.best_norm * 0.95 - 1e-9);

    SUBCASE("success implies nonpositive margin loss before quantization") {
        const Tensor xn = nn::scale(result.float_iterate, 1.0 / 255.0);
        const auto logits = params.graph.forward(xn).logits;
        CHECK(attacks::cw_loss(logits, 0, 0.0) <= 1e-12);
    }

    SUBCASE("cw never beats deepfool by losing: distortion ordering") {
        const auto df = attacks::deepfool_l2(params, img, 0);
        REQUIRE(df.success);
        CHECK(result.l2_distortion <= df.l2_distortion * (1.0 + 1e-9));
    }
}

TEST_CASE("quantize_and_verify leaves integral iterates unchanged") {
    const auto params = linear_model({0, 0}, {1, -1}, 0.0, 0.0);
    const Image img = two_pixel_image(13, 250);
    Tensor iterate({2}, {13.0, 250.0});
    const auto result = attacks::quantize_and_verify(params, iterate, img, 0);
    CHECK(result.adversarial == img);
    CHECK(result.l2_distortion == 0.0);
}

TEST_CASE("quantize_and_verify success flag always reflects the quantized image") {
    const auto model = quick_trained_model();
    const auto ds = classifier::generate_shapes_dataset(24, 8);
    Rng rng(77);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        Tensor iterate({static_cast<int>(ds.images[i].size())});
        for (std::size_t j = 0; j < iterate.numel(); ++j)
            iterate.data[j] =
                std::clamp(ds.images[i].px[j] + rng.uniform_real(-6, 6), 0.0, 255.0);
        const auto result = attacks::quantize_and_verify(model, iterate, ds.images[i],
                                                         ds.labels[i]);
        const int quantized_label = classifier::predict(model, result.adversarial).label;
        CHECK(result.success == (quantized_label != ds.labels[i]));
        const double recomputed = image_l2_distance(result.adversarial, ds.images[i]);
        CHECK(std::abs(recomputed - result.l2_distortion) < 1e-9);
    }
}

TEST_CASE("attacks are deterministic") {
    const auto model = quick_trained_model();
    const auto ds = classifier::generate_shapes_dataset(25, 6);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        attacks::AttackConfig cfg;
        cfg.method = attacks::Method::deepfool_l2;
        const auto a = attacks::run_attack(model, ds.images[i], ds.labels[i], cfg);
        const auto b = attacks::run_attack(model, ds.images[i], ds.labels[i], cfg);
        CHECK(a.adversarial == b.adversarial);
        CHECK(a.l2_distortion == b.l2_distortion);
    }
}

TEST_CASE("regression: fgsm eps 32 success rate on the quick model") {
    const auto model = quick_trained_model();
    const auto full = classifier::generate_shapes_dataset(21, 1400);
    const auto test_set = classifier::split_dataset(full, 0.8).second;
    int attacked = 0, hits = 0;
    for (std::size_t i = 0; i < test_set.size() && attacked < 200; ++i) {
        if (classifier::predict(model, test_set.images[i]).label != test_set.labels[i])
            continue;
        ++attacked;
        if (attacks::fgsm(model, test_set.images[i], test_set.labels[i], 32.0).success)
            ++hits;
    }
    REQUIRE(attacked == 200);
    const double rate = static_cast<double>(hits) / attacked;
    CAPTURE(rate);
    CHECK(rate == doctest::Approx(kFgsmEps32SuccessBaseline).epsilon(1e-12));
}

TEST_CASE("regression: deepfool quantization survival on the quick model") {
    const auto model = quick_trained_model();
    const auto full = classifier::generate_shapes_dataset(21, 1400);
    const auto test_set = classifier::split_dataset(full, 0.8).second;
    int attacked = 0, survived = 0;
    for (std::size_t i = 0; i < test_set.size() && attacked < 200; ++i) {
        if (classifier::predict(model, test_set.images[i]).label != test_set.labels[i])
            continue;
        ++attacked;
        const auto result =
            attacks::deepfool_l2(model, test_set.images[i], test_set.labels[i]);
        if (result.success) ++survived;
    }
    REQUIRE(attacked == 200);
    const double rate = static_cast<double>(survived) / attacked;
    CAPTURE(rate);
    CHECK(rate == doctest::Approx(kDeepfoolSurvivalBaseline).epsilon(1e-12));
}
