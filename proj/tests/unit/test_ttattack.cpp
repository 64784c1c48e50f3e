#include <doctest.h>

#include <cmath>
#include <set>

#include "support.hpp"
#include "ttlab/errors.hpp"
#include "ttlab/gradcore/ops.hpp"
#include "ttlab/modelzoo/arch.hpp"
#include "ttlab/ttattack/attack.hpp"

using namespace ttlab;
using namespace ttlab::ttattack;

namespace {

const Shape kShape{8, 16, 16, 1};

Model zoo(modelzoo::ArchFamily f, std::uint64_t seed = 3) { return modelzoo::build_model(modelzoo::make_arch(f, kShape, 8, seed)); }

// Plain sign-step BIM written out independently of tt_attack.
Tensor reference_bim(Model& m, const Tensor& x, Label y, double eps, std::size_t iters) {
    const double alpha = eps / double(iters);
    Tensor cur = x;
    for (std::size_t k = 0; k < iters; ++k) {
        const Tensor g = input_gradient(m, cur, y);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            const double s = g[i] > 0 ? 1.0 : g[i] < 0 ? -1.0 : 0.0;
            double v = cur[i] + alpha * s;
            v = std::min(std::max(v, x[i] - eps), x[i] + eps);
            cur[i] = std::min(std::max(v, 0.0), 1.0);
        }
    }
    return cur;
}

}  // namespace

TEST_SUITE("ttattack") {

TEST_CASE("temporal shift convention") {
    Tensor x({4, 1, 1, 1}, {0.0, 1.0, 2.0, 3.0});
    CHECK(temporal_shift(x, 1) == Tensor({4, 1, 1, 1}, {3.0, 0.0, 1.0, 2.0}));
    CHECK(temporal_shift(x, -1) == Tensor({4, 1, 1, 1}, {1.0, 2.0, 3.0, 0.0}));
    CHECK(temporal_shift(x, 0) == x);
    CHECK_THROWS_AS(temporal_shift(x, 4), RangeError);
    CHECK_THROWS_AS(temporal_shift(x, -4), RangeError);
}

TEST_CASE("every translation is undone by its inverse") {
    const Tensor x = testing::random_tensor({7, 3, 2, 2}, 8);
    for (auto kind : {ShiftKind::adjacent, ShiftKind::remote, ShiftKind::random}) {
        for (long i = -6; i <= 6; ++i) {
            const auto p = translation({kind, 11}, i, 7);
            CHECK(p.then(p.inverse()).is_identity());
            CHECK(p.inverse().apply(p.apply(x)) == x);
            CHECK(temporal_shift(temporal_shift(x, i), -i) == x);
        }
    }
}

TEST_CASE("strategy translations") {
    CHECK(translation({ShiftKind::adjacent, 0}, 2, 8) == FramePermutation::rotation(8, 2));
    CHECK(translation({ShiftKind::remote, 0}, 1, 8) == FramePermutation::rotation(8, 5));
    CHECK(translation({ShiftKind::remote, 0}, -1, 7) == FramePermutation::rotation(7, 2));
    CHECK(translation({ShiftKind::random, 5}, 0, 8).is_identity());
    CHECK(translation({ShiftKind::random, 5}, 3, 8) == translation({ShiftKind::random, 5}, 3, 8));
    std::set<std::vector<std::size_t>> distinct;
    for (long i = -3; i <= 3; ++i) distinct.insert(translation({ShiftKind::random, 5}, i, 8).source());
    CHECK(distinct.size() == 7);
    CHECK_FALSE(translation({ShiftKind::random, 5}, 2, 8) == translation({ShiftKind::random, 6}, 2, 8));
    CHECK(temporal_shift(testing::random_tensor({8, 2, 2, 1}, 1), 3) ==
          FramePermutation::rotation(8, 3).apply(testing::random_tensor({8, 2, 2, 1}, 1)));
    CHECK_THROWS_AS(FramePermutation({0, 0, 1}), InputError);
}

TEST_CASE("weight matrices") {
    const auto u = build_weight_matrix(WeightKind::uniform, 2);
    for (double w : u.weights) CHECK(w == doctest::Approx(0.2).epsilon(1e-15));
    const auto lin = build_weight_matrix(WeightKind::linear, 1);
    CHECK(std::abs(lin.at(-1) - 2.0 / 7) < 1e-12);
    CHECK(std::abs(lin.at(0) - 3.0 / 7) < 1e-12);
    CHECK(std::abs(lin.at(1) - 2.0 / 7) < 1e-12);
    const auto g = build_weight_matrix(WeightKind::gaussian, 3);
    CHECK(g.sigma == 1.0);
    for (long i = 1; i <= 3; ++i) {
        CHECK(g.at(i) == g.at(-i));
        CHECK(g.at(0) > g.at(i));
    }
    for (auto kind : {WeightKind::uniform, WeightKind::linear, WeightKind::gaussian}) {
        for (std::size_t L = 0; L <= 9; ++L) {
            const auto w = build_weight_matrix(kind, L);
            double s = 0;
            for (double v : w.weights) {
                s += v;
                CHECK(v > 0.0);
            }
            CHECK(std::abs(s - 1.0) <= 1e-9);
            if (kind == WeightKind::gaussian) CHECK(w.sigma == doctest::Approx(double(L) / 3.0));
        }
        CHECK(build_weight_matrix(kind, 0).weights == std::vector<double>{1.0});
    }
}

TEST_CASE("augmented gradient reductions") {
    const Tensor x = testing::random_tensor(kShape, 4);
    Model full = zoo(modelzoo::ArchFamily::full_3d);
    CHECK(augmented_gradient(full, x, Label{2}, build_weight_matrix(WeightKind::gaussian, 0), {}) ==
          input_gradient(full, x, Label{2}));
    Model early = zoo(modelzoo::ArchFamily::early_pool);
    for (auto kind : {WeightKind::uniform, WeightKind::linear, WeightKind::gaussian}) {
        const Tensor g = augmented_gradient(early, x, Label{2}, build_weight_matrix(kind, 7), {ShiftKind::adjacent, 0});
        CHECK(max_abs_diff(g, input_gradient(early, x, Label{2})) < 1e-9);
    }
    CHECK_THROWS_AS(augmented_gradient(full, x, Label{2}, build_weight_matrix(WeightKind::uniform, 8), {}), RangeError);
}

TEST_CASE("augmented gradient is the gradient of the weighted loss") {
    const Tensor x = testing::random_tensor(kShape, 6);
    const Label y{4};
    Model m = zoo(modelzoo::ArchFamily::late_temporal, 12);
    const auto W = build_weight_matrix(WeightKind::linear, 2);
    for (auto kind : {ShiftKind::adjacent, ShiftKind::remote, ShiftKind::random}) {
        const ShiftStrategy st{kind, 9};
        const Tensor g = augmented_gradient(m, x, y, W, st);
        std::mt19937_64 rng(2);
        for (int k = 0; k < 8; ++k) {
            const std::size_t e = rng() % x.size();
            Tensor probe = x;
            auto surrogate = [&](double v) {
                probe[e] = v;
                double s = 0;
                for (long i = -2; i <= 2; ++i) s += W.at(i) * loss_at(m, translation(st, i, 8).apply(probe), y);
                return s;
            };
            CHECK(gradients_agree(g[e], central_difference(surrogate, x[e], 1e-6)));
        }
    }
}

TEST_CASE("project_ball") {
    const Tensor clean = testing::random_tensor(kShape, 1, 0.2, 0.8);
    CHECK(project_ball(clean, clean, 0.1) == clean);
    CHECK(project_ball(Tensor({1}, {0.9}), Tensor({1}, {0.5}), 0.1)[0] == doctest::Approx(0.6));
    CHECK(project_ball(Tensor({1}, {-0.2}), Tensor({1}, {0.05}), 0.1)[0] == 0.0);
    CHECK(project_ball(Tensor({1}, {1.3}), Tensor({1}, {0.97}), 0.1)[0] == 1.0);
    CHECK_THROWS_AS(project_ball(Tensor({2}), Tensor({1}), 0.1), InputError);
}

TEST_CASE("tt_attack reductions and invariants") {
    Model m = zoo(modelzoo::ArchFamily::full_3d);
    const VideoClip clip(testing::random_tensor(kShape, 2));
    const Label y{3};

    SUBCASE("eps = 0 leaves the clip unchanged") {
        AttackConfig cfg;
        cfg.epsilon = 0.0;
        const auto r = tt_attack(m, clip, y, cfg);
        CHECK(r.adversarial.tensor() == clip.tensor());
        CHECK(r.perturbation.max_abs() == 0.0);
    }
    SUBCASE("FGSM and BIM match the reference loop bit for bit") {
        for (std::size_t iters : {1u, 10u}) {
            AttackConfig cfg;
            cfg.shift_length = 0;
            cfg.iterations = iters;
            const auto r = tt_attack(m, clip, y, cfg);
            CHECK(r.adversarial.tensor() == reference_bim(m, clip.tensor(), y, cfg.epsilon, iters));
            CHECK(r.loss_trace.size() == iters + 1);
            CHECK(r.label == y);
        }
    }
    SUBCASE("one iteration is a single augmented sign step") {
        AttackConfig cfg;
        cfg.iterations = 1;
        cfg.shift_length = 3;
        const auto r = tt_attack(m, clip, y, cfg);
        const Tensor g = augmented_gradient(m, clip.tensor(), y, build_weight_matrix(cfg.weights, 3), cfg.strategy);
        Tensor step = clip.tensor();
        for (std::size_t i = 0; i < step.size(); ++i) step[i] += cfg.epsilon * (g[i] > 0 ? 1.0 : g[i] < 0 ? -1.0 : 0.0);
        CHECK(r.adversarial.tensor() == project_ball(step, clip.tensor(), cfg.epsilon));
    }
    SUBCASE("ball invariant across variants") {
        for (int variant = 0; variant < 4; ++variant) {
            AttackConfig cfg;
            cfg.iterations = 5;
            cfg.shift_length = 2;
            if (variant == 1) cfg.momentum = 1.0;
            if (variant == 2) cfg.ti_radius = 3;
            if (variant == 3) cfg.sign_step = false;
            const auto r = tt_attack(m, clip, y, cfg);
            CHECK(r.perturbation.max_abs() <= cfg.epsilon + 1e-9);
            for (double v : r.adversarial.tensor().values()) REQUIRE((v >= 0.0 && v <= 1.0));
            CHECK(max_abs_diff(r.perturbation, r.adversarial.tensor() - clip.tensor()) == 0.0);
        }
    }
    SUBCASE("BIM raises the white-box loss") {
        AttackConfig cfg;
        cfg.shift_length = 0;
        const auto r = tt_attack(m, clip, y, cfg);
        CHECK(r.loss_trace.back() > r.loss_trace.front());
    }
}

TEST_CASE("TT-BIM equals BIM on early-pool") {
    Model m = zoo(modelzoo::ArchFamily::early_pool);
    const VideoClip clip(testing::random_tensor(kShape, 5));
    AttackConfig bim;
    bim.shift_length = 0;
    AttackConfig tt;
    const auto a = tt_attack(m, clip, Label{1}, bim);
    const auto b = tt_attack(m, clip, Label{1}, tt);
    CHECK(max_abs_diff(a.adversarial.tensor(), b.adversarial.tensor()) <= 1e-9);
}

TEST_CASE("spatial smoothing") {
    Tensor ones(kShape, 1.0);
    const Tensor s = smooth_spatial(ones, 2);
    // interior pixels see the whole normalized kernel
    CHECK(s[(3 * 16 + 8) * 16 + 8] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s[0] < 1.0);
    CHECK(smooth_spatial(ones, 0) == ones);
    Tensor impulse(kShape);
    impulse[(2 * 16 + 8) * 16 + 8] = 1.0;
    const Tensor k = smooth_spatial(impulse, 3);
    double total = 0;
    for (double v : k.values()) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(k[(2 * 16 + 8) * 16 + 9] == k[(2 * 16 + 9) * 16 + 8]);
    CHECK(k[(3 * 16 + 8) * 16 + 8] == 0.0);
}

TEST_CASE("attack config") {
    AttackConfig cfg;
    CHECK(cfg.step_size() == doctest::Approx(1.6 / 255));
    CHECK(cfg.label() == "TT-BIM(10)");
    cfg.shift_length = 0;
    cfg.iterations = 1;
    CHECK(cfg.label() == "FGSM");
    cfg.momentum = 1.0;
    cfg.iterations = 10;
    CHECK(cfg.label() == "MI(10)");
    cfg.shift_length = 7;
    CHECK(cfg.label() == "MI+TT(10)");
    cfg.strategy.kind = ShiftKind::random;
    cfg.ti_radius = 3;
    CHECK(attack_config_from_json(to_json(cfg)) == cfg);
    CHECK_THROWS_AS(cfg.validate(7), SpecError);
    AttackConfig bad;
    bad.iterations = 0;
    CHECK_THROWS_AS(bad.validate(16), SpecError);
    bad = {};
    bad.epsilon = -1;
    CHECK_THROWS_AS(bad.validate(16), SpecError);
}

}  // TEST_SUITE
