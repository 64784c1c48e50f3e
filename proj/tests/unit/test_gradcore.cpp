#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support.hpp"
#include "ttlab/errors.hpp"
#include "ttlab/gradcore/ops.hpp"
#include "ttlab/modelzoo/arch.hpp"
#include "ttlab/modelzoo/train.hpp"

using namespace ttlab;
using testing::param;
using testing::random_tensor;
using L = LayerSpec;

namespace {

// Straight-line reference for conv3d (same zero padding, kernel t,h,w,cin,cout).
Tensor ref_conv(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t kt, std::size_t kh, std::size_t kw,
                std::size_t cout) {
    const std::size_t T = x.shape()[0], H = x.shape()[1], W = x.shape()[2], C = x.shape()[3];
    Tensor out({T, H, W, cout});
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t v = 0; v < W; ++v)
                for (std::size_t o = 0; o < cout; ++o) {
                    double acc = b[o];
                    for (std::size_t a = 0; a < kt; ++a)
                        for (std::size_t c = 0; c < kh; ++c)
                            for (std::size_t d = 0; d < kw; ++d) {
                                const long tt = long(t + a) - long(kt / 2), hh = long(h + c) - long(kh / 2),
                                           ww = long(v + d) - long(kw / 2);
                                if (tt < 0 || hh < 0 || ww < 0 || tt >= long(T) || hh >= long(H) || ww >= long(W)) continue;
                                for (std::size_t i = 0; i < C; ++i) {
                                    acc += w[(((a * kh + c) * kw + d) * C + i) * cout + o] *
                                           x[((std::size_t(tt) * H + std::size_t(hh)) * W + std::size_t(ww)) * C + i];
                                }
                            }
                    out[((t * H + h) * W + v) * cout + o] = acc;
                }
    return out;
}

}  // namespace

TEST_SUITE("gradcore") {

TEST_CASE("cross entropy reference values") {
    CHECK(cross_entropy(Tensor({2}, {0.0, 0.0}), Label{1}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(std::abs(cross_entropy(Tensor({2}, {1000.0, 0.0}), Label{0})) < 1e-9);
    const double direct = -std::log(std::exp(2.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0)));
    CHECK(std::abs(cross_entropy(Tensor({3}, {1.0, 2.0, 3.0}), Label{1}) - direct) < 1e-14);
    CHECK(std::isfinite(cross_entropy(Tensor({2}, {0.0, 1000.0}), Label{0})));
}

TEST_CASE("cross entropy is covariant under logit permutations") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor z = random_tensor({6}, 100 + trial, -5.0, 5.0);
        std::vector<std::size_t> perm(6);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Tensor zp({6});
        for (std::size_t i = 0; i < 6; ++i) zp[perm[i]] = z[i];
        for (int y = 0; y < 6; ++y) {
            CHECK(cross_entropy(z, Label{y}) == doctest::Approx(cross_entropy(zp, Label{int(perm[y])})).epsilon(1e-14));
        }
    }
}

TEST_CASE("argmax breaks ties to the lowest index") {
    CHECK(argmax(Tensor({2}, {0.1, 0.9})).index == 1);
    CHECK(argmax(Tensor({2}, {0.5, 0.5})).index == 0);
    CHECK(argmax(Tensor({4}, {-1.0, 3.0, 3.0, 2.0})).index == 1);
}

TEST_CASE("zero final affine gives zero logits") {
    Model m({4, 4, 4, 1}, {L::conv3d(3, 3, 3, 2), L::relu(), L::flatten(), L::affine(3)}, 1);
    param(m, 3, 0).fill(0.0);
    const Tensor z = m.forward(Tensor({4, 4, 4, 1}));
    for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("affine on a global average reads the mean pixel") {
    Model m({4, 5, 6, 1}, {L::global_avg_pool(), L::affine(2)}, 1);
    param(m, 1, 0) = Tensor({2, 1}, {1.0, 0.0});
    param(m, 1, 1).fill(0.0);
    const Tensor x = random_tensor({4, 5, 6, 1}, 9);
    const double mean = std::accumulate(x.values().begin(), x.values().end(), 0.0) / double(x.size());
    CHECK(m.forward(x)[0] == doctest::Approx(mean).epsilon(1e-14));
}

TEST_CASE("two-layer model matches a hand-rolled recomputation") {
    const Shape in{4, 5, 5, 2};
    Model m(in, {L::conv3d(3, 3, 3, 3), L::relu(), L::flatten(), L::affine(4)}, 77);
    const Tensor x = random_tensor(in, 5);
    Tensor a = ref_conv(x, param(m, 0, 0), param(m, 0, 1), 3, 3, 3, 3);
    for (auto& v : a.data()) v = std::max(v, 0.0);
    const Tensor& w = param(m, 3, 0);
    const Tensor& b = param(m, 3, 1);
    const Tensor z = m.forward(x);
    for (std::size_t o = 0; o < 4; ++o) {
        double acc = b[o];
        for (std::size_t i = 0; i < a.size(); ++i) acc += w[o * a.size() + i] * a[i];
        CHECK(z[o] == doctest::Approx(acc).epsilon(1e-13));
    }
}

TEST_CASE("forward is bit-for-bit deterministic and leaves the input alone") {
    const Shape in{8, 16, 16, 1};
    Model m = modelzoo::build_model(modelzoo::make_arch(modelzoo::ArchFamily::full_3d, in, 8, 4));
    Model copy = m;
    const Tensor x = random_tensor(in, 11);
    const Tensor before = x;
    CHECK(m.forward(x) == copy.forward(x));
    CHECK(x == before);
    const Tensor g = input_gradient(m, x, Label{2});
    CHECK(x == before);
    CHECK(g.data().data() != x.data().data());
}

TEST_CASE("forward errors") {
    Model m({4, 4, 4, 1}, {L::flatten(), L::affine(2)}, 1);
    CHECK_THROWS_AS(m.forward(Tensor({4, 4, 5, 1})), InputError);
    Tensor bad({4, 4, 4, 1});
    bad[3] = std::nan("");
    CHECK_THROWS_AS(m.forward(bad), NumericFault);
    CHECK_THROWS_AS(Model({4, 4, 4, 1}, {L::conv3d(2, 3, 3, 2), L::flatten(), L::affine(2)}, 1), SpecError);
    CHECK_THROWS_AS(Model({4, 4, 4, 1}, {L::conv3d(3, 3, 3, 2)}, 1), SpecError);
    CHECK_THROWS_AS(Model({4, 4, 4, 1}, {L::avg_pool(3, 1, 1), L::flatten(), L::affine(2)}, 1), SpecError);
    CHECK_THROWS_AS(Model({4, 4, 4, 1}, {L::affine(2)}, 1), SpecError);
}

TEST_CASE("input independent model has zero input gradient") {
    Model m({4, 6, 6, 1}, {L::conv3d(3, 3, 3, 2), L::relu(), L::flatten(), L::affine(3)}, 5);
    param(m, 0, 0).fill(0.0);
    const Tensor g = input_gradient(m, random_tensor({4, 6, 6, 1}, 1), Label{0});
    CHECK(g.max_abs() == 0.0);
}

TEST_CASE("duplicate frames through a temporal average get identical gradients") {
    const Shape in{16, 32, 32, 1};
    Model m = modelzoo::build_model(modelzoo::make_arch(modelzoo::ArchFamily::early_pool, in, 8, 2));
    const Tensor frame = random_tensor({1, 32, 32, 1}, 4);
    Tensor x(in);
    for (std::size_t t = 0; t < 16; ++t) std::copy_n(frame.data().begin(), 1024, x.data().begin() + long(t * 1024));
    const Tensor g = input_gradient(m, x, Label{3});
    for (std::size_t t = 1; t < 16; ++t)
        for (std::size_t e = 0; e < 1024; ++e) REQUIRE(g[t * 1024 + e] == g[e]);
}

TEST_CASE("param gradient is the batch mean") {
    Model m({4, 4, 4, 1}, {L::conv3d(1, 3, 3, 2), L::relu(), L::flatten(), L::affine(3)}, 8);
    const Tensor a = random_tensor({4, 4, 4, 1}, 1), b = random_tensor({4, 4, 4, 1}, 2);
    std::vector<BatchItem> both{{&a, Label{0}}, {&b, Label{2}}};
    const auto g2 = param_gradient(m, both);
    const auto ga = param_gradient(m, std::span(both).first(1));
    const auto gb = param_gradient(m, std::span(both).last(1));
    for (std::size_t p = 0; p < g2.grads.size(); ++p) {
        CHECK(max_abs_diff(g2.grads[p], 0.5 * (ga.grads[p] + gb.grads[p])) < 1e-15);
    }
    CHECK(g2.mean_loss == doctest::Approx(0.5 * (ga.mean_loss + gb.mean_loss)));
}

TEST_CASE("finite differences on scalar toys") {
    auto sq = [](double x) { return x * x; };
    CHECK(std::abs(central_difference(sq, 3.0, 1e-5) - 6.0) <= 1e-8);
    // x^2 has no truncation error at all, so step halving is shown on exp.
    auto e = [](double x) { return std::exp(x); };
    const double exact = std::exp(0.7);
    const double err4 = std::abs(central_difference(e, 0.7, 1e-4) - exact);
    const double err5 = std::abs(central_difference(e, 0.7, 1e-5) - exact);
    CHECK(err5 < err4);
    CHECK(err4 / err5 > 10.0);
}

TEST_CASE("gradients_agree uses a relative test with an absolute floor") {
    CHECK(gradients_agree(1.0, 1.0 + 5e-7));
    CHECK_FALSE(gradients_agree(1.0, 1.0 + 5e-6));
    CHECK(gradients_agree(1e-12, -3e-12));
    CHECK_FALSE(gradients_agree(1e-6, 2e-6));
    CHECK(relative_error(0.0, 0.0) == 0.0);
}

TEST_CASE("zoo gradients match central differences") {
    const Shape in{8, 16, 16, 1};
    for (auto fam : {modelzoo::ArchFamily::early_pool, modelzoo::ArchFamily::full_3d, modelzoo::ArchFamily::late_temporal}) {
        CAPTURE(modelzoo::to_string(fam));
        Model m = modelzoo::build_model(modelzoo::make_arch(fam, in, 8, 21));
        const Tensor x = random_tensor(in, 22);
        const Label y{5};
        const Tensor g = input_gradient(m, x, y);
        std::vector<BatchItem> one{{&x, y}};
        const auto pg = param_gradient(m, one);
        std::mt19937_64 rng(23);
        for (int k = 0; k < 15; ++k) {
            const std::size_t e = rng() % x.size();
            CHECK(gradients_agree(g[e], finite_diff_oracle(m, x, y, Coordinate::input(e), 1e-5)));
            const std::size_t p = rng() % m.parameters().size();
            const std::size_t pe = rng() % m.parameters()[p].value.size();
            CHECK(gradients_agree(pg.grads[p][pe], finite_diff_oracle(m, x, y, Coordinate::parameter(p, pe), 1e-5)));
        }
    }
}

TEST_CASE("finite_diff_oracle restores parameters") {
    Model m({4, 4, 4, 1}, {L::conv3d(3, 3, 3, 2), L::relu(), L::flatten(), L::affine(2)}, 3);
    const auto before = m.parameters();
    finite_diff_oracle(m, random_tensor({4, 4, 4, 1}, 1), Label{1}, Coordinate::parameter(0, 7), 1e-5);
    CHECK(m.parameters() == before);
}

TEST_CASE("tensor helpers") {
    Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(a.reshaped({3, 2}).shape() == Shape{3, 2});
    CHECK_THROWS(a.reshaped({4, 2}));
    CHECK(max_abs_diff(a + a, 2.0 * a) == 0.0);
    Tensor y({2, 3});
    axpy(0.5, a, y);
    CHECK(y[5] == 3.0);
    CHECK_THROWS_AS(VideoClip(Tensor({1, 4, 4, 1})), InputError);
    CHECK_THROWS_AS(VideoClip(Tensor({2, 4, 4, 1}, 1.5)), InputError);
}

}  // TEST_SUITE
