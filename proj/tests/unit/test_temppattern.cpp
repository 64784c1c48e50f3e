#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support.hpp"
#include "ttlab/errors.hpp"
#include "ttlab/gradcore/ops.hpp"
#include "ttlab/modelzoo/arch.hpp"
#include "ttlab/temppattern/importance.hpp"

using namespace ttlab;
using namespace ttlab::temppattern;
using L = LayerSpec;

namespace {

// Pearson correlation of two rank vectors, written out longhand.
double pearson(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    const double n = double(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += double(a[i]);
        mb += double(b[i]);
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (double(a[i]) - ma) * (double(b[i]) - mb);
        saa += (double(a[i]) - ma) * (double(a[i]) - ma);
        sbb += (double(b[i]) - mb) * (double(b[i]) - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// conv over time that only looks at the next frame, so frame 0 never counts.
Model skips_first_frame(const Shape& shape) {
    Model m(shape, {L::conv3d(3, 1, 1, 1), L::global_avg_pool(), L::affine(2)}, 1);
    testing::param(m, 0, 0) = Tensor({3, 1, 1, 1, 1}, {0.0, 0.0, 1.5});
    return m;
}

const Shape kShape{6, 4, 4, 1};

}  // namespace

TEST_SUITE("temppattern") {

TEST_CASE("spearman reference cases") {
    CHECK(spearman_rho(std::vector<double>{3, 1, 2}, std::vector<double>{3, 2, 1}) == doctest::Approx(0.5).epsilon(1e-12));
    const std::vector<double> p{0.4, -1.0, 2.5, 0.1, 7.0};
    CHECK(spearman_rho(p, p) == 1.0);
    std::vector<double> rev(p.size());
    std::transform(p.begin(), p.end(), rev.begin(), [](double v) { return -v; });
    CHECK(spearman_rho(p, rev) == -1.0);
    CHECK_THROWS_AS(spearman_rho(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), InputError);
    CHECK_THROWS_AS(spearman_rho(std::vector<double>{1}, std::vector<double>{1}), InputError);
    ImportanceProfile a{"m", "clip-a", Method::zeropad, {1, 2}}, b{"m", "clip-b", Method::zeropad, {1, 2}};
    CHECK_THROWS_AS(spearman_rho(a, b), InputError);
}

TEST_CASE("ranks are descending with ties to the lower frame") {
    CHECK(descending_ranks({3, 1, 2}) == std::vector<std::size_t>{1, 3, 2});
    CHECK(descending_ranks({2, 5, 2, 5}) == std::vector<std::size_t>{3, 1, 4, 2});
}

TEST_CASE("spearman equals rank Pearson on all permutations of five") {
    std::vector<double> base{1, 2, 3, 4, 5};
    std::vector<double> perm = base;
    int count = 0;
    do {
        const double rho = spearman_rho(base, perm);
        CHECK(rho == pearson(descending_ranks(base), descending_ranks(perm)));
        CHECK(rho == spearman_rho(perm, base));
        CHECK(rho >= -1.0);
        CHECK(rho <= 1.0);
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(count == 120);
}

TEST_CASE("monotone reparameterization keeps rho") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 30; ++t) {
        const Tensor a = testing::random_tensor({9}, 10 + t, -3, 3), b = testing::random_tensor({9}, 50 + t, -3, 3);
        std::vector<double> pa(a.values().begin(), a.values().end()), pb(b.values().begin(), b.values().end());
        std::vector<double> fa(pa.size());
        std::transform(pa.begin(), pa.end(), fa.begin(), [](double v) { return std::exp(2 * v) + 5; });
        CHECK(spearman_rho(fa, pb) == spearman_rho(pa, pb));
    }
}

TEST_CASE("zero padding") {
    const Tensor x = testing::random_tensor(kShape, 3);
    Model m = skips_first_frame(kShape);
    const auto p = importance_zero_pad(m, VideoClip(x), Label{1});
    REQUIRE(p.p.size() == 6);
    CHECK(p.p[0] == 0.0);
    CHECK(p.p[3] != 0.0);

    Tensor z = x;
    std::fill_n(z.data().begin() + 2 * 16, 16, 0.0);
    Model any(kShape, {L::conv3d(3, 3, 3, 2), L::relu(), L::flatten(), L::affine(3)}, 4);
    CHECK(importance_zero_pad(any, VideoClip(z), Label{0}).p[2] == 0.0);
}

TEST_CASE("two-frame toy against direct evaluation") {
    const Shape s{2, 3, 3, 1};
    Model m(s, {L::flatten(), L::affine(3)}, 9);
    const Tensor x = testing::random_tensor(s, 2);
    const Label y{2};
    Model probe = m;
    const double base = loss_at(probe, x, y);
    Tensor f0 = x, f1 = x;
    std::fill_n(f0.data().begin(), 9, 0.0);
    std::fill_n(f1.data().begin() + 9, 9, 0.0);
    const auto zp = importance_zero_pad(m, VideoClip(x), y);
    CHECK(zp.p[0] == loss_at(probe, f0, y) - base);
    CHECK(zp.p[1] == loss_at(probe, f1, y) - base);
    // with two frames each frame is replaced by the other
    Tensor m0 = x, m1 = x;
    std::copy_n(x.data().begin() + 9, 9, m0.data().begin());
    std::copy_n(x.data().begin(), 9, m1.data().begin() + 9);
    const auto mp = importance_mean_pad(m, VideoClip(x), y);
    CHECK(mp.p[0] == loss_at(probe, m0, y) - base);
    CHECK(mp.p[1] == loss_at(probe, m1, y) - base);
}

TEST_CASE("mean padding") {
    Model m(kShape, {L::conv3d(3, 3, 3, 2), L::relu(), L::flatten(), L::affine(3)}, 4);
    const Tensor frame = testing::random_tensor({1, 4, 4, 1}, 8);
    Tensor still(kShape);
    for (std::size_t t = 0; t < 6; ++t) std::copy_n(frame.data().begin(), 16, still.data().begin() + long(t * 16));
    for (double v : importance_mean_pad(m, VideoClip(still), Label{1}).p) CHECK(v == 0.0);

    Tensor x = testing::random_tensor(kShape, 9, 0.1, 0.5);
    for (std::size_t e = 0; e < 16; ++e) x[3 * 16 + e] = 0.5 * (x[2 * 16 + e] + x[4 * 16 + e]);
    const auto p = importance_mean_pad(m, VideoClip(x), Label{1});
    CHECK(p.p[3] == 0.0);
    CHECK(p.p[1] != 0.0);
}

TEST_CASE("grad-cam on a one-channel toy") {
    const Shape s{4, 3, 3, 1};
    Model m(s, {L::conv3d(1, 1, 1, 1), L::relu(), L::global_avg_pool(), L::affine(2)}, 2);
    testing::param(m, 0, 0) = Tensor({1, 1, 1, 1, 1}, {2.0});
    testing::param(m, 0, 1) = Tensor({1}, {-0.6});
    testing::param(m, 3, 0) = Tensor({2, 1}, {0.7, -1.3});
    const Tensor x = testing::random_tensor(s, 4);
    const auto p = importance_gradcam(m, VideoClip(x), Label{0});

    // Target is the relu output A = relu(2x - 0.6), so d logit_0 / dA is
    // 0.7 / 36 at every position.
    const double w = 0.7 / 36.0;
    for (std::size_t t = 0; t < 4; ++t) {
        double acc = 0;
        for (std::size_t e = 0; e < 9; ++e) acc += std::max(w * std::max(2.0 * x[t * 9 + e] - 0.6, 0.0), 0.0);
        CHECK(p.p[t] == doctest::Approx(acc / 9.0).epsilon(1e-13));
    }
    // negative class weight: the ReLU clips everything
    for (double v : importance_gradcam(m, VideoClip(x), Label{1}).p) CHECK(v == 0.0);
}

TEST_CASE("grad-cam symmetry and errors") {
    Model m(kShape, {L::conv3d(1, 3, 3, 2), L::relu(), L::global_avg_pool(), L::affine(2)}, 6);
    const Tensor frame = testing::random_tensor({1, 4, 4, 1}, 3);
    Tensor still(kShape);
    for (std::size_t t = 0; t < 6; ++t) std::copy_n(frame.data().begin(), 16, still.data().begin() + long(t * 16));
    const auto p = importance_gradcam(m, VideoClip(still), Label{0});
    for (double v : p.p) CHECK(v == p.p[0]);

    Model flat(kShape, {L::flatten(), L::affine(2)}, 1);
    CHECK_THROWS_AS(importance_gradcam(flat, VideoClip(still), Label{0}), SpecError);

    Model zoo = modelzoo::build_model(modelzoo::make_arch(modelzoo::ArchFamily::full_3d, {8, 16, 16, 1}, 8, 1));
    const auto z = importance_gradcam(zoo, VideoClip(testing::random_tensor({8, 16, 16, 1}, 1)), Label{2});
    CHECK(z.p.size() == 8);
    for (double v : z.p) CHECK((std::isfinite(v) && v >= 0.0));
}

TEST_CASE("linear resampling") {
    CHECK(resample_linear({1, 2, 3}, 3) == std::vector<double>{1, 2, 3});
    CHECK(resample_linear({4}, 5) == std::vector<double>(5, 4.0));
    const auto up = resample_linear({0, 1}, 4);
    CHECK(up == std::vector<double>{0.0, 0.25, 0.75, 1.0});
    CHECK_THROWS_AS(resample_linear({}, 3), InputError);
}

TEST_CASE("importance never mutates the clip or the model") {
    Model m(kShape, {L::conv3d(3, 3, 3, 2), L::relu(), L::flatten(), L::affine(3)}, 4);
    const VideoClip clip(testing::random_tensor(kShape, 1));
    const VideoClip copy = clip;
    const auto params = m.parameters();
    for (auto method : {Method::gradcam, Method::zeropad, Method::meanpad}) {
        importance(method, m, clip, Label{2});
        CHECK(clip.tensor() == copy.tensor());
        CHECK(m.parameters() == params);
        CHECK_FALSE(m.has_cache());
    }
}

TEST_CASE("correlation matrices") {
    Model a(kShape, {L::conv3d(3, 3, 3, 2), L::relu(), L::flatten(), L::affine(2)}, 4);
    Model b(kShape, {L::conv3d(3, 3, 3, 2), L::relu(), L::flatten(), L::affine(2)}, 5);
    std::vector<synthvid::LabeledClip> clips;
    for (int i = 0; i < 12; ++i) {
        VideoClip c(testing::random_tensor(kShape, 100 + i));
        Model pa = a;
        clips.push_back({c, argmax(pa.forward(c.tensor())), "c" + std::to_string(i), synthvid::Split::eval});
    }
    std::vector<const synthvid::LabeledClip*> ptrs;
    for (auto& c : clips) ptrs.push_back(&c);

    const auto one = model_correlation({{"a", &a}}, ptrs, Method::zeropad);
    CHECK(one.rho == std::vector<std::vector<double>>{{1.0}});
    CHECK(one.clip_count == 12);

    const auto dup = model_correlation({{"a", &a}, {"a2", &a}}, ptrs, Method::meanpad);
    CHECK(dup.rho[0][1] == 1.0);

    const auto ab = model_correlation({{"a", &a}, {"b", &b}}, ptrs, Method::zeropad);
    CHECK(ab.rho[0][0] == 1.0);
    CHECK(ab.rho[1][1] == 1.0);
    CHECK(ab.rho[0][1] == ab.rho[1][0]);
    CHECK(ab.clip_count <= 12);
    const auto ab2 = model_correlation({{"a", &a}, {"b", &b}}, ptrs, Method::zeropad, 3);
    CHECK(ab2.rho == ab.rho);
    CHECK(ab.to_csv().substr(0, 10) == "model,a,b\n");
    CHECK(to_json(ab)["method"] == "zeropad");

    std::vector<synthvid::LabeledClip> wrong = clips;
    for (auto& c : wrong) c.label = Label{1 - c.label.index};
    std::vector<const synthvid::LabeledClip*> wp;
    for (auto& c : wrong) wp.push_back(&c);
    CHECK_THROWS_AS(model_correlation({{"a", &a}}, wp, Method::zeropad), ProtocolError);
}

}  // TEST_SUITE
