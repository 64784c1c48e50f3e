#include "ttlab/xferbench/verify.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "ttlab/gradcore/ops.hpp"
#include "ttlab/modelzoo/arch.hpp"
#include "ttlab/ttattack/attack.hpp"

namespace ttlab::xferbench {

namespace {

constexpr double kStep = 1e-5;
// Seven shifted copies put seven times as many kinks near each coordinate.
constexpr double kSurrogateStep = 1e-6;

Tensor random_clip(const Shape& shape, std::mt19937_64& rng) {
    Tensor x(shape);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (auto& v : x.data()) v = u(rng);
    return x;
}

std::string worst(double rel, std::size_t bad, std::size_t total) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu/%zu coordinates off, worst rel err %.3g", bad, total, rel);
    return buf;
}

CheckResult gradient_check(modelzoo::ArchFamily fam, std::uint64_t seed, std::size_t coords) {
    const Shape shape{8, 16, 16, 1};
    Model m = modelzoo::build_model(modelzoo::make_arch(fam, shape, 8, seed));
    std::mt19937_64 rng(seed);
    const Tensor x = random_clip(shape, rng);
    const Label y{static_cast<int>(seed % 8)};
    const Tensor g = input_gradient(m, x, y);
    auto pg = param_gradient(m, std::span<const BatchItem>(std::vector<BatchItem>{{&x, y}}));

    std::size_t bad = 0, total = 0;
    double max_rel = 0.0;
    auto check = [&](double analytic, Coordinate c) {
        const double numeric = finite_diff_oracle(m, x, y, c, kStep);
        ++total;
        if (!gradients_agree(analytic, numeric)) {
            ++bad;
            max_rel = std::max(max_rel, relative_error(analytic, numeric));
        }
    };
    for (std::size_t k = 0; k < coords; ++k) {
        const std::size_t e = std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng);
        check(g[e], Coordinate::input(e));
        const std::size_t p = std::uniform_int_distribution<std::size_t>(0, m.parameters().size() - 1)(rng);
        const std::size_t pe = std::uniform_int_distribution<std::size_t>(0, m.parameters()[p].value.size() - 1)(rng);
        check(pg.grads[p][pe], Coordinate::parameter(p, pe));
    }
    return {"gradient " + std::string(modelzoo::to_string(fam)), bad == 0, worst(max_rel, bad, total)};
}

CheckResult shift_check(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Tensor x = random_clip({8, 4, 4, 2}, rng);
    const long T = 8;
    std::size_t bad = 0, total = 0;
    for (long i = -(T - 1); i < T; ++i) {
        ++total;
        if (!(ttattack::temporal_shift(ttattack::temporal_shift(x, i), -i) == x)) ++bad;
        for (auto kind : {ttattack::ShiftKind::adjacent, ttattack::ShiftKind::remote, ttattack::ShiftKind::random}) {
            const auto p = ttattack::translation({kind, seed}, i, static_cast<std::size_t>(T));
            ++total;
            if (!(p.inverse().apply(p.apply(x)) == x)) ++bad;
        }
    }
    if (!(ttattack::temporal_shift(x, 0) == x)) ++bad;
    return {"shift round trip", bad == 0, std::to_string(bad) + "/" + std::to_string(total) + " failures"};
}

CheckResult weight_check() {
    std::size_t bad = 0;
    for (auto kind : {ttattack::WeightKind::uniform, ttattack::WeightKind::linear, ttattack::WeightKind::gaussian}) {
        for (std::size_t L = 0; L <= 9; ++L) {
            const auto w = ttattack::build_weight_matrix(kind, L);
            double sum = 0.0;
            for (double v : w.weights) {
                sum += v;
                if (!(v > 0.0)) ++bad;
            }
            if (std::abs(sum - 1.0) > 1e-9) ++bad;
            for (long i = 1; i <= static_cast<long>(L); ++i) {
                if (w.at(i) != w.at(-i)) ++bad;
            }
        }
    }
    const auto lin = ttattack::build_weight_matrix(ttattack::WeightKind::linear, 1);
    if (std::abs(lin.at(-1) - 2.0 / 7) > 1e-12 || std::abs(lin.at(0) - 3.0 / 7) > 1e-12) ++bad;
    return {"weight matrices", bad == 0, std::to_string(bad) + " violations"};
}

CheckResult augmented_check(std::uint64_t seed, std::size_t coords) {
    const Shape shape{8, 16, 16, 1};
    Model m = modelzoo::build_model(modelzoo::make_arch(modelzoo::ArchFamily::full_3d, shape, 8, seed));
    std::mt19937_64 rng(seed + 1);
    const Tensor x = random_clip(shape, rng);
    const Label y{1};
    const auto W = ttattack::build_weight_matrix(ttattack::WeightKind::gaussian, 3);
    std::size_t bad = 0, total = 0;
    double max_rel = 0.0;
    for (auto kind : {ttattack::ShiftKind::adjacent, ttattack::ShiftKind::remote, ttattack::ShiftKind::random}) {
        const ttattack::ShiftStrategy st{kind, seed};
        const Tensor g = ttattack::augmented_gradient(m, x, y, W, st);
        for (std::size_t k = 0; k < coords; ++k) {
            const std::size_t e = std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng);
            Tensor probe = x;
            auto surrogate = [&](double v) {
                probe[e] = v;
                double s = 0.0;
                for (long i = -3; i <= 3; ++i) s += W.at(i) * loss_at(m, ttattack::translation(st, i, 8).apply(probe), y);
                return s;
            };
            const double numeric = central_difference(surrogate, x[e], kSurrogateStep);
            ++total;
            if (!gradients_agree(g[e], numeric)) {
                ++bad;
                max_rel = std::max(max_rel, relative_error(g[e], numeric));
            }
        }
    }
    return {"augmented gradient", bad == 0, worst(max_rel, bad, total)};
}

}  // namespace

std::vector<CheckResult> run_verify(std::uint64_t seed, std::size_t coords) {
    std::vector<CheckResult> out;
    for (auto fam : {modelzoo::ArchFamily::early_pool, modelzoo::ArchFamily::full_3d, modelzoo::ArchFamily::late_temporal})
        out.push_back(gradient_check(fam, seed, coords));
    out.push_back(shift_check(seed));
    out.push_back(weight_check());
    out.push_back(augmented_check(seed, coords));
    return out;
}

}  // namespace ttlab::xferbench
