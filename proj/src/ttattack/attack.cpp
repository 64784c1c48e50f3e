#include "ttlab/ttattack/attack.hpp"

#include <algorithm>
#include <cmath>

#include "ttlab/errors.hpp"
#include "ttlab/gradcore/ops.hpp"

namespace ttlab::ttattack {

void AttackConfig::validate(std::size_t frames) const {
    if (!(epsilon >= 0.0) || epsilon > 1.0) throw SpecError("epsilon must lie in [0, 1]");
    if (iterations < 1) throw SpecError("attack needs at least one iteration");
    if (shift_length >= frames) {
        throw SpecError("shift length " + std::to_string(shift_length) + " must be below the frame count " +
                        std::to_string(frames));
    }
    if (!(momentum >= 0.0)) throw SpecError("momentum decay must be non-negative");
}

std::string AttackConfig::label() const {
    if (!name.empty()) return name;
    // FGSM, TT-BIM(10), MI(10), MI+TT(10), TI+MI+TT(10), ...
    std::string s = ti_radius > 0 ? "TI+" : "";
    if (momentum > 0.0) {
        s += shift_length > 0 ? "MI+TT" : "MI";
    } else {
        if (shift_length > 0) s += "TT-";
        s += iterations == 1 ? "FGSM" : "BIM";
    }
    if (iterations == 1 && momentum == 0.0) return s;
    return s + "(" + std::to_string(iterations) + ")";
}

nlohmann::json to_json(const AttackConfig& c) {
    return {{"name", c.name},
            {"epsilon", c.epsilon},
            {"iterations", c.iterations},
            {"shift_length", c.shift_length},
            {"weights", to_string(c.weights)},
            {"strategy", to_string(c.strategy.kind)},
            {"strategy_seed", c.strategy.seed},
            {"momentum", c.momentum},
            {"ti_radius", c.ti_radius},
            {"sign_step", c.sign_step}};
}

AttackConfig attack_config_from_json(const nlohmann::json& j) {
    AttackConfig c;
    try {
        c.name = j.value("name", c.name);
        c.epsilon = j.value("epsilon", c.epsilon);
        c.iterations = j.value("iterations", c.iterations);
        c.shift_length = j.value("shift_length", c.shift_length);
        c.weights = weight_kind_from_string(j.value("weights", std::string(to_string(c.weights))));
        c.strategy.kind = shift_kind_from_string(j.value("strategy", std::string(to_string(c.strategy.kind))));
        c.strategy.seed = j.value("strategy_seed", c.strategy.seed);
        c.momentum = j.value("momentum", c.momentum);
        c.ti_radius = j.value("ti_radius", c.ti_radius);
        c.sign_step = j.value("sign_step", c.sign_step);
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("malformed attack config: ") + e.what());
    }
    return c;
}

Tensor augmented_gradient(Model& model, const Tensor& input, Label y, const WeightMatrix& weights,
                          const ShiftStrategy& strategy) {
    require_video_shape(input.shape());
    const std::size_t T = input.dim(0);
    const long L = static_cast<long>(weights.shift_length);
    if (weights.weights.size() != weights.shift_length * 2 + 1) throw InputError("malformed weight matrix");
    if (weights.shift_length >= T) throw RangeError("shift length must be below the frame count");
    Tensor total(input.shape());
    for (long i = -L; i <= L; ++i) {
        const FramePermutation p = translation(strategy, i, T);
        const Tensor g = input_gradient(model, p.apply(input), y);
        axpy(weights.at(i), p.inverse().apply(g), total);
    }
    return total;
}

Tensor project_ball(const Tensor& x_adv, const Tensor& x_clean, double epsilon) {
    if (x_adv.shape() != x_clean.shape()) throw InputError("project_ball shape mismatch");
    Tensor out(x_adv.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double lo = std::max(x_clean[i] - epsilon, 0.0);
        const double hi = std::min(x_clean[i] + epsilon, 1.0);
        out[i] = std::clamp(x_adv[i], lo, hi);
    }
    return out;
}

Tensor smooth_spatial(const Tensor& g, std::size_t radius) {
    if (radius == 0) return g;
    require_video_shape(g.shape());
    const std::size_t T = g.dim(0), H = g.dim(1), W = g.dim(2), C = g.dim(3);
    const long r = static_cast<long>(radius);
    const double sigma = static_cast<double>(radius) / std::sqrt(3.0);
    const std::size_t side = 2 * radius + 1;
    std::vector<double> kernel(side * side);
    double total = 0.0;
    for (long dy = -r; dy <= r; ++dy) {
        for (long dx = -r; dx <= r; ++dx) {
            const double v = std::exp(-static_cast<double>(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            kernel[static_cast<std::size_t>((dy + r) * static_cast<long>(side) + dx + r)] = v;
            total += v;
        }
    }
    for (double& v : kernel) v /= total;

    Tensor out(g.shape());
    const long Hl = static_cast<long>(H), Wl = static_cast<long>(W);
    for (std::size_t t = 0; t < T; ++t)
        for (long y = 0; y < Hl; ++y)
            for (long x = 0; x < Wl; ++x)
                for (std::size_t c = 0; c < C; ++c) {
                    double acc = 0.0;
                    for (long dy = -r; dy <= r; ++dy) {
                        const long yy = y + dy;
                        if (yy < 0 || yy >= Hl) continue;
                        for (long dx = -r; dx <= r; ++dx) {
                            const long xx = x + dx;
                            if (xx < 0 || xx >= Wl) continue;
                            acc += kernel[static_cast<std::size_t>((dy + r) * static_cast<long>(side) + dx + r)] *
                                   g[((t * H + static_cast<std::size_t>(yy)) * W + static_cast<std::size_t>(xx)) * C + c];
                        }
                    }
                    out[((t * H + static_cast<std::size_t>(y)) * W + static_cast<std::size_t>(x)) * C + c] = acc;
                }
    return out;
}

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

AdversarialResult tt_attack(Model& model, const VideoClip& clip, Label y, const AttackConfig& cfg) {
    cfg.validate(clip.frames());
    const WeightMatrix weights = build_weight_matrix(cfg.weights, cfg.shift_length);
    const double alpha = cfg.step_size();
    const Tensor& x = clip.tensor();

    AdversarialResult result;
    result.config = cfg;
    result.label = y;
    Tensor current = x;
    Tensor velocity(x.shape());
    std::size_t k = 0;
    try {
        result.loss_trace.push_back(loss_at(model, current, y));
        for (k = 0; k < cfg.iterations; ++k) {
            Tensor g = augmented_gradient(model, current, y, weights, cfg.strategy);
            if (cfg.ti_radius > 0) g = smooth_spatial(g, cfg.ti_radius);
            if (cfg.momentum > 0.0) {
                double l1 = 0.0;
                for (double v : g.data()) l1 += std::abs(v);
                for (std::size_t i = 0; i < velocity.size(); ++i) {
                    velocity[i] = cfg.momentum * velocity[i] + (l1 > 0.0 ? g[i] / l1 : 0.0);
                }
                g = velocity;
            }
            for (std::size_t i = 0; i < current.size(); ++i) {
                current[i] += alpha * (cfg.sign_step ? sign(g[i]) : g[i]);
            }
            current = project_ball(current, x, cfg.epsilon);
            result.loss_trace.push_back(loss_at(model, current, y));
        }
    } catch (const NumericFault& e) {
        throw NumericFault(std::string(e.what()) + " during attack iteration " + std::to_string(k));
    }
    result.loss = result.loss_trace.back();
    result.perturbation = current - x;
    result.clean = clip;
    result.adversarial = VideoClip(std::move(current));
    return result;
}

}  // namespace ttlab::ttattack
