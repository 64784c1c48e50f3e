#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttlab/gradcore/graph.hpp"
#include "ttlab/gradcore/video.hpp"
#include "ttlab/ttattack/shift.hpp"
#include "ttlab/ttattack/weights.hpp"

namespace ttlab::ttattack {

// One attack in the FGSM / BIM / TT / MI / TI family.
//
// shift_length = 0 disables temporal translation, momentum = 0 disables the
// momentum accumulator, ti_radius = 0 disables spatial gradient smoothing.
// With all three off, iterations = 1 is FGSM and iterations > 1 is BIM.
struct AttackConfig {
    std::string name;
    double epsilon = 16.0 / 255.0;
    std::size_t iterations = 10;
    std::size_t shift_length = 7;
    WeightKind weights = WeightKind::gaussian;
    ShiftStrategy strategy;
    double momentum = 0.0;
    std::size_t ti_radius = 0;
    // false steps along the raw combined gradient instead of its sign.
    bool sign_step = true;

    double step_size() const { return epsilon / static_cast<double>(iterations); }
    // Throws SpecError on eps < 0, I < 1, L >= frames, momentum < 0.
    void validate(std::size_t frames) const;

    // Short label such as "TT-BIM(10)" when `name` is empty.
    std::string label() const;

    bool operator==(const AttackConfig&) const = default;
};

nlohmann::json to_json(const AttackConfig& cfg);
AttackConfig attack_config_from_json(const nlohmann::json& j);

struct AdversarialResult {
    VideoClip clean;
    VideoClip adversarial;
    Tensor perturbation;  // adversarial - clean
    Label label{};        // true label of the clean clip
    double loss = 0.0;    // white-box loss at the adversarial clip
    std::vector<double> loss_trace;  // white-box loss at x_0 ... x_I
    AttackConfig config;
};

// sum_i w_i * P_i^{-1}( grad J(f(P_i x), y) ) over i = -L..L, where P_i is
// the strategy's translation for copy i. Terms are added in index order.
Tensor augmented_gradient(Model& model, const Tensor& input, Label y, const WeightMatrix& weights,
                          const ShiftStrategy& strategy);

// Elementwise clamp of x_adv into [x - eps, x + eps] intersected with [0, 1].
Tensor project_ball(const Tensor& x_adv, const Tensor& x_clean, double epsilon);

// Spatial convolution of every frame and channel with a truncated, normalized
// Gaussian kernel of the given radius (sigma = radius / sqrt(3)), zero padded.
Tensor smooth_spatial(const Tensor& g, std::size_t radius);

// Iterates x_{k+1} = clip_{x,eps}(x_k + alpha * step(g_k)) from x_0 = x with
// alpha = eps / I. Throws NumericFault naming the failing iteration.
AdversarialResult tt_attack(Model& model, const VideoClip& clip, Label y, const AttackConfig& cfg);

}  // namespace ttlab::ttattack
