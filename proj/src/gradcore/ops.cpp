#include "ttlab/gradcore/ops.hpp"

#include <algorithm>
#include <cmath>

#include "ttlab/errors.hpp"

namespace ttlab {

namespace {

void check_label(const Tensor& logits, Label y) {
    if (logits.rank() != 1 || logits.size() < 2) {
        throw InputError("logits must be a vector of at least 2 classes, got " + shape_str(logits.shape()));
    }
    if (y.index < 0 || static_cast<std::size_t>(y.index) >= logits.size()) {
        throw InputError("label " + std::to_string(y.index) + " outside [0, " + std::to_string(logits.size()) + ")");
    }
    if (!logits.all_finite()) throw NumericFault("non-finite logits");
}

double log_sum_exp(const Tensor& logits) {
    const double m = *std::max_element(logits.data().begin(), logits.data().end());
    double s = 0.0;
    for (double v : logits.data()) s += std::exp(v - m);
    return m + std::log(s);
}

}  // namespace

double cross_entropy(const Tensor& logits, Label y) {
    check_label(logits, y);
    // Clamp tiny negative rounding residue so the loss stays >= 0.
    return std::max(0.0, log_sum_exp(logits) - logits[static_cast<std::size_t>(y.index)]);
}

Tensor cross_entropy_grad(const Tensor& logits, Label y) {
    check_label(logits, y);
    const double lse = log_sum_exp(logits);
    Tensor g(logits.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::exp(logits[i] - lse);
    g[static_cast<std::size_t>(y.index)] -= 1.0;
    return g;
}

Label argmax(const Tensor& logits) {
    if (logits.empty()) throw InputError("argmax of empty logits");
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) best = i;
    }
    return Label{static_cast<int>(best)};
}

double loss_at(Model& model, const Tensor& input, Label y) { return cross_entropy(model.forward(input), y); }

Tensor input_gradient(Model& model, const Tensor& input, Label y) {
    const Tensor logits = model.forward(input);
    BackwardTrace trace = model.backward(cross_entropy_grad(logits, y), false);
    if (!trace.input_grad.all_finite()) throw NumericFault("non-finite input gradient");
    return std::move(trace.input_grad);
}

ParamGradient param_gradient(Model& model, std::span<const BatchItem> batch) {
    if (batch.empty()) throw InputError("param_gradient needs a nonempty batch");
    ParamGradient out;
    for (const auto& p : model.parameters()) out.grads.emplace_back(p.value.shape());
    for (const BatchItem& item : batch) {
        const Tensor logits = model.forward(*item.input);
        out.mean_loss += cross_entropy(logits, item.label);
        BackwardTrace trace = model.backward(cross_entropy_grad(logits, item.label), true);
        for (std::size_t i = 0; i < out.grads.size(); ++i) axpy(1.0, trace.param_grads[i], out.grads[i]);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (Tensor& g : out.grads) {
        for (double& v : g.data()) v *= inv;
        if (!g.all_finite()) throw NumericFault("non-finite parameter gradient");
    }
    out.mean_loss *= inv;
    return out;
}

double central_difference(const std::function<double(double)>& f, double x, double step) {
    if (!(step > 0.0)) throw InputError("finite-difference step must be positive");
    return (f(x + step) - f(x - step)) / (2.0 * step);
}

double finite_diff_oracle(Model& model, const Tensor& input, Label y, Coordinate coord, double step) {
    if (coord.target == Coordinate::Target::input) {
        if (coord.element >= input.size()) throw InputError("input coordinate out of range");
        Tensor probe = input;
        return central_difference(
            [&](double v) {
                probe[coord.element] = v;
                return loss_at(model, probe, y);
            },
            input[coord.element], step);
    }
    auto& params = model.parameters();
    if (coord.param_index >= params.size() || coord.element >= params[coord.param_index].value.size()) {
        throw InputError("parameter coordinate out of range");
    }
    double& slot = params[coord.param_index].value[coord.element];
    const double saved = slot;
    const double d = central_difference(
        [&](double v) {
            slot = v;
            return loss_at(model, input, y);
        },
        saved, step);
    slot = saved;
    return d;
}

double relative_error(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

bool gradients_agree(double analytic, double numeric, double rel_tol, double abs_floor) {
    return std::abs(analytic - numeric) <= abs_floor || relative_error(analytic, numeric) < rel_tol;
}

}  // namespace ttlab
