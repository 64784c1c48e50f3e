#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ttlab/gradcore/graph.hpp"
#include "ttlab/gradcore/video.hpp"

namespace ttlab {

// Softmax cross-entropy with log-sum-exp stabilization: -log softmax(logits)[y].
double cross_entropy(const Tensor& logits, Label y);
// d cross_entropy / d logits = softmax(logits) - onehot(y).
Tensor cross_entropy_grad(const Tensor& logits, Label y);

// Argmax of the logits, lowest index on ties.
Label argmax(const Tensor& logits);

// Loss of the model on one input (runs forward).
double loss_at(Model& model, const Tensor& input, Label y);

// Exact gradient of cross_entropy(model(input), y) w.r.t. every input element.
// Throws NumericFault if any element is non-finite.
Tensor input_gradient(Model& model, const Tensor& input, Label y);

struct BatchItem {
    const Tensor* input;
    Label label;
};

struct ParamGradient {
    std::vector<Tensor> grads;  // aligned with model.parameters()
    double mean_loss = 0.0;
};

// Mean-over-batch gradient of the loss w.r.t. every parameter.
ParamGradient param_gradient(Model& model, std::span<const BatchItem> batch);

// Addresses a single scalar the loss depends on: an input element or a
// parameter element.
struct Coordinate {
    enum class Target { input, parameter };
    Target target = Target::input;
    std::size_t param_index = 0;
    std::size_t element = 0;

    static Coordinate input(std::size_t element) { return {Target::input, 0, element}; }
    static Coordinate parameter(std::size_t index, std::size_t element) { return {Target::parameter, index, element}; }
};

// (f(x + step) - f(x - step)) / (2 step)
double central_difference(const std::function<double(double)>& f, double x, double step);

// Central difference of the loss along one coordinate. The model's
// parameters are restored before returning.
double finite_diff_oracle(Model& model, const Tensor& input, Label y, Coordinate coord, double step);

// |a - b| / max(|a|, |b|); zero when both are zero.
double relative_error(double a, double b);

// Gradient-check acceptance: relative error below `rel_tol`, or absolute
// difference at most `abs_floor` for values near zero.
bool gradients_agree(double analytic, double numeric, double rel_tol = 1e-6, double abs_floor = 1e-8);

}  // namespace ttlab
