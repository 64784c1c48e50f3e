#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ttlab/gradcore/tensor.hpp"

namespace ttlab {

enum class LayerKind { normalize, conv3d, relu, avg_pool, max_pool, global_avg_pool, flatten, affine };

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

// One record of the layer chain.
//
// normalize: fixed elementwise (x - shift) * scale, no parameters.
// conv3d: stride 1, zero "same" padding, odd kernel extents (kt, kh, kw),
//         `units` output channels. Weights are stored kt x kh x kw x Cin x Cout.
// avg_pool, max_pool: non-overlapping window (kt, kh, kw); each window must
//         tile its axis. max_pool routes the gradient to the first maximum.
// global_avg_pool: T x H x W x C -> C.
// flatten: any shape -> one axis.
// affine: flat input of length N -> `units` outputs. Weights are units x N.
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    std::size_t kt = 1;
    std::size_t kh = 1;
    std::size_t kw = 1;
    std::size_t units = 0;
    double shift = 0.0;
    double scale = 1.0;
    // Frozen layers still report gradients but are skipped by the trainer.
    bool frozen = false;

    static LayerSpec normalize(double shift, double scale);
    static LayerSpec conv3d(std::size_t kt, std::size_t kh, std::size_t kw, std::size_t channels);
    static LayerSpec relu();
    static LayerSpec avg_pool(std::size_t kt, std::size_t kh, std::size_t kw);
    static LayerSpec max_pool(std::size_t kt, std::size_t kh, std::size_t kw);
    static LayerSpec global_avg_pool();
    static LayerSpec flatten();
    static LayerSpec affine(std::size_t outputs);

    bool has_params() const noexcept { return kind == LayerKind::conv3d || kind == LayerKind::affine; }
    bool operator==(const LayerSpec&) const = default;
};

struct NamedTensor {
    std::string name;
    Tensor value;

    bool operator==(const NamedTensor&) const = default;
};

// Gradients captured during one backward pass.
struct BackwardTrace {
    Tensor input_grad;
    std::vector<Tensor> param_grads;  // aligned with Model::parameters()
    std::vector<Tensor> output_grads;  // d(seed)/d(output of layer k); filled only on request
};

// A small feed-forward video classifier with reverse-mode differentiation.
//
// The model is a regular value type: copying it clones parameters and the
// activation cache, so per-thread copies can be evaluated independently.
// forward() overwrites the activation cache; backward() consumes it.
class Model {
public:
    Model() = default;
    // Type-checks the chain (throws SpecError) and initializes parameters
    // deterministically from `seed` (He-uniform weights, zero biases).
    Model(Shape input_shape, std::vector<LayerSpec> layers, std::uint64_t seed);

    const Shape& input_shape() const noexcept { return input_shape_; }
    const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
    // Output shape of layer k.
    const Shape& output_shape(std::size_t k) const { return shapes_.at(k + 1); }
    std::size_t num_classes() const noexcept { return shapes_.empty() ? 0 : shapes_.back()[0]; }

    std::vector<NamedTensor>& parameters() noexcept { return params_; }
    const std::vector<NamedTensor>& parameters() const noexcept { return params_; }
    // Index of the first parameter of layer k in parameters(), or npos.
    std::size_t param_offset(std::size_t k) const { return param_offset_.at(k); }
    std::size_t parameter_count() const noexcept;

    // Runs the chain on `x` (shape must equal input_shape()) and returns the
    // logits. Throws InputError on shape mismatch and NumericFault if any
    // activation is non-finite.
    Tensor forward(const Tensor& x);

    // Back-propagates `seed` (gradient w.r.t. the logits) through the cached
    // forward pass.
    BackwardTrace backward(const Tensor& seed, bool want_param_grads, bool want_output_grads = false) const;

    // Output of layer k from the most recent forward pass.
    const Tensor& activation(std::size_t k) const { return cache_.at(k + 1); }
    bool has_cache() const noexcept { return !cache_.empty(); }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    Shape input_shape_;
    std::vector<LayerSpec> layers_;
    std::vector<Shape> shapes_;  // shapes_[0] = input, shapes_[k+1] = output of layer k
    std::vector<NamedTensor> params_;
    std::vector<std::size_t> param_offset_;
    std::vector<Tensor> cache_;
};

// Checks a layer chain against an input shape; returns all intermediate
// shapes. Throws SpecError on the first inconsistency.
std::vector<Shape> infer_shapes(const Shape& input_shape, const std::vector<LayerSpec>& layers);

}  // namespace ttlab
