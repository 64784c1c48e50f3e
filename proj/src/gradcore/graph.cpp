#include "ttlab/gradcore/graph.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ttlab/errors.hpp"

namespace ttlab {

std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::normalize: return "normalize";
        case LayerKind::conv3d: return "conv3d";
        case LayerKind::relu: return "relu";
        case LayerKind::avg_pool: return "avg_pool";
        case LayerKind::max_pool: return "max_pool";
        case LayerKind::global_avg_pool: return "global_avg_pool";
        case LayerKind::flatten: return "flatten";
        case LayerKind::affine: return "affine";
    }
    return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name) {
    for (auto k : {LayerKind::normalize, LayerKind::conv3d, LayerKind::relu, LayerKind::avg_pool, LayerKind::max_pool,
                   LayerKind::global_avg_pool, LayerKind::flatten, LayerKind::affine}) {
        if (to_string(k) == name) return k;
    }
    throw SpecError("unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::normalize(double shift, double scale) {
    LayerSpec l{LayerKind::normalize};
    l.shift = shift;
    l.scale = scale;
    return l;
}
LayerSpec LayerSpec::conv3d(std::size_t kt, std::size_t kh, std::size_t kw, std::size_t channels) {
    return {LayerKind::conv3d, kt, kh, kw, channels};
}
LayerSpec LayerSpec::relu() { return {LayerKind::relu}; }
LayerSpec LayerSpec::avg_pool(std::size_t kt, std::size_t kh, std::size_t kw) {
    return {LayerKind::avg_pool, kt, kh, kw};
}
LayerSpec LayerSpec::max_pool(std::size_t kt, std::size_t kh, std::size_t kw) {
    return {LayerKind::max_pool, kt, kh, kw};
}
LayerSpec LayerSpec::global_avg_pool() { return {LayerKind::global_avg_pool}; }
LayerSpec LayerSpec::flatten() { return {LayerKind::flatten}; }
LayerSpec LayerSpec::affine(std::size_t outputs) { return {LayerKind::affine, 1, 1, 1, outputs}; }

std::vector<Shape> infer_shapes(const Shape& input_shape, const std::vector<LayerSpec>& layers) {
    std::vector<Shape> shapes{input_shape};
    if (input_shape.size() != 4 || shape_size(input_shape) == 0) {
        throw SpecError("model input must be a nonempty T x H x W x C shape, got " + shape_str(input_shape));
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const LayerSpec& l = layers[k];
        const Shape& in = shapes.back();
        const std::string where = "layer " + std::to_string(k) + " (" + std::string(to_string(l.kind)) + "): ";
        auto need_video = [&] {
            if (in.size() != 4) throw SpecError(where + "expects a 4-axis input, got " + shape_str(in));
        };
        switch (l.kind) {
            case LayerKind::conv3d:
                need_video();
                if (l.units == 0) throw SpecError(where + "zero output channels");
                if (l.kt % 2 == 0 || l.kh % 2 == 0 || l.kw % 2 == 0) {
                    throw SpecError(where + "same padding needs odd kernel extents");
                }
                shapes.push_back({in[0], in[1], in[2], l.units});
                break;
            case LayerKind::normalize:
                if (!std::isfinite(l.shift) || !std::isfinite(l.scale) || l.scale == 0.0) {
                    throw SpecError(where + "scale must be finite and nonzero");
                }
                shapes.push_back(in);
                break;
            case LayerKind::relu:
                shapes.push_back(in);
                break;
            case LayerKind::avg_pool:
            case LayerKind::max_pool:
                need_video();
                if (l.kt == 0 || l.kh == 0 || l.kw == 0 || in[0] % l.kt || in[1] % l.kh || in[2] % l.kw) {
                    throw SpecError(where + "pool window does not tile input " + shape_str(in));
                }
                shapes.push_back({in[0] / l.kt, in[1] / l.kh, in[2] / l.kw, in[3]});
                break;
            case LayerKind::global_avg_pool:
                need_video();
                shapes.push_back({in[3]});
                break;
            case LayerKind::flatten:
                shapes.push_back({shape_size(in)});
                break;
            case LayerKind::affine:
                if (in.size() != 1) throw SpecError(where + "expects a flat input, got " + shape_str(in));
                if (l.units == 0) throw SpecError(where + "zero outputs");
                shapes.push_back({l.units});
                break;
        }
    }
    if (shapes.back().size() != 1 || shapes.back()[0] < 2) {
        throw SpecError("model must end in a flat logit vector with at least 2 classes, got " +
                        shape_str(shapes.back()));
    }
    return shapes;
}

Model::Model(Shape input_shape, std::vector<LayerSpec> layers, std::uint64_t seed)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    shapes_ = infer_shapes(input_shape_, layers_);
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const LayerSpec& l = layers_[k];
        if (!l.has_params()) {
            param_offset_.push_back(npos);
            continue;
        }
        param_offset_.push_back(params_.size());
        const Shape& in = shapes_[k];
        Shape wshape;
        std::size_t fan_in = 0;
        if (l.kind == LayerKind::conv3d) {
            wshape = {l.kt, l.kh, l.kw, in[3], l.units};
            fan_in = l.kt * l.kh * l.kw * in[3];
        } else {
            wshape = {l.units, in[0]};
            fan_in = in[0];
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Tensor w(wshape);
        for (double& v : w.data()) v = dist(rng);
        const std::string prefix = std::to_string(k) + "." + std::string(to_string(l.kind));
        params_.push_back({prefix + ".weight", std::move(w)});
        params_.push_back({prefix + ".bias", Tensor({l.units})});
    }
}

std::size_t Model::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

namespace {

void conv3d_forward(const Tensor& in, const Tensor& weight, const Tensor& bias, const LayerSpec& l, Tensor& out) {
    const std::size_t T = in.dim(0), H = in.dim(1), W = in.dim(2), Ci = in.dim(3), Co = l.units;
    const long pt = static_cast<long>(l.kt / 2), ph = static_cast<long>(l.kh / 2), pw = static_cast<long>(l.kw / 2);
    const double* ip = in.data().data();
    const double* wp = weight.data().data();
    const double* bp = bias.data().data();
    double* op = out.data().data();
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t w = 0; w < W; ++w) {
                double* o = op + ((t * H + h) * W + w) * Co;
                std::copy(bp, bp + Co, o);
                for (std::size_t dt = 0; dt < l.kt; ++dt) {
                    const long tt = static_cast<long>(t + dt) - pt;
                    if (tt < 0 || tt >= static_cast<long>(T)) continue;
                    for (std::size_t dh = 0; dh < l.kh; ++dh) {
                        const long hh = static_cast<long>(h + dh) - ph;
                        if (hh < 0 || hh >= static_cast<long>(H)) continue;
                        for (std::size_t dw = 0; dw < l.kw; ++dw) {
                            const long ww = static_cast<long>(w + dw) - pw;
                            if (ww < 0 || ww >= static_cast<long>(W)) continue;
                            const double* x = ip + ((tt * H + hh) * W + ww) * Ci;
                            const double* k = wp + ((dt * l.kh + dh) * l.kw + dw) * Ci * Co;
                            for (std::size_t ci = 0; ci < Ci; ++ci) {
                                const double v = x[ci];
                                const double* kr = k + ci * Co;
                                for (std::size_t co = 0; co < Co; ++co) o[co] += v * kr[co];
                            }
                        }
                    }
                }
            }
        }
    }
}

void conv3d_backward(const Tensor& in, const Tensor& weight, const LayerSpec& l, const Tensor& gout,
                     Tensor* gin, Tensor* gweight, Tensor* gbias) {
    const std::size_t T = in.dim(0), H = in.dim(1), W = in.dim(2), Ci = in.dim(3), Co = l.units;
    const long pt = static_cast<long>(l.kt / 2), ph = static_cast<long>(l.kh / 2), pw = static_cast<long>(l.kw / 2);
    const double* ip = in.data().data();
    const double* wp = weight.data().data();
    const double* gp = gout.data().data();
    double* gip = gin ? gin->data().data() : nullptr;
    double* gwp = gweight ? gweight->data().data() : nullptr;
    double* gbp = gbias ? gbias->data().data() : nullptr;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t w = 0; w < W; ++w) {
                const double* g = gp + ((t * H + h) * W + w) * Co;
                if (gbp) {
                    for (std::size_t co = 0; co < Co; ++co) gbp[co] += g[co];
                }
                for (std::size_t dt = 0; dt < l.kt; ++dt) {
                    const long tt = static_cast<long>(t + dt) - pt;
                    if (tt < 0 || tt >= static_cast<long>(T)) continue;
                    for (std::size_t dh = 0; dh < l.kh; ++dh) {
                        const long hh = static_cast<long>(h + dh) - ph;
                        if (hh < 0 || hh >= static_cast<long>(H)) continue;
                        for (std::size_t dw = 0; dw < l.kw; ++dw) {
                            const long ww = static_cast<long>(w + dw) - pw;
                            if (ww < 0 || ww >= static_cast<long>(W)) continue;
                            const std::size_t in_off = ((tt * H + hh) * W + ww) * Ci;
                            const std::size_t k_off = ((dt * l.kh + dh) * l.kw + dw) * Ci * Co;
                            for (std::size_t ci = 0; ci < Ci; ++ci) {
                                const double* kr = wp + k_off + ci * Co;
                                if (gip) {
                                    double acc = 0.0;
                                    for (std::size_t co = 0; co < Co; ++co) acc += g[co] * kr[co];
                                    gip[in_off + ci] += acc;
                                }
                                if (gwp) {
                                    const double v = ip[in_off + ci];
                                    double* gkr = gwp + k_off + ci * Co;
                                    for (std::size_t co = 0; co < Co; ++co) gkr[co] += v * g[co];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

void avg_pool_forward(const Tensor& in, const LayerSpec& l, Tensor& out) {
    const std::size_t H = in.dim(1), W = in.dim(2), C = in.dim(3);
    const std::size_t To = out.dim(0), Ho = out.dim(1), Wo = out.dim(2);
    const double scale = 1.0 / static_cast<double>(l.kt * l.kh * l.kw);
    for (std::size_t t = 0; t < To; ++t)
        for (std::size_t h = 0; h < Ho; ++h)
            for (std::size_t w = 0; w < Wo; ++w) {
                double* o = &out[((t * Ho + h) * Wo + w) * C];
                for (std::size_t dt = 0; dt < l.kt; ++dt)
                    for (std::size_t dh = 0; dh < l.kh; ++dh)
                        for (std::size_t dw = 0; dw < l.kw; ++dw) {
                            const double* x = &in[(((t * l.kt + dt) * H + h * l.kh + dh) * W + w * l.kw + dw) * C];
                            for (std::size_t c = 0; c < C; ++c) o[c] += x[c];
                        }
                for (std::size_t c = 0; c < C; ++c) o[c] *= scale;
            }
}

void avg_pool_backward(const Shape& in_shape, const LayerSpec& l, const Tensor& gout, Tensor& gin) {
    const std::size_t H = in_shape[1], W = in_shape[2], C = in_shape[3];
    const std::size_t To = gout.dim(0), Ho = gout.dim(1), Wo = gout.dim(2);
    const double scale = 1.0 / static_cast<double>(l.kt * l.kh * l.kw);
    for (std::size_t t = 0; t < To; ++t)
        for (std::size_t h = 0; h < Ho; ++h)
            for (std::size_t w = 0; w < Wo; ++w) {
                const double* g = &gout[((t * Ho + h) * Wo + w) * C];
                for (std::size_t dt = 0; dt < l.kt; ++dt)
                    for (std::size_t dh = 0; dh < l.kh; ++dh)
                        for (std::size_t dw = 0; dw < l.kw; ++dw) {
                            double* x = &gin[(((t * l.kt + dt) * H + h * l.kh + dh) * W + w * l.kw + dw) * C];
                            for (std::size_t c = 0; c < C; ++c) x[c] += g[c] * scale;
                        }
            }
}

// Index (into `in`) of the first maximum of every pooling window.
std::vector<std::size_t> max_pool_forward(const Tensor& in, const LayerSpec& l, Tensor& out) {
    const std::size_t H = in.dim(1), W = in.dim(2), C = in.dim(3);
    const std::size_t To = out.dim(0), Ho = out.dim(1), Wo = out.dim(2);
    std::vector<std::size_t> argmax(out.size());
    for (std::size_t t = 0; t < To; ++t)
        for (std::size_t h = 0; h < Ho; ++h)
            for (std::size_t w = 0; w < Wo; ++w) {
                const std::size_t obase = ((t * Ho + h) * Wo + w) * C;
                for (std::size_t c = 0; c < C; ++c) {
                    std::size_t best = static_cast<std::size_t>(-1);
                    for (std::size_t dt = 0; dt < l.kt; ++dt)
                        for (std::size_t dh = 0; dh < l.kh; ++dh)
                            for (std::size_t dw = 0; dw < l.kw; ++dw) {
                                const std::size_t i =
                                    (((t * l.kt + dt) * H + h * l.kh + dh) * W + w * l.kw + dw) * C + c;
                                if (best == static_cast<std::size_t>(-1) || in[i] > in[best]) best = i;
                            }
                    out[obase + c] = in[best];
                    argmax[obase + c] = best;
                }
            }
    return argmax;
}

}  // namespace

Tensor Model::forward(const Tensor& x) {
    if (x.shape() != input_shape_) {
        throw InputError("model expects input " + shape_str(input_shape_) + ", got " + shape_str(x.shape()));
    }
    cache_.assign(1, x);
    cache_.reserve(layers_.size() + 1);
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const LayerSpec& l = layers_[k];
        const Tensor& in = cache_[k];
        Tensor out(shapes_[k + 1]);
        switch (l.kind) {
            case LayerKind::normalize:
                for (std::size_t i = 0; i < out.size(); ++i) out[i] = (in[i] - l.shift) * l.scale;
                break;
            case LayerKind::conv3d: {
                const std::size_t p = param_offset_[k];
                conv3d_forward(in, params_[p].value, params_[p + 1].value, l, out);
                break;
            }
            case LayerKind::relu:
                for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
                break;
            case LayerKind::avg_pool:
                avg_pool_forward(in, l, out);
                break;
            case LayerKind::max_pool:
                max_pool_forward(in, l, out);
                break;
            case LayerKind::global_avg_pool: {
                const std::size_t C = in.dim(3);
                const std::size_t n = in.size() / C;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t c = 0; c < C; ++c) out[c] += in[i * C + c];
                for (std::size_t c = 0; c < C; ++c) out[c] /= static_cast<double>(n);
                break;
            }
            case LayerKind::flatten:
                out = in.reshaped(shapes_[k + 1]);
                break;
            case LayerKind::affine: {
                const std::size_t p = param_offset_[k];
                const Tensor& wt = params_[p].value;
                const Tensor& b = params_[p + 1].value;
                const std::size_t N = in.size();
                for (std::size_t o = 0; o < l.units; ++o) {
                    double acc = b[o];
                    const double* row = &wt[o * N];
                    for (std::size_t i = 0; i < N; ++i) acc += row[i] * in[i];
                    out[o] = acc;
                }
                break;
            }
        }
        if (!out.all_finite()) {
            throw NumericFault("non-finite activation at layer " + std::to_string(k) + " (" +
                               std::string(to_string(l.kind)) + ")");
        }
        cache_.push_back(std::move(out));
    }
    return cache_.back();
}

BackwardTrace Model::backward(const Tensor& seed, bool want_param_grads, bool want_output_grads) const {
    if (cache_.size() != layers_.size() + 1) throw InputError("backward called without a cached forward pass");
    if (seed.shape() != shapes_.back()) {
        throw InputError("backward seed must have shape " + shape_str(shapes_.back()) + ", got " +
                         shape_str(seed.shape()));
    }
    BackwardTrace trace;
    if (want_param_grads) {
        trace.param_grads.reserve(params_.size());
        for (const auto& p : params_) trace.param_grads.emplace_back(p.value.shape());
    }
    if (want_output_grads) trace.output_grads.resize(layers_.size());

    Tensor grad = seed;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        const LayerSpec& l = layers_[k];
        const Tensor& in = cache_[k];
        if (want_output_grads) trace.output_grads[k] = grad;
        Tensor gin(shapes_[k]);
        switch (l.kind) {
            case LayerKind::normalize:
                for (std::size_t i = 0; i < gin.size(); ++i) gin[i] = grad[i] * l.scale;
                break;
            case LayerKind::conv3d: {
                const std::size_t p = param_offset_[k];
                Tensor* gw = want_param_grads ? &trace.param_grads[p] : nullptr;
                Tensor* gb = want_param_grads ? &trace.param_grads[p + 1] : nullptr;
                conv3d_backward(in, params_[p].value, l, grad, &gin, gw, gb);
                break;
            }
            case LayerKind::relu:
                for (std::size_t i = 0; i < gin.size(); ++i) gin[i] = in[i] > 0.0 ? grad[i] : 0.0;
                break;
            case LayerKind::avg_pool:
                avg_pool_backward(in.shape(), l, grad, gin);
                break;
            case LayerKind::max_pool: {
                Tensor scratch(shapes_[k + 1]);
                const auto route = max_pool_forward(in, l, scratch);
                for (std::size_t i = 0; i < route.size(); ++i) gin[route[i]] += grad[i];
                break;
            }
            case LayerKind::global_avg_pool: {
                const std::size_t C = in.dim(3);
                const std::size_t n = in.size() / C;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t c = 0; c < C; ++c) gin[i * C + c] = grad[c] / static_cast<double>(n);
                break;
            }
            case LayerKind::flatten:
                gin = grad.reshaped(shapes_[k]);
                break;
            case LayerKind::affine: {
                const std::size_t p = param_offset_[k];
                const Tensor& wt = params_[p].value;
                const std::size_t N = in.size();
                for (std::size_t o = 0; o < l.units; ++o) {
                    const double g = grad[o];
                    const double* row = &wt[o * N];
                    for (std::size_t i = 0; i < N; ++i) gin[i] += g * row[i];
                }
                if (want_param_grads) {
                    Tensor& gw = trace.param_grads[p];
                    Tensor& gb = trace.param_grads[p + 1];
                    for (std::size_t o = 0; o < l.units; ++o) {
                        gb[o] += grad[o];
                        double* row = &gw[o * N];
                        for (std::size_t i = 0; i < N; ++i) row[i] += grad[o] * in[i];
                    }
                }
                break;
            }
        }
        grad = std::move(gin);
    }
    trace.input_grad = std::move(grad);
    return trace;
}

}  // namespace ttlab
