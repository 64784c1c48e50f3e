#include "ttlab/temppattern/importance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

#include "ttlab/errors.hpp"
#include "ttlab/gradcore/ops.hpp"

namespace ttlab::temppattern {

std::string to_string(Method m) {
    switch (m) {
        case Method::gradcam: return "gradcam";
        case Method::zeropad: return "zeropad";
        case Method::meanpad: return "meanpad";
    }
    return "unknown";
}

Method method_from_string(std::string_view name) {
    for (auto m : {Method::gradcam, Method::zeropad, Method::meanpad}) {
        if (to_string(m) == name) return m;
    }
    throw SpecError("unknown importance method '" + std::string(name) + "'");
}

namespace {

// Loss change when frame i is replaced by make_frame(i, dst).
template <class Fill>
ImportanceProfile padded_importance(const Model& model, const VideoClip& clip, Label y, Method method, Fill fill) {
    Model m = model;
    const Tensor& x = clip.tensor();
    const std::size_t T = clip.frames(), fs = clip.frame_size();
    const double base = loss_at(m, x, y);
    ImportanceProfile out;
    out.method = method;
    out.p.resize(T);
    Tensor work = x;
    for (std::size_t i = 0; i < T; ++i) {
        auto dst = work.data().subspan(i * fs, fs);
        fill(i, dst);
        out.p[i] = loss_at(m, work, y) - base;
        std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(i * fs), fs, dst.begin());
    }
    return out;
}

}  // namespace

ImportanceProfile importance_zero_pad(const Model& model, const VideoClip& clip, Label y) {
    return padded_importance(model, clip, y, Method::zeropad,
                             [](std::size_t, std::span<double> dst) { std::fill(dst.begin(), dst.end(), 0.0); });
}

ImportanceProfile importance_mean_pad(const Model& model, const VideoClip& clip, Label y) {
    const auto src = clip.tensor().data();
    const std::size_t T = clip.frames(), fs = clip.frame_size();
    return padded_importance(model, clip, y, Method::meanpad, [&](std::size_t i, std::span<double> dst) {
        const std::size_t lo = i == 0 ? 1 : i - 1;
        const std::size_t hi = i + 1 == T ? T - 2 : i + 1;
        for (std::size_t e = 0; e < fs; ++e) dst[e] = 0.5 * (src[lo * fs + e] + src[hi * fs + e]);
    });
}

std::vector<double> resample_linear(const std::vector<double>& v, std::size_t m) {
    const std::size_t n = v.size();
    if (n == 0 || m == 0) throw InputError("resample_linear needs non-empty input and output");
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = (static_cast<double>(i) + 0.5) * static_cast<double>(n) / static_cast<double>(m) - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(n - 1));
        const auto j = static_cast<std::size_t>(std::floor(s));
        const double f = s - static_cast<double>(j);
        out[i] = j + 1 < n ? (1.0 - f) * v[j] + f * v[j + 1] : v[j];
    }
    return out;
}

ImportanceProfile importance_gradcam(const Model& model, const VideoClip& clip, Label y) {
    const auto& layers = model.layers();
    std::size_t k = Model::npos;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].kind == LayerKind::conv3d) k = i;
    }
    if (k == Model::npos) throw SpecError("grad-cam needs a model with a conv3d layer");
    if (k + 1 < layers.size() && layers[k + 1].kind == LayerKind::relu) ++k;

    Model m = model;
    const Tensor logits = m.forward(clip.tensor());
    if (y.index < 0 || static_cast<std::size_t>(y.index) >= logits.size()) throw InputError("label out of range");
    Tensor seed(logits.shape());
    seed[static_cast<std::size_t>(y.index)] = 1.0;
    const BackwardTrace tr = m.backward(seed, false, true);
    const Tensor& A = m.activation(k);
    const Tensor& G = tr.output_grads.at(k);

    const Shape& s = A.shape();  // T' x H' x W' x C
    const std::size_t Tp = s[0], HW = s[1] * s[2], C = s[3];
    std::vector<double> w(C, 0.0);
    for (std::size_t e = 0; e < G.size(); ++e) w[e % C] += G[e];
    for (double& v : w) v /= static_cast<double>(Tp * HW);

    std::vector<double> per_t(Tp, 0.0);
    for (std::size_t t = 0; t < Tp; ++t) {
        double acc = 0.0;
        for (std::size_t p = 0; p < HW; ++p) {
            const std::size_t base = (t * HW + p) * C;
            double cam = 0.0;
            for (std::size_t c = 0; c < C; ++c) cam += w[c] * A[base + c];
            acc += std::max(cam, 0.0);
        }
        per_t[t] = acc / static_cast<double>(HW);
    }
    // Spatial mean commutes with the temporal resampling, so resample the means.
    ImportanceProfile out;
    out.method = Method::gradcam;
    out.p = resample_linear(per_t, clip.frames());
    return out;
}

ImportanceProfile importance(Method method, const Model& model, const VideoClip& clip, Label y) {
    switch (method) {
        case Method::gradcam: return importance_gradcam(model, clip, y);
        case Method::zeropad: return importance_zero_pad(model, clip, y);
        case Method::meanpad: return importance_mean_pad(model, clip, y);
    }
    throw SpecError("unknown importance method");
}

std::vector<std::size_t> descending_ranks(const std::vector<double>& p) {
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    std::vector<std::size_t> rank(p.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
    return rank;
}

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InputError("importance profiles differ in length");
    const std::size_t T = a.size();
    if (T < 2) throw InputError("spearman_rho needs at least 2 frames");
    const auto ra = descending_ranks(a), rb = descending_ranks(b);
    // Integer sums, then a single rounding in the final division.
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < T; ++i) {
        const auto d = static_cast<std::int64_t>(ra[i]) - static_cast<std::int64_t>(rb[i]);
        sum += d * d;
    }
    const auto n = static_cast<std::int64_t>(T);
    const std::int64_t denom = n * (n * n - 1);
    return static_cast<double>(denom - 6 * sum) / static_cast<double>(denom);
}

double spearman_rho(const ImportanceProfile& a, const ImportanceProfile& b) {
    if (a.clip_id != b.clip_id) throw InputError("profiles belong to different clips ('" + a.clip_id + "', '" + b.clip_id + "')");
    return spearman_rho(a.p, b.p);
}

std::string CorrelationMatrix::to_csv() const {
    std::ostringstream os;
    os << "model";
    for (const auto& id : model_ids) os << ',' << id;
    os << '\n';
    char buf[32];
    for (std::size_t i = 0; i < model_ids.size(); ++i) {
        os << model_ids[i];
        for (double v : rho[i]) {
            std::snprintf(buf, sizeof buf, "%.6f", v);
            os << ',' << buf;
        }
        os << '\n';
    }
    return os.str();
}

nlohmann::json to_json(const CorrelationMatrix& m) {
    return {{"models", m.model_ids}, {"method", to_string(m.method)}, {"rho", m.rho}, {"clip_count", m.clip_count}};
}

CorrelationMatrix model_correlation(const std::vector<NamedModel>& models,
                                    const std::vector<const synthvid::LabeledClip*>& clips, Method method,
                                    std::size_t threads) {
    const std::size_t n = models.size();
    if (n == 0) throw ProtocolError("model_correlation needs at least one model");
    const std::size_t nc = clips.size();
    // Per clip: eligibility flag and the upper triangle of rho.
    std::vector<char> eligible(nc, 0);
    std::vector<std::vector<double>> rows(nc);

    auto work = [&](std::size_t begin, std::size_t stride) {
        std::vector<Model> local;
        for (const auto& nm : models) local.push_back(*nm.model);
        for (std::size_t c = begin; c < nc; c += stride) {
            const auto& lc = *clips[c];
            bool ok = true;
            for (auto& m : local) {
                if (argmax(m.forward(lc.clip.tensor())) != lc.label) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            std::vector<std::vector<double>> prof;
            for (auto& m : local) prof.push_back(importance(method, m, lc.clip, lc.label).p);
            std::vector<double> tri;
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a + 1; b < n; ++b) tri.push_back(spearman_rho(prof[a], prof[b]));
            rows[c] = std::move(tri);
            eligible[c] = 1;
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, nc));
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w, threads);
    }

    CorrelationMatrix out;
    out.method = method;
    for (const auto& nm : models) out.model_ids.push_back(nm.id);
    out.rho.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t c = 0; c < nc; ++c) {
        if (!eligible[c]) continue;
        ++out.clip_count;
        std::size_t idx = 0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) out.rho[a][b] += rows[c][idx++];
    }
    if (out.clip_count == 0) throw ProtocolError("no clip is classified correctly by every model");
    for (std::size_t a = 0; a < n; ++a) {
        out.rho[a][a] = 1.0;
        for (std::size_t b = a + 1; b < n; ++b) {
            out.rho[a][b] /= static_cast<double>(out.clip_count);
            out.rho[b][a] = out.rho[a][b];
        }
    }
    return out;
}

}  // namespace ttlab::temppattern
