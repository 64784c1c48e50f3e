#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttlab/gradcore/graph.hpp"
#include "ttlab/gradcore/video.hpp"
#include "ttlab/synthvid/dataset.hpp"

namespace ttlab::temppattern {

enum class Method { gradcam, zeropad, meanpad };

std::string to_string(Method m);
Method method_from_string(std::string_view name);

// Per-frame importance of one clip under one model.
struct ImportanceProfile {
    std::string model_id;
    std::string clip_id;
    Method method = Method::zeropad;
    std::vector<double> p;
};

// p_i = J(f(x with frame i set to 0), y) - J(f(x), y). T + 1 forward passes.
ImportanceProfile importance_zero_pad(const Model& model, const VideoClip& clip, Label y);

// As zero padding, but frame i is replaced with the mean of frames i-1 and
// i+1. The first and last frames copy their single neighbour.
ImportanceProfile importance_mean_pad(const Model& model, const VideoClip& clip, Label y);

// Grad-CAM on the last conv3d layer (taken after its ReLU when one follows).
// Channel weights are the mean of d logit_y / d A over time and space, the map
// is ReLU(sum_c w_c A_c), resampled linearly from T' to T frames, and p_i is
// the spatial mean of frame i. Throws SpecError if the model has no conv3d.
ImportanceProfile importance_gradcam(const Model& model, const VideoClip& clip, Label y);

ImportanceProfile importance(Method method, const Model& model, const VideoClip& clip, Label y);

// Linear resampling of a length-n sequence to length m with aligned pixel
// centres (source coordinate (i + 0.5) * n / m - 0.5, clamped to the ends).
std::vector<double> resample_linear(const std::vector<double>& v, std::size_t m);

// Ranks in descending order (1 = largest); ties go to the lower index first.
std::vector<std::size_t> descending_ranks(const std::vector<double>& p);

// 1 - 6 sum d^2 / (T (T^2 - 1)) on descending ranks, rounded once. Throws InputError on a
// length mismatch, T < 2 or differing clip ids.
double spearman_rho(const ImportanceProfile& a, const ImportanceProfile& b);
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

struct CorrelationMatrix {
    std::vector<std::string> model_ids;
    Method method = Method::zeropad;
    std::vector<std::vector<double>> rho;
    std::size_t clip_count = 0;

    std::string to_csv() const;
};

nlohmann::json to_json(const CorrelationMatrix& m);

struct NamedModel {
    std::string id;
    const Model* model;
};

// Mean pairwise rho over the clips that every model classifies correctly.
// `clips` are candidates; misclassified ones are skipped. Throws
// ProtocolError if nothing is left. `threads` > 1 spreads clips over workers.
CorrelationMatrix model_correlation(const std::vector<NamedModel>& models,
                                    const std::vector<const synthvid::LabeledClip*>& clips, Method method,
                                    std::size_t threads = 1);

}  // namespace ttlab::temppattern
