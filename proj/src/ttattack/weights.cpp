#include "ttlab/ttattack/weights.hpp"

#include <cmath>
#include <string>

#include "ttlab/errors.hpp"

namespace ttlab::ttattack {

std::string_view to_string(WeightKind kind) {
    switch (kind) {
        case WeightKind::uniform: return "uniform";
        case WeightKind::linear: return "linear";
        case WeightKind::gaussian: return "gaussian";
    }
    return "unknown";
}

WeightKind weight_kind_from_string(std::string_view name) {
    for (auto k : {WeightKind::uniform, WeightKind::linear, WeightKind::gaussian}) {
        if (to_string(k) == name) return k;
    }
    throw SpecError("unknown weight matrix kind '" + std::string(name) + "'");
}

WeightMatrix build_weight_matrix(WeightKind kind, std::size_t shift_length) {
    WeightMatrix w;
    w.kind = kind;
    w.shift_length = shift_length;
    const long L = static_cast<long>(shift_length);
    const double width = static_cast<double>(2 * L + 1);
    if (kind == WeightKind::gaussian) w.sigma = static_cast<double>(L) / 3.0;

    // Raw weight by |i|; both sides read the same value so symmetry is exact.
    std::vector<double> half(shift_length + 1);
    for (long i = 0; i <= L; ++i) {
        const double d = static_cast<double>(i);
        switch (kind) {
            case WeightKind::uniform: half[static_cast<std::size_t>(i)] = 1.0; break;
            case WeightKind::linear: half[static_cast<std::size_t>(i)] = 1.0 - d / width; break;
            case WeightKind::gaussian:
                half[static_cast<std::size_t>(i)] = L == 0 ? 1.0 : std::exp(-d * d / (2.0 * w.sigma * w.sigma));
                break;
        }
    }
    double total = half[0];
    for (long i = 1; i <= L; ++i) total += 2.0 * half[static_cast<std::size_t>(i)];
    w.weights.resize(2 * shift_length + 1);
    for (long i = -L; i <= L; ++i) {
        w.weights[static_cast<std::size_t>(i + L)] = half[static_cast<std::size_t>(std::labs(i))] / total;
    }
    return w;
}

}  // namespace ttlab::ttattack
