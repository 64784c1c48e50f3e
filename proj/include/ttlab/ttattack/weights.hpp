#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace ttlab::ttattack {

enum class WeightKind { uniform, linear, gaussian };

std::string_view to_string(WeightKind kind);
WeightKind weight_kind_from_string(std::string_view name);

// Symmetric, positive weights over shift indices -L..L that sum to one.
struct WeightMatrix {
    std::size_t shift_length = 0;
    WeightKind kind = WeightKind::uniform;
    double sigma = 0.0;           // gaussian only: L / 3
    std::vector<double> weights;  // weights[i + L] is the weight of shift i

    double at(long shift) const { return weights.at(static_cast<std::size_t>(shift + static_cast<long>(shift_length))); }
};

// uniform:  1 / (2L + 1)
// linear:   1 - |i| / (2L + 1), normalized
// gaussian: exp(-i^2 / (2 sigma^2)) with sigma = L / 3, normalized
// L = 0 gives {1} for every kind.
WeightMatrix build_weight_matrix(WeightKind kind, std::size_t shift_length);

}  // namespace ttlab::ttattack
