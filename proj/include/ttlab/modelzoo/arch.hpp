#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttlab/gradcore/graph.hpp"

namespace ttlab::modelzoo {

// Temporal structure of a zoo architecture.
//  early_pool:    averages all frames in the first layer; every later layer is
//                 2D. Exactly invariant to any reordering of frames.
//  full_3d:       3x3x3 convolutions throughout, per-segment classifier head.
//  late_temporal: per-frame 2D convolutions, then one temporal convolution head.
enum class ArchFamily { early_pool, full_3d, late_temporal };

std::string_view to_string(ArchFamily family);
ArchFamily arch_family_from_string(std::string_view name);

struct ArchSpec {
    ArchFamily family = ArchFamily::full_3d;
    Shape input_shape;  // T x H x W x C
    std::size_t num_classes = 0;
    std::vector<LayerSpec> layers;
    std::uint64_t seed = 0;

    bool operator==(const ArchSpec&) const = default;
};

// Default layer chain of a family for the given input and class count.
// Throws SpecError if the input cannot host the chain (e.g. H not divisible
// by the pooling schedule).
ArchSpec make_arch(ArchFamily family, const Shape& input_shape, std::size_t num_classes, std::uint64_t seed);

// Type-checks spec.layers against spec.input_shape and initializes the
// parameters from spec.seed.
Model build_model(const ArchSpec& spec);

nlohmann::json to_json(const ArchSpec& spec);
ArchSpec arch_from_json(const nlohmann::json& j);

}  // namespace ttlab::modelzoo
