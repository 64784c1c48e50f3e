#include "ttlab/modelzoo/arch.hpp"

#include "ttlab/errors.hpp"

namespace ttlab::modelzoo {

std::string_view to_string(ArchFamily family) {
    switch (family) {
        case ArchFamily::early_pool: return "early-pool";
        case ArchFamily::full_3d: return "full-3d";
        case ArchFamily::late_temporal: return "late-temporal";
    }
    return "unknown";
}

ArchFamily arch_family_from_string(std::string_view name) {
    for (auto f : {ArchFamily::early_pool, ArchFamily::full_3d, ArchFamily::late_temporal}) {
        if (to_string(f) == name) return f;
    }
    throw SpecError("unknown architecture '" + std::string(name) + "' (expected early-pool, full-3d or late-temporal)");
}

ArchSpec make_arch(ArchFamily family, const Shape& input_shape, std::size_t num_classes, std::uint64_t seed) {
    if (input_shape.size() != 4) throw SpecError("architecture input must be T x H x W x C");
    const std::size_t T = input_shape[0], H = input_shape[1], W = input_shape[2];
    if (H % 16 || W % 16) throw SpecError("zoo architectures need H and W divisible by 16");
    using L = LayerSpec;
    ArchSpec spec{family, input_shape, num_classes, {}, seed};
    // Maps the background level near zero and the bright square to ~+3.
    const LayerSpec norm = L::normalize(0.4, 6.0);
    switch (family) {
        case ArchFamily::early_pool:
            spec.layers = {L::avg_pool(T, 1, 1), norm, L::conv3d(1, 3, 3, 16), L::relu(),
                           L::avg_pool(1, 2, 2),       L::conv3d(1, 3, 3, 32), L::relu(),
                           L::avg_pool(1, 2, 2),       L::conv3d(1, 3, 3, 32), L::relu(),
                           L::max_pool(1, H / 4, W / 4), L::flatten(),          L::affine(num_classes)};
            break;
        case ArchFamily::full_3d: {
            if (T % 8) throw SpecError("full-3d needs T divisible by 8");
            spec.layers = {norm, L::avg_pool(1, 2, 2),           L::conv3d(3, 3, 3, 8),  L::relu(),
                           L::avg_pool(2, 2, 2),           L::conv3d(3, 3, 3, 16), L::relu(),
                           L::max_pool(2, H / 8, W / 8), L::flatten(),           L::affine(num_classes)};
            break;
        }
        case ArchFamily::late_temporal: {
            if (T % 4) throw SpecError("late-temporal needs T divisible by 4");
            spec.layers = {norm, L::avg_pool(1, 2, 2),        L::conv3d(1, 3, 3, 8),  L::relu(),
                           L::avg_pool(1, 2, 2),        L::conv3d(3, 3, 3, 16), L::relu(),
                           L::max_pool(4, H / 4, W / 4), L::flatten(),          L::affine(num_classes)};
            break;
        }
    }
    infer_shapes(spec.input_shape, spec.layers);
    return spec;
}

Model build_model(const ArchSpec& spec) {
    Model m(spec.input_shape, spec.layers, spec.seed);
    if (m.num_classes() != spec.num_classes) {
        throw SpecError("layer chain yields " + std::to_string(m.num_classes()) + " logits, spec declares " +
                        std::to_string(spec.num_classes));
    }
    return m;
}

nlohmann::json to_json(const ArchSpec& spec) {
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerSpec& l : spec.layers) {
        layers.push_back({{"kind", to_string(l.kind)},
                          {"kernel", {l.kt, l.kh, l.kw}},
                          {"units", l.units},
                          {"shift", l.shift},
                          {"scale", l.scale},
                          {"frozen", l.frozen}});
    }
    return {{"family", to_string(spec.family)},
            {"input_shape", spec.input_shape},
            {"num_classes", spec.num_classes},
            {"layers", layers},
            {"seed", spec.seed}};
}

ArchSpec arch_from_json(const nlohmann::json& j) {
    try {
        ArchSpec spec;
        spec.family = arch_family_from_string(j.at("family").get<std::string>());
        spec.input_shape = j.at("input_shape").get<Shape>();
        spec.num_classes = j.at("num_classes").get<std::size_t>();
        spec.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& lj : j.at("layers")) {
            LayerSpec l;
            l.kind = layer_kind_from_string(lj.at("kind").get<std::string>());
            const auto k = lj.at("kernel").get<std::vector<std::size_t>>();
            if (k.size() != 3) throw SpecError("layer kernel must have 3 extents");
            l.kt = k[0];
            l.kh = k[1];
            l.kw = k[2];
            l.units = lj.at("units").get<std::size_t>();
            l.shift = lj.value("shift", 0.0);
            l.scale = lj.value("scale", 1.0);
            l.frozen = lj.value("frozen", false);
            spec.layers.push_back(l);
        }
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("malformed architecture record: ") + e.what());
    }
}

}  // namespace ttlab::modelzoo
