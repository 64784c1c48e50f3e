#include "ttlab/synthvid/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "ttlab/errors.hpp"

namespace ttlab::synthvid {

std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::up: return "up";
        case Direction::down: return "down";
        case Direction::left: return "left";
        case Direction::right: return "right";
    }
    return "unknown";
}

std::string_view to_string(Split s) { return s == Split::train ? "train" : "eval"; }

ClassDef DatasetSpec::class_def(std::size_t index) const {
    if (index >= num_classes()) throw InputError("class index " + std::to_string(index) + " out of range");
    return {static_cast<Direction>(index / speeds.size()), speeds[index % speeds.size()]};
}

std::string DatasetSpec::class_name(std::size_t index) const {
    const ClassDef c = class_def(index);
    return std::string(to_string(c.direction)) + "," + std::to_string(c.speed);
}

void DatasetSpec::validate() const {
    if (frames < 8) throw SpecError("dataset needs T >= 8");
    if (height < 16 || width < 16) throw SpecError("dataset needs H, W >= 16");
    if (channels == 0) throw SpecError("dataset needs at least one channel");
    if (speeds.empty()) throw SpecError("dataset needs at least one speed");
    std::set<int> seen;
    for (int s : speeds) {
        if (s <= 0) throw SpecError("speeds must be positive");
        if (!seen.insert(s).second) throw SpecError("duplicate speed " + std::to_string(s));
        // Total displacement over the clip must stay below one lap.
        if (static_cast<std::size_t>(s) * (frames - 1) >= std::min(height, width)) {
            throw SpecError("speed " + std::to_string(s) + " wraps a full lap within " + std::to_string(frames) +
                            " frames");
        }
    }
    if (square == 0 || square >= std::min(height, width)) throw SpecError("square size out of range");
    if (train_per_class == 0 && eval_per_class == 0) throw SpecError("dataset would be empty");
    if (noise < 0.0 || ramp < 0.0 || ramp > 1.0 || background < 0.0 || contrast <= 0.0 ||
        background + contrast > 1.0) {
        throw SpecError("need noise >= 0, ramp in [0, 1], contrast > 0 and background + contrast <= 1");
    }
}

nlohmann::json to_json(const DatasetSpec& s) {
    return {{"frames", s.frames},     {"height", s.height},
            {"width", s.width},       {"channels", s.channels},
            {"speeds", s.speeds},     {"train_per_class", s.train_per_class},
            {"eval_per_class", s.eval_per_class}, {"square", s.square},
            {"background", s.background},         {"contrast", s.contrast},
            {"noise", s.noise},
            {"ramp", s.ramp},         {"seed", s.seed}};
}

DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
    DatasetSpec s;
    try {
        s.frames = j.value("frames", s.frames);
        s.height = j.value("height", s.height);
        s.width = j.value("width", s.width);
        s.channels = j.value("channels", s.channels);
        s.speeds = j.value("speeds", s.speeds);
        s.train_per_class = j.value("train_per_class", s.train_per_class);
        s.eval_per_class = j.value("eval_per_class", s.eval_per_class);
        s.square = j.value("square", s.square);
        s.background = j.value("background", s.background);
        s.contrast = j.value("contrast", s.contrast);
        s.noise = j.value("noise", s.noise);
        s.ramp = j.value("ramp", s.ramp);
        s.seed = j.value("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("malformed dataset spec: ") + e.what());
    }
    return s;
}

std::vector<const LabeledClip*> Dataset::split(Split s) const {
    std::vector<const LabeledClip*> out;
    for (const auto& c : clips) {
        if (c.split == s) out.push_back(&c);
    }
    return out;
}

VideoClip render_clip(const DatasetSpec& spec, ClassDef cls, std::size_t start_y, std::size_t start_x,
                      std::size_t phase, std::mt19937_64* rng) {
    const std::size_t T = spec.frames, H = spec.height, W = spec.width, C = spec.channels;
    Tensor frames(spec.clip_shape(), spec.background);
    long dy = 0, dx = 0;
    switch (cls.direction) {
        case Direction::up: dy = -1; break;
        case Direction::down: dy = 1; break;
        case Direction::left: dx = -1; break;
        case Direction::right: dx = 1; break;
    }
    const long Hl = static_cast<long>(H), Wl = static_cast<long>(W);
    for (std::size_t t = 0; t < T; ++t) {
        const double cycle = static_cast<double>((t + phase) % T) / static_cast<double>(T - 1);
        const double level = spec.background + spec.contrast * (1.0 - spec.ramp * (1.0 - cycle));
        const long oy = static_cast<long>(start_y) + dy * cls.speed * static_cast<long>(t);
        const long ox = static_cast<long>(start_x) + dx * cls.speed * static_cast<long>(t);
        for (std::size_t i = 0; i < spec.square; ++i) {
            for (std::size_t j = 0; j < spec.square; ++j) {
                const long y = ((oy + static_cast<long>(i)) % Hl + Hl) % Hl;
                const long x = ((ox + static_cast<long>(j)) % Wl + Wl) % Wl;
                for (std::size_t c = 0; c < C; ++c) {
                    frames[((t * H + static_cast<std::size_t>(y)) * W + static_cast<std::size_t>(x)) * C + c] = level;
                }
            }
        }
    }
    if (rng && spec.noise > 0.0) {
        std::uniform_real_distribution<double> noise(-spec.noise, spec.noise);
        for (double& v : frames.data()) v = std::clamp(v + noise(*rng), 0.0, 1.0);
    }
    return VideoClip(std::move(frames));
}

Dataset generate(const DatasetSpec& spec) {
    spec.validate();
    Dataset ds{spec, {}};
    for (Split split : {Split::train, Split::eval}) {
        const std::size_t per_class = split == Split::train ? spec.train_per_class : spec.eval_per_class;
        for (std::size_t cls = 0; cls < spec.num_classes(); ++cls) {
            for (std::size_t k = 0; k < per_class; ++k) {
                std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                                  static_cast<std::uint32_t>(split), static_cast<std::uint32_t>(cls),
                                  static_cast<std::uint32_t>(k)};
                std::mt19937_64 rng(seq);
                const std::size_t y0 = std::uniform_int_distribution<std::size_t>(0, spec.height - 1)(rng);
                const std::size_t x0 = std::uniform_int_distribution<std::size_t>(0, spec.width - 1)(rng);
                const std::size_t phase = std::uniform_int_distribution<std::size_t>(0, spec.frames - 1)(rng);
                char id[64];
                std::snprintf(id, sizeof id, "%s-c%zu-%03zu", split == Split::train ? "train" : "eval", cls, k);
                ds.clips.push_back({render_clip(spec, spec.class_def(cls), y0, x0, phase, &rng),
                                    Label{static_cast<int>(cls)}, id, split});
            }
        }
    }
    return ds;
}

io::Container to_container(const Dataset& ds, const nlohmann::json& extra_manifest) {
    io::Container c;
    nlohmann::json clips = nlohmann::json::array();
    for (const auto& lc : ds.clips) {
        clips.push_back({{"id", lc.id}, {"label", lc.label.index}, {"split", to_string(lc.split)}});
        c.records.push_back({lc.id, lc.clip.tensor()});
    }
    c.manifest = {{"format", "ttlab.dataset"},
                  {"spec", to_json(ds.spec)},
                  {"num_classes", ds.spec.num_classes()},
                  {"clips", clips}};
    for (const auto& [k, v] : extra_manifest.items()) c.manifest[k] = v;
    return c;
}

Dataset from_container(const io::Container& c) {
    const auto& m = c.manifest;
    if (m.value("format", "") != "ttlab.dataset") throw FormatError("container is not a ttlab dataset", 0);
    Dataset ds;
    std::size_t declared_classes = 0;
    try {
        ds.spec = dataset_spec_from_json(m.at("spec"));
        declared_classes = m.at("num_classes").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed dataset manifest: ") + e.what(), 0);
    } catch (const SpecError& e) {
        throw FormatError(e.what(), 0);
    }
    if (declared_classes != ds.spec.num_classes()) {
        throw FormatError("manifest declares " + std::to_string(declared_classes) + " classes but the spec defines " +
                              std::to_string(ds.spec.num_classes()),
                          0);
    }
    const auto& clips = m.at("clips");
    if (clips.size() != c.records.size()) {
        throw FormatError("manifest lists " + std::to_string(clips.size()) + " clips but the file holds " +
                              std::to_string(c.records.size()) + " records",
                          0);
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        LabeledClip lc;
        try {
            lc.id = clips[i].at("id").get<std::string>();
            lc.label = Label{clips[i].at("label").get<int>()};
            lc.split = clips[i].at("split").get<std::string>() == "train" ? Split::train : Split::eval;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("malformed clip entry: ") + e.what(), 0);
        }
        if (lc.label.index < 0 || static_cast<std::size_t>(lc.label.index) >= declared_classes) {
            throw FormatError("clip " + lc.id + " has label outside the declared class count", 0);
        }
        if (c.records[i].name != lc.id) throw FormatError("record order does not match manifest at " + lc.id, 0);
        if (!ids.insert(lc.id).second) throw FormatError("duplicate clip id " + lc.id, 0);
        try {
            lc.clip = VideoClip(c.records[i].value);
        } catch (const InputError& e) {
            throw FormatError("clip " + lc.id + ": " + e.what(), 0);
        }
        ds.clips.push_back(std::move(lc));
    }
    return ds;
}

void save(const Dataset& ds, const std::filesystem::path& path) { io::save(to_container(ds), path); }

Dataset load(const std::filesystem::path& path) { return from_container(io::load(path)); }

}  // namespace ttlab::synthvid
