#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttlab/gradcore/video.hpp"
#include "ttlab/io/container.hpp"

namespace ttlab::synthvid {

enum class Direction { up, down, left, right };

std::string_view to_string(Direction d);

// A class is one (direction, speed) pair. Classes are numbered
// direction-major: index = direction * speeds.size() + speed position.
struct ClassDef {
    Direction direction = Direction::right;
    int speed = 1;  // pixels per frame
};

// Moving bright square over a noisy background.
//
// The square's contrast over the background follows a sawtooth of period T:
// it climbs linearly from (1 - ramp) * contrast to `contrast` and drops back,
// starting at a per-clip random phase. The time-averaged image therefore
// still reveals the direction of travel, and a circular temporal shift of a
// clip breaks only one frame transition. Motion wraps toroidally at the
// borders.
struct DatasetSpec {
    std::size_t frames = 16;
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t channels = 1;
    std::vector<int> speeds{1, 2};
    std::size_t train_per_class = 256;
    std::size_t eval_per_class = 16;
    std::size_t square = 5;
    double background = 0.3;
    double contrast = 0.4;
    double noise = 0.05;  // half-width of the i.i.d. uniform pixel noise
    double ramp = 1.0;
    std::uint64_t seed = 0;

    std::size_t num_classes() const noexcept { return 4 * speeds.size(); }
    ClassDef class_def(std::size_t index) const;
    std::string class_name(std::size_t index) const;  // e.g. "right,1"
    Shape clip_shape() const { return {frames, height, width, channels}; }

    // Throws SpecError when the spec cannot produce valid clips.
    void validate() const;

    bool operator==(const DatasetSpec&) const = default;
};

nlohmann::json to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);

enum class Split { train, eval };

std::string_view to_string(Split s);

struct LabeledClip {
    VideoClip clip;
    Label label;
    std::string id;
    Split split = Split::train;

    bool operator==(const LabeledClip&) const = default;
};

struct Dataset {
    DatasetSpec spec;
    std::vector<LabeledClip> clips;

    std::vector<const LabeledClip*> split(Split s) const;
    bool operator==(const Dataset&) const = default;
};

// Renders one clip whose square starts with its top-left corner at
// (start_y, start_x). `rng` drives the background noise; pass nullptr for a
// noise-free clip.
// `phase` is the sawtooth position of frame 0, in frames.
VideoClip render_clip(const DatasetSpec& spec, ClassDef cls, std::size_t start_y, std::size_t start_x,
                      std::size_t phase, std::mt19937_64* rng);

// Deterministic given spec.seed. Clips are ordered train before eval, then by
// class, then by index within the class.
Dataset generate(const DatasetSpec& spec);

io::Container to_container(const Dataset& ds, const nlohmann::json& extra_manifest = nlohmann::json::object());
Dataset from_container(const io::Container& c);

void save(const Dataset& ds, const std::filesystem::path& path);
Dataset load(const std::filesystem::path& path);

}  // namespace ttlab::synthvid
