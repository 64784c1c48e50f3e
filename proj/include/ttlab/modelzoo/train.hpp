#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttlab/modelzoo/arch.hpp"
#include "ttlab/synthvid/dataset.hpp"

namespace ttlab::modelzoo {

struct TrainConfig {
    std::size_t epochs = 16;
    std::size_t batch_size = 16;
    double learning_rate = 0.2;
    std::uint64_t seed = 0;

    // Throws SpecError unless batch size and learning rate are positive.
    // Zero epochs is allowed and returns the initialization.
    void validate() const;
};

struct TrainMetadata {
    std::size_t epochs = 0;
    std::size_t batch_size = 0;
    double learning_rate = 0.0;
    std::uint64_t seed = 0;
    double initial_loss = 0.0;         // mean train loss before the first update
    std::vector<double> epoch_losses;  // mean minibatch loss seen during each epoch
    double final_loss = 0.0;           // mean train loss after the last update
    double train_accuracy = 0.0;
    double eval_accuracy = 0.0;

    bool operator==(const TrainMetadata&) const = default;
};

struct Checkpoint {
    ArchSpec arch;
    std::vector<NamedTensor> params;
    TrainMetadata meta;

    // Rebuilds the model and installs the stored parameters.
    Model model() const;
    bool operator==(const Checkpoint&) const = default;
};

// Argmax of the logits, ties to the lowest class index.
Label predict(Model& model, const VideoClip& clip);

double accuracy(Model& model, std::span<const synthvid::LabeledClip* const> clips);
double mean_loss(Model& model, std::span<const synthvid::LabeledClip* const> clips);

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Plain mini-batch SGD with a fixed learning rate on the train split,
// shuffled each epoch from cfg.seed. Frozen layers are not updated.
// Throws TrainingFault if the loss becomes non-finite.
Checkpoint train(const ArchSpec& arch, const synthvid::Dataset& data, const TrainConfig& cfg,
                 const EpochCallback& on_epoch = {});

// Same, continuing from an existing model (used for layer-freezing checks).
Checkpoint train(Model model, const ArchSpec& arch, const synthvid::Dataset& data, const TrainConfig& cfg,
                 const EpochCallback& on_epoch = {});

io::Container to_container(const Checkpoint& ckpt);
Checkpoint checkpoint_from_container(const io::Container& c);

// The reference grid: every family at two seed variants, ids like
// "full-3d-1". Architecture seed is 100 + variant, shuffle seed is variant.
struct ZooMember {
    ArchFamily family = ArchFamily::full_3d;
    std::uint64_t variant = 0;

    std::string id() const;
};

std::vector<ZooMember> zoo_grid();
ArchSpec zoo_arch(const ZooMember& m, const synthvid::DatasetSpec& data);
TrainConfig zoo_train_config(const ZooMember& m);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ttlab::modelzoo
