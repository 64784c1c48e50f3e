#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttlab/modelzoo/train.hpp"
#include "ttlab/synthvid/dataset.hpp"
#include "ttlab/temppattern/importance.hpp"
#include "ttlab/ttattack/attack.hpp"

namespace ttlab::xferbench {

enum class Role { white_box, black_box, both };

std::string to_string(Role r);
Role role_from_string(std::string_view s);

struct ModelEntry {
    std::string id;
    std::filesystem::path path;
    Role role = Role::both;

    bool attacks() const { return role != Role::black_box; }
    bool defends() const { return role != Role::white_box; }
};

// Sweeps around a base attack. Empty lists switch a sweep off.
struct Ablations {
    ttattack::AttackConfig base;
    std::vector<std::size_t> shift_lengths;
    std::vector<ttattack::WeightKind> weights;
    std::vector<ttattack::ShiftKind> strategies;

    bool empty() const { return shift_lengths.empty() && weights.empty() && strategies.empty(); }
};

struct ExperimentConfig {
    std::filesystem::path dataset;
    std::vector<ModelEntry> models;
    std::vector<ttattack::AttackConfig> attacks;
    Ablations ablations;
    std::vector<temppattern::Method> analyses;
    std::size_t eval_size = 64;
    // Each seed draws its own eval set and seeds the random strategy.
    std::vector<std::uint64_t> seeds{0};
    std::size_t workers = 1;
    std::filesystem::path output;

    // Throws ConfigError on structural problems. With check_paths, also
    // requires the dataset and every checkpoint to exist.
    void validate(bool check_paths) const;
};

// Relative paths are resolved against base_dir. Throws ConfigError.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const ExperimentConfig& cfg);
// Reads a JSON config file; IoError if unreadable, ConfigError if malformed.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// 64-bit FNV-1a of the compact, key-sorted dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

struct LoadedModel {
    ModelEntry entry;
    modelzoo::Checkpoint checkpoint;
    Model model;
};

std::vector<LoadedModel> load_models(const ExperimentConfig& cfg);

// Seeded, class-balanced sample of n eval clips that every model classifies
// correctly. Throws ProtocolError naming the weakest model if fewer than n
// clips qualify.
std::vector<const synthvid::LabeledClip*> select_eval_set(std::span<LoadedModel> models,
                                                          std::span<const synthvid::LabeledClip* const> candidates,
                                                          std::size_t n, std::uint64_t seed);

// Fraction of adversarial clips the target misclassifies. ProtocolError on
// an empty list.
double compute_asr(std::span<const ttattack::AdversarialResult> results, Model& target);

// Runs `cfg` on every clip with up to `workers` threads. Faulted clips are
// left out of the returned list and counted in `excluded`.
struct AttackBatch {
    std::vector<ttattack::AdversarialResult> results;
    std::vector<std::string> clip_ids;
    std::size_t excluded = 0;
};
AttackBatch attack_clips(const Model& white_box, std::span<const synthvid::LabeledClip* const> clips,
                         const ttattack::AttackConfig& cfg, std::size_t workers);

struct TransferRow {
    std::uint64_t seed = 0;
    std::string white_box;
    ttattack::AttackConfig attack;
    std::vector<double> asr;  // aligned with Report::model_ids
    double black_box_mean = 0.0;
    std::size_t clips = 0;
    std::size_t excluded = 0;
    double max_perturbation = 0.0;  // max |x_adv - x| over the row
    bool in_box = true;             // every x_adv inside [0, 1]
};

// A labelled grid of numbers mirrored to CSV.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
};

struct Report {
    nlohmann::json config;
    std::string config_hash;
    std::vector<std::string> model_ids;
    std::vector<std::string> model_arch;
    std::vector<std::string> model_roles;
    std::vector<double> model_eval_accuracy;
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<std::string>> eval_sets;  // clip ids per seed
    std::vector<TransferRow> transfer;
    std::vector<Table> tables;
    std::vector<std::pair<std::uint64_t, temppattern::CorrelationMatrix>> correlations;
    std::size_t excluded = 0;
    double wall_seconds = 0.0;  // written to timing.json only
    std::size_t workers = 1;
};

nlohmann::json to_json(const Report& r);

// Attacks, transfer evaluation, ablations and analyses for every seed.
// Config and IO problems surface before the first attack.
Report run_transfer_experiment(const ExperimentConfig& cfg);

// Correlation matrices only (the `analyze` subcommand).
Report run_analysis(const ExperimentConfig& cfg);

// report.json, transfer.csv, one CSV per table and correlation matrix,
// summary.txt and timing.json. Everything except timing.json is a pure
// function of the report contents.
void emit_report(const Report& report, const std::filesystem::path& dir);

// Adversarial clips of the first seed for every white-box model and attack,
// one container per (white-box, attack) whose manifest records where it came from.
std::vector<std::filesystem::path> write_adversarial_sets(const ExperimentConfig& cfg,
                                                          const std::filesystem::path& dir);

}  // namespace ttlab::xferbench
