// ttlab command line: data generation, training, attacks and benchmarks.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ttlab/errors.hpp"
#include "ttlab/modelzoo/train.hpp"
#include "ttlab/synthvid/dataset.hpp"
#include "ttlab/xferbench/experiment.hpp"
#include "ttlab/xferbench/verify.hpp"

namespace fs = std::filesystem;
using namespace ttlab;

namespace {

enum Exit { ok = 0, config_error = 1, io_error = 2, numeric_fault = 3 };

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot read " + p.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

int gen_data(const fs::path& spec_path, const fs::path& out) {
    synthvid::DatasetSpec spec;
    try {
        spec = synthvid::dataset_spec_from_json(read_json(spec_path));
        spec.validate();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(spec_path.string() + ": " + e.what());
    }
    const auto ds = synthvid::generate(spec);
    synthvid::save(ds, out);
    std::printf("wrote %zu clips (%zu classes, %s) to %s\n", ds.clips.size(), spec.num_classes(),
                shape_str(spec.clip_shape()).c_str(), out.string().c_str());
    return ok;
}

int train(const std::string& arch_arg, const fs::path& data_path, const fs::path& out, std::optional<std::uint64_t> seed,
          std::optional<std::size_t> epochs, std::optional<double> lr) {
    const auto data = synthvid::load(data_path);
    modelzoo::TrainConfig cfg;
    if (seed) cfg.seed = *seed;
    if (epochs) cfg.epochs = *epochs;
    if (lr) cfg.learning_rate = *lr;
    modelzoo::ArchSpec arch;
    try {
        if (fs::is_regular_file(arch_arg)) {
            arch = modelzoo::arch_from_json(read_json(arch_arg));
        } else {
            arch = modelzoo::make_arch(modelzoo::arch_family_from_string(arch_arg), data.spec.clip_shape(),
                                       data.spec.num_classes(), cfg.seed);
        }
        cfg.validate();
    } catch (const SpecError& e) {
        throw ConfigError(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(e.what());
    }
    const auto ck = modelzoo::train(arch, data, cfg, [](std::size_t e, double loss) {
        std::printf("epoch %3zu  loss %.4f\n", e + 1, loss);
        std::fflush(stdout);
    });
    modelzoo::save_checkpoint(ck, out);
    std::printf("train acc %.4f  eval acc %.4f  -> %s\n", ck.meta.train_accuracy, ck.meta.eval_accuracy, out.string().c_str());
    return ok;
}

xferbench::ExperimentConfig experiment(const fs::path& path, std::optional<std::uint64_t> seed,
                                       std::optional<std::size_t> workers) {
    auto cfg = xferbench::load_experiment_config(path);
    if (seed) cfg.seeds = {*seed};
    if (workers) cfg.workers = *workers;
    cfg.validate(false);
    return cfg;
}

int verify(std::uint64_t seed, std::size_t coords) {
    const auto results = xferbench::run_verify(seed, coords);
    bool all = true;
    for (const auto& r : results) {
        std::printf("%-4s %-28s %s\n", r.passed ? "ok" : "FAIL", r.name.c_str(), r.detail.c_str());
        all = all && r.passed;
    }
    return all ? ok : numeric_fault;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ttlab: temporal-translation attacks on small video classifiers"};
    app.require_subcommand(1);

    fs::path spec_path, out, data_path, config_path;
    std::string arch;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs, workers;
    std::optional<double> lr;
    std::size_t coords = 20;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset from a JSON spec");
    gen->add_option("spec", spec_path, "dataset spec (JSON)")->required();
    gen->add_option("out", out, "output container")->required();

    auto* tr = app.add_subcommand("train", "train one zoo architecture");
    tr->add_option("arch", arch, "early-pool, full-3d, late-temporal or an arch JSON file")->required();
    tr->add_option("data", data_path, "dataset container")->required();
    tr->add_option("out", out, "output checkpoint")->required();
    tr->add_option("--seed", seed, "init and shuffle seed");
    tr->add_option("--epochs", epochs, "training epochs");
    tr->add_option("--lr", lr, "learning rate");

    std::vector<CLI::App*> exp_cmds;
    for (auto [name, help] : {std::pair{"attack", "write adversarial sets for every white-box model"},
                              std::pair{"analyze", "temporal-pattern correlation matrices"},
                              std::pair{"bench", "full transfer experiment and report"}}) {
        auto* c = app.add_subcommand(name, help);
        c->add_option("config", config_path, "experiment config (JSON)")->required();
        c->add_option("out", out, "output directory")->required();
        c->add_option("--seed", seed, "replace the seed list with this seed");
        c->add_option("--workers", workers, "worker threads");
        exp_cmds.push_back(c);
    }

    auto* ver = app.add_subcommand("verify", "gradient, shift and weight oracle checks");
    ver->add_option("--seed", seed, "sampling seed");
    ver->add_option("--coords", coords, "coordinates per gradient check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*gen) return gen_data(spec_path, out);
        if (*tr) return train(arch, data_path, out, seed, epochs, lr);
        if (*ver) return verify(seed.value_or(0), coords);
        const auto cfg = experiment(config_path, seed, workers);
        if (*exp_cmds[0]) {
            for (const auto& p : xferbench::write_adversarial_sets(cfg, out)) std::printf("%s\n", p.string().c_str());
            return ok;
        }
        const auto report = *exp_cmds[1] ? xferbench::run_analysis(cfg) : xferbench::run_transfer_experiment(cfg);
        xferbench::emit_report(report, out);
        std::fputs(io::read_file(out / "summary.txt").c_str(), stdout);
        return ok;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const SpecError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const ProtocolError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const FormatError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return io_error;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return io_error;
    } catch (const NumericFault& e) {
        std::cerr << "numeric fault: " << e.what() << '\n';
        return numeric_fault;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return io_error;
    }
}
