#include "ttlab/xferbench/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "ttlab/errors.hpp"
#include "ttlab/gradcore/ops.hpp"
#include "ttlab/io/container.hpp"

namespace ttlab::xferbench {

namespace fs = std::filesystem;
using nlohmann::json;
using ttattack::AttackConfig;

std::string to_string(Role r) {
    switch (r) {
        case Role::white_box: return "white-box";
        case Role::black_box: return "black-box";
        case Role::both: return "both";
    }
    return "unknown";
}

Role role_from_string(std::string_view s) {
    for (auto r : {Role::white_box, Role::black_box, Role::both}) {
        if (to_string(r) == s) return r;
    }
    throw ConfigError("unknown model role '" + std::string(s) + "' (expected white-box, black-box or both)");
}

void ExperimentConfig::validate(bool check_paths) const {
    if (models.empty()) throw ConfigError("config lists no models");
    std::vector<std::string> ids;
    for (const auto& m : models) {
        if (m.id.empty()) throw ConfigError("model with empty id");
        if (std::find(ids.begin(), ids.end(), m.id) != ids.end()) throw ConfigError("duplicate model id '" + m.id + "'");
        ids.push_back(m.id);
    }
    const auto attackers = std::count_if(models.begin(), models.end(), [](const ModelEntry& m) { return m.attacks(); });
    if (attackers == 0) throw ConfigError("config has no white-box model");
    for (const auto& wb : models) {
        if (!wb.attacks()) continue;
        const bool other = std::any_of(models.begin(), models.end(),
                                       [&](const ModelEntry& m) { return m.defends() && m.id != wb.id; });
        if (!other) throw ConfigError("white-box model '" + wb.id + "' has no black-box model to transfer to");
    }
    if (seeds.empty()) throw ConfigError("config needs at least one seed");
    if (workers == 0) throw ConfigError("workers must be at least 1");
    if (check_paths) {
        if (!fs::is_regular_file(dataset)) throw IoError("dataset not found: " + dataset.string());
        for (const auto& m : models) {
            if (!fs::is_regular_file(m.path)) throw IoError("checkpoint for '" + m.id + "' not found: " + m.path.string());
        }
    }
}

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

template <class T, class F>
std::vector<T> list_of(const json& j, const char* key, F conv) {
    std::vector<T> out;
    if (!j.contains(key)) return out;
    for (const auto& v : j.at(key)) out.push_back(conv(v));
    return out;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j, const fs::path& base_dir) {
    ExperimentConfig cfg;
    try {
        if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
        static const std::vector<std::string> known{"dataset", "models",  "attacks", "ablations", "analyses",
                                                    "eval_size", "seed", "seeds",   "workers",   "output"};
        for (const auto& [k, v] : j.items()) {
            if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown config key '" + k + "'");
        }
        cfg.dataset = resolve(j.at("dataset").get<std::string>(), base_dir);
        for (const auto& m : j.at("models")) {
            ModelEntry e;
            e.id = m.at("id").get<std::string>();
            e.path = resolve(m.at("path").get<std::string>(), base_dir);
            e.role = role_from_string(m.value("role", std::string("both")));
            cfg.models.push_back(e);
        }
        cfg.attacks = list_of<AttackConfig>(j, "attacks", [](const json& a) { return ttattack::attack_config_from_json(a); });
        if (j.contains("ablations")) {
            const json& a = j.at("ablations");
            if (a.contains("base")) cfg.ablations.base = ttattack::attack_config_from_json(a.at("base"));
            cfg.ablations.shift_lengths = list_of<std::size_t>(a, "shift_lengths", [](const json& v) { return v.get<std::size_t>(); });
            cfg.ablations.weights = list_of<ttattack::WeightKind>(
                a, "weights", [](const json& v) { return ttattack::weight_kind_from_string(v.get<std::string>()); });
            cfg.ablations.strategies = list_of<ttattack::ShiftKind>(
                a, "strategies", [](const json& v) { return ttattack::shift_kind_from_string(v.get<std::string>()); });
        }
        cfg.analyses = list_of<temppattern::Method>(
            j, "analyses", [](const json& v) { return temppattern::method_from_string(v.get<std::string>()); });
        cfg.eval_size = j.value("eval_size", cfg.eval_size);
        if (j.contains("seeds")) {
            cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        } else if (j.contains("seed")) {
            cfg.seeds = {j.at("seed").get<std::uint64_t>()};
        }
        cfg.workers = j.value("workers", cfg.workers);
        if (j.contains("output")) cfg.output = resolve(j.at("output").get<std::string>(), base_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad experiment config: ") + e.what());
    } catch (const SpecError& e) {
        throw ConfigError(e.what());
    }
    cfg.validate(false);
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    json models = json::array();
    for (const auto& m : cfg.models) models.push_back({{"id", m.id}, {"path", m.path.string()}, {"role", to_string(m.role)}});
    json attacks = json::array();
    for (const auto& a : cfg.attacks) attacks.push_back(ttattack::to_json(a));
    json j{{"dataset", cfg.dataset.string()}, {"models", models},     {"attacks", attacks},
           {"eval_size", cfg.eval_size},      {"seeds", cfg.seeds},   {"workers", cfg.workers},
           {"output", cfg.output.string()}};
    json an = json::array();
    for (auto m : cfg.analyses) an.push_back(temppattern::to_string(m));
    j["analyses"] = an;
    if (!cfg.ablations.empty()) {
        json w = json::array(), s = json::array();
        for (auto k : cfg.ablations.weights) w.push_back(std::string(ttattack::to_string(k)));
        for (auto k : cfg.ablations.strategies) s.push_back(std::string(ttattack::to_string(k)));
        j["ablations"] = {{"base", ttattack::to_json(cfg.ablations.base)},
                          {"shift_lengths", cfg.ablations.shift_lengths},
                          {"weights", w},
                          {"strategies", s}};
    }
    return j;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return experiment_config_from_json(j, path.parent_path());
}

std::string config_hash(const json& j) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<LoadedModel> load_models(const ExperimentConfig& cfg) {
    std::vector<LoadedModel> out;
    for (const auto& e : cfg.models) {
        auto ck = modelzoo::load_checkpoint(e.path);
        Model m = ck.model();
        out.push_back({e, std::move(ck), std::move(m)});
    }
    return out;
}

std::vector<const synthvid::LabeledClip*> select_eval_set(std::span<LoadedModel> models,
                                                          std::span<const synthvid::LabeledClip* const> candidates,
                                                          std::size_t n, std::uint64_t seed) {
    if (n == 0) return {};
    std::map<int, std::vector<std::size_t>> by_class;
    std::vector<std::size_t> correct(models.size(), 0);
    std::size_t eligible = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto& lc = *candidates[c];
        bool all = true;
        for (std::size_t m = 0; m < models.size(); ++m) {
            const bool ok = modelzoo::predict(models[m].model, lc.clip) == lc.label;
            correct[m] += ok;
            all = all && ok;
        }
        if (all) {
            by_class[lc.label.index].push_back(c);
            ++eligible;
        }
    }
    if (eligible < n) {
        std::size_t weakest = 0;
        for (std::size_t m = 1; m < models.size(); ++m) {
            if (correct[m] < correct[weakest]) weakest = m;
        }
        throw ProtocolError("only " + std::to_string(eligible) + " eval clips are correct under every model, " +
                            std::to_string(n) + " requested; weakest model '" + models[weakest].entry.id + "' gets " +
                            std::to_string(correct[weakest]) + "/" + std::to_string(candidates.size()));
    }
    std::mt19937_64 rng(seed);
    for (auto& [cls, idx] : by_class) std::shuffle(idx.begin(), idx.end(), rng);
    // Round robin over classes keeps the sample balanced where possible.
    std::vector<std::size_t> picked;
    for (std::size_t round = 0; picked.size() < n; ++round) {
        for (auto& [cls, idx] : by_class) {
            if (round < idx.size() && picked.size() < n) picked.push_back(idx[round]);
        }
    }
    std::sort(picked.begin(), picked.end());
    std::vector<const synthvid::LabeledClip*> out;
    for (auto i : picked) out.push_back(candidates[i]);
    return out;
}

double compute_asr(std::span<const ttattack::AdversarialResult> results, Model& target) {
    if (results.empty()) throw ProtocolError("compute_asr on an empty result list");
    std::size_t fooled = 0;
    for (const auto& r : results) fooled += modelzoo::predict(target, r.adversarial) != r.label;
    return static_cast<double>(fooled) / static_cast<double>(results.size());
}

AttackBatch attack_clips(const Model& white_box, std::span<const synthvid::LabeledClip* const> clips,
                         const AttackConfig& cfg, std::size_t workers) {
    const std::size_t n = clips.size();
    std::vector<std::optional<ttattack::AdversarialResult>> slots(n);
    auto work = [&](std::size_t begin, std::size_t stride) {
        Model m = white_box;
        for (std::size_t i = begin; i < n; i += stride) {
            try {
                slots[i] = ttattack::tt_attack(m, clips[i]->clip, clips[i]->label, cfg);
            } catch (const NumericFault&) {
                // left empty, counted below
            }
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    }
    AttackBatch out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!slots[i]) {
            ++out.excluded;
            continue;
        }
        out.results.push_back(std::move(*slots[i]));
        out.clip_ids.push_back(clips[i]->id);
    }
    return out;
}

std::string Table::to_csv() const {
    std::ostringstream os;
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
        os << '\n';
    }
    return os.str();
}

namespace {

std::string fmt(double v, int digits = 2) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

AttackConfig effective(const AttackConfig& a, std::uint64_t seed) {
    AttackConfig e = a;
    e.strategy.seed = a.strategy.seed + seed;
    return e;
}

json row_json(const TransferRow& r, const std::vector<std::string>& ids) {
    json asr = json::object();
    for (std::size_t i = 0; i < ids.size(); ++i) asr[ids[i]] = r.asr[i];
    const json a = ttattack::to_json(r.attack);
    return {{"seed", r.seed},
            {"white_box", r.white_box},
            {"attack", r.attack.label()},
            {"attack_config", a},
            {"attack_hash", config_hash(a)},
            {"asr", asr},
            {"black_box_mean", r.black_box_mean},
            {"clips", r.clips},
            {"excluded", r.excluded},
            {"max_perturbation", r.max_perturbation},
            {"in_box", r.in_box}};
}

struct Context {
    const ExperimentConfig& cfg;
    synthvid::Dataset data;
    std::vector<LoadedModel> models;
    Report report;
};

Context prepare(const ExperimentConfig& cfg) {
    cfg.validate(true);
    Context ctx{cfg, synthvid::load(cfg.dataset), load_models(cfg), {}};
    const std::size_t frames = ctx.data.spec.frames;
    for (const auto& a : cfg.attacks) a.validate(frames);
    if (!cfg.ablations.empty()) {
        cfg.ablations.base.validate(frames);
        for (auto L : cfg.ablations.shift_lengths) {
            if (L >= frames) throw ConfigError("ablation shift length " + std::to_string(L) + " needs L < frames");
        }
    }
    const auto& clip_shape = ctx.data.spec.clip_shape();
    Report& r = ctx.report;
    r.config = to_json(cfg);
    r.config.erase("workers");  // parallelism never changes results
    r.config.erase("output");
    r.config_hash = config_hash(r.config);
    r.seeds = cfg.seeds;
    r.workers = cfg.workers;
    const auto eval = ctx.data.split(synthvid::Split::eval);
    for (auto& m : ctx.models) {
        if (m.model.input_shape() != clip_shape)
            throw ConfigError("model '" + m.entry.id + "' expects " + shape_str(m.model.input_shape()) +
                              " clips, dataset has " + shape_str(clip_shape));
        if (m.model.num_classes() != ctx.data.spec.num_classes())
            throw ConfigError("model '" + m.entry.id + "' has the wrong class count for this dataset");
        r.model_ids.push_back(m.entry.id);
        r.model_arch.push_back(std::string(modelzoo::to_string(m.checkpoint.arch.family)));
        r.model_roles.push_back(to_string(m.entry.role));
        r.model_eval_accuracy.push_back(modelzoo::accuracy(m.model, eval));
    }
    return ctx;
}

std::vector<std::vector<const synthvid::LabeledClip*>> eval_sets(Context& ctx) {
    const auto eval = ctx.data.split(synthvid::Split::eval);
    std::vector<std::vector<const synthvid::LabeledClip*>> sets;
    for (auto s : ctx.cfg.seeds) {
        sets.push_back(select_eval_set(ctx.models, eval, ctx.cfg.eval_size, s));
        std::vector<std::string> ids;
        for (auto* c : sets.back()) ids.push_back(c->id);
        ctx.report.eval_sets.push_back(std::move(ids));
    }
    return sets;
}

// Grid attacks followed by ablation variants, without repeats.
std::vector<AttackConfig> attack_list(const ExperimentConfig& cfg) {
    std::vector<AttackConfig> out;
    auto add = [&](const AttackConfig& a) {
        if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    };
    for (const auto& a : cfg.attacks) add(a);
    const auto& ab = cfg.ablations;
    for (auto L : ab.shift_lengths) {
        auto a = ab.base;
        a.shift_length = L;
        add(a);
    }
    for (auto k : ab.weights) {
        auto a = ab.base;
        a.weights = k;
        add(a);
    }
    for (auto k : ab.strategies) {
        auto a = ab.base;
        a.strategy.kind = k;
        add(a);
    }
    return out;
}

void run_correlations(Context& ctx, const std::vector<std::vector<const synthvid::LabeledClip*>>& sets) {
    std::vector<temppattern::NamedModel> named;
    for (auto& m : ctx.models) named.push_back({m.entry.id, &m.model});
    for (std::size_t s = 0; s < sets.size(); ++s) {
        for (auto method : ctx.cfg.analyses) {
            ctx.report.correlations.emplace_back(
                ctx.cfg.seeds[s], temppattern::model_correlation(named, sets[s], method, ctx.cfg.workers));
        }
    }
}

// Mean over the rows that match `pick`, per model column.
std::vector<double> column_means(const std::vector<TransferRow>& rows, const std::function<bool(const TransferRow&)>& pick,
                                 std::size_t cols, double* bb_mean) {
    std::vector<double> acc(cols, 0.0);
    double bb = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
        if (!pick(r)) continue;
        for (std::size_t c = 0; c < cols; ++c) acc[c] += r.asr[c];
        bb += r.black_box_mean;
        ++n;
    }
    for (auto& v : acc) v = n ? v / static_cast<double>(n) : 0.0;
    if (bb_mean) *bb_mean = n ? bb / static_cast<double>(n) : 0.0;
    return acc;
}

void build_tables(Context& ctx) {
    Report& r = ctx.report;
    const auto& cfg = ctx.cfg;
    const std::size_t nm = r.model_ids.size();

    // Method table: average black-box ASR (%) per white-box architecture.
    std::vector<std::string> families;
    for (std::size_t m = 0; m < nm; ++m) {
        if (ctx.models[m].entry.attacks() &&
            std::find(families.begin(), families.end(), r.model_arch[m]) == families.end())
            families.push_back(r.model_arch[m]);
    }
    auto arch_of = [&](const std::string& id) {
        return r.model_arch[std::find(r.model_ids.begin(), r.model_ids.end(), id) - r.model_ids.begin()];
    };
    Table methods{"methods", {"attack"}, {}};
    for (const auto& f : families) methods.columns.push_back(f);
    methods.columns.push_back("average");
    for (const auto& a : cfg.attacks) {
        std::vector<std::string> row{a.label()};
        for (const auto& f : families) {
            double bb = 0.0;
            column_means(r.transfer, [&](const TransferRow& t) { return t.attack == a && arch_of(t.white_box) == f; }, nm, &bb);
            row.push_back(fmt(100.0 * bb));
        }
        double all = 0.0;
        column_means(r.transfer, [&](const TransferRow& t) { return t.attack == a; }, nm, &all);
        row.push_back(fmt(100.0 * all));
        methods.rows.push_back(row);
    }
    r.tables.push_back(methods);

    // Ablations: one row per (white-box, value), ASR (%) per model, seeds averaged.
    auto ablation = [&](const std::string& name, const std::string& key, auto values, auto apply, auto show) {
        if (values.empty()) return;
        Table t{name, {"white_box", key}, {}};
        for (const auto& id : r.model_ids) t.columns.push_back(id);
        t.columns.push_back("black_box_mean");
        for (std::size_t w = 0; w < nm; ++w) {
            if (!ctx.models[w].entry.attacks()) continue;
            for (const auto& v : values) {
                AttackConfig a = cfg.ablations.base;
                apply(a, v);
                double bb = 0.0;
                auto means = column_means(
                    r.transfer, [&](const TransferRow& row) { return row.attack == a && row.white_box == r.model_ids[w]; },
                    nm, &bb);
                std::vector<std::string> row{r.model_ids[w], show(v)};
                for (double m : means) row.push_back(fmt(100.0 * m));
                row.push_back(fmt(100.0 * bb));
                t.rows.push_back(row);
            }
        }
        r.tables.push_back(t);
    };
    ablation("ablation_shift_length", "L", cfg.ablations.shift_lengths,
             [](AttackConfig& a, std::size_t L) { a.shift_length = L; }, [](std::size_t L) { return std::to_string(L); });
    ablation("ablation_weights", "weights", cfg.ablations.weights,
             [](AttackConfig& a, ttattack::WeightKind k) { a.weights = k; },
             [](ttattack::WeightKind k) { return std::string(ttattack::to_string(k)); });
    ablation("ablation_strategy", "strategy", cfg.ablations.strategies,
             [](AttackConfig& a, ttattack::ShiftKind k) { a.strategy.kind = k; },
             [](ttattack::ShiftKind k) { return std::string(ttattack::to_string(k)); });
}

}  // namespace

Report run_transfer_experiment(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    Context ctx = prepare(cfg);
    Report& r = ctx.report;
    const auto sets = eval_sets(ctx);
    const auto attacks = attack_list(cfg);
    const std::size_t nm = ctx.models.size();

    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        for (std::size_t w = 0; w < nm; ++w) {
            if (!ctx.models[w].entry.attacks()) continue;
            for (const auto& base : attacks) {
                const AttackConfig a = effective(base, cfg.seeds[s]);
                AttackBatch batch = attack_clips(ctx.models[w].model, sets[s], a, cfg.workers);
                TransferRow row;
                row.seed = cfg.seeds[s];
                row.white_box = ctx.models[w].entry.id;
                row.attack = base;
                row.clips = batch.results.size();
                row.excluded = batch.excluded;
                for (const auto& res : batch.results) {
                    row.max_perturbation = std::max(row.max_perturbation, res.perturbation.max_abs());
                    for (double v : res.adversarial.tensor().values()) row.in_box = row.in_box && v >= 0.0 && v <= 1.0;
                }
                std::size_t nbb = 0;
                for (std::size_t m = 0; m < nm; ++m) {
                    const double asr = batch.results.empty() ? 0.0 : compute_asr(batch.results, ctx.models[m].model);
                    row.asr.push_back(asr);
                    if (m != w && ctx.models[m].entry.defends()) {
                        row.black_box_mean += asr;
                        ++nbb;
                    }
                }
                row.black_box_mean /= static_cast<double>(nbb);
                r.excluded += row.excluded;
                r.transfer.push_back(std::move(row));
            }
        }
    }
    build_tables(ctx);
    run_correlations(ctx, sets);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::move(ctx.report);
}

Report run_analysis(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    Context ctx = prepare(cfg);
    if (cfg.analyses.empty()) throw ConfigError("analyze needs at least one method under \"analyses\"");
    const auto sets = eval_sets(ctx);
    run_correlations(ctx, sets);
    ctx.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::move(ctx.report);
}

namespace {

// Mean off-diagonal rho split by whether the two models share an architecture.
std::pair<double, double> arch_split(const temppattern::CorrelationMatrix& m, const std::vector<std::string>& arch) {
    double same = 0.0, cross = 0.0;
    std::size_t ns = 0, nc = 0;
    for (std::size_t a = 0; a < m.rho.size(); ++a) {
        for (std::size_t b = a + 1; b < m.rho.size(); ++b) {
            if (arch[a] == arch[b]) {
                same += m.rho[a][b];
                ++ns;
            } else {
                cross += m.rho[a][b];
                ++nc;
            }
        }
    }
    return {ns ? same / static_cast<double>(ns) : std::nan(""), nc ? cross / static_cast<double>(nc) : std::nan("")};
}

json nullable(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

json to_json(const Report& r) {
    json models = json::array();
    for (std::size_t i = 0; i < r.model_ids.size(); ++i) {
        models.push_back({{"id", r.model_ids[i]},
                          {"arch", r.model_arch[i]},
                          {"role", r.model_roles[i]},
                          {"eval_accuracy", r.model_eval_accuracy[i]}});
    }
    json sets = json::array();
    for (std::size_t s = 0; s < r.eval_sets.size(); ++s) sets.push_back({{"seed", r.seeds[s]}, {"clips", r.eval_sets[s]}});
    json transfer = json::array();
    for (const auto& row : r.transfer) transfer.push_back(row_json(row, r.model_ids));
    json tables = json::object();
    for (const auto& t : r.tables) tables[t.name] = {{"columns", t.columns}, {"rows", t.rows}};
    json corr = json::array();
    for (const auto& [seed, m] : r.correlations) {
        json c = temppattern::to_json(m);
        c["seed"] = seed;
        const auto [same, cross] = arch_split(m, r.model_arch);
        c["same_arch_mean"] = nullable(same);
        c["cross_arch_mean"] = nullable(cross);
        corr.push_back(c);
    }
    return {{"schema", "ttlab.report"},
            {"schema_version", 1},
            {"config", r.config},
            {"config_hash", r.config_hash},
            {"seeds", r.seeds},
            {"models", models},
            {"eval_sets", sets},
            {"eval_set_note",
             "eval sets sample up to 8 clips per class, all correctly classified by every model, instead of one per class"},
            {"transfer", transfer},
            {"tables", tables},
            {"correlations", corr},
            {"excluded", r.excluded}};
}

namespace {

std::string transfer_csv(const Report& r) {
    Table t{"transfer", {"seed", "white_box", "attack", "attack_hash", "clips", "excluded"}, {}};
    for (const auto& id : r.model_ids) t.columns.push_back(id);
    t.columns.push_back("black_box_mean");
    for (const auto& row : r.transfer) {
        std::vector<std::string> cells{std::to_string(row.seed), row.white_box, row.attack.label(),
                                       config_hash(ttattack::to_json(row.attack)), std::to_string(row.clips),
                                       std::to_string(row.excluded)};
        for (double v : row.asr) cells.push_back(fmt(v, 6));
        cells.push_back(fmt(row.black_box_mean, 6));
        t.rows.push_back(cells);
    }
    return t.to_csv();
}

std::string summary(const Report& r) {
    std::ostringstream os;
    os << "config " << r.config_hash << "\n\nmodels\n";
    for (std::size_t i = 0; i < r.model_ids.size(); ++i) {
        os << "  " << r.model_ids[i] << "  " << r.model_arch[i] << "  " << r.model_roles[i] << "  eval acc "
           << fmt(100.0 * r.model_eval_accuracy[i]) << "%\n";
    }
    os << "\neval sets: " << (r.eval_sets.empty() ? 0 : r.eval_sets.front().size()) << " clips per seed, seeds";
    for (auto s : r.seeds) os << ' ' << s;
    os << "\nexcluded clips: " << r.excluded << "\n";
    for (const auto& t : r.tables) {
        os << '\n' << t.name << '\n';
        std::vector<std::size_t> width(t.columns.size());
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            width[c] = t.columns[c].size();
            for (const auto& row : t.rows) width[c] = std::max(width[c], row[c].size());
        }
        auto line = [&](const std::vector<std::string>& cells) {
            os << ' ';
            for (std::size_t c = 0; c < cells.size(); ++c) os << ' ' << cells[c] << std::string(width[c] - cells[c].size(), ' ');
            os << '\n';
        };
        line(t.columns);
        for (const auto& row : t.rows) line(row);
    }
    for (const auto& [seed, m] : r.correlations) {
        const auto [same, cross] = arch_split(m, r.model_arch);
        os << "\ncorrelation " << temppattern::to_string(m.method) << " seed " << seed << " (" << m.clip_count
           << " clips): same-arch " << fmt(same, 4) << ", cross-arch " << fmt(cross, 4) << '\n';
    }
    return os.str();
}

void put(const fs::path& path, const std::string& text) {
    try {
        io::write_file(path, text);
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace

void emit_report(const Report& r, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    put(dir / "report.json", to_json(r).dump(2) + "\n");
    put(dir / "transfer.csv", transfer_csv(r));
    for (const auto& t : r.tables) put(dir / (t.name + ".csv"), t.to_csv());
    for (const auto& [seed, m] : r.correlations) {
        put(dir / ("correlation_" + temppattern::to_string(m.method) + "_seed" + std::to_string(seed) + ".csv"), m.to_csv());
    }
    put(dir / "summary.txt", summary(r));
    const json timing{{"wall_seconds", r.wall_seconds}, {"workers", r.workers}};
    put(dir / "timing.json", timing.dump(2) + "\n");
}

std::vector<fs::path> write_adversarial_sets(const ExperimentConfig& cfg, const fs::path& dir) {
    Context ctx = prepare(cfg);
    if (cfg.attacks.empty()) throw ConfigError("attack needs at least one entry under \"attacks\"");
    const auto sets = eval_sets(ctx);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<fs::path> written;
    const std::uint64_t seed = cfg.seeds.front();
    for (auto& wb : ctx.models) {
        if (!wb.entry.attacks()) continue;
        for (const auto& base : cfg.attacks) {
            const AttackConfig a = effective(base, seed);
            AttackBatch batch = attack_clips(wb.model, sets.front(), a, cfg.workers);
            io::Container c;
            json clips = json::array();
            for (std::size_t i = 0; i < batch.results.size(); ++i) {
                clips.push_back({{"id", batch.clip_ids[i]}, {"label", batch.results[i].label.index}});
                c.records.push_back({batch.clip_ids[i], batch.results[i].adversarial.tensor()});
            }
            const json aj = ttattack::to_json(base);
            c.manifest = {{"format", "ttlab.adversarial"},
                          {"white_box", wb.entry.id},
                          {"checkpoint", wb.entry.path.string()},
                          {"dataset", cfg.dataset.string()},
                          {"attack", aj},
                          {"attack_hash", config_hash(aj)},
                          {"config_hash", ctx.report.config_hash},
                          {"seed", seed},
                          {"excluded", batch.excluded},
                          {"clips", clips}};
            const fs::path p = dir / (wb.entry.id + "_" + config_hash(aj) + ".ttc");
            io::save(c, p);
            written.push_back(p);
        }
    }
    return written;
}

}  // namespace ttlab::xferbench
