#include "activeseg/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "activeseg/error.hpp"
#include "activeseg/mhd.hpp"
#include "activeseg/parallel.hpp"
#include "activeseg/phantom.hpp"
#include "activeseg/uncertainty.hpp"

namespace activeseg {

namespace fs = std::filesystem;

std::uint64_t volume_seed(std::uint64_t master_seed, Split split, std::size_t id) {
    return derive_rng(master_seed, {"dataset", split_name(split), id}).at(0);
}

namespace {

std::string case_name(Split split, std::size_t id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%03zu", split_name(split), id);
    return buf;
}

std::string fixed(double x, int digits = 6) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string ledger_text(const Ledger& l) {
    return std::to_string(l.slices) + "/" + std::to_string(l.liver_slices) + "/" + std::to_string(l.volumes);
}

} // namespace

DatasetCase make_case(const ExperimentConfig& cfg, Split split, std::size_t id) {
    DatasetCase c;
    c.name = case_name(split, id);
    c.split = split;
    c.id = id;
    c.seed = volume_seed(cfg.seed, split, id);
    Phantom p = generate_phantom(cfg.phantom, c.seed);
    c.image = resample_trilinear(p.image, cfg.resample_to);
    c.label = resample_labels_nearest(p.label, cfg.resample_to);
    return c;
}

Dataset make_dataset(const ExperimentConfig& cfg) {
    Dataset ds;
    for (std::size_t i = 0; i < cfg.pool_count; ++i) ds.pool.push_back(make_case(cfg, Split::pool, i));
    for (std::size_t i = 0; i < cfg.val_count; ++i) ds.val.push_back(make_case(cfg, Split::val, i));
    for (std::size_t i = 0; i < cfg.test_count; ++i) ds.test.push_back(make_case(cfg, Split::test, i));
    return ds;
}

Manifest write_dataset(const Dataset& ds, const fs::path& dir, std::uint64_t master_seed) {
    fs::create_directories(dir / "volumes");
    Manifest m;
    m.seed = master_seed;
    for (const auto* split : {&ds.pool, &ds.val, &ds.test}) {
        for (const DatasetCase& c : *split) {
            ManifestEntry e{c.id, c.name, c.split, "volumes/" + c.name + "_image.mhd",
                            "volumes/" + c.name + "_label.mhd", c.seed};
            write_mhd(dir / e.image, c.image);
            write_mhd(dir / e.label, c.label);
            m.volumes.push_back(std::move(e));
        }
    }
    save_manifest(dir / "manifest.json", m);
    return m;
}

Dataset load_dataset(const fs::path& manifest_path) {
    const Manifest m = load_manifest(manifest_path);
    const fs::path dir = manifest_path.parent_path();
    Dataset ds;
    for (const ManifestEntry& e : m.volumes) {
        DatasetCase c;
        c.name = e.name;
        c.split = e.split;
        c.id = e.id;
        c.seed = e.seed;
        c.image = read_mhd_scalar(dir / e.image);
        c.label = read_mhd_label(dir / e.label);
        if (!c.image.same_geometry(c.label)) throw ParseError(e.name, "image and label geometry differ");
        (e.split == Split::pool ? ds.pool : e.split == Split::val ? ds.val : ds.test).push_back(std::move(c));
    }
    return ds;
}

std::vector<VolumeId> draw_initial_volumes(std::size_t pool_count, std::size_t k, std::uint64_t master_seed) {
    if (k > pool_count) throw InvalidArgument("draw_initial_volumes: more volumes requested than the pool holds");
    std::vector<VolumeId> ids(pool_count);
    for (std::size_t i = 0; i < pool_count; ++i) ids[i] = i;
    RngStream rng = derive_rng(master_seed, {"initial-volumes"});
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform_index(pool_count - i));
        std::swap(ids[i], ids[j]);
    }
    ids.resize(k);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::size_t slice_budget_for(const BudgetRule& rule, const PoolState& pool, const std::vector<VolumeId>& initial_ids) {
    if (rule.slice_budget > 0) return rule.slice_budget;
    if (initial_ids.empty()) throw InvalidArgument("slice_budget_for: no initial volumes");
    std::vector<std::size_t> per_iteration;
    for (VolumeId id : initial_ids) per_iteration.push_back(rule.volumes_per_iteration * pool.liver_slice_count(id));
    return compute_slice_budget(per_iteration, rule.liver_slice_divisor, rule.rounding_granularity);
}

namespace {

class Runner {
public:
    Runner(const ExperimentConfig& cfg, const Dataset& ds, const std::optional<fs::path>& volume_dir)
        : cfg_(cfg), ds_(ds), volume_dir_(volume_dir) {
        for (const DatasetCase& c : ds_.val) val_.push_back({std::cref(c.image), std::cref(c.label)});
    }

    RunResult run() {
        if (ds_.pool.size() != cfg_.pool_count || ds_.val.size() != cfg_.val_count || ds_.test.size() != cfg_.test_count)
            throw InvalidArgument("run_experiment: dataset does not match the configured split sizes");
        std::vector<LabelVolume> refs;
        for (const DatasetCase& c : ds_.pool) refs.push_back(c.label);
        PoolState initial_pool(std::move(refs));
        const auto initial_ids = draw_initial_volumes(cfg_.pool_count, cfg_.initial_volumes, cfg_.seed);
        initial_pool.annotate(VolumeSelection{initial_ids});

        std::string ids_text;
        for (VolumeId id : initial_ids) ids_text += " " + std::to_string(id);
        log("dataset pool=" + std::to_string(cfg_.pool_count) + " val=" + std::to_string(cfg_.val_count) +
            " test=" + std::to_string(cfg_.test_count) + " seed=" + std::to_string(cfg_.seed));
        log("initial volumes:" + ids_text);

        const TrainResult initial = train_on(initial_pool, cfg_.train, derive_rng(cfg_.seed, {"train", "initial"}).at(0));
        report("initial", 0, initial_pool, {}, std::nullopt, false, initial);

        if (cfg_.pool_baseline) {
            const TrainResult pool = train_on_full_pool(cfg_.train, derive_rng(cfg_.seed, {"train", "pool"}).at(0));
            report("pool", 0, std::nullopt, {}, std::nullopt, false, pool);
        }

        const bool slice_arm = std::any_of(cfg_.arms.begin(), cfg_.arms.end(),
                                           [](Strategy s) { return !is_volume_strategy(s); });
        std::size_t n_s = 0;
        if (slice_arm) {
            n_s = slice_budget_for(cfg_.budget, initial_pool, initial_ids);
            log("slice budget N_S=" + std::to_string(n_s));
        }

        std::map<Strategy, PoolState> final_pools;
        for (Strategy s : cfg_.arms) {
            PoolState pool = initial_pool;
            try {
                run_arm(s, pool, initial.best, n_s);
                final_pools.emplace(s, std::move(pool));
            } catch (const std::exception& e) {
                fail(strategy_name(s), e.what());
            }
        }

        if (cfg_.converged) {
            for (Strategy s : cfg_.arms) {
                const auto it = final_pools.find(s);
                if (it == final_pools.end()) continue;
                const std::string name = std::string(strategy_name(s)) + "_converged";
                try {
                    const TrainResult r = train_on(it->second, cfg_.converged_train,
                                                   derive_rng(cfg_.seed, {"train", name}).at(0));
                    report(name, cfg_.iterations, it->second, {}, std::nullopt, false, r);
                } catch (const std::exception& e) {
                    fail(name, e.what());
                }
            }
            if (cfg_.pool_baseline) {
                try {
                    const TrainResult r = train_on_full_pool(cfg_.converged_train,
                                                             derive_rng(cfg_.seed, {"train", "pool_converged"}).at(0));
                    report("pool_converged", cfg_.iterations, std::nullopt, {}, std::nullopt, false, r);
                } catch (const std::exception& e) {
                    fail("pool_converged", e.what());
                }
            }
        }
        return std::move(result_);
    }

private:
    void log(const std::string& line) { result_.log.push_back(line); }

    void fail(const std::string& arm, const std::string& what) {
        result_.failed_arms.emplace_back(arm, what);
        log("arm " + arm + " aborted: " + what);
    }

    TrainResult train_on(const PoolState& pool, TrainConfig tc, std::uint64_t seed) {
        std::vector<PartialLabels> labels;
        std::vector<VolumeId> ids = pool.annotated_volumes();
        labels.reserve(ids.size());
        for (VolumeId id : ids) labels.push_back(pool.partial_labels(id));
        std::vector<TrainCase> cases;
        for (std::size_t i = 0; i < ids.size(); ++i)
            cases.push_back({std::cref(ds_.pool[ids[i]].image), std::cref(labels[i])});
        tc.seed = seed;
        return train(cases, val_, cfg_.features, tc);
    }

    TrainResult train_on_full_pool(TrainConfig tc, std::uint64_t seed) {
        std::vector<PartialLabels> labels;
        labels.reserve(ds_.pool.size());
        for (const DatasetCase& c : ds_.pool) labels.push_back(PartialLabels::full(c.label));
        std::vector<TrainCase> cases;
        for (std::size_t i = 0; i < ds_.pool.size(); ++i) cases.push_back({std::cref(ds_.pool[i].image), std::cref(labels[i])});
        tc.seed = seed;
        return train(cases, val_, cfg_.features, tc);
    }

    void run_arm(Strategy s, PoolState& pool, const MlpParams& initial_model, std::size_t n_s) {
        const std::string name = strategy_name(s);
        MlpParams model = initial_model;
        for (std::size_t it = 1; it <= cfg_.iterations; ++it) {
            RngStream select_rng = derive_rng(cfg_.seed, {"arm", name, it, "select"});
            Selection sel;
            std::optional<std::size_t> budget;
            bool exhausted = false;
            std::string picked;
            switch (s) {
            case Strategy::uvs: {
                std::map<VolumeId, double> u;
                for (VolumeId id : pool.eligible_volumes()) {
                    const EntropyVolume e = entropy_of(model, name, it, id);
                    const LabelVolume mask = threshold(predict(model, ds_.pool[id].image, cfg_.features));
                    u[id] = volume_uncertainty(e, mask).value;
                }
                sel = select_uvs(pool, u, cfg_.budget.volumes_per_iteration);
                break;
            }
            case Strategy::rvs:
                sel = select_rvs(pool, select_rng, cfg_.budget.volumes_per_iteration);
                break;
            case Strategy::uss: {
                std::map<VolumeId, SliceUncertaintyProfile> profiles;
                for (VolumeId id : pool.eligible_volumes()) {
                    SliceUncertaintyProfile p = slice_uncertainty_profile(entropy_of(model, name, it, id));
                    p.peaks = find_peaks(p.values, cfg_.peak_distance);
                    profiles.emplace(id, std::move(p));
                }
                auto ss = select_uss(pool, profiles, n_s);
                budget = n_s;
                exhausted = ss.exhausted;
                sel = std::move(ss);
                break;
            }
            case Strategy::rss: {
                auto ss = select_rss(pool, select_rng, n_s);
                budget = n_s;
                exhausted = ss.exhausted;
                sel = std::move(ss);
                break;
            }
            }
            if (const auto* vs = std::get_if<VolumeSelection>(&sel)) {
                for (VolumeId id : vs->ids) picked += " " + std::to_string(id);
            } else {
                picked = " " + std::to_string(std::get<SliceSelection>(sel).slices.size()) + " slices";
            }
            const LedgerDelta delta = pool.annotate(sel);
            log("arm " + name + " iteration " + std::to_string(it) + " selected" + picked + (exhausted ? " (exhausted)" : ""));
            const TrainResult r = train_on(pool, cfg_.train, derive_rng(cfg_.seed, {"arm", name, it, "train"}).at(0));
            report(name, it, pool, delta, budget, exhausted, r);
            model = r.best;
        }
    }

    EntropyVolume entropy_of(const MlpParams& model, const std::string& arm, std::size_t it, VolumeId id) {
        const std::uint64_t seed = derive_rng(cfg_.seed, {"arm", arm, it, "mc", id}).at(0);
        return predictive_entropy(mc_sample(model, ds_.pool[id].image, cfg_.features, cfg_.mc_samples, seed));
    }

    void report(const std::string& strategy, std::size_t iteration, const std::optional<PoolState>& pool,
                const LedgerDelta& delta, std::optional<std::size_t> budget, bool exhausted, const TrainResult& r) {
        IterationReport rep;
        rep.strategy = strategy;
        rep.iteration = iteration;
        if (pool) {
            rep.ledger = pool->ledger();
            rep.pool_state = pool_state_to_json(*pool, strategy, iteration);
        } else {
            // Every pool volume fully annotated.
            for (const DatasetCase& c : ds_.pool) {
                rep.ledger.slices += c.label.dims().nz;
                for (std::size_t z = 0; z < c.label.dims().nz; ++z) {
                    const auto sl = c.label.slice(z);
                    rep.ledger.liver_slices += std::find(sl.begin(), sl.end(), std::uint8_t{1}) != sl.end();
                }
            }
            rep.ledger.volumes = ds_.pool.size();
        }
        rep.delta = delta;
        rep.slice_budget = budget;
        rep.exhausted = exhausted;
        rep.steps_run = r.steps_run;
        rep.best_step = r.best_step;
        rep.best_val_jaccard = r.best_val_jaccard;
        rep.train_log = r.log;

        double dice_sum = 0.0;
        for (const DatasetCase& c : ds_.test) {
            const ProbVolume prob = predict(r.best, c.image, cfg_.features);
            const LabelVolume pred = threshold(prob);
            rep.cases.push_back({c.name, strategy, iteration, evaluate_case(pred, c.label)});
            dice_sum += rep.cases.back().metrics.dice;
            if (volume_dir_) {
                const fs::path dir = *volume_dir_ / (strategy + "-it" + std::to_string(iteration));
                fs::create_directories(dir);
                write_mhd(dir / (c.name + "_prob.mhd"), prob, ElementType::float64);
                write_mhd(dir / (c.name + "_pred.mhd"), pred);
            }
        }
        log("model " + strategy + " iteration " + std::to_string(iteration) + ": steps=" + std::to_string(r.steps_run) +
            " best_step=" + std::to_string(r.best_step) + " val_jaccard=" + fixed(r.best_val_jaccard) +
            " ledger=" + ledger_text(rep.ledger) + " mean_test_dice=" +
            fixed(ds_.test.empty() ? 0.0 : dice_sum / static_cast<double>(ds_.test.size())));
        result_.reports.push_back(std::move(rep));
    }

    const ExperimentConfig& cfg_;
    const Dataset& ds_;
    std::optional<fs::path> volume_dir_;
    std::vector<ValidationCase> val_;
    RunResult result_;
};

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const Dataset& ds, const std::optional<fs::path>& volume_dir) {
    cfg.validate();
    set_thread_count(cfg.threads);
    return Runner(cfg, ds, volume_dir).run();
}

std::string steps_csv(const std::vector<IterationReport>& reports) {
    std::string out = std::string(steps_csv_header) + "\n";
    for (const IterationReport& r : reports) {
        out += r.strategy + "," + std::to_string(r.iteration) + "," + std::to_string(r.steps_run) + "," +
               std::to_string(r.best_step) + "," + format_real(r.best_val_jaccard) + "," +
               std::to_string(r.ledger.slices) + "," + std::to_string(r.ledger.liver_slices) + "," +
               std::to_string(r.ledger.volumes) + "," + (r.slice_budget ? std::to_string(*r.slice_budget) : "NA") +
               "," + format_real(effort_units(r.delta)) + "," + (r.exhausted ? "1" : "0") + "\n";
    }
    return out;
}

RunResult run(const ExperimentConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    set_thread_count(cfg.threads);
    fs::create_directories(out_dir / "state");
    const Dataset ds = make_dataset(cfg);
    write_dataset(ds, out_dir, cfg.seed);
    write_file_atomic(out_dir / "config.json", config_to_json(cfg).dump(2) + "\n");

    std::optional<fs::path> volume_dir;
    if (cfg.keep_volumes) volume_dir = out_dir / "predictions";
    RunResult result = run_experiment(cfg, ds, volume_dir);

    std::vector<CaseRow> cases;
    for (const IterationReport& r : result.reports) {
        cases.insert(cases.end(), r.cases.begin(), r.cases.end());
        if (!r.pool_state.is_null())
            write_file_atomic(out_dir / "state" / (r.strategy + "-it" + std::to_string(r.iteration) + ".json"),
                              r.pool_state.dump(2) + "\n");
    }
    for (const auto& [arm, what] : result.failed_arms)
        write_file_atomic(out_dir / "state" / (arm + ".partial"), what + "\n");

    std::string log;
    for (const std::string& line : result.log) log += line + "\n";
    for (const IterationReport& r : result.reports)
        for (const TrainLogEntry& e : r.train_log)
            log += "train " + r.strategy + " iteration " + std::to_string(r.iteration) + " step " +
                   std::to_string(e.step) + " loss=" + format_real(e.loss) + " val_jaccard=" +
                   format_real(e.val_jaccard) + "\n";

    write_file_atomic(out_dir / "cases.csv", cases_csv(cases));
    write_file_atomic(out_dir / "summary.csv", summary_csv(summarize_cases(cases)));
    write_file_atomic(out_dir / "steps.csv", steps_csv(result.reports));
    write_file_atomic(out_dir / "log.txt", log);
    return result;
}

} // namespace activeseg
