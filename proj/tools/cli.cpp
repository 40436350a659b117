#include "cli.hpp"

#include <CLI11.hpp>

#include <ostream>
#include <sstream>

#include "activeseg/checkpoint.hpp"
#include "activeseg/error.hpp"
#include "activeseg/experiment.hpp"
#include "activeseg/mhd.hpp"
#include "activeseg/parallel.hpp"
#include "activeseg/uncertainty.hpp"

namespace activeseg {

namespace fs = std::filesystem;

namespace {

// Bad flag values and config constraint violations.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
};

ExperimentConfig base_config(const CommonOptions& o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.threads) cfg.threads = o.threads;
    return cfg;
}

void check(const ExperimentConfig& cfg) {
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
}

std::vector<std::size_t> parse_ids(const std::string& csv) {
    std::vector<std::size_t> ids;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            ids.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("--volumes: not a volume id: '" + item + "'");
        }
    }
    return ids;
}

void print_metrics(std::ostream& out, const MetricSet& m) {
    out << "dice,rve_pct,msd_mm,hd_mm,undefined_flags\n";
    out << format_real(m.dice);
    for (Metric metric : {Metric::rve, Metric::msd, Metric::hd}) {
        double v = 0.0;
        out << "," << (metric_value(m, metric, v) ? format_real(v) : "NA");
    }
    out << "," << m.flag_string() << "\n";
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Active-learning segmentation simulator on synthetic volumes", "activeseg"};
    app.require_subcommand(1);

    CommonOptions common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "Master seed");
        sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
    };

    std::string out_path;

    auto* generate = app.add_subcommand("generate", "Generate the phantom dataset and its manifest");
    add_common(generate);
    generate->add_option("--out", out_path, "Output directory")->required();

    std::string arms;
    std::optional<std::size_t> iterations;
    bool converged = false, keep_volumes = false;
    auto* run_cmd = app.add_subcommand("run", "Run the full active-learning experiment");
    add_common(run_cmd);
    run_cmd->add_option("--out", out_path, "Output directory")->required();
    run_cmd->add_option("--arms", arms, "Comma-separated strategies (uvs,rvs,uss,rss)");
    run_cmd->add_option("--iterations", iterations, "Active-learning iterations");
    run_cmd->add_flag("--converged", converged, "Add the converged-training phase");
    run_cmd->add_flag("--keep-volumes", keep_volumes, "Keep test-set probability maps and predictions");

    std::string manifest, volumes;
    auto* train_cmd = app.add_subcommand("train", "Train one model on pool volumes of a manifest");
    add_common(train_cmd);
    train_cmd->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--volumes", volumes, "Comma-separated pool ids, fully annotated (default: all)");
    train_cmd->add_option("--out", out_path, "Checkpoint file to write")->required();

    std::string checkpoint, image;
    std::size_t samples = default_mc_samples;
    std::uint64_t mc_seed = 0;
    auto* unc = app.add_subcommand("uncertainty", "Entropy map and slice profile of one volume");
    unc->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
    unc->add_option("--image", image, "Image volume (.mhd)")->required()->check(CLI::ExistingFile);
    unc->add_option("--samples", samples, "MC dropout samples")->check(CLI::PositiveNumber);
    unc->add_option("--seed", mc_seed, "MC dropout seed");
    unc->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
    unc->add_option("--out", out_path, "Output directory")->required();

    std::string pred, ref;
    auto* evaluate = app.add_subcommand("evaluate", "Metrics of a prediction against a reference");
    evaluate->add_option("--pred", pred, "Predicted label volume (.mhd)")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--ref", ref, "Reference label volume (.mhd)")->required()->check(CLI::ExistingFile);

    std::vector<std::string> case_files;
    auto* report = app.add_subcommand("report", "Re-summarize per-case CSV files");
    report->add_option("--cases", case_files, "cases.csv files")->required()->check(CLI::ExistingFile);
    report->add_option("--out", out_path, "summary.csv to write (default: stdout)");

    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (generate->parsed()) {
            const ExperimentConfig cfg = base_config(common);
            check(cfg);
            set_thread_count(cfg.threads);
            const Manifest m = write_dataset(make_dataset(cfg), out_path, cfg.seed);
            out << "wrote " << m.volumes.size() << " volumes and " << (fs::path(out_path) / "manifest.json").string()
                << "\n";
        } else if (run_cmd->parsed()) {
            ExperimentConfig cfg = base_config(common);
            if (!arms.empty()) {
                try {
                    cfg.arms = parse_strategy_list(arms);
                } catch (const InvalidArgument& e) {
                    throw UsageError(std::string("--arms: ") + e.what());
                }
            }
            if (iterations) cfg.iterations = *iterations;
            cfg.converged = cfg.converged || converged;
            cfg.keep_volumes = cfg.keep_volumes || keep_volumes;
            check(cfg);
            const RunResult r = run(cfg, out_path);
            out << "wrote reports for " << r.reports.size() << " models to " << out_path << "\n";
            if (!r.failed_arms.empty()) {
                for (const auto& [arm, what] : r.failed_arms) err << "arm " << arm << " aborted: " << what << "\n";
                return 2;
            }
        } else if (train_cmd->parsed()) {
            ExperimentConfig cfg = base_config(common);
            check(cfg);
            set_thread_count(cfg.threads);
            const Dataset ds = load_dataset(manifest);
            std::vector<std::size_t> ids = volumes.empty() ? std::vector<std::size_t>{} : parse_ids(volumes);
            if (volumes.empty())
                for (std::size_t i = 0; i < ds.pool.size(); ++i) ids.push_back(i);
            std::vector<PartialLabels> labels;
            for (std::size_t id : ids) {
                if (id >= ds.pool.size()) throw UsageError("--volumes: no pool volume " + std::to_string(id));
                labels.push_back(PartialLabels::full(ds.pool[id].label));
            }
            std::vector<TrainCase> cases;
            for (std::size_t i = 0; i < ids.size(); ++i) cases.push_back({std::cref(ds.pool[ids[i]].image), std::cref(labels[i])});
            std::vector<ValidationCase> val;
            for (const DatasetCase& c : ds.val) val.push_back({std::cref(c.image), std::cref(c.label)});
            TrainConfig tc = cfg.train;
            tc.seed = derive_rng(cfg.seed, {"train", "cli"}).at(0);
            const TrainResult r = train(cases, val, cfg.features, tc);
            save_checkpoint(out_path, Checkpoint{r.best, cfg.features});
            out << "steps=" << r.steps_run << " best_step=" << r.best_step
                << " best_val_jaccard=" << format_real(r.best_val_jaccard) << "\n";
        } else if (unc->parsed()) {
            if (common.threads) set_thread_count(common.threads);
            const Checkpoint ck = load_checkpoint(checkpoint);
            const ScalarVolume v = read_mhd_scalar(image);
            const EntropyVolume e = predictive_entropy(mc_sample(ck.params, v, ck.features, samples, mc_seed));
            const LabelVolume mask = threshold(predict(ck.params, v, ck.features));
            const VolumeUncertainty vu = volume_uncertainty(e, mask);
            SliceUncertaintyProfile prof = slice_uncertainty_profile(e);
            prof.peaks = find_peaks(prof.values);
            fs::create_directories(out_path);
            write_mhd(fs::path(out_path) / "entropy.mhd", e, ElementType::float64);
            std::string csv = "z,mean_entropy,peak\n";
            for (std::size_t z = 0; z < prof.values.size(); ++z) {
                const bool peak = std::find(prof.peaks.begin(), prof.peaks.end(), z) != prof.peaks.end();
                csv += std::to_string(z) + "," + format_real(prof.values[z]) + "," + (peak ? "1" : "0") + "\n";
            }
            write_file_atomic(fs::path(out_path) / "profile.csv", csv);
            out << "volume_uncertainty=" << format_real(vu.value)
                << (vu.fell_back_to_all_voxels ? " (empty mask, all voxels)" : "") << " peaks=" << prof.peaks.size()
                << "\n";
        } else if (evaluate->parsed()) {
            const LabelVolume p = read_mhd_label(pred);
            const LabelVolume r = read_mhd_label(ref);
            if (!p.same_geometry(r)) throw ParseError("volumes", "prediction and reference geometry differ");
            print_metrics(out, evaluate_case(p, r));
        } else if (report->parsed()) {
            std::vector<CaseRow> rows;
            for (const std::string& f : case_files) {
                auto part = parse_cases_csv(read_file(f));
                rows.insert(rows.end(), part.begin(), part.end());
            }
            const std::string csv = summary_csv(summarize_cases(rows));
            if (out_path.empty()) out << csv;
            else write_file_atomic(out_path, csv);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace activeseg
