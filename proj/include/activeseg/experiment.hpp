#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "activeseg/config.hpp"
#include "activeseg/manifest.hpp"
#include "activeseg/reports.hpp"
#include "activeseg/sampling.hpp"

namespace activeseg {

struct DatasetCase {
    std::string name; // e.g. "pool-007"
    Split split = Split::pool;
    std::size_t id = 0;
    std::uint64_t seed = 0;
    ScalarVolume image;
    LabelVolume label;
};

struct Dataset {
    std::vector<DatasetCase> pool, val, test;
};

/// Seed of volume `id` of a split: first word of derive_rng(seed, {"dataset", split, id}).
std::uint64_t volume_seed(std::uint64_t master_seed, Split split, std::size_t id);
/// Phantom generation followed by resampling to cfg.resample_to.
DatasetCase make_case(const ExperimentConfig& cfg, Split split, std::size_t id);
Dataset make_dataset(const ExperimentConfig& cfg);

/// Writes volumes/<name>_image.mhd and volumes/<name>_label.mhd under `dir`
/// plus dir/manifest.json.
Manifest write_dataset(const Dataset& ds, const std::filesystem::path& dir, std::uint64_t master_seed);
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// The initial fully annotated volumes: a uniform draw without replacement
/// from the pool, returned in ascending id order.
std::vector<VolumeId> draw_initial_volumes(std::size_t pool_count, std::size_t k, std::uint64_t master_seed);

/// Slice budget of the slice-sampling arms. A fixed budget wins; otherwise
/// N_S is the expected liver slices of one volume iteration (volumes per
/// iteration times the mean over the initial volumes) over the divisor.
std::size_t slice_budget_for(const BudgetRule& rule, const PoolState& initial_pool,
                             const std::vector<VolumeId>& initial_ids);

struct IterationReport {
    std::string strategy;
    std::size_t iteration = 0;
    Ledger ledger;
    LedgerDelta delta;
    std::optional<std::size_t> slice_budget;
    bool exhausted = false;
    std::size_t steps_run = 0;
    std::size_t best_step = 0;
    double best_val_jaccard = 0.0;
    std::vector<TrainLogEntry> train_log;
    std::vector<CaseRow> cases;
    nlohmann::json pool_state; // null for models without an annotation state
};

struct RunResult {
    std::vector<IterationReport> reports;
    std::vector<std::pair<std::string, std::string>> failed_arms; // (arm, error)
    std::vector<std::string> log;
};

/// The whole protocol on an in-memory dataset. When `volume_dir` is given,
/// test-set probability maps and predictions are written there.
RunResult run_experiment(const ExperimentConfig& cfg, const Dataset& ds,
                         const std::optional<std::filesystem::path>& volume_dir = std::nullopt);

/// Generates the dataset, runs the protocol and writes every report under
/// out_dir: manifest.json, volumes/, state/, cases.csv, summary.csv,
/// steps.csv, log.txt and config.json. A failed arm leaves
/// state/<arm>.partial behind.
RunResult run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

std::string steps_csv(const std::vector<IterationReport>& reports);

inline constexpr const char* steps_csv_header =
    "strategy,iteration,steps_run,best_step,best_val_jaccard,slices,liver_slices,volumes,slice_budget,"
    "effort_units,exhausted";

} // namespace activeseg
