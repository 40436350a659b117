#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "activeseg/features.hpp"
#include "activeseg/learner.hpp"
#include "activeseg/phantom.hpp"
#include "activeseg/sampling.hpp"

namespace activeseg {

enum class Strategy { uvs, rvs, uss, rss };

const char* strategy_name(Strategy s) noexcept;
Strategy parse_strategy(const std::string& name);
bool is_volume_strategy(Strategy s) noexcept;
/// Parses "uvs,rvs,uss,rss" (order kept, duplicates rejected).
std::vector<Strategy> parse_strategy_list(const std::string& csv);

struct ExperimentConfig {
    PhantomSpec phantom{};
    /// Volumes are resampled to this spacing after generation (no-op when equal).
    Spacing resample_to{1.0, 1.0, 1.5};

    std::size_t pool_count = 40;
    std::size_t val_count = 4;
    std::size_t test_count = 12;
    std::size_t initial_volumes = 5;
    std::size_t iterations = 5;
    std::vector<Strategy> arms{Strategy::uvs, Strategy::rvs, Strategy::uss, Strategy::rss};
    bool pool_baseline = true;

    BudgetRule budget{};
    FeatureConfig features{};
    TrainConfig train{};
    TrainConfig converged_train = default_converged_train();
    bool converged = false;

    std::size_t mc_samples = 20;
    std::size_t peak_distance = 5;
    std::uint64_t seed = 0;
    bool keep_volumes = false;
    std::size_t threads = 1;

    static TrainConfig default_converged_train();

    /// Throws InvalidArgument naming the violated constraint.
    void validate() const;
};

/// Strict loader: unknown keys and wrong types are rejected with the JSON
/// path of the offending field. Missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

} // namespace activeseg
