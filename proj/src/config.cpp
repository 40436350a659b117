#include "activeseg/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "activeseg/error.hpp"

namespace activeseg {

using json = nlohmann::json;

const char* strategy_name(Strategy s) noexcept {
    switch (s) {
    case Strategy::uvs: return "uvs";
    case Strategy::rvs: return "rvs";
    case Strategy::uss: return "uss";
    case Strategy::rss: return "rss";
    }
    return "unknown";
}

Strategy parse_strategy(const std::string& name) {
    for (Strategy s : {Strategy::uvs, Strategy::rvs, Strategy::uss, Strategy::rss})
        if (name == strategy_name(s)) return s;
    throw InvalidArgument("unknown strategy '" + name + "' (expected uvs, rvs, uss or rss)");
}

bool is_volume_strategy(Strategy s) noexcept { return s == Strategy::uvs || s == Strategy::rvs; }

std::vector<Strategy> parse_strategy_list(const std::string& csv) {
    std::vector<Strategy> out;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        const Strategy s = parse_strategy(item);
        if (std::find(out.begin(), out.end(), s) != out.end())
            throw InvalidArgument("strategy '" + item + "' listed twice");
        out.push_back(s);
    }
    if (out.empty()) throw InvalidArgument("no strategy listed");
    return out;
}

TrainConfig ExperimentConfig::default_converged_train() {
    TrainConfig t;
    t.max_steps = 8000;
    t.stop_on_plateau = true;
    return t;
}

void ExperimentConfig::validate() const {
    phantom.validate();
    if (!resample_to.valid()) throw InvalidArgument("config: resample_to spacing must be positive");
    if (pool_count == 0 || val_count == 0 || test_count == 0)
        throw InvalidArgument("config: every split needs at least one volume");
    if (initial_volumes == 0 || initial_volumes > pool_count)
        throw InvalidArgument("config: initial_volumes must be in [1, pool_count]");
    budget.validate();
    features.validate();
    train.validate();
    converged_train.validate();
    if (mc_samples == 0) throw InvalidArgument("config: mc_samples must be >= 1");
    if (peak_distance == 0) throw InvalidArgument("config: peak_distance must be >= 1");
    if (threads == 0) throw InvalidArgument("config: threads must be >= 1");
    std::set<Strategy> seen(arms.begin(), arms.end());
    if (seen.size() != arms.size()) throw InvalidArgument("config: duplicate strategy arm");
    const bool volume_arm = std::any_of(arms.begin(), arms.end(), is_volume_strategy);
    if (volume_arm && pool_count - initial_volumes < budget.volumes_per_iteration * iterations)
        throw InvalidArgument("config: pool too small for " + std::to_string(iterations) + " iterations of " +
                              std::to_string(budget.volumes_per_iteration) + " volumes after the initial set");
}

namespace {

// Walks a JSON object, tracking the key path for error messages and
// rejecting keys nobody asked for.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ParseError(path_.empty() ? "config" : path_, "expected an object");
    }
    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, _] : j_.items())
            if (!used_.count(key)) throw ParseError(where(key), "unknown key");
    }

    template <typename T>
    void get(const char* key, T& out) {
        used_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ParseError(where(key), std::string("wrong type: ") + e.what());
        }
    }

    void range(const char* key, RealRange& r) {
        std::vector<double> v{r.lo, r.hi};
        get(key, v);
        if (v.size() != 2) throw ParseError(where(key), "expected [lo, hi]");
        r = {v[0], v[1]};
    }

    void count_range(const char* key, std::size_t& lo, std::size_t& hi) {
        std::vector<std::size_t> v{lo, hi};
        get(key, v);
        if (v.size() != 2) throw ParseError(where(key), "expected [min, max]");
        lo = v[0];
        hi = v[1];
    }

    void spacing(const char* key, Spacing& s) {
        std::vector<double> v{s.dx, s.dy, s.dz};
        get(key, v);
        if (v.size() != 3) throw ParseError(where(key), "expected [dx, dy, dz]");
        s = {v[0], v[1], v[2]};
    }

    template <typename Fn>
    void object(const char* key, Fn&& fn) {
        used_.insert(key);
        if (!j_.contains(key)) return;
        Reader sub(j_.at(key), where(key));
        fn(sub);
    }

private:
    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void read_train(Reader& r, TrainConfig& t) {
    r.get("learning_rate", t.adam.learning_rate);
    r.get("beta1", t.adam.beta1);
    r.get("beta2", t.adam.beta2);
    r.get("epsilon", t.adam.epsilon);
    r.get("hidden", t.hidden);
    r.get("dropout", t.dropout);
    r.get("batch_patches", t.batch_patches);
    r.get("patch_size", t.patch_size);
    r.get("stratify", t.stratify);
    r.get("max_steps", t.max_steps);
    r.get("validation_interval", t.validation_interval);
    r.get("stop_on_plateau", t.stop_on_plateau);
    r.get("min_improvement", t.min_improvement);
    r.get("patience_fraction", t.patience_fraction);
}

json train_json(const TrainConfig& t) {
    return {{"learning_rate", t.adam.learning_rate},
            {"beta1", t.adam.beta1},
            {"beta2", t.adam.beta2},
            {"epsilon", t.adam.epsilon},
            {"hidden", t.hidden},
            {"dropout", t.dropout},
            {"batch_patches", t.batch_patches},
            {"patch_size", t.patch_size},
            {"stratify", t.stratify},
            {"max_steps", t.max_steps},
            {"validation_interval", t.validation_interval},
            {"stop_on_plateau", t.stop_on_plateau},
            {"min_improvement", t.min_improvement},
            {"patience_fraction", t.patience_fraction}};
}

} // namespace

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    {
        Reader r(j, "");
        r.get("seed", c.seed);
        r.get("pool_count", c.pool_count);
        r.get("val_count", c.val_count);
        r.get("test_count", c.test_count);
        r.get("initial_volumes", c.initial_volumes);
        r.get("iterations", c.iterations);
        std::vector<std::string> arms;
        for (Strategy s : c.arms) arms.emplace_back(strategy_name(s));
        r.get("arms", arms);
        c.arms.clear();
        for (const auto& a : arms) {
            try {
                c.arms.push_back(parse_strategy(a));
            } catch (const InvalidArgument& e) {
                throw ParseError("arms", e.what());
            }
        }
        r.get("pool_baseline", c.pool_baseline);
        r.get("converged", c.converged);
        r.get("mc_samples", c.mc_samples);
        r.get("peak_distance", c.peak_distance);
        r.get("keep_volumes", c.keep_volumes);
        r.get("threads", c.threads);
        r.spacing("resample_to", c.resample_to);
        r.object("phantom", [&](Reader& p) {
            std::vector<std::size_t> dims{c.phantom.dims.nx, c.phantom.dims.ny, c.phantom.dims.nz};
            p.get("dims", dims);
            if (dims.size() != 3) throw ParseError("phantom.dims", "expected [nx, ny, nz]");
            c.phantom.dims = {dims[0], dims[1], dims[2]};
            p.spacing("spacing", c.phantom.spacing);
            p.count_range("organ_count", c.phantom.organ_count_min, c.phantom.organ_count_max);
            p.range("semi_axis_x", c.phantom.semi_axis_x);
            p.range("semi_axis_y", c.phantom.semi_axis_y);
            p.range("semi_axis_z", c.phantom.semi_axis_z);
            p.count_range("lesion_count", c.phantom.lesion_count_min, c.phantom.lesion_count_max);
            p.range("lesion_radius", c.phantom.lesion_radius);
            p.get("background_mean", c.phantom.background_mean);
            p.get("organ_mean", c.phantom.organ_mean);
            p.get("lesion_mean", c.phantom.lesion_mean);
            p.get("background_sd", c.phantom.background_sd);
            p.get("organ_sd", c.phantom.organ_sd);
            p.get("lesion_sd", c.phantom.lesion_sd);
            p.get("intensity_jitter", c.phantom.intensity_jitter);
            p.get("smoothing_sigma", c.phantom.smoothing_sigma);
        });
        r.object("budget", [&](Reader& b) {
            b.get("volumes_per_iteration", c.budget.volumes_per_iteration);
            b.get("slice_budget", c.budget.slice_budget);
            b.get("liver_slice_divisor", c.budget.liver_slice_divisor);
            b.get("rounding_granularity", c.budget.rounding_granularity);
        });
        r.object("features", [&](Reader& f) {
            f.get("box_scales", c.features.box_scales);
            f.get("include_raw", c.features.include_raw);
            f.get("include_z", c.features.include_z);
            f.get("shift", c.features.shift);
            f.get("scale", c.features.scale);
        });
        r.object("train", [&](Reader& t) { read_train(t, c.train); });
        r.object("converged_train", [&](Reader& t) { read_train(t, c.converged_train); });
    }
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError("config", e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("config", "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("config", e.what());
    }
    return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
    std::vector<std::string> arms;
    for (Strategy s : c.arms) arms.emplace_back(strategy_name(s));
    const PhantomSpec& p = c.phantom;
    return {
        {"seed", c.seed},
        {"pool_count", c.pool_count},
        {"val_count", c.val_count},
        {"test_count", c.test_count},
        {"initial_volumes", c.initial_volumes},
        {"iterations", c.iterations},
        {"arms", arms},
        {"pool_baseline", c.pool_baseline},
        {"converged", c.converged},
        {"mc_samples", c.mc_samples},
        {"peak_distance", c.peak_distance},
        {"keep_volumes", c.keep_volumes},
        {"threads", c.threads},
        {"resample_to", {c.resample_to.dx, c.resample_to.dy, c.resample_to.dz}},
        {"phantom",
         {{"dims", {p.dims.nx, p.dims.ny, p.dims.nz}},
          {"spacing", {p.spacing.dx, p.spacing.dy, p.spacing.dz}},
          {"organ_count", {p.organ_count_min, p.organ_count_max}},
          {"semi_axis_x", {p.semi_axis_x.lo, p.semi_axis_x.hi}},
          {"semi_axis_y", {p.semi_axis_y.lo, p.semi_axis_y.hi}},
          {"semi_axis_z", {p.semi_axis_z.lo, p.semi_axis_z.hi}},
          {"lesion_count", {p.lesion_count_min, p.lesion_count_max}},
          {"lesion_radius", {p.lesion_radius.lo, p.lesion_radius.hi}},
          {"background_mean", p.background_mean},
          {"organ_mean", p.organ_mean},
          {"lesion_mean", p.lesion_mean},
          {"background_sd", p.background_sd},
          {"organ_sd", p.organ_sd},
          {"lesion_sd", p.lesion_sd},
          {"intensity_jitter", p.intensity_jitter},
          {"smoothing_sigma", p.smoothing_sigma}}},
        {"budget",
         {{"volumes_per_iteration", c.budget.volumes_per_iteration},
          {"slice_budget", c.budget.slice_budget},
          {"liver_slice_divisor", c.budget.liver_slice_divisor},
          {"rounding_granularity", c.budget.rounding_granularity}}},
        {"features",
         {{"box_scales", c.features.box_scales},
          {"include_raw", c.features.include_raw},
          {"include_z", c.features.include_z},
          {"shift", c.features.shift},
          {"scale", c.features.scale}}},
        {"train", train_json(c.train)},
        {"converged_train", train_json(c.converged_train)},
    };
}

} // namespace activeseg
