#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "activeseg/experiment.hpp"
#include "activeseg/mhd.hpp"
#include "cli.hpp"
#include "small_config.hpp"

using namespace activeseg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "activeseg");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

struct Workspace {
    fs::path dir;
    fs::path config;
    explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("activeseg_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        config = dir / "config.json";
        std::ofstream(config) << config_to_json(small_config()).dump(2);
    }
    ~Workspace() { fs::remove_all(dir); }
};

} // namespace

TEST_CASE("help and usage errors") {
    CHECK(cli({"run", "--help"}).code == 0);
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({}).code == 1);
    CHECK(cli({"run", "--no-such-flag"}).code == 1);
    CHECK(cli({"frobnicate"}).code == 1);
    CHECK(cli({"evaluate", "--pred", "/no/such/file.mhd", "--ref", "/no/such/file.mhd"}).code == 1);
    const Outcome bad_arms = cli({"run", "--out", "/tmp/unused", "--arms", "uvs,xyz"});
    CHECK(bad_arms.code == 1);
    CHECK(bad_arms.err.find("--arms") != std::string::npos);
}

TEST_CASE("generate is byte-identical for the same seed") {
    Workspace w("generate");
    REQUIRE(cli({"generate", "--config", w.config.string(), "--seed", "7", "--out", (w.dir / "a").string()}).code == 0);
    REQUIRE(cli({"generate", "--config", w.config.string(), "--seed", "7", "--out", (w.dir / "b").string()}).code == 0);
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(w.dir / "a")) {
        if (!e.is_regular_file()) continue;
        const fs::path rel = fs::relative(e.path(), w.dir / "a");
        CHECK(read_file(e.path()) == read_file(w.dir / "b" / rel));
        ++files;
    }
    CHECK(files == 1 + 2 * (9 + 2 + 3)); // manifest + image and label of every volume
    REQUIRE(cli({"generate", "--config", w.config.string(), "--seed", "8", "--out", (w.dir / "c").string()}).code == 0);
    CHECK(read_file(w.dir / "a" / "manifest.json") != read_file(w.dir / "c" / "manifest.json"));
}

TEST_CASE("train, uncertainty, evaluate and report") {
    Workspace w("pipeline");
    const fs::path data = w.dir / "data";
    REQUIRE(cli({"generate", "--config", w.config.string(), "--out", data.string()}).code == 0);
    const std::string manifest = (data / "manifest.json").string();

    const fs::path ck = w.dir / "model.ckpt";
    const Outcome t = cli({"train", "--config", w.config.string(), "--manifest", manifest, "--volumes", "0,3", "--out",
                           ck.string()});
    REQUIRE(t.code == 0);
    CHECK(t.out.find("best_val_jaccard=") != std::string::npos);
    CHECK(fs::exists(ck));
    CHECK(cli({"train", "--manifest", manifest, "--volumes", "0,99", "--out", ck.string()}).code == 1);
    CHECK(cli({"train", "--manifest", manifest, "--volumes", "0,x", "--out", ck.string()}).code == 1);

    const std::string image = (data / "volumes" / "test-000_image.mhd").string();
    const std::string label = (data / "volumes" / "test-000_label.mhd").string();
    const Outcome u = cli({"uncertainty", "--checkpoint", ck.string(), "--image", image, "--samples", "3", "--out",
                           (w.dir / "unc").string()});
    REQUIRE(u.code == 0);
    CHECK(fs::exists(w.dir / "unc" / "entropy.mhd"));
    const std::string profile = read_file(w.dir / "unc" / "profile.csv");
    CHECK(profile.rfind("z,mean_entropy,peak\n", 0) == 0);
    CHECK(read_mhd_scalar(w.dir / "unc" / "entropy.mhd").dims() == read_mhd_scalar(image).dims());

    const Outcome e = cli({"evaluate", "--pred", label, "--ref", label});
    REQUIRE(e.code == 0);
    CHECK(e.out == "dice,rve_pct,msd_mm,hd_mm,undefined_flags\n1,0,0,0,\n");

    // geometry mismatch is a data error
    LabelVolume other(Dims{2, 2, 2}, Spacing{});
    write_mhd(w.dir / "small.mhd", other);
    CHECK(cli({"evaluate", "--pred", (w.dir / "small.mhd").string(), "--ref", label}).code == 2);

    std::vector<CaseRow> rows;
    for (int c = 0; c < 6; ++c) {
        MetricSet m{0.8 + 0.01 * c, 3.0, 1.0, 2.0 + c, 0};
        rows.push_back({"test-" + std::to_string(c), "uvs", 1, m});
        m.dice -= 0.05;
        rows.push_back({"test-" + std::to_string(c), "rvs", 1, m});
    }
    write_file_atomic(w.dir / "cases.csv", cases_csv(rows));
    const Outcome rep = cli({"report", "--cases", (w.dir / "cases.csv").string()});
    REQUIRE(rep.code == 0);
    CHECK(rep.out == summary_csv(summarize_cases(rows)));
    REQUIRE(cli({"report", "--cases", (w.dir / "cases.csv").string(), "--out", (w.dir / "summary.csv").string()}).code ==
            0);
    CHECK(read_file(w.dir / "summary.csv") == rep.out);
    write_file_atomic(w.dir / "broken.csv", "nope\n");
    CHECK(cli({"report", "--cases", (w.dir / "broken.csv").string()}).code == 2);
}

TEST_CASE("run writes the report set") {
    Workspace w("run");
    const fs::path out = w.dir / "out";
    const Outcome r = cli({"run", "--config", w.config.string(), "--arms", "rss", "--iterations", "1", "--out",
                           out.string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"cases.csv", "summary.csv", "steps.csv", "log.txt", "manifest.json"}) CHECK(fs::exists(out / f));
}
