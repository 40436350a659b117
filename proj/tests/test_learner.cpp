#include <doctest.h>

#include <set>

#include "activeseg/error.hpp"
#include "activeseg/learner.hpp"
#include "activeseg/phantom.hpp"

using namespace activeseg;

namespace {

struct Fixture {
    Phantom a, b, val;
    Fixture() {
        PhantomSpec spec;
        spec.dims = {32, 32, 24};
        spec.semi_axis_x = {6, 9};
        spec.semi_axis_y = {6, 9};
        spec.semi_axis_z = {4, 7};
        a = generate_phantom(spec, 1);
        b = generate_phantom(spec, 2);
        val = generate_phantom(spec, 3);
    }
};

// Annotate only slices z in [lo, hi).
PartialLabels slab(const LabelVolume& ref, std::size_t lo, std::size_t hi) {
    PartialLabels pl = PartialLabels::none(ref.dims(), ref.spacing());
    for (std::size_t idx = 0; idx < ref.size(); ++idx) {
        const auto z = ref.coords(idx)[2];
        if (z >= lo && z < hi) {
            pl.weights[idx] = 1;
            pl.labels[idx] = ref[idx];
        }
    }
    return pl;
}

TrainConfig small_config(std::uint64_t seed) {
    TrainConfig tc;
    tc.max_steps = 60;
    tc.validation_interval = 20;
    tc.batch_patches = 4;
    tc.patch_size = {8, 8, 3};
    tc.seed = seed;
    return tc;
}

} // namespace

TEST_CASE("patches contain only annotated voxels") {
    Fixture f;
    const PartialLabels pl = slab(f.a.label, 8, 12);
    const std::vector<TrainCase> cases{{std::cref(f.a.image), std::cref(pl)}};
    TrainConfig tc;
    const BatchSampler sampler(cases, tc);
    RngStream rng = derive_rng(1, {"batch"});
    for (int b = 0; b < 20; ++b) {
        const auto batch = sampler.sample(rng);
        REQUIRE(batch.size() == tc.batch_patches);
        for (const Patch& p : batch) {
            CHECK(!p.voxels.empty());
            for (std::size_t i = 0; i < p.voxels.size(); ++i) {
                CHECK(pl.weights[p.voxels[i]] == 1);
                CHECK(p.y[i] == double(pl.labels[p.voxels[i]]));
                CHECK(p.w[i] == 1.0);
            }
        }
    }
}

TEST_CASE("stratified batches always start with a liver patch") {
    Fixture f;
    const PartialLabels pl = PartialLabels::full(f.a.label);
    const std::vector<TrainCase> cases{{std::cref(f.a.image), std::cref(pl)}};
    TrainConfig tc;
    RngStream rng = derive_rng(2, {"batch"});
    for (int b = 0; b < 50; ++b) {
        const auto batch = sample_stratified_batch(cases, tc, rng);
        double liver = 0;
        for (double y : batch.front().y) liver += y;
        CHECK(liver > 0);
    }
}

TEST_CASE("sampler refuses training sets without annotated liver") {
    Fixture f;
    const PartialLabels none = PartialLabels::none(f.a.label.dims(), f.a.label.spacing());
    const std::vector<TrainCase> cases{{std::cref(f.a.image), std::cref(none)}};
    CHECK_THROWS_AS(BatchSampler(cases, TrainConfig{}), EmptyAnnotationError);
}

TEST_CASE("patches are clamped into small volumes") {
    ScalarVolume img(Dims{5, 5, 2}, Spacing{}, 0.0);
    LabelVolume ref(Dims{5, 5, 2}, Spacing{});
    ref[0] = 1;
    const PartialLabels pl = PartialLabels::full(ref);
    const std::vector<TrainCase> cases{{std::cref(img), std::cref(pl)}};
    RngStream rng = derive_rng(3, {"batch"});
    for (const Patch& p : BatchSampler(cases, TrainConfig{}).sample(rng)) CHECK(p.voxels.size() == 50);
}

TEST_CASE("training is deterministic") {
    Fixture f;
    const PartialLabels la = PartialLabels::full(f.a.label), lb = PartialLabels::full(f.b.label);
    const std::vector<TrainCase> cases{{std::cref(f.a.image), std::cref(la)}, {std::cref(f.b.image), std::cref(lb)}};
    const std::vector<ValidationCase> val{{std::cref(f.val.image), std::cref(f.val.label)}};
    const FeatureConfig fc;
    const TrainConfig tc = small_config(5);
    const TrainResult r1 = train(cases, val, fc, tc), r2 = train(cases, val, fc, tc);
    CHECK(r1.best == r2.best);
    CHECK(r1.log == r2.log);
    CHECK(r1.steps_run == 60);
    REQUIRE(r1.log.size() == 3);
    CHECK(r1.log[0].step == 20);

    CHECK(r1.best_val_jaccard ==
          doctest::Approx(jaccard(threshold(predict(r1.best, f.val.image, fc)), f.val.label)).epsilon(1e-15));
}

TEST_CASE("2000 steps on two phantoms beat the initial network") {
    Fixture f;
    const PartialLabels la = PartialLabels::full(f.a.label), lb = PartialLabels::full(f.b.label);
    const std::vector<TrainCase> cases{{std::cref(f.a.image), std::cref(la)}, {std::cref(f.b.image), std::cref(lb)}};
    const std::vector<ValidationCase> val{{std::cref(f.val.image), std::cref(f.val.label)}};
    const FeatureConfig fc;
    TrainConfig tc = small_config(5);
    tc.max_steps = 2000;
    tc.validation_interval = 200;
    const TrainResult r = train(cases, val, fc, tc);
    const double before = jaccard(threshold(predict(initial_params(fc, tc), f.val.image, fc)), f.val.label);
    const double after = jaccard(threshold(predict(r.best, f.val.image, fc)), f.val.label);
    CHECK(after > before);
    CHECK(r.log.back().step == 2000);
}

TEST_CASE("labels outside the annotation have no influence") {
    Fixture f;
    PartialLabels clean = slab(f.a.label, 6, 14);
    PartialLabels noisy = clean;
    RngStream junk = derive_rng(99, {"junk"});
    for (std::size_t idx = 0; idx < noisy.labels.size(); ++idx)
        if (!noisy.weights[idx]) noisy.labels[idx] = static_cast<std::uint8_t>(junk.uniform_index(2));
    const std::vector<ValidationCase> val{{std::cref(f.val.image), std::cref(f.val.label)}};
    const std::vector<TrainCase> c1{{std::cref(f.a.image), std::cref(clean)}}, c2{{std::cref(f.a.image), std::cref(noisy)}};
    const TrainConfig tc = small_config(8);
    CHECK(train(c1, val, FeatureConfig{}, tc).best == train(c2, val, FeatureConfig{}, tc).best);
}

TEST_CASE("plateau stopping halts early") {
    Fixture f;
    const PartialLabels la = PartialLabels::full(f.a.label);
    const std::vector<TrainCase> cases{{std::cref(f.a.image), std::cref(la)}};
    const std::vector<ValidationCase> val{{std::cref(f.val.image), std::cref(f.val.label)}};
    TrainConfig tc = small_config(4);
    tc.max_steps = 400;
    tc.validation_interval = 10;
    tc.adam.learning_rate = 1e-14; // nothing can improve after the first validation
    tc.stop_on_plateau = true;
    tc.patience_fraction = 0.25;
    const TrainResult r = train(cases, val, FeatureConfig{}, tc);
    CHECK(r.steps_run == 110);
    CHECK(r.best_step == 10);
}

TEST_CASE("jaccard of empty masks is one") {
    const LabelVolume e(Dims{2, 2, 2}, Spacing{});
    CHECK(jaccard(e, e) == 1.0);
    LabelVolume x = e, y = e;
    x[0] = x[1] = 1;
    y[1] = y[2] = 1;
    CHECK(jaccard(x, y) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("train config validation") {
    TrainConfig tc;
    tc.batch_patches = 1;
    CHECK_THROWS_AS(tc.validate(), InvalidArgument);
    tc = TrainConfig{};
    tc.hidden.clear();
    CHECK_THROWS_AS(tc.validate(), InvalidArgument);
    tc = TrainConfig{};
    tc.dropout = 1.0;
    CHECK_THROWS_AS(tc.validate(), InvalidArgument);
}
