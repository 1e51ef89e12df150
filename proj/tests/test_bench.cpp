#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gescd/bench.hpp"
#include "gescd/png_io.hpp"

using namespace gescd;

namespace {

struct Fixture {
    testing::TempDir dir{"bench"};
    int size = 32;

    // pairs: identical (no change), inserted object, quadrant recolor.
    std::vector<BinaryMask> objects;

    void build(bool gt_matches_truth) {
        namespace fs = std::filesystem;
        for (const char* sub : {"t0", "t1", "gt"}) fs::create_directories(dir.path() / sub);

        // Pair a: identical images, empty gt.
        const Image base_a = testing::make_scene(size, size, 1, 8);
        write_image(base_a, dir.str("t0/a.png"));
        write_image(base_a, dir.str("t1/a.png"));
        write_mask(BinaryMask(size, size), dir.str("gt/a.png"));

        // Pair b: inserted object.
        const Image base_b0 = testing::make_scene(size, size, 2, 8);
        BinaryMask object;
        const Image base_b1 = testing::insert_object(testing::make_scene(size, size, 3, 8), object);
        write_image(base_b0, dir.str("t0/b.png"));
        write_image(base_b1, dir.str("t1/b.png"));
        write_mask(gt_matches_truth ? object : BinaryMask(size, size, 1), dir.str("gt/b.png"));
        objects.push_back(object);
    }
};

EvalOptions options_with_snapshot() {
    Config cfg;
    EvalOptions opts;
    opts.config_snapshot = cfg.snapshot();
    return opts;
}

}  // namespace

TEST_CASE("run_eval: identical-pairs fixture scores f1 = 1 and tc = 1 exactly") {
    // Dataset of identical pairs with empty ground truth: the empty-vs-empty
    // convention applies to every pair.
    testing::TempDir dir("identical");
    namespace fs = std::filesystem;
    for (const char* sub : {"t0", "t1", "gt"}) fs::create_directories(dir.path() / sub);
    for (int i = 0; i < 3; ++i) {
        const Image img = testing::make_scene(24, 24, 100 + i, 8);
        write_image(img, dir.str("t0/p" + std::to_string(i) + ".png"));
        write_image(img, dir.str("t1/p" + std::to_string(i) + ".png"));
        write_mask(BinaryMask(24, 24), dir.str("gt/p" + std::to_string(i) + ".png"));
    }
    const DatasetManifest m = load_dataset(dir.str(), DatasetLayout::Scd, 24);
    const Pipeline pipeline{Config{}};
    const DatasetResult r = run_eval(m, pipeline, options_with_snapshot());
    CHECK(r.fwd.f1 == 1.0);
    CHECK(r.bwd.f1 == 1.0);
    CHECK(r.tc == 1.0);
}

TEST_CASE("run_eval: mixed fixture keeps tc = 1 and positive f1") {
    Fixture f;
    f.build(true);
    const DatasetManifest m = load_dataset(f.dir.str(), DatasetLayout::Scd, f.size);
    const Pipeline pipeline{Config{}};
    const DatasetResult r = run_eval(m, pipeline, options_with_snapshot());

    CHECK_FALSE(r.failed);
    CHECK(r.pairs_scored == 2);
    CHECK(r.skipped.empty());
    // Temporal consistency is 1.0 by construction for every pair.
    CHECK(r.tc == 1.0);
    // The identical pair scores the empty-vs-empty convention; the object
    // pair detects, so the macro f1 is strictly positive.
    CHECK(r.fwd.f1 > 0.0);
    CHECK(r.fwd.f1 == r.bwd.f1);
}

TEST_CASE("gt selector picks the intersection mask on changevpr trees") {
    testing::TempDir dir("cvprsel");
    namespace fs = std::filesystem;
    for (const char* sub : {"query", "reference", "gt_t0", "gt_t1", "gt_inter"})
        fs::create_directories(dir.path() / sub);
    const int size = 24;
    const Image img = testing::make_scene(size, size, 7, 8);
    write_image(img, dir.str("query/p.png"));
    write_image(img, dir.str("reference/p.png"));
    // Only the fwd mask has change pixels; bwd and inter are empty. With
    // identical inputs the prediction is empty, so the selected gt decides
    // the score: fwd -> 0, inter -> 1 by the degenerate convention.
    BinaryMask fwd_gt(size, size);
    for (int i = 0; i < 30; ++i) fwd_gt.data[i] = 1;
    write_mask(fwd_gt, dir.str("gt_t0/p.png"));
    write_mask(BinaryMask(size, size), dir.str("gt_t1/p.png"));
    write_mask(BinaryMask(size, size), dir.str("gt_inter/p.png"));

    const DatasetManifest m = load_dataset(dir.str(), DatasetLayout::ChangeVpr, size);
    const Pipeline pipeline{Config{}};

    EvalOptions fwd_opts = options_with_snapshot();
    const DatasetResult rf = run_eval(m, pipeline, fwd_opts);
    CHECK(rf.fwd.f1 == 0.0);

    EvalOptions inter_opts = options_with_snapshot();
    inter_opts.gt = GtSelect::Inter;
    const DatasetResult ri = run_eval(m, pipeline, inter_opts);
    CHECK(ri.fwd.f1 == 1.0);

    EvalOptions bwd_opts = options_with_snapshot();
    bwd_opts.gt = GtSelect::Bwd;
    const DatasetResult rb = run_eval(m, pipeline, bwd_opts);
    CHECK(rb.fwd.f1 == 1.0);
}

TEST_CASE("run_eval: all-change gt against empty predictions is zero f1") {
    testing::TempDir dir("zero");
    namespace fs = std::filesystem;
    for (const char* sub : {"t0", "t1", "gt"}) fs::create_directories(dir.path() / sub);
    const Image img = testing::make_scene(24, 24, 4, 6);
    write_image(img, dir.str("t0/x.png"));
    write_image(img, dir.str("t1/x.png"));
    write_mask(BinaryMask(24, 24, 1), dir.str("gt/x.png"));

    const DatasetManifest m = load_dataset(dir.str(), DatasetLayout::Scd, 24);
    const Pipeline pipeline{Config{}};
    const DatasetResult r = run_eval(m, pipeline, options_with_snapshot());
    CHECK(r.fwd.f1 == 0.0);
    CHECK(r.tc == 1.0);
}

TEST_CASE("protocol report: average row recomputable, single manifest equals its row") {
    Fixture f;
    f.build(true);
    const DatasetManifest m = load_dataset(f.dir.str(), DatasetLayout::Scd, f.size);
    const Pipeline pipeline{Config{}};
    const EvalOptions opts = options_with_snapshot();
    const EvalReport report = run_protocol({m}, pipeline, opts);

    REQUIRE(report.per_dataset.size() == 1);
    const DatasetResult& d = report.per_dataset[0];
    CHECK(report.average.f1 == doctest::Approx(0.5 * (d.fwd.f1 + d.bwd.f1)).epsilon(1e-12));
    CHECK(report.average.tc == d.tc);

    // Three manifests: average = mean of the three (same dataset thrice).
    const EvalReport triple = run_protocol({m, m, m}, pipeline, opts);
    REQUIRE(triple.per_dataset.size() == 3);
    double mean_f1 = 0;
    for (const auto& dd : triple.per_dataset) mean_f1 += 0.5 * (dd.fwd.f1 + dd.bwd.f1);
    mean_f1 /= 3.0;
    CHECK(triple.average.f1 == doctest::Approx(mean_f1).epsilon(1e-12));
}

TEST_CASE("report determinism: byte-identical renders for a fixed config") {
    Fixture f;
    f.build(true);
    const DatasetManifest m = load_dataset(f.dir.str(), DatasetLayout::Scd, f.size);
    const Pipeline pipeline{Config{}};
    const EvalOptions opts = options_with_snapshot();

    const std::string a = emit_report(run_protocol({m}, pipeline, opts), ReportFormat::Json);
    const std::string b = emit_report(run_protocol({m}, pipeline, opts), ReportFormat::Json);
    CHECK(a == b);

    // Deterministic under parallel evaluation as well.
    EvalOptions threaded = opts;
    threaded.threads = 4;
    const std::string c = emit_report(run_protocol({m}, pipeline, threaded), ReportFormat::Json);
    CHECK(a == c);
}

TEST_CASE("report renders: schema, csv row count, markdown tc column") {
    Fixture f;
    f.build(true);
    const DatasetManifest m = load_dataset(f.dir.str(), DatasetLayout::Scd, f.size);
    const Pipeline pipeline{Config{}};
    const EvalReport report = run_protocol({m, m}, pipeline, options_with_snapshot());

    const std::string json = emit_report(report, ReportFormat::Json);
    CHECK(json.find("\"schema_version\": 1") != std::string::npos);
    CHECK(json.find("\"per_dataset\"") != std::string::npos);
    CHECK(json.find("\"average\"") != std::string::npos);
    CHECK(json.find("\"config\"") != std::string::npos);
    CHECK(json.find("\"seed\"") != std::string::npos);  // config snapshot echoed

    const std::string csv = emit_report(report, ReportFormat::Csv);
    int data_rows = -1;  // exclude header
    for (char ch : csv) data_rows += ch == '\n';
    CHECK(data_rows == 2 + 1);  // datasets + Avg.

    const std::string md = emit_report(report, ReportFormat::Markdown);
    CHECK(md.find("TC") != std::string::npos);
    CHECK(md.find("Avg.") != std::string::npos);
}

TEST_CASE("score_external forwards tc from files") {
    Fixture f;
    f.build(true);
    const DatasetManifest m = load_dataset(f.dir.str(), DatasetLayout::Scd, f.size);

    testing::TempDir preds("preds");
    // Pair a: predictions identical to gt (empty) in both directions.
    write_mask(BinaryMask(f.size, f.size), preds.str("a_fwd.png"));
    write_mask(BinaryMask(f.size, f.size), preds.str("a_bwd.png"));
    // Pair b: fwd/bwd with |inter|/|union| = 0.5.
    // fwd = 40 px, bwd = 20 px nested inside: |inter| 20, |union| 40.
    BinaryMask fwd(f.size, f.size), bwd(f.size, f.size);
    for (int i = 0; i < 40; ++i) fwd.data[i] = 1;
    for (int i = 10; i < 30; ++i) bwd.data[i] = 1;
    write_mask(fwd, preds.str("b_fwd.png"));
    write_mask(bwd, preds.str("b_bwd.png"));

    const DatasetResult r = score_external(m, preds.str(), options_with_snapshot());
    CHECK(r.pairs_scored == 2);
    // tc: pair a = 1.0 (empty/empty), pair b = 0.5 -> macro mean 0.75.
    CHECK(r.tc == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("score_external: perfect predictions score 1.0 everywhere") {
    Fixture f;
    f.build(true);
    const DatasetManifest m = load_dataset(f.dir.str(), DatasetLayout::Scd, f.size);

    testing::TempDir preds("perfect");
    for (const PairRecord& rec : m.records) {
        const BinaryMask gt = load_gt_mask(rec.gt_fwd, m);
        write_mask(gt, preds.str(rec.id + "_fwd.png"));
        write_mask(gt, preds.str(rec.id + "_bwd.png"));
    }
    const DatasetResult r = score_external(m, preds.str(), options_with_snapshot());
    CHECK(r.fwd.f1 == 1.0);
    CHECK(r.bwd.f1 == 1.0);
    CHECK(r.tc == 1.0);

    // Disjoint non-empty fwd/bwd -> tc = 0.
    testing::TempDir preds2("disjoint");
    for (const PairRecord& rec : m.records) {
        BinaryMask a(f.size, f.size), b(f.size, f.size);
        a.at(0, 0) = 1;
        b.at(1, 1) = 1;
        write_mask(a, preds2.str(rec.id + "_fwd.png"));
        write_mask(b, preds2.str(rec.id + "_bwd.png"));
    }
    const DatasetResult r2 = score_external(m, preds2.str(), options_with_snapshot());
    CHECK(r2.tc == 0.0);
}

TEST_CASE("score_external lists missing prediction files") {
    Fixture f;
    f.build(true);
    const DatasetManifest m = load_dataset(f.dir.str(), DatasetLayout::Scd, f.size);
    testing::TempDir preds("missing");
    write_mask(BinaryMask(f.size, f.size), preds.str("a_fwd.png"));
    try {
        (void)score_external(m, preds.str(), options_with_snapshot());
        FAIL("expected missing-prediction error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("a_bwd.png") != std::string::npos);
        CHECK(std::string(e.what()).find("b_fwd.png") != std::string::npos);
    }
}

TEST_CASE("micro averaging aggregates confusions") {
    Fixture f;
    f.build(true);
    const DatasetManifest m = load_dataset(f.dir.str(), DatasetLayout::Scd, f.size);
    const Pipeline pipeline{Config{}};
    EvalOptions opts = options_with_snapshot();
    opts.average = AverageMode::Micro;
    const DatasetResult r = run_eval(m, pipeline, opts);
    CHECK_FALSE(r.failed);
    CHECK(r.tc == 1.0);
    CHECK(r.fwd.f1 >= 0.0);
    CHECK(r.fwd.f1 <= 1.0);
}

TEST_CASE("gt selector errors surface as skipped pairs") {
    Fixture f;
    f.build(true);
    const DatasetManifest m = load_dataset(f.dir.str(), DatasetLayout::Scd, f.size);
    const Pipeline pipeline{Config{}};
    EvalOptions opts = options_with_snapshot();
    opts.gt = GtSelect::Bwd;  // scd layout has no backward masks
    const DatasetResult r = run_eval(m, pipeline, opts);
    CHECK(r.failed);  // every pair skipped
    CHECK(r.skipped.size() == 2);
}
