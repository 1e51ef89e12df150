#include <doctest.h>

#include <cstring>
#include <string>

#include "fixtures.hpp"
#include "gescd/gescd.h"
#include "gescd/png_io.hpp"

using gescd::testing::TempDir;

namespace {

struct Cfg {
    gescd_config_t* ptr = gescd_config_create();
    ~Cfg() { gescd_config_free(ptr); }
};

void write_fixture_dataset(const TempDir& dir, int size) {
    namespace fs = std::filesystem;
    for (const char* sub : {"t0", "t1", "gt"}) fs::create_directories(dir.path() / sub);
    const gescd::Image img = gescd::testing::make_scene(size, size, 9, 8);
    gescd::BinaryMask object;
    const gescd::Image img1 =
        gescd::testing::insert_object(gescd::testing::make_scene(size, size, 10, 8), object);
    gescd::write_image(img, dir.str("t0/p.png"));
    gescd::write_image(img1, dir.str("t1/p.png"));
    gescd::write_mask(object, dir.str("gt/p.png"));
}

}  // namespace

TEST_CASE("version and error surfaces") {
    CHECK(std::string(gescd_version()) == "0.1.0");
    CHECK(gescd_last_error() != nullptr);
}

TEST_CASE("config set/get and validation through the C surface") {
    Cfg cfg;
    REQUIRE(cfg.ptr != nullptr);
    CHECK(gescd_config_set(cfg.ptr, "match.alpha_t", "0.5") == GESCD_OK);

    char buf[64];
    size_t needed = 0;
    CHECK(gescd_config_get(cfg.ptr, "match.alpha_t", buf, sizeof(buf), &needed) == GESCD_OK);
    CHECK(std::string(buf) == "0.5");
    CHECK(needed == 3);

    // Defaults are visible.
    CHECK(gescd_config_get(cfg.ptr, "threshold.z_value", buf, sizeof(buf), &needed) == GESCD_OK);
    CHECK(std::string(buf) == "-0.52");

    CHECK(gescd_config_set(cfg.ptr, "bogus.key", "1") == GESCD_ERROR_INVALID_ARGUMENT);
    CHECK(std::string(gescd_last_error()).find("bogus.key") != std::string::npos);
    CHECK(gescd_config_set(nullptr, "a", "b") == GESCD_ERROR_INVALID_ARGUMENT);
}

TEST_CASE("pipeline creation failures return null with a message") {
    Cfg cfg;
    REQUIRE(gescd_config_set(cfg.ptr, "backend", "vith-adapter") == GESCD_OK);
    REQUIRE(gescd_config_set(cfg.ptr, "weights_path", "/missing.gsw") == GESCD_OK);
    gescd_pipeline_t* pipe = gescd_pipeline_create(cfg.ptr);
    CHECK(pipe == nullptr);
    CHECK(std::string(gescd_last_error()).find("vith-adapter") != std::string::npos);
    gescd_pipeline_free(pipe);
}

TEST_CASE("detect_files writes masks and intermediates") {
    TempDir dir("capidetect");
    const int size = 48;
    const gescd::Image img0 = gescd::testing::make_scene(size, size, 12, 10);
    gescd::BinaryMask object;
    const gescd::Image img1 =
        gescd::testing::insert_object(gescd::testing::make_scene(size, size, 13, 10), object);
    gescd::write_image(img0, dir.str("a.png"));
    gescd::write_image(img1, dir.str("b.png"));

    Cfg cfg;
    REQUIRE(gescd_config_set(cfg.ptr, "input_size", "48") == GESCD_OK);
    gescd_pipeline_t* pipe = gescd_pipeline_create(cfg.ptr);
    REQUIRE(pipe != nullptr);

    const std::string out = dir.str("mask.png");
    const std::string prefix = dir.str("mask");
    CHECK(gescd_detect_files(pipe, dir.str("a.png").c_str(), dir.str("b.png").c_str(),
                             out.c_str(), prefix.c_str()) == GESCD_OK);
    CHECK(std::filesystem::exists(out));
    CHECK(std::filesystem::exists(dir.str("mask_similarity.png")));
    CHECK(std::filesystem::exists(dir.str("mask_pseudomask.png")));
    CHECK(std::filesystem::exists(dir.str("mask_proposals.png")));

    // Identical inputs produce an all-zero mask file.
    const std::string zero = dir.str("zero.png");
    CHECK(gescd_detect_files(pipe, dir.str("a.png").c_str(), dir.str("a.png").c_str(),
                             zero.c_str(), nullptr) == GESCD_OK);
    CHECK(gescd::read_mask(zero).area() == 0);

    // Missing input is an I/O error.
    CHECK(gescd_detect_files(pipe, dir.str("missing.png").c_str(), dir.str("b.png").c_str(),
                             out.c_str(), nullptr) == GESCD_ERROR_IO);
    gescd_pipeline_free(pipe);
}

TEST_CASE("detect_rgb works on raw buffers") {
    const int size = 32;
    const gescd::Image img = gescd::testing::make_scene(size, size, 14, 8);
    std::vector<uint8_t> mask(static_cast<std::size_t>(size) * size, 7);

    Cfg cfg;
    gescd_pipeline_t* pipe = gescd_pipeline_create(cfg.ptr);
    REQUIRE(pipe != nullptr);
    CHECK(gescd_detect_rgb(pipe, img.pixels.data(), img.pixels.data(), size, size,
                           mask.data()) == GESCD_OK);
    for (uint8_t v : mask) CHECK(v == 0);
    gescd_pipeline_free(pipe);
}

TEST_CASE("evaluate and render through the C surface") {
    TempDir dir("capieval");
    write_fixture_dataset(dir, 32);

    Cfg cfg;
    REQUIRE(gescd_config_set(cfg.ptr, "input_size", "32") == GESCD_OK);
    gescd_pipeline_t* pipe = gescd_pipeline_create(cfg.ptr);
    REQUIRE(pipe != nullptr);

    const std::string root = dir.str();
    const char* roots[] = {root.c_str()};
    gescd_report_t* report = nullptr;
    REQUIRE(gescd_evaluate(pipe, roots, 1, &report) == GESCD_OK);
    REQUIRE(report != nullptr);

    const char* json = gescd_report_render(report, "json");
    REQUIRE(json != nullptr);
    CHECK(std::string(json).find("\"schema_version\": 1") != std::string::npos);
    const char* md = gescd_report_render(report, "md");
    REQUIRE(md != nullptr);
    CHECK(std::string(md).find("TC") != std::string::npos);
    CHECK(gescd_report_render(report, "yaml") == nullptr);

    gescd_report_free(report);
    gescd_pipeline_free(pipe);
}

TEST_CASE("score_external through the C surface") {
    TempDir dir("capiscore");
    write_fixture_dataset(dir, 24);
    TempDir preds("capipreds");
    const gescd::BinaryMask gt = gescd::read_mask(dir.str("gt/p.png"));
    gescd::write_mask(gt, preds.str("p_fwd.png"));
    gescd::write_mask(gt, preds.str("p_bwd.png"));

    Cfg cfg;
    REQUIRE(gescd_config_set(cfg.ptr, "input_size", "24") == GESCD_OK);
    gescd_report_t* report = nullptr;
    REQUIRE(gescd_score_external(cfg.ptr, preds.str().c_str(), dir.str().c_str(), &report) ==
            GESCD_OK);
    const char* json = gescd_report_render(report, "json");
    REQUIRE(json != nullptr);
    CHECK(std::string(json).find("\"tc\": 1.0") != std::string::npos);
    gescd_report_free(report);

    // Missing predictions propagate as an I/O error.
    TempDir empty("capiempty");
    gescd_report_t* nope = nullptr;
    CHECK(gescd_score_external(cfg.ptr, empty.str().c_str(), dir.str().c_str(), &nope) ==
          GESCD_ERROR_IO);
    CHECK(nope == nullptr);
}
