#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gescd/synthetic_backend.hpp"

using namespace gescd;

TEST_CASE("synthetic facets: shape, determinism, identical-image equality") {
    SyntheticBackend backend;
    const Image img = testing::make_scene(8, 8, 1, 5);

    const FacetStack f = backend.extract_facets(img, 0, FacetKind::Key);
    CHECK(f.heads == 2);
    CHECK(f.kind == FacetKind::Key);
    CHECK(f.layer == 0);
    CHECK(f.grid_h == 2);
    CHECK(f.grid_w == 2);
    for (float v : f.data) CHECK(std::isfinite(v));

    const FacetStack again = backend.extract_facets(img, 0, FacetKind::Key);
    CHECK(f.data == again.data);  // bit-exact reproducibility

    const Image copy = img;
    const FacetStack other = backend.extract_facets(copy, 0, FacetKind::Key);
    CHECK(f.data == other.data);
}

TEST_CASE("facet layer out of range") {
    SyntheticBackend backend;
    const Image img = testing::make_scene(16, 16);
    CHECK_THROWS_AS((void)backend.extract_facets(img, 999, FacetKind::Key), Error);
    CHECK_THROWS_AS((void)backend.extract_embedding(img, 999), Error);
}

TEST_CASE("facet kinds and layers produce distinct features") {
    SyntheticBackend backend;
    const Image img = testing::make_scene(32, 32, 2, 8);
    const FacetStack key = backend.extract_facets(img, 1, FacetKind::Key);
    const FacetStack query = backend.extract_facets(img, 1, FacetKind::Query);
    const FacetStack deeper = backend.extract_facets(img, 2, FacetKind::Key);
    CHECK(key.data != query.data);
    CHECK(key.data != deeper.data);
}

TEST_CASE("constant image yields spatially constant embedding") {
    SyntheticBackend backend;
    Image img(16, 16);
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = 120;
        img.pixels[i + 1] = 30;
        img.pixels[i + 2] = 200;
    }
    const EmbeddingMap emb = backend.extract_embedding(img, backend.layer_count() - 1);
    const float* first = emb.at(0, 0);
    for (int gy = 0; gy < emb.grid_h; ++gy)
        for (int gx = 0; gx < emb.grid_w; ++gx)
            for (int c = 0; c < emb.channels; ++c) CHECK(emb.at(gy, gx)[c] == first[c]);

    const EmbeddingMap twice = backend.extract_embedding(img, backend.layer_count() - 1);
    CHECK(emb.data == twice.data);
}

TEST_CASE("proposals: two-region fixture and blank image") {
    SyntheticBackend backend;
    ProposerConfig cfg;

    Image two(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            std::uint8_t* p = two.at(x, y);
            const bool left = x < 8;
            p[0] = left ? 40 : 200;
            p[1] = left ? 40 : 200;
            p[2] = left ? 40 : 200;
        }
    const auto proposals = backend.propose_masks(two, cfg);
    REQUIRE(proposals.size() == 2);
    CHECK(proposals[0].area + proposals[1].area == 16 * 16);
    // Disjoint.
    const BinaryMask m0 = proposals[0].to_mask();
    const BinaryMask m1 = proposals[1].to_mask();
    for (std::size_t i = 0; i < m0.data.size(); ++i) CHECK((m0.data[i] & m1.data[i]) == 0);

    Image blank(12, 12);
    const auto single = backend.propose_masks(blank, cfg);
    REQUIRE(single.size() == 1);
    CHECK(single[0].area == 12 * 12);
}

TEST_CASE("proposal filter contract") {
    SyntheticBackend backend;
    ProposerConfig cfg;  // thresholds 0.7
    const Image img = testing::make_scene(24, 24, 5, 0);
    for (const MaskProposal& p : backend.propose_masks(img, cfg)) {
        CHECK(p.predicted_iou >= cfg.predicted_iou_threshold);
        CHECK(p.stability >= cfg.stability_threshold);
        CHECK(p.area >= 1);
        CHECK(p.area == p.to_mask().area());
    }
    ProposerConfig bad;
    bad.points_per_side = 0;
    CHECK_THROWS_AS((void)backend.propose_masks(img, bad), Error);
}

TEST_CASE("mask_embedding definitions") {
    EmbeddingMap emb;
    emb.grid_h = 2;
    emb.grid_w = 2;
    emb.channels = 3;
    emb.data = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};

    // All-ones mask -> spatial mean.
    BinaryMask all(2, 2, 1);
    MaskEmbedding me = mask_embedding(emb, all);
    CHECK(me.source_mask_area == 4);
    CHECK(me.vector[0] == doctest::Approx((1 + 4 + 7 + 10) / 4.0).epsilon(1e-15));
    CHECK(me.vector[2] == doctest::Approx((3 + 6 + 9 + 12) / 4.0).epsilon(1e-15));

    // Single-cell mask.
    BinaryMask single(2, 2);
    single.at(1, 0) = 1;
    me = mask_embedding(emb, single);
    CHECK(me.vector == std::vector<double>{4, 5, 6});

    // Two-cell mask: hand-computed average of (0,0) and (1,1).
    BinaryMask two(2, 2);
    two.at(0, 0) = 1;
    two.at(1, 1) = 1;
    me = mask_embedding(emb, two);
    CHECK(me.vector[0] == doctest::Approx((1 + 10) / 2.0).epsilon(1e-15));

    // Empty mask on the grid.
    BinaryMask empty(2, 2);
    CHECK_THROWS_AS((void)mask_embedding(emb, empty), Error);
}

TEST_CASE("mask_embedding linearity over disjoint masks") {
    // Integer-valued embeddings make the area-weighted identity exact.
    EmbeddingMap emb;
    emb.grid_h = 4;
    emb.grid_w = 4;
    emb.channels = 2;
    emb.data.resize(32);
    for (std::size_t i = 0; i < emb.data.size(); ++i)
        emb.data[i] = static_cast<float>((i * 7) % 23);

    // Power-of-two areas keep every division dyadic, hence exact.
    BinaryMask a(4, 4), b(4, 4), u(4, 4);
    for (int x = 0; x < 4; ++x) {
        a.at(x, 0) = 1;  // row 0
        b.at(x, 2) = 1;  // row 2 (disjoint)
    }
    for (std::size_t i = 0; i < u.data.size(); ++i) u.data[i] = a.data[i] | b.data[i];

    const MaskEmbedding ea = mask_embedding(emb, a);
    const MaskEmbedding eb = mask_embedding(emb, b);
    const MaskEmbedding eu = mask_embedding(emb, u);
    const double na = static_cast<double>(ea.source_mask_area);
    const double nb = static_cast<double>(eb.source_mask_area);
    for (int c = 0; c < 2; ++c) {
        const double expected = (na * ea.vector[c] + nb * eb.vector[c]) / (na + nb);
        CHECK(eu.vector[c] == expected);
    }
}

TEST_CASE("backend layer naming") {
    SyntheticBackend backend;
    CHECK(backend.embedding_layer("initial") == 0);
    CHECK(backend.embedding_layer("last") == backend.layer_count() - 1);
    CHECK(backend.embedding_layer("intermediate") == backend.layer_count() / 2);
    CHECK_THROWS_AS((void)backend.embedding_layer("middle-ish"), Error);
}
