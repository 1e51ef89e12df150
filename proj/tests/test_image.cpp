#include <doctest.h>

#include "fixtures.hpp"
#include "gescd/image.hpp"
#include "gescd/png_io.hpp"

using namespace gescd;

TEST_CASE("resize_bilinear identity and determinism") {
    const Image img = testing::make_scene(32, 24, 7, 10);
    const Image same = resize_bilinear(img, 32, 24);
    CHECK(same.pixels == img.pixels);

    const Image up1 = resize_bilinear(img, 64, 48);
    const Image up2 = resize_bilinear(img, 64, 48);
    CHECK(up1.pixels == up2.pixels);
}

TEST_CASE("resize of constant image stays constant") {
    Image img(10, 10);
    for (auto& p : img.pixels) p = 77;
    const Image up = resize_bilinear(img, 33, 17);
    for (auto p : up.pixels) CHECK(p == 77);
}

TEST_CASE("mask nearest resize keeps values binary") {
    BinaryMask m(8, 8);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 8; ++x) m.at(x, y) = 1;
    const BinaryMask up = resize_mask_nearest(m, 17, 15);
    for (auto v : up.data) CHECK((v == 0 || v == 1));
    CHECK(up.at(8, 0) == 1);
    CHECK(up.at(8, 14) == 0);
}

TEST_CASE("png round trips") {
    testing::TempDir dir("png");
    const Image img = testing::make_scene(20, 14, 3, 15);
    write_image(img, dir.str("img.png"));
    const Image back = read_image(dir.str("img.png"));
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    CHECK(back.pixels == img.pixels);
}

TEST_CASE("mask png round trips and counts survive") {
    testing::TempDir dir("maskio");

    BinaryMask checker(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) checker.at(x, y) = (x + y) % 2;
    write_mask(checker, dir.str("checker.png"));
    CHECK(read_mask(dir.str("checker.png")).data == checker.data);

    BinaryMask zeros(9, 9);
    write_mask(zeros, dir.str("zeros.png"));
    const BinaryMask back = read_mask(dir.str("zeros.png"));
    CHECK(back.area() == 0);

    BinaryMask forty(10, 10);
    int placed = 0;
    for (int y = 0; y < 10 && placed < 40; ++y)
        for (int x = 0; x < 10 && placed < 40; ++x) {
            forty.at(x, y) = 1;
            ++placed;
        }
    write_mask(forty, dir.str("forty.png"));
    CHECK(read_mask(dir.str("forty.png")).area() == 40);
}

TEST_CASE("unreadable mask file raises io error") {
    testing::TempDir dir("badpng");
    {
        std::ofstream f(dir.str("garbled.png"), std::ios::binary);
        f << "this is not a png";
    }
    CHECK_THROWS_AS((void)read_mask(dir.str("garbled.png")), Error);
    CHECK_THROWS_AS((void)read_image(dir.str("missing.png")), Error);
}

TEST_CASE("random masks round trip exactly") {
    testing::TempDir dir("maskprop");
    std::mt19937 rng(99);
    for (int trial = 0; trial < 8; ++trial) {
        BinaryMask m(13, 11);
        for (auto& v : m.data) v = rng() % 2;
        const std::string path = dir.str("m" + std::to_string(trial) + ".png");
        write_mask(m, path);
        CHECK(read_mask(path).data == m.data);
    }
}
