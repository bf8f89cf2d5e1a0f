#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "xwalk/error.hpp"
#include "xwalk/raster.hpp"
#include "xwalk/rng.hpp"

using namespace xwalk;

namespace {

// Independent coverage oracle: marks every covered pixel.
bool windows_cover_image(const std::vector<TileWindow>& windows, int w, int h) {
    std::vector<char> hit(static_cast<std::size_t>(w) * h, 0);
    for (const TileWindow& win : windows) {
        if (win.origin_col < 0 || win.origin_row < 0 || win.origin_col + win.width > w ||
            win.origin_row + win.height > h)
            return false;
        for (int r = 0; r < win.height; ++r)
            for (int c = 0; c < win.width; ++c)
                hit[static_cast<std::size_t>(win.origin_row + r) * w + win.origin_col + c] = 1;
    }
    return std::all_of(hit.begin(), hit.end(), [](char v) { return v == 1; });
}

// Expected origin count per axis, derived with a plain counting loop.
int axis_window_count(int dim, int patch, int stride) {
    if (dim <= patch) return 1;
    int count = 1;  // final shifted window
    for (int pos = 0; pos + patch < dim; pos += stride) ++count;
    return count;
}

}  // namespace

TEST_SUITE("imagery") {

TEST_CASE("plan_tiles matches the counting oracle on the full-scale case") {
    const TileSpec spec{1024, 256};
    const auto windows = plan_tiles(10000, 10000, spec);
    const int per_axis = axis_window_count(10000, 1024, 768);
    CHECK(per_axis == 13);
    CHECK(windows.size() == 169);

    // last origin per axis sits against the image edge
    int max_col = 0, max_row = 0;
    for (const TileWindow& w : windows) {
        max_col = std::max(max_col, w.origin_col);
        max_row = std::max(max_row, w.origin_row);
        CHECK(w.width == 1024);
        CHECK(w.height == 1024);
    }
    CHECK(max_col == 8976);
    CHECK(max_row == 8976);

    // row-major indexing
    for (std::size_t i = 0; i < windows.size(); ++i)
        CHECK(windows[i].tile_index == static_cast<int>(i));
    CHECK(windows[1].origin_col == 768);
    CHECK(windows[1].origin_row == 0);
    CHECK(windows[13].origin_col == 0);
    CHECK(windows[13].origin_row == 768);
}

TEST_CASE("plan_tiles clamps to one window for small and exact-fit images") {
    const TileSpec spec{1024, 256};
    const auto small = plan_tiles(800, 600, spec);
    REQUIRE(small.size() == 1);
    CHECK(small[0].origin_col == 0);
    CHECK(small[0].origin_row == 0);
    CHECK(small[0].width == 800);
    CHECK(small[0].height == 600);

    const auto exact = plan_tiles(1024, 1024, spec);
    REQUIRE(exact.size() == 1);
    CHECK(exact[0].width == 1024);
    CHECK(exact[0].height == 1024);
}

TEST_CASE("plan_tiles covers every pixel and keeps the overlap guarantee") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int w = 1 + static_cast<int>(rng.next_below(64));
        const int h = 1 + static_cast<int>(rng.next_below(64));
        const int patch = 1 + static_cast<int>(rng.next_below(24));
        const int overlap = static_cast<int>(rng.next_below(patch));
        const auto windows = plan_tiles(w, h, TileSpec{patch, overlap});
        CHECK(windows_cover_image(windows, w, h));
    }

    // consecutive windows share at least `overlap` columns when W >= patch
    const auto windows = plan_tiles(5000, 1024, TileSpec{1024, 256});
    for (std::size_t i = 1; i < windows.size(); ++i) {
        const int prev_end = windows[i - 1].origin_col + windows[i - 1].width;
        CHECK(prev_end - windows[i].origin_col >= 256);
    }
}

TEST_CASE("plan_tiles rejects invalid specs") {
    CHECK_THROWS_AS(plan_tiles(100, 100, TileSpec{256, 256}), ValidationError);
    CHECK_THROWS_AS(plan_tiles(100, 100, TileSpec{256, 300}), ValidationError);
    CHECK_THROWS_AS(plan_tiles(0, 100, TileSpec{256, 0}), ValidationError);
}

TEST_CASE("extract_tile copies the window and checks bounds") {
    RasterImage ramp = RasterImage::filled(4, 4, 1, 0);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) ramp.at(r, c) = static_cast<std::uint8_t>(r * 4 + c);

    const RasterImage full = extract_tile(ramp, TileWindow{0, 0, 4, 4, 0});
    CHECK(full.samples == ramp.samples);

    const RasterImage inner = extract_tile(ramp, TileWindow{1, 1, 2, 2, 0});
    CHECK(inner.at(0, 0) == 5);
    CHECK(inner.at(0, 1) == 6);
    CHECK(inner.at(1, 0) == 9);
    CHECK(inner.at(1, 1) == 10);

    const RasterImage corner = extract_tile(ramp, TileWindow{2, 2, 2, 2, 0});
    CHECK(corner.at(1, 1) == 15);

    CHECK_THROWS_AS(extract_tile(ramp, TileWindow{3, 3, 2, 2, 0}), ValidationError);
}

TEST_CASE("to_grayscale uses BT.601 luma with round-half-up") {
    RasterImage px = RasterImage::filled(1, 1, 3, 0);
    px.samples = {255, 255, 255};
    CHECK(to_grayscale(px).samples[0] == 255);
    px.samples = {0, 0, 0};
    CHECK(to_grayscale(px).samples[0] == 0);
    px.samples = {255, 0, 0};
    CHECK(to_grayscale(px).samples[0] == 76);  // round(0.299 * 255)

    // idempotent: 1-channel input passes through
    RasterImage gray = RasterImage::filled(2, 2, 1, 7);
    const RasterImage once = to_grayscale(gray);
    CHECK(to_grayscale(once).samples == once.samples);
}

TEST_CASE("world file parsing maps the 6 lines to a d b e c f") {
    const GeoTransform gt = parse_world_file("0.15\n0\n0\n-0.15\n200000.075\n899999.925\n");
    CHECK(gt.a == 0.15);
    CHECK(gt.d == 0.0);
    CHECK(gt.b == 0.0);
    CHECK(gt.e == -0.15);
    CHECK(gt.c == 200000.075);
    CHECK(gt.f == 899999.925);

    CHECK_THROWS_AS(parse_world_file("1\n0\n0\n1\n5\n"), ParseError);           // five lines
    CHECK_THROWS_AS(parse_world_file("1\n0\n0\n1\n5\n6\n7\n"), ParseError);     // seven lines
    CHECK_THROWS_AS(parse_world_file("0\n0\n0\n1\n0\n0\n"), ValidationError);   // singular
    CHECK_THROWS_AS(parse_world_file("a\n0\n0\n1\n0\n0\n"), ParseError);
}

TEST_CASE("pixel_to_world follows the affine form") {
    GeoTransform gt;
    gt.a = 0.15;
    gt.e = -0.15;
    gt.c = 200000.075;
    gt.f = 899999.925;

    const WorldPoint origin = pixel_to_world(gt, 0, 0);
    CHECK(origin.x == gt.c);
    CHECK(origin.y == gt.f);

    const WorldPoint east = pixel_to_world(gt, 100, 0);
    CHECK(east.x == doctest::Approx(gt.c + 15.0).epsilon(1e-12));
}

TEST_CASE("world_to_pixel inverts pixel_to_world on random transforms") {
    SplitMix64 rng(7);
    int tested = 0;
    while (tested < 1000) {
        GeoTransform gt;
        gt.a = rng.uniform(-2.0, 2.0);
        gt.d = rng.uniform(-2.0, 2.0);
        gt.b = rng.uniform(-2.0, 2.0);
        gt.e = rng.uniform(-2.0, 2.0);
        gt.c = rng.uniform(-1e6, 1e6);
        gt.f = rng.uniform(-1e6, 1e6);
        if (std::abs(gt.determinant()) < 1e-3) continue;
        ++tested;

        const double col = rng.uniform(0.0, 10000.0);
        const double row = rng.uniform(0.0, 10000.0);
        const WorldPoint wp = pixel_to_world(gt, col, row);
        const PixelPoint rt = world_to_pixel(gt, wp.x, wp.y);
        CHECK(rt.col == doctest::Approx(col).epsilon(1e-9));
        CHECK(rt.row == doctest::Approx(row).epsilon(1e-9));
    }

    GeoTransform singular;
    singular.a = 0.0;
    singular.e = 1.0;
    CHECK_THROWS_AS(world_to_pixel(singular, 1.0, 1.0), ValidationError);
}

TEST_CASE("raster container round-trips PGM and PPM") {
    SplitMix64 rng(99);
    for (int channels : {1, 3}) {
        RasterImage img = RasterImage::filled(13, 9, channels, 0);
        for (std::uint8_t& s : img.samples) s = static_cast<std::uint8_t>(rng.next_below(256));
        const std::string path = testutil::tmp_path("roundtrip.pnm");
        write_raster(path, img);

        const RasterHeader header = read_raster_header(path);
        CHECK(header.width == 13);
        CHECK(header.height == 9);
        CHECK(header.channels == channels);

        const RasterImage back = read_raster(path);
        CHECK(back.samples == img.samples);
    }
    CHECK_THROWS_AS(read_raster(testutil::tmp_path("missing.pnm")), IoError);
}

}  // TEST_SUITE
