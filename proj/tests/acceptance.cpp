// Acceptance suite: one check per criterion, one PASS/FAIL line each.
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "testutil.hpp"
#include "xwalk/augment.hpp"
#include "xwalk/error.hpp"
#include "xwalk/eval.hpp"
#include "xwalk/geo_export.hpp"
#include "xwalk/nn.hpp"
#include "xwalk/pipeline.hpp"
#include "xwalk/raster.hpp"

using namespace xwalk;

namespace {

void expect(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error(what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Detection make_det(double cx, double cy, double w, double h, double theta, int cls,
                   double score) {
    Detection d;
    d.box = OrientedBox(cx, cy, w, h, theta);
    d.class_id = cls;
    d.score = score;
    return d;
}

// --- criterion 1 ------------------------------------------------------------

void criterion_iou_oracle() {
    const auto t0 = std::chrono::steady_clock::now();

    const double diag = rotated_iou(OrientedBox(0, 0, 1, 1, 0),
                                    OrientedBox(0, 0, 1, 1, 3.14159265358979323846 / 4));
    expect(std::abs(diag - std::sqrt(2.0) / 2.0) <= 1e-9, "45-degree case deviates from sqrt(2)/2");

    SplitMix64 rng(20250810);
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const OrientedBox a = testutil::random_box(rng, 100.0, 1.0, 20.0);
        const OrientedBox b = testutil::random_box(rng, 100.0, 1.0, 20.0);
        const double exact = rotated_iou(a, b);
        const double estimate = testutil::monte_carlo_iou(a, b, 9000 + trial);  // 1e5 samples
        worst = std::max(worst, std::abs(exact - estimate));
    }
    expect(worst <= 2e-3, "Monte Carlo deviation " + std::to_string(worst) + " > 2e-3");
    expect(seconds_since(t0) < 30.0, "runtime exceeded 30 s");
}

// --- criterion 2 ------------------------------------------------------------

void criterion_nms_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    SplitMix64 rng(424242);
    const double taus[3] = {0.3, 0.5, 0.7};
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_below(50));
        std::vector<Detection> dets;
        for (int i = 0; i < n; ++i) {
            Detection d;
            d.box = testutil::random_box(rng, 60.0, 1.0, 20.0);
            d.class_id = static_cast<int>(rng.next_below(2));
            d.score = rng.uniform(0.01, 1.0);
            dets.push_back(d);
        }
        const double tau = taus[trial % 3];
        const bool agnostic = (trial % 2) == 0;
        const auto fast = rotated_nms(dets, tau, agnostic);
        const auto reference = testutil::reference_nms(dets, tau, agnostic);
        expect(testutil::same_detections(fast, reference),
               "greedy NMS diverged from reference at trial " + std::to_string(trial));
    }
    expect(seconds_since(t0) < 10.0, "runtime exceeded 10 s");
}

// --- criterion 3 ------------------------------------------------------------

void criterion_tiling() {
    const auto windows = plan_tiles(10000, 10000, TileSpec{1024, 256});
    expect(windows.size() == 169, "10000^2 must plan 169 windows, got " +
                                      std::to_string(windows.size()));

    SplitMix64 rng(33);
    for (int trial = 0; trial < 1000; ++trial) {
        const int w = 1 + static_cast<int>(rng.next_below(512));
        const int h = 1 + static_cast<int>(rng.next_below(512));
        const int patch = 1 + static_cast<int>(rng.next_below(128));
        const int overlap = static_cast<int>(rng.next_below(patch));
        const auto tiles = plan_tiles(w, h, TileSpec{patch, overlap});

        std::vector<char> hit(static_cast<std::size_t>(w) * h, 0);
        for (const TileWindow& win : tiles) {
            expect(win.origin_col >= 0 && win.origin_row >= 0 &&
                       win.origin_col + win.width <= w && win.origin_row + win.height <= h,
                   "window leaves the image");
            for (int r = 0; r < win.height; ++r)
                for (int c = 0; c < win.width; ++c)
                    hit[static_cast<std::size_t>(win.origin_row + r) * w + win.origin_col + c] = 1;
        }
        for (char v : hit) expect(v == 1, "uncovered pixel in trial " + std::to_string(trial));
    }
}

// --- criterion 4 ------------------------------------------------------------

void criterion_cross_tile_dedup() {
    // 2000x1000 with patch 1024 / overlap 256 plans column origins 0 and 976;
    // a rule centered at col 1000 sits in the shared band
    const RasterImage image = RasterImage::filled(2000, 1000, 1, 40);
    const auto backend = fixture_detector({make_det(1000, 500, 40, 12, 0.35, 0, 0.9)});
    PipelineConfig cfg;
    cfg.tile_spec = TileSpec{1024, 256};

    const ProcessResult result = process_image(image, *backend, cfg, 2);
    expect(result.report.raw_detections >= 2,
           "expected >= 2 pre-merge detections, got " +
               std::to_string(result.report.raw_detections));
    expect(result.detections.size() == 1, "expected exactly 1 post-merge detection, got " +
                                              std::to_string(result.detections.size()));
}

// --- criterion 5 ------------------------------------------------------------

void criterion_nn_core() {
    const Tensor4 x = seeded_tensor(1, 64, 16, 16, 101);
    const Tensor4 y = dual_branch_sppf(x, seeded_sppf_weights(64, 102));
    expect(y.n == 1 && y.c == 64 && y.h == 16 && y.w == 16,
           "dual_branch_sppf changed the tensor shape");

    // shift equivariance
    const Tensor4 base = seeded_tensor(1, 3, 20, 20, 103, 4.0);
    Tensor4 shifted = base;
    for (double& v : shifted.data) v += 2.13;
    const Tensor4 sp_base = soft_pool2d(base, 3);
    const Tensor4 sp_shift = soft_pool2d(shifted, 3);
    for (std::size_t i = 0; i < sp_base.data.size(); ++i)
        expect(std::abs(sp_shift.data[i] - sp_base.data[i] - 2.13) <= 1e-6,
               "soft-pool shift equivariance violated");

    // window bounds on 1e4 windows (a 100x100 plane pooled with k=3)
    const Tensor4 plane = seeded_tensor(1, 1, 100, 100, 104, 6.0);
    const Tensor4 pooled = soft_pool2d(plane, 3);
    for (int yy = 0; yy < 100; ++yy)
        for (int xx = 0; xx < 100; ++xx) {
            double lo = 1e300, hi = -1e300;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int sy = yy + dy, sx = xx + dx;
                    if (sy < 0 || sy >= 100 || sx < 0 || sx >= 100) continue;
                    lo = std::min(lo, plane.at(0, 0, sy, sx));
                    hi = std::max(hi, plane.at(0, 0, sy, sx));
                }
            const double v = pooled.at(0, 0, yy, xx);
            expect(v >= lo - 1e-12 && v <= hi + 1e-12, "soft-pool left the window bounds");
        }

    // x50 scaling pushes soft-pool to max-pool (values on a quarter grid,
    // so distinct levels are separated by at least 12.5 after scaling)
    SplitMix64 rng(105);
    Tensor4 grid = Tensor4::zeros(1, 1, 40, 40);
    for (double& v : grid.data) v = 50.0 * (static_cast<double>(rng.next_below(5)) / 4.0);
    const Tensor4 soft = soft_pool2d(grid, 3);
    const Tensor4 hard = max_pool2d(grid, 3);
    for (std::size_t i = 0; i < soft.data.size(); ++i)
        expect(std::abs(soft.data[i] - hard.data[i]) <= 1e-3,
               "x50-scaled soft-pool deviates from max-pool by more than 1e-3");

    // stabilized equals the naive formula where the naive formula is finite
    for (int trial = 0; trial < 1000; ++trial) {
        const int count = 1 + static_cast<int>(rng.next_below(9));
        std::vector<double> values(count);
        double num = 0.0, den = 0.0;
        for (double& v : values) v = rng.uniform(-40.0, 40.0);
        for (double v : values) {
            num += std::exp(v) * v;
            den += std::exp(v);
        }
        Tensor4 row = Tensor4::zeros(1, 1, 1, count);
        row.data = values;
        const double stabilized = soft_pool2d(row, 2 * count + 1).at(0, 0, 0, 0);
        expect(std::isfinite(num / den), "naive formula overflowed unexpectedly");
        expect(std::abs(stabilized - num / den) <= 1e-9,
               "stabilized soft-pool deviates from the naive formula");
    }

    // attenuation on 100 random tensors
    const SoftCbamWeights cbam = seeded_cbam_weights(16, 16, 106);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor4 t = seeded_tensor(1, 16, 5, 5, 200 + trial, 6.0);
        const Tensor4 out = soft_cbam(t, cbam);
        for (std::size_t i = 0; i < out.data.size(); ++i)
            expect(std::abs(out.data[i]) <= std::abs(t.data[i]) + 1e-12,
                   "soft_cbam amplified an element");
    }
}

// --- criterion 6 ------------------------------------------------------------

void criterion_cosine_lr() {
    const double lr_max = 1e-2, lr_min = 1e-4;
    const long total = 10000;
    expect(cosine_lr(0, total, lr_max, lr_min) == lr_max, "lr(0) must equal lr_max exactly");
    expect(cosine_lr(total, total, lr_max, lr_min) == lr_min, "lr(T) must equal lr_min exactly");
    expect(cosine_lr(total / 2, total, lr_max, lr_min) == (lr_max + lr_min) / 2.0,
           "lr(T/2) must equal the midpoint exactly");
    double prev = cosine_lr(0, total, lr_max, lr_min);
    for (long t = 1; t <= total; ++t) {
        const double cur = cosine_lr(t, total, lr_max, lr_min);
        expect(cur <= prev, "schedule increased at step " + std::to_string(t));
        prev = cur;
    }
}

// --- criterion 7 ------------------------------------------------------------

void criterion_metrics() {
    expect(precision(ConfusionCounts{3, 1, 0, {}}) == 0.75, "Pr(3,1) must be exactly 0.75");
    expect(recall(ConfusionCounts{9, 0, 1, {}}) == 0.9, "Re(9,1) must be exactly 0.9");
    expect(precision(ConfusionCounts{0, 0, 0, {}}) == 0.0, "0/0 precision convention");
    expect(recall(ConfusionCounts{0, 0, 0, {}}) == 0.0, "0/0 recall convention");

    // AP hand case: ranked TP, FP, TP over two ground truths -> 5/6
    const OrientedBox g0(10, 10, 6, 3, 0.0);
    const OrientedBox g1(40, 40, 6, 3, 0.0);
    std::vector<GroundTruthBox> gts(2);
    gts[0].box = g0;
    gts[1].box = g1;
    const std::vector<Detection> ranked = {make_det(10, 10, 6, 3, 0, 0, 0.9),
                                           make_det(70, 70, 6, 3, 0, 0, 0.8),
                                           make_det(40, 40, 6, 3, 0, 0, 0.7)};
    const double ap = average_precision(ranked, gts, 0.5).value();
    expect(std::abs(ap - 5.0 / 6.0) <= 1e-12, "AP hand case deviates from 5/6");

    // the 10-threshold average: a detection at IoU in [0.60, 0.65) keeps AP
    // at exactly 3 thresholds, so map50_95 = 0.3 * map50
    const OrientedBox gt_box(50, 50, 10, 10, 0.0);
    const double offset = 10.0 * (1.0 - 0.615) / (1.0 + 0.615);
    std::vector<GroundTruthBox> one(1);
    one[0].box = gt_box;
    const double iou = rotated_iou(gt_box, OrientedBox(50 + offset, 50, 10, 10, 0.0));
    expect(iou >= 0.60 && iou < 0.65, "constructed offset missed the [0.60,0.65) band");
    const auto map_pair = map_range({make_det(50 + offset, 50, 10, 10, 0, 0, 0.9)}, one);
    expect(map_pair.first == 1.0, "map50 must be 1 for the offset case");
    expect(std::abs(map_pair.second - 0.3 * map_pair.first) <= 1e-12,
           "map50_95 must average exactly 10 thresholds (0.3 ratio)");

    // self-evaluation: detections identical to labels
    std::vector<GroundTruthBox> self_gts;
    std::vector<Detection> self_dets;
    SplitMix64 rng(71);
    for (int i = 0; i < 10; ++i) {
        GroundTruthBox g;
        g.box = testutil::random_box(rng, 800.0, 6.0, 30.0);
        g.class_id = i % 2;
        self_gts.push_back(g);
        self_dets.push_back(make_det(g.box.cx, g.box.cy, g.box.w, g.box.h, g.box.theta,
                                     g.class_id, 0.5 + 0.04 * i));
    }
    const EvalReport report = evaluate_detections(self_dets, self_gts);
    expect(report.map50 == 1.0 && report.map50_95 == 1.0 && report.precision == 1.0 &&
               report.recall == 1.0,
           "self-evaluation must yield all metrics 1.0");
}

// --- criterion 8 ------------------------------------------------------------

void criterion_georeferencing() {
    GeoTransform scale;
    scale.a = 0.15;
    scale.e = -0.15;
    scale.c = 200000.0;
    scale.f = 900000.0;
    const WorldPoint wp = pixel_to_world(scale, 100, 0);
    expect(std::abs(wp.x - (200000.0 + 15.0)) <= 1e-9, "100 px at 0.15 m/px must be 15 m");

    SplitMix64 rng(88);
    int tested = 0;
    while (tested < 1000) {
        GeoTransform gt;
        gt.a = rng.uniform(-3.0, 3.0);
        gt.d = rng.uniform(-3.0, 3.0);
        gt.b = rng.uniform(-3.0, 3.0);
        gt.e = rng.uniform(-3.0, 3.0);
        gt.c = rng.uniform(-1e6, 1e6);
        gt.f = rng.uniform(-1e6, 1e6);
        if (std::abs(gt.determinant()) < 1e-3) continue;
        ++tested;
        const double col = rng.uniform(-5000.0, 5000.0);
        const double row = rng.uniform(-5000.0, 5000.0);
        const WorldPoint w = pixel_to_world(gt, col, row);
        const PixelPoint p = world_to_pixel(gt, w.x, w.y);
        const double scale_ref = std::max({1.0, std::abs(col), std::abs(row)});
        expect(std::abs(p.col - col) / scale_ref <= 1e-9 &&
                   std::abs(p.row - row) / scale_ref <= 1e-9,
               "pixel<->world round trip exceeded 1e-9 relative error");
    }
}

// --- criterion 9 ------------------------------------------------------------

void criterion_shapefile() {
    CrosswalkRecord rec;
    rec.polygon = {Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}};
    rec.category = CrosswalkCategory::intersection;
    rec.class_id = 0;
    rec.score = 0.9;
    rec.area_m2 = 1.0;

    const std::string stem = testutil::tmp_path("acc_single");
    write_shapefile({rec}, stem, "CRS");
    const std::string shp = testutil::slurp(stem + ".shp");
    expect(shp.size() == 236, ".shp must be exactly 236 bytes, got " +
                                  std::to_string(shp.size()));
    expect(static_cast<unsigned char>(shp[0]) == 0x00 &&
               static_cast<unsigned char>(shp[1]) == 0x00 &&
               static_cast<unsigned char>(shp[2]) == 0x27 &&
               static_cast<unsigned char>(shp[3]) == 0x0A,
           "file code 9994 must be big-endian at offset 0");
    expect(static_cast<unsigned char>(shp[32]) == 0x05 &&
               static_cast<unsigned char>(shp[33]) == 0x00 &&
               static_cast<unsigned char>(shp[34]) == 0x00 &&
               static_cast<unsigned char>(shp[35]) == 0x00,
           "shape type 5 must be little-endian at offset 32");

    const auto back = read_shapefile(stem);
    expect(back.size() == 1, "round trip must return 1 record");
    expect(back[0].category == rec.category && back[0].class_id == rec.class_id &&
               std::abs(back[0].score - rec.score) <= 1e-9 &&
               std::abs(back[0].area_m2 - rec.area_m2) <= 1e-9,
           "attributes must round-trip within 1e-9");
    for (const Vec2& v : back[0].polygon) {
        double best = 1e300;
        for (const Vec2& orig : rec.polygon)
            best = std::min(best, std::hypot(v.x - orig.x, v.y - orig.y));
        expect(best <= 1e-9, "vertices must round-trip within 1e-9");
    }

    SplitMix64 rng(99);
    for (int set = 0; set < 50; ++set) {
        const int count = static_cast<int>(rng.next_below(21));
        std::vector<CrosswalkRecord> records;
        for (int i = 0; i < count; ++i) {
            Detection d = make_det(rng.uniform(0, 5000), rng.uniform(0, 5000),
                                   rng.uniform(5.0, 60.0), rng.uniform(5.0, 30.0),
                                   rng.uniform(-1.5, 1.5), static_cast<int>(rng.next_below(2)),
                                   static_cast<double>(rng.next_below(10000)) / 10000.0);
            records.push_back(detection_to_record(d, GeoTransform{}));
        }
        const std::string rand_stem = testutil::tmp_path("acc_rand");
        write_shapefile(records, rand_stem, "");
        const std::string bytes = testutil::slurp(rand_stem + ".shp");
        const std::uint32_t declared = (static_cast<unsigned char>(bytes[24]) << 24) |
                                       (static_cast<unsigned char>(bytes[25]) << 16) |
                                       (static_cast<unsigned char>(bytes[26]) << 8) |
                                       static_cast<unsigned char>(bytes[27]);
        expect(declared * 2 == bytes.size(),
               "declared .shp length must equal bytes/2 (set " + std::to_string(set) + ")");
    }
}

// --- criterion 10 -----------------------------------------------------------

struct PlantedRule {
    Detection det;
    CrosswalkCategory expected;
};

void criterion_end_to_end() {
    const auto t0 = std::chrono::steady_clock::now();

    // pixel-space scene: roads crossing at (2048, 2048), a straight road at
    // row 3584, a driveway spur near (3200, 700)
    std::vector<PlantedRule> plan;
    auto plant = [&plan](double cx, double cy, double theta, int cls, double score,
                         CrosswalkCategory expected) {
        plan.push_back(PlantedRule{make_det(cx, cy, 44, 14, theta, cls, score), expected});
    };
    plant(2108, 2048, 0.0, 0, 0.97, CrosswalkCategory::intersection);
    plant(1988, 2048, 0.1, 0, 0.95, CrosswalkCategory::intersection);
    plant(2048, 2108, 1.3, 1, 0.93, CrosswalkCategory::intersection);
    plant(2048, 1988, -1.2, 0, 0.91, CrosswalkCategory::intersection);
    plant(3230, 700, 0.4, 1, 0.89, CrosswalkCategory::driveway);
    plant(3180, 750, -0.4, 0, 0.87, CrosswalkCategory::driveway);
    plant(3205, 640, 0.9, 0, 0.85, CrosswalkCategory::driveway);
    plant(800, 3560, 0.05, 0, 0.83, CrosswalkCategory::mid_block);
    plant(1600, 3610, -0.08, 1, 0.81, CrosswalkCategory::mid_block);
    plant(2900, 3600, 0.02, 0, 0.79, CrosswalkCategory::mid_block);
    plant(600, 600, 0.7, 0, 0.77, CrosswalkCategory::unclassified);
    plant(3800, 200, -0.7, 1, 0.75, CrosswalkCategory::unclassified);
    expect(plan.size() == 12, "the scene must plant exactly 12 rules");

    RasterImage image = testutil::asphalt_canvas(4096, 4096);
    std::vector<Detection> rules;
    for (const PlantedRule& p : plan) {
        testutil::draw_crosswalk(image, p.det.box);
        rules.push_back(p.det);
    }

    GeoTransform gt = parse_world_file("0.15\n0\n0\n-0.15\n300000.0\n900000.0\n");
    auto world = [&gt](double col, double row) { return pixel_to_world(gt, col, row); };

    // toy road network in world coordinates matching the pixel scene
    auto line = [&world](double c0, double r0, double c1, double r1, const char* cls) {
        const WorldPoint a = world(c0, r0);
        const WorldPoint b = world(c1, r1);
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      R"({"geometry":{"type":"LineString","coordinates":[[%.6f,%.6f],[%.6f,%.6f]]},"properties":{"road_class":"%s"}})",
                      a.x, a.y, b.x, b.y, cls);
        return std::string(buf);
    };
    const std::string network_doc = "{\"features\":[" + line(0, 2048, 2048, 2048, "road") + "," +
                                    line(2048, 2048, 4096, 2048, "road") + "," +
                                    line(2048, 0, 2048, 2048, "road") + "," +
                                    line(2048, 2048, 2048, 4096, "road") + "," +
                                    line(0, 3584, 4096, 3584, "road") + "," +
                                    line(3200, 600, 3200, 800, "driveway") + "]}";
    const RoadNetwork net = load_road_network(network_doc);

    PipelineConfig cfg;
    cfg.tile_spec = TileSpec{1024, 256};
    const auto backend = fixture_detector(rules);

    std::string first_dets_text;
    std::string first_shp;
    for (int workers : {1, 4, 8}) {
        ProcessResult result = process_image(image, *backend, cfg, workers);
        sort_for_output(result.detections);
        expect(result.detections.size() == 12,
               "expected 12 merged detections, got " + std::to_string(result.detections.size()));

        std::vector<CrosswalkRecord> records;
        for (const Detection& d : result.detections) {
            CrosswalkRecord rec = detection_to_record(d, gt);
            rec.category = classify(rec, net);
            records.push_back(rec);
        }

        // each planted rule must be recovered with its constructed category
        for (const PlantedRule& p : plan) {
            const WorldPoint expected_center = world(p.det.box.cx, p.det.box.cy);
            double best = 1e300;
            const CrosswalkRecord* closest = nullptr;
            for (const CrosswalkRecord& rec : records) {
                const Vec2 c = rec.centroid();
                const double dist = std::hypot(c.x - expected_center.x, c.y - expected_center.y);
                if (dist < best) {
                    best = dist;
                    closest = &rec;
                }
            }
            expect(closest != nullptr && best <= 0.5 * 0.15,
                   "centroid error above 0.5 px for a planted rule");
            expect(closest->category == p.expected, "misclassified planted crosswalk");
        }

        const std::string dets_text = format_detections(result.detections);
        const std::string stem = testutil::tmp_path("acc_e2e_" + std::to_string(workers));
        write_shapefile(records, stem, "EPSG-like CRS text");
        const std::string shp = testutil::slurp(stem + ".shp");
        if (first_dets_text.empty()) {
            first_dets_text = dets_text;
            first_shp = shp;
        } else {
            expect(dets_text == first_dets_text, "detection bytes differ across worker counts");
            expect(shp == first_shp, "shapefile bytes differ across worker counts");
        }
    }

    expect(seconds_since(t0) < 10.0, "end-to-end run exceeded 10 s");
}

// --- criterion 11 -----------------------------------------------------------

void criterion_augmentation() {
    SplitMix64 seed_rng(60);
    Sample s;
    s.image = RasterImage::filled(96, 96, 3, 0);
    for (std::uint8_t& v : s.image.samples)
        v = static_cast<std::uint8_t>(seed_rng.next_below(256));
    for (int i = 0; i < 4; ++i) {
        GroundTruthBox g;
        g.box = OrientedBox(20.0 + 15.0 * i, 30.0 + 10.0 * i, 10, 4, 0.3 * i - 0.4);
        g.class_id = i % 2;
        s.labels.push_back(g);
    }

    // zero-angle rotation is the identity
    const Sample same = rotate_sample(s, 0.0);
    expect(same.image.samples == s.image.samples, "zero-angle rotation changed pixels");
    expect(same.labels.size() == s.labels.size(), "zero-angle rotation changed labels");
    for (std::size_t i = 0; i < s.labels.size(); ++i)
        expect(same.labels[i].box.cx == s.labels[i].box.cx &&
                   same.labels[i].box.cy == s.labels[i].box.cy &&
                   same.labels[i].box.theta == s.labels[i].box.theta,
               "zero-angle rotation perturbed a label");

    // rotated label centers match the closed-form rotation
    const double angle = 0.1;
    const Sample turned = rotate_sample(s, angle);
    const double ccx = (96 - 1) / 2.0, ccy = (96 - 1) / 2.0;
    std::size_t matched = 0;
    for (const GroundTruthBox& g : s.labels) {
        const double dx = g.box.cx - ccx, dy = g.box.cy - ccy;
        const double ex = std::cos(angle) * dx - std::sin(angle) * dy + ccx;
        const double ey = std::sin(angle) * dx + std::cos(angle) * dy + ccy;
        if (ex < 0 || ex >= 96 || ey < 0 || ey >= 96) continue;
        const GroundTruthBox& out = turned.labels[matched++];
        expect(std::abs(out.box.cx - ex) <= 1e-6 && std::abs(out.box.cy - ey) <= 1e-6,
               "rotated label center deviates from the closed form");
        expect(out.box.w == g.box.w && out.box.h == g.box.h, "rotation altered label extents");
    }
    expect(matched == turned.labels.size(), "unexpected label retention after rotation");

    // zero-gain HSV is the identity up to quantization
    AugmentRng hsv_rng(61);
    const RasterImage jittered = hsv_jitter(s.image, 0.0, 0.0, 0.0, hsv_rng);
    for (std::size_t i = 0; i < jittered.samples.size(); ++i)
        expect(std::abs(static_cast<int>(jittered.samples[i]) -
                        static_cast<int>(s.image.samples[i])) <= 1,
               "zero-gain HSV moved a channel by more than 1");

    // seeded mosaic reproduces byte-identical output
    const std::array<Sample, 4> quads = {s, s, s, s};
    AugmentRng m1(777), m2(777);
    const Sample a = mosaic(quads, 160, m1);
    const Sample b = mosaic(quads, 160, m2);
    expect(a.image.samples == b.image.samples, "seeded mosaic is not byte-identical");
    expect(a.labels.size() == b.labels.size(), "seeded mosaic label sets differ");
    for (std::size_t i = 0; i < a.labels.size(); ++i)
        expect(a.labels[i].box.cx == b.labels[i].box.cx &&
                   a.labels[i].box.cy == b.labels[i].box.cy,
               "seeded mosaic labels differ");
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<void()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "rotated IoU Monte Carlo oracle (500 pairs, 1e5 samples, 2e-3)", criterion_iou_oracle},
        {2, "greedy NMS equals brute-force reference (200 instances)", criterion_nms_equivalence},
        {3, "tile planning: 169 windows at full scale, exhaustive coverage", criterion_tiling},
        {4, "cross-tile duplicate collapses to one detection", criterion_cross_tile_dedup},
        {5, "nn core: sppf shape, soft-pool bounds/limits, cbam attenuation", criterion_nn_core},
        {6, "cosine schedule endpoints, midpoint, monotone decay", criterion_cosine_lr},
        {7, "metrics: Pr/Re arithmetic, AP 5/6, 10-threshold mAP, self-eval", criterion_metrics},
        {8, "georeferencing round-trip at 1e-9, 15 cm scale arithmetic", criterion_georeferencing},
        {9, "shapefile: 236-byte record file, round-trip, length fields", criterion_shapefile},
        {10, "end-to-end: 12 planted crosswalks, classified, worker-stable", criterion_end_to_end},
        {11, "augmentation identities, determinism, closed-form rotation", criterion_augmentation},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        try {
            c.run();
            std::printf("PASS  %2d  %s\n", c.id, c.name);
        } catch (const std::exception& e) {
            ++failures;
            std::printf("FAIL  %2d  %s: %s\n", c.id, c.name, e.what());
        }
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
