// xwalk: oriented crosswalk detection pipeline for large aerial rasters.
// Subcommands: tile, detect, export, evaluate, demo-modules.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "xwalk/augment.hpp"
#include "xwalk/error.hpp"
#include "xwalk/eval.hpp"
#include "xwalk/geo_export.hpp"
#include "xwalk/nn.hpp"
#include "xwalk/pipeline.hpp"
#include "xwalk/raster.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStageFailure = 3;
constexpr int kExitInvariant = 4;

struct RunConfig {
    std::string input;
    std::string world;
    int width = 0;
    int height = 0;
    int patch = 1024;
    int overlap = 256;
    double conf = 0.25;
    double nms_iou = 0.5;
    bool class_aware = false;
    std::string backend = "fixture";
    std::string rules;
    std::string model;
    int workers = 1;
    std::string output;
    std::string detections;
    std::string labels;
    std::string crs;
    std::string roads;
    std::uint64_t seed = 1;
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw xwalk::IoError("cannot write output: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw xwalk::IoError("output write failed: " + path);
}

void resolve_dimensions(RunConfig& cfg) {
    if (cfg.width >= 1 && cfg.height >= 1) return;
    if (cfg.input.empty())
        throw xwalk::ValidationError("need --width/--height or --input to size the image");
    const xwalk::RasterHeader h = xwalk::read_raster_header(cfg.input);
    cfg.width = h.width;
    cfg.height = h.height;
}

int cmd_tile(RunConfig cfg) {
    resolve_dimensions(cfg);
    const xwalk::TileSpec spec{cfg.patch, cfg.overlap};
    if (!spec.valid()) throw xwalk::ValidationError("require 0 <= overlap < patch");

    std::string manifest = "tile_index origin_col origin_row width height\n";
    for (const xwalk::TileWindow& w : xwalk::plan_tiles(cfg.width, cfg.height, spec)) {
        manifest += std::to_string(w.tile_index) + ' ' + std::to_string(w.origin_col) + ' ' +
                    std::to_string(w.origin_row) + ' ' + std::to_string(w.width) + ' ' +
                    std::to_string(w.height) + '\n';
    }
    write_text(cfg.output, manifest);
    return kExitOk;
}

std::unique_ptr<xwalk::DetectorBackend> make_backend(const RunConfig& cfg) {
    if (cfg.backend == "fixture") {
        if (cfg.rules.empty())
            throw xwalk::ValidationError("fixture backend requires --rules <detections file>");
        return xwalk::fixture_detector(xwalk::read_detections(cfg.rules));
    }
    if (cfg.backend == "external")
        throw xwalk::ValidationError(
            "external model backends are not bundled with this build; use the fixture backend");
    throw xwalk::ValidationError("unknown backend '" + cfg.backend + "'");
}

int cmd_detect(const RunConfig& cfg) {
    if (cfg.input.empty()) throw xwalk::ValidationError("detect requires --input <raster>");
    const xwalk::RasterImage image = xwalk::read_raster(cfg.input);
    const auto backend = make_backend(cfg);

    xwalk::PipelineConfig pipeline;
    pipeline.conf_threshold = cfg.conf;
    pipeline.nms_iou = cfg.nms_iou;
    pipeline.class_agnostic_nms = !cfg.class_aware;
    pipeline.tile_spec = xwalk::TileSpec{cfg.patch, cfg.overlap};
    pipeline.validate();
    if (cfg.workers < 1) throw xwalk::ValidationError("workers must be >= 1");

    xwalk::ProcessResult result = xwalk::process_image(image, *backend, pipeline, cfg.workers);
    xwalk::sort_for_output(result.detections);
    write_text(cfg.output, xwalk::format_detections(result.detections));

    std::fprintf(stderr, "tiles: %zu  raw: %zu  merged: %zu  seconds: %.3f\n",
                 result.report.tile_count, result.report.raw_detections,
                 result.report.merged_detections, result.report.elapsed_seconds);
    return kExitOk;
}

int cmd_export(const RunConfig& cfg) {
    if (cfg.detections.empty())
        throw xwalk::ValidationError("export requires --detections <file>");
    if (cfg.world.empty())
        throw xwalk::ValidationError("export requires --world <world file> for world output");
    if (cfg.output.empty()) throw xwalk::ValidationError("export requires --output <path stem>");

    const std::vector<xwalk::Detection> dets = xwalk::read_detections(cfg.detections);
    const xwalk::GeoTransform gt = xwalk::read_world_file(cfg.world);

    std::string crs_wkt;
    if (!cfg.crs.empty()) {
        std::ifstream in(cfg.crs);
        if (!in) throw xwalk::IoError("cannot open CRS text: " + cfg.crs);
        std::ostringstream buf;
        buf << in.rdbuf();
        crs_wkt = buf.str();
    }

    xwalk::RoadNetwork net;
    if (!cfg.roads.empty()) net = xwalk::read_road_network(cfg.roads);

    std::vector<xwalk::CrosswalkRecord> records;
    records.reserve(dets.size());
    for (const xwalk::Detection& det : dets) {
        xwalk::CrosswalkRecord rec = xwalk::detection_to_record(det, gt);
        if (!net.empty()) rec.category = xwalk::classify(rec, net);
        records.push_back(rec);
    }
    if (!cfg.roads.empty() && net.empty())
        std::fprintf(stderr, "warning: road network is empty; records stay unclassified\n");

    xwalk::write_shapefile(records, cfg.output, crs_wkt);
    xwalk::write_geojson_like(records, cfg.output + ".json");
    std::fprintf(stderr, "exported %zu records to %s.{shp,shx,dbf,prj,json}\n", records.size(),
                 cfg.output.c_str());
    return kExitOk;
}

int cmd_evaluate(RunConfig cfg) {
    if (cfg.detections.empty())
        throw xwalk::ValidationError("evaluate requires --detections <file>");
    if (cfg.labels.empty()) throw xwalk::ValidationError("evaluate requires --labels <file>");
    resolve_dimensions(cfg);

    const std::vector<xwalk::Detection> dets = xwalk::read_detections(cfg.detections);
    const std::vector<xwalk::GroundTruthBox> gts =
        xwalk::read_obb_labels(cfg.labels, cfg.width, cfg.height);
    if (gts.empty()) throw xwalk::ValidationError("label file has no ground truth boxes");

    const xwalk::EvalReport report = xwalk::evaluate_detections(dets, gts);
    std::string out;
    char line[128];
    std::snprintf(line, sizeof(line), "classes: %zu\n", report.per_class.size());
    out += line;
    std::snprintf(line, sizeof(line), "map50: %.6f\n", report.map50);
    out += line;
    std::snprintf(line, sizeof(line), "map50_95: %.6f\n", report.map50_95);
    out += line;
    std::snprintf(line, sizeof(line), "precision: %.6f\n", report.precision);
    out += line;
    std::snprintf(line, sizeof(line), "recall: %.6f\n", report.recall);
    out += line;
    out += "class,ap50,ap50_95,precision,recall\n";
    for (const xwalk::ClassMetrics& m : report.per_class) {
        std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f\n", m.class_id, m.ap50,
                      m.ap50_95, m.precision, m.recall);
        out += line;
    }
    write_text(cfg.output, out);
    return kExitOk;
}

int cmd_demo_modules(const RunConfig& cfg, const std::string& weights_path,
                     const std::string& dump_weights_path, int channels, int side) {
    xwalk::SppfWeights sppf;
    xwalk::SoftCbamWeights cbam;
    if (!weights_path.empty()) {
        std::tie(sppf, cbam) = xwalk::load_weights(weights_path);
        if (sppf.max_branch.pre_conv.in_channels != channels)
            throw xwalk::ValidationError("weight file channel count does not match --channels");
    } else {
        sppf = xwalk::seeded_sppf_weights(channels, cfg.seed);
        cbam = xwalk::seeded_cbam_weights(channels, 16, cfg.seed + 1);
    }
    if (!dump_weights_path.empty()) xwalk::save_weights(dump_weights_path, sppf, cbam);

    int failures = 0;
    auto check = [&failures](const char* name, bool ok) {
        std::printf("%s %s\n", ok ? "ok  " : "FAIL", name);
        if (!ok) ++failures;
    };

    const xwalk::Tensor4 x = xwalk::seeded_tensor(1, channels, side, side, cfg.seed + 2);
    const xwalk::Tensor4 y = xwalk::dual_branch_sppf(x, sppf);
    std::printf("dual_branch_sppf: (%d,%d,%d,%d) -> (%d,%d,%d,%d)\n", x.n, x.c, x.h, x.w, y.n,
                y.c, y.h, y.w);
    check("sppf preserves shape", y.same_shape(x));

    // soft-pool invariants on a fresh random tensor
    const xwalk::Tensor4 t = xwalk::seeded_tensor(1, 2, 12, 12, cfg.seed + 3);
    const xwalk::Tensor4 sp = xwalk::soft_pool2d(t, 3);
    const xwalk::Tensor4 mp = xwalk::max_pool2d(t, 3);
    bool bounded = true;
    for (std::size_t i = 0; i < sp.data.size(); ++i)
        if (sp.data[i] > mp.data[i] + 1e-12) bounded = false;
    check("soft-pool bounded by window max", bounded);

    xwalk::Tensor4 shifted = t;
    for (double& v : shifted.data) v += 0.37;
    const xwalk::Tensor4 sp_shifted = xwalk::soft_pool2d(shifted, 3);
    bool equivariant = true;
    for (std::size_t i = 0; i < sp.data.size(); ++i)
        if (std::abs(sp_shifted.data[i] - sp.data[i] - 0.37) > 1e-6) equivariant = false;
    check("soft-pool shift equivariance", equivariant);

    const xwalk::Tensor4 out = xwalk::soft_cbam(x, cbam);
    std::printf("soft_cbam: (%d,%d,%d,%d) -> (%d,%d,%d,%d)\n", x.n, x.c, x.h, x.w, out.n, out.c,
                out.h, out.w);
    bool attenuating = out.same_shape(x);
    for (std::size_t i = 0; attenuating && i < out.data.size(); ++i)
        if (std::abs(out.data[i]) > std::abs(x.data[i]) + 1e-12) attenuating = false;
    check("soft_cbam attenuates (|out| <= |x|)", attenuating);

    const double lr0 = xwalk::cosine_lr(0, 1000, 1e-2, 1e-4);
    const double lr_mid = xwalk::cosine_lr(500, 1000, 1e-2, 1e-4);
    const double lr_end = xwalk::cosine_lr(1000, 1000, 1e-2, 1e-4);
    bool schedule_ok = lr0 == 1e-2 && lr_end == 1e-4 && std::abs(lr_mid - (1e-2 + 1e-4) / 2) < 1e-18;
    for (long s = 1; s <= 1000 && schedule_ok; ++s)
        if (xwalk::cosine_lr(s, 1000, 1e-2, 1e-4) > xwalk::cosine_lr(s - 1, 1000, 1e-2, 1e-4))
            schedule_ok = false;
    check("cosine schedule endpoints and monotone decay", schedule_ok);

    return failures == 0 ? kExitOk : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"oriented crosswalk detection over large aerial rasters"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config; command-line flags override");

    RunConfig cfg;
    std::string weights_path;
    std::string dump_weights_path;
    int demo_channels = 64;
    int demo_side = 16;

    // Options live on the main app so flat config keys and flags apply to
    // every stage; subcommands pick the stage and fall through for parsing.
    app.add_option("--input", cfg.input, "raster path")->group("io");
    app.add_option("--output", cfg.output, "output path ('-' or empty for stdout)")->group("io");
    app.add_option("--detections", cfg.detections, "detection interchange file")->group("io");
    app.add_option("--labels", cfg.labels, "normalized 9-token OBB label file")->group("io");
    app.add_option("--world", cfg.world, "6-line world file")->group("io");
    app.add_option("--crs", cfg.crs, "CRS WKT text file for .prj")->group("io");
    app.add_option("--roads", cfg.roads, "road network (line-feature JSON document)")
        ->group("io");

    app.add_option("--width", cfg.width, "image width in pixels")->group("tiling");
    app.add_option("--height", cfg.height, "image height in pixels")->group("tiling");
    app.add_option("--patch", cfg.patch, "tile size in pixels")->group("tiling");
    app.add_option("--overlap", cfg.overlap, "tile overlap in pixels")->group("tiling");

    app.add_option("--conf", cfg.conf, "confidence threshold")->group("detection");
    app.add_option("--nms-iou", cfg.nms_iou, "NMS IoU threshold")->group("detection");
    app.add_flag("--class-aware", cfg.class_aware, "suppress within classes only")
        ->group("detection");
    app.add_option("--backend", cfg.backend, "detector backend: fixture|external")
        ->group("detection");
    app.add_option("--rules", cfg.rules, "fixture rules (detection interchange file)")
        ->group("detection");
    app.add_option("--model", cfg.model, "external model path (unused by fixture)")
        ->group("detection");
    app.add_option("--workers", cfg.workers, "tile worker threads")->group("detection");

    app.add_option("--seed", cfg.seed, "rng seed")->group("demo");
    app.add_option("--channels", demo_channels, "demo input channels (even)")->group("demo");
    app.add_option("--side", demo_side, "demo input spatial size")->group("demo");
    app.add_option("--weights", weights_path, "load weights from container file")->group("demo");
    app.add_option("--dump-weights", dump_weights_path, "save the effective weights")
        ->group("demo");

    CLI::App* tile = app.add_subcommand("tile", "plan overlapping tile windows");
    CLI::App* detect = app.add_subcommand("detect", "run the detector over tiles");
    CLI::App* exp = app.add_subcommand("export", "georeference detections and write shapefiles");
    CLI::App* eval = app.add_subcommand("evaluate", "score detections against OBB labels");
    CLI::App* demo = app.add_subcommand("demo-modules", "run nn module forward-pass checks");
    for (CLI::App* sub : {tile, detect, exp, eval, demo}) sub->fallthrough(true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (tile->parsed()) return cmd_tile(cfg);
        if (detect->parsed()) return cmd_detect(cfg);
        if (exp->parsed()) return cmd_export(cfg);
        if (eval->parsed()) return cmd_evaluate(cfg);
        if (demo->parsed())
            return cmd_demo_modules(cfg, weights_path, dump_weights_path, demo_channels,
                                    demo_side);
    } catch (const xwalk::PipelineError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitStageFailure;
    } catch (const xwalk::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitStageFailure;
    }
    return kExitConfig;
}
