#pragma once

#include <memory>
#include <string>
#include <vector>

#include "xwalk/geometry.hpp"
#include "xwalk/raster.hpp"

namespace xwalk {

/// Crosswalk marking classes.
constexpr int kClassStriped = 0;   ///< zebra / continental / ladder markings
constexpr int kClassParallel = 1;  ///< two parallel solid lines
constexpr int kNumClasses = 2;

struct Detection {
    OrientedBox box;  ///< pixel coordinates
    int class_id = 0;
    double score = 0.0;
};

/// Per-tile detector contract. `window` locates the tile inside the parent
/// image; returned boxes are in tile-local pixel coordinates and may overshoot
/// the tile bounds by at most patch/4. Tiles arrive concurrently from the
/// worker pool, so implementations must be stateless or internally
/// synchronized.
class DetectorBackend {
public:
    virtual ~DetectorBackend() = default;
    virtual std::vector<Detection> detect(const RasterImage& tile,
                                          const TileWindow& window) const = 0;
};

struct PipelineConfig {
    double conf_threshold = 0.25;
    double nms_iou = 0.5;
    bool class_agnostic_nms = true;
    TileSpec tile_spec;

    void validate() const;  ///< thresholds must lie in (0,1)
};

/// Deterministic backend replaying a fixed rule list. Rules are detections in
/// global pixel coordinates; a tile reports every rule whose box center falls
/// inside its window, translated to tile-local coordinates.
std::unique_ptr<DetectorBackend> fixture_detector(std::vector<Detection> rules);

/// Runs the backend on one tile, drops detections below conf_threshold and
/// lifts the survivors to global coordinates (+origin; w, h, theta unchanged).
/// Backend failures are rethrown as PipelineError with the tile index attached.
std::vector<Detection> run_tile(const DetectorBackend& backend, const RasterImage& tile,
                                const TileWindow& window, double conf_threshold);

/// Greedy rotated NMS. Candidates are ranked by (score desc, insertion index
/// asc); each kept detection suppresses later candidates with IoU >=
/// iou_thresh (same class only when class_agnostic is false). Output preserves
/// the kept order.
std::vector<Detection> rotated_nms(const std::vector<Detection>& dets, double iou_thresh,
                                   bool class_agnostic);

struct TileDetections {
    TileWindow window;
    std::vector<Detection> detections;  ///< already in global coordinates
};

/// Concatenates per-tile results in tile_index order, then applies rotated
/// NMS. Output does not depend on the order of the input list.
std::vector<Detection> merge_tiles(std::vector<TileDetections> per_tile,
                                   const PipelineConfig& cfg);

struct ProcessReport {
    std::size_t tile_count = 0;
    std::size_t raw_detections = 0;  ///< confidence-filtered, before merging
    std::size_t merged_detections = 0;
    double elapsed_seconds = 0.0;
};

struct ProcessResult {
    std::vector<Detection> detections;
    ProcessReport report;
};

/// Full sliced-inference pass: plan tiles, extract, detect on a pool of
/// `workers` threads, merge. Output is identical for any worker count. Tile
/// failures are aggregated into one PipelineError.
ProcessResult process_image(const RasterImage& image, const DetectorBackend& backend,
                            const PipelineConfig& cfg, int workers = 1);

/// Detection interchange text: one `class_id score cx cy w h theta_radians`
/// line per detection, global pixel coordinates. Values round-trip exactly.
std::string format_detections(const std::vector<Detection>& dets);
std::vector<Detection> parse_detections(const std::string& text);
std::vector<Detection> read_detections(const std::string& path);
void write_detections(const std::string& path, const std::vector<Detection>& dets);

/// Byte-stable output order: score desc, then cx, cy, class ascending.
void sort_for_output(std::vector<Detection>& dets);

}  // namespace xwalk
