#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xwalk/geometry.hpp"
#include "xwalk/pipeline.hpp"

namespace xwalk {

struct GroundTruthBox {
    OrientedBox box;  ///< pixel coordinates
    int class_id = 0;
};

struct ConfusionCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    /// True negatives only exist for patch-level classification tasks;
    /// detection matching leaves this empty.
    std::optional<long> tn;
};

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

/// Score-ranked precision/recall samples; recall is non-decreasing.
struct PrCurve {
    std::vector<PrPoint> points;
};

struct MatchResult {
    ConfusionCounts counts;
    /// Ground-truth index matched by each detection, -1 for false positives.
    std::vector<int> det_to_gt;
};

/// Minimum-area enclosing rectangle of a point set (rotating calipers over
/// the convex hull). Throws ValidationError on degenerate (collinear) input.
OrientedBox min_area_rect(const std::vector<Vec2>& points);

/// Parses `class x1 y1 x2 y2 x3 y3 x4 y4` lines with coordinates normalized
/// to [0,1]; each quadrilateral becomes the minimum-area enclosing rectangle,
/// denormalized by the image size. Throws ParseError with the line number.
std::vector<GroundTruthBox> parse_obb_labels(const std::string& text, int image_width,
                                             int image_height);
std::vector<GroundTruthBox> read_obb_labels(const std::string& path, int image_width,
                                            int image_height);

/// Greedy matching: detections in score-descending order each claim the
/// unmatched same-class ground truth with the highest rotated IoU >=
/// iou_thresh. Matched detections are TP, the rest FP; unmatched ground
/// truths are FN.
MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<GroundTruthBox>& gts, double iou_thresh);

/// tp / (tp + fp); 0 when the denominator is 0.
double precision(const ConfusionCounts& c);
/// tp / (tp + fn); 0 when the denominator is 0.
double recall(const ConfusionCounts& c);
/// (tp + tn) / (tp + tn + fp + fn). Throws ValidationError when tn is absent,
/// because detection matching defines no true-negative count.
double accuracy(const ConfusionCounts& c);

/// Precision/recall samples after each ranked detection (single class).
PrCurve pr_curve(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts,
                 double iou_thresh);

/// Area under the monotonized precision envelope (exact all-point
/// integration) for a single class. Empty ground truth -> nullopt, so the
/// class is excluded from any mean.
std::optional<double> average_precision(const std::vector<Detection>& dets,
                                        const std::vector<GroundTruthBox>& gts, double iou_thresh);

/// (mAP@0.50, mAP averaged over IoU 0.50..0.95 in 0.05 steps), means taken
/// over classes that have ground truth. Throws ValidationError when no class
/// has any.
std::pair<double, double> map_range(const std::vector<Detection>& dets,
                                    const std::vector<GroundTruthBox>& gts);

struct ClassMetrics {
    int class_id = 0;
    double ap50 = 0.0;
    double ap50_95 = 0.0;
    double precision = 0.0;  ///< at IoU 0.5
    double recall = 0.0;     ///< at IoU 0.5
};

struct EvalReport {
    std::vector<ClassMetrics> per_class;  ///< classes with ground truth, id ascending
    double map50 = 0.0;
    double map50_95 = 0.0;
    double precision = 0.0;  ///< all classes pooled, IoU 0.5
    double recall = 0.0;
};

EvalReport evaluate_detections(const std::vector<Detection>& dets,
                               const std::vector<GroundTruthBox>& gts);

}  // namespace xwalk
