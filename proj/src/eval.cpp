#include "xwalk/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "xwalk/error.hpp"

namespace xwalk {

namespace {

// Andrew monotone chain, CCW hull without collinear points.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;

    std::vector<Vec2> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace

OrientedBox min_area_rect(const std::vector<Vec2>& points) {
    const std::vector<Vec2> hull = convex_hull(points);
    if (hull.size() < 3) throw ValidationError("min_area_rect: degenerate (collinear) points");

    double best_area = std::numeric_limits<double>::infinity();
    OrientedBox best;
    for (std::size_t i = 0, n = hull.size(); i < n; ++i) {
        const Vec2 edge = hull[(i + 1) % n] - hull[i];
        const double len = std::hypot(edge.x, edge.y);
        if (len == 0.0) continue;
        const Vec2 u{edge.x / len, edge.y / len};
        const Vec2 v{-u.y, u.x};

        double smin = std::numeric_limits<double>::infinity(), smax = -smin;
        double tmin = smin, tmax = -smin;
        for (const Vec2& p : hull) {
            const double s = dot(p, u);
            const double t = dot(p, v);
            smin = std::min(smin, s);
            smax = std::max(smax, s);
            tmin = std::min(tmin, t);
            tmax = std::max(tmax, t);
        }
        const double w = smax - smin;
        const double h = tmax - tmin;
        const double area = w * h;
        if (area < best_area) {
            const double sc = (smin + smax) / 2.0;
            const double tc = (tmin + tmax) / 2.0;
            best_area = area;
            best = OrientedBox(u.x * sc + v.x * tc, u.y * sc + v.y * tc, w, h,
                               std::atan2(u.y, u.x));
        }
    }
    if (!std::isfinite(best_area)) throw ValidationError("min_area_rect: degenerate points");
    return best;
}

std::vector<GroundTruthBox> parse_obb_labels(const std::string& text, int image_width,
                                             int image_height) {
    if (image_width < 1 || image_height < 1)
        throw ValidationError("parse_obb_labels: image dimensions must be >= 1");

    std::vector<GroundTruthBox> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        if (tokens.empty()) continue;
        if (tokens.size() != 9)
            throw ParseError("labels line " + std::to_string(line_no) + ": expected 9 tokens, got " +
                             std::to_string(tokens.size()));

        const auto num = [&](const std::string& t) {
            try {
                std::size_t used = 0;
                const double v = std::stod(t, &used);
                if (used != t.size()) throw std::invalid_argument(t);
                return v;
            } catch (const std::exception&) {
                throw ParseError("labels line " + std::to_string(line_no) + ": bad number '" + t +
                                 "'");
            }
        };

        const double cls = num(tokens[0]);
        GroundTruthBox gt;
        gt.class_id = static_cast<int>(cls);
        if (cls != gt.class_id || gt.class_id < 0 || gt.class_id >= kNumClasses)
            throw ParseError("labels line " + std::to_string(line_no) + ": class id out of range");

        std::vector<Vec2> quad(4);
        for (int i = 0; i < 4; ++i) {
            const double nx = num(tokens[1 + 2 * i]);
            const double ny = num(tokens[2 + 2 * i]);
            if (nx < 0.0 || nx > 1.0 || ny < 0.0 || ny > 1.0)
                throw ParseError("labels line " + std::to_string(line_no) +
                                 ": coordinates must be normalized to [0,1]");
            quad[i] = Vec2{nx * image_width, ny * image_height};
        }
        try {
            gt.box = min_area_rect(quad);
        } catch (const ValidationError& e) {
            throw ParseError("labels line " + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(gt);
    }
    return out;
}

std::vector<GroundTruthBox> read_obb_labels(const std::string& path, int image_width,
                                            int image_height) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open labels: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_obb_labels(buf.str(), image_width, image_height);
}

MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<GroundTruthBox>& gts, double iou_thresh) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    MatchResult result;
    result.det_to_gt.assign(dets.size(), -1);
    std::vector<bool> gt_taken(gts.size(), false);

    for (std::size_t idx : order) {
        const Detection& det = dets[idx];
        double best_iou = 0.0;
        int best_gt = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (gt_taken[g] || gts[g].class_id != det.class_id) continue;
            const double iou = rotated_iou(det.box, gts[g].box);
            if (iou >= iou_thresh && iou > best_iou) {
                best_iou = iou;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0) {
            gt_taken[best_gt] = true;
            result.det_to_gt[idx] = best_gt;
            ++result.counts.tp;
        } else {
            ++result.counts.fp;
        }
    }
    result.counts.fn = static_cast<long>(gts.size()) - result.counts.tp;
    return result;
}

double precision(const ConfusionCounts& c) {
    const long denom = c.tp + c.fp;
    return denom == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

double recall(const ConfusionCounts& c) {
    const long denom = c.tp + c.fn;
    return denom == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

double accuracy(const ConfusionCounts& c) {
    if (!c.tn.has_value())
        throw ValidationError(
            "accuracy: true negatives are undefined for detection; supply an explicit tn");
    const long denom = c.tp + *c.tn + c.fp + c.fn;
    return denom == 0 ? 0.0 : static_cast<double>(c.tp + *c.tn) / static_cast<double>(denom);
}

PrCurve pr_curve(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts,
                 double iou_thresh) {
    const MatchResult match = match_detections(dets, gts, iou_thresh);

    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    PrCurve curve;
    long tp = 0, fp = 0;
    const double total_gt = static_cast<double>(gts.size());
    for (std::size_t idx : order) {
        if (match.det_to_gt[idx] >= 0)
            ++tp;
        else
            ++fp;
        PrPoint pt;
        pt.recall = total_gt == 0.0 ? 0.0 : static_cast<double>(tp) / total_gt;
        pt.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        curve.points.push_back(pt);
    }
    return curve;
}

std::optional<double> average_precision(const std::vector<Detection>& dets,
                                        const std::vector<GroundTruthBox>& gts,
                                        double iou_thresh) {
    if (gts.empty()) return std::nullopt;
    const PrCurve curve = pr_curve(dets, gts, iou_thresh);
    if (curve.points.empty()) return 0.0;

    // Monotonize precision from the right, then integrate exactly.
    const std::size_t n = curve.points.size();
    std::vector<double> envelope(n);
    double running = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        running = std::max(running, curve.points[i].precision);
        envelope[i] = running;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ap += (curve.points[i].recall - prev_recall) * envelope[i];
        prev_recall = curve.points[i].recall;
    }
    return ap;
}

namespace {

struct PerClassInputs {
    std::vector<Detection> dets;
    std::vector<GroundTruthBox> gts;
};

std::map<int, PerClassInputs> split_by_class(const std::vector<Detection>& dets,
                                             const std::vector<GroundTruthBox>& gts) {
    std::map<int, PerClassInputs> by_class;
    for (const GroundTruthBox& gt : gts) by_class[gt.class_id].gts.push_back(gt);
    for (const Detection& det : dets) {
        auto it = by_class.find(det.class_id);
        if (it != by_class.end()) it->second.dets.push_back(det);
        // detections for classes with no ground truth cannot contribute to AP
    }
    return by_class;
}

constexpr int kMapThresholds = 10;  // 0.50 .. 0.95 step 0.05

}  // namespace

std::pair<double, double> map_range(const std::vector<Detection>& dets,
                                    const std::vector<GroundTruthBox>& gts) {
    const auto by_class = split_by_class(dets, gts);
    if (by_class.empty()) throw ValidationError("map_range: no class has ground truth");

    double sum50 = 0.0;
    double sum_range = 0.0;
    for (const auto& [cls, inputs] : by_class) {
        (void)cls;
        sum50 += average_precision(inputs.dets, inputs.gts, 0.50).value();
        double acc = 0.0;
        for (int k = 0; k < kMapThresholds; ++k)
            acc += average_precision(inputs.dets, inputs.gts, 0.50 + 0.05 * k).value();
        sum_range += acc / kMapThresholds;
    }
    const double classes = static_cast<double>(by_class.size());
    return {sum50 / classes, sum_range / classes};
}

EvalReport evaluate_detections(const std::vector<Detection>& dets,
                               const std::vector<GroundTruthBox>& gts) {
    const auto by_class = split_by_class(dets, gts);
    if (by_class.empty()) throw ValidationError("evaluate_detections: no class has ground truth");

    EvalReport report;
    for (const auto& [cls, inputs] : by_class) {
        ClassMetrics m;
        m.class_id = cls;
        m.ap50 = average_precision(inputs.dets, inputs.gts, 0.50).value();
        double acc = 0.0;
        for (int k = 0; k < kMapThresholds; ++k)
            acc += average_precision(inputs.dets, inputs.gts, 0.50 + 0.05 * k).value();
        m.ap50_95 = acc / kMapThresholds;
        const MatchResult match = match_detections(inputs.dets, inputs.gts, 0.50);
        m.precision = precision(match.counts);
        m.recall = recall(match.counts);
        report.per_class.push_back(m);
        report.map50 += m.ap50;
        report.map50_95 += m.ap50_95;
    }
    const double classes = static_cast<double>(report.per_class.size());
    report.map50 /= classes;
    report.map50_95 /= classes;

    const MatchResult pooled = match_detections(dets, gts, 0.50);
    report.precision = precision(pooled.counts);
    report.recall = recall(pooled.counts);
    return report;
}

}  // namespace xwalk
