#include "xwalk/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "xwalk/error.hpp"

namespace xwalk {

void PipelineConfig::validate() const {
    if (!(conf_threshold > 0.0 && conf_threshold < 1.0))
        throw ValidationError("pipeline config: conf_threshold must be in (0,1)");
    if (!(nms_iou > 0.0 && nms_iou < 1.0))
        throw ValidationError("pipeline config: nms_iou must be in (0,1)");
    if (!tile_spec.valid()) throw ValidationError("pipeline config: require 0 <= overlap < patch");
}

namespace {

class FixtureDetector final : public DetectorBackend {
public:
    explicit FixtureDetector(std::vector<Detection> rules) : rules_(std::move(rules)) {}

    std::vector<Detection> detect(const RasterImage&, const TileWindow& window) const override {
        std::vector<Detection> out;
        for (const Detection& rule : rules_) {
            const double cx = rule.box.cx;
            const double cy = rule.box.cy;
            if (cx < window.origin_col || cx >= window.origin_col + window.width) continue;
            if (cy < window.origin_row || cy >= window.origin_row + window.height) continue;
            Detection local = rule;
            local.box.cx -= window.origin_col;
            local.box.cy -= window.origin_row;
            out.push_back(local);
        }
        return out;
    }

private:
    std::vector<Detection> rules_;
};

}  // namespace

std::unique_ptr<DetectorBackend> fixture_detector(std::vector<Detection> rules) {
    return std::make_unique<FixtureDetector>(std::move(rules));
}

std::vector<Detection> run_tile(const DetectorBackend& backend, const RasterImage& tile,
                                const TileWindow& window, double conf_threshold) {
    if (tile.width != window.width || tile.height != window.height)
        throw ValidationError("run_tile: tile does not match window dimensions");

    std::vector<Detection> local;
    try {
        local = backend.detect(tile, window);
    } catch (const std::exception& e) {
        throw PipelineError("tile " + std::to_string(window.tile_index) +
                            ": backend failed: " + e.what());
    }

    std::vector<Detection> out;
    out.reserve(local.size());
    for (Detection det : local) {
        if (det.score < conf_threshold) continue;
        det.box.cx += window.origin_col;
        det.box.cy += window.origin_row;
        out.push_back(det);
    }
    return out;
}

std::vector<Detection> rotated_nms(const std::vector<Detection>& dets, double iou_thresh,
                                   bool class_agnostic) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    // stable sort keeps insertion order as the tie-break on equal scores
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    std::vector<bool> suppressed(dets.size(), false);
    std::vector<Detection> kept;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t cur = order[i];
        if (suppressed[cur]) continue;
        kept.push_back(dets[cur]);
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const std::size_t other = order[j];
            if (suppressed[other]) continue;
            if (!class_agnostic && dets[cur].class_id != dets[other].class_id) continue;
            if (rotated_iou(dets[cur].box, dets[other].box) >= iou_thresh)
                suppressed[other] = true;
        }
    }
    return kept;
}

std::vector<Detection> merge_tiles(std::vector<TileDetections> per_tile,
                                   const PipelineConfig& cfg) {
    std::sort(per_tile.begin(), per_tile.end(), [](const TileDetections& a, const TileDetections& b) {
        return a.window.tile_index < b.window.tile_index;
    });
    std::vector<Detection> all;
    for (const TileDetections& t : per_tile)
        all.insert(all.end(), t.detections.begin(), t.detections.end());
    return rotated_nms(all, cfg.nms_iou, cfg.class_agnostic_nms);
}

ProcessResult process_image(const RasterImage& image, const DetectorBackend& backend,
                            const PipelineConfig& cfg, int workers) {
    cfg.validate();
    if (workers < 1) throw ValidationError("process_image: workers must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();

    const std::vector<TileWindow> windows = plan_tiles(image.width, image.height, cfg.tile_spec);
    std::vector<TileDetections> per_tile(windows.size());
    std::vector<std::string> failures(windows.size());
    std::atomic<std::size_t> next{0};

    auto worker_loop = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < windows.size();) {
            try {
                const RasterImage tile = extract_tile(image, windows[i]);
                per_tile[i] = TileDetections{windows[i],
                                             run_tile(backend, tile, windows[i], cfg.conf_threshold)};
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };

    const int pool = std::min<std::size_t>(workers, windows.size());
    if (pool <= 1) {
        worker_loop();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(pool);
        for (int i = 0; i < pool; ++i) threads.emplace_back(worker_loop);
        for (std::thread& t : threads) t.join();
    }

    std::string report;
    for (std::size_t i = 0; i < failures.size(); ++i) {
        if (failures[i].empty()) continue;
        if (!report.empty()) report += "; ";
        report += failures[i];
    }
    if (!report.empty()) throw PipelineError("tile failures: " + report);

    ProcessResult result;
    result.report.tile_count = windows.size();
    for (const TileDetections& t : per_tile) result.report.raw_detections += t.detections.size();
    result.detections = merge_tiles(std::move(per_tile), cfg);
    result.report.merged_detections = result.detections.size();
    result.report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

double parse_double_token(const std::string& tok, int line_no) {
    double v = 0.0;
    const char* begin = tok.data();
    const char* end = begin + tok.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ParseError("detections line " + std::to_string(line_no) + ": bad number '" + tok +
                         "'");
    return v;
}

}  // namespace

std::string format_detections(const std::vector<Detection>& dets) {
    std::string out;
    for (const Detection& d : dets) {
        out += std::to_string(d.class_id);
        out += ' ';
        append_double(out, d.score);
        for (double v : {d.box.cx, d.box.cy, d.box.w, d.box.h, d.box.theta}) {
            out += ' ';
            append_double(out, v);
        }
        out += '\n';
    }
    return out;
}

std::vector<Detection> parse_detections(const std::string& text) {
    std::vector<Detection> dets;
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
        if (tokens.size() != 7)
            throw ParseError("detections line " + std::to_string(line_no) + ": expected 7 fields, got " +
                             std::to_string(tokens.size()));

        Detection d;
        const double cls = parse_double_token(tokens[0], line_no);
        d.class_id = static_cast<int>(cls);
        if (cls != d.class_id || d.class_id < 0 || d.class_id >= kNumClasses)
            throw ParseError("detections line " + std::to_string(line_no) + ": class_id out of range");
        d.score = parse_double_token(tokens[1], line_no);
        if (!(d.score >= 0.0 && d.score <= 1.0))
            throw ParseError("detections line " + std::to_string(line_no) + ": score out of [0,1]");
        const double cx = parse_double_token(tokens[2], line_no);
        const double cy = parse_double_token(tokens[3], line_no);
        const double w = parse_double_token(tokens[4], line_no);
        const double h = parse_double_token(tokens[5], line_no);
        const double theta = parse_double_token(tokens[6], line_no);
        try {
            d.box = OrientedBox(cx, cy, w, h, theta);
        } catch (const ValidationError& e) {
            throw ParseError("detections line " + std::to_string(line_no) + ": " + e.what());
        }
        dets.push_back(d);
    }
    return dets;
}

std::vector<Detection> read_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open detections: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_detections(buf.str());
}

void write_detections(const std::string& path, const std::vector<Detection>& dets) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write detections: " + path);
    const std::string text = format_detections(dets);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("detections write failed: " + path);
}

void sort_for_output(std::vector<Detection>& dets) {
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.box.cx != b.box.cx) return a.box.cx < b.box.cx;
        if (a.box.cy != b.box.cy) return a.box.cy < b.box.cy;
        return a.class_id < b.class_id;
    });
}

}  // namespace xwalk
