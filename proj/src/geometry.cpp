#include "xwalk/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "xwalk/error.hpp"

namespace xwalk {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = kPi / 2.0;
// Vertices this close to a clipping line count as inside, so floating-point
// noise cannot spawn sliver polygons.
constexpr double kClipEps = 1e-12;
}  // namespace

double normalize_angle(double theta) {
    if (theta >= -kHalfPi && theta < kHalfPi) return theta;
    double a = std::fmod(theta + kHalfPi, kPi);
    if (a < 0) a += kPi;
    return a - kHalfPi;
}

OrientedBox::OrientedBox(double cx_, double cy_, double w_, double h_, double theta_)
    : cx(cx_), cy(cy_), w(w_), h(h_), theta(normalize_angle(theta_)) {
    if (!(w > 0.0) || !(h > 0.0) || !std::isfinite(cx) || !std::isfinite(cy) ||
        !std::isfinite(w) || !std::isfinite(h) || !std::isfinite(theta))
        throw ValidationError("OrientedBox: extents must be positive and fields finite");
}

ConvexPolygon corners(const OrientedBox& box) {
    const double c = std::cos(box.theta);
    const double s = std::sin(box.theta);
    const double hw = box.w / 2.0;
    const double hh = box.h / 2.0;

    // CCW: (+hw,+hh), (-hw,+hh), (-hw,-hh), (+hw,-hh) rotated then translated.
    ConvexPolygon poly;
    poly.vertices = {
        Vec2{box.cx + c * hw - s * hh, box.cy + s * hw + c * hh},
        Vec2{box.cx - c * hw - s * hh, box.cy - s * hw + c * hh},
        Vec2{box.cx - c * hw + s * hh, box.cy - s * hw - c * hh},
        Vec2{box.cx + c * hw + s * hh, box.cy + s * hw - c * hh},
    };
    return poly;
}

double polygon_area(const ConvexPolygon& p) {
    const auto& v = p.vertices;
    if (v.size() < 3) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % n];
        acc += cross(a, b);
    }
    return std::abs(acc) / 2.0;
}

Vec2 polygon_centroid(const ConvexPolygon& p) {
    const auto& v = p.vertices;
    if (v.empty()) return Vec2{};
    Vec2 acc{};
    for (const Vec2& q : v) acc = acc + q;
    return (1.0 / static_cast<double>(v.size())) * acc;
}

ConvexPolygon clip(const ConvexPolygon& subject, const ConvexPolygon& clipper) {
    if (subject.vertices.size() < 3 || clipper.vertices.size() < 3) return ConvexPolygon{};

    std::vector<Vec2> output = subject.vertices;
    const auto& cv = clipper.vertices;
    for (std::size_t i = 0, n = cv.size(); i < n && !output.empty(); ++i) {
        const Vec2 edge_a = cv[i];
        const Vec2 edge_b = cv[(i + 1) % n];
        const Vec2 edge = edge_b - edge_a;

        std::vector<Vec2> input;
        input.swap(output);
        // signed distance > -eps means inside the half-plane left of a->b
        auto side = [&](const Vec2& p) { return cross(edge, p - edge_a); };

        for (std::size_t j = 0, m = input.size(); j < m; ++j) {
            const Vec2 cur = input[j];
            const Vec2 nxt = input[(j + 1) % m];
            const double dc = side(cur);
            const double dn = side(nxt);
            const bool cur_in = dc >= -kClipEps;
            const bool nxt_in = dn >= -kClipEps;

            if (cur_in) output.push_back(cur);
            if (cur_in != nxt_in) {
                const double t = dc / (dc - dn);
                output.push_back(cur + t * (nxt - cur));
            }
        }
    }

    ConvexPolygon result;
    if (output.size() >= 3) result.vertices = std::move(output);
    return result;
}

namespace {

// Total order on box fields; clipping in a canonical argument order makes
// rotated_iou(a,b) == rotated_iou(b,a) bit-exact.
bool box_before(const OrientedBox& a, const OrientedBox& b) {
    if (a.cx != b.cx) return a.cx < b.cx;
    if (a.cy != b.cy) return a.cy < b.cy;
    if (a.w != b.w) return a.w < b.w;
    if (a.h != b.h) return a.h < b.h;
    return a.theta < b.theta;
}

}  // namespace

double rotated_iou(const OrientedBox& a, const OrientedBox& b) {
    const OrientedBox& first = box_before(b, a) ? b : a;
    const OrientedBox& second = box_before(b, a) ? a : b;
    const ConvexPolygon pa = corners(first);
    const ConvexPolygon pb = corners(second);
    const double inter = polygon_area(clip(pa, pb));
    if (inter <= 0.0) return 0.0;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace xwalk
