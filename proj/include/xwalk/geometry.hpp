#pragma once

#include <vector>

namespace xwalk {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Wraps an angle into [-pi/2, pi/2). Angles already inside the range are
/// returned bit-identical.
double normalize_angle(double theta);

/// Rotated rectangle: center, extents, and the angle from the +x axis to the
/// w edge, normalized to [-pi/2, pi/2). (w,h,theta) and (h,w,theta+pi/2)
/// describe the same point set.
struct OrientedBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 1.0;
    double h = 1.0;
    double theta = 0.0;

    OrientedBox() = default;
    /// Normalizes theta; throws ValidationError unless w,h > 0 and all
    /// fields are finite.
    OrientedBox(double cx, double cy, double w, double h, double theta);

    double area() const { return w * h; }
};

/// Counter-clockwise vertex ring; empty means "no intersection".
struct ConvexPolygon {
    std::vector<Vec2> vertices;

    bool empty() const { return vertices.empty(); }
};

/// The box's 4 corners in counter-clockwise order.
ConvexPolygon corners(const OrientedBox& box);

/// Shoelace area; 0 for the empty polygon.
double polygon_area(const ConvexPolygon& p);

Vec2 polygon_centroid(const ConvexPolygon& p);

/// Sutherland-Hodgman clip of subject against a convex CCW clipper.
/// Vertices within 1e-12 of a clipping line count as inside.
ConvexPolygon clip(const ConvexPolygon& subject, const ConvexPolygon& clipper);

/// Intersection-over-union of two rotated rectangles, in [0,1].
double rotated_iou(const OrientedBox& a, const OrientedBox& b);

}  // namespace xwalk
