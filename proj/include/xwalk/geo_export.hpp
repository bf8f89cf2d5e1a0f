#pragma once

#include <array>
#include <string>
#include <vector>

#include "xwalk/geometry.hpp"
#include "xwalk/pipeline.hpp"
#include "xwalk/raster.hpp"

namespace xwalk {

enum class CrosswalkCategory { unclassified, intersection, mid_block, driveway };

const char* to_string(CrosswalkCategory category);
CrosswalkCategory category_from_string(const std::string& name);

/// Georeferenced export unit: a 4-vertex world-coordinate polygon (closed
/// ring implied) with its class, confidence, area, and road-context category.
struct CrosswalkRecord {
    std::array<Vec2, 4> polygon;
    CrosswalkCategory category = CrosswalkCategory::unclassified;
    int class_id = 0;
    double score = 0.0;
    double area_m2 = 0.0;
    double angle_deg = 0.0;  ///< long-edge orientation in world frame, [-90, 90)

    Vec2 centroid() const;
};

enum class RoadClass { road, driveway };

struct RoadNode {
    int id = 0;
    Vec2 point;
    int degree = 0;
};

struct RoadEdge {
    int id = 0;
    std::vector<Vec2> polyline;
    RoadClass road_class = RoadClass::road;
};

struct RoadNetwork {
    std::vector<RoadNode> nodes;
    std::vector<RoadEdge> edges;

    bool empty() const { return edges.empty(); }
};

/// Maps a pixel-space detection through the geotransform: corners ->
/// world polygon, shoelace area, w-edge orientation in world degrees.
/// The category starts unclassified.
CrosswalkRecord detection_to_record(const Detection& det, const GeoTransform& gt);

/// Parses a geographic-interchange JSON document of LineString features, each
/// carrying a `road_class` property ("road" or "driveway"). Nodes are created
/// at polyline endpoints; endpoints within 1e-6 of each other merge into one
/// node, and node degree counts incident edge endpoints.
RoadNetwork load_road_network(const std::string& text);
RoadNetwork read_road_network(const std::string& path);

struct ClassifyThresholds {
    double driveway_m = 10.0;      ///< max distance to a driveway edge
    double intersection_m = 15.0;  ///< max distance to a node of degree >= 3
    double road_m = 25.0;          ///< max distance to a road edge
};

/// Road-context rule, checked in order: near a driveway edge -> driveway;
/// near a junction node (degree >= 3) -> intersection; near a road edge ->
/// mid_block; otherwise unclassified. An empty network classifies nothing.
CrosswalkCategory classify(const CrosswalkRecord& record, const RoadNetwork& net,
                           const ClassifyThresholds& thresholds = {});

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);
double point_polyline_distance(Vec2 p, const std::vector<Vec2>& polyline);

/// Writes the ESRI sidecar set <path_stem>.shp/.shx/.dbf/.prj. Outer rings
/// are stored clockwise and closed (5 points). The .dbf carries CATEGORY
/// (C,12), CLASS (N,4,0), SCORE (N,8,4), AREA_M2 (N,12,3); the .prj is the
/// CRS text verbatim.
void write_shapefile(const std::vector<CrosswalkRecord>& records, const std::string& path_stem,
                     const std::string& crs_wkt);

/// Reads back a sidecar set written by write_shapefile. angle_deg is
/// recomputed from the ring's long edge (it has no .dbf column).
std::vector<CrosswalkRecord> read_shapefile(const std::string& path_stem);

/// Text mirror of the shapefile geometry: a feature collection of closed
/// polygon rings with category/class/score/area properties, coordinates at
/// 9 decimal places.
std::string format_geojson_like(const std::vector<CrosswalkRecord>& records);
void write_geojson_like(const std::vector<CrosswalkRecord>& records, const std::string& path);

}  // namespace xwalk
