#include "xwalk/geo_export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "xwalk/error.hpp"

namespace xwalk {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kNodeMergeEps = 1e-6;
}  // namespace

const char* to_string(CrosswalkCategory category) {
    switch (category) {
        case CrosswalkCategory::intersection: return "intersection";
        case CrosswalkCategory::mid_block: return "mid_block";
        case CrosswalkCategory::driveway: return "driveway";
        default: return "unclassified";
    }
}

CrosswalkCategory category_from_string(const std::string& name) {
    if (name == "intersection") return CrosswalkCategory::intersection;
    if (name == "mid_block") return CrosswalkCategory::mid_block;
    if (name == "driveway") return CrosswalkCategory::driveway;
    if (name == "unclassified") return CrosswalkCategory::unclassified;
    throw ParseError("unknown crosswalk category: '" + name + "'");
}

Vec2 CrosswalkRecord::centroid() const {
    Vec2 acc{};
    for (const Vec2& v : polygon) acc = acc + v;
    return 0.25 * acc;
}

namespace {

double direction_degrees(double dx, double dy) {
    double deg = std::atan2(dy, dx) * 180.0 / kPi;
    while (deg < -90.0) deg += 180.0;
    while (deg >= 90.0) deg -= 180.0;
    return deg;
}

}  // namespace

CrosswalkRecord detection_to_record(const Detection& det, const GeoTransform& gt) {
    if (!gt.invertible()) throw ValidationError("detection_to_record: singular transform");

    const ConvexPolygon pixel_corners = corners(det.box);
    CrosswalkRecord rec;
    ConvexPolygon world_poly;
    for (int i = 0; i < 4; ++i) {
        const Vec2& p = pixel_corners.vertices[i];
        const WorldPoint wp = pixel_to_world(gt, p.x, p.y);
        rec.polygon[i] = Vec2{wp.x, wp.y};
        world_poly.vertices.push_back(rec.polygon[i]);
    }
    rec.class_id = det.class_id;
    rec.score = det.score;
    rec.area_m2 = polygon_area(world_poly);

    // w-edge direction mapped through the linear part of the transform
    const double c = std::cos(det.box.theta);
    const double s = std::sin(det.box.theta);
    rec.angle_deg = direction_degrees(gt.a * c + gt.b * s, gt.d * c + gt.e * s);
    return rec;
}

RoadNetwork load_road_network(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("road network: invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array())
        throw ParseError("road network: expected a feature collection with a 'features' array");

    RoadNetwork net;
    auto node_at = [&net](Vec2 p) -> RoadNode& {
        for (RoadNode& n : net.nodes) {
            if (std::hypot(n.point.x - p.x, n.point.y - p.y) <= kNodeMergeEps) return n;
        }
        net.nodes.push_back(RoadNode{static_cast<int>(net.nodes.size()), p, 0});
        return net.nodes.back();
    };

    int edge_id = 0;
    for (const auto& feature : doc["features"]) {
        if (!feature.is_object() || !feature.contains("geometry"))
            throw ParseError("road network: feature without geometry");
        const auto& geom = feature["geometry"];
        if (!geom.is_object() || geom.value("type", "") != std::string("LineString"))
            throw ParseError("road network: only LineString features are supported");
        const auto& coords = geom["coordinates"];
        if (!coords.is_array() || coords.size() < 2)
            throw ParseError("road network: polyline needs at least 2 points");

        RoadEdge edge;
        edge.id = edge_id++;
        for (const auto& pt : coords) {
            if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number())
                throw ParseError("road network: coordinate must be [x, y]");
            edge.polyline.push_back(Vec2{pt[0].get<double>(), pt[1].get<double>()});
        }

        std::string cls = "road";
        if (feature.contains("properties") && feature["properties"].is_object())
            cls = feature["properties"].value("road_class", "road");
        if (cls == "road")
            edge.road_class = RoadClass::road;
        else if (cls == "driveway")
            edge.road_class = RoadClass::driveway;
        else
            throw ValidationError("road network: unknown road_class '" + cls + "'");

        node_at(edge.polyline.front()).degree += 1;
        node_at(edge.polyline.back()).degree += 1;
        net.edges.push_back(std::move(edge));
    }
    return net;
}

RoadNetwork read_road_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open road network: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_road_network(buf.str());
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return std::hypot(p.x - a.x, p.y - a.y);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    const Vec2 proj = a + t * ab;
    return std::hypot(p.x - proj.x, p.y - proj.y);
}

double point_polyline_distance(Vec2 p, const std::vector<Vec2>& polyline) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < polyline.size(); ++i)
        best = std::min(best, point_segment_distance(p, polyline[i], polyline[i + 1]));
    return best;
}

CrosswalkCategory classify(const CrosswalkRecord& record, const RoadNetwork& net,
                           const ClassifyThresholds& thresholds) {
    if (net.empty()) return CrosswalkCategory::unclassified;
    const Vec2 p = record.centroid();

    double driveway_dist = std::numeric_limits<double>::infinity();
    double road_dist = std::numeric_limits<double>::infinity();
    for (const RoadEdge& edge : net.edges) {
        const double d = point_polyline_distance(p, edge.polyline);
        if (edge.road_class == RoadClass::driveway)
            driveway_dist = std::min(driveway_dist, d);
        else
            road_dist = std::min(road_dist, d);
    }
    if (driveway_dist <= thresholds.driveway_m) return CrosswalkCategory::driveway;

    double junction_dist = std::numeric_limits<double>::infinity();
    for (const RoadNode& node : net.nodes) {
        if (node.degree < 3) continue;
        junction_dist = std::min(junction_dist, std::hypot(p.x - node.point.x, p.y - node.point.y));
    }
    if (junction_dist <= thresholds.intersection_m) return CrosswalkCategory::intersection;
    if (road_dist <= thresholds.road_m) return CrosswalkCategory::mid_block;
    return CrosswalkCategory::unclassified;
}

// ---------------------------------------------------------------------------
// ESRI shapefile sidecar set
// ---------------------------------------------------------------------------

namespace {

constexpr std::int32_t kShpFileCode = 9994;
constexpr std::int32_t kShpVersion = 1000;
constexpr std::int32_t kShapePolygon = 5;
constexpr int kShpHeaderBytes = 100;
// content: type + bbox + numParts + numPoints + parts[1] + 5 points
constexpr int kRecordContentBytes = 4 + 32 + 4 + 4 + 4 + 5 * 16;

void put_i32_be(std::string& out, std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    out.push_back(static_cast<char>(u >> 24));
    out.push_back(static_cast<char>(u >> 16));
    out.push_back(static_cast<char>(u >> 8));
    out.push_back(static_cast<char>(u));
}

void put_i32_le(std::string& out, std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    out.push_back(static_cast<char>(u));
    out.push_back(static_cast<char>(u >> 8));
    out.push_back(static_cast<char>(u >> 16));
    out.push_back(static_cast<char>(u >> 24));
}

void put_u16_le(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v));
    out.push_back(static_cast<char>(v >> 8));
}

void put_f64_le(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(bits >> (8 * i)));
}

std::int32_t get_i32_be(const std::string& in, std::size_t off) {
    if (off + 4 > in.size()) throw ParseError("shapefile: truncated int32");
    const auto b = reinterpret_cast<const unsigned char*>(in.data() + off);
    return static_cast<std::int32_t>((static_cast<std::uint32_t>(b[0]) << 24) |
                                     (static_cast<std::uint32_t>(b[1]) << 16) |
                                     (static_cast<std::uint32_t>(b[2]) << 8) |
                                     static_cast<std::uint32_t>(b[3]));
}

std::int32_t get_i32_le(const std::string& in, std::size_t off) {
    if (off + 4 > in.size()) throw ParseError("shapefile: truncated int32");
    const auto b = reinterpret_cast<const unsigned char*>(in.data() + off);
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(b[0]) |
                                     (static_cast<std::uint32_t>(b[1]) << 8) |
                                     (static_cast<std::uint32_t>(b[2]) << 16) |
                                     (static_cast<std::uint32_t>(b[3]) << 24));
}

std::uint16_t get_u16_le(const std::string& in, std::size_t off) {
    if (off + 2 > in.size()) throw ParseError("dbf: truncated u16");
    const auto b = reinterpret_cast<const unsigned char*>(in.data() + off);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32_le(const std::string& in, std::size_t off) {
    return static_cast<std::uint32_t>(get_i32_le(in, off));
}

double get_f64_le(const std::string& in, std::size_t off) {
    if (off + 8 > in.size()) throw ParseError("shapefile: truncated double");
    const auto b = reinterpret_cast<const unsigned char*>(in.data() + off);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

struct Bbox {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

    void expand(Vec2 p) {
        xmin = std::min(xmin, p.x);
        ymin = std::min(ymin, p.y);
        xmax = std::max(xmax, p.x);
        ymax = std::max(ymax, p.y);
    }
    static Bbox of(const std::array<Vec2, 5>& ring) {
        Bbox b{ring[0].x, ring[0].y, ring[0].x, ring[0].y};
        for (const Vec2& p : ring) b.expand(p);
        return b;
    }
};

// Closed 5-point ring in file order; outer rings are clockwise, i.e. signed
// shoelace area in file order is negative.
std::array<Vec2, 5> closed_ring_cw(const CrosswalkRecord& rec) {
    double signed2 = 0.0;
    for (int i = 0; i < 4; ++i) signed2 += cross(rec.polygon[i], rec.polygon[(i + 1) % 4]);
    std::array<Vec2, 5> ring;
    if (signed2 > 0.0) {
        ring = {rec.polygon[0], rec.polygon[3], rec.polygon[2], rec.polygon[1], rec.polygon[0]};
    } else {
        ring = {rec.polygon[0], rec.polygon[1], rec.polygon[2], rec.polygon[3], rec.polygon[0]};
    }
    return ring;
}

std::string build_main_header(std::int32_t file_length_words, const Bbox& bbox) {
    std::string out;
    out.reserve(kShpHeaderBytes);
    put_i32_be(out, kShpFileCode);
    for (int i = 0; i < 5; ++i) put_i32_be(out, 0);
    put_i32_be(out, file_length_words);
    put_i32_le(out, kShpVersion);
    put_i32_le(out, kShapePolygon);
    put_f64_le(out, bbox.xmin);
    put_f64_le(out, bbox.ymin);
    put_f64_le(out, bbox.xmax);
    put_f64_le(out, bbox.ymax);
    for (int i = 0; i < 4; ++i) put_f64_le(out, 0.0);  // z and m ranges unused
    return out;
}

std::string fixed_width_number(double value, int width, int decimals, const char* field) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof(buf), "%*.*f", width, decimals, value);
    if (n != width)
        throw ValidationError(std::string("dbf: value does not fit field ") + field);
    return std::string(buf, static_cast<std::size_t>(n));
}

struct DbfField {
    const char* name;
    char type;
    int length;
    int decimals;
};

constexpr DbfField kDbfFields[] = {
    {"CATEGORY", 'C', 12, 0},
    {"CLASS", 'N', 4, 0},
    {"SCORE", 'N', 8, 4},
    {"AREA_M2", 'N', 12, 3},
};

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

void write_shapefile(const std::vector<CrosswalkRecord>& records, const std::string& path_stem,
                     const std::string& crs_wkt) {
    std::vector<std::array<Vec2, 5>> rings;
    rings.reserve(records.size());
    Bbox global;
    bool first = true;
    for (const CrosswalkRecord& rec : records) {
        for (const Vec2& v : rec.polygon)
            if (!std::isfinite(v.x) || !std::isfinite(v.y))
                throw ValidationError("write_shapefile: non-finite vertex");
        rings.push_back(closed_ring_cw(rec));
        const Bbox b = Bbox::of(rings.back());
        if (first) {
            global = b;
            first = false;
        } else {
            global.expand(Vec2{b.xmin, b.ymin});
            global.expand(Vec2{b.xmax, b.ymax});
        }
    }

    const int record_total = 8 + kRecordContentBytes;
    const std::int32_t shp_words =
        static_cast<std::int32_t>((kShpHeaderBytes + records.size() * record_total) / 2);

    std::string shp = build_main_header(shp_words, global);
    std::string shx =
        build_main_header(static_cast<std::int32_t>((kShpHeaderBytes + records.size() * 8) / 2),
                          global);

    for (std::size_t i = 0; i < rings.size(); ++i) {
        put_i32_be(shx, static_cast<std::int32_t>(shp.size() / 2));  // record offset in words
        put_i32_be(shx, kRecordContentBytes / 2);

        put_i32_be(shp, static_cast<std::int32_t>(i + 1));  // record numbers start at 1
        put_i32_be(shp, kRecordContentBytes / 2);
        put_i32_le(shp, kShapePolygon);
        const Bbox b = Bbox::of(rings[i]);
        put_f64_le(shp, b.xmin);
        put_f64_le(shp, b.ymin);
        put_f64_le(shp, b.xmax);
        put_f64_le(shp, b.ymax);
        put_i32_le(shp, 1);  // numParts
        put_i32_le(shp, 5);  // numPoints (closed ring)
        put_i32_le(shp, 0);  // parts[0]
        for (const Vec2& p : rings[i]) {
            put_f64_le(shp, p.x);
            put_f64_le(shp, p.y);
        }
    }

    // dBASE III attribute table
    std::string dbf;
    const int field_count = static_cast<int>(std::size(kDbfFields));
    int record_size = 1;  // deletion flag
    for (const DbfField& f : kDbfFields) record_size += f.length;
    const int header_size = 32 + 32 * field_count + 1;

    dbf.push_back(0x03);
    dbf.push_back(125);  // fixed timestamp so identical inputs give identical bytes
    dbf.push_back(1);
    dbf.push_back(1);
    put_i32_le(dbf, static_cast<std::int32_t>(records.size()));
    put_u16_le(dbf, static_cast<std::uint16_t>(header_size));
    put_u16_le(dbf, static_cast<std::uint16_t>(record_size));
    dbf.append(20, '\0');
    for (const DbfField& f : kDbfFields) {
        std::string name(f.name);
        name.resize(11, '\0');
        dbf += name;
        dbf.push_back(f.type);
        dbf.append(4, '\0');
        dbf.push_back(static_cast<char>(f.length));
        dbf.push_back(static_cast<char>(f.decimals));
        dbf.append(14, '\0');
    }
    dbf.push_back(0x0D);

    for (const CrosswalkRecord& rec : records) {
        dbf.push_back(' ');  // not deleted
        std::string category = to_string(rec.category);
        if (category.size() > 12) throw ValidationError("dbf: category name too long");
        category.resize(12, ' ');
        dbf += category;
        char cls[8];
        if (std::snprintf(cls, sizeof(cls), "%4d", rec.class_id) != 4)
            throw ValidationError("dbf: class id does not fit field CLASS");
        dbf.append(cls, 4);
        dbf += fixed_width_number(rec.score, 8, 4, "SCORE");
        dbf += fixed_width_number(rec.area_m2, 12, 3, "AREA_M2");
    }
    dbf.push_back(0x1A);

    write_file(path_stem + ".shp", shp);
    write_file(path_stem + ".shx", shx);
    write_file(path_stem + ".dbf", dbf);
    write_file(path_stem + ".prj", crs_wkt);
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

struct DbfColumn {
    char type = 0;
    int offset = 0;  // within record, after the deletion flag
    int length = 0;
};

}  // namespace

std::vector<CrosswalkRecord> read_shapefile(const std::string& path_stem) {
    const std::string shp = read_file(path_stem + ".shp");
    if (shp.size() < kShpHeaderBytes) throw ParseError("shapefile: header truncated");
    if (get_i32_be(shp, 0) != kShpFileCode) throw ParseError("shapefile: bad file code");
    if (get_i32_le(shp, 28) != kShpVersion) throw ParseError("shapefile: bad version");
    if (get_i32_le(shp, 32) != kShapePolygon)
        throw ParseError("shapefile: expected polygon shape type");
    if (static_cast<std::size_t>(get_i32_be(shp, 24)) * 2 != shp.size())
        throw ParseError("shapefile: declared length does not match file size");

    std::vector<CrosswalkRecord> records;
    std::size_t off = kShpHeaderBytes;
    while (off < shp.size()) {
        const std::int32_t content_words = get_i32_be(shp, off + 4);
        off += 8;
        if (get_i32_le(shp, off) != kShapePolygon)
            throw ParseError("shapefile: record is not a polygon");
        const std::int32_t num_parts = get_i32_le(shp, off + 36);
        const std::int32_t num_points = get_i32_le(shp, off + 40);
        if (num_parts != 1 || num_points != 5)
            throw ParseError("shapefile: expected a single closed 4-vertex ring");
        const std::size_t points_off = off + 44 + 4;  // skip parts[0]

        CrosswalkRecord rec;
        for (int i = 0; i < 4; ++i) {
            rec.polygon[i] = Vec2{get_f64_le(shp, points_off + 16 * i),
                                  get_f64_le(shp, points_off + 16 * i + 8)};
        }
        const Vec2 closing{get_f64_le(shp, points_off + 64), get_f64_le(shp, points_off + 72)};
        if (closing.x != rec.polygon[0].x || closing.y != rec.polygon[0].y)
            throw ParseError("shapefile: ring is not closed");

        // orientation-independent angle: direction of the longer edge
        const Vec2 e0 = rec.polygon[1] - rec.polygon[0];
        const Vec2 e1 = rec.polygon[2] - rec.polygon[1];
        const Vec2 longer = dot(e0, e0) >= dot(e1, e1) ? e0 : e1;
        rec.angle_deg = direction_degrees(longer.x, longer.y);

        records.push_back(rec);
        off += static_cast<std::size_t>(content_words) * 2;
    }

    // attributes
    const std::string dbf = read_file(path_stem + ".dbf");
    if (dbf.size() < 33 || dbf[0] != 0x03) throw ParseError("dbf: unsupported table format");
    const std::uint32_t dbf_records = get_u32_le(dbf, 4);
    const std::uint16_t header_size = get_u16_le(dbf, 8);
    const std::uint16_t record_size = get_u16_le(dbf, 10);
    if (dbf_records != records.size())
        throw ParseError("dbf: attribute count does not match geometry count");

    DbfColumn category_col, class_col, score_col, area_col;
    int running_offset = 0;
    for (std::size_t fd = 32; fd + 32 <= header_size && dbf[fd] != 0x0D; fd += 32) {
        const std::string name(dbf.data() + fd, strnlen(dbf.data() + fd, 11));
        DbfColumn col;
        col.type = dbf[fd + 11];
        col.length = static_cast<unsigned char>(dbf[fd + 16]);
        col.offset = running_offset;
        running_offset += col.length;
        if (name == "CATEGORY")
            category_col = col;
        else if (name == "CLASS")
            class_col = col;
        else if (name == "SCORE")
            score_col = col;
        else if (name == "AREA_M2")
            area_col = col;
    }
    if (category_col.length == 0 || class_col.length == 0 || score_col.length == 0 ||
        area_col.length == 0)
        throw ParseError("dbf: missing expected columns");

    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::size_t base = header_size + i * record_size;
        if (base + record_size > dbf.size()) throw ParseError("dbf: truncated records");
        const auto field = [&](const DbfColumn& col) {
            return trim(dbf.substr(base + 1 + col.offset, col.length));
        };
        records[i].category = category_from_string(field(category_col));
        try {
            records[i].class_id = std::stoi(field(class_col));
            records[i].score = std::stod(field(score_col));
            records[i].area_m2 = std::stod(field(area_col));
        } catch (const std::exception&) {
            throw ParseError("dbf: malformed numeric attribute in record " + std::to_string(i + 1));
        }
    }
    return records;
}

namespace {

void append_fixed(std::string& out, double v) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof(buf), "%.9f", v);
    out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string format_geojson_like(const std::vector<CrosswalkRecord>& records) {
    std::string out = "{\n  \"type\": \"FeatureCollection\",\n  \"features\": [";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::array<Vec2, 5> ring = closed_ring_cw(records[i]);
        out += i == 0 ? "\n" : ",\n";
        out += "    {\"type\": \"Feature\", \"geometry\": {\"type\": \"Polygon\", \"coordinates\": [[";
        for (std::size_t p = 0; p < ring.size(); ++p) {
            if (p > 0) out += ", ";
            out += '[';
            append_fixed(out, ring[p].x);
            out += ", ";
            append_fixed(out, ring[p].y);
            out += ']';
        }
        out += "]]}, \"properties\": {\"category\": \"";
        out += to_string(records[i].category);
        out += "\", \"class\": " + std::to_string(records[i].class_id);
        out += ", \"score\": ";
        append_fixed(out, records[i].score);
        out += ", \"area_m2\": ";
        append_fixed(out, records[i].area_m2);
        out += "}}";
    }
    out += records.empty() ? "]\n}\n" : "\n  ]\n}\n";
    return out;
}

void write_geojson_like(const std::vector<CrosswalkRecord>& records, const std::string& path) {
    write_file(path, format_geojson_like(records));
}

}  // namespace xwalk
