#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace xwalk {

/// 8-bit raster, 1 (gray) or 3 (RGB, interleaved) channels, row-major.
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> samples;

    static RasterImage filled(int width, int height, int channels, std::uint8_t value);

    bool valid() const;

    std::uint8_t at(int row, int col, int ch = 0) const {
        return samples[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }
    std::uint8_t& at(int row, int col, int ch = 0) {
        return samples[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }
};

/// Affine pixel->world map with world-file semantics. Pixel (col,row) is
/// measured at the pixel center; fractional coordinates are allowed.
///   x = a*col + b*row + c
///   y = d*col + e*row + f
struct GeoTransform {
    double a = 1.0;  ///< world x per column step
    double d = 0.0;  ///< world y per column step
    double b = 0.0;  ///< world x per row step
    double e = 1.0;  ///< world y per row step (negative for north-up imagery)
    double c = 0.0;  ///< world x of the center of pixel (0,0)
    double f = 0.0;  ///< world y of the center of pixel (0,0)

    double determinant() const { return a * e - b * d; }
    bool invertible() const;
};

struct WorldPoint {
    double x = 0.0;
    double y = 0.0;
};

struct PixelPoint {
    double col = 0.0;
    double row = 0.0;
};

struct TileSpec {
    int patch = 1024;
    int overlap = 256;

    int stride() const { return patch - overlap; }
    bool valid() const { return patch >= 1 && overlap >= 0 && overlap < patch; }
};

/// One planned window, fully inside the parent image.
struct TileWindow {
    int origin_col = 0;
    int origin_row = 0;
    int width = 0;
    int height = 0;
    int tile_index = 0;
};

/// Plans overlapping windows covering every pixel of a width x height image.
/// Origins advance by (patch - overlap); the final window per axis is shifted
/// so its far edge lands on the image edge, keeping a constant patch size
/// whenever the image dimension allows it. Windows are ordered row-major and
/// tile_index equals the position in the returned list.
std::vector<TileWindow> plan_tiles(int image_width, int image_height, const TileSpec& spec);

/// Copies the window out of the parent image. Throws ValidationError if the
/// window is not fully inside the parent.
RasterImage extract_tile(const RasterImage& image, const TileWindow& window);

/// BT.601 luma conversion, round-half-up. 1-channel input passes through.
RasterImage to_grayscale(const RasterImage& image);

/// Parses the 6-line world-file sidecar (line order a, d, b, e, c, f).
/// Throws ParseError on malformed text, ValidationError if singular.
GeoTransform parse_world_file(const std::string& text);
GeoTransform read_world_file(const std::string& path);

WorldPoint pixel_to_world(const GeoTransform& gt, double col, double row);

/// Exact inverse of pixel_to_world (2x2 solve). Throws ValidationError if
/// the transform is singular.
PixelPoint world_to_pixel(const GeoTransform& gt, double x, double y);

/// Raster container I/O: binary PGM (P5, 1 channel) and PPM (P6, 3 channels),
/// maxval 255. This is the adapter boundary for imagery ingestion.
RasterImage read_raster(const std::string& path);
void write_raster(const std::string& path, const RasterImage& image);

struct RasterHeader {
    int width = 0;
    int height = 0;
    int channels = 0;
};

/// Reads only the container header (no pixel payload).
RasterHeader read_raster_header(const std::string& path);

}  // namespace xwalk
