#include "xwalk/raster.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "xwalk/error.hpp"

namespace xwalk {

RasterImage RasterImage::filled(int width, int height, int channels, std::uint8_t value) {
    RasterImage img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.samples.assign(static_cast<std::size_t>(width) * height * channels, value);
    return img;
}

bool RasterImage::valid() const {
    if (width < 1 || height < 1) return false;
    if (channels != 1 && channels != 3) return false;
    return samples.size() == static_cast<std::size_t>(width) * height * channels;
}

bool GeoTransform::invertible() const {
    const double det = determinant();
    return std::isfinite(det) && det != 0.0;
}

namespace {

std::vector<int> axis_origins(int dim, int patch, int stride) {
    std::vector<int> origins;
    if (dim <= patch) {
        origins.push_back(0);
        return origins;
    }
    int pos = 0;
    while (true) {
        if (pos + patch >= dim) {
            origins.push_back(dim - patch);
            break;
        }
        origins.push_back(pos);
        pos += stride;
    }
    return origins;
}

}  // namespace

std::vector<TileWindow> plan_tiles(int image_width, int image_height, const TileSpec& spec) {
    if (image_width < 1 || image_height < 1)
        throw ValidationError("plan_tiles: image dimensions must be >= 1");
    if (!spec.valid())
        throw ValidationError("plan_tiles: require 0 <= overlap < patch");

    const std::vector<int> cols = axis_origins(image_width, spec.patch, spec.stride());
    const std::vector<int> rows = axis_origins(image_height, spec.patch, spec.stride());
    const int tile_w = std::min(spec.patch, image_width);
    const int tile_h = std::min(spec.patch, image_height);

    std::vector<TileWindow> windows;
    windows.reserve(cols.size() * rows.size());
    int index = 0;
    for (int r : rows) {
        for (int c : cols) {
            windows.push_back(TileWindow{c, r, tile_w, tile_h, index});
            ++index;
        }
    }
    return windows;
}

RasterImage extract_tile(const RasterImage& image, const TileWindow& window) {
    if (!image.valid()) throw ValidationError("extract_tile: invalid parent image");
    if (window.width < 1 || window.height < 1 || window.origin_col < 0 || window.origin_row < 0 ||
        window.origin_col + window.width > image.width ||
        window.origin_row + window.height > image.height)
        throw ValidationError("extract_tile: window out of parent bounds");

    RasterImage tile;
    tile.width = window.width;
    tile.height = window.height;
    tile.channels = image.channels;
    tile.samples.resize(static_cast<std::size_t>(window.width) * window.height * image.channels);

    const std::size_t row_bytes = static_cast<std::size_t>(window.width) * image.channels;
    for (int r = 0; r < window.height; ++r) {
        const std::uint8_t* src =
            &image.samples[((static_cast<std::size_t>(window.origin_row) + r) * image.width +
                            window.origin_col) *
                           image.channels];
        std::copy(src, src + row_bytes, &tile.samples[static_cast<std::size_t>(r) * row_bytes]);
    }
    return tile;
}

RasterImage to_grayscale(const RasterImage& image) {
    if (!image.valid()) throw ValidationError("to_grayscale: invalid image");
    if (image.channels == 1) return image;

    RasterImage gray;
    gray.width = image.width;
    gray.height = image.height;
    gray.channels = 1;
    gray.samples.resize(static_cast<std::size_t>(image.width) * image.height);

    const std::size_t n = gray.samples.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* px = &image.samples[i * 3];
        const double luma = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        long v = std::lround(luma);
        if (v < 0) v = 0;
        if (v > 255) v = 255;
        gray.samples[i] = static_cast<std::uint8_t>(v);
    }
    return gray;
}

GeoTransform parse_world_file(const std::string& text) {
    std::istringstream in(text);
    double values[6];
    for (int i = 0; i < 6; ++i) {
        if (!(in >> values[i]))
            throw ParseError("world file: expected 6 numeric lines, failed at line " +
                             std::to_string(i + 1));
    }
    std::string trailing;
    if (in >> trailing) throw ParseError("world file: trailing content after 6 lines");

    GeoTransform gt;
    gt.a = values[0];
    gt.d = values[1];
    gt.b = values[2];
    gt.e = values[3];
    gt.c = values[4];
    gt.f = values[5];
    if (!gt.invertible()) throw ValidationError("world file: singular transform");
    return gt;
}

GeoTransform read_world_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open world file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_world_file(buf.str());
}

WorldPoint pixel_to_world(const GeoTransform& gt, double col, double row) {
    return WorldPoint{gt.a * col + gt.b * row + gt.c, gt.d * col + gt.e * row + gt.f};
}

PixelPoint world_to_pixel(const GeoTransform& gt, double x, double y) {
    const double det = gt.determinant();
    if (!gt.invertible()) throw ValidationError("world_to_pixel: singular transform");
    const double dx = x - gt.c;
    const double dy = y - gt.f;
    return PixelPoint{(gt.e * dx - gt.b * dy) / det, (gt.a * dy - gt.d * dx) / det};
}

namespace {

int read_pnm_token(std::istream& in, const std::string& path) {
    // Skips whitespace and '#' comments, then reads one non-negative integer.
    int ch = in.peek();
    while (ch == '#' || std::isspace(ch)) {
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            in.get();
        }
        ch = in.peek();
    }
    int value = 0;
    if (!(in >> value)) throw ParseError("raster header: malformed PNM token in " + path);
    return value;
}

struct PnmHeader {
    int width = 0;
    int height = 0;
    int channels = 0;
};

PnmHeader read_pnm_header(std::istream& in, const std::string& path) {
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
        throw ParseError("raster: unsupported container (expected binary PGM/PPM): " + path);

    PnmHeader h;
    h.channels = magic[1] == '5' ? 1 : 3;
    h.width = read_pnm_token(in, path);
    h.height = read_pnm_token(in, path);
    const int maxval = read_pnm_token(in, path);
    if (h.width < 1 || h.height < 1) throw ParseError("raster: bad dimensions in " + path);
    if (maxval != 255) throw ParseError("raster: only maxval 255 supported: " + path);
    in.get();  // single whitespace byte before the payload
    return h;
}

}  // namespace

RasterImage read_raster(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open raster: " + path);
    const PnmHeader h = read_pnm_header(in, path);

    RasterImage img;
    img.width = h.width;
    img.height = h.height;
    img.channels = h.channels;
    img.samples.resize(static_cast<std::size_t>(h.width) * h.height * h.channels);
    in.read(reinterpret_cast<char*>(img.samples.data()),
            static_cast<std::streamsize>(img.samples.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.samples.size()))
        throw ParseError("raster: truncated pixel payload: " + path);
    return img;
}

RasterHeader read_raster_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open raster: " + path);
    const PnmHeader h = read_pnm_header(in, path);
    return RasterHeader{h.width, h.height, h.channels};
}

void write_raster(const std::string& path, const RasterImage& image) {
    if (!image.valid()) throw ValidationError("write_raster: invalid image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write raster: " + path);
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "P%c\n%d %d\n255\n",
                                image.channels == 1 ? '5' : '6', image.width, image.height);
    out.write(header, n);
    out.write(reinterpret_cast<const char*>(image.samples.data()),
              static_cast<std::streamsize>(image.samples.size()));
    if (!out) throw IoError("raster write failed: " + path);
}

}  // namespace xwalk
