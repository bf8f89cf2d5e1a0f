#include "xwalk/augment.hpp"

#include <algorithm>
#include <cmath>

#include "xwalk/error.hpp"

namespace xwalk {

namespace {

double bilinear_sample(const RasterImage& img, double x, double y, int ch) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;

    auto tap = [&](int yy, int xx) -> double {
        if (xx < 0 || xx >= img.width || yy < 0 || yy >= img.height) return kAugmentFill;
        return img.at(yy, xx, ch);
    };
    const double top = (1.0 - fx) * tap(y0, x0) + fx * tap(y0, x0 + 1);
    const double bot = (1.0 - fx) * tap(y0 + 1, x0) + fx * tap(y0 + 1, x0 + 1);
    return (1.0 - fy) * top + fy * bot;
}

std::uint8_t quantize(double v) {
    long r = std::lround(v);
    if (r < 0) r = 0;
    if (r > 255) r = 255;
    return static_cast<std::uint8_t>(r);
}

}  // namespace

Sample rotate_sample(const Sample& s, double angle) {
    if (!(std::abs(angle) <= kMaxRotationRad))
        throw ValidationError("rotate_sample: |angle| must be <= 8 degrees");
    if (!s.image.valid()) throw ValidationError("rotate_sample: invalid image");
    if (angle == 0.0) return s;  // identity; keeps labels bit-identical

    const int w = s.image.width;
    const int h = s.image.height;
    const double ccx = (w - 1) / 2.0;
    const double ccy = (h - 1) / 2.0;
    const double cosa = std::cos(angle);
    const double sina = std::sin(angle);

    Sample out;
    out.image = RasterImage::filled(w, h, s.image.channels, kAugmentFill);
    // inverse mapping: content moves by R(angle), each output pixel samples
    // the source at R(-angle) about the canvas center
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dx = x - ccx;
            const double dy = y - ccy;
            const double sx = cosa * dx + sina * dy + ccx;
            const double sy = -sina * dx + cosa * dy + ccy;
            for (int ch = 0; ch < s.image.channels; ++ch)
                out.image.at(y, x, ch) = quantize(bilinear_sample(s.image, sx, sy, ch));
        }

    for (const GroundTruthBox& gt : s.labels) {
        const double dx = gt.box.cx - ccx;
        const double dy = gt.box.cy - ccy;
        const double nx = cosa * dx - sina * dy + ccx;
        const double ny = sina * dx + cosa * dy + ccy;
        if (nx < 0.0 || nx >= w || ny < 0.0 || ny >= h) continue;
        GroundTruthBox moved = gt;
        moved.box.cx = nx;
        moved.box.cy = ny;
        moved.box.theta = normalize_angle(gt.box.theta + angle);
        out.labels.push_back(moved);
    }
    return out;
}

namespace {

void blit(RasterImage& canvas, const RasterImage& src, int dst_x, int dst_y, int src_x, int src_y,
          int copy_w, int copy_h) {
    if (copy_w <= 0 || copy_h <= 0) return;
    for (int r = 0; r < copy_h; ++r)
        for (int c = 0; c < copy_w; ++c)
            for (int ch = 0; ch < canvas.channels; ++ch)
                canvas.at(dst_y + r, dst_x + c, ch) = src.at(src_y + r, src_x + c, ch);
}

}  // namespace

Sample mosaic_at(const std::array<Sample, 4>& samples, int out_size, int jx, int jy) {
    if (out_size < 2) throw ValidationError("mosaic: output size must be >= 2");
    if (jx < 0 || jx > out_size || jy < 0 || jy > out_size)
        throw ValidationError("mosaic: join point outside canvas");
    const int channels = samples[0].image.channels;
    for (const Sample& s : samples) {
        if (!s.image.valid()) throw ValidationError("mosaic: invalid input image");
        if (s.image.channels != channels)
            throw ValidationError("mosaic: inputs must share channel count");
    }

    Sample out;
    out.image = RasterImage::filled(out_size, out_size, channels, kAugmentFill);

    // Per-quadrant translation from source to canvas coordinates: each input
    // is anchored with the corner facing the join point at (jx, jy).
    for (int q = 0; q < 4; ++q) {
        const RasterImage& img = samples[q].image;
        const bool left = (q % 2) == 0;
        const bool top = q < 2;
        const int off_x = left ? jx - img.width : jx;
        const int off_y = top ? jy - img.height : jy;

        const int x0 = std::max(0, off_x);
        const int y0 = std::max(0, off_y);
        const int x1 = std::min(left ? jx : out_size, off_x + img.width);
        const int y1 = std::min(top ? jy : out_size, off_y + img.height);
        blit(out.image, img, x0, y0, x0 - off_x, y0 - off_y, x1 - x0, y1 - y0);

        for (const GroundTruthBox& gt : samples[q].labels) {
            const double nx = gt.box.cx + off_x;
            const double ny = gt.box.cy + off_y;
            if (nx < 0.0 || nx >= out_size || ny < 0.0 || ny >= out_size) continue;
            GroundTruthBox moved = gt;
            moved.box.cx = nx;
            moved.box.cy = ny;
            out.labels.push_back(moved);
        }
    }
    return out;
}

Sample mosaic(const std::array<Sample, 4>& samples, int out_size, AugmentRng& rng) {
    const int quarter = out_size / 4;
    const int span = std::max(1, out_size / 2);
    const int jx = quarter + static_cast<int>(rng.next_below(span));
    const int jy = quarter + static_cast<int>(rng.next_below(span));
    return mosaic_at(samples, out_size, jx, jy);
}

namespace {

struct Hsv {
    double h;  ///< [0,1)
    double s;  ///< [0,1]
    double v;  ///< [0,1]
};

Hsv rgb_to_hsv(double r, double g, double b) {
    const double v = std::max({r, g, b});
    const double lo = std::min({r, g, b});
    const double delta = v - lo;
    Hsv out{0.0, 0.0, v};
    if (v > 0.0) out.s = delta / v;
    if (delta > 0.0) {
        double h;
        if (v == r)
            h = (g - b) / delta;
        else if (v == g)
            h = 2.0 + (b - r) / delta;
        else
            h = 4.0 + (r - g) / delta;
        h /= 6.0;
        if (h < 0.0) h += 1.0;
        out.h = h;
    }
    return out;
}

void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b) {
    if (hsv.s <= 0.0) {
        r = g = b = hsv.v;
        return;
    }
    const double h6 = hsv.h * 6.0;
    const int sector = std::min(5, static_cast<int>(std::floor(h6)));
    const double f = h6 - sector;
    const double p = hsv.v * (1.0 - hsv.s);
    const double q = hsv.v * (1.0 - hsv.s * f);
    const double t = hsv.v * (1.0 - hsv.s * (1.0 - f));
    switch (sector) {
        case 0: r = hsv.v, g = t, b = p; break;
        case 1: r = q, g = hsv.v, b = p; break;
        case 2: r = p, g = hsv.v, b = t; break;
        case 3: r = p, g = q, b = hsv.v; break;
        case 4: r = t, g = p, b = hsv.v; break;
        default: r = hsv.v, g = p, b = q; break;
    }
}

}  // namespace

RasterImage apply_hsv(const RasterImage& image, double hue_shift, double sat_factor,
                      double val_factor) {
    if (!image.valid()) throw ValidationError("apply_hsv: invalid image");
    if (image.channels != 3) throw ValidationError("apply_hsv: RGB input required");

    RasterImage out = image;
    const std::size_t pixels = static_cast<std::size_t>(image.width) * image.height;
    for (std::size_t i = 0; i < pixels; ++i) {
        const std::uint8_t* px = &image.samples[i * 3];
        Hsv hsv = rgb_to_hsv(px[0] / 255.0, px[1] / 255.0, px[2] / 255.0);
        hsv.h = hsv.h + hue_shift;
        hsv.h -= std::floor(hsv.h);  // wrap into [0,1)
        hsv.s = std::clamp(hsv.s * sat_factor, 0.0, 1.0);
        hsv.v = std::clamp(hsv.v * val_factor, 0.0, 1.0);
        double r, g, b;
        hsv_to_rgb(hsv, r, g, b);
        out.samples[i * 3 + 0] = quantize(r * 255.0);
        out.samples[i * 3 + 1] = quantize(g * 255.0);
        out.samples[i * 3 + 2] = quantize(b * 255.0);
    }
    return out;
}

RasterImage hsv_jitter(const RasterImage& image, double h_gain, double s_gain, double v_gain,
                       AugmentRng& rng) {
    if (h_gain < 0.0 || h_gain > 1.0 || s_gain < 0.0 || s_gain > 1.0 || v_gain < 0.0 ||
        v_gain > 1.0)
        throw ValidationError("hsv_jitter: gains must be in [0,1]");
    const double hue_shift = rng.uniform(-h_gain, h_gain);
    const double sat_factor = rng.uniform(1.0 - s_gain, 1.0 + s_gain);
    const double val_factor = rng.uniform(1.0 - v_gain, 1.0 + v_gain);
    return apply_hsv(image, hue_shift, sat_factor, val_factor);
}

}  // namespace xwalk
