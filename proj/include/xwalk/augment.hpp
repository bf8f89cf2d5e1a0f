#pragma once

#include <array>

#include "xwalk/eval.hpp"
#include "xwalk/raster.hpp"
#include "xwalk/rng.hpp"

namespace xwalk {

/// Seed-driven augmentation stream; identical seeds give byte-identical
/// outputs. Parallel pipelines should take independent streams via split().
using AugmentRng = SplitMix64;

struct Sample {
    RasterImage image;
    std::vector<GroundTruthBox> labels;
};

/// Gray value used for canvas areas no source pixel maps to.
constexpr std::uint8_t kAugmentFill = 114;

/// Largest rotation magnitude accepted by rotate_sample (8 degrees).
constexpr double kMaxRotationRad = 8.0 * 3.14159265358979323846 / 180.0;

/// Rotates the image about the pixel-grid center ((w-1)/2, (h-1)/2) with
/// bilinear resampling on the same canvas; exposed border areas take the
/// fill value. Label centers rotate with the content, theta shifts by the
/// angle, and w/h are preserved; labels whose rotated center leaves the
/// canvas are dropped. Throws ValidationError when |angle| exceeds 8 degrees.
Sample rotate_sample(const Sample& s, double angle);

/// Deterministic mosaic core: the four samples fill the four quadrants
/// around join point (jx, jy), each anchored with its join-facing corner at
/// the join. Labels translate with their quadrant; those whose center lands
/// outside the canvas are dropped (boxes straddling the edge survive when
/// their center is inside).
Sample mosaic_at(const std::array<Sample, 4>& samples, int out_size, int jx, int jy);

/// mosaic_at with the join point drawn uniformly from the central half of
/// the canvas, [out_size/4, 3*out_size/4).
Sample mosaic(const std::array<Sample, 4>& samples, int out_size, AugmentRng& rng);

/// Deterministic HSV core: hue shifted by hue_shift (wrapping mod 1),
/// saturation and value scaled and clamped; standard hexcone conversion,
/// outputs rounded and clamped to [0,255]. Throws ValidationError for
/// non-RGB input.
RasterImage apply_hsv(const RasterImage& image, double hue_shift, double sat_factor,
                      double val_factor);

/// apply_hsv with per-image random factors: hue shift in [-h_gain, h_gain],
/// saturation/value factors in [1-gain, 1+gain].
RasterImage hsv_jitter(const RasterImage& image, double h_gain, double s_gain, double v_gain,
                       AugmentRng& rng);

}  // namespace xwalk
