#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace xwalk {

/// Dense NCHW tensor of doubles, row-major in (n, c, h, w) order.
/// Forward-only reference math; no autodiff, no GPU.
struct Tensor4 {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;
    std::vector<double> data;

    static Tensor4 zeros(int n, int c, int h, int w);
    static Tensor4 constant(int n, int c, int h, int w, double value);

    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    double at(int in, int ic, int iy, int ix) const {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    double& at(int in, int ic, int iy, int ix) {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
    }
};

/// Square-kernel conv parameters (cross-correlation). Kernel must be odd so
/// same-size padding is well defined.
struct ConvWeights {
    int out_channels = 0;
    int in_channels = 0;
    int kernel = 1;
    std::vector<double> weights;  ///< out x in x k x k
    std::vector<double> bias;     ///< per out-channel

    void validate() const;
    double wt(int o, int i, int ky, int kx) const {
        return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel +
                       kx];
    }
};

/// Channel-attention MLP (two 1x1 convs, C -> C/r -> C, ReLU between) plus
/// the 7x7 spatial conv mapping the 2-channel pooled stack to 1 channel.
struct SoftCbamWeights {
    ConvWeights channel_mlp1;
    ConvWeights channel_mlp2;
    ConvWeights spatial_conv;

    void validate(int channels) const;
};

/// Per-branch 1x1 convs for the dual-branch pyramid pooling block:
/// pre_conv C -> C/2, post_conv 2C -> C/2 over the 4-way concat.
struct SppfBranchWeights {
    ConvWeights pre_conv;
    ConvWeights post_conv;
};

struct SppfWeights {
    SppfBranchWeights max_branch;   ///< serial max-pool branch
    SppfBranchWeights soft_branch;  ///< serial soft-pool branch

    void validate(int channels) const;
};

/// Max over each kxk window, stride 1, same spatial size. Border windows are
/// clipped to the tensor instead of padded, so constants pass through exactly.
Tensor4 max_pool2d(const Tensor4& x, int kernel, int stride = 1);

/// Exponentially weighted pooling: y = sum(e^{xi} * xi) / sum(e^{xi}) over
/// the window, computed with the window max subtracted from the exponents
/// (weights are shift-invariant, so the value is preserved). Border windows
/// are clipped like max_pool2d.
Tensor4 soft_pool2d(const Tensor4& x, int kernel, int stride = 1);

/// Cross-correlation plus bias, zero padding kernel/2, spatial size preserved
/// at stride 1. Throws ShapeError on channel mismatch.
Tensor4 conv2d(const Tensor4& x, const ConvWeights& w, int stride = 1);

/// Stacks channels in argument order. Throws ShapeError unless all parts
/// share (n, h, w).
Tensor4 concat_channels(const std::vector<Tensor4>& parts);

Tensor4 relu(const Tensor4& x);
Tensor4 sigmoid(const Tensor4& x);

/// Global pools over the full HxW plane, one value per (n, c): (n, c, 1, 1).
Tensor4 global_max_pool(const Tensor4& x);
Tensor4 global_soft_pool(const Tensor4& x);

/// Pools across C at every position: (n, 1, h, w).
Tensor4 channelwise_max_pool(const Tensor4& x);
Tensor4 channelwise_soft_pool(const Tensor4& x);

/// Two-branch pyramid pooling block. Each branch halves channels, runs three
/// serial k=5 pools (effective receptive scales 5/9/13), concatenates the
/// pre-conv output with the three pool stages, and projects 2C -> C/2; the
/// branch outputs are concatenated back to C channels. One branch pools with
/// max, the other with soft-pooling. Output shape equals the input shape.
Tensor4 dual_branch_sppf(const Tensor4& x, const SppfWeights& w);

/// sigma(MLP(global_soft_pool(x)) + MLP(global_max_pool(x))), one gate per
/// (n, c), each strictly inside (0,1). MLP is channel_mlp1 -> ReLU ->
/// channel_mlp2.
Tensor4 channel_attention(const Tensor4& x, const SoftCbamWeights& w);

/// sigma(conv7x7(concat(channelwise soft pool, channelwise max pool))),
/// shape (n, 1, h, w), values strictly inside (0,1).
Tensor4 spatial_attention(const Tensor4& x, const SoftCbamWeights& w);

/// Channel gate then spatial gate, both multiplicative:
/// x1 = x * channel_attention(x); out = x1 * spatial_attention(x1).
Tensor4 soft_cbam(const Tensor4& x, const SoftCbamWeights& w);

/// lr_min + (lr_max - lr_min) * (1 + cos(pi * t / T)) / 2.
/// Throws ValidationError unless 0 <= t <= T, T >= 1, lr_min <= lr_max.
double cosine_lr(long t, long total_steps, double lr_max, double lr_min);

/// Deterministic seeded values for demos and tests (uniform in [-0.5, 0.5)
/// scaled by `scale`).
Tensor4 seeded_tensor(int n, int c, int h, int w, std::uint64_t seed, double scale = 1.0);
ConvWeights seeded_conv(int out_channels, int in_channels, int kernel, std::uint64_t seed,
                        double scale = 0.25);
SppfWeights seeded_sppf_weights(int channels, std::uint64_t seed);
SoftCbamWeights seeded_cbam_weights(int channels, int reduction, std::uint64_t seed);

/// Weight container: magic "XWB1", then per tensor a shape header
/// (u32 little-endian rank, then dims) followed by float64 little-endian
/// payload. Tensors are stored in a fixed order; load validates shapes.
void save_weights(const std::string& path, const SppfWeights& sppf, const SoftCbamWeights& cbam);
std::pair<SppfWeights, SoftCbamWeights> load_weights(const std::string& path);

}  // namespace xwalk
