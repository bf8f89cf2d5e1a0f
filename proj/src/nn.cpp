#include "xwalk/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "xwalk/error.hpp"
#include "xwalk/rng.hpp"

namespace xwalk {

namespace {
constexpr double kPi = 3.14159265358979323846;

void check_odd_kernel(int kernel) {
    if (kernel < 1 || kernel % 2 == 0)
        throw ValidationError("pooling/conv kernel must be odd and >= 1");
}

Tensor4 add(const Tensor4& a, const Tensor4& b) {
    if (!a.same_shape(b)) throw ShapeError("tensor add: shape mismatch");
    Tensor4 out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

/// y = sum(e^{v - m} * v) / sum(e^{v - m}) over the values seen by `visit`.
struct SoftPoolAccum {
    double max_val = -std::numeric_limits<double>::infinity();
    double num = 0.0;
    double den = 0.0;

    void first_pass(double v) { max_val = std::max(max_val, v); }
    void second_pass(double v) {
        const double e = std::exp(v - max_val);
        num += e * v;
        den += e;
    }
    double value() const { return num / den; }
};
}  // namespace

Tensor4 Tensor4::zeros(int n, int c, int h, int w) { return constant(n, c, h, w, 0.0); }

Tensor4 Tensor4::constant(int n, int c, int h, int w, double value) {
    if (n < 1 || c < 1 || h < 1 || w < 1) throw ShapeError("Tensor4: dims must be >= 1");
    Tensor4 t;
    t.n = n;
    t.c = c;
    t.h = h;
    t.w = w;
    t.data.assign(static_cast<std::size_t>(n) * c * h * w, value);
    return t;
}

void ConvWeights::validate() const {
    check_odd_kernel(kernel);
    if (out_channels < 1 || in_channels < 1) throw ShapeError("ConvWeights: bad channel counts");
    const std::size_t expect = static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
    if (weights.size() != expect || bias.size() != static_cast<std::size_t>(out_channels))
        throw ShapeError("ConvWeights: weight/bias length does not match declared shape");
}

void SoftCbamWeights::validate(int channels) const {
    channel_mlp1.validate();
    channel_mlp2.validate();
    spatial_conv.validate();
    if (channel_mlp1.in_channels != channels || channel_mlp2.out_channels != channels ||
        channel_mlp1.out_channels != channel_mlp2.in_channels)
        throw ShapeError("SoftCbamWeights: channel MLP must compose C -> C/r -> C");
    if (channel_mlp1.kernel != 1 || channel_mlp2.kernel != 1)
        throw ShapeError("SoftCbamWeights: channel MLP convs must be 1x1");
    if (spatial_conv.in_channels != 2 || spatial_conv.out_channels != 1 ||
        spatial_conv.kernel != 7)
        throw ShapeError("SoftCbamWeights: spatial conv must be 7x7, 2 -> 1 channels");
}

void SppfWeights::validate(int channels) const {
    if (channels % 2 != 0) throw ShapeError("SppfWeights: input channels must be even");
    const int half = channels / 2;
    for (const SppfBranchWeights* branch : {&max_branch, &soft_branch}) {
        branch->pre_conv.validate();
        branch->post_conv.validate();
        if (branch->pre_conv.in_channels != channels || branch->pre_conv.out_channels != half)
            throw ShapeError("SppfWeights: pre_conv must map C -> C/2");
        if (branch->post_conv.in_channels != 2 * channels ||
            branch->post_conv.out_channels != half)
            throw ShapeError("SppfWeights: post_conv must map 2C -> C/2");
    }
}

Tensor4 max_pool2d(const Tensor4& x, int kernel, int stride) {
    check_odd_kernel(kernel);
    if (stride < 1) throw ValidationError("max_pool2d: stride must be >= 1");
    const int pad = kernel / 2;
    const int oh = (x.h + 2 * pad - kernel) / stride + 1;
    const int ow = (x.w + 2 * pad - kernel) / stride + 1;
    Tensor4 out = Tensor4::zeros(x.n, x.c, oh, ow);
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const int y0 = std::max(0, oy * stride - pad);
                    const int y1 = std::min(x.h, oy * stride - pad + kernel);
                    const int x0 = std::max(0, ox * stride - pad);
                    const int x1 = std::min(x.w, ox * stride - pad + kernel);
                    double m = -std::numeric_limits<double>::infinity();
                    for (int y = y0; y < y1; ++y)
                        for (int xx = x0; xx < x1; ++xx) m = std::max(m, x.at(in, ic, y, xx));
                    out.at(in, ic, oy, ox) = m;
                }
    return out;
}

Tensor4 soft_pool2d(const Tensor4& x, int kernel, int stride) {
    check_odd_kernel(kernel);
    if (stride < 1) throw ValidationError("soft_pool2d: stride must be >= 1");
    const int pad = kernel / 2;
    const int oh = (x.h + 2 * pad - kernel) / stride + 1;
    const int ow = (x.w + 2 * pad - kernel) / stride + 1;
    Tensor4 out = Tensor4::zeros(x.n, x.c, oh, ow);
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const int y0 = std::max(0, oy * stride - pad);
                    const int y1 = std::min(x.h, oy * stride - pad + kernel);
                    const int x0 = std::max(0, ox * stride - pad);
                    const int x1 = std::min(x.w, ox * stride - pad + kernel);
                    SoftPoolAccum acc;
                    for (int y = y0; y < y1; ++y)
                        for (int xx = x0; xx < x1; ++xx) acc.first_pass(x.at(in, ic, y, xx));
                    for (int y = y0; y < y1; ++y)
                        for (int xx = x0; xx < x1; ++xx) acc.second_pass(x.at(in, ic, y, xx));
                    out.at(in, ic, oy, ox) = acc.value();
                }
    return out;
}

Tensor4 conv2d(const Tensor4& x, const ConvWeights& w, int stride) {
    w.validate();
    if (stride < 1) throw ValidationError("conv2d: stride must be >= 1");
    if (x.c != w.in_channels) throw ShapeError("conv2d: input channel mismatch");
    const int pad = w.kernel / 2;
    const int oh = (x.h + 2 * pad - w.kernel) / stride + 1;
    const int ow = (x.w + 2 * pad - w.kernel) / stride + 1;
    Tensor4 out = Tensor4::zeros(x.n, w.out_channels, oh, ow);
    for (int in = 0; in < x.n; ++in)
        for (int oc = 0; oc < w.out_channels; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = w.bias[oc];
                    for (int ic = 0; ic < x.c; ++ic)
                        for (int ky = 0; ky < w.kernel; ++ky) {
                            const int y = oy * stride - pad + ky;
                            if (y < 0 || y >= x.h) continue;
                            for (int kx = 0; kx < w.kernel; ++kx) {
                                const int xx = ox * stride - pad + kx;
                                if (xx < 0 || xx >= x.w) continue;
                                acc += w.wt(oc, ic, ky, kx) * x.at(in, ic, y, xx);
                            }
                        }
                    out.at(in, oc, oy, ox) = acc;
                }
    return out;
}

Tensor4 concat_channels(const std::vector<Tensor4>& parts) {
    if (parts.empty()) throw ShapeError("concat_channels: no parts");
    int total_c = 0;
    for (const Tensor4& p : parts) {
        if (p.n != parts[0].n || p.h != parts[0].h || p.w != parts[0].w)
            throw ShapeError("concat_channels: spatial/batch mismatch");
        total_c += p.c;
    }
    Tensor4 out = Tensor4::zeros(parts[0].n, total_c, parts[0].h, parts[0].w);
    int c_base = 0;
    for (const Tensor4& p : parts) {
        for (int in = 0; in < p.n; ++in)
            for (int ic = 0; ic < p.c; ++ic)
                for (int y = 0; y < p.h; ++y)
                    for (int xx = 0; xx < p.w; ++xx)
                        out.at(in, c_base + ic, y, xx) = p.at(in, ic, y, xx);
        c_base += p.c;
    }
    return out;
}

Tensor4 relu(const Tensor4& x) {
    Tensor4 out = x;
    for (double& v : out.data) v = std::max(0.0, v);
    return out;
}

Tensor4 sigmoid(const Tensor4& x) {
    Tensor4 out = x;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return out;
}

Tensor4 global_max_pool(const Tensor4& x) {
    Tensor4 out = Tensor4::zeros(x.n, x.c, 1, 1);
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic) {
            double m = -std::numeric_limits<double>::infinity();
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) m = std::max(m, x.at(in, ic, y, xx));
            out.at(in, ic, 0, 0) = m;
        }
    return out;
}

Tensor4 global_soft_pool(const Tensor4& x) {
    Tensor4 out = Tensor4::zeros(x.n, x.c, 1, 1);
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic) {
            SoftPoolAccum acc;
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) acc.first_pass(x.at(in, ic, y, xx));
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) acc.second_pass(x.at(in, ic, y, xx));
            out.at(in, ic, 0, 0) = acc.value();
        }
    return out;
}

Tensor4 channelwise_max_pool(const Tensor4& x) {
    Tensor4 out = Tensor4::zeros(x.n, 1, x.h, x.w);
    for (int in = 0; in < x.n; ++in)
        for (int y = 0; y < x.h; ++y)
            for (int xx = 0; xx < x.w; ++xx) {
                double m = -std::numeric_limits<double>::infinity();
                for (int ic = 0; ic < x.c; ++ic) m = std::max(m, x.at(in, ic, y, xx));
                out.at(in, 0, y, xx) = m;
            }
    return out;
}

Tensor4 channelwise_soft_pool(const Tensor4& x) {
    Tensor4 out = Tensor4::zeros(x.n, 1, x.h, x.w);
    for (int in = 0; in < x.n; ++in)
        for (int y = 0; y < x.h; ++y)
            for (int xx = 0; xx < x.w; ++xx) {
                SoftPoolAccum acc;
                for (int ic = 0; ic < x.c; ++ic) acc.first_pass(x.at(in, ic, y, xx));
                for (int ic = 0; ic < x.c; ++ic) acc.second_pass(x.at(in, ic, y, xx));
                out.at(in, 0, y, xx) = acc.value();
            }
    return out;
}

namespace {

Tensor4 sppf_branch(const Tensor4& x, const SppfBranchWeights& bw, bool soft) {
    const Tensor4 p = conv2d(x, bw.pre_conv);
    const Tensor4 m1 = soft ? soft_pool2d(p, 5) : max_pool2d(p, 5);
    const Tensor4 m2 = soft ? soft_pool2d(m1, 5) : max_pool2d(m1, 5);
    const Tensor4 m3 = soft ? soft_pool2d(m2, 5) : max_pool2d(m2, 5);
    return conv2d(concat_channels({p, m1, m2, m3}), bw.post_conv);
}

}  // namespace

Tensor4 dual_branch_sppf(const Tensor4& x, const SppfWeights& w) {
    w.validate(x.c);
    const Tensor4 br_max = sppf_branch(x, w.max_branch, /*soft=*/false);
    const Tensor4 br_soft = sppf_branch(x, w.soft_branch, /*soft=*/true);
    return concat_channels({br_max, br_soft});
}

namespace {

Tensor4 channel_mlp(const Tensor4& pooled, const SoftCbamWeights& w) {
    return conv2d(relu(conv2d(pooled, w.channel_mlp1)), w.channel_mlp2);
}

}  // namespace

Tensor4 channel_attention(const Tensor4& x, const SoftCbamWeights& w) {
    w.validate(x.c);
    const Tensor4 soft_path = channel_mlp(global_soft_pool(x), w);
    const Tensor4 max_path = channel_mlp(global_max_pool(x), w);
    return sigmoid(add(soft_path, max_path));
}

Tensor4 spatial_attention(const Tensor4& x, const SoftCbamWeights& w) {
    w.validate(x.c);
    const Tensor4 stacked = concat_channels({channelwise_soft_pool(x), channelwise_max_pool(x)});
    return sigmoid(conv2d(stacked, w.spatial_conv));
}

Tensor4 soft_cbam(const Tensor4& x, const SoftCbamWeights& w) {
    const Tensor4 ca = channel_attention(x, w);  // (n, c, 1, 1)
    Tensor4 gated = x;
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic) {
            const double g = ca.at(in, ic, 0, 0);
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) gated.at(in, ic, y, xx) *= g;
        }
    const Tensor4 sa = spatial_attention(gated, w);  // (n, 1, h, w)
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic)
            for (int y = 0; y < x.h; ++y)
                for (int xx = 0; xx < x.w; ++xx) gated.at(in, ic, y, xx) *= sa.at(in, 0, y, xx);
    return gated;
}

double cosine_lr(long t, long total_steps, double lr_max, double lr_min) {
    if (total_steps < 1) throw ValidationError("cosine_lr: total steps must be >= 1");
    if (t < 0 || t > total_steps) throw ValidationError("cosine_lr: step out of [0, T]");
    if (lr_min > lr_max) throw ValidationError("cosine_lr: lr_min must be <= lr_max");
    // anchor points are exact; cos(pi/2) in floating point is not quite zero
    if (t == 0) return lr_max;
    if (t == total_steps) return lr_min;
    if (2 * t == total_steps) return (lr_max + lr_min) / 2.0;
    const double phase = kPi * static_cast<double>(t) / static_cast<double>(total_steps);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

Tensor4 seeded_tensor(int n, int c, int h, int w, std::uint64_t seed, double scale) {
    SplitMix64 rng(seed);
    Tensor4 t = Tensor4::zeros(n, c, h, w);
    for (double& v : t.data) v = scale * (rng.next_double() - 0.5);
    return t;
}

ConvWeights seeded_conv(int out_channels, int in_channels, int kernel, std::uint64_t seed,
                        double scale) {
    SplitMix64 rng(seed);
    ConvWeights w;
    w.out_channels = out_channels;
    w.in_channels = in_channels;
    w.kernel = kernel;
    w.weights.resize(static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel);
    w.bias.resize(out_channels);
    for (double& v : w.weights) v = scale * (rng.next_double() - 0.5);
    for (double& v : w.bias) v = scale * (rng.next_double() - 0.5);
    return w;
}

SppfWeights seeded_sppf_weights(int channels, std::uint64_t seed) {
    if (channels % 2 != 0) throw ShapeError("seeded_sppf_weights: channels must be even");
    SplitMix64 rng(seed);
    const int half = channels / 2;
    SppfWeights w;
    w.max_branch.pre_conv = seeded_conv(half, channels, 1, rng.next());
    w.max_branch.post_conv = seeded_conv(half, 2 * channels, 1, rng.next());
    w.soft_branch.pre_conv = seeded_conv(half, channels, 1, rng.next());
    w.soft_branch.post_conv = seeded_conv(half, 2 * channels, 1, rng.next());
    return w;
}

SoftCbamWeights seeded_cbam_weights(int channels, int reduction, std::uint64_t seed) {
    if (reduction < 1 || channels % reduction != 0)
        throw ShapeError("seeded_cbam_weights: reduction must divide channels");
    SplitMix64 rng(seed);
    SoftCbamWeights w;
    w.channel_mlp1 = seeded_conv(channels / reduction, channels, 1, rng.next());
    w.channel_mlp2 = seeded_conv(channels, channels / reduction, 1, rng.next());
    w.spatial_conv = seeded_conv(1, 2, 7, rng.next());
    return w;
}

namespace {

constexpr char kWeightsMagic[4] = {'X', 'W', 'B', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ParseError("weights: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw ParseError("weights: truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void put_array(std::ostream& out, const std::vector<std::uint32_t>& dims,
               const std::vector<double>& values) {
    put_u32(out, static_cast<std::uint32_t>(dims.size()));
    std::size_t expect = 1;
    for (std::uint32_t d : dims) {
        put_u32(out, d);
        expect *= d;
    }
    if (expect != values.size()) throw ShapeError("weights: payload does not match shape");
    for (double v : values) put_f64(out, v);
}

std::vector<double> get_array(std::istream& in, std::vector<std::uint32_t>& dims) {
    const std::uint32_t rank = get_u32(in);
    if (rank == 0 || rank > 4) throw ParseError("weights: bad tensor rank");
    dims.resize(rank);
    std::size_t count = 1;
    for (std::uint32_t& d : dims) {
        d = get_u32(in);
        if (d == 0 || d > (1u << 20)) throw ParseError("weights: bad tensor dimension");
        count *= d;
    }
    std::vector<double> values(count);
    for (double& v : values) v = get_f64(in);
    return values;
}

void put_conv(std::ostream& out, const ConvWeights& w) {
    put_array(out,
              {static_cast<std::uint32_t>(w.out_channels), static_cast<std::uint32_t>(w.in_channels),
               static_cast<std::uint32_t>(w.kernel), static_cast<std::uint32_t>(w.kernel)},
              w.weights);
    put_array(out, {static_cast<std::uint32_t>(w.out_channels)}, w.bias);
}

ConvWeights get_conv(std::istream& in) {
    std::vector<std::uint32_t> dims;
    ConvWeights w;
    w.weights = get_array(in, dims);
    if (dims.size() != 4 || dims[2] != dims[3]) throw ParseError("weights: conv tensor must be o,i,k,k");
    w.out_channels = static_cast<int>(dims[0]);
    w.in_channels = static_cast<int>(dims[1]);
    w.kernel = static_cast<int>(dims[2]);
    w.bias = get_array(in, dims);
    if (dims.size() != 1 || dims[0] != static_cast<std::uint32_t>(w.out_channels))
        throw ParseError("weights: bias length must equal out channels");
    w.validate();
    return w;
}

}  // namespace

void save_weights(const std::string& path, const SppfWeights& sppf, const SoftCbamWeights& cbam) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write weights: " + path);
    out.write(kWeightsMagic, 4);
    put_conv(out, sppf.max_branch.pre_conv);
    put_conv(out, sppf.max_branch.post_conv);
    put_conv(out, sppf.soft_branch.pre_conv);
    put_conv(out, sppf.soft_branch.post_conv);
    put_conv(out, cbam.channel_mlp1);
    put_conv(out, cbam.channel_mlp2);
    put_conv(out, cbam.spatial_conv);
    if (!out) throw IoError("weights write failed: " + path);
}

std::pair<SppfWeights, SoftCbamWeights> load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open weights: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kWeightsMagic, 4) != 0)
        throw ParseError("weights: bad magic (not a weight container)");

    SppfWeights sppf;
    sppf.max_branch.pre_conv = get_conv(in);
    sppf.max_branch.post_conv = get_conv(in);
    sppf.soft_branch.pre_conv = get_conv(in);
    sppf.soft_branch.post_conv = get_conv(in);
    SoftCbamWeights cbam;
    cbam.channel_mlp1 = get_conv(in);
    cbam.channel_mlp2 = get_conv(in);
    cbam.spatial_conv = get_conv(in);

    sppf.validate(sppf.max_branch.pre_conv.in_channels);
    cbam.validate(cbam.channel_mlp1.in_channels);
    return {sppf, cbam};
}

}  // namespace xwalk
