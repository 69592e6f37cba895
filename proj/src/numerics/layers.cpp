/*
Copyright 2026 The Karte Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "../error.hpp"
#include "linalg.hpp"

namespace karte {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorCode::Shape, what);
}

std::string pair_msg(const char* op, const Shape& a, const Shape& b) {
    return std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b);
}

std::size_t resolve_axis(int axis, std::size_t rank) {
    const int r = static_cast<int>(rank);
    const int a = axis < 0 ? axis + r : axis;
    if (a < 0 || a >= r) fail(ErrorCode::Shape, "softmax: axis " + std::to_string(axis) + " out of range");
    return static_cast<std::size_t>(a);
}

// Visit every 1-D fibre along `axis`: fn(offset, stride, length).
template <typename Fn>
void for_each_fibre(const Shape& shape, std::size_t axis, Fn&& fn) {
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
    const std::size_t len = shape[axis];
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t in = 0; in < inner; ++in) fn(o * len * inner + in, inner, len);
}

struct ConvGeometry {
    std::size_t n, c, h, w, f, k, oh, ow;
};

ConvGeometry conv_geometry(const Tensor& x, const Parameter& kernels, const Parameter& bias, Conv2dSpec spec) {
    require(x.rank() == 4, "conv2d: input must be rank 4, got " + shape_string(x.shape()));
    require(kernels.value.rank() == 4, "conv2d: kernels must be rank 4, got " + shape_string(kernels.shape()));
    const auto& ks = kernels.shape();
    require(ks[1] == x.dim(1), pair_msg("conv2d", x.shape(), ks));
    require(ks[2] == ks[3], "conv2d: kernels must be square, got " + shape_string(ks));
    require(bias.shape() == Shape{ks[0]}, pair_msg("conv2d bias", ks, bias.shape()));
    if (spec.stride == 0) fail(ErrorCode::InvalidArgument, "conv2d: stride must be positive");
    ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), ks[0], ks[2], 0, 0};
    const std::size_t ph = g.h + 2 * spec.padding, pw = g.w + 2 * spec.padding;
    if (g.k > ph || g.k > pw)
        fail(ErrorCode::Shape, "conv2d: kernel " + std::to_string(g.k) + " larger than padded input " +
                                   shape_string(x.shape()));
    if ((ph - g.k) % spec.stride != 0 || (pw - g.k) % spec.stride != 0)
        fail(ErrorCode::Shape, "conv2d: non-integer output size for input " + shape_string(x.shape()) +
                                   " kernel " + std::to_string(g.k) + " stride " + std::to_string(spec.stride));
    g.oh = (ph - g.k) / spec.stride + 1;
    g.ow = (pw - g.k) / spec.stride + 1;
    return g;
}

// cols[(c*k + ki)*k + kj][oy*ow + ox]
void im2col(const double* img, const ConvGeometry& g, Conv2dSpec spec, double* cols) {
    const std::size_t p = g.oh * g.ow;
    for (std::size_t c = 0; c < g.c; ++c)
        for (std::size_t ki = 0; ki < g.k; ++ki)
            for (std::size_t kj = 0; kj < g.k; ++kj) {
                double* row = cols + ((c * g.k + ki) * g.k + kj) * p;
                for (std::size_t oy = 0; oy < g.oh; ++oy) {
                    const auto iy = static_cast<long>(oy * spec.stride + ki) - static_cast<long>(spec.padding);
                    double* out = row + oy * g.ow;
                    if (iy < 0 || iy >= static_cast<long>(g.h)) {
                        std::fill(out, out + g.ow, 0.0);
                        continue;
                    }
                    const double* src = img + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
                    for (std::size_t ox = 0; ox < g.ow; ++ox) {
                        const auto ix = static_cast<long>(ox * spec.stride + kj) - static_cast<long>(spec.padding);
                        out[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? 0.0 : src[ix];
                    }
                }
            }
}

void col2im(const double* cols, const ConvGeometry& g, Conv2dSpec spec, double* img) {
    const std::size_t p = g.oh * g.ow;
    for (std::size_t c = 0; c < g.c; ++c)
        for (std::size_t ki = 0; ki < g.k; ++ki)
            for (std::size_t kj = 0; kj < g.k; ++kj) {
                const double* row = cols + ((c * g.k + ki) * g.k + kj) * p;
                for (std::size_t oy = 0; oy < g.oh; ++oy) {
                    const auto iy = static_cast<long>(oy * spec.stride + ki) - static_cast<long>(spec.padding);
                    if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
                    double* dst = img + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
                    const double* in = row + oy * g.ow;
                    for (std::size_t ox = 0; ox < g.ow; ++ox) {
                        const auto ix = static_cast<long>(ox * spec.stride + kj) - static_cast<long>(spec.padding);
                        if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += in[ox];
                    }
                }
            }
}

} // namespace

// ---- dense ---------------------------------------------------------------

Tensor dense(const Tensor& x, const Parameter& weight, const Parameter& bias) {
    require(x.rank() == 2 && weight.value.rank() == 2 && x.dim(1) == weight.shape()[0],
            pair_msg("dense", x.shape(), weight.shape()));
    const std::size_t n = x.dim(0), in = x.dim(1), out = weight.shape()[1];
    require(bias.shape() == Shape{out}, pair_msg("dense bias", weight.shape(), bias.shape()));
    Tensor y({n, out});
    for (std::size_t r = 0; r < n; ++r) std::copy(bias.value.ptr(), bias.value.ptr() + out, y.ptr() + r * out);
    linalg::gemm(false, false, n, out, in, 1.0, x.ptr(), weight.value.ptr(), 1.0, y.ptr());
    return y;
}

Tensor dense_backward(const Tensor& x, Parameter& weight, Parameter& bias, const Tensor& dy) {
    const std::size_t n = x.dim(0), in = x.dim(1), out = weight.shape()[1];
    require(dy.shape() == Shape{n, out}, pair_msg("dense backward", dy.shape(), Shape{n, out}));
    linalg::gemm(true, false, in, out, n, 1.0, x.ptr(), dy.ptr(), 1.0, weight.grad.ptr());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < out; ++o) bias.grad[o] += dy[r * out + o];
    Tensor dx({n, in});
    linalg::gemm(false, true, n, in, out, 1.0, dy.ptr(), weight.value.ptr(), 0.0, dx.ptr());
    return dx;
}

// ---- conv2d --------------------------------------------------------------

Tensor conv2d(const Tensor& x, const Parameter& kernels, const Parameter& bias, Conv2dSpec spec) {
    const auto g = conv_geometry(x, kernels, bias, spec);
    const std::size_t p = g.oh * g.ow, ckk = g.c * g.k * g.k;
    Tensor y({g.n, g.f, g.oh, g.ow});
    std::vector<double> cols(ckk * p);
    for (std::size_t n = 0; n < g.n; ++n) {
        im2col(x.ptr() + n * g.c * g.h * g.w, g, spec, cols.data());
        double* out = y.ptr() + n * g.f * p;
        for (std::size_t f = 0; f < g.f; ++f) std::fill(out + f * p, out + (f + 1) * p, bias.value[f]);
        linalg::gemm(false, false, g.f, p, ckk, 1.0, kernels.value.ptr(), cols.data(), 1.0, out);
    }
    return y;
}

Tensor conv2d_backward(const Tensor& x, Parameter& kernels, Parameter& bias, Conv2dSpec spec, const Tensor& dy) {
    const auto g = conv_geometry(x, kernels, bias, spec);
    require(dy.shape() == Shape({g.n, g.f, g.oh, g.ow}), pair_msg("conv2d backward", dy.shape(), Shape({g.n, g.f, g.oh, g.ow})));
    const std::size_t p = g.oh * g.ow, ckk = g.c * g.k * g.k;
    Tensor dx(x.shape());
    std::vector<double> cols(ckk * p), dcols(ckk * p);
    for (std::size_t n = 0; n < g.n; ++n) {
        const double* dout = dy.ptr() + n * g.f * p;
        im2col(x.ptr() + n * g.c * g.h * g.w, g, spec, cols.data());
        linalg::gemm(false, true, g.f, ckk, p, 1.0, dout, cols.data(), 1.0, kernels.grad.ptr());
        for (std::size_t f = 0; f < g.f; ++f) {
            double s = 0.0;
            for (std::size_t i = 0; i < p; ++i) s += dout[f * p + i];
            bias.grad[f] += s;
        }
        linalg::gemm(true, false, ckk, p, g.f, 1.0, kernels.value.ptr(), dout, 0.0, dcols.data());
        col2im(dcols.data(), g, spec, dx.ptr() + n * g.c * g.h * g.w);
    }
    return dx;
}

// ---- maxpool2d -----------------------------------------------------------

PoolResult maxpool2d(const Tensor& x, std::size_t window, std::size_t stride) {
    require(x.rank() == 4, "maxpool2d: input must be rank 4, got " + shape_string(x.shape()));
    if (window == 0 || stride == 0) fail(ErrorCode::InvalidArgument, "maxpool2d: window and stride must be positive");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (window > h || window > w)
        fail(ErrorCode::Shape, "maxpool2d: window " + std::to_string(window) + " larger than input " + shape_string(x.shape()));
    if ((h - window) % stride != 0 || (w - window) % stride != 0)
        fail(ErrorCode::Shape, "maxpool2d: non-integer output size for input " + shape_string(x.shape()));
    const std::size_t oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
    PoolResult r{Tensor({n, c, oh, ow}), std::vector<std::size_t>(n * c * oh * ow), x.shape()};
    std::size_t o = 0;
    for (std::size_t plane = 0; plane < n * c; ++plane) {
        const std::size_t base = plane * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
                std::size_t best = base + oy * stride * w + ox * stride;
                for (std::size_t ky = 0; ky < window; ++ky)
                    for (std::size_t kx = 0; kx < window; ++kx) {
                        const std::size_t idx = base + (oy * stride + ky) * w + ox * stride + kx;
                        if (x[idx] > x[best]) best = idx;
                    }
                r.output[o] = x[best];
                r.argmax[o] = best;
            }
    }
    return r;
}

Tensor maxpool2d_backward(const PoolResult& pool, const Tensor& dy) {
    require(dy.shape() == pool.output.shape(), pair_msg("maxpool2d backward", dy.shape(), pool.output.shape()));
    Tensor dx(pool.input_shape);
    for (std::size_t o = 0; o < dy.size(); ++o) dx[pool.argmax[o]] += dy[o];
    return dx;
}

// ---- elementwise ---------------------------------------------------------

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.data()) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
    require(x.shape() == dy.shape(), pair_msg("relu backward", x.shape(), dy.shape()));
    Tensor dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
    return dx;
}

Tensor softmax(const Tensor& x, int axis) {
    const std::size_t a = resolve_axis(axis, x.rank());
    Tensor y(x.shape());
    for_each_fibre(x.shape(), a, [&](std::size_t off, std::size_t stride, std::size_t len) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, x[off + i * stride]);
        double sum = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            const double e = std::exp(x[off + i * stride] - mx);
            y[off + i * stride] = e;
            sum += e;
        }
        for (std::size_t i = 0; i < len; ++i) y[off + i * stride] /= sum;
    });
    return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& dy, int axis) {
    require(y.shape() == dy.shape(), pair_msg("softmax backward", y.shape(), dy.shape()));
    const std::size_t a = resolve_axis(axis, y.rank());
    Tensor dx(y.shape());
    for_each_fibre(y.shape(), a, [&](std::size_t off, std::size_t stride, std::size_t len) {
        double dot = 0.0;
        for (std::size_t i = 0; i < len; ++i) dot += y[off + i * stride] * dy[off + i * stride];
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t j = off + i * stride;
            dx[j] = y[j] * (dy[j] - dot);
        }
    });
    return dx;
}

std::vector<double> log_softmax(std::span<const double> logits) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

// ---- dropout -------------------------------------------------------------

DropoutResult dropout(const Tensor& x, double rate, Rng& rng, bool training) {
    if (!(rate >= 0.0 && rate < 1.0))
        fail(ErrorCode::InvalidArgument, "dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return {x, {}};
    DropoutResult r{Tensor(x.shape()), std::vector<double>(x.size())};
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.scale[i] = rng.uniform() < rate ? 0.0 : keep_scale;
        r.output[i] = x[i] * r.scale[i];
    }
    return r;
}

Tensor dropout_backward(const DropoutResult& fwd, const Tensor& dy) {
    if (fwd.scale.empty()) return dy;
    Tensor dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * fwd.scale[i];
    return dx;
}

// ---- lstm ----------------------------------------------------------------

LstmParams::LstmParams(const std::string& prefix, std::size_t input_size, std::size_t hidden_size) {
    static constexpr const char* kNames[4] = {"i", "f", "o", "g"};
    for (std::size_t g = 0; g < 4; ++g) {
        weight[g] = Parameter(prefix + ".W_" + kNames[g], {input_size + hidden_size, hidden_size});
        bias[g] = Parameter(prefix + ".b_" + kNames[g], {hidden_size});
    }
}

void LstmParams::collect(ParameterList& out) {
    for (std::size_t g = 0; g < 4; ++g) {
        out.push_back(&weight[g]);
        out.push_back(&bias[g]);
    }
}

LstmCache lstm_cell(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev, const LstmParams& params) {
    const std::size_t hs = params.hidden_size(), xs = params.input_size();
    require(x.rank() == 2 && x.dim(1) == xs, pair_msg("lstm_cell input", x.shape(), params.weight[0].shape()));
    const std::size_t n = x.dim(0);
    require(h_prev.shape() == Shape({n, hs}), pair_msg("lstm_cell h_prev", h_prev.shape(), Shape({n, hs})));
    require(c_prev.shape() == Shape({n, hs}), pair_msg("lstm_cell c_prev", c_prev.shape(), Shape({n, hs})));

    LstmCache cache;
    cache.xh = Tensor({n, xs + hs});
    for (std::size_t r = 0; r < n; ++r) {
        std::copy_n(x.ptr() + r * xs, xs, cache.xh.ptr() + r * (xs + hs));
        std::copy_n(h_prev.ptr() + r * hs, hs, cache.xh.ptr() + r * (xs + hs) + xs);
    }
    for (std::size_t g = 0; g < 4; ++g) {
        Tensor pre = dense(cache.xh, params.weight[g], params.bias[g]);
        for (auto& v : pre.data()) v = g == kCellGate ? std::tanh(v) : sigmoid(v);
        cache.gate[g] = std::move(pre);
    }
    cache.c_prev = c_prev;
    cache.c = Tensor({n, hs});
    cache.tanh_c = Tensor({n, hs});
    cache.h = Tensor({n, hs});
    for (std::size_t j = 0; j < n * hs; ++j) {
        cache.c[j] = cache.gate[kForgetGate][j] * c_prev[j] + cache.gate[kInputGate][j] * cache.gate[kCellGate][j];
        cache.tanh_c[j] = std::tanh(cache.c[j]);
        cache.h[j] = cache.gate[kOutputGate][j] * cache.tanh_c[j];
    }
    return cache;
}

LstmGrads lstm_cell_backward(const LstmCache& cache, LstmParams& params, const Tensor& dh, const Tensor& dc_in) {
    const std::size_t n = cache.h.dim(0), hs = params.hidden_size(), xs = params.input_size();
    require(dh.shape() == cache.h.shape(), pair_msg("lstm_cell backward dh", dh.shape(), cache.h.shape()));
    require(dc_in.shape() == cache.c.shape(), pair_msg("lstm_cell backward dc", dc_in.shape(), cache.c.shape()));

    std::array<Tensor, 4> dpre;
    for (auto& t : dpre) t = Tensor({n, hs});
    LstmGrads out{Tensor({n, xs}), Tensor({n, hs}), Tensor({n, hs})};
    const auto& gi = cache.gate[kInputGate];
    const auto& gf = cache.gate[kForgetGate];
    const auto& go = cache.gate[kOutputGate];
    const auto& gg = cache.gate[kCellGate];
    for (std::size_t j = 0; j < n * hs; ++j) {
        const double tc = cache.tanh_c[j];
        const double dc = dc_in[j] + dh[j] * go[j] * (1.0 - tc * tc);
        dpre[kOutputGate][j] = dh[j] * tc * go[j] * (1.0 - go[j]);
        dpre[kInputGate][j] = dc * gg[j] * gi[j] * (1.0 - gi[j]);
        dpre[kForgetGate][j] = dc * cache.c_prev[j] * gf[j] * (1.0 - gf[j]);
        dpre[kCellGate][j] = dc * gi[j] * (1.0 - gg[j] * gg[j]);
        out.dc_prev[j] = dc * gf[j];
    }
    Tensor dxh({n, xs + hs});
    for (std::size_t g = 0; g < 4; ++g) {
        Tensor part = dense_backward(cache.xh, params.weight[g], params.bias[g], dpre[g]);
        for (std::size_t i = 0; i < dxh.size(); ++i) dxh[i] += part[i];
    }
    for (std::size_t r = 0; r < n; ++r) {
        std::copy_n(dxh.ptr() + r * (xs + hs), xs, out.dx.ptr() + r * xs);
        std::copy_n(dxh.ptr() + r * (xs + hs) + xs, hs, out.dh_prev.ptr() + r * hs);
    }
    return out;
}

} // namespace karte
