// SPDX-License-Identifier: Apache-2.0
//
// cefkit: channel estimation and CSI feedback simulation toolkit
// Copyright (C) 2026 cefkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef CEF_NN_HPP
#define CEF_NN_HPP

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "cef/common.hpp"
#include "cef/rng.hpp"
#include "cef/tensor.hpp"

namespace cef::nn {

enum class Act { kNone, kRelu, kTanh };

/// Named parameter array with its gradient accumulator.
/// `is_weight` marks conv/FC kernels, the blocks counted by the weight-only
/// parameter convention. `trainable=false` covers frozen blocks and
/// batch-norm running statistics.
template <typename T>
struct ParamBlock {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<T> w;
    std::vector<T> g;
    bool trainable = true;
    bool is_weight = false;

    int64_t size() const { return static_cast<int64_t>(w.size()); }
    void alloc(std::vector<int64_t> s) {
        shape = std::move(s);
        int64_t n = Tensor<T>::count(shape);
        w.assign(n, T(0));
        g.assign(n, T(0));
    }
    void zero_grad() { std::fill(g.begin(), g.end(), T(0)); }
};

template <typename T>
void glorot_uniform(ParamBlock<T> &p, int64_t fan_in, int64_t fan_out, Rng &rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto &x : p.w) x = static_cast<T>(rng.uniform(-limit, limit));
}

// ---------------------------------------------------------------------------
// Winograd F(4x4, 3x3) transforms (Lavin-Gray). 3x3 stride-1 convolutions run
// in the transform domain with 4x fewer multiplies; the backward passes use
// the exact adjoints, so gradients match the direct algorithm.
// ---------------------------------------------------------------------------
namespace wino {

inline constexpr double kBT[6][6] = {
    {4, 0, -5, 0, 1, 0},  {0, -4, -4, 1, 1, 0}, {0, 4, -4, -1, 1, 0},
    {0, -2, -1, 2, 1, 0}, {0, 2, -1, -2, 1, 0}, {0, 4, 0, -5, 0, 1}};
inline constexpr double kG[6][3] = {{1.0 / 4, 0, 0},
                                    {-1.0 / 6, -1.0 / 6, -1.0 / 6},
                                    {-1.0 / 6, 1.0 / 6, -1.0 / 6},
                                    {1.0 / 24, 1.0 / 12, 1.0 / 6},
                                    {1.0 / 24, -1.0 / 12, 1.0 / 6},
                                    {0, 0, 1}};
inline constexpr double kAT[4][6] = {{1, 1, 1, 1, 1, 0},
                                     {0, 1, -1, 2, -2, 0},
                                     {0, 1, 1, 4, 4, 0},
                                     {0, 1, -1, 8, -8, 1}};

// in[6][6] -> out[6][6] = BT * in * B
template <typename T>
void input_transform(const T in[6][6], T out[6][6]) {
    T tmp[6][6];
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            T acc = 0;
            for (int k = 0; k < 6; ++k) acc += static_cast<T>(kBT[i][k]) * in[k][j];
            tmp[i][j] = acc;
        }
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            T acc = 0;
            for (int k = 0; k < 6; ++k) acc += tmp[i][k] * static_cast<T>(kBT[j][k]);
            out[i][j] = acc;
        }
}

// adjoint of the input transform: out = B * in * BT
template <typename T>
void input_transform_adjoint(const T in[6][6], T out[6][6]) {
    T tmp[6][6];
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            T acc = 0;
            for (int k = 0; k < 6; ++k) acc += static_cast<T>(kBT[k][i]) * in[k][j];
            tmp[i][j] = acc;
        }
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            T acc = 0;
            for (int k = 0; k < 6; ++k) acc += tmp[i][k] * static_cast<T>(kBT[k][j]);
            out[i][j] = acc;
        }
}

// g[3][3] -> u[6][6] = G * g * GT
template <typename T>
void weight_transform(const T *g, T u[6][6]) {
    T tmp[6][3];
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 3; ++j) {
            T acc = 0;
            for (int k = 0; k < 3; ++k) acc += static_cast<T>(kG[i][k]) * g[k * 3 + j];
            tmp[i][j] = acc;
        }
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            T acc = 0;
            for (int k = 0; k < 3; ++k) acc += tmp[i][k] * static_cast<T>(kG[j][k]);
            u[i][j] = acc;
        }
}

// adjoint of the weight transform: g[3][3] += GT * u * G
template <typename T>
void weight_transform_adjoint(const T u[6][6], T *g) {
    T tmp[3][6];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 6; ++j) {
            T acc = 0;
            for (int k = 0; k < 6; ++k) acc += static_cast<T>(kG[k][i]) * u[k][j];
            tmp[i][j] = acc;
        }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            T acc = 0;
            for (int k = 0; k < 6; ++k) acc += tmp[i][k] * static_cast<T>(kG[k][j]);
            g[i * 3 + j] += acc;
        }
}

// m[6][6] -> y[4][4] = AT * m * A
template <typename T>
void output_transform(const T m[6][6], T y[4][4]) {
    T tmp[4][6];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 6; ++j) {
            T acc = 0;
            for (int k = 0; k < 6; ++k) acc += static_cast<T>(kAT[i][k]) * m[k][j];
            tmp[i][j] = acc;
        }
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            T acc = 0;
            for (int k = 0; k < 6; ++k) acc += tmp[i][k] * static_cast<T>(kAT[j][k]);
            y[i][j] = acc;
        }
}

// adjoint of the output transform: dy[4][4] -> m[6][6] = A * dy * AT
template <typename T>
void output_transform_adjoint(const T dy[4][4], T m[6][6]) {
    T tmp[6][4];
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 4; ++j) {
            T acc = 0;
            for (int k = 0; k < 4; ++k) acc += static_cast<T>(kAT[k][i]) * dy[k][j];
            tmp[i][j] = acc;
        }
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            T acc = 0;
            for (int k = 0; k < 4; ++k) acc += tmp[i][k] * static_cast<T>(kAT[k][j]);
            m[i][j] = acc;
        }
}

}  // namespace wino

// ---------------------------------------------------------------------------
// Conv2d: stride 1, zero padding that preserves the spatial size (odd kernel).
// 3x3 kernels run through Winograd F(4x4,3x3); 1x1 is a plain GEMM; other
// sizes use im2col + GEMM, chunked over samples to bound the packing buffer.
// ---------------------------------------------------------------------------
template <typename T>
class Conv2d {
  public:
    Conv2d(std::string name, int in_ch, int out_ch, int kernel)
        : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), pad_((kernel - 1) / 2) {
        if (kernel % 2 == 0) throw ConfigError("conv kernel must be odd to preserve size");
        weight_.name = name + ".weight";
        weight_.alloc({out_ch, in_ch, kernel, kernel});
        weight_.is_weight = true;
        bias_.name = name + ".bias";
        bias_.alloc({out_ch});
    }

    void init(Rng &rng) {
        glorot_uniform(weight_, int64_t(in_ch_) * k_ * k_, int64_t(out_ch_) * k_ * k_, rng);
        std::fill(bias_.w.begin(), bias_.w.end(), T(0));
    }

    Tensor<T> forward(const Tensor<T> &x, bool /*training*/) {
        const int64_t b = x.dim(0);
        h_ = static_cast<int>(x.dim(2));
        w_ = static_cast<int>(x.dim(3));
        input_ = x;  // kept for dW
        Tensor<T> y({b, out_ch_, h_, w_});
        if (k_ == 3)
            forward_wino(x, y);
        else if (k_ == 1)
            forward_1x1(x, y);
        else
            forward_im2col(x, y);
        return y;
    }

    Tensor<T> backward(const Tensor<T> &dy) {
        const int64_t b = dy.dim(0);
        Tensor<T> dx({b, in_ch_, h_, w_});
        if (k_ == 3)
            backward_wino(dy, dx);
        else if (k_ == 1)
            backward_1x1(dy, dx);
        else
            backward_im2col(dy, dx);
        // db
        const int64_t px = int64_t(h_) * w_;
        for (int c = 0; c < out_ch_; ++c) {
            T acc = 0;
            for (int64_t s = 0; s < b; ++s) {
                const T *row = dy.data() + (s * out_ch_ + c) * px;
                for (int64_t i = 0; i < px; ++i) acc += row[i];
            }
            bias_.g[c] += acc;
        }
        return dx;
    }

    std::vector<ParamBlock<T> *> params() { return {&weight_, &bias_}; }
    int kernel() const { return k_; }
    int out_channels() const { return out_ch_; }
    int in_channels() const { return in_ch_; }

  private:
    static int64_t chunk_samples(int rows, int64_t px, int64_t b) {
        const int64_t budget = int64_t(12) * 1024 * 1024;  // elements per pack buffer
        return std::max<int64_t>(1, std::min(b, budget / (rows * px)));
    }

    T *scratch(int64_t n) {
        scratch_.resize(static_cast<size_t>(n));
        return scratch_.data();
    }

    // shared scratch for the Winograd paths (single-threaded training)
    static std::vector<T> &pool(int which) {
        static thread_local std::vector<T> pools[4];
        return pools[which];
    }

    void forward_im2col(const Tensor<T> &x, Tensor<T> &y) {
        const int64_t b = x.dim(0);
        const int rows = in_ch_ * k_ * k_;
        const int64_t px = int64_t(h_) * w_;
        const int64_t chunk = chunk_samples(rows, px, b);
        col_.resize(static_cast<size_t>(rows) * chunk * px);
        std::vector<T> &col = col_;
        for (int64_t s0 = 0; s0 < b; s0 += chunk) {
            const int64_t bs = std::min(chunk, b - s0);
            im2col(x.data() + s0 * in_ch_ * px, bs, col.data());
            // [out_ch x rows] * [rows x bs*px]
            gemm(false, false, out_ch_, static_cast<int>(bs * px), rows, T(1), weight_.w.data(),
                 rows, col.data(), static_cast<int>(bs * px), T(0), scratch(bs * px * out_ch_),
                 static_cast<int>(bs * px));
            // scatter [out_ch][bs*px] -> y[s][out_ch][px] with bias
            const T *src = scratch_.data();
            for (int c = 0; c < out_ch_; ++c) {
                const T bv = bias_.w[c];
                for (int64_t s = 0; s < bs; ++s) {
                    T *dst = y.data() + ((s0 + s) * out_ch_ + c) * px;
                    const T *row = src + c * bs * px + s * px;
                    for (int64_t i = 0; i < px; ++i) dst[i] = row[i] + bv;
                }
            }
        }
    }

    void backward_im2col(const Tensor<T> &dy, Tensor<T> &dx) {
        const int64_t b = dy.dim(0);
        const int rows = in_ch_ * k_ * k_;
        const int64_t px = int64_t(h_) * w_;
        const int64_t chunk = chunk_samples(rows, px, b);
        col_.resize(static_cast<size_t>(rows) * chunk * px);
        dy_pack_.resize(static_cast<size_t>(out_ch_) * chunk * px);
        std::vector<T> &col = col_;
        std::vector<T> &dy_pack = dy_pack_;
        for (int64_t s0 = 0; s0 < b; s0 += chunk) {
            const int64_t bs = std::min(chunk, b - s0);
            // gather dy into [out_ch][bs*px]
            for (int c = 0; c < out_ch_; ++c)
                for (int64_t s = 0; s < bs; ++s)
                    std::memcpy(dy_pack.data() + (c * bs + s) * px,
                                dy.data() + ((s0 + s) * out_ch_ + c) * px, sizeof(T) * px);
            // dW += dy_pack * col^T
            im2col(input_.data() + s0 * in_ch_ * px, bs, col.data());
            gemm(false, true, out_ch_, rows, static_cast<int>(bs * px), T(1), dy_pack.data(),
                 static_cast<int>(bs * px), col.data(), static_cast<int>(bs * px), T(1),
                 weight_.g.data(), rows);
            // d_col = W^T * dy_pack, then col2im
            gemm(true, false, rows, static_cast<int>(bs * px), out_ch_, T(1), weight_.w.data(),
                 rows, dy_pack.data(), static_cast<int>(bs * px), T(0), col.data(),
                 static_cast<int>(bs * px));
            col2im(col.data(), bs, dx.data() + s0 * in_ch_ * px);
        }
    }

    // 1x1: per-sample GEMM on the [C, H*W] view, no packing
    void forward_1x1(const Tensor<T> &x, Tensor<T> &y) {
        const int64_t b = x.dim(0);
        const int64_t px = int64_t(h_) * w_;
        for (int64_t s = 0; s < b; ++s) {
            gemm(false, false, out_ch_, static_cast<int>(px), in_ch_, T(1), weight_.w.data(),
                 in_ch_, x.data() + s * in_ch_ * px, static_cast<int>(px), T(0),
                 y.data() + s * out_ch_ * px, static_cast<int>(px));
            for (int c = 0; c < out_ch_; ++c) {
                T *dst = y.data() + (s * out_ch_ + c) * px;
                const T bv = bias_.w[c];
                for (int64_t i = 0; i < px; ++i) dst[i] += bv;
            }
        }
    }

    void backward_1x1(const Tensor<T> &dy, Tensor<T> &dx) {
        const int64_t b = dy.dim(0);
        const int64_t px = int64_t(h_) * w_;
        for (int64_t s = 0; s < b; ++s) {
            gemm(false, true, out_ch_, in_ch_, static_cast<int>(px), T(1),
                 dy.data() + s * out_ch_ * px, static_cast<int>(px),
                 input_.data() + s * in_ch_ * px, static_cast<int>(px), T(1), weight_.g.data(),
                 in_ch_);
            gemm(true, false, in_ch_, static_cast<int>(px), out_ch_, T(1), weight_.w.data(),
                 in_ch_, dy.data() + s * out_ch_ * px, static_cast<int>(px), T(0),
                 dx.data() + s * in_ch_ * px, static_cast<int>(px));
        }
    }

    // ---- Winograd F(4x4, 3x3) ----

    int64_t wino_tiles_y() const { return (h_ + 3) / 4; }
    int64_t wino_tiles_x() const { return (w_ + 3) / 4; }

    int64_t wino_chunk(int64_t b) const {
        const int64_t tiles = wino_tiles_y() * wino_tiles_x();
        const int64_t budget = int64_t(48) * 1024 * 1024;  // elements per transform buffer
        int64_t per_sample = 36 * std::max(in_ch_, out_ch_) * tiles;
        return std::max<int64_t>(1, std::min(b, budget / per_sample));
    }

    // padded copy of one chunk: [bs][C][Hp][Wp], 1-pixel border plus rounding
    // up to whole 4x4 tiles
    void wino_pad(const T *src, int64_t bs, int ch, std::vector<T> &buf) const {
        const int64_t hp = 4 * wino_tiles_y() + 2, wp = 4 * wino_tiles_x() + 2;
        const int64_t px = int64_t(h_) * w_;
        buf.assign(static_cast<size_t>(bs) * ch * hp * wp, T(0));
        for (int64_t s = 0; s < bs; ++s)
            for (int c = 0; c < ch; ++c) {
                const T *in = src + (s * ch + c) * px;
                T *out = buf.data() + (s * ch + c) * hp * wp;
                for (int y0 = 0; y0 < h_; ++y0)
                    std::memcpy(out + (y0 + 1) * wp + 1, in + int64_t(y0) * w_, sizeof(T) * w_);
            }
    }

    // D[(ij)][c][t] for one chunk from the padded buffer
    void wino_input_transform(const std::vector<T> &padded, int64_t bs, int ch,
                              std::vector<T> &d_buf) const {
        const int64_t ty = wino_tiles_y(), tx = wino_tiles_x();
        const int64_t tiles = ty * tx, tc = bs * tiles;
        const int64_t hp = 4 * ty + 2, wp = 4 * tx + 2;
        d_buf.resize(static_cast<size_t>(36) * ch * tc);
        T in66[6][6], out66[6][6];
        for (int c = 0; c < ch; ++c) {
            for (int64_t s = 0; s < bs; ++s) {
                const T *img = padded.data() + (s * ch + c) * hp * wp;
                for (int64_t t = 0; t < tiles; ++t) {
                    const int64_t oy = (t / tx) * 4, ox = (t % tx) * 4;
                    for (int r = 0; r < 6; ++r)
                        for (int cc = 0; cc < 6; ++cc) in66[r][cc] = img[(oy + r) * wp + ox + cc];
                    wino::input_transform(in66, out66);
                    const int64_t col = s * tiles + t;
                    for (int r = 0; r < 6; ++r)
                        for (int cc = 0; cc < 6; ++cc)
                            d_buf[(size_t(r * 6 + cc) * ch + c) * tc + col] = out66[r][cc];
                }
            }
        }
    }

    void wino_weights(std::vector<T> &u_buf) const {
        u_buf.resize(static_cast<size_t>(36) * out_ch_ * in_ch_);
        T u66[6][6];
        for (int co = 0; co < out_ch_; ++co)
            for (int ci = 0; ci < in_ch_; ++ci) {
                wino::weight_transform(weight_.w.data() + (int64_t(co) * in_ch_ + ci) * 9, u66);
                for (int p = 0; p < 36; ++p)
                    u_buf[(size_t(p) * out_ch_ + co) * in_ch_ + ci] = u66[p / 6][p % 6];
            }
    }

    void forward_wino(const Tensor<T> &x, Tensor<T> &y) {
        const int64_t b = x.dim(0);
        const int64_t ty = wino_tiles_y(), tx = wino_tiles_x(), tiles = ty * tx;
        const int64_t px = int64_t(h_) * w_;
        std::vector<T> &u_buf = pool(0), &d_buf = pool(1), &m_buf = pool(2), &padded = pool(3);
        wino_weights(u_buf);
        const int64_t chunk = wino_chunk(b);
        for (int64_t s0 = 0; s0 < b; s0 += chunk) {
            const int64_t bs = std::min(chunk, b - s0);
            const int64_t tc = bs * tiles;
            wino_pad(x.data() + s0 * in_ch_ * px, bs, in_ch_, padded);
            wino_input_transform(padded, bs, in_ch_, d_buf);
            m_buf.resize(static_cast<size_t>(36) * out_ch_ * tc);
            for (int p = 0; p < 36; ++p)
                gemm(false, false, out_ch_, static_cast<int>(tc), in_ch_, T(1),
                     u_buf.data() + size_t(p) * out_ch_ * in_ch_, in_ch_,
                     d_buf.data() + size_t(p) * in_ch_ * tc, static_cast<int>(tc), T(0),
                     m_buf.data() + size_t(p) * out_ch_ * tc, static_cast<int>(tc));
            // inverse transform + bias
            T m66[6][6], y44[4][4];
            for (int co = 0; co < out_ch_; ++co) {
                const T bv = bias_.w[co];
                for (int64_t s = 0; s < bs; ++s) {
                    T *out = y.data() + ((s0 + s) * out_ch_ + co) * px;
                    for (int64_t t = 0; t < tiles; ++t) {
                        const int64_t col = s * tiles + t;
                        for (int p = 0; p < 36; ++p)
                            m66[p / 6][p % 6] = m_buf[(size_t(p) * out_ch_ + co) * tc + col];
                        wino::output_transform(m66, y44);
                        const int64_t oy = (t / tx) * 4, ox = (t % tx) * 4;
                        for (int r = 0; r < 4 && oy + r < h_; ++r)
                            for (int cc = 0; cc < 4 && ox + cc < w_; ++cc)
                                out[(oy + r) * w_ + ox + cc] = y44[r][cc] + bv;
                    }
                }
            }
        }
    }

    void backward_wino(const Tensor<T> &dy, Tensor<T> &dx) {
        const int64_t b = dy.dim(0);
        const int64_t ty = wino_tiles_y(), tx = wino_tiles_x(), tiles = ty * tx;
        const int64_t px = int64_t(h_) * w_;
        const int64_t hp = 4 * ty + 2, wp = 4 * tx + 2;
        std::vector<T> &u_buf = pool(0), &d_buf = pool(1), &m_buf = pool(2), &padded = pool(3);
        wino_weights(u_buf);
        std::vector<T> du(static_cast<size_t>(36) * out_ch_ * in_ch_, T(0));
        const int64_t chunk = wino_chunk(b);
        for (int64_t s0 = 0; s0 < b; s0 += chunk) {
            const int64_t bs = std::min(chunk, b - s0);
            const int64_t tc = bs * tiles;
            // adjoint output transform of dy -> m_buf[(ij)][co][t]
            m_buf.resize(static_cast<size_t>(36) * out_ch_ * tc);
            T dy44[4][4], m66[6][6];
            for (int co = 0; co < out_ch_; ++co) {
                for (int64_t s = 0; s < bs; ++s) {
                    const T *g = dy.data() + ((s0 + s) * out_ch_ + co) * px;
                    for (int64_t t = 0; t < tiles; ++t) {
                        const int64_t oy = (t / tx) * 4, ox = (t % tx) * 4;
                        for (int r = 0; r < 4; ++r)
                            for (int cc = 0; cc < 4; ++cc)
                                dy44[r][cc] = (oy + r < h_ && ox + cc < w_)
                                                  ? g[(oy + r) * w_ + ox + cc]
                                                  : T(0);
                        wino::output_transform_adjoint(dy44, m66);
                        const int64_t col = s * tiles + t;
                        for (int p = 0; p < 36; ++p)
                            m_buf[(size_t(p) * out_ch_ + co) * tc + col] = m66[p / 6][p % 6];
                    }
                }
            }
            // dU[(ij)] += dM[(ij)] * D[(ij)]^T
            wino_pad(input_.data() + s0 * in_ch_ * px, bs, in_ch_, padded);
            wino_input_transform(padded, bs, in_ch_, d_buf);
            for (int p = 0; p < 36; ++p)
                gemm(false, true, out_ch_, in_ch_, static_cast<int>(tc), T(1),
                     m_buf.data() + size_t(p) * out_ch_ * tc, static_cast<int>(tc),
                     d_buf.data() + size_t(p) * in_ch_ * tc, static_cast<int>(tc), T(1),
                     du.data() + size_t(p) * out_ch_ * in_ch_, in_ch_);
            // dD[(ij)] = U[(ij)]^T * dM[(ij)] (overwrites the D buffer)
            for (int p = 0; p < 36; ++p)
                gemm(true, false, in_ch_, static_cast<int>(tc), out_ch_, T(1),
                     u_buf.data() + size_t(p) * out_ch_ * in_ch_, in_ch_,
                     m_buf.data() + size_t(p) * out_ch_ * tc, static_cast<int>(tc), T(0),
                     d_buf.data() + size_t(p) * in_ch_ * tc, static_cast<int>(tc));
            // adjoint input transform, overlap-added in the padded frame
            padded.assign(static_cast<size_t>(bs) * in_ch_ * hp * wp, T(0));
            T dd66[6][6], din66[6][6];
            for (int ci = 0; ci < in_ch_; ++ci) {
                for (int64_t s = 0; s < bs; ++s) {
                    T *acc = padded.data() + (s * in_ch_ + ci) * hp * wp;
                    for (int64_t t = 0; t < tiles; ++t) {
                        const int64_t col = s * tiles + t;
                        for (int p = 0; p < 36; ++p)
                            dd66[p / 6][p % 6] = d_buf[(size_t(p) * in_ch_ + ci) * tc + col];
                        wino::input_transform_adjoint(dd66, din66);
                        const int64_t oy = (t / tx) * 4, ox = (t % tx) * 4;
                        for (int r = 0; r < 6; ++r)
                            for (int cc = 0; cc < 6; ++cc)
                                acc[(oy + r) * wp + ox + cc] += din66[r][cc];
                    }
                }
            }
            for (int64_t s = 0; s < bs; ++s)
                for (int ci = 0; ci < in_ch_; ++ci) {
                    const T *src = padded.data() + (s * in_ch_ + ci) * hp * wp;
                    T *out = dx.data() + ((s0 + s) * in_ch_ + ci) * px;
                    for (int y0 = 0; y0 < h_; ++y0)
                        for (int x0 = 0; x0 < w_; ++x0)
                            out[int64_t(y0) * w_ + x0] = src[(y0 + 1) * wp + x0 + 1];
                }
        }
        // accumulate dW from the transform domain
        T u66[6][6];
        for (int co = 0; co < out_ch_; ++co)
            for (int ci = 0; ci < in_ch_; ++ci) {
                for (int p = 0; p < 36; ++p)
                    u66[p / 6][p % 6] = du[(size_t(p) * out_ch_ + co) * in_ch_ + ci];
                wino::weight_transform_adjoint(u66,
                                               weight_.g.data() + (int64_t(co) * in_ch_ + ci) * 9);
            }
    }

    // col[r][s*px + y*w + x] = input[s][ci][y+ky-pad][x+kx-pad], zero outside.
    void im2col(const T *in, int64_t bs, T *col) const {
        const int64_t px = int64_t(h_) * w_;
        for (int ci = 0; ci < in_ch_; ++ci) {
            for (int ky = 0; ky < k_; ++ky) {
                for (int kx = 0; kx < k_; ++kx) {
                    const int dy = ky - pad_, dx = kx - pad_;
                    T *dst_row = col + (int64_t(ci) * k_ * k_ + ky * k_ + kx) * bs * px;
                    for (int64_t s = 0; s < bs; ++s) {
                        const T *src_ch = in + (s * in_ch_ + ci) * px;
                        T *dst_s = dst_row + s * px;
                        for (int y = 0; y < h_; ++y) {
                            T *dst = dst_s + int64_t(y) * w_;
                            const int sy = y + dy;
                            if (sy < 0 || sy >= h_) {
                                std::memset(dst, 0, sizeof(T) * w_);
                                continue;
                            }
                            const T *src = src_ch + int64_t(sy) * w_;
                            const int lo = std::max(0, -dx), hi = std::min(w_, w_ - dx);
                            if (lo > 0) std::memset(dst, 0, sizeof(T) * lo);
                            if (hi > lo) std::memcpy(dst + lo, src + lo + dx, sizeof(T) * (hi - lo));
                            if (hi < w_) std::memset(dst + hi, 0, sizeof(T) * (w_ - hi));
                        }
                    }
                }
            }
        }
    }

    void col2im(const T *col, int64_t bs, T *out) const {
        const int64_t px = int64_t(h_) * w_;
        std::memset(out, 0, sizeof(T) * bs * in_ch_ * px);
        for (int ci = 0; ci < in_ch_; ++ci) {
            for (int ky = 0; ky < k_; ++ky) {
                for (int kx = 0; kx < k_; ++kx) {
                    const int dy = ky - pad_, dx = kx - pad_;
                    const T *src_row = col + (int64_t(ci) * k_ * k_ + ky * k_ + kx) * bs * px;
                    for (int64_t s = 0; s < bs; ++s) {
                        T *dst_ch = out + (s * in_ch_ + ci) * px;
                        const T *src_s = src_row + s * px;
                        for (int y = 0; y < h_; ++y) {
                            const int sy = y + dy;
                            if (sy < 0 || sy >= h_) continue;
                            const T *src = src_s + int64_t(y) * w_;
                            T *dst = dst_ch + int64_t(sy) * w_;
                            const int lo = std::max(0, -dx), hi = std::min(w_, w_ - dx);
                            for (int x = lo; x < hi; ++x) dst[x + dx] += src[x];
                        }
                    }
                }
            }
        }
    }

    int in_ch_, out_ch_, k_, pad_;
    int h_ = 0, w_ = 0;
    ParamBlock<T> weight_;  // [out, in, k, k] row-major = [out][in*k*k]
    ParamBlock<T> bias_;
    Tensor<T> input_;
    std::vector<T> scratch_, col_, dy_pack_;
};

// ---------------------------------------------------------------------------
// Dense: y = x W + b with W stored [in, out].
// ---------------------------------------------------------------------------
template <typename T>
class Dense {
  public:
    Dense(std::string name, int64_t in, int64_t out) : in_(in), out_(out) {
        weight_.name = name + ".weight";
        weight_.alloc({in, out});
        weight_.is_weight = true;
        bias_.name = name + ".bias";
        bias_.alloc({out});
    }

    void init(Rng &rng) {
        glorot_uniform(weight_, in_, out_, rng);
        std::fill(bias_.w.begin(), bias_.w.end(), T(0));
    }

    Tensor<T> forward(const Tensor<T> &x, bool /*training*/) {
        const int64_t b = x.dim(0);
        input_ = x;
        Tensor<T> y({b, out_});
        gemm(false, false, static_cast<int>(b), static_cast<int>(out_), static_cast<int>(in_),
             T(1), x.data(), static_cast<int>(in_), weight_.w.data(), static_cast<int>(out_), T(0),
             y.data(), static_cast<int>(out_));
        for (int64_t s = 0; s < b; ++s)
            for (int64_t j = 0; j < out_; ++j) y.v[s * out_ + j] += bias_.w[j];
        return y;
    }

    Tensor<T> backward(const Tensor<T> &dy) {
        const int64_t b = dy.dim(0);
        gemm(true, false, static_cast<int>(in_), static_cast<int>(out_), static_cast<int>(b), T(1),
             input_.data(), static_cast<int>(in_), dy.data(), static_cast<int>(out_), T(1),
             weight_.g.data(), static_cast<int>(out_));
        for (int64_t s = 0; s < b; ++s)
            for (int64_t j = 0; j < out_; ++j) bias_.g[j] += dy.v[s * out_ + j];
        Tensor<T> dx({b, in_});
        gemm(false, true, static_cast<int>(b), static_cast<int>(in_), static_cast<int>(out_), T(1),
             dy.data(), static_cast<int>(out_), weight_.w.data(), static_cast<int>(out_), T(0),
             dx.data(), static_cast<int>(in_));
        return dx;
    }

    std::vector<ParamBlock<T> *> params() { return {&weight_, &bias_}; }

  private:
    int64_t in_, out_;
    ParamBlock<T> weight_, bias_;
    Tensor<T> input_;
};

// ---------------------------------------------------------------------------
// BatchNorm over [B, C, inner]: statistics per channel across batch and inner
// dims. Batch statistics during training, frozen running statistics at
// inference (Keras-style momentum update).
// ---------------------------------------------------------------------------
template <typename T>
class BatchNorm {
  public:
    BatchNorm(std::string name, int channels, double eps = 1e-3, double momentum = 0.9)
        : c_(channels), eps_(eps), momentum_(momentum) {
        gamma_.name = name + ".gamma";
        gamma_.alloc({channels});
        std::fill(gamma_.w.begin(), gamma_.w.end(), T(1));
        beta_.name = name + ".beta";
        beta_.alloc({channels});
        run_mean_.name = name + ".running_mean";
        run_mean_.alloc({channels});
        run_mean_.trainable = false;
        run_var_.name = name + ".running_var";
        run_var_.alloc({channels});
        std::fill(run_var_.w.begin(), run_var_.w.end(), T(1));
        run_var_.trainable = false;
    }

    Tensor<T> forward(const Tensor<T> &x, bool training) {
        const int64_t b = x.dim(0);
        inner_ = x.size() / (b * c_);
        const int64_t n = b * inner_;
        Tensor<T> y;
        y.shape = x.shape;
        y.v.resize(x.v.size());
        if (training) {
            xhat_.shape = x.shape;
            xhat_.v.resize(x.v.size());
            invstd_.assign(c_, T(0));
            for (int c = 0; c < c_; ++c) {
                double mean = 0, var = 0;
                for (int64_t s = 0; s < b; ++s) {
                    const T *p = x.data() + (s * c_ + c) * inner_;
                    for (int64_t i = 0; i < inner_; ++i) mean += p[i];
                }
                mean /= n;
                for (int64_t s = 0; s < b; ++s) {
                    const T *p = x.data() + (s * c_ + c) * inner_;
                    for (int64_t i = 0; i < inner_; ++i) {
                        double d = p[i] - mean;
                        var += d * d;
                    }
                }
                var /= n;
                const T istd = static_cast<T>(1.0 / std::sqrt(var + eps_));
                invstd_[c] = istd;
                const T m = static_cast<T>(mean);
                for (int64_t s = 0; s < b; ++s) {
                    const T *p = x.data() + (s * c_ + c) * inner_;
                    T *xh = xhat_.data() + (s * c_ + c) * inner_;
                    T *py = y.data() + (s * c_ + c) * inner_;
                    for (int64_t i = 0; i < inner_; ++i) {
                        xh[i] = (p[i] - m) * istd;
                        py[i] = gamma_.w[c] * xh[i] + beta_.w[c];
                    }
                }
                run_mean_.w[c] = static_cast<T>(momentum_ * run_mean_.w[c] + (1 - momentum_) * mean);
                run_var_.w[c] = static_cast<T>(momentum_ * run_var_.w[c] + (1 - momentum_) * var);
            }
        } else {
            for (int c = 0; c < c_; ++c) {
                const T istd = static_cast<T>(1.0 / std::sqrt(double(run_var_.w[c]) + eps_));
                const T m = run_mean_.w[c];
                for (int64_t s = 0; s < b; ++s) {
                    const T *p = x.data() + (s * c_ + c) * inner_;
                    T *py = y.data() + (s * c_ + c) * inner_;
                    for (int64_t i = 0; i < inner_; ++i)
                        py[i] = gamma_.w[c] * (p[i] - m) * istd + beta_.w[c];
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T> &dy) {
        const int64_t b = dy.dim(0);
        const int64_t n = b * inner_;
        Tensor<T> dx;
        dx.shape = dy.shape;
        dx.v.resize(dy.v.size());
        for (int c = 0; c < c_; ++c) {
            double sum_dy = 0, sum_dy_xhat = 0;
            for (int64_t s = 0; s < b; ++s) {
                const T *pdy = dy.data() + (s * c_ + c) * inner_;
                const T *xh = xhat_.data() + (s * c_ + c) * inner_;
                for (int64_t i = 0; i < inner_; ++i) {
                    sum_dy += pdy[i];
                    sum_dy_xhat += double(pdy[i]) * xh[i];
                }
            }
            gamma_.g[c] += static_cast<T>(sum_dy_xhat);
            beta_.g[c] += static_cast<T>(sum_dy);
            const double k = double(gamma_.w[c]) * invstd_[c] / n;
            for (int64_t s = 0; s < b; ++s) {
                const T *pdy = dy.data() + (s * c_ + c) * inner_;
                const T *xh = xhat_.data() + (s * c_ + c) * inner_;
                T *pdx = dx.data() + (s * c_ + c) * inner_;
                for (int64_t i = 0; i < inner_; ++i)
                    pdx[i] = static_cast<T>(k * (n * double(pdy[i]) - sum_dy - double(xh[i]) * sum_dy_xhat));
            }
        }
        return dx;
    }

    std::vector<ParamBlock<T> *> params() { return {&gamma_, &beta_, &run_mean_, &run_var_}; }

  private:
    int c_;
    double eps_, momentum_;
    int64_t inner_ = 1;
    ParamBlock<T> gamma_, beta_, run_mean_, run_var_;
    Tensor<T> xhat_;
    std::vector<T> invstd_;
};

// ---------------------------------------------------------------------------
// Elementwise activation; backward uses the cached output.
// ---------------------------------------------------------------------------
template <typename T>
class Activation {
  public:
    explicit Activation(Act kind) : kind_(kind) {}

    Tensor<T> forward(const Tensor<T> &x, bool /*training*/) {
        out_ = x;
        if (kind_ == Act::kRelu) {
            for (auto &v : out_.v) v = v > T(0) ? v : T(0);
        } else if (kind_ == Act::kTanh) {
            for (auto &v : out_.v) v = std::tanh(v);
        }
        return out_;
    }

    Tensor<T> backward(const Tensor<T> &dy) {
        Tensor<T> dx = dy;
        if (kind_ == Act::kRelu) {
            for (size_t i = 0; i < dx.v.size(); ++i)
                if (out_.v[i] <= T(0)) dx.v[i] = T(0);
        } else if (kind_ == Act::kTanh) {
            for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= (T(1) - out_.v[i] * out_.v[i]);
        }
        return dx;
    }

  private:
    Act kind_;
    Tensor<T> out_;
};

/// (1/batch) * sum of squared differences; gradient w.r.t. pred.
template <typename T>
double mse_loss(const Tensor<T> &pred, const Tensor<T> &target, Tensor<T> *dpred = nullptr) {
    if (pred.v.size() != target.v.size()) throw ConfigError("mse_loss: shape mismatch");
    const int64_t b = pred.dim(0);
    double acc = 0.0;
    if (dpred) {
        dpred->shape = pred.shape;
        dpred->v.resize(pred.v.size());
    }
    for (size_t i = 0; i < pred.v.size(); ++i) {
        double d = double(pred.v[i]) - double(target.v[i]);
        acc += d * d;
        if (dpred) dpred->v[i] = static_cast<T>(2.0 * d / b);
    }
    return acc / b;
}

}  // namespace cef::nn

#endif  // CEF_NN_HPP
