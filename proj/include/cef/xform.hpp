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

#ifndef CEF_XFORM_HPP
#define CEF_XFORM_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include "cef/common.hpp"
#include "cef/tensor.hpp"

namespace cef::xform {

using Eigen::MatrixXcd;

/// Unitary angle/delay analysis matrix of size n. Sign convention matches the
/// generator's phase ramps (exp(-i2*pi*k*d/n) across subcarriers), so a path at
/// integer delay tap d concentrates exactly in row d.
inline const MatrixXcd &unitary_dft(int n) {
    static std::map<int, MatrixXcd> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    MatrixXcd f(n, n);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) f(j, k) = std::polar(s, 2.0 * M_PI * j * k / n);
    return cache.emplace(n, std::move(f)).first->second;
}

/// Frequency-spatial -> angle-delay (delay along rows). Unitary, so exactly
/// invertible and Frobenius-norm preserving.
inline MatrixXcd to_angle_delay(const MatrixXcd &h_fs) {
    const MatrixXcd &fd = unitary_dft(static_cast<int>(h_fs.rows()));
    const MatrixXcd &fa = unitary_dft(static_cast<int>(h_fs.cols()));
    return fd * h_fs * fa;
}

inline MatrixXcd from_angle_delay(const MatrixXcd &h_da) {
    const MatrixXcd &fd = unitary_dft(static_cast<int>(h_da.rows()));
    const MatrixXcd &fa = unitary_dft(static_cast<int>(h_da.cols()));
    return fd.adjoint() * h_da * fa.adjoint();
}

/// Fraction of total energy within the first `taps` delay rows.
inline double delay_energy_fraction(const MatrixXcd &h_fs, int taps) {
    MatrixXcd da = to_angle_delay(h_fs);
    double total = da.squaredNorm();
    if (total == 0) return 1.0;
    return da.topRows(taps).squaredNorm() / total;
}

/// Affine map used to bring network inputs/targets to [0,1]:
/// normalized = (x - offset) / scale.
struct NormMeta {
    double offset = 0.0;
    double scale = 1.0;

    double normalize(double x) const { return (x - offset) / scale; }
    double denormalize(double y) const { return y * scale + offset; }
};

/// Truncated real-valued angle-delay channel: planes [2][K][N_t] row-major
/// (real plane then imaginary plane).
struct AngleDelayChannel {
    int K = 0;
    int Nt = 0;
    std::vector<double> planes;
    NormMeta norm;  // identity until a dataset-level map is attached

    double &at(int plane, int k, int n) { return planes[(plane * K + k) * Nt + n]; }
    double at(int plane, int k, int n) const { return planes[(plane * K + k) * Nt + n]; }

    MatrixXcd to_complex() const {
        MatrixXcd h(K, Nt);
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < Nt; ++n) h(k, n) = {at(0, k, n), at(1, k, n)};
        return h;
    }
};

/// Keep the first K delay rows and split into real planes.
inline AngleDelayChannel truncate(const MatrixXcd &h_da, int K) {
    if (K < 1 || K > h_da.rows())
        throw ConfigError("truncation length K must be in [1, " + std::to_string(h_da.rows()) + "]");
    AngleDelayChannel out;
    out.K = K;
    out.Nt = static_cast<int>(h_da.cols());
    out.planes.resize(static_cast<size_t>(2) * K * out.Nt);
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < out.Nt; ++n) {
            out.at(0, k, n) = h_da(k, n).real();
            out.at(1, k, n) = h_da(k, n).imag();
        }
    }
    return out;
}

struct NMSEReport {
    double nmse_linear = 0.0;
    double nmse_db = 0.0;
    int64_t n_samples = 0;
    int64_t n_excluded = 0;  // zero-norm truth samples
};

inline double to_db(double linear) {
    return linear > 0 ? 10.0 * std::log10(linear) : -std::numeric_limits<double>::infinity();
}

/// Sample mean of |H - Hhat|^2 / |H|^2 over span pairs of equal length.
/// Inputs must be on the physical (denormalized) scale.
template <typename T>
NMSEReport nmse_flat(const T *truth, const T *est, int64_t per_sample, int64_t n_samples) {
    NMSEReport r;
    double acc = 0.0;
    for (int64_t s = 0; s < n_samples; ++s) {
        const T *t = truth + s * per_sample;
        const T *e = est + s * per_sample;
        double num = 0.0, den = 0.0;
        for (int64_t i = 0; i < per_sample; ++i) {
            double d = static_cast<double>(t[i]) - static_cast<double>(e[i]);
            num += d * d;
            den += static_cast<double>(t[i]) * static_cast<double>(t[i]);
        }
        if (den == 0.0) {
            ++r.n_excluded;
            continue;
        }
        acc += num / den;
        ++r.n_samples;
    }
    r.nmse_linear = r.n_samples > 0 ? acc / r.n_samples : 0.0;
    r.nmse_db = to_db(r.nmse_linear);
    return r;
}

inline NMSEReport nmse(const std::vector<AngleDelayChannel> &truth,
                       const std::vector<AngleDelayChannel> &est) {
    if (truth.size() != est.size()) throw ConfigError("nmse: sample count mismatch");
    NMSEReport r;
    double acc = 0.0;
    for (size_t s = 0; s < truth.size(); ++s) {
        if (truth[s].planes.size() != est[s].planes.size())
            throw ConfigError("nmse: shape mismatch at sample " + std::to_string(s));
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i < truth[s].planes.size(); ++i) {
            double d = truth[s].planes[i] - est[s].planes[i];
            num += d * d;
            den += truth[s].planes[i] * truth[s].planes[i];
        }
        if (den == 0.0) {
            ++r.n_excluded;
            continue;
        }
        acc += num / den;
        ++r.n_samples;
    }
    r.nmse_linear = r.n_samples > 0 ? acc / r.n_samples : 0.0;
    r.nmse_db = to_db(r.nmse_linear);
    return r;
}

/// CR = 2*K*N_t / M.
inline double compression_ratio(int K, int Nt, int M) {
    if (M < 1) throw ConfigError("codeword length M must be >= 1");
    return 2.0 * K * Nt / static_cast<double>(M);
}

}  // namespace cef::xform

#endif  // CEF_XFORM_HPP
