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

#ifndef CEF_ESTIMATE_HPP
#define CEF_ESTIMATE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "cef/chanmodel.hpp"
#include "cef/common.hpp"

namespace cef::estimate {

using Eigen::MatrixXcd;
using chanmodel::PilotGrid;
using chanmodel::ReceivedPilots;

enum class InterpMethod { kDftInterp, kLinearInterp };

inline std::string to_string(InterpMethod m) {
    return m == InterpMethod::kDftInterp ? "dft_interp" : "linear_interp";
}

inline InterpMethod interp_from_string(const std::string &s) {
    if (s == "dft_interp") return InterpMethod::kDftInterp;
    if (s == "linear_interp") return InterpMethod::kLinearInterp;
    throw ConfigError("unknown interpolation method '" + s + "'");
}

/// Per-antenna LS estimate at pilot tones plus its full-grid interpolation.
struct LsEstimate {
    MatrixXcd at_pilots;     // P x N_t
    MatrixXcd interpolated;  // K~ x N_t (empty until interpolate())
    InterpMethod method = InterpMethod::kDftInterp;
    std::vector<int> positions;
    int num_subcarriers = 0;
};

/// h_hat = X^{-1} y per pilot tone and antenna.
inline LsEstimate ls_estimate(const ReceivedPilots &rx, const PilotGrid &grid) {
    if (rx.y.rows() != grid.num_pilots || rx.y.cols() != grid.num_antennas)
        throw ConfigError("received pilots do not match the pilot grid");
    LsEstimate est;
    est.positions = grid.positions;
    est.num_subcarriers = grid.num_subcarriers;
    est.at_pilots.resize(grid.num_pilots, grid.num_antennas);
    for (int p = 0; p < grid.num_pilots; ++p) {
        for (int a = 0; a < grid.num_antennas; ++a) {
            std::complex<double> x = grid.symbols(p, a);
            if (x == std::complex<double>(0.0, 0.0))
                throw ConfigError("zero pilot symbol at tone " + std::to_string(p));
            est.at_pilots(p, a) = rx.y(p, a) / x;
        }
    }
    return est;
}

/// Expand a P-tone estimate to the full K~ grid.
///
/// dft_interp: inverse P-point DFT of the pilot-domain samples to P delay
/// taps, then re-evaluation of those taps on the dense subcarrier grid. Exact
/// whenever the channel's delay support fits in P taps; always reproduces the
/// pilot-tone values at the pilot positions.
///
/// linear_interp: piecewise-linear on real/imag with constant extension past
/// the last pilot.
inline MatrixXcd interpolate(const LsEstimate &est, int num_subcarriers, InterpMethod method) {
    const int P = static_cast<int>(est.at_pilots.rows());
    const int Nt = static_cast<int>(est.at_pilots.cols());
    MatrixXcd out(num_subcarriers, Nt);

    if (method == InterpMethod::kDftInterp) {
        // taps = (1/P) * conj(W_P) applied to pilot samples; W_P[p][d] = e^{-i2pi pd/P}
        MatrixXcd idft(P, P);
        for (int d = 0; d < P; ++d)
            for (int p = 0; p < P; ++p)
                idft(d, p) = std::polar(1.0 / P, 2.0 * M_PI * p * d / P);
        MatrixXcd taps = idft * est.at_pilots;  // P x N_t delay taps

        MatrixXcd synth(num_subcarriers, P);
        for (int k = 0; k < num_subcarriers; ++k)
            for (int d = 0; d < P; ++d)
                synth(k, d) = std::polar(1.0, -2.0 * M_PI * k * d / num_subcarriers);
        out = synth * taps;
    } else if (method == InterpMethod::kLinearInterp) {
        const auto &pos = est.positions;
        for (int a = 0; a < Nt; ++a) {
            for (int k = 0; k < num_subcarriers; ++k) {
                if (k <= pos.front()) {
                    out(k, a) = est.at_pilots(0, a);
                } else if (k >= pos.back()) {
                    out(k, a) = est.at_pilots(P - 1, a);
                } else {
                    int j = 0;
                    while (pos[j + 1] < k) ++j;
                    double t = double(k - pos[j]) / double(pos[j + 1] - pos[j]);
                    out(k, a) = (1.0 - t) * est.at_pilots(j, a) + t * est.at_pilots(j + 1, a);
                }
            }
        }
    } else {
        throw ConfigError("unsupported interpolation method");
    }
    return out;
}

/// Zero-filled de-weighted pilot grid: the known BPSK symbols are removed at
/// the pilot tones (a sign flip), all other tones are zero. This is the raw
/// input for direct pilot compression.
inline MatrixXcd zero_filled_pilot_grid(const ReceivedPilots &rx, const PilotGrid &grid) {
    MatrixXcd z = MatrixXcd::Zero(grid.num_subcarriers, grid.num_antennas);
    for (int p = 0; p < grid.num_pilots; ++p)
        for (int a = 0; a < grid.num_antennas; ++a)
            z(grid.positions[p], a) = rx.y(p, a) / grid.symbols(p, a);
    return z;
}

/// Wiener smoother configuration. R is the per-antenna frequency-domain
/// correlation matrix, estimated on the training split only.
struct LmmseConfig {
    MatrixXcd covariance;  // K~ x K~, Hermitian PSD
    double noise_var = 0.0;
    double regularization = 0.0;  // diagonal load added to the pilot block
};

/// Sample frequency-domain covariance pooled over antennas: R = E[h h^H].
inline MatrixXcd fit_frequency_covariance(const std::vector<MatrixXcd> &channels) {
    if (channels.empty()) throw ConfigError("covariance fit needs at least one channel");
    const int K = static_cast<int>(channels[0].rows());
    MatrixXcd r = MatrixXcd::Zero(K, K);
    int64_t n = 0;
    for (const auto &h : channels) {
        r.noalias() += h * h.adjoint();
        n += h.cols();
    }
    return r / static_cast<double>(n);
}

inline LmmseConfig make_lmmse_config(MatrixXcd covariance, double noise_var) {
    LmmseConfig cfg;
    cfg.regularization = 1e-6 * covariance.real().trace() / static_cast<double>(covariance.rows());
    cfg.covariance = std::move(covariance);
    cfg.noise_var = noise_var;
    return cfg;
}

/// H_hat = R_fp (R_pp + sigma^2 I + reg I)^{-1} h_p per antenna.
inline MatrixXcd lmmse_estimate(const ReceivedPilots &rx, const PilotGrid &grid,
                                const LmmseConfig &cfg) {
    if (cfg.regularization <= 0) throw ConfigError("LMMSE regularization must be positive");
    const int K = static_cast<int>(cfg.covariance.rows());
    const int P = grid.num_pilots;
    if (K != grid.num_subcarriers) throw ConfigError("LMMSE covariance size mismatch");

    LsEstimate ls = ls_estimate(rx, grid);

    MatrixXcd r_fp(K, P), r_pp(P, P);
    for (int j = 0; j < P; ++j) {
        r_fp.col(j) = cfg.covariance.col(grid.positions[j]);
        for (int i = 0; i < P; ++i) r_pp(i, j) = cfg.covariance(grid.positions[i], grid.positions[j]);
    }
    MatrixXcd a = r_pp;
    a.diagonal().array() += cfg.noise_var + cfg.regularization;

    Eigen::LDLT<MatrixXcd> solver(a);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("LMMSE pilot-block system is singular beyond regularization");
    return r_fp * solver.solve(ls.at_pilots);
}

}  // namespace cef::estimate

#endif  // CEF_ESTIMATE_HPP
