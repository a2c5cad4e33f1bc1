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

#ifndef CEF_CSBASELINE_HPP
#define CEF_CSBASELINE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "cef/common.hpp"
#include "cef/rng.hpp"

namespace cef::csbaseline {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// sign(v) * max(|v| - t, 0), elementwise.
inline VectorXd soft_threshold(const VectorXd &v, double t) {
    if (t < 0) throw ConfigError("soft threshold must be >= 0");
    VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double a = std::abs(v[i]) - t;
        out[i] = a > 0 ? (v[i] > 0 ? a : -a) : 0.0;
    }
    return out;
}

/// Fixed Gaussian sensing matrix with unit expected column norm.
inline MatrixXd make_sensing_matrix(int m, int n, uint64_t seed) {
    Rng rng = Rng::for_sample(seed, 0, 0x53454E53ull);  // "SENS"
    MatrixXd a(m, n);
    const double sigma = 1.0 / std::sqrt(static_cast<double>(m));
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) a(i, j) = sigma * rng.normal();
    return a;
}

/// ||A||_op^2 via power iteration on A^T A.
inline double operator_norm_sq(const MatrixXd &a, int iters = 60, uint64_t seed = 7) {
    Rng rng(Rng::scramble(seed));
    VectorXd v(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        VectorXd w = a.transpose() * (a * v);
        lambda = w.norm();
        if (lambda == 0) return 0.0;
        v = w / lambda;
    }
    return lambda;
}

struct LassoConfig {
    MatrixXd A;          // M x N
    double lambda = 1e-3;
    int max_iters = 300;
    double tol = 1e-5;   // relative iterate change
    double lipschitz = 0.0;  // ||A||_op^2; computed on demand when 0
    bool record_trace = false;

    void ensure_lipschitz() {
        if (lipschitz <= 0) lipschitz = operator_norm_sq(A);
        if (lambda < 0) throw ConfigError("lambda must be >= 0");
    }
};

struct LassoResult {
    VectorXd x;
    bool converged = false;
    int iters = 0;
    double objective = 0.0;
    std::vector<double> trace;  // accepted objective per iteration, if recorded
};

inline double lasso_objective(const MatrixXd &a, const VectorXd &s, const VectorXd &x,
                              double lambda) {
    double fit = (s - a * x).squaredNorm();
    return 0.5 * fit + lambda * double(x.template lpNorm<1>());
}

/// FISTA with a monotone restart guard: if the accelerated candidate raises
/// the objective, momentum resets and the plain proximal step from the last
/// accepted iterate is taken instead (which cannot increase it).
inline LassoResult lasso_reconstruct(const VectorXd &s, LassoConfig cfg) {
    cfg.ensure_lipschitz();
    if (s.size() != cfg.A.rows()) throw ConfigError("measurement length must equal rows of A");
    const double step = cfg.lipschitz > 0 ? 1.0 / cfg.lipschitz : 1.0;
    const double thr = cfg.lambda * step;

    VectorXd x = VectorXd::Zero(cfg.A.cols());
    VectorXd y = x;
    double t = 1.0;
    double obj = lasso_objective(cfg.A, s, x, cfg.lambda);

    LassoResult res;
    for (int it = 0; it < cfg.max_iters; ++it) {
        VectorXd grad = cfg.A.transpose() * (cfg.A * y - s);
        VectorXd xn = soft_threshold(y - step * grad, thr);
        double objn = lasso_objective(cfg.A, s, xn, cfg.lambda);
        if (objn > obj) {
            // restart momentum from the last accepted iterate
            t = 1.0;
            grad = cfg.A.transpose() * (cfg.A * x - s);
            xn = soft_threshold(x - step * grad, thr);
            objn = lasso_objective(cfg.A, s, xn, cfg.lambda);
        }
        double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = xn + ((t - 1.0) / tn) * (xn - x);
        double rel = (xn - x).norm() / std::max(1.0, x.norm());
        x = std::move(xn);
        obj = objn;
        t = tn;
        res.iters = it + 1;
        if (cfg.record_trace) res.trace.push_back(obj);
        if (rel < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    res.x = std::move(x);
    res.objective = obj;
    return res;
}

/// Validation grid search over lambda in [1e-4, 1e-1] (log-spaced), picking
/// the value with the lowest mean reconstruction NMSE.
inline double select_lambda(const std::vector<VectorXd> &truths, LassoConfig cfg,
                            int grid_points = 7) {
    if (truths.empty()) throw ConfigError("lambda selection needs samples");
    cfg.ensure_lipschitz();
    double best_lambda = 1e-3, best = std::numeric_limits<double>::infinity();
    for (int g = 0; g < grid_points; ++g) {
        double lg = -4.0 + 3.0 * g / (grid_points - 1);
        cfg.lambda = std::pow(10.0, lg);
        double acc = 0.0;
        int64_t n = 0;
        for (const auto &x : truths) {
            VectorXd s = cfg.A * x;
            LassoResult r = lasso_reconstruct(s, cfg);
            double den = x.squaredNorm();
            if (den == 0) continue;
            acc += (x - r.x).squaredNorm() / den;
            ++n;
        }
        double nm = n ? acc / n : std::numeric_limits<double>::infinity();
        if (nm < best) {
            best = nm;
            best_lambda = cfg.lambda;
        }
    }
    return best_lambda;
}

}  // namespace cef::csbaseline

#endif  // CEF_CSBASELINE_HPP
