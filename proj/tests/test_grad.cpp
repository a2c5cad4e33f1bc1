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

#include <cmath>

#include "catch_amalgamated.hpp"
#include "cef/nets.hpp"

using namespace cef;
using namespace cef::nets;

namespace {

// Training-mode loss as a pure function of the parameters (batch-norm uses
// batch statistics; running-average updates do not affect the value).
double loss_of(Model<double> &m, const Tensor<double> &x, const Tensor<double> &y) {
    auto out = m.forward(x, true);
    return nn::mse_loss(out.output, y, static_cast<Tensor<double> *>(nullptr));
}

struct BlockCheck {
    std::string name;
    double rel_err;
    double abs_err;
    double grad_norm;  // max of analytic/finite-difference norms
};

/// Central-difference verification of every parameter in every trainable
/// block; returns the per-block errors.
std::vector<BlockCheck> check_gradients(Model<double> &m, const Tensor<double> &x,
                                        const Tensor<double> &y) {
    auto out = m.forward(x, true);
    Tensor<double> dpred;
    nn::mse_loss(out.output, y, &dpred);
    m.zero_grad();
    m.backward(dpred);

    std::vector<BlockCheck> checks;
    for (auto *p : m.trainable_params()) {
        std::vector<double> analytic = p->g;
        double num = 0, den_a = 0, den_f = 0;
        for (size_t j = 0; j < p->w.size(); ++j) {
            double w0 = p->w[j];
            double h = 1e-6 * std::max(1.0, std::abs(w0));
            p->w[j] = w0 + h;
            double lp = loss_of(m, x, y);
            p->w[j] = w0 - h;
            double lm = loss_of(m, x, y);
            p->w[j] = w0;
            double fd = (lp - lm) / (2 * h);
            double d = analytic[j] - fd;
            num += d * d;
            den_a += analytic[j] * analytic[j];
            den_f += fd * fd;
        }
        double den = std::sqrt(std::max(den_a, den_f));
        checks.push_back({p->name, den > 0 ? std::sqrt(num) / den : 0.0, std::sqrt(num), den});
    }
    return checks;
}

}  // namespace

TEST_CASE("analytic gradients match central differences on the tiny joint net") {
    // K = Nt = 4, M = 8, L = 3: exercises conv, FC, both batch-norm flavors,
    // ReLU, tanh and the residual skip in one graph.
    Model<double> m(assemble(Variant::kCefnet, 8, 4, 4, 3, 16));
    m.init(2024);

    Rng rng(31);
    Tensor<double> x({3, 2, 4, 4}), y({3, 2, 4, 4});
    for (auto &v : x.v) v = rng.uniform(0, 1);
    for (auto &v : y.v) v = rng.uniform(0, 1);

    auto checks = check_gradients(m, x, y);
    REQUIRE(checks.size() >= 20);
    int relative_checked = 0;
    for (const auto &c : checks) {
        INFO(c.name << " rel_err=" << c.rel_err << " abs_err=" << c.abs_err
                    << " grad_norm=" << c.grad_norm);
        if (c.grad_norm < 1e-7) {
            // Biases that feed straight into a batch norm have exactly zero
            // true gradient (the batch mean absorbs any constant shift);
            // both sides must agree that the block is zero.
            REQUIRE(c.abs_err < 1e-6);
        } else {
            REQUIRE(c.rel_err < 1e-4);
            ++relative_checked;
        }
    }
    REQUIRE(relative_checked >= 18);
}

TEST_CASE("frozen estimation stage accumulates exactly zero gradient") {
    Model<double> m(assemble(Variant::kCefnet, 8, 4, 4, 3, 8));
    m.init(7);
    m.freeze_ce = true;

    Rng rng(8);
    Tensor<double> x({2, 2, 4, 4}), y({2, 2, 4, 4});
    for (auto &v : x.v) v = rng.uniform(0, 1);
    for (auto &v : y.v) v = rng.uniform(0, 1);

    auto out = m.forward(x, true);
    Tensor<double> dpred;
    nn::mse_loss(out.output, y, &dpred);
    m.zero_grad();
    m.backward(dpred);

    double ce_grad_norm = 0;
    for (auto *p : m.ce_params())
        for (double g : p->g) ce_grad_norm += g * g;
    REQUIRE(ce_grad_norm == 0.0);

    double cf_grad_norm = 0;
    for (auto *p : m.cf_params())
        if (p->trainable)
            for (double g : p->g) cf_grad_norm += g * g;
    REQUIRE(cf_grad_norm > 0.0);
}

TEST_CASE("one optimizing step in double reduces the loss") {
    Model<double> m(assemble(Variant::kCfOnly, 8, 4, 4, 3, 8));
    m.init(99);
    Rng rng(100);
    Tensor<double> x({4, 2, 4, 4}), y({4, 2, 4, 4});
    for (auto &v : x.v) v = rng.uniform(0, 1);
    for (auto &v : y.v) v = rng.uniform(0, 1);

    double l0 = loss_of(m, x, y);
    auto out = m.forward(x, true);
    Tensor<double> dpred;
    nn::mse_loss(out.output, y, &dpred);
    m.zero_grad();
    m.backward(dpred);
    for (auto *p : m.trainable_params())
        for (size_t j = 0; j < p->w.size(); ++j) p->w[j] -= 1e-3 * p->g[j];
    double l1 = loss_of(m, x, y);
    REQUIRE(l1 < l0);
}
