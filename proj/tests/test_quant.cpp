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
#include <sstream>

#include "catch_amalgamated.hpp"
#include "cef/quant.hpp"
#include "cef/rng.hpp"

using namespace cef;
using namespace cef::quant;

namespace {

// independent scalar round trip used as the mu-selection oracle
double oracle_roundtrip(double v, int bits, double mu) {
    const double levels = std::pow(2.0, bits - 1);
    double mag = std::abs(v);
    if (mag > 1) mag = 1;
    double y = std::log(1.0 + mu * mag) / std::log(1.0 + mu);
    double q = std::floor(y * levels);
    if (q > levels - 1) q = levels - 1;
    double rec = (std::pow(1.0 + mu, (q + 0.5) / levels) - 1.0) / mu;
    return v < 0 ? -rec : rec;
}

std::vector<std::vector<float>> uniform_codewords(int n, int m, uint64_t seed) {
    Rng rng(Rng::scramble(seed));
    std::vector<std::vector<float>> out(n, std::vector<float>(m));
    for (auto &cw : out)
        for (auto &v : cw) v = static_cast<float>(rng.uniform(-1, 1));
    return out;
}

}  // namespace

TEST_CASE("companding endpoints and monotonicity") {
    for (double mu : {0.5, 1.0, 87.6, 255.0, 1024.0}) {
        REQUIRE(compand(0.0, mu) == 0.0);
        REQUIRE(compand(1.0, mu) == Catch::Approx(1.0).margin(1e-15));
        double prev = -1;
        for (int i = 0; i <= 50; ++i) {
            double y = compand(i / 50.0, mu);
            REQUIRE(y > prev);
            prev = y;
        }
    }
}

TEST_CASE("companding approaches identity as mu vanishes") {
    double worst = 0;
    for (int i = 0; i <= 100; ++i) {
        double x = i / 100.0;
        worst = std::max(worst, std::abs(compand(x, 1e-8) - x));
    }
    REQUIRE(worst < 1e-6);
}

TEST_CASE("compand(0.5) at mu=255") {
    REQUIRE(compand(0.5, 255.0) == Catch::Approx(0.87570).margin(1e-5));
}

TEST_CASE("inputs outside [0,1] are clamped and counted") {
    ClampCounter diag;
    REQUIRE(compand(-0.2, 255.0, &diag) == 0.0);
    REQUIRE(compand(1.7, 255.0, &diag) == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(compand(0.5, 255.0, &diag) > 0.0);
    REQUIRE(diag.clamped == 2);
}

TEST_CASE("expand inverts compand") {
    for (double mu : {1.0, 16.0, 255.0})
        for (int i = 0; i <= 20; ++i) {
            double x = i / 20.0;
            REQUIRE(expand(compand(x, mu), mu) == Catch::Approx(x).margin(1e-12));
        }
}

TEST_CASE("sign and order preservation through the round trip") {
    QuantizerConfig cfg{4, 87.6};
    const double smallest = magnitude_value(0, cfg);
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        float x = static_cast<float>(rng.uniform(-1, 1));
        std::vector<float> v{x};
        float rec = dequantize(quantize(v, cfg))[0];
        if (std::abs(x) > smallest) REQUIRE((rec < 0) == (x < 0));
        float x2 = static_cast<float>(rng.uniform(-1, 1));
        std::vector<float> v2{x2};
        float rec2 = dequantize(quantize(v2, cfg))[0];
        if (std::abs(x) < std::abs(x2))
            REQUIRE(std::abs(rec) <= std::abs(rec2));
        else if (std::abs(x) > std::abs(x2))
            REQUIRE(std::abs(rec) >= std::abs(rec2));
    }
}

TEST_CASE("per-component error stays inside the companded bin") {
    QuantizerConfig cfg{5, 255.0};
    const int levels = 1 << (cfg.bits - 1);
    Rng rng(4);
    for (int i = 0; i < 2000; ++i) {
        double x = rng.uniform(-1, 1);
        std::vector<float> v{static_cast<float>(x)};
        double rec = std::abs(double(dequantize(quantize(v, cfg))[0]));
        uint32_t q = magnitude_index(std::abs(x), cfg, nullptr);
        double lo = expand(double(q) / levels, cfg.mu);
        double hi = expand(double(q + 1) / levels, cfg.mu);
        REQUIRE(rec >= lo);
        REQUIRE(rec <= hi);
        REQUIRE(std::abs(std::abs(x) - rec) <= hi - lo);
    }
}

TEST_CASE("B=16 mean round-trip error is below 1e-3") {
    auto cws = uniform_codewords(20, 256, 9);
    double mu = select_mu(cws, 16);
    QuantizerConfig cfg{16, mu};
    double acc = 0;
    int64_t n = 0;
    for (auto &cw : cws) {
        auto rec = dequantize(quantize(cw, cfg));
        for (size_t i = 0; i < cw.size(); ++i) {
            acc += std::abs(cw[i] - rec[i]);
            ++n;
        }
    }
    REQUIRE(acc / n < 1e-3);
}

TEST_CASE("round-trip MSE is non-increasing in B under the same policy") {
    Rng rng(5);
    std::vector<std::vector<float>> cws(20, std::vector<float>(128));
    for (auto &cw : cws)
        for (auto &v : cw) v = static_cast<float>(std::tanh(rng.normal() * 0.4));
    double prev = std::numeric_limits<double>::infinity();
    for (int bits = 3; bits <= 8; ++bits) {
        double mse = roundtrip_mse(cws, bits, select_mu(cws, bits));
        REQUIRE(mse <= prev);
        prev = mse;
    }
}

TEST_CASE("mu selection matches an exhaustive oracle scan") {
    auto eval_mu = [](const std::vector<std::vector<float>> &cws, int bits, double mu) {
        double acc = 0;
        int64_t n = 0;
        for (auto &cw : cws)
            for (float v : cw) {
                double d = v - oracle_roundtrip(v, bits, mu);
                acc += d * d;
                ++n;
            }
        return acc / n;
    };
    auto oracle_pick = [&](const std::vector<std::vector<float>> &cws, int bits) {
        double best = std::numeric_limits<double>::infinity(), pick = 1.0;
        for (int e = 0; e <= 10; ++e) {
            double mu = std::pow(2.0, e);
            double m = eval_mu(cws, bits, mu);
            if (m < best) {
                best = m;
                pick = mu;
            }
        }
        return pick;
    };

    SECTION("uniform codewords pick the smallest grid value") {
        auto cws = uniform_codewords(50, 64, 11);
        REQUIRE(select_mu(cws, 4) == 1.0);
        REQUIRE(oracle_pick(cws, 4) == 1.0);
    }
    SECTION("near-zero concentrated codewords pick strong companding") {
        Rng rng(12);
        std::vector<std::vector<float>> cws(50, std::vector<float>(64));
        for (auto &cw : cws)
            for (auto &v : cw) {
                double u = rng.uniform(0, 1) - 0.5;
                double lap = -0.05 * (u < 0 ? -1 : 1) * std::log(1 - 2 * std::abs(u));
                v = static_cast<float>(std::clamp(lap, -0.999, 0.999));
            }
        double mu = select_mu(cws, 4);
        REQUIRE(mu > 16.0);
        REQUIRE(mu == oracle_pick(cws, 4));
    }
    SECTION("ties break toward the smaller mu") {
        std::vector<std::vector<float>> cws{{0.5f, 0.5f, 0.5f}};
        REQUIRE(select_mu(cws, 4) == oracle_pick(cws, 4));
    }
}

TEST_CASE("bitstream layout and wire format") {
    QuantizerConfig cfg{4, 255.0};
    std::vector<float> cw{0.9f, -0.9f, 0.01f, -0.01f, 0.5f};
    Bitstream bs = quantize(cw, cfg);
    REQUIRE(bs.count == 5);
    REQUIRE(bs.bit_length() == 20);
    REQUIRE(bs.bytes.size() == 3);  // ceil(20/8)

    // sign bit first, magnitude big-endian: +0.9 at B=4, mu=255 -> sign 0,
    // index floor(compand(0.9)*8)=7 -> group 0111
    REQUIRE((bs.bytes[0] >> 4) == 0x7);
    // -0.9 -> sign 1, index 7 -> group 1111
    REQUIRE((bs.bytes[0] & 0xF) == 0xF);

    std::stringstream ss;
    serialize(bs, ss);
    Bitstream back = parse(ss);
    REQUIRE(back.count == bs.count);
    REQUIRE(back.config.bits == 4);
    REQUIRE(back.config.mu == 255.0);
    REQUIRE(back.bytes == bs.bytes);
    REQUIRE(dequantize(back) == dequantize(bs));

    std::stringstream ss2;
    serialize(back, ss2);
    REQUIRE(ss2.str() == ss.str());
}

TEST_CASE("quantizer configuration validation") {
    REQUIRE_THROWS_AS(QuantizerConfig({1, 255.0}).validate(), ConfigError);
    REQUIRE_THROWS_AS(QuantizerConfig({4, 0.0}).validate(), ConfigError);
    std::vector<std::vector<float>> empty;
    REQUIRE_THROWS_AS(select_mu(empty, 4), ConfigError);
}
