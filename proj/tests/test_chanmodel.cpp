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

#include <Eigen/Dense>
#include <complex>

#include "catch_amalgamated.hpp"
#include "cef/chanmodel.hpp"

using namespace cef;
using namespace cef::chanmodel;
using Eigen::MatrixXcd;

namespace {

// Independent delay-profile oracle: naive per-column inverse DFT across
// subcarriers, written without the library transform code.
MatrixXcd naive_delay_profile(const MatrixXcd &h_fs) {
    const int k = static_cast<int>(h_fs.rows());
    MatrixXcd out(k, h_fs.cols());
    for (int a = 0; a < h_fs.cols(); ++a) {
        for (int d = 0; d < k; ++d) {
            std::complex<double> acc = 0;
            for (int f = 0; f < k; ++f)
                acc += h_fs(f, a) * std::polar(1.0, 2.0 * M_PI * f * d / k);
            out(d, a) = acc / std::sqrt(static_cast<double>(k));
        }
    }
    return out;
}

double delay_tail_energy(const MatrixXcd &profile, int taps) {
    double total = profile.squaredNorm();
    double head = profile.topRows(taps).squaredNorm();
    return (total - head) / total;
}

}  // namespace

TEST_CASE("single path at tap 0, broadside: one dominant angle-delay entry") {
    const int k = 256, nt = 32;
    MatrixXcd h = path_response(k, nt, 0, 0.0, 1.0);
    MatrixXcd prof = naive_delay_profile(h);
    // all-ones matrix concentrates at delay bin 0
    REQUIRE(std::abs(prof(0, 0)) == Catch::Approx(std::sqrt(double(k)) * 1.0).margin(1e-9));
    REQUIRE(delay_tail_energy(prof, 1) < 1e-20);
}

TEST_CASE("single path closed form matches steering-vector DFT") {
    const int k = 64, nt = 16;
    const double sin_theta = 0.37;
    const int tap = 5;
    MatrixXcd h = path_response(k, nt, tap, sin_theta, {0.8, -0.6});
    MatrixXcd prof = naive_delay_profile(h);
    // integer tap: the whole column energy sits in delay row `tap`
    REQUIRE(delay_tail_energy(prof, tap + 1) < 1e-20);
    for (int a = 0; a < nt; ++a) {
        std::complex<double> expected = std::complex<double>(0.8, -0.6) *
                                        std::sqrt(double(k)) *
                                        std::polar(1.0, -M_PI * a * sin_theta);
        REQUIRE(std::abs(prof(tap, a) - expected) < 1e-9);
    }
}

TEST_CASE("indoor delay support: >=99% of energy in first 8 taps for every sample") {
    auto preset = ScenarioPreset::indoor();
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        auto ch = generate_channel(preset, seed, 64, 4);  // smaller grid, same delay logic
        MatrixXcd prof = naive_delay_profile(ch.h_fs);
        REQUIRE(delay_tail_energy(prof, preset.max_delay_taps) < 0.01);
    }
}

TEST_CASE("generation is deterministic in (preset, seed)") {
    auto preset = ScenarioPreset::outdoor();
    auto a = generate_channel(preset, 42);
    auto b = generate_channel(preset, 42);
    REQUIRE((a.h_fs - b.h_fs).norm() == 0.0);
    auto c = generate_channel(preset, 43);
    REQUIRE((a.h_fs - c.h_fs).norm() != 0.0);
}

TEST_CASE("dataset-average per-entry power is 1 within 1%") {
    auto preset = ScenarioPreset::indoor();
    double acc = 0.0;
    const int n = 2000;
    for (uint64_t seed = 0; seed < n; ++seed) {
        auto ch = generate_channel(preset, seed, 64, 8);
        acc += ch.h_fs.squaredNorm() / (64.0 * 8.0);
    }
    REQUIRE(acc / n == Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("pilot grid positions are equi-spaced") {
    auto g = make_pilot_grid(16, 256, 32);
    REQUIRE(g.positions.size() == 16);
    for (int p = 0; p < 16; ++p) REQUIRE(g.positions[p] == p * 16);
    REQUIRE(g.positions.back() == 240);

    auto g32 = make_pilot_grid(32, 256, 32);
    REQUIRE(g32.spacing() == 8);
    REQUIRE(g32.positions.size() == 32);

    REQUIRE_THROWS_AS(make_pilot_grid(7, 256, 32), ConfigError);
}

TEST_CASE("pilot symbols are BPSK, fixed and shared") {
    auto a = make_pilot_grid(16, 256, 32);
    auto b = make_pilot_grid(16, 256, 32);
    REQUIRE((a.symbols - b.symbols).norm() == 0.0);
    for (int p = 0; p < a.num_pilots; ++p)
        for (int i = 0; i < a.num_antennas; ++i)
            REQUIRE(std::abs(std::abs(a.symbols(p, i).real()) - 1.0) < 1e-15);
}

TEST_CASE("pilot coverage flag against scenario delay support") {
    auto indoor = ScenarioPreset::indoor();
    REQUIRE(make_pilot_grid(8, 256, 32).covers_delay(indoor));
    auto outdoor = ScenarioPreset::outdoor();
    REQUIRE_FALSE(make_pilot_grid(8, 256, 32).covers_delay(outdoor));
    REQUIRE(make_pilot_grid(32, 256, 32).covers_delay(outdoor));
}

TEST_CASE("noiseless all-ones pilots return the channel at pilot tones") {
    auto preset = ScenarioPreset::indoor();
    auto ch = generate_channel(preset, 7);
    auto grid = make_pilot_grid(32, 256, 32);
    grid.symbols.setOnes();
    auto rx = synthesize_received_pilots(ch, grid, std::numeric_limits<double>::infinity(), 7);
    REQUIRE(rx.noise_var == 0.0);
    for (int p = 0; p < grid.num_pilots; ++p)
        for (int a = 0; a < grid.num_antennas; ++a)
            REQUIRE(rx.y(p, a) == ch.h_fs(grid.positions[p], a));
}

TEST_CASE("BPSK -1 flips the sign of the received tone") {
    auto preset = ScenarioPreset::indoor();
    auto ch = generate_channel(preset, 9);
    auto grid = make_pilot_grid(16, 256, 32);
    grid.symbols.setConstant(-1.0);
    auto rx = synthesize_received_pilots(ch, grid, std::numeric_limits<double>::infinity(), 9);
    for (int p = 0; p < grid.num_pilots; ++p)
        for (int a = 0; a < grid.num_antennas; ++a)
            REQUIRE(rx.y(p, a) == -ch.h_fs(grid.positions[p], a));
}

TEST_CASE("empirical noise power matches the nominal variance at 10 dB") {
    // unit-power single-path channel; >= 1e5 noise draws
    const int k = 16, nt = 2;
    MatrixXcd h = path_response(k, nt, 0, 0.2, 1.0);
    ChannelRealization ch;
    ch.h_fs = h;
    ch.scenario = ScenarioPreset::indoor();
    auto grid = make_pilot_grid(16, k, nt);
    double acc = 0.0;
    int64_t n = 0;
    for (uint64_t seed = 0; seed < 3200; ++seed) {
        auto rx = synthesize_received_pilots(ch, grid, 10.0, seed);
        REQUIRE(rx.noise_var == Catch::Approx(0.1));
        for (int p = 0; p < grid.num_pilots; ++p)
            for (int a = 0; a < nt; ++a) {
                std::complex<double> noise =
                    rx.y(p, a) - grid.symbols(p, a) * h(grid.positions[p], a);
                acc += std::norm(noise);
                ++n;
            }
    }
    REQUIRE(n >= 100000);
    REQUIRE(acc / n == Catch::Approx(0.1).epsilon(0.01));
}

TEST_CASE("preset text round trip and validation") {
    auto p = ScenarioPreset::outdoor();
    auto q = preset_from_text(preset_to_text(p));
    REQUIRE(q.name == Scenario::kOutdoor);
    REQUIRE(q.max_delay_taps == 32);
    REQUIRE(q.num_clusters == 6);
    REQUIRE(q.angular_spread_rad == Catch::Approx(p.angular_spread_rad));

    REQUIRE_THROWS_AS(preset_from_text("name=indoor\nnum_clusters=0\n"), ConfigError);
    REQUIRE_THROWS_AS(preset_from_text("name=mars\n"), ConfigError);
    REQUIRE_THROWS_AS(preset_from_text("carrier_hz=1e9\n"), ConfigError);  // missing name

    ScenarioPreset bad = ScenarioPreset::indoor();
    bad.max_delay_taps = 0;
    REQUIRE_THROWS_AS(generate_channel(bad, 1), ConfigError);
}
