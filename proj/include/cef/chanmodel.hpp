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

#ifndef CEF_CHANMODEL_HPP
#define CEF_CHANMODEL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cef/common.hpp"
#include "cef/rng.hpp"

namespace cef::chanmodel {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

// System defaults: OFDM grid and ULA size.
inline constexpr int kDefaultSubcarriers = 256;  // K~
inline constexpr int kDefaultAntennas = 32;      // N_t

enum class Scenario { kIndoor, kOutdoor };

inline std::string to_string(Scenario s) { return s == Scenario::kIndoor ? "indoor" : "outdoor"; }

inline Scenario scenario_from_string(const std::string &s) {
    if (s == "indoor") return Scenario::kIndoor;
    if (s == "outdoor") return Scenario::kOutdoor;
    throw ConfigError("unknown scenario '" + s + "' (expected indoor|outdoor)");
}

/// Clustered-multipath scenario description.
///
/// Channels are sums over clusters of paths; each path is a complex gain times
/// a half-wavelength ULA steering vector times an integer-tap delay phase ramp
/// across subcarriers. Integer taps keep the delay support exact; continuous
/// path angles leave the angular domain only approximately sparse.
struct ScenarioPreset {
    Scenario name = Scenario::kIndoor;
    double carrier_hz = 5.3e9;
    int max_delay_taps = 8;       // delay support bound, in taps
    int num_clusters = 3;
    int paths_per_cluster = 8;
    double delay_spread_taps = 1.0;  // intra-cluster tap jitter, clipped to support
    double angular_spread_rad = 20.0 * M_PI / 180.0;  // per-cluster path angle spread
    double area_side_m = 20.0;

    static ScenarioPreset indoor() { return {}; }

    static ScenarioPreset outdoor() {
        ScenarioPreset p;
        p.name = Scenario::kOutdoor;
        p.carrier_hz = 300e6;
        p.max_delay_taps = 32;
        p.num_clusters = 6;
        p.paths_per_cluster = 10;
        p.delay_spread_taps = 2.0;
        p.angular_spread_rad = 60.0 * M_PI / 180.0;
        p.area_side_m = 400.0;
        return p;
    }

    static ScenarioPreset by_name(Scenario s) {
        return s == Scenario::kIndoor ? indoor() : outdoor();
    }

    void validate(int num_subcarriers = kDefaultSubcarriers) const {
        if (max_delay_taps < 1 || max_delay_taps > num_subcarriers)
            throw ConfigError("max_delay_taps must be in [1, subcarriers]");
        if (num_clusters < 1) throw ConfigError("num_clusters must be >= 1");
        if (paths_per_cluster < 1) throw ConfigError("paths_per_cluster must be >= 1");
        if (carrier_hz <= 0) throw ConfigError("carrier_hz must be positive");
        if (delay_spread_taps < 0) throw ConfigError("delay_spread_taps must be >= 0");
        if (angular_spread_rad < 0 || angular_spread_rad > M_PI)
            throw ConfigError("angular_spread_rad must be in [0, pi]");
        if (area_side_m <= 0) throw ConfigError("area_side_m must be positive");
    }
};

/// Ground-truth frequency-spatial channel, K~ x N_t.
struct ChannelRealization {
    MatrixXcd h_fs;
    ScenarioPreset scenario;
    uint64_t seed = 0;
};

enum class PilotScheme { kCodeOrthogonalBlocks };

/// Equi-spaced comb pilots with per-antenna BPSK symbols. The symbols are a
/// fixed shared sequence (derived from the grid dimensions only) so that the
/// pilot pattern is known at both link ends and identical across samples.
struct PilotGrid {
    int num_pilots = 0;       // P
    int num_subcarriers = 0;  // K~
    int num_antennas = 0;     // N_t
    std::vector<int> positions;
    MatrixXcd symbols;  // P x N_t, entries +-1
    PilotScheme scheme = PilotScheme::kCodeOrthogonalBlocks;

    int spacing() const { return num_subcarriers / num_pilots; }

    /// False when P is below the scenario delay support (LS under-determined).
    bool covers_delay(const ScenarioPreset &p) const { return num_pilots >= p.max_delay_taps; }
};

/// Per-antenna decoupled received pilot observations, P x N_t.
///
/// Code-orthogonal pilot blocks across antennas make the per-antenna
/// observations separable; this type holds the post-decoupling result
/// y(k,i) = X(k,i) h_i(pos_k) + n(k,i).
struct ReceivedPilots {
    MatrixXcd y;
    double snr_db = 0.0;
    double noise_var = 0.0;
};

/// Rank-one response of a single path: gain * delay ramp (rows) x steering (cols).
inline MatrixXcd path_response(int num_subcarriers, int num_antennas, double delay_tap,
                               double sin_theta, std::complex<double> gain) {
    VectorXcd ramp(num_subcarriers);
    for (int k = 0; k < num_subcarriers; ++k) {
        double ph = -2.0 * M_PI * k * delay_tap / num_subcarriers;
        ramp(k) = std::polar(1.0, ph);
    }
    VectorXcd steer(num_antennas);
    for (int n = 0; n < num_antennas; ++n) {
        double ph = -M_PI * n * sin_theta;  // half-wavelength ULA
        steer(n) = std::polar(1.0, ph);
    }
    return gain * ramp * steer.transpose();
}

/// Draw one channel. Pure function of (preset, seed); expected per-entry power
/// is exactly 1 by construction (unit total path power).
inline ChannelRealization generate_channel(const ScenarioPreset &preset, uint64_t seed,
                                           int num_subcarriers = kDefaultSubcarriers,
                                           int num_antennas = kDefaultAntennas) {
    preset.validate(num_subcarriers);
    Rng rng = Rng::for_sample(seed, 0, /*salt=*/0x4348414Eull);  // "CHAN"

    ChannelRealization out;
    out.scenario = preset;
    out.seed = seed;
    out.h_fs = MatrixXcd::Zero(num_subcarriers, num_antennas);

    const double path_pow = 1.0 / (preset.num_clusters * preset.paths_per_cluster);
    for (int c = 0; c < preset.num_clusters; ++c) {
        int cluster_tap = static_cast<int>(rng.uniform_index(preset.max_delay_taps));
        double cluster_angle = rng.uniform(-M_PI / 2, M_PI / 2);
        for (int p = 0; p < preset.paths_per_cluster; ++p) {
            double jitter = rng.uniform(-preset.delay_spread_taps, preset.delay_spread_taps);
            int tap = cluster_tap + static_cast<int>(std::lround(jitter));
            tap = std::max(0, std::min(preset.max_delay_taps - 1, tap));
            double theta =
                cluster_angle + rng.uniform(-preset.angular_spread_rad / 2,
                                            preset.angular_spread_rad / 2);
            std::complex<double> gain = rng.cnormal() * std::sqrt(path_pow);
            out.h_fs += path_response(num_subcarriers, num_antennas, tap, std::sin(theta), gain);
        }
    }
    return out;
}

inline PilotGrid make_pilot_grid(int num_pilots, int num_subcarriers = kDefaultSubcarriers,
                                 int num_antennas = kDefaultAntennas) {
    if (num_pilots < 1) throw ConfigError("pilot count must be >= 1");
    if (num_subcarriers % num_pilots != 0)
        throw ConfigError("pilot count " + std::to_string(num_pilots) +
                          " does not divide subcarrier count " + std::to_string(num_subcarriers));
    PilotGrid g;
    g.num_pilots = num_pilots;
    g.num_subcarriers = num_subcarriers;
    g.num_antennas = num_antennas;
    const int step = num_subcarriers / num_pilots;
    g.positions.resize(num_pilots);
    for (int p = 0; p < num_pilots; ++p) g.positions[p] = p * step;

    // Fixed shared BPSK sequence keyed by the grid dimensions.
    Rng rng = Rng::for_sample(0x50494C4Full /*"PILO"*/,
                              (static_cast<uint64_t>(num_pilots) << 32) |
                                  static_cast<uint64_t>(num_subcarriers),
                              static_cast<uint64_t>(num_antennas));
    g.symbols.resize(num_pilots, num_antennas);
    for (int p = 0; p < num_pilots; ++p)
        for (int a = 0; a < num_antennas; ++a)
            g.symbols(p, a) = (rng.uniform() < 0.5) ? -1.0 : 1.0;
    return g;
}

/// Noisy decoupled pilot observations at SNR `snr_db` (infinity = noiseless).
/// SNR is referenced to the average channel-times-pilot power, which is 1 for
/// unit-power channels and unit-modulus pilots.
inline ReceivedPilots synthesize_received_pilots(const ChannelRealization &ch, const PilotGrid &grid,
                                                 double snr_db, uint64_t seed) {
    if (grid.num_subcarriers != ch.h_fs.rows() || grid.num_antennas != ch.h_fs.cols())
        throw ConfigError("pilot grid is inconsistent with the channel dimensions");

    ReceivedPilots rx;
    rx.snr_db = snr_db;
    const double signal_power = 1.0;
    rx.noise_var = std::isinf(snr_db) ? 0.0 : signal_power / std::pow(10.0, snr_db / 10.0);

    Rng rng = Rng::for_sample(seed, 0, /*salt=*/0x4E4F4953ull);  // "NOIS"
    const double sigma = std::sqrt(rx.noise_var);
    rx.y.resize(grid.num_pilots, grid.num_antennas);
    for (int p = 0; p < grid.num_pilots; ++p) {
        for (int a = 0; a < grid.num_antennas; ++a) {
            std::complex<double> n = sigma > 0 ? sigma * rng.cnormal() : 0.0;
            rx.y(p, a) = grid.symbols(p, a) * ch.h_fs(grid.positions[p], a) + n;
        }
    }
    return rx;
}

// ---- preset files: flat key=value text ----

inline std::string preset_to_text(const ScenarioPreset &p) {
    std::ostringstream os;
    os << "name=" << to_string(p.name) << "\n";
    os << "carrier_hz=" << p.carrier_hz << "\n";
    os << "max_delay_taps=" << p.max_delay_taps << "\n";
    os << "num_clusters=" << p.num_clusters << "\n";
    os << "paths_per_cluster=" << p.paths_per_cluster << "\n";
    os << "delay_spread_taps=" << p.delay_spread_taps << "\n";
    os << "angular_spread_rad=" << p.angular_spread_rad << "\n";
    os << "area_side_m=" << p.area_side_m << "\n";
    return os.str();
}

inline ScenarioPreset preset_from_text(const std::string &text) {
    ScenarioPreset p;
    std::istringstream is(text);
    std::string line;
    bool named = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("preset line missing '=': " + line);
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        if (key == "name") {
            p = ScenarioPreset::by_name(scenario_from_string(val));
            named = true;
        } else if (key == "carrier_hz") {
            p.carrier_hz = std::stod(val);
        } else if (key == "max_delay_taps") {
            p.max_delay_taps = std::stoi(val);
        } else if (key == "num_clusters") {
            p.num_clusters = std::stoi(val);
        } else if (key == "paths_per_cluster") {
            p.paths_per_cluster = std::stoi(val);
        } else if (key == "delay_spread_taps") {
            p.delay_spread_taps = std::stod(val);
        } else if (key == "angular_spread_rad") {
            p.angular_spread_rad = std::stod(val);
        } else if (key == "area_side_m") {
            p.area_side_m = std::stod(val);
        } else {
            throw ConfigError("unknown preset key '" + key + "'");
        }
    }
    if (!named) throw ConfigError("preset is missing the 'name' key");
    p.validate();
    return p;
}

inline ScenarioPreset load_preset(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw MissingArtifact("preset file not found: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return preset_from_text(ss.str());
}

}  // namespace cef::chanmodel

#endif  // CEF_CHANMODEL_HPP
