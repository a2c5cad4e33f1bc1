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

#ifndef CEF_QUANT_HPP
#define CEF_QUANT_HPP

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "cef/common.hpp"

namespace cef::quant {

enum class Scheme : uint32_t { kSignMagnitude = 0 };

/// Mu-law companding quantizer: 1 sign bit + (B-1)-bit mid-rise codebook on
/// the companded magnitude. Codeword components live in (-1,1), so the sign
/// is split off and the compander works on [0,1].
struct QuantizerConfig {
    int bits = 4;       // B, total bits per component
    double mu = 255.0;  // companding strength
    Scheme scheme = Scheme::kSignMagnitude;

    void validate() const {
        if (bits < 2) throw ConfigError("quantizer needs B >= 2 (no magnitude bits otherwise)");
        if (mu <= 0) throw ConfigError("companding parameter mu must be > 0");
    }
};

struct ClampCounter {
    int64_t clamped = 0;
};

/// Phi(x) = ln(1 + mu x) / ln(1 + mu) on [0,1]; inputs outside are clamped
/// and counted.
inline double compand(double x, double mu, ClampCounter *diag = nullptr) {
    if (x < 0.0 || x > 1.0) {
        if (diag) ++diag->clamped;
        x = x < 0.0 ? 0.0 : 1.0;
    }
    return std::log1p(mu * x) / std::log1p(mu);
}

/// Phi^{-1}(y) = ((1+mu)^y - 1) / mu.
inline double expand(double y, double mu) { return std::expm1(y * std::log1p(mu)) / mu; }

/// Packed sign-magnitude bitstream, MSB-first within each B-bit group,
/// sign bit first.
struct Bitstream {
    std::vector<uint8_t> bytes;
    uint32_t count = 0;  // M, number of components
    QuantizerConfig config;

    int64_t bit_length() const { return int64_t(count) * config.bits; }
};

namespace detail {

inline void put_bits(std::vector<uint8_t> &bytes, int64_t &bitpos, uint32_t value, int nbits) {
    for (int i = nbits - 1; i >= 0; --i) {
        if (bitpos % 8 == 0) bytes.push_back(0);
        if ((value >> i) & 1u) bytes[bitpos / 8] |= uint8_t(0x80u >> (bitpos % 8));
        ++bitpos;
    }
}

inline uint32_t get_bits(const std::vector<uint8_t> &bytes, int64_t &bitpos, int nbits) {
    uint32_t v = 0;
    for (int i = 0; i < nbits; ++i) {
        v <<= 1;
        v |= (bytes[bitpos / 8] >> (7 - bitpos % 8)) & 1u;
        ++bitpos;
    }
    return v;
}

}  // namespace detail

/// Integer codebook index of |x|: floor(Phi(|x|) * 2^(B-1)), clamped to the
/// top level.
inline uint32_t magnitude_index(double mag, const QuantizerConfig &cfg, ClampCounter *diag) {
    const uint32_t levels = 1u << (cfg.bits - 1);
    double y = compand(mag, cfg.mu, diag);
    auto q = static_cast<int64_t>(std::floor(y * levels));
    if (q < 0) q = 0;
    if (q >= levels) q = levels - 1;
    return static_cast<uint32_t>(q);
}

inline double magnitude_value(uint32_t index, const QuantizerConfig &cfg) {
    const uint32_t levels = 1u << (cfg.bits - 1);
    return expand((index + 0.5) / levels, cfg.mu);
}

template <typename T>
Bitstream quantize(const std::vector<T> &values, const QuantizerConfig &cfg,
                   ClampCounter *diag = nullptr) {
    cfg.validate();
    Bitstream bs;
    bs.count = static_cast<uint32_t>(values.size());
    bs.config = cfg;
    bs.bytes.reserve((bs.bit_length() + 7) / 8);
    int64_t bitpos = 0;
    for (T v : values) {
        const uint32_t sign = v < T(0) ? 1u : 0u;
        const uint32_t q = magnitude_index(std::abs(double(v)), cfg, diag);
        detail::put_bits(bs.bytes, bitpos, sign, 1);
        detail::put_bits(bs.bytes, bitpos, q, cfg.bits - 1);
    }
    return bs;
}

inline std::vector<float> dequantize(const Bitstream &bs) {
    bs.config.validate();
    std::vector<float> out(bs.count);
    int64_t bitpos = 0;
    for (uint32_t i = 0; i < bs.count; ++i) {
        uint32_t sign = detail::get_bits(bs.bytes, bitpos, 1);
        uint32_t q = detail::get_bits(bs.bytes, bitpos, bs.config.bits - 1);
        double m = magnitude_value(q, bs.config);
        out[i] = static_cast<float>(sign ? -m : m);
    }
    return out;
}

/// Mean squared round-trip error of quantize-then-dequantize at (B, mu).
template <typename T>
double roundtrip_mse(const std::vector<std::vector<T>> &codewords, int bits, double mu) {
    QuantizerConfig cfg{bits, mu};
    double acc = 0.0;
    int64_t n = 0;
    for (const auto &cw : codewords) {
        for (T v : cw) {
            uint32_t q = magnitude_index(std::abs(double(v)), cfg, nullptr);
            double m = magnitude_value(q, cfg);
            double rec = v < T(0) ? -m : m;
            double d = double(v) - rec;
            acc += d * d;
            ++n;
        }
    }
    return n > 0 ? acc / n : 0.0;
}

/// Grid search mu in {2^0 .. 2^10} minimizing round-trip MSE; ties break
/// toward the smaller mu.
template <typename T>
double select_mu(const std::vector<std::vector<T>> &codewords, int bits) {
    if (codewords.empty()) throw ConfigError("select_mu needs a nonempty codeword sample");
    double best_mu = 1.0;
    double best = std::numeric_limits<double>::infinity();
    for (int e = 0; e <= 10; ++e) {
        double mu = std::pow(2.0, e);
        double mse = roundtrip_mse(codewords, bits, mu);
        if (mse < best) {
            best = mse;
            best_mu = mu;
        }
    }
    return best_mu;
}

// ---- wire format: "CEFQ" header + packed groups ----

inline constexpr char kBitstreamMagic[4] = {'C', 'E', 'F', 'Q'};

inline void serialize(const Bitstream &bs, std::ostream &os) {
    write_bytes(os, kBitstreamMagic, 4);
    write_le<uint32_t>(os, 1);  // version
    write_le<uint32_t>(os, bs.count);
    write_le<uint32_t>(os, static_cast<uint32_t>(bs.config.bits));
    write_le<double>(os, bs.config.mu);
    write_le<uint32_t>(os, static_cast<uint32_t>(bs.config.scheme));
    write_bytes(os, bs.bytes.data(), bs.bytes.size());
}

inline Bitstream parse(std::istream &is) {
    char magic[4];
    read_bytes(is, magic, 4);
    if (std::memcmp(magic, kBitstreamMagic, 4) != 0)
        throw std::runtime_error("bad bitstream magic");
    uint32_t version = read_le<uint32_t>(is);
    if (version != 1) throw std::runtime_error("unsupported bitstream version");
    Bitstream bs;
    bs.count = read_le<uint32_t>(is);
    bs.config.bits = static_cast<int>(read_le<uint32_t>(is));
    bs.config.mu = read_le<double>(is);
    bs.config.scheme = static_cast<Scheme>(read_le<uint32_t>(is));
    bs.config.validate();
    bs.bytes.resize((bs.bit_length() + 7) / 8);
    read_bytes(is, bs.bytes.data(), bs.bytes.size());
    return bs;
}

}  // namespace cef::quant

#endif  // CEF_QUANT_HPP
