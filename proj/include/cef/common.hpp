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

#ifndef CEF_COMMON_HPP
#define CEF_COMMON_HPP

#include <cstdint>
#include <cstring>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cef {

inline constexpr const char *kVersion = "0.1.0";

// Process exit codes used by the CLI.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 2,
    kExitMissingArtifact = 3,
    kExitDiverged = 4,
};

// Invalid user-supplied configuration (preset fields, CLI flags, shapes).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A referenced dataset/model file does not exist; message names the build step.
struct MissingArtifact : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced NaN/Inf loss.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a 64-bit, used for config/provenance hashing.
inline uint64_t fnv1a(const void *data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const auto *p = static_cast<const uint8_t *>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a(const std::string &s, uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(s.data(), s.size(), h);
}

inline std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---- little-endian binary I/O helpers (file formats are LE by contract) ----

template <typename T>
void write_le(std::ostream &os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    uint8_t buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
#endif
    os.write(reinterpret_cast<const char *>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream &is) {
    uint8_t buf[sizeof(T)];
    is.read(reinterpret_cast<char *>(buf), sizeof(T));
    if (!is) throw std::runtime_error("unexpected end of file");
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
#endif
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

inline void write_bytes(std::ostream &os, const void *p, size_t n) {
    os.write(static_cast<const char *>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream &is, void *p, size_t n) {
    is.read(static_cast<char *>(p), static_cast<std::streamsize>(n));
    if (!is) throw std::runtime_error("unexpected end of file");
}

}  // namespace cef

#endif  // CEF_COMMON_HPP
