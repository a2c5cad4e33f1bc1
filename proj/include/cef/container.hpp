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

#ifndef CEF_CONTAINER_HPP
#define CEF_CONTAINER_HPP

#include <fstream>
#include <string>
#include <vector>

#include "cef/common.hpp"
#include "json.hpp"

namespace cef::bench {

// Dataset container: "CEFD" magic, version, named binary32 LE row-major
// tensors, and a trailing JSON metadata block (norm meta, seed, spec hash).
inline constexpr char kContainerMagic[4] = {'C', 'E', 'F', 'D'};
inline constexpr uint32_t kDtypeF32 = 0;

struct TensorEntry {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<float> data;

    int64_t count() const {
        int64_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }
};

struct Container {
    std::vector<TensorEntry> tensors;
    nlohmann::json meta;

    bool has(const std::string &name) const {
        for (const auto &t : tensors)
            if (t.name == name) return true;
        return false;
    }

    const TensorEntry &get(const std::string &name) const {
        for (const auto &t : tensors)
            if (t.name == name) return t;
        throw std::runtime_error("container tensor not found: " + name);
    }
};

inline void write_container(const std::string &path, const Container &c) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write container: " + path);
    write_bytes(f, kContainerMagic, 4);
    write_le<uint32_t>(f, 1);
    write_le<uint32_t>(f, static_cast<uint32_t>(c.tensors.size()));
    for (const auto &t : c.tensors) {
        write_le<uint16_t>(f, static_cast<uint16_t>(t.name.size()));
        write_bytes(f, t.name.data(), t.name.size());
        write_le<uint32_t>(f, static_cast<uint32_t>(t.shape.size()));
        for (auto d : t.shape) write_le<uint64_t>(f, static_cast<uint64_t>(d));
        write_le<uint32_t>(f, kDtypeF32);
        if (t.count() != static_cast<int64_t>(t.data.size()))
            throw std::runtime_error("tensor shape/data mismatch: " + t.name);
    }
    for (const auto &t : c.tensors)
        write_bytes(f, t.data.data(), t.data.size() * sizeof(float));
    std::string meta = c.meta.dump();
    write_le<uint64_t>(f, meta.size());
    write_bytes(f, meta.data(), meta.size());
    if (!f) throw std::runtime_error("container write failed: " + path);
}

inline Container read_container(const std::string &path, bool payload = true) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw MissingArtifact("dataset container not found: " + path +
                              " (generate it with the `gen-data` subcommand)");
    char magic[4];
    read_bytes(f, magic, 4);
    if (std::memcmp(magic, kContainerMagic, 4) != 0)
        throw std::runtime_error("bad container magic in " + path);
    uint32_t version = read_le<uint32_t>(f);
    if (version != 1) throw std::runtime_error("unsupported container version");
    uint32_t ntensors = read_le<uint32_t>(f);
    Container c;
    c.tensors.resize(ntensors);
    for (auto &t : c.tensors) {
        uint16_t len = read_le<uint16_t>(f);
        t.name.resize(len);
        read_bytes(f, t.name.data(), len);
        uint32_t ndim = read_le<uint32_t>(f);
        t.shape.resize(ndim);
        for (auto &d : t.shape) d = static_cast<int64_t>(read_le<uint64_t>(f));
        uint32_t dtype = read_le<uint32_t>(f);
        if (dtype != kDtypeF32) throw std::runtime_error("unsupported dtype in " + path);
    }
    for (auto &t : c.tensors) {
        if (payload) {
            t.data.resize(t.count());
            read_bytes(f, t.data.data(), t.data.size() * sizeof(float));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
            for (auto &x : t.data) {
                uint32_t u;
                std::memcpy(&u, &x, 4);
                u = __builtin_bswap32(u);
                std::memcpy(&x, &u, 4);
            }
#endif
        } else {
            f.seekg(t.count() * static_cast<int64_t>(sizeof(float)), std::ios::cur);
        }
    }
    uint64_t mlen = read_le<uint64_t>(f);
    std::string meta(mlen, '\0');
    read_bytes(f, meta.data(), mlen);
    c.meta = nlohmann::json::parse(meta);
    return c;
}

}  // namespace cef::bench

#endif  // CEF_CONTAINER_HPP
