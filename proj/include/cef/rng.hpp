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

#ifndef CEF_RNG_HPP
#define CEF_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>

namespace cef {

/// Counter-seeded splitmix64 generator with hand-rolled Box-Muller.
///
/// std::normal_distribution is implementation-defined, so all randomness goes
/// through this class to keep generated data bit-identical across compilers.
/// Per-sample streams are derived from (seed, index) so parallel generation is
/// order-independent.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    /// Independent stream for sample `index` of a run keyed by `seed`.
    /// `salt` separates uses within one sample (channel draw vs. noise draw).
    static Rng for_sample(uint64_t seed, uint64_t index, uint64_t salt = 0) {
        return Rng(scramble(scramble(scramble(seed) + index) + salt));
    }

    uint64_t next_u64() {
        state_ += 0x9E3779B97f4A7C15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1] so the log is finite.
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Circularly-symmetric complex normal CN(0, 1): per-dimension variance 1/2.
    std::complex<double> cnormal() {
        double re = normal() * M_SQRT1_2;
        double im = normal() * M_SQRT1_2;
        return {re, im};
    }

    static uint64_t scramble(uint64_t z) {
        z += 0x9E3779B97f4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

  private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace cef

#endif  // CEF_RNG_HPP
