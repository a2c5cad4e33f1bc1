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

#ifndef CEF_TENSOR_HPP
#define CEF_TENSOR_HPP

#include <cblas.h>

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace cef {

/// Dense row-major tensor. Network activations use NCHW order.
template <typename T>
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)), v(count(shape), T(0)) {}
    Tensor(std::initializer_list<int64_t> s) : Tensor(std::vector<int64_t>(s)) {}

    static int64_t count(const std::vector<int64_t> &s) {
        return std::accumulate(s.begin(), s.end(), int64_t(1), std::multiplies<int64_t>());
    }

    int64_t size() const { return static_cast<int64_t>(v.size()); }
    T *data() { return v.data(); }
    const T *data() const { return v.data(); }

    int64_t dim(size_t i) const { return shape.at(i); }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    /// Reinterpret with a new shape of equal element count.
    Tensor<T> reshaped(std::vector<int64_t> s) const {
        if (count(s) != size()) throw std::invalid_argument("reshape: element count mismatch");
        Tensor<T> out;
        out.shape = std::move(s);
        out.v = v;
        return out;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

// Row-major C = alpha * op(A) * op(B) + beta * C, dispatching to BLAS by scalar type.
inline void gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float *a, int lda,
                 const float *b, int ldb, float beta, float *c, int ldc) {
    cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n,
                k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double *a, int lda,
                 const double *b, int ldb, double beta, double *c, int ldc) {
    cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n,
                k, alpha, a, lda, b, ldb, beta, c, ldc);
}

}  // namespace cef

#endif  // CEF_TENSOR_HPP
