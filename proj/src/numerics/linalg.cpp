/*
Copyright 2026 The Karte Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "linalg.hpp"

#include <Eigen/Core>

namespace karte::linalg {

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;
} // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, const double* b, double beta, double* c) {
    const auto M = static_cast<Eigen::Index>(m);
    const auto N = static_cast<Eigen::Index>(n);
    const auto K = static_cast<Eigen::Index>(k);
    Map C(c, M, N);
    if (beta == 0.0)
        C.setZero();
    else if (beta != 1.0)
        C *= beta;
    if (m == 0 || n == 0 || k == 0) return;

    if (!trans_a && !trans_b)
        C.noalias() += alpha * ConstMap(a, M, K) * ConstMap(b, K, N);
    else if (!trans_a && trans_b)
        C.noalias() += alpha * ConstMap(a, M, K) * ConstMap(b, N, K).transpose();
    else if (trans_a && !trans_b)
        C.noalias() += alpha * ConstMap(a, K, M).transpose() * ConstMap(b, K, N);
    else
        C.noalias() += alpha * ConstMap(a, K, M).transpose() * ConstMap(b, N, K).transpose();
}

} // namespace karte::linalg
