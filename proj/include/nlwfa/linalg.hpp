// linalg.hpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Truncated SVD factorization and Moore-Penrose pseudo-inverse on top of
// Eigen's divide-and-conquer SVD.

#ifndef NLWFA_LINALG_HPP_
#define NLWFA_LINALG_HPP_

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "nlwfa/common.hpp"

namespace nlwfa {

inline constexpr double kPinvTolerance = 1e-10;

/// Rank-k factorization m ~ p * s with p = U_k Sigma_k and s = V_k^T.
struct Factorization {
  Matrix p;                // rows(m) x k
  Matrix s;                // k x cols(m)
  Vector singular_values;  // top-k, non-increasing
  int rank = 0;
};

/// Top-k singular triples of m. Each right singular vector is oriented so that
/// its first nonzero entry is positive. Directions with a zero singular value
/// are returned as zero columns of p and zero rows of s.
inline Factorization svd_truncated(const Matrix& m, int k) {
  const int max_rank = static_cast<int>(std::min(m.rows(), m.cols()));
  if (k < 1 || k > max_rank) {
    throw ConfigError("rank " + std::to_string(k) + " out of range [1, " + std::to_string(max_rank) + "]");
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix u = svd.matrixU().leftCols(k);
  Matrix v = svd.matrixV().leftCols(k);
  Vector sv = svd.singularValues().head(k);

  for (int j = 0; j < k; ++j) {
    const double scale = v.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      if (std::abs(v(i, j)) > 1e-12 * scale) {
        if (v(i, j) < 0) {
          v.col(j) *= -1.0;
          u.col(j) *= -1.0;
        }
        break;
      }
    }
    if (sv(j) == 0.0) {
      u.col(j).setZero();
      v.col(j).setZero();
    }
  }

  Factorization f;
  f.p = u * sv.asDiagonal();
  f.s = v.transpose();
  f.singular_values = sv;
  f.rank = k;
  return f;
}

/// Moore-Penrose pseudo-inverse. Singular values at or below tol * sigma_max
/// are treated as zero.
inline Matrix pinv(const Matrix& m, double tol = kPinvTolerance) {
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = tol * (sv.size() > 0 ? sv(0) : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Numerical rank: number of singular values above tol * sigma_max.
inline int numerical_rank(const Matrix& m, double tol = 1e-9) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) r += sv(i) > tol * sv(0) ? 1 : 0;
  return r;
}

}  // namespace nlwfa

#endif  // NLWFA_LINALG_HPP_
