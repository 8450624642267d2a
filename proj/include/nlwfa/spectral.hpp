// spectral.hpp
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
// Classical spectral learning of a linear WFA from Hankel blocks.

#ifndef NLWFA_SPECTRAL_HPP_
#define NLWFA_SPECTRAL_HPP_

#include <algorithm>
#include <string>
#include <vector>

#include "nlwfa/hankel.hpp"
#include "nlwfa/linalg.hpp"
#include "nlwfa/wfa.hpp"

namespace nlwfa {

/// Factorizes h_lambda = P S at rank k and returns
///   alpha0^T = P[lambda, :],  alpha_inf = S[:, lambda],  A_sigma = P^+ H_sigma S^+.
inline Wfa spectral_learn(const HankelBlocks& h, int k) {
  const int lp = h.basis.lambda_prefix();
  const int ls = h.basis.lambda_suffix();
  if (lp < 0 || ls < 0) throw ConfigError("empty word missing from basis");
  const int max_rank = static_cast<int>(std::min(h.h_lambda.rows(), h.h_lambda.cols()));
  if (k < 1 || k > max_rank) {
    throw ConfigError("rank " + std::to_string(k) + " out of range [1, " + std::to_string(max_rank) + "]");
  }
  const Factorization f = svd_truncated(h.h_lambda, k);
  const Matrix p_pinv = pinv(f.p);
  const Matrix s_pinv = pinv(f.s);
  std::vector<Matrix> trans;
  trans.reserve(h.h_sigma.size());
  for (const Matrix& hs : h.h_sigma) trans.push_back(p_pinv * hs * s_pinv);
  return Wfa(h.basis.alphabet(), f.p.row(lp).transpose(), f.s.col(ls), std::move(trans));
}

}  // namespace nlwfa

#endif  // NLWFA_SPECTRAL_HPP_
