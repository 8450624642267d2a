// nlwfa_test.cpp
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

#include <cmath>

#include <gtest/gtest.h>

#include "nlwfa/hankel.hpp"
#include "nlwfa/linalg.hpp"
#include "nlwfa/nlwfa.hpp"
#include "nlwfa/serialize.hpp"
#include "nlwfa/spectral.hpp"
#include "nlwfa/wfa.hpp"

namespace nlwfa {
namespace {

const Alphabet kAb{2, {"a", "b"}};

Wfa source(std::uint64_t seed, int k, const Alphabet& a = kAb) {
  Rng rng(seed);
  return random_wfa(a, k, rng, -1.0, 1.0, 0.6);
}

HankelBlocks exact(const Wfa& w, std::size_t len = 3) { return exact_hankel_from_wfa(w, complete_basis(w.alphabet(), len, len)); }

/// NL-WFA whose parts are all the linear maps of `w`.
NlWfa as_linear_nlwfa(const Wfa& w) {
  std::vector<TransitionFn> trans;
  for (const Matrix& a : w.transitions()) trans.push_back(LinearMap{a});
  return NlWfa(w.alphabet(), w.alpha0().transpose(), std::move(trans), TerminationFn{LinearMap{Matrix(w.alpha_inf())}, 0},
               Variant::sp);
}

LearnOptions quick_options(std::uint64_t seed) {
  LearnOptions o;
  o.seed = seed;
  o.factorization_train.epochs = 150;
  o.transition_train.epochs = 150;
  return o;
}

TEST(VariantNames, RoundTrip) {
  for (Variant v : {Variant::sp, Variant::fac_non, Variant::tran_non, Variant::both_non}) {
    EXPECT_EQ(variant_from_string(to_string(v)), v);
  }
  EXPECT_THROW(variant_from_string("linear"), ConfigError);
  EXPECT_TRUE(nonlinear_factorization(Variant::fac_non));
  EXPECT_FALSE(nonlinear_transitions(Variant::fac_non));
  EXPECT_TRUE(nonlinear_transitions(Variant::tran_non));
}

TEST(NlWfaModel, LinearPartsReduceToWfa) {
  const Wfa w = spectral_learn(exact(source(1, 3)), 3);
  const NlWfa n = as_linear_nlwfa(w);
  for (const Word& x : all_words(kAb, 6)) EXPECT_NEAR(n.evaluate(x), w.evaluate(x), 1e-10);
}

TEST(NlWfaModel, EmptyWordAppliesTerminationToInitialState) {
  const NlWfa n = as_linear_nlwfa(source(2, 2));
  EXPECT_EQ(n.evaluate(Word{}), n.terminate(n.alpha0()));
  EXPECT_EQ(evaluate(n, Word{}), n.decode(n.initial_state())(0));
}

TEST(NlWfaModel, SquaredTerminationComputesKronSquare) {
  const Wfa w = source(3, 2);
  std::vector<TransitionFn> trans;
  for (const Matrix& a : w.transitions()) trans.push_back(LinearMap{a});
  const Vector ainf = w.alpha_inf();
  CustomMap square{[ainf](const Matrix& x) -> Matrix { return (x * ainf).array().square().matrix(); }, 2, 1};
  const NlWfa n(kAb, w.alpha0().transpose(), std::move(trans), TerminationFn{square, 0}, Variant::sp);
  const Wfa sq = kron_square(w);
  for (const Word& x : all_words(kAb, 5)) EXPECT_NEAR(n.evaluate(x), sq.evaluate(x), 1e-12);
}

TEST(NlWfaModel, RejectsWrongTransitionCount) {
  EXPECT_THROW(NlWfa(kAb, RowVector::Ones(1), {LinearMap{Matrix::Ones(1, 1)}}, TerminationFn{LinearMap{Matrix::Ones(1, 1)}, 0},
                     Variant::sp),
               ConfigError);
}

TEST(Factorization, LinearIsExactOnLowRank) {
  const HankelBlocks h = exact(source(4, 3));
  const EncoderPair e = train_factorization(h, 3, false, TrainConfig{});
  const Matrix rec = apply_map(e.decoder, apply_map(e.encoder, h.h_full));
  EXPECT_LT((rec - h.h_full).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE(e.loss_history.empty());
}

TEST(Factorization, RankPreconditions) {
  const HankelBlocks h = exact(source(5, 2), 1);
  EXPECT_THROW(train_factorization(h, 4, false, TrainConfig{}), ConfigError);
  FactorizationOptions o{{3}, Activation::tanh, true};
  EXPECT_THROW(train_factorization(h, 3, true, TrainConfig{}, o), ConfigError);
  FactorizationOptions asym{{2, 1}, Activation::tanh, true};
  EXPECT_THROW(train_factorization(h, 1, true, TrainConfig{}, asym), ConfigError);
}

TEST(Factorization, LinearAutoencoderReachesSvdOptimum) {
  const HankelBlocks h = exact(source(6, 4));
  const int k = 2;
  Eigen::BDCSVD<Matrix> svd(h.h_full);
  const Vector sv = svd.singularValues();
  const double optimum = 0.5 * sv.tail(sv.size() - k).squaredNorm() / static_cast<double>(h.h_full.rows());
  ASSERT_GT(optimum, 0.0);
  FactorizationOptions o{{k}, Activation::identity, false};
  const EncoderPair e = train_factorization(h, k, true, TrainConfig{6000, 8, 1, 0.005, true, 500}, o);
  const double loss = squared_error_loss(apply_map(e.decoder, apply_map(e.encoder, h.h_full)), h.h_full);
  EXPECT_LE(loss, 1.10 * optimum) << "svd optimum " << optimum;
  EXPECT_GE(loss, optimum * (1 - 1e-9));
}

TEST(Factorization, NonlinearBeatsRankKOnSquaredAutomaton) {
  // Rows of the squared automaton's Hankel lie on a k-dimensional quadratic
  // surface, which a width-k tanh bottleneck can follow but a rank-k
  // projection cannot.
  const int k = 2;
  bool beaten = false;
  for (std::uint64_t seed = 1; seed <= 3 && !beaten; ++seed) {
    // Scale the source so the squared Hankel has entries of order one.
    Rng rng(10 + seed);
    const Wfa raw = random_wfa(kAb, k, rng);
    const double peak = exact(kron_square(raw)).h_full.cwiseAbs().maxCoeff();
    const Wfa w(kAb, raw.alpha0() / std::sqrt(peak), raw.alpha_inf(), raw.transitions());
    const HankelBlocks h = exact(kron_square(w));
    Eigen::BDCSVD<Matrix> svd(h.h_full);
    const Vector sv = svd.singularValues();
    const double linear = 0.5 * sv.tail(sv.size() - k).squaredNorm() / static_cast<double>(h.h_full.rows());
    FactorizationOptions o{{2 * k, k, 2 * k}, Activation::tanh, true};
    const EncoderPair e = train_factorization(h, k, true, TrainConfig{4000, 8, seed, 0.02, true, 400}, o);
    const double loss = squared_error_loss(apply_map(e.decoder, apply_map(e.encoder, h.h_full)), h.h_full);
    beaten = loss < linear;
  }
  EXPECT_TRUE(beaten);
}

TEST(Transitions, LinearExactOnLowRank) {
  const HankelBlocks h = exact(source(7, 3));
  const EncoderPair e = train_factorization(h, 3, false, TrainConfig{});
  const TransitionSet t = train_transitions(h, e, false, TrainConfig{});
  const Matrix states = apply_map(e.encoder, h.h_lambda);
  for (Symbol s = 0; s < 2; ++s) {
    const Matrix err = apply_map(t.maps[s], states) - apply_map(e.encoder, h.h_sigma[s]);
    EXPECT_LT(err.rowwise().norm().maxCoeff(), 1e-8);
  }
}

TEST(Assemble, SpMatchesSpectralLearn) {
  const HankelBlocks h = exact(source(8, 3));
  const NlWfa n = learn_from_hankel(h, 3, Variant::sp, LearnOptions{}).model;
  const Wfa w = spectral_learn(h, 3);
  for (const Word& x : all_words(kAb, 6)) EXPECT_NEAR(n.evaluate(x), w.evaluate(x), 1e-8);
}

TEST(Assemble, SpMatchesSpectralLearnOnNoisyHankel) {
  const HankelBlocks exact_h = exact(source(9, 4));
  Rng rng(9);
  Matrix noisy = exact_h.h_full;
  for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy(i) += 0.01 * rng.uniform(-1, 1);
  const HankelBlocks h = partition_hankel(exact_h.basis, noisy);
  const NlWfa n = learn_from_hankel(h, 2, Variant::sp, LearnOptions{}).model;
  const Wfa w = spectral_learn(h, 2);
  for (const Word& x : all_words(kAb, 6)) EXPECT_NEAR(n.evaluate(x), w.evaluate(x), 1e-8);
}

TEST(Assemble, ZeroHankelGivesZeroInitialState) {
  const Basis b = complete_basis(kAb, 2, 2);
  const HankelBlocks h = partition_hankel(b, Matrix::Zero(static_cast<Eigen::Index>(b.closed_prefixes().size()),
                                                          static_cast<Eigen::Index>(b.suffixes().size())));
  const EncoderPair lin = train_factorization(h, 1, false, TrainConfig{});
  const NlWfa a = assemble(h, lin, train_transitions(h, lin, false, TrainConfig{}).maps, Variant::sp);
  EXPECT_EQ(a.alpha0().cwiseAbs().maxCoeff(), 0.0);

  Rng rng(1);
  Mlp enc({{static_cast<int>(b.suffixes().size()), 2, Activation::tanh}, {2, 1, Activation::tanh}}, rng);
  enc.set_parameters(Vector::Zero(static_cast<Eigen::Index>(enc.parameter_count())));
  const EncoderPair zero{NetworkMap{enc, {}, {}, {}, {}}, lin.decoder, {}};
  EXPECT_EQ(assemble(h, zero, a.transitions(), Variant::fac_non).alpha0().cwiseAbs().maxCoeff(), 0.0);
}

TEST(ExactFit, ExactFitReproducesPrefixValues) {
  for (int k = 1; k <= 4; ++k) {
    const HankelBlocks h = exact(source(20 + k, k));
    const LearnResult r = learn_from_hankel(h, k, Variant::sp, LearnOptions{});
    const int ls = h.basis.lambda_suffix();
    for (std::size_t i = 0; i < h.basis.prefixes().size(); ++i) {
      EXPECT_NEAR(r.model.evaluate(h.basis.prefixes()[i]), h.h_lambda(i, ls), 1e-8);
    }
    EXPECT_LT(r.objective, 1e-15);
  }
}

TEST(ExactFit, StatesTrackEncodedRowsStepwise) {
  const HankelBlocks h = exact(source(30, 3));
  const EncoderPair e = train_factorization(h, 3, false, TrainConfig{});
  const NlWfa n = assemble(h, e, train_transitions(h, e, false, TrainConfig{}).maps, Variant::sp);
  for (std::size_t i = 0; i < h.basis.prefixes().size(); ++i) {
    const RowVector state = n.advance(n.initial_state(), h.basis.prefixes()[i]);
    const RowVector target = apply_map(e.encoder, h.h_lambda.row(i));
    EXPECT_LT((state - target).norm(), 1e-9);
  }
}

TEST(Learn, ObjectiveIsFiniteForEveryVariant) {
  const HankelBlocks h = exact(source(31, 3));
  for (Variant v : {Variant::sp, Variant::fac_non, Variant::tran_non, Variant::both_non}) {
    const LearnResult r = learn_from_hankel(h, 2, v, quick_options(5));
    EXPECT_TRUE(std::isfinite(r.objective)) << to_string(v);
    EXPECT_EQ(r.model.states(), 2);
    EXPECT_EQ(r.model.variant(), v);
    EXPECT_EQ(r.factorization_loss.empty(), !nonlinear_factorization(v));
    EXPECT_EQ(r.transition_loss.size(), 2u);
    EXPECT_EQ(r.transition_loss[0].empty(), !nonlinear_transitions(v));
  }
}

TEST(Learn, SingleStringCorpus) {
  const Alphabet a{1, {"a"}};
  const SampleSet s(a, {Word{0}});
  LearnOptions o;
  o.seed = 1;
  o.factorization_train = TrainConfig{3000, 4, 0, 0.015, true, 300};
  o.transition_train = TrainConfig{3000, 4, 0, 0.01, true, 300};
  EXPECT_NEAR(learn(s, 1, Variant::both_non, o).model.evaluate(Word{0}), 1.0, 1e-3);
}

TEST(Learn, DeterministicModelBytes) {
  const HankelBlocks h = exact(source(32, 3));
  const std::string a = to_json(learn_from_hankel(h, 2, Variant::both_non, quick_options(9)).model).dump();
  const std::string b = to_json(learn_from_hankel(h, 2, Variant::both_non, quick_options(9)).model).dump();
  const std::string c = to_json(learn_from_hankel(h, 2, Variant::both_non, quick_options(10)).model).dump();
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Learn, RankOutOfRangeFailsBeforeTraining) {
  const HankelBlocks h = exact(source(33, 2), 1);
  EXPECT_THROW(learn_from_hankel(h, 4, Variant::both_non, LearnOptions{}), ConfigError);
  EXPECT_THROW(learn_from_hankel(h, 0, Variant::sp, LearnOptions{}), ConfigError);
}

TEST(Transitions, RescalingKeepsNetworkTargetsInsideTanhRange) {
  const HankelBlocks h = exact(source(34, 3));
  const EncoderPair e = train_factorization(h, 2, false, TrainConfig{});
  const TransitionSet t = train_transitions(h, e, true, TrainConfig{20, 8, 1, 0.001, true, 50});
  const Matrix encoded = apply_map(e.encoder, h.h_full);
  for (const TransitionFn& f : t.maps) {
    const auto& m = std::get<NetworkMap>(f);
    ASSERT_EQ(m.in_scale.size(), 2);
    const Matrix unit = (encoded.array().rowwise() * m.in_scale.array()).matrix().rowwise() + m.in_shift;
    EXPECT_LE(unit.cwiseAbs().maxCoeff(), 0.9 + 1e-12);
    EXPECT_NEAR(unit.cwiseAbs().maxCoeff(), 0.9, 1e-12);
  }
}

}  // namespace
}  // namespace nlwfa
