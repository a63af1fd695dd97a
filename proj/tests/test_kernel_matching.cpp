/*
 * Copyright 2026 The kgalign Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "kgalign/kernel_matching.hpp"
#include "test_support.hpp"

namespace kgalign {
namespace {

using testing::numeric_gradient;
using testing::random_matrix;
using testing::relative_error;

const CriticFn kIdentity = [](const ad::Var& x) { return x; };

std::vector<SeedPair> diagonal_seeds(EntityId n) {
  std::vector<SeedPair> seeds;
  for (EntityId i = 0; i < n; ++i) seeds.push_back({i, i, Partition::kTrain});
  return seeds;
}

TEST(EmpiricalMmd, ZeroForIdenticalSets) {
  std::mt19937_64 rng(1);
  Critic critic({6, 16, 8}, rng);
  const Matrix x = random_matrix(20, 6, rng);
  EXPECT_DOUBLE_EQ(empirical_mmd(x, x, [&](const ad::Var& v) { return critic.forward(v); }),
                   0.0);
}

TEST(EmpiricalMmd, IdentityCriticHandValues) {
  const Matrix ones = Matrix::Ones(1, 2);
  EXPECT_DOUBLE_EQ(empirical_mmd(ones, Matrix::Zero(1, 2), kIdentity), 2.0);
  std::mt19937_64 rng(2);
  const Matrix x = random_matrix(7, 3, rng);
  const Eigen::RowVectorXd c = random_matrix(1, 3, rng).row(0);
  const Matrix shifted = x.rowwise() + c;
  EXPECT_NEAR(empirical_mmd(shifted, x, kIdentity), c.squaredNorm(), 1e-12);
}

TEST(EmpiricalMmd, NonNegativeSymmetricAndPermutationInvariant) {
  std::mt19937_64 rng(3);
  Critic critic({4, 8, 5}, rng);
  const CriticFn f = [&](const ad::Var& v) { return critic.forward(v); };
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(9, 4, rng);
    const Matrix b = random_matrix(12, 4, rng, 2.0);
    const double ab = empirical_mmd(a, b, f);
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, empirical_mmd(b, a, f), 1e-12);
    std::vector<Index> perm(9);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix pa(9, 4);
    for (Index i = 0; i < 9; ++i) pa.row(i) = a.row(perm[static_cast<std::size_t>(i)]);
    EXPECT_NEAR(empirical_mmd(pa, b, f), ab, 1e-12);
  }
}

TEST(EmpiricalMmd, RejectsEmptyAndMismatchedInputs) {
  EXPECT_THROW(empirical_mmd(Matrix(0, 2), Matrix::Ones(1, 2), kIdentity),
               std::invalid_argument);
  EXPECT_THROW(empirical_mmd(Matrix::Ones(1, 3), Matrix::Ones(1, 2), kIdentity),
               std::invalid_argument);
}

TEST(Critic, OutputIsBoundedAndShaped) {
  std::mt19937_64 rng(4);
  Critic critic({3, 10, 4}, rng);
  const Matrix out = critic.apply(random_matrix(15, 3, rng, 100.0));
  EXPECT_EQ(out.rows(), 15);
  EXPECT_EQ(out.cols(), 4);
  EXPECT_LE(out.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_THROW(Critic({0, 1, 1}, rng), std::invalid_argument);
}

TEST(Critic, CheckpointRoundTrip) {
  testing::TempDir dir;
  std::mt19937_64 r1(5), r2(6);
  Critic a({3, 4, 2}, r1), b({3, 4, 2}, r2);
  a.save(dir.path() / "critic.ckpt");
  b.load(dir.path() / "critic.ckpt");
  const Matrix x = random_matrix(4, 3, r1);
  EXPECT_EQ(a.apply(x), b.apply(x));
}

TEST(SampleNegatives, ExcludesPositiveAndCountsMatch) {
  const auto seeds = diagonal_seeds(10);
  std::mt19937_64 rng(7);
  const auto neg = sample_negatives(seeds, 30, 25, 50, rng);
  ASSERT_EQ(neg.size(), 10u * 2u * 50u);
  for (std::size_t i = 0; i < neg.size(); ++i) {
    const auto& p = seeds[neg[i].positive];
    const bool corrupt_target = (i % 100) < 50;
    if (corrupt_target) {
      EXPECT_EQ(neg[i].source, p.source);
      EXPECT_NE(neg[i].target, p.target);
      EXPECT_GE(neg[i].target, 0);
      EXPECT_LT(neg[i].target, 25);
    } else {
      EXPECT_EQ(neg[i].target, p.target);
      EXPECT_NE(neg[i].source, p.source);
      EXPECT_GE(neg[i].source, 0);
      EXPECT_LT(neg[i].source, 30);
    }
  }
}

TEST(SampleNegatives, CoversEveryOtherEntity) {
  const std::vector<SeedPair> seed = {{2, 3, Partition::kTrain}};
  std::mt19937_64 rng(8);
  const auto neg = sample_negatives(seed, 6, 6, 1000, rng);
  std::vector<int> hits(6, 0);
  for (std::size_t i = 0; i < 1000; ++i) ++hits[static_cast<std::size_t>(neg[i].target)];
  EXPECT_EQ(hits[3], 0);
  for (int t : {0, 1, 2, 4, 5}) EXPECT_GT(hits[static_cast<std::size_t>(t)], 150);
}

TEST(SampleNegatives, DeterministicAndValidated) {
  const auto seeds = diagonal_seeds(4);
  std::mt19937_64 r1(9), r2(9);
  EXPECT_EQ(sample_negatives(seeds, 8, 8, 3, r1), sample_negatives(seeds, 8, 8, 3, r2));
  EXPECT_THROW(sample_negatives(seeds, 8, 8, 0, r1), std::invalid_argument);
  EXPECT_THROW(sample_negatives(seeds, 1, 8, 1, r1), std::invalid_argument);
}

TEST(TripletLoss, HandCases) {
  const std::vector<SeedPair> pos = {{0, 0, Partition::kTrain}};
  const std::vector<NegativePair> neg = {{0, 0, 1}};
  const ad::Var hs = ad::constant(Matrix::Zero(1, 2));
  // d(pos) = 0, d(neg) = 1.
  const ad::Var ht = ad::constant((Matrix(2, 2) << 0, 0, 1, 0).finished());
  EXPECT_DOUBLE_EQ(triplet_loss(pos, neg, hs, ht, 1.0).scalar(), 0.0);
  EXPECT_DOUBLE_EQ(triplet_loss(pos, neg, hs, ht, 2.0).scalar(), 1.0);
  // d(pos) = 1, d(neg) = 0.7.
  const ad::Var ht2 = ad::constant((Matrix(2, 2) << 1, 0, 0, std::sqrt(0.7)).finished());
  EXPECT_NEAR(triplet_loss(pos, neg, hs, ht2, 1.0).scalar(), 1.3, 1e-12);
  EXPECT_THROW(triplet_loss({}, neg, hs, ht, 1.0), std::invalid_argument);
  EXPECT_THROW(triplet_loss(pos, {}, hs, ht, 1.0), std::invalid_argument);
}

TEST(TripletLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  const auto seeds = diagonal_seeds(6);
  for (int trial = 0; trial < 20; ++trial) {
    Parameter hs("hs", random_matrix(8, 5, rng));
    Parameter ht("ht", random_matrix(7, 5, rng));
    const auto neg = sample_negatives(seeds, 8, 7, 3, rng);
    auto build = [&] { return triplet_loss(seeds, neg, ad::param(hs), ad::param(ht), 1.0); };
    hs.zero_grad();
    ht.zero_grad();
    ad::backward(build());
    auto loss = [&] { return build().scalar(); };
    EXPECT_LT(relative_error(hs.grad(), numeric_gradient(hs, loss)), 1e-6);
    EXPECT_LT(relative_error(ht.grad(), numeric_gradient(ht, loss)), 1e-6);
  }
}

TEST(EmpiricalMmd, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Critic critic({4, 6, 3}, rng);
    Parameter hs("hs", random_matrix(5, 4, rng));
    Parameter ht("ht", random_matrix(6, 4, rng));
    const CriticFn f = [&](const ad::Var& v) { return critic.forward(v); };
    auto build = [&] { return empirical_mmd(ad::param(hs), ad::param(ht), f); };
    hs.zero_grad();
    ht.zero_grad();
    for (auto* p : critic.parameters()) p->zero_grad();
    ad::backward(build());
    auto loss = [&] { return build().scalar(); };
    EXPECT_LT(relative_error(hs.grad(), numeric_gradient(hs, loss)), 1e-5);
    EXPECT_LT(relative_error(ht.grad(), numeric_gradient(ht, loss)), 1e-5);
    for (auto* p : critic.parameters()) {
      EXPECT_LT(relative_error(p->grad(), numeric_gradient(*p, loss)), 1e-5) << p->name();
    }
  }
}

struct FreeEmbeddings {
  Parameter hs, ht;
  FreeEmbeddings(Index n, Index d, std::mt19937_64& rng)
      : hs("hs", random_matrix(n, d, rng)), ht("ht", random_matrix(n, d, rng)) {}
  AdversarialMatcher::Generator generator() {
    return [this] { return std::pair{ad::param(hs), ad::param(ht)}; };
  }
  double mean_seed_distance(std::span<const SeedPair> seeds) const {
    double d = 0.0;
    for (const auto& p : seeds) d += (hs.value().row(p.source) - ht.value().row(p.target)).squaredNorm();
    return d / static_cast<double>(seeds.size());
  }
};

TEST(AdversarialMatcher, PureTripletPullsSeedsTogether) {
  std::mt19937_64 rng(12);
  FreeEmbeddings emb(20, 6, rng);
  const auto all = diagonal_seeds(20);
  const std::vector<SeedPair> train(all.begin(), all.begin() + 10);
  MatchingConfig config;
  config.mmd_weight = 0.0;
  config.encoder_learning_rate = 1e-2;
  AdversarialMatcher matcher(emb.generator(), {&emb.hs, &emb.ht}, nullptr, config);
  const double before = emb.mean_seed_distance(train);
  for (int i = 0; i < 50; ++i) {
    const auto loss = matcher.step(train, 20, 20, rng);
    EXPECT_EQ(loss.mmd, 0.0);
    EXPECT_DOUBLE_EQ(loss.total, loss.triplet);
  }
  EXPECT_EQ(matcher.steps_taken(), 50);
  EXPECT_LT(emb.mean_seed_distance(train), before);
}

TEST(AdversarialMatcher, CriticPhaseAscendsMmd) {
  std::mt19937_64 rng(13);
  FreeEmbeddings emb(30, 4, rng);
  emb.ht.value().array() += 0.5;
  Critic critic({4, 16, 8}, rng);
  MatchingConfig config;
  config.critic_learning_rate = 1e-3;
  AdversarialMatcher matcher(emb.generator(), {&emb.hs, &emb.ht}, &critic, config);
  const Matrix hs_before = emb.hs.value();
  const auto history = matcher.critic_phase(30);
  ASSERT_EQ(history.size(), 30u);
  for (std::size_t i = 1; i < history.size(); ++i) EXPECT_GE(history[i], history[i - 1] - 1e-12);
  EXPECT_GT(history.back(), history.front());
  // The generator is frozen while the critic trains.
  EXPECT_EQ(emb.hs.value(), hs_before);
}

TEST(AdversarialMatcher, NonFiniteLossThrows) {
  std::mt19937_64 rng(14);
  FreeEmbeddings emb(5, 3, rng);
  emb.hs.value()(0, 0) = std::numeric_limits<double>::quiet_NaN();
  AdversarialMatcher matcher(emb.generator(), {&emb.hs, &emb.ht}, nullptr, MatchingConfig{});
  const auto seeds = diagonal_seeds(3);
  EXPECT_THROW(matcher.step(seeds, 5, 5, rng), TrainingError);
}

TEST(AdversarialMatcher, RejectsBadConfig) {
  std::mt19937_64 rng(15);
  FreeEmbeddings emb(5, 3, rng);
  MatchingConfig config;
  config.margin = 0.0;
  EXPECT_THROW(AdversarialMatcher(emb.generator(), {&emb.hs}, nullptr, config),
               std::invalid_argument);
}

TEST(MatchingCsv, HeaderAndRow) {
  std::ostringstream out;
  write_matching_csv_header(out);
  write_matching_csv_row(out, {3, 0.5, 1.25, 1.75});
  EXPECT_EQ(out.str(), "step,mmd,triplet,total\n3,0.5,1.25,1.75\n");
}

}  // namespace
}  // namespace kgalign
