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

#include "kgalign/inference.hpp"
#include "test_support.hpp"

namespace kgalign {
namespace {

using testing::random_matrix;

// Oracle: 1 + number of candidates strictly ahead of gold under (distance, id).
std::int64_t oracle_rank(const Vector& query, const Matrix& ht,
                         std::span<const EntityId> candidates, EntityId gold) {
  const double dg = (ht.row(gold).transpose() - query).squaredNorm();
  std::int64_t ahead = 0;
  for (EntityId c : candidates) {
    const double d = (ht.row(c).transpose() - query).squaredNorm();
    if (d < dg || (d == dg && c < gold)) ++ahead;
  }
  return ahead + 1;
}

double oracle_hits(const std::vector<std::int64_t>& ranks, int k) {
  double n = 0;
  for (auto r : ranks) n += r <= k ? 1.0 : 0.0;
  return n / static_cast<double>(ranks.size());
}

double oracle_mrr(const std::vector<std::int64_t>& ranks) {
  double s = 0;
  for (auto r : ranks) s += 1.0 / static_cast<double>(r);
  return s / static_cast<double>(ranks.size());
}

TEST(Strategy, ParseAndFormat) {
  for (auto s : {ConsolidationStrategy::kHighestConfidence, ConsolidationStrategy::kSimpleAverage,
                 ConsolidationStrategy::kSoftmaxWeightedAverage}) {
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  }
  EXPECT_THROW(parse_strategy("median"), std::invalid_argument);
}

TEST(Consolidate, SoftmaxHandExample) {
  const std::vector<TranslationRecord> records = {{Vector::Unit(2, 0), 2},
                                                  {Vector::Unit(2, 1), 4}};
  const Vector out = consolidate(records, ConsolidationStrategy::kSoftmaxWeightedAverage,
                                 Vector::Zero(2));
  EXPECT_NEAR(out(0), 1.0 / (1.0 + std::exp(2.0)), 1e-12);
  EXPECT_NEAR(out(0), 0.119, 1e-3);
  EXPECT_NEAR(out(1), 0.881, 1e-3);
  EXPECT_EQ(consolidate(records, ConsolidationStrategy::kHighestConfidence, Vector::Zero(2)),
            Vector::Unit(2, 1));
  EXPECT_EQ(consolidate(records, ConsolidationStrategy::kSimpleAverage, Vector::Zero(2)),
            Vector::Constant(2, 0.5));
}

TEST(Consolidate, OppositeVectorsCancel) {
  const Vector v = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const std::vector<TranslationRecord> records = {{v, 3}, {-v, 3}};
  for (auto s : {ConsolidationStrategy::kSimpleAverage,
                 ConsolidationStrategy::kSoftmaxWeightedAverage}) {
    EXPECT_LT(consolidate(records, s, Vector::Ones(3)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Consolidate, EqualConfidenceSoftmaxEqualsMean) {
  std::mt19937_64 rng(1);
  std::vector<TranslationRecord> records;
  for (int i = 0; i < 6; ++i) records.push_back({random_matrix(4, 1, rng).col(0), 2});
  const Vector a = consolidate(records, ConsolidationStrategy::kSimpleAverage, Vector::Zero(4));
  const Vector b =
      consolidate(records, ConsolidationStrategy::kSoftmaxWeightedAverage, Vector::Zero(4));
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Consolidate, TiesAndFallback) {
  const std::vector<TranslationRecord> tied = {{Vector::Unit(2, 0), 5}, {Vector::Unit(2, 1), 5}};
  EXPECT_EQ(consolidate(tied, ConsolidationStrategy::kHighestConfidence, Vector::Zero(2)),
            Vector::Unit(2, 0));
  const Vector fallback = Vector::Constant(2, 7.0);
  for (auto s : {ConsolidationStrategy::kHighestConfidence, ConsolidationStrategy::kSimpleAverage,
                 ConsolidationStrategy::kSoftmaxWeightedAverage}) {
    EXPECT_EQ(consolidate({}, s, fallback), fallback);
  }
  // Large confidences must not overflow.
  const std::vector<TranslationRecord> big = {{Vector::Unit(2, 0), 1000}, {Vector::Unit(2, 1), 1000}};
  EXPECT_TRUE(all_finite(
      consolidate(big, ConsolidationStrategy::kSoftmaxWeightedAverage, Vector::Zero(2))));
}

TEST(RankCandidates, MatchesSortOracleWithIdTies) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix ht = random_matrix(25, 3, rng);
    const Vector q = random_matrix(3, 1, rng).col(0);
    std::vector<EntityId> cand(25);
    std::iota(cand.begin(), cand.end(), 0);
    std::shuffle(cand.begin(), cand.end(), rng);
    cand.resize(15);
    const auto ranked = rank_candidates(q, ht, cand);
    ASSERT_EQ(ranked.size(), cand.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      EXPECT_EQ(oracle_rank(q, ht, cand, ranked[i]), static_cast<std::int64_t>(i + 1));
    }
  }
  const Matrix dup = (Matrix(3, 1) << 2.0, 1.0, 1.0).finished();
  const std::vector<EntityId> all = {2, 0, 1};
  EXPECT_EQ(rank_candidates(Vector::Zero(1), dup, all), (std::vector<EntityId>{1, 2, 0}));
  EXPECT_THROW(rank_candidates(Vector::Zero(1), dup, {}), std::invalid_argument);
  EXPECT_THROW(rank_candidates(Vector::Zero(2), dup, all), std::invalid_argument);
}

TEST(Metrics, HandExamples) {
  const std::vector<std::int64_t> a = {1, 2, 11};
  EXPECT_DOUBLE_EQ(hits_at_k(a, 10), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(hits_at_k(a, 1), 1.0 / 3.0);
  const std::vector<std::int64_t> b = {1, 1, 4};
  EXPECT_DOUBLE_EQ(mean_reciprocal_rank(b), 0.75);
  EXPECT_THROW(hits_at_k({}, 1), std::invalid_argument);
  EXPECT_THROW(hits_at_k(a, 0), std::invalid_argument);
  EXPECT_THROW(mean_reciprocal_rank({}), std::invalid_argument);
  const std::vector<std::int64_t> bad = {0};
  EXPECT_THROW(mean_reciprocal_rank(bad), std::invalid_argument);
}

TEST(Metrics, BoundsAndMonotonicity) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> r(1, 40);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::int64_t> ranks(1 + trial % 17);
    for (auto& x : ranks) x = r(rng);
    double prev = 0.0;
    for (int k = 1; k <= 45; ++k) {
      const double h = hits_at_k(ranks, k);
      EXPECT_GE(h, prev);
      EXPECT_LE(h, 1.0);
      EXPECT_DOUBLE_EQ(h, oracle_hits(ranks, k));
      prev = h;
    }
    const double mrr = mean_reciprocal_rank(ranks);
    EXPECT_GT(mrr, 0.0);
    EXPECT_LE(mrr, 1.0);
    EXPECT_GE(mrr, hits_at_k(ranks, 1));
    EXPECT_NEAR(mrr, oracle_mrr(ranks), 1e-12);
  }
}

AlignmentSeedSet identity_seeds(EntityId n, EntityId n_train) {
  std::vector<SeedPair> pairs;
  for (EntityId i = 0; i < n; ++i) {
    pairs.push_back({i, i, i < n_train ? Partition::kTrain : Partition::kTest});
  }
  return AlignmentSeedSet(pairs);
}

TEST(EvaluateAlignment, MatchesBruteForce) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const EntityId n = 50;
    const Matrix ht = random_matrix(n, 4, rng);
    const Matrix queries = ht + random_matrix(n, 4, rng, 0.8);
    const auto seeds = identity_seeds(n, 15);
    const KnowledgeGraph target(n, 1, 1, {});
    const auto cand = default_candidates(target, seeds);
    ASSERT_EQ(cand.size(), 35u);
    EXPECT_TRUE(std::is_sorted(cand.begin(), cand.end()));
    const auto report = evaluate_alignment(queries, ht, seeds, cand, Direction::kReversed);
    EXPECT_EQ(report.direction, Direction::kReversed);
    ASSERT_EQ(report.rows.size(), 35u);
    std::vector<std::int64_t> ranks;
    for (const auto& row : report.rows) {
      const auto r = oracle_rank(queries.row(row.entity).transpose(), ht, cand, row.gold);
      EXPECT_EQ(row.rank, r);
      EXPECT_EQ(row.top.size(), 10u);
      if (row.rank <= 10) EXPECT_EQ(row.top[static_cast<std::size_t>(row.rank - 1)], row.gold);
      ranks.push_back(r);
    }
    EXPECT_EQ(report.ranks(), ranks);
    EXPECT_DOUBLE_EQ(report.hits1, oracle_hits(ranks, 1));
    EXPECT_DOUBLE_EQ(report.hits10, oracle_hits(ranks, 10));
    EXPECT_NEAR(report.mrr, oracle_mrr(ranks), 1e-12);
  }
}

TEST(EvaluateAlignment, ExactQueriesScorePerfectly) {
  std::mt19937_64 rng(5);
  const Matrix ht = random_matrix(30, 5, rng);
  const auto seeds = identity_seeds(30, 10);
  const KnowledgeGraph target(30, 1, 1, {});
  const auto report =
      evaluate_alignment(ht, ht, seeds, default_candidates(target, seeds), Direction::kForward);
  EXPECT_DOUBLE_EQ(report.hits1, 1.0);
  EXPECT_DOUBLE_EQ(report.mrr, 1.0);
}

TEST(EvaluateAlignment, Errors) {
  const Matrix ht = Matrix::Identity(4, 4);
  const auto seeds = identity_seeds(4, 2);
  const std::vector<EntityId> missing_gold = {3};
  EXPECT_THROW(evaluate_alignment(ht, ht, seeds, missing_gold, Direction::kForward),
               std::invalid_argument);
  const auto train_only = identity_seeds(4, 4);
  const std::vector<EntityId> all = {0, 1, 2, 3};
  EXPECT_THROW(evaluate_alignment(ht, ht, train_only, all, Direction::kForward),
               std::invalid_argument);
}

TEST(TranslateQueries, IdentityTranslatorReproducesSourceRows) {
  std::mt19937_64 rng(6);
  const auto source = testing::random_graph(30, 2, 1, 0.15, rng);
  const Matrix hs = random_matrix(30, 4, rng);
  const auto seeds = identity_seeds(30, 10);
  std::mt19937_64 model_rng(7);
  SequenceModels models({4, 6, true}, model_rng);
  InferenceOptions options;
  options.walks.length = 6;
  options.walks_per_entity = 3;
  options.batch_size = 7;
  const Matrix q = translate_queries(source, seeds, hs, models, options, rng);
  ASSERT_EQ(q.rows(), hs.rows());
  EXPECT_LT((q - hs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TranslateWalks, ConfidenceCountsAnchors) {
  std::mt19937_64 rng(8);
  const Matrix hs = random_matrix(5, 3, rng);
  std::mt19937_64 model_rng(9);
  SequenceModels models({3, 4, true}, model_rng);
  const std::vector<RandomWalk> walks = {{GraphSide::kSource, {0, 1, 2}},
                                         {GraphSide::kSource, {3, 4, 3}}};
  const std::vector<bool> anchor = {true, false, true, true, false};
  const auto out = translate_walks(walks, anchor, hs, models, 1);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].confidence, 2);
  EXPECT_EQ(out[1].confidence, 2);
  EXPECT_EQ(out[0].outputs.rows(), 3);
  const auto records = collect_translations(3, out);
  EXPECT_EQ(records.size(), 2u);
  const auto all = collect_all_translations(out);
  EXPECT_EQ(all.at(3).size(), 2u);
  EXPECT_EQ(all.at(0).size(), 1u);
  EXPECT_THROW(translate_walks(walks, anchor, hs, models, 0), std::invalid_argument);
}

TEST(Report, WriteReadRoundTrip) {
  std::mt19937_64 rng(10);
  const Matrix ht = random_matrix(40, 3, rng);
  const auto seeds = identity_seeds(40, 12);
  const KnowledgeGraph target(40, 1, 1, {});
  const auto report = evaluate_alignment(ht + random_matrix(40, 3, rng, 0.5), ht, seeds,
                                         default_candidates(target, seeds), Direction::kForward);
  std::stringstream io;
  write_report(io, report);
  const std::string text = io.str();
  EXPECT_EQ(text.rfind("entity,gold,rank,top1,", 0), 0u);
  EXPECT_NE(text.find("\nhits@1,hits@10,mrr\n"), std::string::npos);
  const auto back = read_report(io);
  EXPECT_EQ(back.rows, report.rows);
  EXPECT_EQ(back.hits1, report.hits1);
  EXPECT_EQ(back.hits10, report.hits10);
  EXPECT_EQ(back.mrr, report.mrr);
  std::istringstream empty("");
  EXPECT_THROW(read_report(empty), std::runtime_error);
}

}  // namespace
}  // namespace kgalign
