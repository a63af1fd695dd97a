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

#ifndef KGALIGN_INFERENCE_HPP_
#define KGALIGN_INFERENCE_HPP_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgalign/data_io.hpp"
#include "kgalign/translation.hpp"
#include "kgalign/walks.hpp"

namespace kgalign {

enum class ConsolidationStrategy {
  kHighestConfidence,
  kSimpleAverage,
  kSoftmaxWeightedAverage,
};

std::string to_string(ConsolidationStrategy s);
ConsolidationStrategy parse_strategy(const std::string& s);

struct TranslationRecord {
  Vector vector;
  int confidence = 0;
};

// A source-graph walk with its translator output (one row per position).
struct TranslatedWalk {
  RandomWalk walk;
  int confidence = 0;
  Matrix outputs;
};

// Walks through every entity in `starts`, sampled over the source graph with
// source-side anchors, then fed through the translator in batches.
std::vector<TranslatedWalk> translate_walks(std::span<const RandomWalk> walks,
                                            const std::vector<bool>& is_anchor,
                                            const Matrix& hs, SequenceModels& models,
                                            std::size_t batch_size);

// One record per occurrence of `entity`, in walk order.
std::vector<TranslationRecord> collect_translations(EntityId entity,
                                                    std::span<const TranslatedWalk> walks);

// Same as collect_translations for every entity at once.
std::unordered_map<EntityId, std::vector<TranslationRecord>> collect_all_translations(
    std::span<const TranslatedWalk> walks);

// Empty records yield `fallback`.
Vector consolidate(std::span<const TranslationRecord> records,
                   ConsolidationStrategy strategy, const Vector& fallback);

// Candidates by ascending squared distance to `query`, ties to the smaller id.
std::vector<EntityId> rank_candidates(const Vector& query, const Matrix& ht,
                                      std::span<const EntityId> candidates);

double hits_at_k(std::span<const std::int64_t> ranks, int k);
double mean_reciprocal_rank(std::span<const std::int64_t> ranks);

struct ReportRow {
  EntityId entity = 0;
  EntityId gold = 0;
  std::int64_t rank = 0;
  std::vector<EntityId> top;
  bool operator==(const ReportRow&) const = default;
};

struct AlignmentReport {
  std::vector<ReportRow> rows;
  double hits1 = 0.0;
  double hits10 = 0.0;
  double mrr = 0.0;
  Direction direction = Direction::kForward;

  std::vector<std::int64_t> ranks() const;
};

// Target entities not used by any train seed, ascending.
std::vector<EntityId> default_candidates(const KnowledgeGraph& target,
                                         const AlignmentSeedSet& seeds);

// `queries` has one row per source entity. Ranks every test pair's source
// query against `candidates` in Ht.
AlignmentReport evaluate_alignment(const Matrix& queries, const Matrix& ht,
                                   const AlignmentSeedSet& seeds,
                                   std::span<const EntityId> candidates,
                                   Direction direction);

struct InferenceOptions {
  WalkOptions walks;
  int walks_per_entity = 5;
  ConsolidationStrategy strategy = ConsolidationStrategy::kSoftmaxWeightedAverage;
  std::size_t batch_size = 64;
};

// Translated query matrix: row e is the consolidated translation of source
// entity e, or Hs[e] for rows that are never visited.
Matrix translate_queries(const KnowledgeGraph& source, const AlignmentSeedSet& seeds,
                         const Matrix& hs, SequenceModels& models,
                         const InferenceOptions& options, std::mt19937_64& rng);

// CSV: "entity,gold,rank,top1,...,top10" rows, then "hits@1,hits@10,mrr" and
// one line of values.
void write_report(std::ostream& out, const AlignmentReport& report);
void write_report(const std::filesystem::path& path, const AlignmentReport& report);
AlignmentReport read_report(std::istream& in);
AlignmentReport read_report(const std::filesystem::path& path);

}  // namespace kgalign

#endif  // KGALIGN_INFERENCE_HPP_
