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

#ifndef KGALIGN_KG_HPP_
#define KGALIGN_KG_HPP_

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "kgalign/tensor.hpp"

namespace kgalign {

using EntityId = std::int64_t;
using RelationId = std::int64_t;
using AttributeId = std::int64_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;
  auto operator<=>(const Triple&) const = default;
};

struct AttributeAssertion {
  EntityId entity = 0;
  AttributeId attribute = 0;
  auto operator<=>(const AttributeAssertion&) const = default;
};

// A knowledge graph over dense ids. Triples and assertions are stored sorted
// and deduplicated; construction throws std::invalid_argument on any id out
// of range or an empty id space.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  KnowledgeGraph(std::int64_t n_entities, std::int64_t n_relations,
                 std::int64_t n_attributes, std::vector<Triple> triples,
                 std::vector<AttributeAssertion> assertions = {},
                 std::vector<std::string> labels = {});

  std::int64_t num_entities() const { return n_entities_; }
  std::int64_t num_relations() const { return n_relations_; }
  std::int64_t num_attributes() const { return n_attributes_; }
  const std::vector<Triple>& triples() const { return triples_; }
  const std::vector<AttributeAssertion>& assertions() const {
    return assertions_;
  }
  // Either empty or one label per entity.
  const std::vector<std::string>& labels() const { return labels_; }
  bool has_labels() const { return !labels_.empty(); }

  // Undirected neighbour lists (sorted, no self entries) from the triples.
  std::vector<std::vector<EntityId>> neighbors() const;

  bool operator==(const KnowledgeGraph&) const = default;

 private:
  std::int64_t n_entities_ = 0;
  std::int64_t n_relations_ = 0;
  std::int64_t n_attributes_ = 0;
  std::vector<Triple> triples_;
  std::vector<AttributeAssertion> assertions_;
  std::vector<std::string> labels_;
};

enum class Partition { kTrain, kTest };

struct SeedPair {
  EntityId source = 0;
  EntityId target = 0;
  Partition partition = Partition::kTest;
  bool operator==(const SeedPair&) const = default;
};

// Known aligned pairs. Enforces 1-to-1: no source or target id repeats.
class AlignmentSeedSet {
 public:
  AlignmentSeedSet() = default;
  explicit AlignmentSeedSet(std::vector<SeedPair> pairs);

  const std::vector<SeedPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  std::vector<SeedPair> train() const;
  std::vector<SeedPair> test() const;

  bool operator==(const AlignmentSeedSet&) const = default;

 private:
  std::vector<SeedPair> pairs_;
};

enum class ViewKind { kEntity, kRelation, kAttribute };

struct AdjacencyView {
  ViewKind kind = ViewKind::kEntity;
  SparseMatrix matrix;
};

// D^{-1/2}(A+I)D^{-1/2} over the undirected, binarised triple graph.
AdjacencyView build_entity_adjacency(const KnowledgeGraph& kg);
// Entity x relation incidence counts, rows normalised to sum 1.
AdjacencyView build_relation_adjacency(const KnowledgeGraph& kg);
// Entity x attribute presence, rows normalised to sum 1.
AdjacencyView build_attribute_adjacency(const KnowledgeGraph& kg);

struct GraphViews {
  AdjacencyView entity;
  AdjacencyView relation;
  AdjacencyView attribute;
};

GraphViews build_views(const KnowledgeGraph& kg);

}  // namespace kgalign

#endif  // KGALIGN_KG_HPP_
