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

#include "kgalign/kg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace kgalign {

namespace {

void check_range(std::int64_t id, std::int64_t n, const char* what) {
  if (id < 0 || id >= n) {
    throw std::invalid_argument(std::string(what) + " id " + std::to_string(id) +
                                " out of range [0, " + std::to_string(n) + ")");
  }
}

template <typename T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

SparseMatrix row_normalized(Index rows, Index cols,
                            std::vector<Eigen::Triplet<double>> entries) {
  SparseMatrix m(rows, cols);
  // setFromTriplets sums duplicates, which gives incidence counts.
  m.setFromTriplets(entries.begin(), entries.end());
  for (Index r = 0; r < m.outerSize(); ++r) {
    double total = 0.0;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) total += it.value();
    if (total > 0.0) {
      for (SparseMatrix::InnerIterator it(m, r); it; ++it) it.valueRef() /= total;
    }
  }
  m.makeCompressed();
  return m;
}

}  // namespace

KnowledgeGraph::KnowledgeGraph(std::int64_t n_entities, std::int64_t n_relations,
                               std::int64_t n_attributes,
                               std::vector<Triple> triples,
                               std::vector<AttributeAssertion> assertions,
                               std::vector<std::string> labels)
    : n_entities_(n_entities),
      n_relations_(n_relations),
      n_attributes_(n_attributes),
      triples_(std::move(triples)),
      assertions_(std::move(assertions)),
      labels_(std::move(labels)) {
  if (n_entities_ < 1 || n_relations_ < 1 || n_attributes_ < 1) {
    throw std::invalid_argument(
        "knowledge graph needs at least one entity, relation and attribute");
  }
  for (const auto& t : triples_) {
    check_range(t.head, n_entities_, "entity");
    check_range(t.tail, n_entities_, "entity");
    check_range(t.relation, n_relations_, "relation");
  }
  for (const auto& a : assertions_) {
    check_range(a.entity, n_entities_, "entity");
    check_range(a.attribute, n_attributes_, "attribute");
  }
  if (!labels_.empty() && static_cast<std::int64_t>(labels_.size()) != n_entities_) {
    throw std::invalid_argument("label count " + std::to_string(labels_.size()) +
                                " does not match entity count " +
                                std::to_string(n_entities_));
  }
  sort_unique(triples_);
  sort_unique(assertions_);
}

std::vector<std::vector<EntityId>> KnowledgeGraph::neighbors() const {
  std::vector<std::vector<EntityId>> adj(static_cast<std::size_t>(n_entities_));
  for (const auto& t : triples_) {
    if (t.head == t.tail) continue;
    adj[static_cast<std::size_t>(t.head)].push_back(t.tail);
    adj[static_cast<std::size_t>(t.tail)].push_back(t.head);
  }
  for (auto& list : adj) sort_unique(list);
  return adj;
}

AlignmentSeedSet::AlignmentSeedSet(std::vector<SeedPair> pairs)
    : pairs_(std::move(pairs)) {
  std::unordered_set<EntityId> sources;
  std::unordered_set<EntityId> targets;
  for (const auto& p : pairs_) {
    if (!sources.insert(p.source).second) {
      throw std::invalid_argument("source entity " + std::to_string(p.source) +
                                  " appears in more than one seed pair");
    }
    if (!targets.insert(p.target).second) {
      throw std::invalid_argument("target entity " + std::to_string(p.target) +
                                  " appears in more than one seed pair");
    }
  }
}

std::vector<SeedPair> AlignmentSeedSet::train() const {
  std::vector<SeedPair> out;
  std::copy_if(pairs_.begin(), pairs_.end(), std::back_inserter(out),
               [](const SeedPair& p) { return p.partition == Partition::kTrain; });
  return out;
}

std::vector<SeedPair> AlignmentSeedSet::test() const {
  std::vector<SeedPair> out;
  std::copy_if(pairs_.begin(), pairs_.end(), std::back_inserter(out),
               [](const SeedPair& p) { return p.partition == Partition::kTest; });
  return out;
}

AdjacencyView build_entity_adjacency(const KnowledgeGraph& kg) {
  const Index n = kg.num_entities();
  const auto adj = kg.neighbors();
  std::vector<double> inv_sqrt_degree(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    // +1 for the self-loop.
    const double degree = static_cast<double>(adj[static_cast<std::size_t>(i)].size()) + 1.0;
    inv_sqrt_degree[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(degree);
  }
  std::vector<Eigen::Triplet<double>> entries;
  for (Index i = 0; i < n; ++i) {
    const double di = inv_sqrt_degree[static_cast<std::size_t>(i)];
    entries.emplace_back(i, i, di * di);
    for (EntityId j : adj[static_cast<std::size_t>(i)]) {
      entries.emplace_back(i, j, di * inv_sqrt_degree[static_cast<std::size_t>(j)]);
    }
  }
  AdjacencyView view{ViewKind::kEntity, SparseMatrix(n, n)};
  view.matrix.setFromTriplets(entries.begin(), entries.end());
  view.matrix.makeCompressed();
  return view;
}

AdjacencyView build_relation_adjacency(const KnowledgeGraph& kg) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(kg.triples().size() * 2);
  for (const auto& t : kg.triples()) {
    entries.emplace_back(t.head, t.relation, 1.0);
    if (t.tail != t.head) entries.emplace_back(t.tail, t.relation, 1.0);
  }
  return {ViewKind::kRelation,
          row_normalized(kg.num_entities(), kg.num_relations(), std::move(entries))};
}

AdjacencyView build_attribute_adjacency(const KnowledgeGraph& kg) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(kg.assertions().size());
  // Assertions are deduplicated, so every entry is binary presence.
  for (const auto& a : kg.assertions()) entries.emplace_back(a.entity, a.attribute, 1.0);
  return {ViewKind::kAttribute,
          row_normalized(kg.num_entities(), kg.num_attributes(), std::move(entries))};
}

GraphViews build_views(const KnowledgeGraph& kg) {
  return {build_entity_adjacency(kg), build_relation_adjacency(kg),
          build_attribute_adjacency(kg)};
}

}  // namespace kgalign
