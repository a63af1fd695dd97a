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

#ifndef KGALIGN_NAMES_HPP_
#define KGALIGN_NAMES_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string_view>

#include "kgalign/kg.hpp"
#include "kgalign/tensor.hpp"

namespace kgalign {

// id -> unit-norm name vector, all of one dimension.
class NameEmbeddingTable {
 public:
  NameEmbeddingTable() = default;
  explicit NameEmbeddingTable(Index dim);

  Index dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(std::int64_t id) const { return vectors_.count(id) != 0; }
  const Vector& at(std::int64_t id) const;
  // Stores `v` as given; throws on wrong dimension or non-finite values.
  void set(std::int64_t id, Vector v);
  const std::map<std::int64_t, Vector>& vectors() const { return vectors_; }

  bool operator==(const NameEmbeddingTable&) const;

 private:
  Index dim_ = 0;
  std::map<std::int64_t, Vector> vectors_;
};

// Reads "id\tv1 v2 ... vD" lines and L2-normalises every vector.
NameEmbeddingTable load_pretrained_vectors(const std::filesystem::path& path,
                                           Index expected_dim);
void save_vectors(const std::filesystem::path& path,
                  const NameEmbeddingTable& table);

// Deterministic unit vector derived from (label, salt). An empty label falls
// back to `fallback_id` so unlabeled entities still get distinct vectors.
Vector hash_fallback_embedding(std::string_view label, Index dim,
                               std::uint64_t salt, std::int64_t fallback_id = 0);

// N x dim matrix of entity name vectors: table rows where present, otherwise
// the hash fallback of the entity's label (or id).
Matrix resolve_entity_names(const KnowledgeGraph& kg,
                            const NameEmbeddingTable* table, Index dim,
                            std::uint64_t salt);

// Adds N(0, sigma^2) per coordinate to every vector, then re-normalises.
NameEmbeddingTable perturb_names(const NameEmbeddingTable& table, double sigma,
                                 std::mt19937_64& rng);

}  // namespace kgalign

#endif  // KGALIGN_NAMES_HPP_
