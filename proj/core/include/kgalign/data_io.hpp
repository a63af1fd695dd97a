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

#ifndef KGALIGN_DATA_IO_HPP_
#define KGALIGN_DATA_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "kgalign/kg.hpp"
#include "kgalign/names.hpp"

namespace kgalign {

enum class Direction { kForward, kReversed };

std::string to_string(Direction d);
Direction parse_direction(const std::string& s);

// Malformed dataset input. what() carries "file:line: reason" when known.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetPair {
  KnowledgeGraph source;
  KnowledgeGraph target;
  AlignmentSeedSet seeds;
  Direction direction = Direction::kForward;
  // Optional precomputed entity name vectors, indexed by dense entity id.
  std::optional<NameEmbeddingTable> source_names;
  std::optional<NameEmbeddingTable> target_names;

  bool operator==(const DatasetPair&) const = default;
};

struct SyntheticSpec {
  std::int64_t n_entities = 500;
  std::int64_t n_relations = 10;
  std::int64_t n_attributes = 20;
  double edge_probability = 0.02;
  double edge_drop_rate = 0.0;
  double seed_fraction = 0.3;
  std::uint64_t rng_seed = 1;
  // Dimension of the emitted ground-truth name vectors.
  Index name_dim = 64;
  // Attributes per entity are drawn uniformly from [0, max_attributes_per_entity].
  std::int64_t max_attributes_per_entity = 3;
};

// Reads triples_{1,2}, ent_links, ent_labels_{1,2} and the optional attrs_{1,2}
// and ent_vectors_{1,2}. Raw ids are remapped densely in ascending raw order.
// An optional third ent_links column ("train"/"test") carries the partition;
// without it every pair is tagged test.
DatasetPair parse_dataset(const std::filesystem::path& root, Direction direction);

// Writes `pair` in the layout parse_dataset reads (forward orientation of the
// stored graphs, i.e. `pair.source` goes to the *_1 files).
void write_dataset(const std::filesystem::path& root, const DatasetPair& pair);

// Deterministic shuffle, then floor(k * train_fraction) pairs become train.
AlignmentSeedSet split_seeds(const AlignmentSeedSet& seeds, double train_fraction,
                             std::uint64_t rng_seed);

// Erdos-Renyi source graph, permuted clone as target with independent edge
// deletion, full identity alignment split by seed_fraction.
DatasetPair generate_synthetic_pair(const SyntheticSpec& spec);

// Swaps graph roles (and seed orientation). Applying it twice is the identity
// on graphs and seeds.
DatasetPair reverse_direction(DatasetPair pair);

}  // namespace kgalign

#endif  // KGALIGN_DATA_IO_HPP_
