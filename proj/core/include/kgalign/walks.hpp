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

#ifndef KGALIGN_WALKS_HPP_
#define KGALIGN_WALKS_HPP_

#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "kgalign/encoder.hpp"
#include "kgalign/kg.hpp"

namespace kgalign {

// The empty identifier for a masked source position.
inline constexpr EntityId kEmptyEntity = -1;

struct RandomWalk {
  GraphSide side = GraphSide::kTarget;
  std::vector<EntityId> nodes;
  std::size_t length() const { return nodes.size(); }
  bool operator==(const RandomWalk&) const = default;
};

// mask[l] == 1 iff target_walk.nodes[l] is an anchor; source_walk[l] is then
// its source counterpart, otherwise kEmptyEntity.
struct MaskedWalkPair {
  RandomWalk target_walk;
  std::vector<std::uint8_t> mask;
  std::vector<EntityId> source_walk;
  bool operator==(const MaskedWalkPair&) const = default;
};

// Bidirectional lookup over train seed pairs.
class AnchorIndex {
 public:
  AnchorIndex() = default;
  explicit AnchorIndex(std::span<const SeedPair> train_seeds);

  bool is_target_anchor(EntityId t) const { return target_to_source_.count(t) != 0; }
  bool is_source_anchor(EntityId s) const { return source_to_target_.count(s) != 0; }
  EntityId source_of(EntityId t) const;
  EntityId target_of(EntityId s) const;
  std::size_t size() const { return source_to_target_.size(); }

 private:
  std::unordered_map<EntityId, EntityId> target_to_source_;
  std::unordered_map<EntityId, EntityId> source_to_target_;
};

// Anchor-biased walker over one graph's undirected entity adjacency. From a
// non-anchor node the next node is an adjacent anchor with probability
// `bias`; from an anchor it is an adjacent non-anchor with probability
// `bias`. An empty preferred class falls back to the other one, and a node
// without neighbours repeats itself.
class WalkSampler {
 public:
  WalkSampler(const KnowledgeGraph& kg, std::vector<bool> is_anchor, GraphSide side);

  EntityId next(EntityId current, double bias, std::mt19937_64& rng) const;
  // Requires `start` to be an anchor.
  RandomWalk sample(EntityId start, int length, double bias,
                    std::mt19937_64& rng) const;
  // No anchor requirement on `start`; used for inference walks.
  RandomWalk sample_from(EntityId start, int length, double bias,
                         std::mt19937_64& rng) const;

  bool is_anchor(EntityId e) const { return is_anchor_[static_cast<std::size_t>(e)]; }
  std::int64_t num_entities() const { return static_cast<std::int64_t>(is_anchor_.size()); }

 private:
  std::vector<bool> is_anchor_;
  std::vector<std::vector<EntityId>> anchor_neighbors_;
  std::vector<std::vector<EntityId>> plain_neighbors_;
  GraphSide side_;
};

RandomWalk sample_walk(const KnowledgeGraph& kg, std::span<const EntityId> anchors,
                       EntityId start, int length, double bias, std::mt19937_64& rng);

MaskedWalkPair build_masked_pair(const RandomWalk& walk, const AnchorIndex& anchors);
MaskedWalkPair build_masked_pair(const RandomWalk& walk,
                                 std::span<const SeedPair> train_seeds);

// Number of anchor positions.
int walk_confidence(const MaskedWalkPair& pair);

struct WalkOptions {
  int length = 10;
  double bias = 0.9;
  int walks_per_anchor = 5;
};

// `walks_per_anchor` walks from every target-side anchor, in anchor order.
std::vector<MaskedWalkPair> sample_training_walks(const KnowledgeGraph& target,
                                                  const AnchorIndex& anchors,
                                                  std::span<const SeedPair> train_seeds,
                                                  const WalkOptions& options,
                                                  std::mt19937_64& rng);

// One line of node ids per walk followed by its mask line.
void write_walk_corpus(std::ostream& out, std::span<const MaskedWalkPair> pairs);

}  // namespace kgalign

#endif  // KGALIGN_WALKS_HPP_
