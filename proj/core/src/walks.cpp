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

#include "kgalign/walks.hpp"

#include <stdexcept>

namespace kgalign {

AnchorIndex::AnchorIndex(std::span<const SeedPair> train_seeds) {
  for (const auto& p : train_seeds) {
    target_to_source_[p.target] = p.source;
    source_to_target_[p.source] = p.target;
  }
}

EntityId AnchorIndex::source_of(EntityId t) const {
  auto it = target_to_source_.find(t);
  return it == target_to_source_.end() ? kEmptyEntity : it->second;
}

EntityId AnchorIndex::target_of(EntityId s) const {
  auto it = source_to_target_.find(s);
  return it == source_to_target_.end() ? kEmptyEntity : it->second;
}

WalkSampler::WalkSampler(const KnowledgeGraph& kg, std::vector<bool> is_anchor,
                         GraphSide side)
    : is_anchor_(std::move(is_anchor)), side_(side) {
  if (static_cast<std::int64_t>(is_anchor_.size()) != kg.num_entities()) {
    throw std::invalid_argument("anchor flags do not cover every entity");
  }
  const auto adj = kg.neighbors();
  anchor_neighbors_.resize(adj.size());
  plain_neighbors_.resize(adj.size());
  for (std::size_t i = 0; i < adj.size(); ++i) {
    for (EntityId j : adj[i]) {
      (is_anchor_[static_cast<std::size_t>(j)] ? anchor_neighbors_ : plain_neighbors_)[i]
          .push_back(j);
    }
  }
}

EntityId WalkSampler::next(EntityId current, double bias, std::mt19937_64& rng) const {
  const auto& anchors = anchor_neighbors_[static_cast<std::size_t>(current)];
  const auto& plain = plain_neighbors_[static_cast<std::size_t>(current)];
  if (anchors.empty() && plain.empty()) return current;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool preferred = unit(rng) < bias;
  // Preferred class alternates with the current node's class.
  bool want_anchor = is_anchor(current) ? !preferred : preferred;
  if (want_anchor && anchors.empty()) want_anchor = false;
  if (!want_anchor && plain.empty()) want_anchor = true;
  const auto& pool = want_anchor ? anchors : plain;
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return pool[pick(rng)];
}

RandomWalk WalkSampler::sample_from(EntityId start, int length, double bias,
                                    std::mt19937_64& rng) const {
  if (length < 2) throw std::invalid_argument("walk length must be >= 2");
  if (!(bias > 0.0 && bias < 1.0)) throw std::invalid_argument("bias must lie in (0, 1)");
  if (start < 0 || start >= num_entities()) {
    throw std::out_of_range("walk start " + std::to_string(start) + " out of range");
  }
  RandomWalk walk{side_, {}};
  walk.nodes.reserve(static_cast<std::size_t>(length));
  walk.nodes.push_back(start);
  while (static_cast<int>(walk.nodes.size()) < length) {
    walk.nodes.push_back(next(walk.nodes.back(), bias, rng));
  }
  return walk;
}

RandomWalk WalkSampler::sample(EntityId start, int length, double bias,
                               std::mt19937_64& rng) const {
  if (start < 0 || start >= num_entities() || !is_anchor(start)) {
    throw std::invalid_argument("walk start " + std::to_string(start) +
                                " is not an anchor");
  }
  return sample_from(start, length, bias, rng);
}

RandomWalk sample_walk(const KnowledgeGraph& kg, std::span<const EntityId> anchors,
                       EntityId start, int length, double bias, std::mt19937_64& rng) {
  std::vector<bool> flags(static_cast<std::size_t>(kg.num_entities()), false);
  for (EntityId a : anchors) flags.at(static_cast<std::size_t>(a)) = true;
  return WalkSampler(kg, std::move(flags), GraphSide::kTarget)
      .sample(start, length, bias, rng);
}

MaskedWalkPair build_masked_pair(const RandomWalk& walk, const AnchorIndex& anchors) {
  MaskedWalkPair pair;
  pair.target_walk = walk;
  pair.mask.reserve(walk.length());
  pair.source_walk.reserve(walk.length());
  for (EntityId t : walk.nodes) {
    const EntityId s = anchors.source_of(t);
    pair.mask.push_back(s == kEmptyEntity ? 0 : 1);
    pair.source_walk.push_back(s);
  }
  return pair;
}

MaskedWalkPair build_masked_pair(const RandomWalk& walk,
                                 std::span<const SeedPair> train_seeds) {
  return build_masked_pair(walk, AnchorIndex(train_seeds));
}

int walk_confidence(const MaskedWalkPair& pair) {
  int count = 0;
  for (auto m : pair.mask) count += m;
  return count;
}

std::vector<MaskedWalkPair> sample_training_walks(const KnowledgeGraph& target,
                                                  const AnchorIndex& anchors,
                                                  std::span<const SeedPair> train_seeds,
                                                  const WalkOptions& options,
                                                  std::mt19937_64& rng) {
  std::vector<bool> flags(static_cast<std::size_t>(target.num_entities()), false);
  for (const auto& p : train_seeds) flags.at(static_cast<std::size_t>(p.target)) = true;
  const WalkSampler sampler(target, std::move(flags), GraphSide::kTarget);
  std::vector<MaskedWalkPair> out;
  out.reserve(train_seeds.size() * static_cast<std::size_t>(options.walks_per_anchor));
  for (const auto& p : train_seeds) {
    for (int k = 0; k < options.walks_per_anchor; ++k) {
      out.push_back(build_masked_pair(
          sampler.sample(p.target, options.length, options.bias, rng), anchors));
    }
  }
  return out;
}

void write_walk_corpus(std::ostream& out, std::span<const MaskedWalkPair> pairs) {
  for (const auto& p : pairs) {
    for (std::size_t l = 0; l < p.target_walk.nodes.size(); ++l) {
      if (l > 0) out << ' ';
      out << p.target_walk.nodes[l];
    }
    out << '\n';
    for (std::size_t l = 0; l < p.mask.size(); ++l) {
      if (l > 0) out << ' ';
      out << static_cast<int>(p.mask[l]);
    }
    out << '\n';
  }
}

}  // namespace kgalign
