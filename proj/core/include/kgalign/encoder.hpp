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

#ifndef KGALIGN_ENCODER_HPP_
#define KGALIGN_ENCODER_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kgalign/kg.hpp"
#include "kgalign/tensor.hpp"

namespace kgalign {

enum class FusionMode { kMean, kSum, kConcat };

std::string to_string(FusionMode mode);
FusionMode parse_fusion(const std::string& s);

enum class GraphSide { kSource, kTarget };

// Row i is the representation of entity i of one graph.
struct EmbeddingMatrix {
  Matrix rows;
  GraphSide side = GraphSide::kSource;
};

struct EncoderConfig {
  Index name_dim = 64;
  Index relation_feature_dim = 1;
  Index attribute_feature_dim = 1;
  Index hidden_dim = 128;
  int n_layers = 2;
  FusionMode fusion = FusionMode::kConcat;
};

// One weight matrix per layer, no bias.
struct GcnStack {
  std::vector<Parameter> weights;
};

// The three GCN encoders. A single instance is shared by both graphs.
class EncoderParams {
 public:
  EncoderParams() = default;
  EncoderParams(const EncoderConfig& config, std::mt19937_64& rng);

  const EncoderConfig& config() const { return config_; }
  GcnStack& entity() { return entity_; }
  GcnStack& relation() { return relation_; }
  GcnStack& attribute() { return attribute_; }

  // Output dimension D of encode_graph.
  Index output_dim() const;
  std::vector<Parameter*> parameters();

  void save(const std::filesystem::path& path);
  void load(const std::filesystem::path& path);

 private:
  EncoderConfig config_;
  GcnStack entity_;
  GcnStack relation_;
  GcnStack attribute_;
};

// Per-graph encoder inputs. Relation/attribute features have one row per
// relation/attribute and the widths given in EncoderConfig.
struct GraphInputs {
  GraphViews views;
  Matrix entity_names;
  Matrix relation_features;
  Matrix attribute_features;
};

// Rows 0..n-1 of an identity matrix padded to `width` columns.
Matrix identity_features(Index n, Index width);

// Layer 0 aggregates through `view`; later layers propagate over
// `propagation` (the entity view). ReLU between layers, last layer linear.
ad::Var gcn_forward(const AdjacencyView& view, const ad::Var& features,
                    std::span<Parameter> weights,
                    const AdjacencyView* propagation = nullptr);

ad::Var fuse_representations(const ad::Var& name_part, const ad::Var& entity_part,
                             const ad::Var& relation_part,
                             const ad::Var& attribute_part, FusionMode mode);

ad::Var encode_graph(const GraphInputs& inputs, EncoderParams& params);

EmbeddingMatrix embed_graph(const GraphInputs& inputs, EncoderParams& params,
                            GraphSide side);

}  // namespace kgalign

#endif  // KGALIGN_ENCODER_HPP_
