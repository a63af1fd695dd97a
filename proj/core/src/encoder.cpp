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

#include "kgalign/encoder.hpp"

#include <array>
#include <stdexcept>

#include "kgalign/checkpoint.hpp"

namespace kgalign {

std::string to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kMean: return "mean";
    case FusionMode::kSum: return "sum";
    case FusionMode::kConcat: return "concat";
  }
  return "concat";
}

FusionMode parse_fusion(const std::string& s) {
  if (s == "mean") return FusionMode::kMean;
  if (s == "sum") return FusionMode::kSum;
  if (s == "concat") return FusionMode::kConcat;
  throw std::invalid_argument("unknown fusion mode '" + s + "'");
}

namespace {

GcnStack make_stack(const std::string& prefix, Index in_dim, Index hidden,
                    int n_layers, std::mt19937_64& rng) {
  GcnStack stack;
  for (int l = 0; l < n_layers; ++l) {
    const Index rows = l == 0 ? in_dim : hidden;
    stack.weights.emplace_back(prefix + ".w" + std::to_string(l),
                               glorot(rows, hidden, rng));
  }
  return stack;
}

}  // namespace

EncoderParams::EncoderParams(const EncoderConfig& config, std::mt19937_64& rng)
    : config_(config) {
  if (config.n_layers < 1) throw std::invalid_argument("encoder needs >= 1 layer");
  if (config.name_dim < 1 || config.hidden_dim < 1 ||
      config.relation_feature_dim < 1 || config.attribute_feature_dim < 1) {
    throw std::invalid_argument("encoder dimensions must be positive");
  }
  if (config.fusion != FusionMode::kConcat && config.name_dim != config.hidden_dim) {
    throw std::invalid_argument(
        "mean/sum fusion needs name_dim == hidden_dim (got " +
        std::to_string(config.name_dim) + " and " +
        std::to_string(config.hidden_dim) + ")");
  }
  entity_ = make_stack("entity", config.name_dim, config.hidden_dim, config.n_layers, rng);
  relation_ = make_stack("relation", config.relation_feature_dim, config.hidden_dim,
                         config.n_layers, rng);
  attribute_ = make_stack("attribute", config.attribute_feature_dim,
                          config.hidden_dim, config.n_layers, rng);
}

Index EncoderParams::output_dim() const {
  return config_.fusion == FusionMode::kConcat
             ? config_.name_dim + 3 * config_.hidden_dim
             : config_.hidden_dim;
}

std::vector<Parameter*> EncoderParams::parameters() {
  std::vector<Parameter*> out;
  for (GcnStack* s : {&entity_, &relation_, &attribute_}) {
    for (auto& w : s->weights) out.push_back(&w);
  }
  return out;
}

void EncoderParams::save(const std::filesystem::path& path) {
  save_parameters(path, parameters());
}

void EncoderParams::load(const std::filesystem::path& path) {
  load_parameters(path, parameters());
}

Matrix identity_features(Index n, Index width) {
  if (width < n) {
    throw std::invalid_argument("identity feature width " + std::to_string(width) +
                                " smaller than count " + std::to_string(n));
  }
  Matrix m = Matrix::Zero(n, width);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ad::Var gcn_forward(const AdjacencyView& view, const ad::Var& features,
                    std::span<Parameter> weights, const AdjacencyView* propagation) {
  if (weights.empty()) throw std::invalid_argument("gcn_forward: no layers");
  if (view.matrix.cols() != features.rows()) {
    throw std::invalid_argument("gcn_forward: view has " +
                                std::to_string(view.matrix.cols()) +
                                " columns but features have " +
                                std::to_string(features.rows()) + " rows");
  }
  if (features.cols() != weights.front().value().rows()) {
    throw std::invalid_argument("gcn_forward: feature width " +
                                std::to_string(features.cols()) +
                                " does not match layer input " +
                                std::to_string(weights.front().value().rows()));
  }
  if (propagation == nullptr && view.kind == ViewKind::kEntity) propagation = &view;
  if (weights.size() > 1 && propagation == nullptr) {
    throw std::invalid_argument(
        "gcn_forward: multi-layer relation/attribute GCN needs the entity view");
  }
  ad::Var h = ad::spmm(view.matrix, ad::matmul(features, ad::param(weights[0])));
  for (std::size_t l = 1; l < weights.size(); ++l) {
    h = ad::relu(h);
    h = ad::spmm(propagation->matrix, ad::matmul(h, ad::param(weights[l])));
  }
  return h;
}

ad::Var fuse_representations(const ad::Var& name_part, const ad::Var& entity_part,
                             const ad::Var& relation_part,
                             const ad::Var& attribute_part, FusionMode mode) {
  const std::array<ad::Var, 4> parts{name_part, entity_part, relation_part,
                                     attribute_part};
  for (const auto& p : parts) {
    if (p.rows() != name_part.rows()) {
      throw std::invalid_argument("fuse_representations: row counts differ");
    }
  }
  if (mode == FusionMode::kConcat) return ad::concat_cols(parts);
  for (const auto& p : parts) {
    if (p.cols() != name_part.cols()) {
      throw std::invalid_argument(
          "fuse_representations: mean/sum need equal widths (" +
          std::to_string(name_part.cols()) + " vs " + std::to_string(p.cols()) + ")");
    }
  }
  ad::Var total = parts[0] + parts[1] + parts[2] + parts[3];
  return mode == FusionMode::kMean ? ad::scale(total, 0.25) : total;
}

ad::Var encode_graph(const GraphInputs& inputs, EncoderParams& params) {
  const auto& v = inputs.views;
  const ad::Var names = ad::constant(inputs.entity_names);
  ad::Var entity = gcn_forward(v.entity, names, params.entity().weights);
  ad::Var relation = gcn_forward(v.relation, ad::constant(inputs.relation_features),
                                 params.relation().weights, &v.entity);
  ad::Var attribute =
      gcn_forward(v.attribute, ad::constant(inputs.attribute_features),
                  params.attribute().weights, &v.entity);
  return fuse_representations(names, entity, relation, attribute,
                              params.config().fusion);
}

EmbeddingMatrix embed_graph(const GraphInputs& inputs, EncoderParams& params,
                            GraphSide side) {
  return {encode_graph(inputs, params).value(), side};
}

}  // namespace kgalign
