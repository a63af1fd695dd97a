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

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "kgalign/data_io.hpp"
#include "kgalign/encoder.hpp"
#include "kgalign/inference.hpp"
#include "kgalign/names.hpp"
#include "kgalign/walks.hpp"

namespace kgalign {
namespace {

DatasetPair synthetic(std::int64_t n) {
  SyntheticSpec spec;
  spec.n_entities = n;
  spec.rng_seed = 7;
  return generate_synthetic_pair(spec);
}

void BM_BuildViews(benchmark::State& state) {
  const auto pair = synthetic(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_views(pair.source));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pair.source.triples().size()));
}
BENCHMARK(BM_BuildViews)->Arg(500)->Arg(2000);

void BM_EncodeGraph(benchmark::State& state) {
  const auto pair = synthetic(state.range(0));
  EncoderConfig config;
  config.name_dim = 64;
  config.hidden_dim = 128;
  config.relation_feature_dim = pair.source.num_relations();
  config.attribute_feature_dim = pair.source.num_attributes();
  std::mt19937_64 rng(1);
  EncoderParams params(config, rng);
  const GraphInputs inputs{build_views(pair.source),
                           resolve_entity_names(pair.source, &*pair.source_names, 64, 1),
                           identity_features(pair.source.num_relations(), config.relation_feature_dim),
                           identity_features(pair.source.num_attributes(), config.attribute_feature_dim)};
  for (auto _ : state) benchmark::DoNotOptimize(encode_graph(inputs, params).value().data());
}
BENCHMARK(BM_EncodeGraph)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_SampleWalks(benchmark::State& state) {
  const auto pair = synthetic(500);
  const auto train = pair.seeds.train();
  const AnchorIndex index(train);
  std::mt19937_64 rng(2);
  const WalkOptions options{static_cast<int>(state.range(0)), 0.9, 5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_training_walks(pair.target, index, train, options, rng));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(train.size()) * 5);
}
BENCHMARK(BM_SampleWalks)->Arg(10)->Arg(40);

void BM_RankCandidates(benchmark::State& state) {
  const Index n = state.range(0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Matrix ht = Matrix::NullaryExpr(n, 448, [&] { return normal(rng); });
  const Vector query = Vector::NullaryExpr(448, [&] { return normal(rng); });
  std::vector<EntityId> candidates(static_cast<std::size_t>(n));
  std::iota(candidates.begin(), candidates.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(rank_candidates(query, ht, candidates));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_RankCandidates)->Arg(350)->Arg(10500);

}  // namespace
}  // namespace kgalign

BENCHMARK_MAIN();
