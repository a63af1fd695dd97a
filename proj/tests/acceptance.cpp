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

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Optional arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kgalign/pipeline.hpp"
#include "test_support.hpp"

namespace kgalign {
namespace {

using testing::numeric_gradient;
using testing::random_matrix;
using testing::relative_error;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The 500-entity benchmark with default model settings.
PipelineConfig benchmark_config(const std::filesystem::path& out, std::uint64_t seed = 1) {
  PipelineConfig c;
  c.synthetic.n_entities = 500;
  c.synthetic.edge_drop_rate = 0.0;
  c.seed_fraction = 0.3;
  c.seed = seed;
  c.out_dir = out;
  return c;
}

Outcome metric_oracles() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  int mismatches = 0;
  for (int list = 0; list < 100; ++list) {
    // Each query ranks a gold item among random scores; rank by full sort.
    const int n_queries = 1 + list % 23;
    const int n_candidates = 2 + list % 37;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, n_candidates - 1);
    std::vector<std::int64_t> ranks;
    for (int q = 0; q < n_queries; ++q) {
      std::vector<std::pair<double, int>> scored;
      for (int c = 0; c < n_candidates; ++c) scored.emplace_back(u(rng), c);
      const int gold = pick(rng);
      std::sort(scored.begin(), scored.end());
      const auto it = std::find_if(scored.begin(), scored.end(),
                                   [gold](const auto& s) { return s.second == gold; });
      ranks.push_back(static_cast<std::int64_t>(it - scored.begin()) + 1);
    }
    for (int k : {1, 3, 10}) {
      int hits = 0;
      for (auto r : ranks) hits += r <= k;
      if (hits_at_k(ranks, k) != static_cast<double>(hits) / ranks.size()) ++mismatches;
    }
    double inv = 0.0;
    for (auto r : ranks) inv += 1.0 / static_cast<double>(r);
    if (mean_reciprocal_rank(ranks) != inv / static_cast<double>(ranks.size())) ++mismatches;
  }
  const double t = seconds_since(start);
  return {mismatches == 0 && t < 1.0,
          std::to_string(mismatches) + " mismatches over 100 lists, " + fmt(t) + " s"};
}

Outcome mmd_properties() {
  std::mt19937_64 rng(202);
  Critic critic({5, 32, 16}, rng);
  const CriticFn f = [&](const ad::Var& v) { return critic.forward(v); };
  const CriticFn identity = [](const ad::Var& v) { return v; };
  const Matrix x = random_matrix(40, 5, rng);
  const double self = empirical_mmd(x, x, f);
  const double two = empirical_mmd(Matrix::Ones(1, 2), Matrix::Zero(1, 2), identity);
  const Eigen::RowVectorXd c = random_matrix(1, 5, rng).row(0);
  const Matrix shifted = x.rowwise() + c;
  const double shift = empirical_mmd(shifted, x, identity);
  const double err =
      std::max({std::abs(self), std::abs(two - 2.0), std::abs(shift - c.squaredNorm())});
  return {err <= 1e-9, "max deviation " + fmt(err)};
}

// Held-out MMD^2 under fixed random Fourier features of a unit-bandwidth
// Gaussian kernel.
struct FourierMmd {
  Matrix omega;
  Eigen::RowVectorXd phase;
  explicit FourierMmd(std::mt19937_64& rng, Index features = 512) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    omega = Matrix::NullaryExpr(2, features, [&] { return normal(rng); });
    phase = Eigen::RowVectorXd::NullaryExpr(features, [&] { return u(rng); });
  }
  Eigen::RowVectorXd mean_features(const Matrix& x) const {
    const Matrix z = ((x * omega).rowwise() + phase).array().cos().matrix();
    return z.colwise().mean() * std::sqrt(2.0 / static_cast<double>(omega.cols()));
  }
  double operator()(const Matrix& a, const Matrix& b) const {
    return (mean_features(a) - mean_features(b)).squaredNorm();
  }
};

// One matching run; returns the fractional drop of the held-out MMD.
double matching_reduction(std::uint64_t seed, double* initial, double* final_mmd) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto cloud = [&](double shift_x) {
    Matrix m = Matrix::NullaryExpr(200, 2, [&] { return normal(rng); });
    m.col(0).array() += shift_x;
    return m;
  };
  const Matrix xs = cloud(0.0), xt = cloud(3.0);
  const Matrix xs_held = cloud(0.0), xt_held = cloud(3.0);
  const FourierMmd heldout(rng);

  // The generator translates the source cloud; it starts at zero offset.
  Parameter offset("offset", Matrix::Zero(1, 2));
  auto generate = [&](const Matrix& x) { return Matrix(x.rowwise() + offset.value().row(0)); };
  Critic critic({2, 32, 16}, rng);
  MatchingConfig config;
  config.critic_steps = 5;
  config.critic_learning_rate = 1e-2;
  config.encoder_learning_rate = 2e-2;
  AdversarialMatcher matcher(
      [&] {
        return std::pair{ad::add_row(ad::constant(xs), ad::param(offset)), ad::constant(xt)};
      },
      {&offset}, &critic, config);
  *initial = heldout(generate(xs_held), xt_held);
  for (int step = 0; step < 500; ++step) matcher.step({}, 200, 200, rng);
  *final_mmd = heldout(generate(xs_held), xt_held);
  return 1.0 - *final_mmd / *initial;
}

Outcome distribution_matching() {
  double worst = 1.0, worst_time = 0.0;
  std::string detail;
  for (std::uint64_t seed : {303, 7, 11, 19, 23}) {
    const auto start = Clock::now();
    double initial = 0.0, final_mmd = 0.0;
    const double r = matching_reduction(seed, &initial, &final_mmd);
    worst = std::min(worst, r);
    worst_time = std::max(worst_time, seconds_since(start));
    detail += " " + fmt(initial) + "->" + fmt(final_mmd);
  }
  return {worst >= 0.8 && worst_time < 60.0,
          "min held-out MMD reduction over 5 seeds " + fmt(100.0 * worst) + "%, slowest run " +
              fmt(worst_time) + " s;" + detail};
}

Outcome gradient_checks() {
  std::mt19937_64 rng(404);
  double worst_triplet = 0.0, worst_mmd = 0.0, worst_gen = 0.0;
  std::vector<SeedPair> seeds;
  for (EntityId i = 0; i < 5; ++i) seeds.push_back({i, i, Partition::kTrain});
  for (int point = 0; point < 20; ++point) {
    {
      Parameter hs("hs", random_matrix(7, 4, rng));
      Parameter ht("ht", random_matrix(6, 4, rng));
      const auto neg = sample_negatives(seeds, 7, 6, 2, rng);
      auto build = [&] { return triplet_loss(seeds, neg, ad::param(hs), ad::param(ht), 1.0); };
      hs.zero_grad();
      ht.zero_grad();
      ad::backward(build());
      auto loss = [&] { return build().scalar(); };
      worst_triplet = std::max({worst_triplet, relative_error(hs.grad(), numeric_gradient(hs, loss)),
                                relative_error(ht.grad(), numeric_gradient(ht, loss))});
    }
    {
      Critic critic({3, 6, 4}, rng);
      Parameter hs("hs", random_matrix(6, 3, rng));
      Parameter ht("ht", random_matrix(5, 3, rng));
      const CriticFn f = [&](const ad::Var& v) { return critic.forward(v); };
      auto build = [&] { return empirical_mmd(ad::param(hs), ad::param(ht), f); };
      std::vector<Parameter*> all = critic.parameters();
      all.push_back(&hs);
      all.push_back(&ht);
      for (auto* p : all) p->zero_grad();
      ad::backward(build());
      auto loss = [&] { return build().scalar(); };
      for (auto* p : all) worst_mmd = std::max(worst_mmd, relative_error(p->grad(), numeric_gradient(*p, loss)));
    }
    {
      const auto kg = testing::random_graph(20, 2, 1, 0.2, rng);
      const Matrix hs = random_matrix(20, 3, rng);
      const Matrix ht = random_matrix(20, 3, rng);
      std::vector<SeedPair> anchors;
      for (EntityId i = 0; i < 20; i += 3) anchors.push_back({i, i, Partition::kTrain});
      const AnchorIndex index(anchors);
      const auto walks = sample_training_walks(kg, index, anchors, {4, 0.9, 1}, rng);
      const auto batch = make_kt_batch(walks, hs, ht, top1_pseudo_labels(hs, ht));
      SequenceModels models({3, 4, true}, rng);
      models.translator_out().weight().value() = random_matrix(4, 3, rng, 0.5);
      models.placeholder().value() = random_matrix(1, 3, rng);
      for (auto* p : models.generator_parameters()) p->zero_grad();
      for (auto* p : models.discriminator_parameters()) p->zero_grad();
      ad::backward(generator_loss(batch, models, 1.0).total);
      auto loss = [&] { return generator_loss(batch, models, 1.0).total.scalar(); };
      for (auto* p : models.generator_parameters()) {
        worst_gen = std::max(worst_gen, relative_error(p->grad(), numeric_gradient(*p, loss)));
      }
    }
  }
  const double worst = std::max({worst_triplet, worst_mmd, worst_gen});
  return {worst < 1e-3, "max relative error triplet " + fmt(worst_triplet) + ", mmd " +
                            fmt(worst_mmd) + ", generator " + fmt(worst_gen)};
}

Outcome walk_bias() {
  // Complete graph with alternating anchors: both classes always adjacent.
  const EntityId n = 12;
  std::vector<Triple> triples;
  for (EntityId i = 0; i < n; ++i)
    for (EntityId j = i + 1; j < n; ++j) triples.push_back({i, 0, j});
  const KnowledgeGraph kg(n, 1, 1, triples);
  std::vector<bool> anchor(static_cast<std::size_t>(n));
  for (EntityId i = 0; i < n; ++i) anchor[static_cast<std::size_t>(i)] = i % 2 == 0;
  const WalkSampler sampler(kg, anchor, GraphSide::kTarget);
  std::mt19937_64 rng(505);
  EntityId cur = 0;
  int preferred = 0, from_plain = 0, plain_to_anchor = 0;
  const int steps = 10000;
  for (int i = 0; i < steps; ++i) {
    const EntityId nxt = sampler.next(cur, 0.9, rng);
    const bool a = anchor[static_cast<std::size_t>(cur)];
    const bool b = anchor[static_cast<std::size_t>(nxt)];
    preferred += a != b;
    if (!a) {
      ++from_plain;
      plain_to_anchor += b;
    }
    cur = nxt;
  }
  const double rate = static_cast<double>(preferred) / steps;
  const double anchor_rate = static_cast<double>(plain_to_anchor) / from_plain;
  return {rate >= 0.88 && rate <= 0.92,
          "preferred-class frequency " + fmt(rate) + " (non-anchor -> anchor " +
              fmt(anchor_rate) + ") over 10000 steps"};
}

Outcome mask_invariant() {
  std::mt19937_64 rng(606);
  SyntheticSpec spec;
  spec.n_entities = 300;
  spec.rng_seed = 606;
  const auto pair = generate_synthetic_pair(spec);
  const std::vector<SeedPair> train = pair.seeds.train();
  const AnchorIndex index(train);
  std::vector<MaskedWalkPair> walks;
  while (walks.size() < 1000) {
    auto more = sample_training_walks(pair.target, index, train, {10, 0.9, 5}, rng);
    walks.insert(walks.end(), more.begin(), more.end());
  }
  walks.resize(1000);
  int violations = 0;
  for (const auto& w : walks) {
    for (std::size_t l = 0; l < w.mask.size(); ++l) {
      const EntityId t = w.target_walk.nodes[l];
      const bool is_anchor = index.is_target_anchor(t);
      const bool ok = w.mask[l] == 1
                          ? is_anchor && w.source_walk[l] == index.source_of(t) &&
                                w.source_walk[l] != kEmptyEntity
                          : !is_anchor && w.source_walk[l] == kEmptyEntity;
      violations += !ok;
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over 1000 walks"};
}

Outcome end_to_end(const std::filesystem::path& root) {
  const auto start = Clock::now();
  const auto report = run_pipeline(benchmark_config(root / "isomorphic"));
  const double t = seconds_since(start);
  return {report.hits1 >= 0.9 && t < 600.0,
          "DAEA Hits@1 " + fmt(report.hits1) + ", MRR " + fmt(report.mrr) + ", " +
              std::to_string(report.rows.size()) + " test pairs, " + fmt(t) + " s"};
}

Outcome ablation_ordering(const std::filesystem::path& root) {
  double name = 0.0, ma = 0.0, ke = 0.0, daea = 0.0;
  std::string per_seed;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto c = benchmark_config(root / ("noisy-" + std::to_string(seed)), seed);
    c.synthetic.edge_drop_rate = 0.2;
    c.name_noise = 0.5;
    const auto rows = run_ablation_suite(c);
    name += rows[0].report.hits1 / 3.0;
    ma += rows[1].report.hits1 / 3.0;
    ke += rows[2].report.hits1 / 3.0;
    daea += rows[3].report.hits1 / 3.0;
    per_seed += " seed" + std::to_string(seed) + "=" + fmt(rows[0].report.hits1) + "/" +
                fmt(rows[1].report.hits1) + "/" + fmt(rows[2].report.hits1) + "/" +
                fmt(rows[3].report.hits1);
  }
  return {daea >= ma && ma >= name,
          "mean Hits@1 NAME " + fmt(name) + ", MA " + fmt(ma) + ", KE " + fmt(ke) + ", DAEA " +
              fmt(daea) + ";" + per_seed};
}

Outcome determinism(const std::filesystem::path& root) {
  const auto first = root / "isomorphic" / "report.csv";
  if (!std::filesystem::exists(first)) run_pipeline(benchmark_config(root / "isomorphic"));
  run_pipeline(benchmark_config(root / "isomorphic-again"));
  const std::string a = slurp(first);
  const std::string b = slurp(root / "isomorphic-again" / "report.csv");
  return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, " +
                                    (a == b ? "identical" : "different")};
}

Outcome reversed_direction(const std::filesystem::path& root) {
  const auto forward_path = root / "isomorphic" / "report.csv";
  if (!std::filesystem::exists(forward_path)) run_pipeline(benchmark_config(root / "isomorphic"));
  const auto forward = read_report(forward_path);
  auto c = benchmark_config(root / "reversed");
  c.direction = Direction::kReversed;
  const auto reversed = run_pipeline(c);
  const bool emitted = std::filesystem::exists(root / "reversed" / "report.csv");
  return {emitted && reversed.rows.size() == forward.rows.size(),
          "forward " + std::to_string(forward.rows.size()) + " vs reversed " +
              std::to_string(reversed.rows.size()) + " test pairs, reversed Hits@1 " +
              fmt(reversed.hits1)};
}

}  // namespace
}  // namespace kgalign

int main(int argc, char** argv) {
  using namespace kgalign;
  testing::TempDir scratch;
  const auto root = scratch.path();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric oracles", metric_oracles},
      {"MMD properties", mmd_properties},
      {"distribution matching", distribution_matching},
      {"gradient checks", gradient_checks},
      {"walk sampler bias", walk_bias},
      {"mask invariant", mask_invariant},
      {"end-to-end isomorphic benchmark", [&] { return end_to_end(root); }},
      {"ablation ordering under noise", [&] { return ablation_ordering(root); }},
      {"determinism", [&] { return determinism(root); }},
      {"reversed direction", [&] { return reversed_direction(root); }},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << number << "] " << criteria[i].first
              << ": " << o.detail << std::endl;
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
