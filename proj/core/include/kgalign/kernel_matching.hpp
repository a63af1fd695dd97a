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

#ifndef KGALIGN_KERNEL_MATCHING_HPP_
#define KGALIGN_KERNEL_MATCHING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kgalign/kg.hpp"
#include "kgalign/tensor.hpp"

namespace kgalign {

// Raised when a training step produces a non-finite or diverging loss.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CriticConfig {
  Index input_dim = 1;
  Index hidden_dim = 128;
  Index output_dim = 64;
};

// Two-layer feed-forward critic: tanh(relu(x W1 + b1) W2 + b2). The tanh
// keeps the witness function bounded.
class Critic {
 public:
  Critic() = default;
  Critic(const CriticConfig& config, std::mt19937_64& rng);

  const CriticConfig& config() const { return config_; }
  ad::Var forward(const ad::Var& x);
  Matrix apply(const Matrix& x);
  std::vector<Parameter*> parameters();

  void save(const std::filesystem::path& path);
  void load(const std::filesystem::path& path);

 private:
  CriticConfig config_;
  Parameter w1_, b1_, w2_, b2_;
};

using CriticFn = std::function<ad::Var(const ad::Var&)>;

// || mean_rows(F(Hs)) - mean_rows(F(Ht)) ||^2
ad::Var empirical_mmd(const ad::Var& hs, const ad::Var& ht, const CriticFn& critic);
double empirical_mmd(const Matrix& hs, const Matrix& ht, const CriticFn& critic);

struct MatchingConfig {
  double margin = 1.0;
  int negatives_per_seed = 5;
  int critic_steps = 1;
  double encoder_learning_rate = 5e-3;
  double critic_learning_rate = 1e-4;
  double mmd_weight = 1.0;
};

// A corrupted pair tied to positive seed `positive`.
struct NegativePair {
  std::size_t positive = 0;
  EntityId source = 0;
  EntityId target = 0;
  bool operator==(const NegativePair&) const = default;
};

// For every seed (s, t): K pairs (s, t') with t' != t, then K pairs (s', t)
// with s' != s, drawn uniformly over the entity ranges.
std::vector<NegativePair> sample_negatives(std::span<const SeedPair> seeds,
                                           std::int64_t n_source,
                                           std::int64_t n_target,
                                           int negatives_per_seed,
                                           std::mt19937_64& rng);

// mean over negatives of max(0, d(pos) - d(neg) + margin), d = squared L2.
ad::Var triplet_loss(std::span<const SeedPair> positives,
                     std::span<const NegativePair> negatives, const ad::Var& hs,
                     const ad::Var& ht, double margin);

struct MatchingLoss {
  std::int64_t step = 0;
  double mmd = 0.0;
  double triplet = 0.0;
  double total = 0.0;
};

void write_matching_csv_header(std::ostream& out);
void write_matching_csv_row(std::ostream& out, const MatchingLoss& loss);

// Alternating minimax: the critic ascends the empirical MMD with the
// generator frozen, then the generator descends triplet + weight * MMD with
// the critic frozen.
class AdversarialMatcher {
 public:
  // Returns (Hs, Ht) as functions of the generator parameters.
  using Generator = std::function<std::pair<ad::Var, ad::Var>()>;

  AdversarialMatcher(Generator generator, std::vector<Parameter*> generator_params,
                     Critic* critic, MatchingConfig config);

  MatchingLoss step(std::span<const SeedPair> train_seeds, std::int64_t n_source,
                    std::int64_t n_target, std::mt19937_64& rng);
  // Critic phase only; returns the MMD seen before each critic update.
  std::vector<double> critic_phase(int steps);

  const MatchingConfig& config() const { return config_; }
  std::int64_t steps_taken() const { return steps_; }

 private:
  Generator generator_;
  std::vector<Parameter*> generator_params_;
  Critic* critic_;
  MatchingConfig config_;
  Adam generator_opt_;
  std::unique_ptr<Adam> critic_opt_;
  std::int64_t steps_ = 0;
};

}  // namespace kgalign

#endif  // KGALIGN_KERNEL_MATCHING_HPP_
