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

#include "kgalign/kernel_matching.hpp"

#include <cmath>
#include <memory>

#include "kgalign/checkpoint.hpp"

namespace kgalign {

Critic::Critic(const CriticConfig& config, std::mt19937_64& rng)
    : config_(config),
      w1_("critic.w1", glorot(config.input_dim, config.hidden_dim, rng)),
      b1_("critic.b1", Matrix::Zero(1, config.hidden_dim)),
      w2_("critic.w2", glorot(config.hidden_dim, config.output_dim, rng)),
      b2_("critic.b2", Matrix::Zero(1, config.output_dim)) {
  if (config.input_dim < 1 || config.hidden_dim < 1 || config.output_dim < 1) {
    throw std::invalid_argument("critic dimensions must be positive");
  }
}

ad::Var Critic::forward(const ad::Var& x) {
  ad::Var h = ad::relu(ad::add_row(ad::matmul(x, ad::param(w1_)), ad::param(b1_)));
  return ad::tanh(ad::add_row(ad::matmul(h, ad::param(w2_)), ad::param(b2_)));
}

Matrix Critic::apply(const Matrix& x) { return forward(ad::constant(x)).value(); }

std::vector<Parameter*> Critic::parameters() { return {&w1_, &b1_, &w2_, &b2_}; }

void Critic::save(const std::filesystem::path& path) {
  save_parameters(path, parameters());
}

void Critic::load(const std::filesystem::path& path) {
  load_parameters(path, parameters());
}

ad::Var empirical_mmd(const ad::Var& hs, const ad::Var& ht, const CriticFn& critic) {
  if (hs.rows() == 0 || ht.rows() == 0) {
    throw std::invalid_argument("empirical_mmd: empty embedding matrix");
  }
  if (hs.cols() != ht.cols()) {
    throw std::invalid_argument("empirical_mmd: embedding widths differ");
  }
  ad::Var diff = ad::mean_rows(critic(hs)) - ad::mean_rows(critic(ht));
  return ad::sum(ad::hadamard(diff, diff));
}

double empirical_mmd(const Matrix& hs, const Matrix& ht, const CriticFn& critic) {
  return empirical_mmd(ad::constant(hs), ad::constant(ht), critic).scalar();
}

std::vector<NegativePair> sample_negatives(std::span<const SeedPair> seeds,
                                           std::int64_t n_source,
                                           std::int64_t n_target,
                                           int negatives_per_seed,
                                           std::mt19937_64& rng) {
  if (negatives_per_seed < 1) throw std::invalid_argument("negatives_per_seed < 1");
  if (n_source < 2 || n_target < 2) {
    throw std::invalid_argument("negative sampling needs >= 2 entities per graph");
  }
  // Draw from n-1 slots and skip over the excluded id.
  std::uniform_int_distribution<std::int64_t> other_target(0, n_target - 2);
  std::uniform_int_distribution<std::int64_t> other_source(0, n_source - 2);
  std::vector<NegativePair> out;
  out.reserve(seeds.size() * 2 * static_cast<std::size_t>(negatives_per_seed));
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& p = seeds[i];
    for (int k = 0; k < negatives_per_seed; ++k) {
      EntityId t = other_target(rng);
      if (t >= p.target) ++t;
      out.push_back({i, p.source, t});
    }
    for (int k = 0; k < negatives_per_seed; ++k) {
      EntityId s = other_source(rng);
      if (s >= p.source) ++s;
      out.push_back({i, s, p.target});
    }
  }
  return out;
}

ad::Var triplet_loss(std::span<const SeedPair> positives,
                     std::span<const NegativePair> negatives, const ad::Var& hs,
                     const ad::Var& ht, double margin) {
  if (positives.empty()) throw std::invalid_argument("triplet_loss: no positives");
  if (negatives.empty()) throw std::invalid_argument("triplet_loss: no negatives");
  std::vector<std::int64_t> pos_s, pos_t, neg_s, neg_t;
  pos_s.reserve(negatives.size());
  pos_t.reserve(negatives.size());
  neg_s.reserve(negatives.size());
  neg_t.reserve(negatives.size());
  for (const auto& n : negatives) {
    const SeedPair& p = positives[n.positive];
    pos_s.push_back(p.source);
    pos_t.push_back(p.target);
    neg_s.push_back(n.source);
    neg_t.push_back(n.target);
  }
  ad::Var d_pos = ad::row_sqdist(ad::gather_rows(hs, pos_s), ad::gather_rows(ht, pos_t));
  ad::Var d_neg = ad::row_sqdist(ad::gather_rows(hs, neg_s), ad::gather_rows(ht, neg_t));
  return ad::mean(ad::relu(ad::add_scalar(d_pos - d_neg, margin)));
}

void write_matching_csv_header(std::ostream& out) {
  out << "step,mmd,triplet,total\n";
}

void write_matching_csv_row(std::ostream& out, const MatchingLoss& loss) {
  out << loss.step << ',' << format_double(loss.mmd) << ','
      << format_double(loss.triplet) << ',' << format_double(loss.total) << '\n';
}

AdversarialMatcher::AdversarialMatcher(Generator generator,
                                       std::vector<Parameter*> generator_params,
                                       Critic* critic, MatchingConfig config)
    : generator_(std::move(generator)),
      generator_params_(generator_params),
      critic_(critic),
      config_(config),
      generator_opt_(std::move(generator_params),
                     AdamOptions{.learning_rate = config.encoder_learning_rate}) {
  if (config_.margin <= 0.0) throw std::invalid_argument("triplet margin must be > 0");
  if (config_.negatives_per_seed < 1) {
    throw std::invalid_argument("negatives_per_seed must be >= 1");
  }
  if (critic_ != nullptr) {
    critic_opt_ = std::make_unique<Adam>(
        critic_->parameters(),
        AdamOptions{.learning_rate = config_.critic_learning_rate});
  }
}

std::vector<double> AdversarialMatcher::critic_phase(int steps) {
  std::vector<double> history;
  if (critic_ == nullptr || steps <= 0) return history;
  auto [hs_var, ht_var] = generator_();
  // Generator is frozen during the critic phase.
  const ad::Var hs = ad::constant(hs_var.value());
  const ad::Var ht = ad::constant(ht_var.value());
  const CriticFn critic = [this](const ad::Var& x) { return critic_->forward(x); };
  for (int k = 0; k < steps; ++k) {
    critic_opt_->zero_grad();
    ad::Var mmd = empirical_mmd(hs, ht, critic);
    if (!std::isfinite(mmd.scalar())) {
      throw TrainingError("critic MMD became non-finite; lower the critic learning rate");
    }
    history.push_back(mmd.scalar());
    ad::backward(ad::scale(mmd, -1.0));
    critic_opt_->step();
  }
  return history;
}

MatchingLoss AdversarialMatcher::step(std::span<const SeedPair> train_seeds,
                                      std::int64_t n_source, std::int64_t n_target,
                                      std::mt19937_64& rng) {
  const bool use_mmd = critic_ != nullptr && config_.mmd_weight != 0.0;
  if (use_mmd) critic_phase(config_.critic_steps);

  generator_opt_.zero_grad();
  auto [hs, ht] = generator_();
  MatchingLoss loss;
  loss.step = ++steps_;
  ad::Var total;
  if (!train_seeds.empty()) {
    const auto negatives = sample_negatives(train_seeds, n_source, n_target,
                                            config_.negatives_per_seed, rng);
    ad::Var triplet = triplet_loss(train_seeds, negatives, hs, ht, config_.margin);
    loss.triplet = triplet.scalar();
    total = triplet;
  }
  if (use_mmd) {
    const CriticFn critic = [this](const ad::Var& x) { return critic_->forward(x); };
    ad::Var mmd = empirical_mmd(hs, ht, critic);
    loss.mmd = mmd.scalar();
    ad::Var weighted = ad::scale(mmd, config_.mmd_weight);
    total = total.valid() ? total + weighted : weighted;
  }
  if (!total.valid()) return loss;
  loss.total = total.scalar();
  if (!std::isfinite(loss.total)) {
    throw TrainingError("matching loss became non-finite at step " +
                        std::to_string(loss.step) +
                        "; the encoder learning rate is probably too high");
  }
  ad::backward(total);
  generator_opt_.step();
  return loss;
}

}  // namespace kgalign
