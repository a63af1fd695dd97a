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

#ifndef KGALIGN_TRANSLATION_HPP_
#define KGALIGN_TRANSLATION_HPP_

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "kgalign/tensor.hpp"
#include "kgalign/walks.hpp"

namespace kgalign {

// Batched LSTM over a sequence of B x in_dim step inputs.
class Lstm {
 public:
  Lstm() = default;
  Lstm(const std::string& prefix, Index input_dim, Index hidden_dim,
       std::mt19937_64& rng);

  Index input_dim() const { return w_x_.value().rows(); }
  Index hidden_dim() const { return w_h_.value().rows(); }
  // Hidden state after each step, zero initial state.
  std::vector<ad::Var> run(std::span<const ad::Var> inputs);
  std::vector<Parameter*> parameters() { return {&w_x_, &w_h_, &b_}; }

 private:
  Parameter w_x_, w_h_, b_;
};

class Dense {
 public:
  Dense() = default;
  Dense(const std::string& prefix, Matrix w, Matrix b);

  ad::Var forward(const ad::Var& x);
  std::vector<Parameter*> parameters() { return {&w_, &b_}; }
  Parameter& weight() { return w_; }
  Parameter& bias() { return b_; }

 private:
  Parameter w_, b_;
};

struct SequenceModelConfig {
  Index embedding_dim = 1;
  Index hidden_dim = 64;
  // Append the mask bit to every filler/discriminator step input.
  bool mask_conditioning = true;
};

// Filler, translator and discriminator plus the learned placeholder vector
// that stands in for masked source positions.
class SequenceModels {
 public:
  SequenceModels() = default;
  SequenceModels(const SequenceModelConfig& config, std::mt19937_64& rng);

  const SequenceModelConfig& config() const { return config_; }

  Lstm& filler_lstm() { return filler_lstm_; }
  Dense& filler_out() { return filler_out_; }
  Parameter& placeholder() { return placeholder_; }
  Lstm& translator_lstm() { return translator_lstm_; }
  Dense& translator_out() { return translator_out_; }
  Lstm& discriminator_lstm() { return disc_lstm_; }
  Dense& discriminator_out() { return disc_out_; }

  std::vector<Parameter*> filler_parameters();
  std::vector<Parameter*> translator_parameters();
  std::vector<Parameter*> discriminator_parameters();
  std::vector<Parameter*> generator_parameters();

  // Writes filler.ckpt, translator.ckpt and discriminator.ckpt into `dir`.
  void save(const std::filesystem::path& dir);
  void load(const std::filesystem::path& dir);

 private:
  SequenceModelConfig config_;
  Lstm filler_lstm_;
  Dense filler_out_;
  Parameter placeholder_;
  Lstm translator_lstm_;
  Dense translator_out_;
  Lstm disc_lstm_;
  Dense disc_out_;
};

// Masked walk pairs resolved against frozen embeddings, stored step-major:
// element l of each vector holds position l of every walk in the batch.
struct KTBatch {
  std::size_t batch_size = 0;
  int length = 0;
  std::vector<std::vector<bool>> mask;
  // Anchor rows of Hs, zero rows at masked positions.
  std::vector<Matrix> source_rows;
  // Hs rows the filler is pulled towards: the anchor itself or the top-1
  // pseudo label of the target node.
  std::vector<Matrix> filler_reference;
  std::vector<Matrix> target_rows;
};

// argmin_s ||Hs[s] - Ht[t]||^2, ties to the smallest source id.
EntityId top1_pseudo_label(EntityId target_node, const Matrix& hs, const Matrix& ht);
std::vector<EntityId> top1_pseudo_labels(const Matrix& hs, const Matrix& ht);

// `pseudo_labels[t]` is the pseudo label of target node t.
KTBatch make_kt_batch(std::span<const MaskedWalkPair> pairs, const Matrix& hs,
                      const Matrix& ht, std::span<const EntityId> pseudo_labels);

// Filled source sequence; anchor positions pass through bit-exactly.
std::vector<ad::Var> filler_forward(const KTBatch& batch, SequenceModels& models);
// Residual recurrent map: out_l = in_l + Dense(h_l).
std::vector<ad::Var> translator_forward(std::span<const ad::Var> filled,
                                        SequenceModels& models);
// Per-step probabilities in [1e-6, 1 - 1e-6], shape B x 1 each.
std::vector<ad::Var> discriminator_forward(std::span<const ad::Var> sequence,
                                           const std::vector<std::vector<bool>>& mask,
                                           SequenceModels& models);

// Per-walk sequence log-score: sum over positions of log p_l (B x 1).
ad::Var sequence_log_score(std::span<const ad::Var> step_probs);

struct AdversarialTerms {
  // mean_b -sum_l log D(fake)_l   (non-saturating generator objective)
  ad::Var gen_term;
  // mean_b -[sum_l log D(real)_l + sum_l log(1 - D(fake)_l)]
  ad::Var disc_term;
};

AdversarialTerms adversarial_loss(std::span<const ad::Var> real_probs,
                                  std::span<const ad::Var> fake_probs);

struct GeneratorLossParts {
  ad::Var total;
  ad::Var gen_term;
  ad::Var reg_fill;
  ad::Var reg_trans;
};

// adversarial_weight * gen_term + mean d(F, reference) + mean d(T(F), W_t).
GeneratorLossParts generator_loss(const KTBatch& batch, SequenceModels& models,
                                  double adversarial_weight = 1.0);

struct KTConfig {
  double generator_learning_rate = 1e-3;
  double discriminator_learning_rate = 1e-3;
  double adversarial_weight = 1.0;
  std::size_t batch_size = 32;
};

struct KTLoss {
  std::int64_t step = 0;
  double disc = 0.0;
  double gen = 0.0;
  double reg_fill = 0.0;
  double reg_trans = 0.0;
};

void write_kt_csv_header(std::ostream& out);
void write_kt_csv_row(std::ostream& out, const KTLoss& loss);

// One discriminator update on disc_term followed by one filler+translator
// update on generator_loss.
class KTTrainer {
 public:
  KTTrainer(SequenceModels* models, KTConfig config);

  KTLoss step(const KTBatch& batch);
  // Discriminator update only; returns disc_term before the update.
  double discriminator_step(const KTBatch& batch);
  std::int64_t steps_taken() const { return steps_; }

 private:
  SequenceModels* models_;
  KTConfig config_;
  Adam generator_opt_;
  Adam discriminator_opt_;
  std::int64_t steps_ = 0;
};

// Runs the translator over fixed step inputs (no gradient tracking needed by
// callers). `steps[l]` is B x D.
std::vector<Matrix> translate_steps(const std::vector<Matrix>& steps,
                                    SequenceModels& models);

}  // namespace kgalign

#endif  // KGALIGN_TRANSLATION_HPP_
