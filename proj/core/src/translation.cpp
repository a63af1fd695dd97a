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

#include "kgalign/translation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "kgalign/checkpoint.hpp"
#include "kgalign/kernel_matching.hpp"

namespace kgalign {

namespace {

constexpr double kProbFloor = 1e-6;
constexpr double kDivergenceLimit = 1e6;

Matrix mask_column(const std::vector<bool>& mask) {
  Matrix m(static_cast<Index>(mask.size()), 1);
  for (std::size_t b = 0; b < mask.size(); ++b) m(static_cast<Index>(b), 0) = mask[b] ? 1.0 : 0.0;
  return m;
}

ad::Var with_mask_bit(const ad::Var& x, const std::vector<bool>& mask, bool enabled) {
  if (!enabled) return x;
  const ad::Var parts[] = {x, ad::constant(mask_column(mask))};
  return ad::concat_cols(parts);
}

std::vector<bool> all_true(std::size_t n) { return std::vector<bool>(n, true); }

// mean over batch rows and steps of squared distances.
ad::Var mean_step_distance(std::span<const ad::Var> outputs,
                           const std::vector<Matrix>& references) {
  ad::Var total;
  for (std::size_t l = 0; l < outputs.size(); ++l) {
    ad::Var d = ad::sum(ad::row_sqdist(outputs[l], ad::constant(references[l])));
    total = total.valid() ? total + d : d;
  }
  const double count =
      static_cast<double>(outputs.size()) * static_cast<double>(outputs.front().rows());
  return ad::scale(total, 1.0 / count);
}

}  // namespace

Lstm::Lstm(const std::string& prefix, Index input_dim, Index hidden_dim,
           std::mt19937_64& rng)
    : w_x_(prefix + ".w_x", glorot(input_dim, 4 * hidden_dim, rng)),
      w_h_(prefix + ".w_h", glorot(hidden_dim, 4 * hidden_dim, rng)),
      b_(prefix + ".b", Matrix::Zero(1, 4 * hidden_dim)) {
  // Gate order: input, forget, cell, output. Forget bias starts at 1.
  b_.value().middleCols(hidden_dim, hidden_dim).setOnes();
}

std::vector<ad::Var> Lstm::run(std::span<const ad::Var> inputs) {
  std::vector<ad::Var> hidden;
  if (inputs.empty()) return hidden;
  const Index batch = inputs.front().rows();
  const Index h_dim = hidden_dim();
  const ad::Var w_x = ad::param(w_x_);
  const ad::Var w_h = ad::param(w_h_);
  const ad::Var b = ad::param(b_);
  ad::Var h = ad::constant(Matrix::Zero(batch, h_dim));
  ad::Var c = ad::constant(Matrix::Zero(batch, h_dim));
  hidden.reserve(inputs.size());
  for (const auto& x : inputs) {
    ad::Var gates = ad::add_row(ad::matmul(x, w_x) + ad::matmul(h, w_h), b);
    ad::Var i = ad::sigmoid(ad::slice_cols(gates, 0, h_dim));
    ad::Var f = ad::sigmoid(ad::slice_cols(gates, h_dim, h_dim));
    ad::Var g = ad::tanh(ad::slice_cols(gates, 2 * h_dim, h_dim));
    ad::Var o = ad::sigmoid(ad::slice_cols(gates, 3 * h_dim, h_dim));
    c = ad::hadamard(f, c) + ad::hadamard(i, g);
    h = ad::hadamard(o, ad::tanh(c));
    hidden.push_back(h);
  }
  return hidden;
}

Dense::Dense(const std::string& prefix, Matrix w, Matrix b)
    : w_(prefix + ".w", std::move(w)), b_(prefix + ".b", std::move(b)) {}

ad::Var Dense::forward(const ad::Var& x) {
  return ad::add_row(ad::matmul(x, ad::param(w_)), ad::param(b_));
}

SequenceModels::SequenceModels(const SequenceModelConfig& config, std::mt19937_64& rng)
    : config_(config) {
  if (config.embedding_dim < 1 || config.hidden_dim < 1) {
    throw std::invalid_argument("sequence model dimensions must be positive");
  }
  const Index d = config.embedding_dim;
  const Index h = config.hidden_dim;
  const Index cond = config.mask_conditioning ? 1 : 0;
  filler_lstm_ = Lstm("filler.lstm", d + cond, h, rng);
  filler_out_ = Dense("filler.out", glorot(h, d, rng), Matrix::Zero(1, d));
  placeholder_ = Parameter("filler.placeholder", Matrix::Zero(1, d));
  translator_lstm_ = Lstm("translator.lstm", d, h, rng);
  // Zero output weights: the translator starts as the identity map.
  translator_out_ = Dense("translator.out", Matrix::Zero(h, d), Matrix::Zero(1, d));
  disc_lstm_ = Lstm("discriminator.lstm", d + cond, h, rng);
  disc_out_ = Dense("discriminator.out", glorot(h, 1, rng), Matrix::Zero(1, 1));
}

std::vector<Parameter*> SequenceModels::filler_parameters() {
  auto out = filler_lstm_.parameters();
  for (auto* p : filler_out_.parameters()) out.push_back(p);
  out.push_back(&placeholder_);
  return out;
}

std::vector<Parameter*> SequenceModels::translator_parameters() {
  auto out = translator_lstm_.parameters();
  for (auto* p : translator_out_.parameters()) out.push_back(p);
  return out;
}

std::vector<Parameter*> SequenceModels::discriminator_parameters() {
  auto out = disc_lstm_.parameters();
  for (auto* p : disc_out_.parameters()) out.push_back(p);
  return out;
}

std::vector<Parameter*> SequenceModels::generator_parameters() {
  auto out = filler_parameters();
  for (auto* p : translator_parameters()) out.push_back(p);
  return out;
}

void SequenceModels::save(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_parameters(dir / "filler.ckpt", filler_parameters());
  save_parameters(dir / "translator.ckpt", translator_parameters());
  save_parameters(dir / "discriminator.ckpt", discriminator_parameters());
}

void SequenceModels::load(const std::filesystem::path& dir) {
  load_parameters(dir / "filler.ckpt", filler_parameters());
  load_parameters(dir / "translator.ckpt", translator_parameters());
  load_parameters(dir / "discriminator.ckpt", discriminator_parameters());
}

EntityId top1_pseudo_label(EntityId target_node, const Matrix& hs, const Matrix& ht) {
  if (hs.rows() == 0) throw std::invalid_argument("top1_pseudo_label: empty Hs");
  if (hs.cols() != ht.cols()) {
    throw std::invalid_argument("top1_pseudo_label: embedding widths differ");
  }
  const auto query = ht.row(target_node);
  EntityId best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index s = 0; s < hs.rows(); ++s) {
    const double d = (hs.row(s) - query).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = s;
    }
  }
  return best;
}

std::vector<EntityId> top1_pseudo_labels(const Matrix& hs, const Matrix& ht) {
  std::vector<EntityId> out(static_cast<std::size_t>(ht.rows()));
  for (Index t = 0; t < ht.rows(); ++t) out[static_cast<std::size_t>(t)] = top1_pseudo_label(t, hs, ht);
  return out;
}

KTBatch make_kt_batch(std::span<const MaskedWalkPair> pairs, const Matrix& hs,
                      const Matrix& ht, std::span<const EntityId> pseudo_labels) {
  if (pairs.empty()) throw std::invalid_argument("make_kt_batch: empty batch");
  KTBatch batch;
  batch.batch_size = pairs.size();
  batch.length = static_cast<int>(pairs.front().target_walk.length());
  const Index b_rows = static_cast<Index>(pairs.size());
  const Index d = hs.cols();
  for (int l = 0; l < batch.length; ++l) {
    std::vector<bool> mask(pairs.size());
    Matrix source = Matrix::Zero(b_rows, d);
    Matrix reference(b_rows, d);
    Matrix target(b_rows, d);
    for (std::size_t b = 0; b < pairs.size(); ++b) {
      const auto& p = pairs[b];
      if (static_cast<int>(p.target_walk.length()) != batch.length) {
        throw std::invalid_argument("make_kt_batch: walks differ in length");
      }
      const auto lu = static_cast<std::size_t>(l);
      const EntityId t = p.target_walk.nodes[lu];
      const Index row = static_cast<Index>(b);
      mask[b] = p.mask[lu] == 1;
      target.row(row) = ht.row(t);
      if (mask[b]) {
        source.row(row) = hs.row(p.source_walk[lu]);
        reference.row(row) = hs.row(p.source_walk[lu]);
      } else {
        reference.row(row) = hs.row(pseudo_labels[static_cast<std::size_t>(t)]);
      }
    }
    batch.mask.push_back(std::move(mask));
    batch.source_rows.push_back(std::move(source));
    batch.filler_reference.push_back(std::move(reference));
    batch.target_rows.push_back(std::move(target));
  }
  return batch;
}

std::vector<ad::Var> filler_forward(const KTBatch& batch, SequenceModels& models) {
  const bool cond = models.config().mask_conditioning;
  const ad::Var placeholder = ad::param(models.placeholder());
  std::vector<ad::Var> anchors;
  std::vector<ad::Var> inputs;
  for (int l = 0; l < batch.length; ++l) {
    const auto lu = static_cast<std::size_t>(l);
    ad::Var anchor = ad::constant(batch.source_rows[lu]);
    ad::Var filled_in = ad::select_rows(
        batch.mask[lu], anchor,
        ad::add_row(ad::constant(Matrix::Zero(anchor.rows(), anchor.cols())), placeholder));
    inputs.push_back(with_mask_bit(filled_in, batch.mask[lu], cond));
    anchors.push_back(anchor);
  }
  const auto hidden = models.filler_lstm().run(inputs);
  std::vector<ad::Var> out;
  out.reserve(hidden.size());
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    out.push_back(ad::select_rows(batch.mask[l], anchors[l],
                                  models.filler_out().forward(hidden[l])));
  }
  return out;
}

std::vector<ad::Var> translator_forward(std::span<const ad::Var> filled,
                                        SequenceModels& models) {
  const auto hidden = models.translator_lstm().run(filled);
  std::vector<ad::Var> out;
  out.reserve(hidden.size());
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    out.push_back(filled[l] + models.translator_out().forward(hidden[l]));
  }
  return out;
}

std::vector<ad::Var> discriminator_forward(std::span<const ad::Var> sequence,
                                           const std::vector<std::vector<bool>>& mask,
                                           SequenceModels& models) {
  const bool cond = models.config().mask_conditioning;
  std::vector<ad::Var> inputs;
  inputs.reserve(sequence.size());
  for (std::size_t l = 0; l < sequence.size(); ++l) {
    const auto& m = l < mask.size() ? mask[l] : all_true(static_cast<std::size_t>(sequence[l].rows()));
    inputs.push_back(with_mask_bit(sequence[l], m, cond));
  }
  const auto hidden = models.discriminator_lstm().run(inputs);
  std::vector<ad::Var> probs;
  probs.reserve(hidden.size());
  for (const auto& h : hidden) {
    probs.push_back(ad::clamp(ad::sigmoid(models.discriminator_out().forward(h)),
                              kProbFloor, 1.0 - kProbFloor));
  }
  return probs;
}

ad::Var sequence_log_score(std::span<const ad::Var> step_probs) {
  ad::Var total;
  for (const auto& p : step_probs) {
    ad::Var lp = ad::log(p);
    total = total.valid() ? total + lp : lp;
  }
  return total;
}

AdversarialTerms adversarial_loss(std::span<const ad::Var> real_probs,
                                  std::span<const ad::Var> fake_probs) {
  if (real_probs.empty() || real_probs.size() != fake_probs.size()) {
    throw std::invalid_argument("adversarial_loss: real and fake batches differ");
  }
  std::vector<ad::Var> one_minus_fake;
  one_minus_fake.reserve(fake_probs.size());
  for (const auto& p : fake_probs) {
    one_minus_fake.push_back(ad::add_scalar(ad::scale(p, -1.0), 1.0));
  }
  const ad::Var real_score = sequence_log_score(real_probs);
  const ad::Var fake_score = sequence_log_score(fake_probs);
  const ad::Var fake_reject = sequence_log_score(one_minus_fake);
  AdversarialTerms terms;
  terms.disc_term = ad::scale(ad::mean(real_score + fake_reject), -1.0);
  terms.gen_term = ad::scale(ad::mean(fake_score), -1.0);
  if (!std::isfinite(terms.disc_term.scalar()) || !std::isfinite(terms.gen_term.scalar())) {
    throw TrainingError("adversarial loss is non-finite");
  }
  return terms;
}

GeneratorLossParts generator_loss(const KTBatch& batch, SequenceModels& models,
                                  double adversarial_weight) {
  const auto filled = filler_forward(batch, models);
  const auto translated = translator_forward(filled, models);
  GeneratorLossParts parts;
  parts.reg_fill = mean_step_distance(filled, batch.filler_reference);
  parts.reg_trans = mean_step_distance(translated, batch.target_rows);
  parts.total = parts.reg_fill + parts.reg_trans;
  if (adversarial_weight != 0.0) {
    const auto fake_probs = discriminator_forward(translated, batch.mask, models);
    parts.gen_term = ad::scale(ad::mean(sequence_log_score(fake_probs)), -1.0);
    parts.total = parts.total + ad::scale(parts.gen_term, adversarial_weight);
  } else {
    parts.gen_term = ad::constant(Matrix::Zero(1, 1));
  }
  return parts;
}

void write_kt_csv_header(std::ostream& out) {
  out << "step,disc,gen,reg_fill,reg_trans\n";
}

void write_kt_csv_row(std::ostream& out, const KTLoss& loss) {
  out << loss.step << ',' << format_double(loss.disc) << ',' << format_double(loss.gen)
      << ',' << format_double(loss.reg_fill) << ',' << format_double(loss.reg_trans)
      << '\n';
}

KTTrainer::KTTrainer(SequenceModels* models, KTConfig config)
    : models_(models),
      config_(config),
      generator_opt_(models->generator_parameters(),
                     AdamOptions{.learning_rate = config.generator_learning_rate}),
      discriminator_opt_(models->discriminator_parameters(),
                         AdamOptions{.learning_rate = config.discriminator_learning_rate}) {}

double KTTrainer::discriminator_step(const KTBatch& batch) {
  // Generator outputs are detached for the discriminator update.
  std::vector<ad::Var> fake;
  {
    const auto filled = filler_forward(batch, *models_);
    for (const auto& t : translator_forward(filled, *models_)) {
      fake.push_back(ad::constant(t.value()));
    }
  }
  std::vector<ad::Var> real;
  for (const auto& m : batch.target_rows) real.push_back(ad::constant(m));
  discriminator_opt_.zero_grad();
  const auto terms = adversarial_loss(discriminator_forward(real, batch.mask, *models_),
                                      discriminator_forward(fake, batch.mask, *models_));
  const double value = terms.disc_term.scalar();
  if (!std::isfinite(value) || value > kDivergenceLimit) {
    throw TrainingError("discriminator loss diverged (" + format_double(value) +
                        "); lower the discriminator learning rate");
  }
  ad::backward(terms.disc_term);
  discriminator_opt_.step();
  return value;
}

KTLoss KTTrainer::step(const KTBatch& batch) {
  KTLoss loss;
  loss.step = ++steps_;
  if (config_.adversarial_weight != 0.0) loss.disc = discriminator_step(batch);

  generator_opt_.zero_grad();
  const auto parts = generator_loss(batch, *models_, config_.adversarial_weight);
  loss.gen = parts.gen_term.scalar();
  loss.reg_fill = parts.reg_fill.scalar();
  loss.reg_trans = parts.reg_trans.scalar();
  const double total = parts.total.scalar();
  if (!std::isfinite(total) || total > kDivergenceLimit) {
    throw TrainingError("generator loss diverged at step " + std::to_string(loss.step) +
                        " (" + format_double(total) +
                        "); lower the generator learning rate");
  }
  ad::backward(parts.total);
  generator_opt_.step();
  return loss;
}

std::vector<Matrix> translate_steps(const std::vector<Matrix>& steps,
                                    SequenceModels& models) {
  std::vector<ad::Var> inputs;
  inputs.reserve(steps.size());
  for (const auto& m : steps) inputs.push_back(ad::constant(m));
  std::vector<Matrix> out;
  for (const auto& v : translator_forward(inputs, models)) out.push_back(v.value());
  return out;
}

}  // namespace kgalign
