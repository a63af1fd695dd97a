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

#ifndef KGALIGN_PIPELINE_HPP_
#define KGALIGN_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgalign/data_io.hpp"
#include "kgalign/encoder.hpp"
#include "kgalign/inference.hpp"
#include "kgalign/kernel_matching.hpp"
#include "kgalign/translation.hpp"
#include "kgalign/walks.hpp"

namespace kgalign {

enum class AblationLevel { kName, kMa, kKe, kDaea };

std::string to_string(AblationLevel level);
AblationLevel parse_ablation(const std::string& s);

// Error raised by a pipeline stage; what() starts with "[stage] ".
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  // Empty means: generate from `synthetic`.
  std::filesystem::path dataset;
  SyntheticSpec synthetic;
  Direction direction = Direction::kForward;
  AblationLevel ablation = AblationLevel::kDaea;
  std::uint64_t seed = 1;
  // Train fraction used when a dataset has no pair tagged as train.
  double seed_fraction = 0.3;
  // Per-coordinate Gaussian noise added to unit name vectors, 0 disables.
  double name_noise = 0.0;

  Index name_dim = 64;
  Index hidden_dim = 128;
  int layers = 2;
  FusionMode fusion = FusionMode::kConcat;

  MatchingConfig matching;
  Index critic_hidden = 128;
  Index critic_output = 64;
  int matching_steps = 200;

  WalkOptions walks;
  Index kt_hidden = 64;
  KTConfig kt;
  int kt_epochs = 10;

  int inference_walks = 5;
  ConsolidationStrategy strategy = ConsolidationStrategy::kSoftmaxWeightedAverage;

  std::filesystem::path out_dir = "kgalign-out";

  // Throws std::invalid_argument naming the offending key.
  void validate() const;
};

// Applies one key=value setting; unknown keys and bad values throw.
void apply_setting(PipelineConfig& config, const std::string& key,
                   const std::string& value);
// Flat key=value file, '#' starts a comment.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text, const std::string& origin = "<config>");
std::string format_config(const PipelineConfig& config);

// Loaded graphs with the split and the resolved name rows of both sides.
struct PreparedData {
  DatasetPair pair;
  Matrix source_names;
  Matrix target_names;
};

struct Embeddings {
  Matrix source;
  Matrix target;
};

// Independent rng stream for one stage, derived from the run seed.
std::mt19937_64 stage_rng(std::uint64_t seed, std::uint64_t stage);

PreparedData prepare_data(const PipelineConfig& config);

// Name rows only (the NAME level).
Embeddings name_embeddings(const PreparedData& data);

// Stages 1 and 2. `with_mmd` selects the adversarial critic. Writes
// encoder.ckpt, critic.ckpt (with_mmd only), matching_loss.csv and
// embeddings.ckpt into `out_dir` when it is non-empty.
Embeddings train_embeddings(const PipelineConfig& config, const PreparedData& data,
                            bool with_mmd, const std::filesystem::path& out_dir);

void save_embeddings(const std::filesystem::path& path, const Embeddings& e);
Embeddings load_embeddings(const std::filesystem::path& path);

// Stage 3 on frozen embeddings. Writes kt/ and kt_loss.csv when `out_dir`
// is non-empty.
SequenceModels train_translation(const PipelineConfig& config, const PreparedData& data,
                                 const Embeddings& embeddings,
                                 const std::filesystem::path& out_dir);

// Ranks every test pair; `models` null means untranslated source rows.
AlignmentReport run_inference(const PipelineConfig& config, const PreparedData& data,
                              const Embeddings& embeddings, SequenceModels* models);

// Every stage the ablation level asks for, artifacts under config.out_dir,
// report in report.csv.
AlignmentReport run_pipeline(const PipelineConfig& config);

struct AblationRow {
  AblationLevel level;
  AlignmentReport report;
};

// All four levels on one split; DAEA translates the KE embeddings. Each level
// writes into out_dir/<level>/, the table goes to out_dir/ablation.csv.
std::vector<AblationRow> run_ablation_suite(const PipelineConfig& base);
void write_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows);

}  // namespace kgalign

#endif  // KGALIGN_PIPELINE_HPP_
