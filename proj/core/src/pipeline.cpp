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

#include "kgalign/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

#include "kgalign/checkpoint.hpp"
#include "kgalign/names.hpp"

namespace kgalign {

namespace fs = std::filesystem;

namespace {

enum Stream : std::uint64_t {
  kNamesStream = 0,
  kEncoderInitStream = 1,
  kCriticInitStream = 2,
  kTranslationStream = 3,
  kInferenceStream = 4,
  kMatchingStream = 5,
};

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  std::from_chars_result res;
  if constexpr (std::is_floating_point_v<T>) {
    res = std::from_chars(first, last, out);
  } else {
    res = std::from_chars(first, last, out, 10);
  }
  if (res.ec != std::errc() || res.ptr != last || value.empty()) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Setting {
  const char* key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Setting number_setting(const char* key, T PipelineConfig::*member) {
  return {key,
          [key, member](PipelineConfig& c, const std::string& v) {
            c.*member = parse_number<T>(key, v);
          },
          [member](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
            else return std::to_string(c.*member);
          }};
}

// Member of a nested struct, e.g. matching.margin.
template <typename Outer, typename T>
Setting nested_setting(const char* key, Outer PipelineConfig::*outer, T Outer::*member) {
  return {key,
          [key, outer, member](PipelineConfig& c, const std::string& v) {
            (c.*outer).*member = parse_number<T>(key, v);
          },
          [outer, member](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double((c.*outer).*member);
            else return std::to_string((c.*outer).*member);
          }};
}

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
      {"dataset", [](PipelineConfig& c, const std::string& v) { c.dataset = v; },
       [](const PipelineConfig& c) { return c.dataset.string(); }},
      nested_setting("synthetic.entities", &PipelineConfig::synthetic, &SyntheticSpec::n_entities),
      nested_setting("synthetic.relations", &PipelineConfig::synthetic, &SyntheticSpec::n_relations),
      nested_setting("synthetic.attributes", &PipelineConfig::synthetic,
                     &SyntheticSpec::n_attributes),
      nested_setting("synthetic.edge_probability", &PipelineConfig::synthetic,
                     &SyntheticSpec::edge_probability),
      nested_setting("synthetic.edge_drop_rate", &PipelineConfig::synthetic,
                     &SyntheticSpec::edge_drop_rate),
      nested_setting("synthetic.max_attributes", &PipelineConfig::synthetic,
                     &SyntheticSpec::max_attributes_per_entity),
      {"direction",
       [](PipelineConfig& c, const std::string& v) { c.direction = parse_direction(v); },
       [](const PipelineConfig& c) { return to_string(c.direction); }},
      {"ablation",
       [](PipelineConfig& c, const std::string& v) { c.ablation = parse_ablation(v); },
       [](const PipelineConfig& c) { return to_string(c.ablation); }},
      number_setting("seed", &PipelineConfig::seed),
      number_setting("seed_fraction", &PipelineConfig::seed_fraction),
      number_setting("name_noise", &PipelineConfig::name_noise),
      number_setting("name_dim", &PipelineConfig::name_dim),
      number_setting("hidden_dim", &PipelineConfig::hidden_dim),
      number_setting("layers", &PipelineConfig::layers),
      {"fusion", [](PipelineConfig& c, const std::string& v) { c.fusion = parse_fusion(v); },
       [](const PipelineConfig& c) { return to_string(c.fusion); }},
      nested_setting("margin", &PipelineConfig::matching, &MatchingConfig::margin),
      nested_setting("negatives", &PipelineConfig::matching, &MatchingConfig::negatives_per_seed),
      nested_setting("critic_steps", &PipelineConfig::matching, &MatchingConfig::critic_steps),
      nested_setting("encoder_lr", &PipelineConfig::matching,
                     &MatchingConfig::encoder_learning_rate),
      nested_setting("critic_lr", &PipelineConfig::matching,
                     &MatchingConfig::critic_learning_rate),
      nested_setting("mmd_weight", &PipelineConfig::matching, &MatchingConfig::mmd_weight),
      number_setting("critic_hidden", &PipelineConfig::critic_hidden),
      number_setting("critic_output", &PipelineConfig::critic_output),
      number_setting("matching_steps", &PipelineConfig::matching_steps),
      nested_setting("walk_length", &PipelineConfig::walks, &WalkOptions::length),
      nested_setting("walk_bias", &PipelineConfig::walks, &WalkOptions::bias),
      nested_setting("walks_per_anchor", &PipelineConfig::walks, &WalkOptions::walks_per_anchor),
      number_setting("kt_hidden", &PipelineConfig::kt_hidden),
      nested_setting("kt_gen_lr", &PipelineConfig::kt, &KTConfig::generator_learning_rate),
      nested_setting("kt_disc_lr", &PipelineConfig::kt, &KTConfig::discriminator_learning_rate),
      nested_setting("kt_adversarial_weight", &PipelineConfig::kt,
                     &KTConfig::adversarial_weight),
      nested_setting("kt_batch", &PipelineConfig::kt, &KTConfig::batch_size),
      number_setting("kt_epochs", &PipelineConfig::kt_epochs),
      number_setting("inference_walks", &PipelineConfig::inference_walks),
      {"strategy",
       [](PipelineConfig& c, const std::string& v) { c.strategy = parse_strategy(v); },
       [](const PipelineConfig& c) { return to_string(c.strategy); }},
      {"out", [](PipelineConfig& c, const std::string& v) { c.out_dir = v; },
       [](const PipelineConfig& c) { return c.out_dir.string(); }},
  };
  return table;
}

template <typename F>
auto in_stage(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

Matrix perturbed_rows(const Matrix& rows, double sigma, std::mt19937_64& rng) {
  NameEmbeddingTable table(rows.cols());
  for (Index e = 0; e < rows.rows(); ++e) table.set(e, rows.row(e).transpose());
  const auto noisy = perturb_names(table, sigma, rng);
  Matrix out(rows.rows(), rows.cols());
  for (Index e = 0; e < rows.rows(); ++e) out.row(e) = noisy.at(e).transpose();
  return out;
}

GraphInputs graph_inputs(const KnowledgeGraph& kg, const Matrix& names, Index relation_width,
                         Index attribute_width) {
  return {build_views(kg), names, identity_features(kg.num_relations(), relation_width),
          identity_features(kg.num_attributes(), attribute_width)};
}

void write_report_file(const fs::path& dir, const AlignmentReport& report) {
  fs::create_directories(dir);
  write_report(dir / "report.csv", report);
}

}  // namespace

std::string to_string(AblationLevel level) {
  switch (level) {
    case AblationLevel::kName: return "name";
    case AblationLevel::kMa: return "ma";
    case AblationLevel::kKe: return "ke";
    case AblationLevel::kDaea: return "daea";
  }
  return "daea";
}

AblationLevel parse_ablation(const std::string& s) {
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "name") return AblationLevel::kName;
  if (lower == "ma") return AblationLevel::kMa;
  if (lower == "ke") return AblationLevel::kKe;
  if (lower == "daea") return AblationLevel::kDaea;
  throw std::invalid_argument("unknown ablation level '" + s + "' (name, ma, ke, daea)");
}

StageError::StageError(std::string stage, const std::string& message)
    : std::runtime_error("[" + stage + "] " + message), stage_(std::move(stage)) {}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("config key '" + key + "': " + why);
  };
  if (!(seed_fraction > 0.0 && seed_fraction < 1.0)) fail("seed_fraction", "must lie in (0, 1)");
  if (name_noise < 0.0) fail("name_noise", "must be >= 0");
  if (name_dim < 1) fail("name_dim", "must be >= 1");
  if (hidden_dim < 1) fail("hidden_dim", "must be >= 1");
  if (layers < 1) fail("layers", "must be >= 1");
  if (matching.margin <= 0.0) fail("margin", "must be > 0");
  if (matching.negatives_per_seed < 1) fail("negatives", "must be >= 1");
  if (matching.critic_steps < 0) fail("critic_steps", "must be >= 0");
  if (matching.encoder_learning_rate <= 0.0) fail("encoder_lr", "must be > 0");
  if (matching.critic_learning_rate <= 0.0) fail("critic_lr", "must be > 0");
  if (matching.mmd_weight < 0.0) fail("mmd_weight", "must be >= 0");
  if (critic_hidden < 1) fail("critic_hidden", "must be >= 1");
  if (critic_output < 1) fail("critic_output", "must be >= 1");
  if (matching_steps < 0) fail("matching_steps", "must be >= 0");
  if (walks.length < 2) fail("walk_length", "must be >= 2");
  if (!(walks.bias > 0.0 && walks.bias < 1.0)) fail("walk_bias", "must lie in (0, 1)");
  if (walks.walks_per_anchor < 1) fail("walks_per_anchor", "must be >= 1");
  if (kt_hidden < 1) fail("kt_hidden", "must be >= 1");
  if (kt.generator_learning_rate <= 0.0) fail("kt_gen_lr", "must be > 0");
  if (kt.discriminator_learning_rate <= 0.0) fail("kt_disc_lr", "must be > 0");
  if (kt.adversarial_weight < 0.0) fail("kt_adversarial_weight", "must be >= 0");
  if (kt.batch_size < 1) fail("kt_batch", "must be >= 1");
  if (kt_epochs < 0) fail("kt_epochs", "must be >= 0");
  if (inference_walks < 0) fail("inference_walks", "must be >= 0");
  if (out_dir.empty()) fail("out", "must not be empty");
}

void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value) {
  for (const auto& s : settings()) {
    if (key == s.key) {
      s.set(config, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

PipelineConfig parse_config(const std::string& text, const std::string& origin) {
  PipelineConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                  ": expected key=value");
    }
    try {
      apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

std::string format_config(const PipelineConfig& config) {
  std::string out;
  for (const auto& s : settings()) {
    out += s.key;
    out += '=';
    out += s.get(config);
    out += '\n';
  }
  return out;
}

std::mt19937_64 stage_rng(std::uint64_t seed, std::uint64_t stage) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stage), 0x6b67616cU};
  return std::mt19937_64(seq);
}

PreparedData prepare_data(const PipelineConfig& config) {
  PreparedData data;
  if (config.dataset.empty()) {
    SyntheticSpec spec = config.synthetic;
    spec.rng_seed = config.seed;
    spec.name_dim = config.name_dim;
    spec.seed_fraction = config.seed_fraction;
    data.pair = generate_synthetic_pair(spec);
    if (config.direction == Direction::kReversed) {
      data.pair = reverse_direction(std::move(data.pair));
    }
  } else {
    data.pair = parse_dataset(config.dataset, config.direction);
  }
  if (data.pair.seeds.empty()) throw DataError("dataset has no alignment pairs");
  if (data.pair.seeds.train().empty()) {
    data.pair.seeds = split_seeds(data.pair.seeds, config.seed_fraction, config.seed);
  }
  if (data.pair.seeds.test().empty()) throw DataError("split left no test pairs");

  Index dim = config.name_dim;
  if (data.pair.source_names) dim = data.pair.source_names->dim();
  else if (data.pair.target_names) dim = data.pair.target_names->dim();
  const auto* src_table = data.pair.source_names ? &*data.pair.source_names : nullptr;
  const auto* tgt_table = data.pair.target_names ? &*data.pair.target_names : nullptr;
  data.source_names = resolve_entity_names(data.pair.source, src_table, dim, config.seed);
  data.target_names = resolve_entity_names(data.pair.target, tgt_table, dim, config.seed);
  if (config.name_noise > 0.0) {
    auto rng = stage_rng(config.seed, kNamesStream);
    data.source_names = perturbed_rows(data.source_names, config.name_noise, rng);
    data.target_names = perturbed_rows(data.target_names, config.name_noise, rng);
  }
  return data;
}

Embeddings name_embeddings(const PreparedData& data) {
  return {data.source_names, data.target_names};
}

void save_embeddings(const fs::path& path, const Embeddings& e) {
  const std::vector<NamedTensor> tensors = {{"source", e.source}, {"target", e.target}};
  save_tensors(path, tensors);
}

Embeddings load_embeddings(const fs::path& path) {
  const auto tensors = load_tensors(path);
  if (tensors.size() != 2 || tensors[0].name != "source" || tensors[1].name != "target") {
    throw std::runtime_error(path.string() + ": expected tensors 'source' and 'target'");
  }
  return {tensors[0].value, tensors[1].value};
}

Embeddings train_embeddings(const PipelineConfig& config, const PreparedData& data,
                            bool with_mmd, const fs::path& out_dir) {
  const auto& src = data.pair.source;
  const auto& tgt = data.pair.target;
  EncoderConfig ec;
  ec.name_dim = data.source_names.cols();
  ec.relation_feature_dim = std::max(src.num_relations(), tgt.num_relations());
  ec.attribute_feature_dim = std::max(src.num_attributes(), tgt.num_attributes());
  ec.hidden_dim = config.hidden_dim;
  ec.n_layers = config.layers;
  ec.fusion = config.fusion;

  auto init_rng = stage_rng(config.seed, kEncoderInitStream);
  EncoderParams params(ec, init_rng);
  const GraphInputs src_in = graph_inputs(src, data.source_names, ec.relation_feature_dim,
                                          ec.attribute_feature_dim);
  const GraphInputs tgt_in = graph_inputs(tgt, data.target_names, ec.relation_feature_dim,
                                          ec.attribute_feature_dim);

  Critic critic;
  if (with_mmd) {
    auto critic_rng = stage_rng(config.seed, kCriticInitStream);
    critic = Critic({params.output_dim(), config.critic_hidden, config.critic_output},
                    critic_rng);
  }
  MatchingConfig mc = config.matching;
  if (!with_mmd) mc.mmd_weight = 0.0;
  AdversarialMatcher matcher(
      [&] { return std::make_pair(encode_graph(src_in, params), encode_graph(tgt_in, params)); },
      params.parameters(), with_mmd ? &critic : nullptr, mc);

  std::ofstream log;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    log.open(out_dir / "matching_loss.csv", std::ios::trunc);
    write_matching_csv_header(log);
  }
  const auto train = data.pair.seeds.train();
  auto rng = stage_rng(config.seed, kMatchingStream);
  for (int s = 0; s < config.matching_steps; ++s) {
    const auto loss = matcher.step(train, src.num_entities(), tgt.num_entities(), rng);
    if (log.is_open()) write_matching_csv_row(log, loss);
  }

  Embeddings out{embed_graph(src_in, params, GraphSide::kSource).rows,
                 embed_graph(tgt_in, params, GraphSide::kTarget).rows};
  if (!out_dir.empty()) {
    params.save(out_dir / "encoder.ckpt");
    if (with_mmd) critic.save(out_dir / "critic.ckpt");
    save_embeddings(out_dir / "embeddings.ckpt", out);
  }
  return out;
}

SequenceModels train_translation(const PipelineConfig& config, const PreparedData& data,
                                 const Embeddings& embeddings, const fs::path& out_dir) {
  const auto& hs = embeddings.source;
  const auto& ht = embeddings.target;
  if (hs.cols() != ht.cols()) {
    throw std::invalid_argument("source and target embeddings differ in width");
  }
  auto rng = stage_rng(config.seed, kTranslationStream);
  SequenceModels models({hs.cols(), config.kt_hidden, true}, rng);
  const auto train = data.pair.seeds.train();
  const AnchorIndex anchors(train);
  const auto pseudo = top1_pseudo_labels(hs, ht);
  KTTrainer trainer(&models, config.kt);

  std::ofstream log;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    log.open(out_dir / "kt_loss.csv", std::ios::trunc);
    write_kt_csv_header(log);
  }
  for (int epoch = 0; epoch < config.kt_epochs; ++epoch) {
    auto corpus = sample_training_walks(data.pair.target, anchors, train, config.walks, rng);
    if (epoch == 0 && !out_dir.empty()) {
      std::ofstream walks_out(out_dir / "walks.txt", std::ios::trunc);
      write_walk_corpus(walks_out, corpus);
    }
    std::shuffle(corpus.begin(), corpus.end(), rng);
    const std::span<const MaskedWalkPair> all(corpus);
    for (std::size_t b = 0; b < corpus.size(); b += config.kt.batch_size) {
      const auto n = std::min(config.kt.batch_size, corpus.size() - b);
      const auto batch = make_kt_batch(all.subspan(b, n), hs, ht, pseudo);
      const auto loss = trainer.step(batch);
      if (log.is_open()) write_kt_csv_row(log, loss);
    }
  }
  if (!out_dir.empty()) models.save(out_dir / "kt");
  return models;
}

AlignmentReport run_inference(const PipelineConfig& config, const PreparedData& data,
                              const Embeddings& embeddings, SequenceModels* models) {
  const auto candidates = default_candidates(data.pair.target, data.pair.seeds);
  if (models == nullptr) {
    return evaluate_alignment(embeddings.source, embeddings.target, data.pair.seeds,
                              candidates, data.pair.direction);
  }
  InferenceOptions options;
  options.walks = config.walks;
  options.walks_per_entity = config.inference_walks;
  options.strategy = config.strategy;
  auto rng = stage_rng(config.seed, kInferenceStream);
  const Matrix queries = translate_queries(data.pair.source, data.pair.seeds,
                                           embeddings.source, *models, options, rng);
  return evaluate_alignment(queries, embeddings.target, data.pair.seeds, candidates,
                            data.pair.direction);
}

AlignmentReport run_pipeline(const PipelineConfig& config) {
  in_stage("config", [&] { config.validate(); });
  const fs::path& out = config.out_dir;
  in_stage("config", [&] {
    fs::create_directories(out);
    std::ofstream(out / "config.txt", std::ios::trunc) << format_config(config);
  });
  const auto data = in_stage("data", [&] { return prepare_data(config); });
  Embeddings embeddings;
  if (config.ablation == AblationLevel::kName) {
    embeddings = name_embeddings(data);
    in_stage("encoder", [&] { save_embeddings(out / "embeddings.ckpt", embeddings); });
  } else {
    const bool with_mmd = config.ablation != AblationLevel::kMa;
    embeddings = in_stage("encoder", [&] { return train_embeddings(config, data, with_mmd, out); });
  }
  std::optional<SequenceModels> models;
  if (config.ablation == AblationLevel::kDaea) {
    models = in_stage("translation", [&] { return train_translation(config, data, embeddings, out); });
  }
  auto report = in_stage("inference", [&] {
    return run_inference(config, data, embeddings, models ? &*models : nullptr);
  });
  in_stage("report", [&] { write_report_file(out, report); });
  return report;
}

std::vector<AblationRow> run_ablation_suite(const PipelineConfig& base) {
  in_stage("config", [&] { base.validate(); });
  const fs::path& root = base.out_dir;
  const auto data = in_stage("data", [&] { return prepare_data(base); });
  std::vector<AblationRow> rows;

  const auto names = name_embeddings(data);
  rows.push_back({AblationLevel::kName,
                  in_stage("inference", [&] { return run_inference(base, data, names, nullptr); })});

  const auto ma = in_stage("encoder", [&] { return train_embeddings(base, data, false, root / "ma"); });
  rows.push_back({AblationLevel::kMa,
                  in_stage("inference", [&] { return run_inference(base, data, ma, nullptr); })});

  const auto ke = in_stage("encoder", [&] { return train_embeddings(base, data, true, root / "ke"); });
  rows.push_back({AblationLevel::kKe,
                  in_stage("inference", [&] { return run_inference(base, data, ke, nullptr); })});

  auto models = in_stage("translation",
                         [&] { return train_translation(base, data, ke, root / "daea"); });
  rows.push_back({AblationLevel::kDaea,
                  in_stage("inference", [&] { return run_inference(base, data, ke, &models); })});

  in_stage("report", [&] {
    for (const auto& row : rows) write_report_file(root / to_string(row.level), row.report);
    std::ofstream table(root / "ablation.csv", std::ios::trunc);
    if (!table) throw std::runtime_error("cannot write " + (root / "ablation.csv").string());
    write_ablation_table(table, rows);
  });
  return rows;
}

void write_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "level,hits@1,hits@10,mrr\n";
  for (const auto& row : rows) {
    out << to_string(row.level) << ',' << format_double(row.report.hits1) << ','
        << format_double(row.report.hits10) << ',' << format_double(row.report.mrr) << '\n';
  }
}

}  // namespace kgalign
