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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kgalign/checkpoint.hpp"
#include "kgalign/pipeline.hpp"

namespace fs = std::filesystem;
using namespace kgalign;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> direction;
  std::optional<std::string> ablation;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> dataset;
  std::vector<std::string> settings;
};

PipelineConfig resolve_config(const Overrides& o) {
  PipelineConfig config = o.config_path.empty() ? PipelineConfig{} : load_config(o.config_path);
  for (const auto& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    }
    apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.direction) config.direction = parse_direction(*o.direction);
  if (o.ablation) config.ablation = parse_ablation(*o.ablation);
  if (o.seed) config.seed = *o.seed;
  if (o.out) config.out_dir = *o.out;
  if (o.dataset) config.dataset = *o.dataset;
  config.validate();
  return config;
}

void print_summary(const AlignmentReport& report) {
  std::cout << "test pairs " << report.rows.size() << '\n'
            << "hits@1 " << format_double(report.hits1) << '\n'
            << "hits@10 " << format_double(report.hits10) << '\n'
            << "mrr " << format_double(report.mrr) << '\n';
}

void print_dataset(const DatasetPair& pair) {
  auto describe = [](const char* side, const KnowledgeGraph& g) {
    std::cout << side << ": " << g.num_entities() << " entities, " << g.num_relations()
              << " relations, " << g.num_attributes() << " attributes, "
              << g.triples().size() << " triples\n";
  };
  describe("source", pair.source);
  describe("target", pair.target);
  std::cout << "pairs: " << pair.seeds.size() << " (" << pair.seeds.train().size()
            << " train, " << pair.seeds.test().size() << " test)\n";
}

// Dataset loading failures carry the data stage whatever the subcommand.
PreparedData load_data(const PipelineConfig& config) {
  try {
    return prepare_data(config);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("data", e.what());
  }
}

int cmd_ingest(const PipelineConfig& config) {
  if (config.dataset.empty()) throw StageError("ingest", "no dataset given (--dataset)");
  const auto pair = parse_dataset(config.dataset, config.direction);
  print_dataset(pair);
  write_dataset(config.out_dir / "dataset", pair);
  std::cout << "wrote " << (config.out_dir / "dataset").string() << '\n';
  return 0;
}

int cmd_synth(const PipelineConfig& config) {
  PipelineConfig c = config;
  c.dataset.clear();
  const auto data = load_data(c);
  print_dataset(data.pair);
  write_dataset(config.out_dir / "dataset", data.pair);
  std::cout << "wrote " << (config.out_dir / "dataset").string() << '\n';
  return 0;
}

int cmd_train(const PipelineConfig& config) {
  const auto data = load_data(config);
  if (config.ablation == AblationLevel::kName) {
    fs::create_directories(config.out_dir);
    save_embeddings(config.out_dir / "embeddings.ckpt", name_embeddings(data));
  } else {
    train_embeddings(config, data, config.ablation != AblationLevel::kMa, config.out_dir);
  }
  std::cout << "wrote " << (config.out_dir / "embeddings.ckpt").string() << '\n';
  return 0;
}

int cmd_train_kt(const PipelineConfig& config) {
  const auto data = load_data(config);
  const auto embeddings = load_embeddings(config.out_dir / "embeddings.ckpt");
  train_translation(config, data, embeddings, config.out_dir);
  std::cout << "wrote " << (config.out_dir / "kt").string() << '\n';
  return 0;
}

int cmd_infer(const PipelineConfig& config) {
  const auto data = load_data(config);
  const auto embeddings = load_embeddings(config.out_dir / "embeddings.ckpt");
  std::optional<SequenceModels> models;
  if (config.ablation == AblationLevel::kDaea) {
    std::mt19937_64 rng(0);
    models.emplace(SequenceModelConfig{embeddings.source.cols(), config.kt_hidden, true}, rng);
    models->load(config.out_dir / "kt");
  }
  const auto report = run_inference(config, data, embeddings, models ? &*models : nullptr);
  write_report(config.out_dir / "report.csv", report);
  print_summary(report);
  return 0;
}

int cmd_eval(const fs::path& report_path) {
  const auto report = read_report(report_path);
  const auto ranks = report.ranks();
  std::cout << "test pairs " << ranks.size() << '\n'
            << "hits@1 " << format_double(hits_at_k(ranks, 1)) << '\n'
            << "hits@10 " << format_double(hits_at_k(ranks, 10)) << '\n'
            << "mrr " << format_double(mean_reciprocal_rank(ranks)) << '\n';
  return 0;
}

int cmd_ablate(const PipelineConfig& config) {
  const auto rows = run_ablation_suite(config);
  write_ablation_table(std::cout, rows);
  return 0;
}

int cmd_run(const PipelineConfig& config) {
  print_summary(run_pipeline(config));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgalign: entity alignment between two knowledge graphs"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config_path, "key=value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--direction", o.direction, "alignment direction")
      ->check(CLI::IsMember({"fwd", "rev"}));
  app.add_option("--ablation", o.ablation, "stages to run")
      ->check(CLI::IsMember({"name", "ma", "ke", "daea"}));
  app.add_option("--seed", o.seed, "rng seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--dataset", o.dataset, "dataset directory (default: synthetic)");
  app.add_option("--set", o.settings, "extra key=value overrides");

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const PipelineConfig&);
  };
  const std::vector<Command> commands = {
      {"ingest", "parse a dataset directory and write a normalised copy", cmd_ingest},
      {"synth", "generate a synthetic graph pair", cmd_synth},
      {"train", "train embeddings (encoder and kernel matching)", cmd_train},
      {"train-kt", "train the walk translator on saved embeddings", cmd_train_kt},
      {"infer", "rank test pairs and write report.csv", cmd_infer},
      {"ablate", "run name, ma, ke and daea on one split", cmd_ablate},
      {"run", "run every stage of the selected ablation level", cmd_run},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) subs.push_back(app.add_subcommand(c.name, c.help));
  std::string report_path;
  auto* eval = app.add_subcommand("eval", "print metrics of a report file");
  eval->add_option("report", report_path, "report.csv (default: <out>/report.csv)");

  CLI11_PARSE(app, argc, argv);

  std::string stage = "config";
  try {
    const PipelineConfig config = resolve_config(o);
    if (eval->parsed()) {
      stage = "eval";
      return cmd_eval(report_path.empty() ? config.out_dir / "report.csv" : fs::path(report_path));
    }
    for (std::size_t i = 0; i < commands.size(); ++i) {
      if (subs[i]->parsed()) {
        stage = commands[i].name;
        return commands[i].run(config);
      }
    }
  } catch (const StageError& e) {
    std::cerr << "kgalign: " << e.what() << '\n';
    return EXIT_FAILURE;
  } catch (const std::exception& e) {
    std::cerr << "kgalign: [" << stage << "] " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_FAILURE;
}
