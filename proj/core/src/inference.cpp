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

#include "kgalign/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "kgalign/checkpoint.hpp"

namespace kgalign {

namespace {

constexpr int kReportTopK = 10;
constexpr const char* kSummaryHeader = "hits@1,hits@10,mrr";

void require_valid_ranks(std::span<const std::int64_t> ranks) {
  if (ranks.empty()) throw std::invalid_argument("rank list is empty");
  for (auto r : ranks) {
    if (r < 1) throw std::invalid_argument("ranks must be >= 1");
  }
}

}  // namespace

std::string to_string(ConsolidationStrategy s) {
  switch (s) {
    case ConsolidationStrategy::kHighestConfidence: return "highest_confidence";
    case ConsolidationStrategy::kSimpleAverage: return "simple_average";
    case ConsolidationStrategy::kSoftmaxWeightedAverage: return "softmax_weighted_average";
  }
  return "softmax_weighted_average";
}

ConsolidationStrategy parse_strategy(const std::string& s) {
  if (s == "highest_confidence") return ConsolidationStrategy::kHighestConfidence;
  if (s == "simple_average") return ConsolidationStrategy::kSimpleAverage;
  if (s == "softmax_weighted_average") return ConsolidationStrategy::kSoftmaxWeightedAverage;
  throw std::invalid_argument("unknown consolidation strategy '" + s + "'");
}

std::vector<TranslatedWalk> translate_walks(std::span<const RandomWalk> walks,
                                            const std::vector<bool>& is_anchor,
                                            const Matrix& hs, SequenceModels& models,
                                            std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  std::vector<TranslatedWalk> out;
  out.reserve(walks.size());
  for (std::size_t begin = 0; begin < walks.size(); begin += batch_size) {
    const std::size_t end = std::min(walks.size(), begin + batch_size);
    const auto length = walks[begin].length();
    std::vector<Matrix> steps(length, Matrix(static_cast<Index>(end - begin), hs.cols()));
    for (std::size_t b = begin; b < end; ++b) {
      if (walks[b].length() != length) {
        throw std::invalid_argument("translate_walks: walks differ in length");
      }
      for (std::size_t l = 0; l < length; ++l) {
        steps[l].row(static_cast<Index>(b - begin)) = hs.row(walks[b].nodes[l]);
      }
    }
    const auto translated = translate_steps(steps, models);
    for (std::size_t b = begin; b < end; ++b) {
      TranslatedWalk tw;
      tw.walk = walks[b];
      tw.outputs.resize(static_cast<Index>(length), hs.cols());
      for (std::size_t l = 0; l < length; ++l) {
        tw.outputs.row(static_cast<Index>(l)) = translated[l].row(static_cast<Index>(b - begin));
        if (is_anchor[static_cast<std::size_t>(walks[b].nodes[l])]) ++tw.confidence;
      }
      out.push_back(std::move(tw));
    }
  }
  return out;
}

std::vector<TranslationRecord> collect_translations(EntityId entity,
                                                    std::span<const TranslatedWalk> walks) {
  std::vector<TranslationRecord> records;
  for (const auto& w : walks) {
    for (std::size_t l = 0; l < w.walk.nodes.size(); ++l) {
      if (w.walk.nodes[l] == entity) {
        records.push_back({w.outputs.row(static_cast<Index>(l)).transpose(), w.confidence});
      }
    }
  }
  return records;
}

std::unordered_map<EntityId, std::vector<TranslationRecord>> collect_all_translations(
    std::span<const TranslatedWalk> walks) {
  std::unordered_map<EntityId, std::vector<TranslationRecord>> records;
  for (const auto& w : walks) {
    for (std::size_t l = 0; l < w.walk.nodes.size(); ++l) {
      records[w.walk.nodes[l]].push_back(
          {w.outputs.row(static_cast<Index>(l)).transpose(), w.confidence});
    }
  }
  return records;
}

Vector consolidate(std::span<const TranslationRecord> records,
                   ConsolidationStrategy strategy, const Vector& fallback) {
  if (records.empty()) return fallback;
  switch (strategy) {
    case ConsolidationStrategy::kHighestConfidence: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].confidence > records[best].confidence) best = i;
      }
      return records[best].vector;
    }
    case ConsolidationStrategy::kSimpleAverage: {
      Vector sum = Vector::Zero(records.front().vector.size());
      for (const auto& r : records) sum += r.vector;
      return sum / static_cast<double>(records.size());
    }
    case ConsolidationStrategy::kSoftmaxWeightedAverage: {
      int max_conf = records.front().confidence;
      for (const auto& r : records) max_conf = std::max(max_conf, r.confidence);
      double total = 0.0;
      Vector sum = Vector::Zero(records.front().vector.size());
      for (const auto& r : records) {
        const double w = std::exp(static_cast<double>(r.confidence - max_conf));
        sum += w * r.vector;
        total += w;
      }
      return sum / total;
    }
  }
  return fallback;
}

std::vector<EntityId> rank_candidates(const Vector& query, const Matrix& ht,
                                      std::span<const EntityId> candidates) {
  if (candidates.empty()) throw std::invalid_argument("rank_candidates: no candidates");
  if (query.size() != ht.cols()) {
    throw std::invalid_argument("rank_candidates: query width does not match Ht");
  }
  std::vector<std::pair<double, EntityId>> scored;
  scored.reserve(candidates.size());
  for (EntityId c : candidates) {
    scored.emplace_back((ht.row(c).transpose() - query).squaredNorm(), c);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<EntityId> ranked;
  ranked.reserve(scored.size());
  for (const auto& [d, c] : scored) ranked.push_back(c);
  return ranked;
}

double hits_at_k(std::span<const std::int64_t> ranks, int k) {
  if (k < 1) throw std::invalid_argument("hits_at_k: k must be >= 1");
  require_valid_ranks(ranks);
  const auto hits = std::count_if(ranks.begin(), ranks.end(),
                                  [k](std::int64_t r) { return r <= k; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mean_reciprocal_rank(std::span<const std::int64_t> ranks) {
  require_valid_ranks(ranks);
  double total = 0.0;
  for (auto r : ranks) total += 1.0 / static_cast<double>(r);
  return total / static_cast<double>(ranks.size());
}

std::vector<std::int64_t> AlignmentReport::ranks() const {
  std::vector<std::int64_t> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.rank);
  return out;
}

std::vector<EntityId> default_candidates(const KnowledgeGraph& target,
                                         const AlignmentSeedSet& seeds) {
  std::unordered_set<EntityId> used;
  for (const auto& p : seeds.pairs()) {
    if (p.partition == Partition::kTrain) used.insert(p.target);
  }
  std::vector<EntityId> out;
  for (EntityId t = 0; t < target.num_entities(); ++t) {
    if (used.count(t) == 0) out.push_back(t);
  }
  return out;
}

AlignmentReport evaluate_alignment(const Matrix& queries, const Matrix& ht,
                                   const AlignmentSeedSet& seeds,
                                   std::span<const EntityId> candidates,
                                   Direction direction) {
  AlignmentReport report;
  report.direction = direction;
  for (const auto& p : seeds.pairs()) {
    if (p.partition != Partition::kTest) continue;
    const auto ranked = rank_candidates(queries.row(p.source).transpose(), ht, candidates);
    const auto it = std::find(ranked.begin(), ranked.end(), p.target);
    if (it == ranked.end()) {
      throw std::invalid_argument("gold target " + std::to_string(p.target) +
                                  " is not a candidate");
    }
    ReportRow row;
    row.entity = p.source;
    row.gold = p.target;
    row.rank = static_cast<std::int64_t>(it - ranked.begin()) + 1;
    const auto top = std::min<std::size_t>(kReportTopK, ranked.size());
    row.top.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(top));
    report.rows.push_back(std::move(row));
  }
  if (report.rows.empty()) throw std::invalid_argument("no test pairs to evaluate");
  const auto ranks = report.ranks();
  report.hits1 = hits_at_k(ranks, 1);
  report.hits10 = hits_at_k(ranks, 10);
  report.mrr = mean_reciprocal_rank(ranks);
  return report;
}

Matrix translate_queries(const KnowledgeGraph& source, const AlignmentSeedSet& seeds,
                         const Matrix& hs, SequenceModels& models,
                         const InferenceOptions& options, std::mt19937_64& rng) {
  std::vector<bool> is_anchor(static_cast<std::size_t>(source.num_entities()), false);
  for (const auto& p : seeds.pairs()) {
    if (p.partition == Partition::kTrain) is_anchor[static_cast<std::size_t>(p.source)] = true;
  }
  const WalkSampler sampler(source, is_anchor, GraphSide::kSource);
  std::vector<RandomWalk> walks;
  for (const auto& p : seeds.pairs()) {
    if (p.partition != Partition::kTest) continue;
    for (int k = 0; k < options.walks_per_entity; ++k) {
      walks.push_back(sampler.sample_from(p.source, options.walks.length,
                                          options.walks.bias, rng));
    }
  }
  const auto translated = translate_walks(walks, is_anchor, hs, models, options.batch_size);
  const auto records = collect_all_translations(translated);
  Matrix queries = hs;
  for (const auto& [entity, recs] : records) {
    queries.row(entity) =
        consolidate(recs, options.strategy, hs.row(entity).transpose()).transpose();
  }
  return queries;
}

void write_report(std::ostream& out, const AlignmentReport& report) {
  out << "entity,gold,rank";
  for (int k = 1; k <= kReportTopK; ++k) out << ",top" << k;
  out << '\n';
  for (const auto& row : report.rows) {
    out << row.entity << ',' << row.gold << ',' << row.rank;
    for (int k = 0; k < kReportTopK; ++k) {
      out << ',';
      if (static_cast<std::size_t>(k) < row.top.size()) out << row.top[static_cast<std::size_t>(k)];
    }
    out << '\n';
  }
  out << kSummaryHeader << '\n'
      << format_double(report.hits1) << ',' << format_double(report.hits10) << ','
      << format_double(report.mrr) << '\n';
}

void write_report(const std::filesystem::path& path, const AlignmentReport& report) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report " + path.string());
  write_report(out, report);
}

AlignmentReport read_report(std::istream& in) {
  AlignmentReport report;
  std::string line;
  if (!std::getline(in, line) || line.rfind("entity,gold,rank", 0) != 0) {
    throw std::runtime_error("report: missing header");
  }
  bool summary = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == kSummaryHeader) {
      summary = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (summary) {
      if (fields.size() != 3) throw std::runtime_error("report: bad summary line");
      report.hits1 = std::stod(fields[0]);
      report.hits10 = std::stod(fields[1]);
      report.mrr = std::stod(fields[2]);
      continue;
    }
    if (fields.size() < 3) throw std::runtime_error("report: bad row '" + line + "'");
    ReportRow row;
    row.entity = std::stoll(fields[0]);
    row.gold = std::stoll(fields[1]);
    row.rank = std::stoll(fields[2]);
    for (std::size_t k = 3; k < fields.size(); ++k) {
      if (!fields[k].empty()) row.top.push_back(std::stoll(fields[k]));
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

AlignmentReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report " + path.string());
  return read_report(in);
}

}  // namespace kgalign
