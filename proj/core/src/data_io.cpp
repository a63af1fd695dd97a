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

#include "kgalign/data_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string_view>
#include <vector>

#include "kgalign/checkpoint.hpp"

namespace kgalign {

namespace fs = std::filesystem;

std::string to_string(Direction d) {
  return d == Direction::kForward ? "fwd" : "rev";
}

Direction parse_direction(const std::string& s) {
  if (s == "fwd" || s == "forward") return Direction::kForward;
  if (s == "rev" || s == "reversed") return Direction::kReversed;
  throw std::invalid_argument("unknown direction '" + s + "' (expected fwd|rev)");
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::int64_t parse_id(std::string_view field, const std::string& where) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw DataError(where + ": bad id '" + std::string(field) + "'");
  }
  return v;
}

using RecordFn = std::function<void(const std::vector<std::string_view>&,
                                    const std::string& where)>;

// Calls `fn` for every non-empty line; throws DataError if the field count is
// outside [min_fields, max_fields].
void for_each_record(const fs::path& path, std::size_t min_fields,
                     std::size_t max_fields, const RecordFn& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    auto fields = split_tabs(line);
    if (fields.size() < min_fields || fields.size() > max_fields) {
      throw DataError(where + ": expected " + std::to_string(min_fields) +
                      (min_fields == max_fields
                           ? std::string()
                           : "-" + std::to_string(max_fields)) +
                      " tab-separated fields, found " +
                      std::to_string(fields.size()));
    }
    fn(fields, where);
  }
}

// Ascending raw id -> dense id.
class IdMap {
 public:
  void add(std::int64_t raw) { raw_.insert(raw); }
  void freeze() {
    std::int64_t next = 0;
    for (auto raw : raw_) dense_[raw] = next++;
  }
  std::optional<std::int64_t> find(std::int64_t raw) const {
    auto it = dense_.find(raw);
    if (it == dense_.end()) return std::nullopt;
    return it->second;
  }
  std::int64_t at(std::int64_t raw) const { return dense_.at(raw); }
  std::int64_t size() const { return static_cast<std::int64_t>(dense_.size()); }

 private:
  std::set<std::int64_t> raw_;
  std::map<std::int64_t, std::int64_t> dense_;
};

struct RawGraph {
  std::vector<std::array<std::int64_t, 3>> triples;
  std::vector<std::pair<std::int64_t, std::int64_t>> attrs;
  std::map<std::int64_t, std::string> labels;
  IdMap entities;
};

RawGraph read_raw_graph(const fs::path& root, int side) {
  const std::string suffix = "_" + std::to_string(side);
  RawGraph g;
  for_each_record(root / ("triples" + suffix), 3, 3, [&](const auto& f, const auto& where) {
    g.triples.push_back({parse_id(f[0], where), parse_id(f[1], where),
                         parse_id(f[2], where)});
  });
  for_each_record(root / ("ent_labels" + suffix), 1, 2, [&](const auto& f, const auto& where) {
    const auto id = parse_id(f[0], where);
    g.labels[id] = f.size() > 1 ? std::string(f[1]) : std::string();
  });
  const fs::path attrs = root / ("attrs" + suffix);
  if (fs::exists(attrs)) {
    for_each_record(attrs, 2, 2, [&](const auto& f, const auto& where) {
      g.attrs.emplace_back(parse_id(f[0], where), parse_id(f[1], where));
    });
  }
  for (const auto& t : g.triples) {
    g.entities.add(t[0]);
    g.entities.add(t[2]);
  }
  for (const auto& [id, label] : g.labels) g.entities.add(id);
  for (const auto& a : g.attrs) g.entities.add(a.first);
  g.entities.freeze();
  return g;
}

KnowledgeGraph densify(const RawGraph& g) {
  IdMap relations;
  for (const auto& t : g.triples) relations.add(t[1]);
  relations.freeze();
  IdMap attributes;
  for (const auto& a : g.attrs) attributes.add(a.second);
  attributes.freeze();

  std::vector<Triple> triples;
  triples.reserve(g.triples.size());
  for (const auto& t : g.triples) {
    triples.push_back({g.entities.at(t[0]), relations.at(t[1]), g.entities.at(t[2])});
  }
  std::vector<AttributeAssertion> assertions;
  assertions.reserve(g.attrs.size());
  for (const auto& a : g.attrs) {
    assertions.push_back({g.entities.at(a.first), attributes.at(a.second)});
  }
  std::vector<std::string> labels(static_cast<std::size_t>(g.entities.size()));
  for (const auto& [raw, label] : g.labels) {
    labels[static_cast<std::size_t>(g.entities.at(raw))] = label;
  }
  return KnowledgeGraph(std::max<std::int64_t>(g.entities.size(), 1),
                        std::max<std::int64_t>(relations.size(), 1),
                        std::max<std::int64_t>(attributes.size(), 1),
                        std::move(triples), std::move(assertions), std::move(labels));
}

std::optional<NameEmbeddingTable> read_vectors(const fs::path& path,
                                               const IdMap& entities) {
  if (!fs::exists(path)) return std::nullopt;
  // The dimension is taken from the first record.
  Index dim = 0;
  {
    std::ifstream in(path);
    std::string line;
    while (dim == 0 && std::getline(in, line)) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) continue;
      std::istringstream values(line.substr(tab + 1));
      std::string token;
      while (values >> token) ++dim;
    }
  }
  if (dim == 0) return std::nullopt;
  NameEmbeddingTable raw;
  try {
    raw = load_pretrained_vectors(path, dim);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  NameEmbeddingTable dense(dim);
  for (const auto& [id, v] : raw.vectors()) {
    auto mapped = entities.find(id);
    if (!mapped) {
      throw DataError(path.string() + ": vector for unknown entity id " +
                      std::to_string(id));
    }
    dense.set(*mapped, v);
  }
  return dense;
}

}  // namespace

DatasetPair parse_dataset(const fs::path& root, Direction direction) {
  for (const char* name : {"triples_1", "triples_2", "ent_links", "ent_labels_1",
                           "ent_labels_2"}) {
    if (!fs::exists(root / name)) {
      throw DataError("missing dataset file " + (root / name).string());
    }
  }
  const RawGraph g1 = read_raw_graph(root, 1);
  const RawGraph g2 = read_raw_graph(root, 2);

  std::vector<SeedPair> pairs;
  for_each_record(root / "ent_links", 2, 3, [&](const auto& f, const auto& where) {
    const auto raw_s = parse_id(f[0], where);
    const auto raw_t = parse_id(f[1], where);
    const auto s = g1.entities.find(raw_s);
    if (!s) {
      throw DataError(where + ": source entity id " + std::to_string(raw_s) +
                      " not present in graph 1");
    }
    const auto t = g2.entities.find(raw_t);
    if (!t) {
      throw DataError(where + ": target entity id " + std::to_string(raw_t) +
                      " not present in graph 2");
    }
    Partition part = Partition::kTest;
    if (f.size() == 3) {
      if (f[2] == "train") {
        part = Partition::kTrain;
      } else if (f[2] != "test") {
        throw DataError(where + ": partition must be 'train' or 'test'");
      }
    }
    pairs.push_back({*s, *t, part});
  });

  DatasetPair pair;
  try {
    pair.source = densify(g1);
    pair.target = densify(g2);
    pair.seeds = AlignmentSeedSet(std::move(pairs));
  } catch (const std::invalid_argument& e) {
    throw DataError(root.string() + ": " + e.what());
  }
  pair.source_names = read_vectors(root / "ent_vectors_1", g1.entities);
  pair.target_names = read_vectors(root / "ent_vectors_2", g2.entities);
  pair.direction = Direction::kForward;
  if (direction == Direction::kReversed) pair = reverse_direction(std::move(pair));
  return pair;
}

void write_dataset(const fs::path& root, const DatasetPair& pair) {
  fs::create_directories(root);
  auto open = [&](const char* name) {
    std::ofstream out(root / name, std::ios::trunc);
    if (!out) throw DataError("cannot write " + (root / name).string());
    return out;
  };
  auto write_graph = [&](const KnowledgeGraph& g, int side) {
    const std::string suffix = "_" + std::to_string(side);
    {
      auto out = open(("triples" + suffix).c_str());
      for (const auto& t : g.triples()) {
        out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
      }
    }
    {
      auto out = open(("ent_labels" + suffix).c_str());
      for (EntityId e = 0; e < g.num_entities(); ++e) {
        out << e << '\t'
            << (g.has_labels() ? g.labels()[static_cast<std::size_t>(e)] : "")
            << '\n';
      }
    }
    if (!g.assertions().empty()) {
      auto out = open(("attrs" + suffix).c_str());
      for (const auto& a : g.assertions()) out << a.entity << '\t' << a.attribute << '\n';
    } else {
      fs::remove(root / ("attrs" + suffix));
    }
  };
  write_graph(pair.source, 1);
  write_graph(pair.target, 2);
  {
    auto out = open("ent_links");
    for (const auto& p : pair.seeds.pairs()) {
      out << p.source << '\t' << p.target << '\t'
          << (p.partition == Partition::kTrain ? "train" : "test") << '\n';
    }
  }
  if (pair.source_names) {
    save_vectors(root / "ent_vectors_1", *pair.source_names);
  } else {
    fs::remove(root / "ent_vectors_1");
  }
  if (pair.target_names) {
    save_vectors(root / "ent_vectors_2", *pair.target_names);
  } else {
    fs::remove(root / "ent_vectors_2");
  }
}

AlignmentSeedSet split_seeds(const AlignmentSeedSet& seeds, double train_fraction,
                             std::uint64_t rng_seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie in (0, 1)");
  }
  if (seeds.empty()) throw std::invalid_argument("cannot split an empty seed set");
  const std::size_t k = seeds.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(rng_seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(k) * train_fraction));
  std::vector<SeedPair> pairs = seeds.pairs();
  for (std::size_t i = 0; i < k; ++i) {
    pairs[order[i]].partition = i < n_train ? Partition::kTrain : Partition::kTest;
  }
  return AlignmentSeedSet(std::move(pairs));
}

DatasetPair generate_synthetic_pair(const SyntheticSpec& spec) {
  if (spec.n_entities < 4) {
    throw std::invalid_argument("synthetic graphs need at least 4 entities");
  }
  if (spec.n_relations < 1 || spec.n_attributes < 1) {
    throw std::invalid_argument("synthetic graphs need relations and attributes");
  }
  if (!(spec.edge_drop_rate >= 0.0 && spec.edge_drop_rate < 1.0)) {
    throw std::invalid_argument("edge_drop_rate must lie in [0, 1)");
  }
  if (!(spec.seed_fraction > 0.0 && spec.seed_fraction < 1.0)) {
    throw std::invalid_argument("seed_fraction must lie in (0, 1)");
  }
  if (!(spec.edge_probability >= 0.0 && spec.edge_probability <= 1.0)) {
    throw std::invalid_argument("edge_probability must lie in [0, 1]");
  }
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> pick_relation(0, spec.n_relations - 1);
  std::uniform_int_distribution<std::int64_t> pick_attr_count(
      0, std::min(spec.max_attributes_per_entity, spec.n_attributes));
  const std::int64_t n = spec.n_entities;

  std::vector<Triple> source_triples;
  for (EntityId i = 0; i < n; ++i) {
    for (EntityId j = i + 1; j < n; ++j) {
      if (unit(rng) >= spec.edge_probability) continue;
      const RelationId r = pick_relation(rng);
      if (unit(rng) < 0.5) {
        source_triples.push_back({i, r, j});
      } else {
        source_triples.push_back({j, r, i});
      }
    }
  }
  std::vector<AttributeAssertion> source_attrs;
  std::vector<AttributeId> attr_pool(static_cast<std::size_t>(spec.n_attributes));
  std::iota(attr_pool.begin(), attr_pool.end(), 0);
  for (EntityId e = 0; e < n; ++e) {
    const auto count = pick_attr_count(rng);
    // Partial Fisher-Yates for `count` distinct attributes.
    for (std::int64_t k = 0; k < count; ++k) {
      std::uniform_int_distribution<std::int64_t> pick(k, spec.n_attributes - 1);
      std::swap(attr_pool[static_cast<std::size_t>(k)],
                attr_pool[static_cast<std::size_t>(pick(rng))]);
      source_attrs.push_back({e, attr_pool[static_cast<std::size_t>(k)]});
    }
  }

  std::vector<EntityId> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto to_target = [&](EntityId e) { return perm[static_cast<std::size_t>(e)]; };

  std::vector<Triple> target_triples;
  for (const auto& t : source_triples) {
    if (spec.edge_drop_rate > 0.0 && unit(rng) < spec.edge_drop_rate) continue;
    target_triples.push_back({to_target(t.head), t.relation, to_target(t.tail)});
  }
  std::vector<AttributeAssertion> target_attrs;
  target_attrs.reserve(source_attrs.size());
  for (const auto& a : source_attrs) target_attrs.push_back({to_target(a.entity), a.attribute});

  std::vector<std::string> source_labels(static_cast<std::size_t>(n));
  std::vector<std::string> target_labels(static_cast<std::size_t>(n));
  NameEmbeddingTable source_names(spec.name_dim);
  NameEmbeddingTable target_names(spec.name_dim);
  std::vector<SeedPair> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (EntityId e = 0; e < n; ++e) {
    const std::string label = "entity_" + std::to_string(e);
    source_labels[static_cast<std::size_t>(e)] = label;
    target_labels[static_cast<std::size_t>(to_target(e))] = label;
    Vector v = hash_fallback_embedding(label, spec.name_dim, spec.rng_seed);
    source_names.set(e, v);
    target_names.set(to_target(e), std::move(v));
    pairs.push_back({e, to_target(e), Partition::kTest});
  }

  DatasetPair pair;
  pair.source = KnowledgeGraph(n, spec.n_relations, spec.n_attributes,
                               std::move(source_triples), std::move(source_attrs),
                               std::move(source_labels));
  pair.target = KnowledgeGraph(n, spec.n_relations, spec.n_attributes,
                               std::move(target_triples), std::move(target_attrs),
                               std::move(target_labels));
  pair.seeds = split_seeds(AlignmentSeedSet(std::move(pairs)), spec.seed_fraction,
                           spec.rng_seed);
  pair.source_names = std::move(source_names);
  pair.target_names = std::move(target_names);
  pair.direction = Direction::kForward;
  return pair;
}

DatasetPair reverse_direction(DatasetPair pair) {
  std::swap(pair.source, pair.target);
  std::swap(pair.source_names, pair.target_names);
  std::vector<SeedPair> swapped = pair.seeds.pairs();
  for (auto& p : swapped) std::swap(p.source, p.target);
  pair.seeds = AlignmentSeedSet(std::move(swapped));
  pair.direction = pair.direction == Direction::kForward ? Direction::kReversed
                                                         : Direction::kForward;
  return pair;
}

}  // namespace kgalign
