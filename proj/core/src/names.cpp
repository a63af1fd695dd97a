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

#include "kgalign/names.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kgalign/checkpoint.hpp"

namespace kgalign {

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 14695981039346656037ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// splitmix64 finaliser, used to decorrelate the salt from the label hash.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Vector normalized(Vector v) {
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

}  // namespace

NameEmbeddingTable::NameEmbeddingTable(Index dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("name embedding dimension must be >= 1");
}

const Vector& NameEmbeddingTable::at(std::int64_t id) const {
  auto it = vectors_.find(id);
  if (it == vectors_.end()) {
    throw std::out_of_range("no name vector for id " + std::to_string(id));
  }
  return it->second;
}

void NameEmbeddingTable::set(std::int64_t id, Vector v) {
  if (v.size() != dim_) {
    throw std::invalid_argument("name vector for id " + std::to_string(id) +
                                " has dimension " + std::to_string(v.size()) +
                                ", expected " + std::to_string(dim_));
  }
  if (!v.allFinite()) {
    throw std::invalid_argument("name vector for id " + std::to_string(id) +
                                " has non-finite values");
  }
  vectors_[id] = std::move(v);
}

bool NameEmbeddingTable::operator==(const NameEmbeddingTable& other) const {
  if (dim_ != other.dim_ || vectors_.size() != other.vectors_.size()) return false;
  auto a = vectors_.begin();
  auto b = other.vectors_.begin();
  for (; a != vectors_.end(); ++a, ++b) {
    if (a->first != b->first || a->second != b->second) return false;
  }
  return true;
}

NameEmbeddingTable load_pretrained_vectors(const std::filesystem::path& path,
                                           Index expected_dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vector file " + path.string());
  NameEmbeddingTable table(expected_dim);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (tab == std::string::npos) {
      throw std::runtime_error(where + ": expected 'id<TAB>values'");
    }
    std::int64_t id = 0;
    {
      auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, id);
      if (ec != std::errc() || ptr != line.data() + tab) {
        throw std::runtime_error(where + ": bad id '" + line.substr(0, tab) + "'");
      }
    }
    std::vector<double> values;
    std::istringstream fields(line.substr(tab + 1));
    std::string token;
    while (fields >> token) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw std::runtime_error(where + ": bad value '" + token + "' for id " +
                                 std::to_string(id));
      }
      if (!std::isfinite(v)) {
        throw std::runtime_error(where + ": non-finite value for id " +
                                 std::to_string(id));
      }
      values.push_back(v);
    }
    if (static_cast<Index>(values.size()) != expected_dim) {
      throw std::runtime_error(where + ": id " + std::to_string(id) + " has " +
                               std::to_string(values.size()) +
                               " values, expected " + std::to_string(expected_dim));
    }
    Vector v = Eigen::Map<Vector>(values.data(), expected_dim);
    table.set(id, normalized(std::move(v)));
  }
  return table;
}

void save_vectors(const std::filesystem::path& path,
                  const NameEmbeddingTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [id, v] : table.vectors()) {
    out << id << '\t';
    for (Index k = 0; k < v.size(); ++k) {
      if (k > 0) out << ' ';
      out << format_double(v(k));
    }
    out << '\n';
  }
}

Vector hash_fallback_embedding(std::string_view label, Index dim,
                               std::uint64_t salt, std::int64_t fallback_id) {
  if (dim < 1) throw std::invalid_argument("hash embedding dimension must be >= 1");
  std::uint64_t h = label.empty()
                        ? fnv1a("#id:" + std::to_string(fallback_id))
                        : fnv1a(label);
  std::mt19937_64 rng(mix(h ^ mix(salt)));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (Index k = 0; k < dim; ++k) v(k) = normal(rng);
  return normalized(std::move(v));
}

Matrix resolve_entity_names(const KnowledgeGraph& kg,
                            const NameEmbeddingTable* table, Index dim,
                            std::uint64_t salt) {
  if (table != nullptr && table->dim() != dim) {
    throw std::invalid_argument("name table dimension " +
                                std::to_string(table->dim()) +
                                " does not match requested " + std::to_string(dim));
  }
  Matrix out(kg.num_entities(), dim);
  for (EntityId e = 0; e < kg.num_entities(); ++e) {
    if (table != nullptr && table->contains(e)) {
      out.row(e) = table->at(e).transpose();
    } else {
      const std::string_view label =
          kg.has_labels() ? std::string_view(kg.labels()[static_cast<std::size_t>(e)])
                          : std::string_view();
      out.row(e) = hash_fallback_embedding(label, dim, salt, e).transpose();
    }
  }
  return out;
}

NameEmbeddingTable perturb_names(const NameEmbeddingTable& table, double sigma,
                                 std::mt19937_64& rng) {
  NameEmbeddingTable out(table.dim());
  std::normal_distribution<double> noise(0.0, sigma);
  for (const auto& [id, v] : table.vectors()) {
    Vector p = v;
    for (Index k = 0; k < p.size(); ++k) p(k) += noise(rng);
    out.set(id, normalized(std::move(p)));
  }
  return out;
}

}  // namespace kgalign
