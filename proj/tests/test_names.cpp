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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "kgalign/names.hpp"
#include "test_support.hpp"

namespace kgalign {
namespace {

using testing::TempDir;

std::filesystem::path write_vectors(const TempDir& dir, const std::string& text) {
  const auto p = dir.path() / "vectors";
  std::ofstream(p) << text;
  return p;
}

TEST(LoadPretrained, UnitVectorKept) {
  TempDir dir;
  const auto table = load_pretrained_vectors(write_vectors(dir, "5\t0.6 0.8\n"), 2);
  ASSERT_EQ(table.size(), 1u);
  EXPECT_DOUBLE_EQ(table.at(5)(0), 0.6);
  EXPECT_DOUBLE_EQ(table.at(5)(1), 0.8);
}

TEST(LoadPretrained, NormalisesByNorm) {
  TempDir dir;
  const auto table = load_pretrained_vectors(write_vectors(dir, "5\t3 4\n"), 2);
  EXPECT_NEAR(table.at(5)(0), 3.0 / 5.0, 1e-15);
  EXPECT_NEAR(table.at(5)(1), 4.0 / 5.0, 1e-15);
}

TEST(LoadPretrained, DimensionErrorNamesId) {
  TempDir dir;
  try {
    load_pretrained_vectors(write_vectors(dir, "5\t1 2 3\n"), 2);
    FAIL() << "expected error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("id 5"), std::string::npos) << e.what();
  }
}

TEST(LoadPretrained, NonFiniteRejected) {
  TempDir dir;
  EXPECT_THROW(load_pretrained_vectors(write_vectors(dir, "1\tnan 1\n"), 2),
               std::runtime_error);
  EXPECT_THROW(load_pretrained_vectors(write_vectors(dir, "1\tinf 1\n"), 2),
               std::runtime_error);
}

TEST(LoadPretrained, SaveRoundTrip) {
  TempDir dir;
  NameEmbeddingTable table(3);
  table.set(2, Vector::Unit(3, 0));
  table.set(9, (Vector(3) << 0.0, 0.6, 0.8).finished());
  save_vectors(dir.path() / "v", table);
  EXPECT_EQ(load_pretrained_vectors(dir.path() / "v", 3), table);
}

TEST(Table, RejectsWrongDimensionAndNonFinite) {
  NameEmbeddingTable table(2);
  EXPECT_THROW(table.set(0, Vector::Zero(3)), std::invalid_argument);
  Vector bad(2);
  bad << 1.0, std::nan("");
  EXPECT_THROW(table.set(0, bad), std::invalid_argument);
  EXPECT_THROW(table.at(4), std::out_of_range);
  EXPECT_THROW(NameEmbeddingTable(0), std::invalid_argument);
}

TEST(HashFallback, DeterministicAndUnitNorm) {
  for (const char* label : {"Berlin", "Paris", "x", "a longer label with spaces"}) {
    const Vector a = hash_fallback_embedding(label, 64, 3);
    const Vector b = hash_fallback_embedding(label, 64, 3);
    EXPECT_EQ(a, b);
    EXPECT_NEAR(a.norm(), 1.0, 1e-9);
  }
  EXPECT_NE(hash_fallback_embedding("Berlin", 64, 3), hash_fallback_embedding("Berlin", 64, 4));
}

TEST(HashFallback, EmptyLabelSeededById) {
  EXPECT_EQ(hash_fallback_embedding("", 16, 1, 7), hash_fallback_embedding("", 16, 1, 7));
  EXPECT_NE(hash_fallback_embedding("", 16, 1, 7), hash_fallback_embedding("", 16, 1, 8));
  EXPECT_THROW(hash_fallback_embedding("a", 0, 1), std::invalid_argument);
}

TEST(HashFallback, DistinctLabelsNearlyOrthogonal) {
  // Monte Carlo over 1000 label pairs at dim 64.
  int small = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vector a = hash_fallback_embedding("label_a_" + std::to_string(i), 64, 11);
    const Vector b = hash_fallback_embedding("label_b_" + std::to_string(i), 64, 11);
    if (std::abs(a.dot(b)) < 0.5) ++small;
  }
  EXPECT_GE(small, 990);
}

TEST(ResolveNames, TableFirstThenFallback) {
  const KnowledgeGraph kg(3, 1, 1, {{0, 0, 1}}, {}, {"a", "b", "c"});
  NameEmbeddingTable table(4);
  table.set(1, Vector::Unit(4, 2));
  const Matrix names = resolve_entity_names(kg, &table, 4, 5);
  EXPECT_EQ(Vector(names.row(1).transpose()), Vector::Unit(4, 2));
  EXPECT_EQ(Vector(names.row(0).transpose()), hash_fallback_embedding("a", 4, 5));
  EXPECT_EQ(Vector(names.row(2).transpose()), hash_fallback_embedding("c", 4, 5));
  EXPECT_THROW(resolve_entity_names(kg, &table, 5, 5), std::invalid_argument);
}

TEST(ResolveNames, FallbackOnlyMatchesAcrossGraphsByLabel) {
  const KnowledgeGraph g1(2, 1, 1, {}, {}, {"same", "left"});
  const KnowledgeGraph g2(2, 1, 1, {}, {}, {"right", "same"});
  const Matrix a = resolve_entity_names(g1, nullptr, 8, 2);
  const Matrix b = resolve_entity_names(g2, nullptr, 8, 2);
  EXPECT_EQ(Vector(a.row(0).transpose()), Vector(b.row(1).transpose()));
}

TEST(PerturbNames, UnitNormAndNoiseScale) {
  NameEmbeddingTable table(64);
  for (int i = 0; i < 200; ++i) table.set(i, hash_fallback_embedding(std::to_string(i), 64, 1));
  std::mt19937_64 rng(3);
  const auto noisy = perturb_names(table, 0.5, rng);
  double mean_cos = 0.0;
  for (int i = 0; i < 200; ++i) {
    EXPECT_NEAR(noisy.at(i).norm(), 1.0, 1e-12);
    mean_cos += noisy.at(i).dot(table.at(i));
  }
  mean_cos /= 200.0;
  // E|noise|^2 = 64 * 0.25 = 16, so the cosine sits near 1 / sqrt(17).
  EXPECT_NEAR(mean_cos, 1.0 / std::sqrt(17.0), 0.05);
}

}  // namespace
}  // namespace kgalign
