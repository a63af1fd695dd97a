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

#ifndef KGALIGN_CHECKPOINT_HPP_
#define KGALIGN_CHECKPOINT_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgalign/tensor.hpp"

namespace kgalign {

struct NamedTensor {
  std::string name;
  Matrix value;
};

// Textual tensor dump. Values are written with shortest round-trip decimal
// formatting, so save followed by load reproduces every double bit-exactly.
//
//   kgalign-tensors 1
//   tensor <name> <rows> <cols>
//   <row 0 values, space separated>
//   ...
void save_tensors(const std::filesystem::path& path,
                  std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_tensors(const std::filesystem::path& path);

void save_parameters(const std::filesystem::path& path,
                     std::span<Parameter* const> params);
// Names and shapes must match the file exactly.
void load_parameters(const std::filesystem::path& path,
                     std::span<Parameter* const> params);

// Shortest round-trip text for a double.
std::string format_double(double value);

}  // namespace kgalign

#endif  // KGALIGN_CHECKPOINT_HPP_
