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

#include "kgalign/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace kgalign {

namespace {

constexpr const char* kMagic = "kgalign-tensors";
constexpr int kVersion = 1;

double parse_double(const std::string& token, const std::filesystem::path& path,
                    std::size_t line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) +
                             ": bad number '" + token + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void save_tensors(const std::filesystem::path& path,
                  std::span<const NamedTensor> tensors) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kMagic << ' ' << kVersion << '\n';
  for (const auto& t : tensors) {
    if (t.name.find_first_of(" \t\n") != std::string::npos) {
      throw std::invalid_argument("tensor name contains whitespace: " + t.name);
    }
    out << "tensor " << t.name << ' ' << t.value.rows() << ' ' << t.value.cols()
        << '\n';
    for (Index i = 0; i < t.value.rows(); ++i) {
      for (Index j = 0; j < t.value.cols(); ++j) {
        if (j > 0) out << ' ';
        out << format_double(t.value(i, j));
      }
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<NamedTensor> load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty tensor file");
  }
  {
    std::istringstream header(line);
    std::string magic;
    int version = 0;
    header >> magic >> version;
    if (magic != kMagic || version != kVersion) {
      throw std::runtime_error(path.string() + ":1: not a kgalign tensor file");
    }
  }
  std::vector<NamedTensor> tensors;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream head(line);
    std::string tag;
    NamedTensor t;
    Index rows = -1;
    Index cols = -1;
    head >> tag >> t.name >> rows >> cols;
    if (tag != "tensor" || rows < 0 || cols < 0) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected 'tensor <name> <rows> <cols>'");
    }
    t.value.resize(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      if (!std::getline(in, line)) {
        throw std::runtime_error(path.string() + ": truncated tensor " + t.name);
      }
      ++line_no;
      std::istringstream row(line);
      std::string token;
      Index j = 0;
      while (row >> token) {
        if (j >= cols) {
          throw std::runtime_error(path.string() + ":" +
                                   std::to_string(line_no) + ": too many values");
        }
        t.value(i, j++) = parse_double(token, path, line_no);
      }
      if (j != cols) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": expected " + std::to_string(cols) +
                                 " values");
      }
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void save_parameters(const std::filesystem::path& path,
                     std::span<Parameter* const> params) {
  std::vector<NamedTensor> tensors;
  tensors.reserve(params.size());
  for (const Parameter* p : params) tensors.push_back({p->name(), p->value()});
  save_tensors(path, tensors);
}

void load_parameters(const std::filesystem::path& path,
                     std::span<Parameter* const> params) {
  auto tensors = load_tensors(path);
  if (tensors.size() != params.size()) {
    throw std::runtime_error(path.string() + ": expected " +
                             std::to_string(params.size()) + " tensors, found " +
                             std::to_string(tensors.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    const NamedTensor& t = tensors[k];
    if (t.name != p.name() || t.value.rows() != p.value().rows() ||
        t.value.cols() != p.value().cols()) {
      throw std::runtime_error(path.string() + ": tensor '" + t.name +
                               "' does not match parameter '" + p.name() + "'");
    }
    p.value() = t.value;
    p.zero_grad();
  }
}

}  // namespace kgalign
