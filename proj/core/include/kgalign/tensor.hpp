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

#ifndef KGALIGN_TENSOR_HPP_
#define KGALIGN_TENSOR_HPP_

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace kgalign {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = Eigen::Index;

// A named trainable tensor. Gradients accumulate across backward() calls
// until zero_grad().
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Matrix value);

  const std::string& name() const { return name_; }
  const Matrix& value() const { return value_; }
  Matrix& value() { return value_; }
  const Matrix& grad() const { return grad_; }
  Matrix& grad() { return grad_; }
  void zero_grad() { grad_.setZero(value_.rows(), value_.cols()); }

 private:
  std::string name_;
  Matrix value_;
  Matrix grad_;
};

// Glorot-uniform initialisation.
Matrix glorot(Index rows, Index cols, std::mt19937_64& rng);

namespace ad {

namespace detail {
struct Node;
}

// Handle to a node of a dynamically built computation graph. Values are
// computed eagerly; backward() walks the graph in reverse topological order.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  // Convenience for 1x1 results.
  double scalar() const;
  bool valid() const { return node_ != nullptr; }

 private:
  friend struct Access;
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

Var constant(Matrix value);
// Leaf bound to `p`; backward() adds into p.grad().
Var param(Parameter& p);

Var matmul(const Var& a, const Var& b);
// Constant sparse left operand.
Var spmm(const SparseMatrix& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
// Adds a 1xC row to every row of `x`.
Var add_row(const Var& x, const Var& row);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double c);
Var relu(const Var& x);
Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var log(const Var& x);
// Elementwise clamp; gradient is zero where clamping is active.
Var clamp(const Var& x, double lo, double hi);

Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var& x, Index start, Index count);
Var gather_rows(const Var& x, std::span<const std::int64_t> rows);
// Row i of the result is a.row(i) if take_a[i], otherwise b.row(i).
Var select_rows(const std::vector<bool>& take_a, const Var& a, const Var& b);

// 1xC column means.
Var mean_rows(const Var& x);
// Nx1 row sums.
Var sum_cols(const Var& x);
// 1x1 reductions.
Var sum(const Var& x);
Var mean(const Var& x);
// Nx1 squared Euclidean distance between matching rows.
Var row_sqdist(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(double s, const Var& x) { return scale(x, s); }

// Reverse pass from a 1x1 output.
void backward(const Var& output);

}  // namespace ad

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options);

  void zero_grad();
  void step();
  const AdamOptions& options() const { return options_; }

 private:
  std::vector<Parameter*> params_;
  AdamOptions options_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::int64_t t_ = 0;
};

// Plain gradient descent.
void sgd_step(std::span<Parameter* const> params, double learning_rate);

bool all_finite(const Matrix& m);

}  // namespace kgalign

#endif  // KGALIGN_TENSOR_HPP_
