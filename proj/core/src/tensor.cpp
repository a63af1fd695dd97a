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

#include "kgalign/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace kgalign {

Parameter::Parameter(std::string name, Matrix value)
    : name_(std::move(name)), value_(std::move(value)) {
  grad_.setZero(value_.rows(), value_.cols());
}

Matrix glorot(Index rows, Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

namespace ad {
namespace detail {

struct Node {
  Matrix value;
  Matrix grad;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  Parameter* param = nullptr;

  Matrix& grad_buffer() {
    if (grad.size() == 0) grad.setZero(value.rows(), value.cols());
    return grad;
  }
};

}  // namespace detail

using detail::Node;

struct Access {
  static const std::shared_ptr<Node>& node(const Var& v) { return v.node_; }
  static Var make(std::shared_ptr<Node> n) { return Var(std::move(n)); }
};

namespace {

Node& node_of(const Var& v) {
  const auto& n = Access::node(v);
  if (!n) throw std::logic_error("ad: use of an empty Var");
  return *n;
}

Var make(Matrix value, std::vector<Var> parents,
         std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents.reserve(parents.size());
  for (const auto& p : parents) n->parents.push_back(Access::node(p));
  n->backward = std::move(backward);
  return Access::make(std::move(n));
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string("ad::") + op + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

}  // namespace

const Matrix& Var::value() const { return node_of(*this).value; }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw std::logic_error("ad: scalar() on a non-1x1 Var");
  return v(0, 0);
}

Var constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Access::make(std::move(n));
}

Var param(Parameter& p) {
  auto n = std::make_shared<Node>();
  n->value = p.value();
  n->param = &p;
  return Access::make(std::move(n));
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("ad::matmul: inner dimensions differ (" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + ")");
  }
  auto pa = Access::node(a);
  auto pb = Access::node(b);
  return make(a.value() * b.value(), {a, b}, [pa, pb](Node& self) {
    pa->grad_buffer().noalias() += self.grad * pb->value.transpose();
    pb->grad_buffer().noalias() += pa->value.transpose() * self.grad;
  });
}

Var spmm(const SparseMatrix& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("ad::spmm: inner dimensions differ (" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + ")");
  }
  auto pb = Access::node(b);
  Matrix out = a * b.value();
  SparseMatrix at = a.transpose();
  return make(std::move(out), {b}, [at = std::move(at), pb](Node& self) {
    pb->grad_buffer().noalias() += at * self.grad;
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  auto pa = Access::node(a);
  auto pb = Access::node(b);
  return make(a.value() + b.value(), {a, b}, [pa, pb](Node& self) {
    pa->grad_buffer() += self.grad;
    pb->grad_buffer() += self.grad;
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  auto pa = Access::node(a);
  auto pb = Access::node(b);
  return make(a.value() - b.value(), {a, b}, [pa, pb](Node& self) {
    pa->grad_buffer() += self.grad;
    pb->grad_buffer() -= self.grad;
  });
}

Var add_row(const Var& x, const Var& row) {
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw std::invalid_argument("ad::add_row: expected 1x" +
                                std::to_string(x.cols()) + " row");
  }
  auto px = Access::node(x);
  auto pr = Access::node(row);
  Matrix out = x.value().rowwise() + row.value().row(0);
  return make(std::move(out), {x, row}, [px, pr](Node& self) {
    px->grad_buffer() += self.grad;
    pr->grad_buffer() += self.grad.colwise().sum();
  });
}

Var hadamard(const Var& a, const Var& b) {
  require_same_shape(a, b, "hadamard");
  auto pa = Access::node(a);
  auto pb = Access::node(b);
  return make(a.value().cwiseProduct(b.value()), {a, b}, [pa, pb](Node& self) {
    pa->grad_buffer() += self.grad.cwiseProduct(pb->value);
    pb->grad_buffer() += self.grad.cwiseProduct(pa->value);
  });
}

Var scale(const Var& x, double factor) {
  auto px = Access::node(x);
  return make(x.value() * factor, {x}, [px, factor](Node& self) {
    px->grad_buffer() += self.grad * factor;
  });
}

Var add_scalar(const Var& x, double c) {
  auto px = Access::node(x);
  return make(x.value().array() + c, {x},
              [px](Node& self) { px->grad_buffer() += self.grad; });
}

Var relu(const Var& x) {
  auto px = Access::node(x);
  return make(x.value().cwiseMax(0.0), {x}, [px](Node& self) {
    px->grad_buffer() +=
        (px->value.array() > 0.0).cast<double>().matrix().cwiseProduct(self.grad);
  });
}

Var tanh(const Var& x) {
  auto px = Access::node(x);
  Matrix out = x.value().array().tanh().matrix();
  return make(std::move(out), {x}, [px](Node& self) {
    px->grad_buffer().array() +=
        self.grad.array() * (1.0 - self.value.array().square());
  });
}

Var sigmoid(const Var& x) {
  auto px = Access::node(x);
  Matrix out = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  return make(std::move(out), {x}, [px](Node& self) {
    px->grad_buffer().array() +=
        self.grad.array() * self.value.array() * (1.0 - self.value.array());
  });
}

Var log(const Var& x) {
  auto px = Access::node(x);
  return make(x.value().array().log().matrix(), {x}, [px](Node& self) {
    px->grad_buffer().array() += self.grad.array() / px->value.array();
  });
}

Var clamp(const Var& x, double lo, double hi) {
  auto px = Access::node(x);
  Matrix out = x.value().cwiseMax(lo).cwiseMin(hi);
  return make(std::move(out), {x}, [px, lo, hi](Node& self) {
    const auto inside =
        ((px->value.array() >= lo) && (px->value.array() <= hi)).cast<double>();
    px->grad_buffer().array() += self.grad.array() * inside;
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("ad::concat_cols: no parts");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw std::invalid_argument("ad::concat_cols: row counts differ");
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::shared_ptr<Node>> nodes;
  std::vector<Index> offsets;
  Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    nodes.push_back(Access::node(p));
    offsets.push_back(offset);
    offset += p.cols();
  }
  return make(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
              [nodes, offsets](Node& self) {
                for (std::size_t k = 0; k < nodes.size(); ++k) {
                  nodes[k]->grad_buffer() +=
                      self.grad.middleCols(offsets[k], nodes[k]->value.cols());
                }
              });
}

Var slice_cols(const Var& x, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > x.cols()) {
    throw std::invalid_argument("ad::slice_cols: range out of bounds");
  }
  auto px = Access::node(x);
  return make(x.value().middleCols(start, count), {x},
              [px, start, count](Node& self) {
                px->grad_buffer().middleCols(start, count) += self.grad;
              });
}

Var gather_rows(const Var& x, std::span<const std::int64_t> rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows()) {
      throw std::out_of_range("ad::gather_rows: row " + std::to_string(rows[i]) +
                              " out of range");
    }
    out.row(static_cast<Index>(i)) = x.value().row(rows[i]);
  }
  auto px = Access::node(x);
  std::vector<std::int64_t> idx(rows.begin(), rows.end());
  return make(std::move(out), {x}, [px, idx = std::move(idx)](Node& self) {
    Matrix& g = px->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      g.row(idx[i]) += self.grad.row(static_cast<Index>(i));
    }
  });
}

Var select_rows(const std::vector<bool>& take_a, const Var& a, const Var& b) {
  require_same_shape(a, b, "select_rows");
  if (static_cast<Index>(take_a.size()) != a.rows()) {
    throw std::invalid_argument("ad::select_rows: mask length mismatch");
  }
  Matrix out(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    out.row(i) = take_a[static_cast<std::size_t>(i)] ? a.value().row(i)
                                                      : b.value().row(i);
  }
  auto pa = Access::node(a);
  auto pb = Access::node(b);
  return make(std::move(out), {a, b}, [pa, pb, take_a](Node& self) {
    Matrix& ga = pa->grad_buffer();
    Matrix& gb = pb->grad_buffer();
    for (Index i = 0; i < self.grad.rows(); ++i) {
      if (take_a[static_cast<std::size_t>(i)]) {
        ga.row(i) += self.grad.row(i);
      } else {
        gb.row(i) += self.grad.row(i);
      }
    }
  });
}

Var mean_rows(const Var& x) {
  if (x.rows() == 0) throw std::invalid_argument("ad::mean_rows: empty input");
  auto px = Access::node(x);
  const double n = static_cast<double>(x.rows());
  return make(x.value().colwise().mean(), {x}, [px, n](Node& self) {
    px->grad_buffer().rowwise() += self.grad.row(0) / n;
  });
}

Var sum_cols(const Var& x) {
  auto px = Access::node(x);
  return make(x.value().rowwise().sum(), {x}, [px](Node& self) {
    px->grad_buffer().colwise() += self.grad.col(0);
  });
}

Var sum(const Var& x) {
  auto px = Access::node(x);
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return make(std::move(out), {x}, [px](Node& self) {
    px->grad_buffer().array() += self.grad(0, 0);
  });
}

Var mean(const Var& x) {
  if (x.value().size() == 0) throw std::invalid_argument("ad::mean: empty input");
  auto px = Access::node(x);
  const double n = static_cast<double>(x.value().size());
  Matrix out(1, 1);
  out(0, 0) = x.value().mean();
  return make(std::move(out), {x}, [px, n](Node& self) {
    px->grad_buffer().array() += self.grad(0, 0) / n;
  });
}

Var row_sqdist(const Var& a, const Var& b) {
  require_same_shape(a, b, "row_sqdist");
  auto pa = Access::node(a);
  auto pb = Access::node(b);
  Matrix diff = a.value() - b.value();
  Matrix out = diff.rowwise().squaredNorm();
  return make(std::move(out), {a, b},
              [pa, pb, diff = std::move(diff)](Node& self) {
                Matrix g = 2.0 * (diff.array().colwise() *
                                  self.grad.col(0).array()).matrix();
                pa->grad_buffer() += g;
                pb->grad_buffer() -= g;
              });
}

void backward(const Var& output) {
  Node& root = node_of(output);
  if (root.value.size() != 1) {
    throw std::logic_error("ad::backward: output must be 1x1");
  }
  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(&root, 0);
  visited.insert(&root);
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node* n : order) n->grad.resize(0, 0);
  root.grad = Matrix::Ones(1, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->grad.size() == 0) continue;
    if (n->backward) n->backward(*n);
    if (n->param != nullptr) n->param->grad() += n->grad;
  }
}

}  // namespace ad

Adam::Adam(std::vector<Parameter*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Parameter* p : params_) {
    m_.push_back(Matrix::Zero(p->value().rows(), p->value().cols()));
    v_.push_back(Matrix::Zero(p->value().rows(), p->value().cols()));
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Matrix& g = params_[k]->grad();
    m_[k] = options_.beta1 * m_[k] + (1.0 - options_.beta1) * g;
    v_[k] = options_.beta2 * v_[k] + (1.0 - options_.beta2) * g.cwiseAbs2();
    params_[k]->value().array() -=
        options_.learning_rate * (m_[k].array() / bc1) /
        ((v_[k].array() / bc2).sqrt() + options_.epsilon);
  }
}

void sgd_step(std::span<Parameter* const> params, double learning_rate) {
  for (Parameter* p : params) p->value() -= learning_rate * p->grad();
}

}  // namespace kgalign
