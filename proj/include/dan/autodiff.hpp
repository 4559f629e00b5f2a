#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "dan/tensor.hpp"

namespace dan {

// Tape for reverse-mode differentiation. Values are computed eagerly; when
// recording, each node also stores how to push its gradient to its parents.
// Nodes are appended in evaluation order, so reverse index order is a valid
// topological order for the backward sweep.
class Graph {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };
  using BackFn = std::function<void(Graph&, int)>;

  explicit Graph(bool record = true) : record_(record) {}

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

  Var constant(Tensor value);
  // Leaf referencing `value` without copying. Gradients are added into
  // `grad_sink` during backward; a null sink makes the leaf a constant.
  Var param(const Tensor& value, Tensor* grad_sink);

  const Tensor& value(Var v) const;
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Seeds d(loss) = seed and accumulates into every reachable parameter sink.
  // `loss` must be 1x1. Throws MissingGraph when nothing was recorded.
  void backward(Var loss, double seed = 1.0);

  // Op plumbing.
  Var emit(Tensor value, std::span<const Var> parents, BackFn back);
  Var emit(Tensor value, std::initializer_list<Var> parents, BackFn back) {
    return emit(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(back));
  }
  Tensor& grad(int id);
  Tensor& grad(Var v) { return grad(v.id); }
  const Tensor& value(int id) const { return value(Var{id}); }

 private:
  struct Node {
    Tensor own;
    const Tensor* ext = nullptr;
    Tensor grad;
    Tensor* sink = nullptr;
    bool needs_grad = false;
    BackFn back;
  };
  bool record_;
  std::deque<Node> nodes_;  // deque: value() references survive later emits
};

using Var = Graph::Var;
// 1 = column excluded (similarity treated as -inf).
using ColumnMask = std::span<const std::uint8_t>;

// x[r x a] * w[a x b]
Var matmul(Graph& g, Var x, Var w);
// a[r x k] * b[s x k]^T
Var matmul_nt(Graph& g, Var a, Var b);
Var add(Graph& g, Var a, Var b);
// x[r x c] + bias[1 x c] on every row
Var add_row(Graph& g, Var x, Var bias);
Var scale(Graph& g, Var x, double s);
Var relu(Graph& g, Var x);
// c * tanh(x)
Var tanh_clip(Graph& g, Var x, double c);
Var layer_norm(Graph& g, Var x, Var gain, Var bias, double eps = 1e-5);
// Row-wise softmax; masked columns get exactly 0. Throws EmptySupport when
// every column is masked.
Var masked_softmax(Graph& g, Var u, ColumnMask mask = {});
// Row-wise log-softmax; masked columns hold -inf and receive no gradient.
Var masked_log_softmax(Graph& g, Var u, ColumnMask mask = {});
// Column means, 1 x c.
Var mean_rows(Graph& g, Var x);
Var slice_cols(Graph& g, Var x, int begin, int count);
Var concat_cols(Graph& g, std::span<const Var> parts);
Var concat_rows(Graph& g, std::span<const Var> parts);
// 1x1 element.
Var pick(Graph& g, Var x, int r, int c);
Var sum(Graph& g, Var x);

// Linear map with optional bias: x * w + bias.
Var linear(Graph& g, Var x, Var w, Var bias = {});
// u[i][j] = <q_i, k_j> / sqrt(d)
Var scaled_dot_similarity(Graph& g, Var q, Var k);

}  // namespace dan
