#include "dan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dan/errors.hpp"

namespace dan {

Var Graph::constant(Tensor value) {
  Node n;
  n.own = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(const Tensor& value, Tensor* grad_sink) {
  Node n;
  n.ext = &value;
  n.sink = record_ ? grad_sink : nullptr;
  n.needs_grad = n.sink != nullptr;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Graph::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.ext ? *n.ext : n.own;
}

Var Graph::emit(Tensor value, std::span<const Var> parents, BackFn back) {
  Node n;
  n.own = std::move(value);
  if (record_) {
    for (Var p : parents) n.needs_grad = n.needs_grad || nodes_[p.id].needs_grad;
    if (n.needs_grad) n.back = std::move(back);
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Graph::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) {
    const Tensor& v = n.ext ? *n.ext : n.own;
    n.grad = Tensor(v.rows(), v.cols());
  }
  return n.grad;
}

void Graph::backward(Var loss, double seed) {
  if (!record_ || !loss.valid() || loss.id >= static_cast<int>(nodes_.size())) {
    throw MissingGraph("backward: no recorded forward computation for this loss");
  }
  if (value(loss).size() != 1) throw ShapeError("backward: loss must be a scalar, got " + value(loss).shape_str());
  for (auto& n : nodes_) n.grad = Tensor();
  if (!nodes_[loss.id].needs_grad) return;
  grad(loss.id)[0] = seed;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.back) n.back(*this, id);
    if (n.sink) {
      auto& dst = n.sink->values();
      const auto& src = nodes_[id].grad.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
  for (auto& n : nodes_) n.grad = Tensor();
}

namespace {

void require(bool ok, const char* op, const Tensor& a, const Tensor& b) {
  if (!ok) throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

// c += a * b
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  const int r = a.rows(), k = a.cols(), n = b.cols();
  for (int i = 0; i < r; ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b.row(p);
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c += a * b^T
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  const int r = a.rows(), k = a.cols(), n = b.rows();
  for (int i = 0; i < r; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int j = 0; j < n; ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

// c += a^T * b
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  const int r = a.rows(), k = a.cols(), n = b.cols();
  for (int i = 0; i < r; ++i) {
    const double* ai = a.row(i);
    const double* bi = b.row(i);
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c.row(p);
      for (int j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

bool masked(ColumnMask mask, int j) { return !mask.empty() && mask[j] != 0; }

void check_mask(ColumnMask mask, const Tensor& u, const char* op) {
  if (!mask.empty() && static_cast<int>(mask.size()) != u.cols()) {
    throw ShapeError(std::string(op) + ": mask has " + std::to_string(mask.size()) + " entries for " +
                     std::to_string(u.cols()) + " columns");
  }
  const int open = mask.empty() ? u.cols() : static_cast<int>(std::count(mask.begin(), mask.end(), 0));
  if (open == 0) throw EmptySupport(std::string(op) + ": every column is masked");
}

}  // namespace

Var matmul(Graph& g, Var x, Var w) {
  const Tensor& a = g.value(x);
  const Tensor& b = g.value(w);
  require(a.cols() == b.rows(), "matmul", a, b);
  Tensor out(a.rows(), b.cols());
  gemm_nn(a, b, out);
  return g.emit(std::move(out), {x, w}, [x, w](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    if (g.needs_grad(x)) gemm_nt(dy, g.value(w), g.grad(x));
    if (g.needs_grad(w)) gemm_tn(g.value(x), dy, g.grad(w));
  });
}

Var matmul_nt(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require(av.cols() == bv.cols(), "matmul_nt", av, bv);
  Tensor out(av.rows(), bv.rows());
  gemm_nt(av, bv, out);
  return g.emit(std::move(out), {a, b}, [a, b](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    if (g.needs_grad(a)) gemm_nn(dy, g.value(b), g.grad(a));
    if (g.needs_grad(b)) gemm_tn(dy, g.value(a), g.grad(b));
  });
}

Var add(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require(av.same_shape(bv), "add", av, bv);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return g.emit(std::move(out), {a, b}, [a, b](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    for (Var p : {a, b}) {
      if (!g.needs_grad(p)) continue;
      Tensor& dp = g.grad(p);
      for (std::size_t i = 0; i < dp.size(); ++i) dp[i] += dy[i];
    }
  });
}

Var add_row(Graph& g, Var x, Var bias) {
  const Tensor& xv = g.value(x);
  const Tensor& bv = g.value(bias);
  require(bv.rows() == 1 && bv.cols() == xv.cols(), "add_row", xv, bv);
  Tensor out = xv;
  for (int r = 0; r < out.rows(); ++r) {
    double* o = out.row(r);
    for (int c = 0; c < out.cols(); ++c) o[c] += bv[c];
  }
  return g.emit(std::move(out), {x, bias}, [x, bias](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    if (g.needs_grad(x)) {
      Tensor& dx = g.grad(x);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
    }
    if (g.needs_grad(bias)) {
      Tensor& db = g.grad(bias);
      for (int r = 0; r < dy.rows(); ++r) {
        const double* d = dy.row(r);
        for (int c = 0; c < dy.cols(); ++c) db[c] += d[c];
      }
    }
  });
}

Var scale(Graph& g, Var x, double s) {
  Tensor out = g.value(x);
  for (auto& v : out.values()) v *= s;
  return g.emit(std::move(out), {x}, [x, s](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    Tensor& dx = g.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += s * dy[i];
  });
}

Var relu(Graph& g, Var x) {
  Tensor out = g.value(x);
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  return g.emit(std::move(out), {x}, [x](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    const Tensor& xv = g.value(x);
    Tensor& dx = g.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (xv[i] > 0.0) dx[i] += dy[i];
    }
  });
}

Var tanh_clip(Graph& g, Var x, double c) {
  Tensor out = g.value(x);
  for (auto& v : out.values()) v = c * std::tanh(v);
  return g.emit(std::move(out), {x}, [x, c](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    const Tensor& y = g.value(self);
    Tensor& dx = g.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double t = y[i] / c;
      dx[i] += dy[i] * c * (1.0 - t * t);
    }
  });
}

Var layer_norm(Graph& g, Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = g.value(x);
  const Tensor& gv = g.value(gain);
  const Tensor& bv = g.value(bias);
  require(gv.rows() == 1 && gv.cols() == xv.cols(), "layer_norm", xv, gv);
  require(bv.same_shape(gv), "layer_norm", xv, bv);
  const int rows = xv.rows(), cols = xv.cols();
  Tensor normed(rows, cols);
  Tensor inv_std(rows, 1);
  Tensor out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const double* xr = xv.row(r);
    double mean = 0.0;
    for (int c = 0; c < cols; ++c) mean += xr[c];
    mean /= cols;
    double var = 0.0;
    for (int c = 0; c < cols; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= cols;
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (int c = 0; c < cols; ++c) {
      normed(r, c) = (xr[c] - mean) * inv;
      out(r, c) = normed(r, c) * gv[c] + bv[c];
    }
  }
  if (!g.recording()) return g.emit(std::move(out), {x, gain, bias}, nullptr);
  return g.emit(std::move(out), {x, gain, bias},
                [x, gain, bias, normed = std::move(normed), inv_std = std::move(inv_std)](Graph& g, int self) {
                  const Tensor& dy = g.grad(self);
                  const Tensor& gv = g.value(gain);
                  const int rows = dy.rows(), cols = dy.cols();
                  if (g.needs_grad(gain) || g.needs_grad(bias)) {
                    Tensor& dg = g.grad(gain);
                    Tensor& db = g.grad(bias);
                    for (int r = 0; r < rows; ++r) {
                      for (int c = 0; c < cols; ++c) {
                        dg[c] += dy(r, c) * normed(r, c);
                        db[c] += dy(r, c);
                      }
                    }
                  }
                  if (!g.needs_grad(x)) return;
                  Tensor& dx = g.grad(x);
                  std::vector<double> dn(cols);
                  for (int r = 0; r < rows; ++r) {
                    double mean_dn = 0.0, mean_dn_n = 0.0;
                    for (int c = 0; c < cols; ++c) {
                      dn[c] = dy(r, c) * gv[c];
                      mean_dn += dn[c];
                      mean_dn_n += dn[c] * normed(r, c);
                    }
                    mean_dn /= cols;
                    mean_dn_n /= cols;
                    for (int c = 0; c < cols; ++c) {
                      dx(r, c) += inv_std[r] * (dn[c] - mean_dn - normed(r, c) * mean_dn_n);
                    }
                  }
                });
}

Var masked_softmax(Graph& g, Var u, ColumnMask mask) {
  const Tensor& uv = g.value(u);
  check_mask(mask, uv, "masked_softmax");
  Tensor out(uv.rows(), uv.cols());
  for (int r = 0; r < uv.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < uv.cols(); ++c) {
      if (!masked(mask, c)) mx = std::max(mx, uv(r, c));
    }
    double total = 0.0;
    for (int c = 0; c < uv.cols(); ++c) {
      if (masked(mask, c)) continue;
      out(r, c) = std::exp(uv(r, c) - mx);
      total += out(r, c);
    }
    for (int c = 0; c < uv.cols(); ++c) out(r, c) /= total;
  }
  return g.emit(std::move(out), {u}, [u](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    const Tensor& y = g.value(self);
    Tensor& du = g.grad(u);
    for (int r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (int c = 0; c < y.cols(); ++c) dot += dy(r, c) * y(r, c);
      for (int c = 0; c < y.cols(); ++c) du(r, c) += y(r, c) * (dy(r, c) - dot);
    }
  });
}

Var masked_log_softmax(Graph& g, Var u, ColumnMask mask) {
  const Tensor& uv = g.value(u);
  check_mask(mask, uv, "masked_log_softmax");
  Tensor out(uv.rows(), uv.cols(), -std::numeric_limits<double>::infinity());
  for (int r = 0; r < uv.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < uv.cols(); ++c) {
      if (!masked(mask, c)) mx = std::max(mx, uv(r, c));
    }
    double total = 0.0;
    for (int c = 0; c < uv.cols(); ++c) {
      if (!masked(mask, c)) total += std::exp(uv(r, c) - mx);
    }
    const double lse = mx + std::log(total);
    for (int c = 0; c < uv.cols(); ++c) {
      if (!masked(mask, c)) out(r, c) = uv(r, c) - lse;
    }
  }
  return g.emit(std::move(out), {u}, [u](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    const Tensor& y = g.value(self);
    Tensor& du = g.grad(u);
    for (int r = 0; r < y.rows(); ++r) {
      double total = 0.0;
      for (int c = 0; c < y.cols(); ++c) {
        if (std::isfinite(y(r, c))) total += dy(r, c);
      }
      for (int c = 0; c < y.cols(); ++c) {
        if (std::isfinite(y(r, c))) du(r, c) += dy(r, c) - std::exp(y(r, c)) * total;
      }
    }
  });
}

Var mean_rows(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  Tensor out(1, xv.cols());
  for (int r = 0; r < xv.rows(); ++r) {
    for (int c = 0; c < xv.cols(); ++c) out[c] += xv(r, c);
  }
  for (auto& v : out.values()) v /= xv.rows();
  return g.emit(std::move(out), {x}, [x](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    Tensor& dx = g.grad(x);
    const double w = 1.0 / dx.rows();
    for (int r = 0; r < dx.rows(); ++r) {
      for (int c = 0; c < dx.cols(); ++c) dx(r, c) += dy[c] * w;
    }
  });
}

Var slice_cols(Graph& g, Var x, int begin, int count) {
  const Tensor& xv = g.value(x);
  if (begin < 0 || count <= 0 || begin + count > xv.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", +" + std::to_string(count) + ") outside " +
                     xv.shape_str());
  }
  Tensor out(xv.rows(), count);
  for (int r = 0; r < xv.rows(); ++r) std::copy_n(xv.row(r) + begin, count, out.row(r));
  return g.emit(std::move(out), {x}, [x, begin, count](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    Tensor& dx = g.grad(x);
    for (int r = 0; r < dy.rows(); ++r) {
      for (int c = 0; c < count; ++c) dx(r, begin + c) += dy(r, c);
    }
  });
}

Var concat_cols(Graph& g, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int rows = g.value(parts[0]).rows();
  int cols = 0;
  for (Var p : parts) {
    if (g.value(p).rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += g.value(p).cols();
  }
  Tensor out(rows, cols);
  int offset = 0;
  for (Var p : parts) {
    const Tensor& pv = g.value(p);
    for (int r = 0; r < rows; ++r) std::copy_n(pv.row(r), pv.cols(), out.row(r) + offset);
    offset += pv.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.emit(std::move(out), parts, [inputs](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    int offset = 0;
    for (Var p : inputs) {
      const int w = g.value(p).cols();
      if (g.needs_grad(p)) {
        Tensor& dp = g.grad(p);
        for (int r = 0; r < dy.rows(); ++r) {
          for (int c = 0; c < w; ++c) dp(r, c) += dy(r, offset + c);
        }
      }
      offset += w;
    }
  });
}

Var concat_rows(Graph& g, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const int cols = g.value(parts[0]).cols();
  int rows = 0;
  for (Var p : parts) {
    if (g.value(p).cols() != cols) throw ShapeError("concat_rows: column counts differ");
    rows += g.value(p).rows();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const auto& src = g.value(p).values();
    std::copy(src.begin(), src.end(), out.values().begin() + offset);
    offset += src.size();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.emit(std::move(out), parts, [inputs](Graph& g, int self) {
    const Tensor& dy = g.grad(self);
    std::size_t offset = 0;
    for (Var p : inputs) {
      const std::size_t count = g.value(p).size();
      if (g.needs_grad(p)) {
        Tensor& dp = g.grad(p);
        for (std::size_t i = 0; i < count; ++i) dp[i] += dy[offset + i];
      }
      offset += count;
    }
  });
}

Var pick(Graph& g, Var x, int r, int c) {
  const Tensor& xv = g.value(x);
  if (r < 0 || r >= xv.rows() || c < 0 || c >= xv.cols()) throw ShapeError("pick: index outside " + xv.shape_str());
  Tensor out(1, 1, xv(r, c));
  return g.emit(std::move(out), {x}, [x, r, c](Graph& g, int self) { g.grad(x)(r, c) += g.grad(self)[0]; });
}

Var sum(Graph& g, Var x) {
  double total = 0.0;
  for (double v : g.value(x).values()) total += v;
  return g.emit(Tensor(1, 1, total), {x}, [x](Graph& g, int self) {
    const double d = g.grad(self)[0];
    for (auto& v : g.grad(x).values()) v += d;
  });
}

Var linear(Graph& g, Var x, Var w, Var bias) {
  Var y = matmul(g, x, w);
  return bias.valid() ? add_row(g, y, bias) : y;
}

Var scaled_dot_similarity(Graph& g, Var q, Var k) {
  const int d = g.value(q).cols();
  return scale(g, matmul_nt(g, q, k), 1.0 / std::sqrt(static_cast<double>(d)));
}

}  // namespace dan
