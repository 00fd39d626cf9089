/// Reverse-mode automatic differentiation over dense matrices.
///
/// A Tape is an append-only arena of nodes; Var is an index into it.
/// One tape serves one forward/backward pass (typically a mini-batch);
/// clear() recycles the storage. All math is double precision so that
/// gradients can be validated against central finite differences.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hfn/core.hpp"

namespace hfn::ad {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

enum class Op {
  leaf,
  constant,
  matmul,
  matmul_nt,
  add,
  sub,
  hadamard,
  scale,
  add_const,
  mul_const,
  add_row_broadcast,
  mul_row_broadcast,
  scale_rows,
  relu,
  tanh_fn,
  sigmoid_fn,
  softmax_rows,
  layer_norm,
  mean_rows,
  concat_cols,
  concat_rows,
  slice_cols,
  take_row,
  dropout,
  softmax_xent,
};

class Tape {
 public:
  Var leaf(const Mat& value, bool needs_grad = true) {
    Node n;
    n.op = needs_grad ? Op::leaf : Op::constant;
    n.val = value;
    n.needs_grad = needs_grad;
    return push(std::move(n));
  }

  Var constant(const Mat& value) { return leaf(value, false); }

  Var matmul(Var a, Var b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    check_contract(A.cols == B.rows, "tape matmul: inner dimensions disagree");
    Node n = binary(Op::matmul, a, b, Mat(A.rows, B.cols));
    gemm_acc(A, B, n.val);
    return push(std::move(n));
  }

  // a * b^T
  Var matmul_nt(Var a, Var b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    check_contract(A.cols == B.cols, "tape matmul_nt: inner dimensions disagree");
    Node n = binary(Op::matmul_nt, a, b, Mat(A.rows, B.rows));
    gemm_nt_acc(A, B, n.val);
    return push(std::move(n));
  }

  Var add(Var a, Var b) { return elementwise2(Op::add, a, b); }
  Var sub(Var a, Var b) { return elementwise2(Op::sub, a, b); }
  Var hadamard(Var a, Var b) { return elementwise2(Op::hadamard, a, b); }

  Var scale(Var a, double c) {
    Node n = unary(Op::scale, a, val(a));
    n.x = c;
    for (double& v : n.val.a) v *= c;
    return push(std::move(n));
  }

  Var add_const(Var a, const Mat& c) {
    check_contract(val(a).same_shape(c), "add_const: shape mismatch");
    Node n = unary(Op::add_const, a, val(a));
    for (size_t i = 0; i < n.val.a.size(); ++i) n.val.a[i] += c.a[i];
    return push(std::move(n));
  }

  Var mul_const(Var a, const Mat& c) {
    check_contract(val(a).same_shape(c), "mul_const: shape mismatch");
    Node n = unary(Op::mul_const, a, val(a));
    n.aux = c;
    for (size_t i = 0; i < n.val.a.size(); ++i) n.val.a[i] *= c.a[i];
    return push(std::move(n));
  }

  // a: r×c, bias: 1×c added to every row
  Var add_row_broadcast(Var a, Var bias) {
    const Mat& A = val(a);
    const Mat& B = val(bias);
    check_contract(B.rows == 1 && B.cols == A.cols, "add_row_broadcast: bias must be 1×cols");
    Node n = binary(Op::add_row_broadcast, a, bias, A);
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < A.cols; ++j) n.val(i, j) += B(0, j);
    return push(std::move(n));
  }

  // a: r×c, g: 1×c multiplied into every row (layer-norm gain)
  Var mul_row_broadcast(Var a, Var gain) {
    const Mat& A = val(a);
    const Mat& G = val(gain);
    check_contract(G.rows == 1 && G.cols == A.cols, "mul_row_broadcast: gain must be 1×cols");
    Node n = binary(Op::mul_row_broadcast, a, gain, A);
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < A.cols; ++j) n.val(i, j) *= G(0, j);
    return push(std::move(n));
  }

  // a: r×c, s: r×1; row i multiplied by s(i)
  Var scale_rows(Var a, Var s) {
    const Mat& A = val(a);
    const Mat& S = val(s);
    check_contract(S.cols == 1 && S.rows == A.rows, "scale_rows: scale must be rows×1");
    Node n = binary(Op::scale_rows, a, s, A);
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < A.cols; ++j) n.val(i, j) *= S(i, 0);
    return push(std::move(n));
  }

  Var relu(Var a) {
    Node n = unary(Op::relu, a, val(a));
    for (double& v : n.val.a) v = v > 0.0 ? v : 0.0;
    return push(std::move(n));
  }

  Var tanh_fn(Var a) {
    Node n = unary(Op::tanh_fn, a, val(a));
    for (double& v : n.val.a) v = std::tanh(v);
    return push(std::move(n));
  }

  Var sigmoid_fn(Var a) {
    Node n = unary(Op::sigmoid_fn, a, val(a));
    for (double& v : n.val.a) v = 1.0 / (1.0 + std::exp(-v));
    return push(std::move(n));
  }

  // Row-wise softmax. key_mask (optional, per column): nonzero means the
  // column is excluded and receives exactly zero probability.
  Var softmax_rows(Var a, const std::vector<uint8_t>& key_mask = {}) {
    const Mat& A = val(a);
    if (!key_mask.empty()) {
      check_contract(static_cast<int>(key_mask.size()) == A.cols, "softmax_rows: mask length mismatch");
      bool any = false;
      for (uint8_t m : key_mask)
        if (!m) any = true;
      check_contract(any, "softmax_rows: all keys are masked");
    }
    Node n = unary(Op::softmax_rows, a, Mat(A.rows, A.cols));
    n.mask = key_mask;
    for (int i = 0; i < A.rows; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < A.cols; ++j)
        if (key_mask.empty() || !key_mask[static_cast<size_t>(j)]) mx = std::max(mx, A(i, j));
      double z = 0.0;
      for (int j = 0; j < A.cols; ++j) {
        bool excluded = !key_mask.empty() && key_mask[static_cast<size_t>(j)];
        double e = excluded ? 0.0 : std::exp(A(i, j) - mx);
        n.val(i, j) = e;
        z += e;
      }
      for (int j = 0; j < A.cols; ++j) n.val(i, j) /= z;
    }
    return push(std::move(n));
  }

  // Row-wise (x - mean) / sqrt(var + eps), population variance, no affine.
  Var layer_norm(Var a, double eps = 1e-5) {
    const Mat& A = val(a);
    Node n = unary(Op::layer_norm, a, Mat(A.rows, A.cols));
    n.x = eps;
    for (int i = 0; i < A.rows; ++i) {
      double mu = 0.0;
      for (int j = 0; j < A.cols; ++j) mu += A(i, j);
      mu /= A.cols;
      double var = 0.0;
      for (int j = 0; j < A.cols; ++j) {
        double d = A(i, j) - mu;
        var += d * d;
      }
      var /= A.cols;
      double inv = 1.0 / std::sqrt(var + eps);
      for (int j = 0; j < A.cols; ++j) n.val(i, j) = (A(i, j) - mu) * inv;
    }
    return push(std::move(n));
  }

  Var mean_rows(Var a) {
    const Mat& A = val(a);
    Node n = unary(Op::mean_rows, a, Mat(1, A.cols));
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < A.cols; ++j) n.val(0, j) += A(i, j);
    for (double& v : n.val.a) v /= A.rows;
    return push(std::move(n));
  }

  Var concat_cols(Var a, Var b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    check_contract(A.rows == B.rows, "concat_cols: row counts disagree");
    Node n = binary(Op::concat_cols, a, b, Mat(A.rows, A.cols + B.cols));
    for (int i = 0; i < A.rows; ++i) {
      for (int j = 0; j < A.cols; ++j) n.val(i, j) = A(i, j);
      for (int j = 0; j < B.cols; ++j) n.val(i, A.cols + j) = B(i, j);
    }
    return push(std::move(n));
  }

  // Stack 1×c (or r_i×c) pieces vertically.
  Var concat_rows(const std::vector<Var>& parts) {
    check_contract(!parts.empty(), "concat_rows: no parts");
    int cols = val(parts[0]).cols;
    int rows = 0;
    for (Var p : parts) {
      check_contract(val(p).cols == cols, "concat_rows: column counts disagree");
      rows += val(p).rows;
    }
    Node n;
    n.op = Op::concat_rows;
    n.srcs.reserve(parts.size());
    n.val = Mat(rows, cols);
    int r = 0;
    for (Var p : parts) {
      n.srcs.push_back(p.id);
      const Mat& P = val(p);
      std::copy(P.a.begin(), P.a.end(), n.val.a.begin() + static_cast<size_t>(r) * cols);
      r += P.rows;
      n.needs_grad = n.needs_grad || node(p).needs_grad;
    }
    return push(std::move(n));
  }

  Var slice_cols(Var a, int c0, int c1) {
    const Mat& A = val(a);
    check_contract(0 <= c0 && c0 < c1 && c1 <= A.cols, "slice_cols: bad range");
    Node n = unary(Op::slice_cols, a, Mat(A.rows, c1 - c0));
    n.i0 = c0;
    n.i1 = c1;
    for (int i = 0; i < A.rows; ++i)
      for (int j = c0; j < c1; ++j) n.val(i, j - c0) = A(i, j);
    return push(std::move(n));
  }

  Var take_row(Var a, int r) {
    const Mat& A = val(a);
    check_contract(0 <= r && r < A.rows, "take_row: index out of range");
    Node n = unary(Op::take_row, a, Mat(1, A.cols));
    n.i0 = r;
    for (int j = 0; j < A.cols; ++j) n.val(0, j) = A(r, j);
    return push(std::move(n));
  }

  // Inverted dropout; call sites skip this op entirely in inference mode.
  Var dropout(Var a, double rate, Rng& rng) {
    check_contract(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0,1)");
    const Mat& A = val(a);
    Node n = unary(Op::dropout, a, Mat(A.rows, A.cols));
    n.aux = Mat(A.rows, A.cols);
    double keep = 1.0 - rate;
    for (size_t i = 0; i < A.a.size(); ++i) {
      double m = rng.uniform() < rate ? 0.0 : 1.0 / keep;
      n.aux.a[i] = m;
      n.val.a[i] = A.a[i] * m;
    }
    return push(std::move(n));
  }

  // logits: 1×C. Returns 1×1 loss = logsumexp(logits) - logits[target].
  Var softmax_xent(Var logits, int target) {
    const Mat& L = val(logits);
    check_contract(L.rows == 1, "softmax_xent: logits must be a single row");
    check_contract(0 <= target && target < L.cols, "softmax_xent: target out of range");
    Node n = unary(Op::softmax_xent, logits, Mat(1, 1));
    n.i0 = target;
    double mx = *std::max_element(L.a.begin(), L.a.end());
    double z = 0.0;
    for (double v : L.a) z += std::exp(v - mx);
    n.val(0, 0) = mx + std::log(z) - L(0, target);
    n.aux = Mat(1, L.cols);
    for (int j = 0; j < L.cols; ++j) n.aux(0, j) = std::exp(L(0, j) - mx) / z;
    return push(std::move(n));
  }

  const Mat& value(Var v) const { return nodes_[static_cast<size_t>(v.id)].val; }
  const Mat& grad(Var v) const { return nodes_[static_cast<size_t>(v.id)].grad; }
  bool requires_grad(Var v) const { return node(v).needs_grad; }

  void backward(Var root) {
    Node& r = nodes_[static_cast<size_t>(root.id)];
    check_contract(r.val.rows == 1 && r.val.cols == 1, "backward: root must be scalar");
    for (Node& n : nodes_)
      if (n.needs_grad) n.grad = Mat(n.val.rows, n.val.cols);
    if (!r.needs_grad) return;
    r.grad(0, 0) = 1.0;
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<size_t>(id)];
      if (!n.needs_grad) continue;
      propagate(n);
    }
  }

  void clear() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Op op = Op::leaf;
    int a = -1;
    int b = -1;
    std::vector<int> srcs;
    Mat val;
    Mat grad;
    Mat aux;
    std::vector<uint8_t> mask;
    int i0 = 0;
    int i1 = 0;
    double x = 0.0;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;

  const Mat& val(Var v) const { return nodes_[static_cast<size_t>(v.id)].val; }
  const Node& node(Var v) const { return nodes_[static_cast<size_t>(v.id)]; }

  Var push(Node&& n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Node unary(Op op, Var a, Mat v) {
    Node n;
    n.op = op;
    n.a = a.id;
    n.val = std::move(v);
    n.needs_grad = node(a).needs_grad;
    return n;
  }

  Node binary(Op op, Var a, Var b, Mat v) {
    Node n;
    n.op = op;
    n.a = a.id;
    n.b = b.id;
    n.val = std::move(v);
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    return n;
  }

  Var elementwise2(Op op, Var a, Var b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    check_contract(A.same_shape(B), "elementwise op: shape mismatch");
    Node n = binary(op, a, b, A);
    switch (op) {
      case Op::add:
        for (size_t i = 0; i < n.val.a.size(); ++i) n.val.a[i] = A.a[i] + B.a[i];
        break;
      case Op::sub:
        for (size_t i = 0; i < n.val.a.size(); ++i) n.val.a[i] = A.a[i] - B.a[i];
        break;
      case Op::hadamard:
        for (size_t i = 0; i < n.val.a.size(); ++i) n.val.a[i] = A.a[i] * B.a[i];
        break;
      default:
        fail_contract("elementwise2: bad op");
    }
    return push(std::move(n));
  }

  Mat* grad_of(int id) {
    if (id < 0) return nullptr;
    Node& n = nodes_[static_cast<size_t>(id)];
    return n.needs_grad ? &n.grad : nullptr;
  }

  void propagate(Node& n) {
    Mat* ga = grad_of(n.a);
    Mat* gb = grad_of(n.b);
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::leaf:
      case Op::constant:
        break;
      case Op::matmul: {
        const Mat& A = nodes_[static_cast<size_t>(n.a)].val;
        const Mat& B = nodes_[static_cast<size_t>(n.b)].val;
        if (ga) gemm_nt_acc(g, B, *ga);
        if (gb) gemm_tn_acc(A, g, *gb);
        break;
      }
      case Op::matmul_nt: {
        const Mat& A = nodes_[static_cast<size_t>(n.a)].val;
        const Mat& B = nodes_[static_cast<size_t>(n.b)].val;
        if (ga) gemm_acc(g, B, *ga);
        if (gb) gemm_tn_acc(g, A, *gb);
        break;
      }
      case Op::add:
        if (ga)
          for (size_t i = 0; i < g.a.size(); ++i) ga->a[i] += g.a[i];
        if (gb)
          for (size_t i = 0; i < g.a.size(); ++i) gb->a[i] += g.a[i];
        break;
      case Op::sub:
        if (ga)
          for (size_t i = 0; i < g.a.size(); ++i) ga->a[i] += g.a[i];
        if (gb)
          for (size_t i = 0; i < g.a.size(); ++i) gb->a[i] -= g.a[i];
        break;
      case Op::hadamard: {
        const Mat& A = nodes_[static_cast<size_t>(n.a)].val;
        const Mat& B = nodes_[static_cast<size_t>(n.b)].val;
        if (ga)
          for (size_t i = 0; i < g.a.size(); ++i) ga->a[i] += g.a[i] * B.a[i];
        if (gb)
          for (size_t i = 0; i < g.a.size(); ++i) gb->a[i] += g.a[i] * A.a[i];
        break;
      }
      case Op::scale:
        if (ga)
          for (size_t i = 0; i < g.a.size(); ++i) ga->a[i] += g.a[i] * n.x;
        break;
      case Op::add_const:
        if (ga)
          for (size_t i = 0; i < g.a.size(); ++i) ga->a[i] += g.a[i];
        break;
      case Op::mul_const:
        if (ga)
          for (size_t i = 0; i < g.a.size(); ++i) ga->a[i] += g.a[i] * n.aux.a[i];
        break;
      case Op::add_row_broadcast:
        if (ga)
          for (size_t i = 0; i < g.a.size(); ++i) ga->a[i] += g.a[i];
        if (gb)
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) (*gb)(0, j) += g(i, j);
        break;
      case Op::mul_row_broadcast: {
        const Mat& A = nodes_[static_cast<size_t>(n.a)].val;
        const Mat& G = nodes_[static_cast<size_t>(n.b)].val;
        if (ga)
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) (*ga)(i, j) += g(i, j) * G(0, j);
        if (gb)
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) (*gb)(0, j) += g(i, j) * A(i, j);
        break;
      }
      case Op::scale_rows: {
        const Mat& A = nodes_[static_cast<size_t>(n.a)].val;
        const Mat& S = nodes_[static_cast<size_t>(n.b)].val;
        if (ga)
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) (*ga)(i, j) += g(i, j) * S(i, 0);
        if (gb)
          for (int i = 0; i < g.rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < g.cols; ++j) s += g(i, j) * A(i, j);
            (*gb)(i, 0) += s;
          }
        break;
      }
      case Op::relu:
        if (ga)
          for (size_t i = 0; i < g.a.size(); ++i) ga->a[i] += n.val.a[i] > 0.0 ? g.a[i] : 0.0;
        break;
      case Op::tanh_fn:
        if (ga)
          for (size_t i = 0; i < g.a.size(); ++i) ga->a[i] += g.a[i] * (1.0 - n.val.a[i] * n.val.a[i]);
        break;
      case Op::sigmoid_fn:
        if (ga)
          for (size_t i = 0; i < g.a.size(); ++i) ga->a[i] += g.a[i] * n.val.a[i] * (1.0 - n.val.a[i]);
        break;
      case Op::softmax_rows:
        if (ga)
          for (int i = 0; i < g.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < g.cols; ++j) dot += g(i, j) * n.val(i, j);
            for (int j = 0; j < g.cols; ++j) (*ga)(i, j) += (g(i, j) - dot) * n.val(i, j);
          }
        break;
      case Op::layer_norm:
        if (ga) {
          const Mat& A = nodes_[static_cast<size_t>(n.a)].val;
          for (int i = 0; i < g.rows; ++i) {
            double mu = 0.0;
            for (int j = 0; j < g.cols; ++j) mu += A(i, j);
            mu /= g.cols;
            double var = 0.0;
            for (int j = 0; j < g.cols; ++j) {
              double d = A(i, j) - mu;
              var += d * d;
            }
            var /= g.cols;
            double inv = 1.0 / std::sqrt(var + n.x);
            double gmean = 0.0, gymean = 0.0;
            for (int j = 0; j < g.cols; ++j) {
              gmean += g(i, j);
              gymean += g(i, j) * n.val(i, j);
            }
            gmean /= g.cols;
            gymean /= g.cols;
            for (int j = 0; j < g.cols; ++j)
              (*ga)(i, j) += inv * (g(i, j) - gmean - n.val(i, j) * gymean);
          }
        }
        break;
      case Op::mean_rows:
        if (ga) {
          double inv = 1.0 / ga->rows;
          for (int i = 0; i < ga->rows; ++i)
            for (int j = 0; j < ga->cols; ++j) (*ga)(i, j) += g(0, j) * inv;
        }
        break;
      case Op::concat_cols: {
        int ca = nodes_[static_cast<size_t>(n.a)].val.cols;
        if (ga)
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < ca; ++j) (*ga)(i, j) += g(i, j);
        if (gb)
          for (int i = 0; i < g.rows; ++i)
            for (int j = ca; j < g.cols; ++j) (*gb)(i, j - ca) += g(i, j);
        break;
      }
      case Op::concat_rows: {
        int r = 0;
        for (int src : n.srcs) {
          Node& s = nodes_[static_cast<size_t>(src)];
          if (s.needs_grad)
            for (int i = 0; i < s.val.rows; ++i)
              for (int j = 0; j < g.cols; ++j) s.grad(i, j) += g(r + i, j);
          r += s.val.rows;
        }
        break;
      }
      case Op::slice_cols:
        if (ga)
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) (*ga)(i, j + n.i0) += g(i, j);
        break;
      case Op::take_row:
        if (ga)
          for (int j = 0; j < g.cols; ++j) (*ga)(n.i0, j) += g(0, j);
        break;
      case Op::dropout:
        if (ga)
          for (size_t i = 0; i < g.a.size(); ++i) ga->a[i] += g.a[i] * n.aux.a[i];
        break;
      case Op::softmax_xent:
        if (ga) {
          double go = g(0, 0);
          for (int j = 0; j < ga->cols; ++j)
            (*ga)(0, j) += go * (n.aux(0, j) - (j == n.i0 ? 1.0 : 0.0));
        }
        break;
    }
  }
};

}  // namespace hfn::ad
