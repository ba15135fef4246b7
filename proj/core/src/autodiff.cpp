#include "lbnet/autodiff.hpp"

#include <cmath>
#include <string>

namespace lbnet::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Neg: return "neg";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::Solve: return "solve";
    case Op::EMul: return "emul";
    case Op::EDiv: return "ediv";
    case Op::BcMul: return "bc_mul";
    case Op::BcAdd: return "bc_add";
    case Op::ScaleConst: return "scale_const";
    case Op::ScaleVar: return "scale_var";
    case Op::Exp: return "exp";
    case Op::Sqrt: return "sqrt";
    case Op::Act: return "act";
    case Op::SumSq: return "sum_sq";
    case Op::FroNorm: return "fro_norm";
  }
  return "?";
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::at(Var v, const char* who) const {
  detail::require(v.id >= 0 && v.id < static_cast<int>(nodes_.size()), ErrorKind::Internal,
                  std::string(who) + ": variable does not belong to this tape");
  return nodes_[v.id];
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.op = Op::Leaf;
  n.needs_grad = true;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(Matrix value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Node &na = at(a, "add"), &nb = at(b, "add");
  Node n;
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = na.value + nb.value;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Node &na = at(a, "sub"), &nb = at(b, "sub");
  Node n;
  n.op = Op::Sub;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = na.value - nb.value;
  return push(std::move(n));
}

Var Tape::neg(Var a) {
  const Node& na = at(a, "neg");
  Node n;
  n.op = Op::Neg;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = -1.0 * na.value;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Node &na = at(a, "matmul"), &nb = at(b, "matmul");
  Node n;
  n.op = Op::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = lbnet::matmul(na.value, nb.value);
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  const Node& na = at(a, "transpose");
  Node n;
  n.op = Op::Transpose;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = lbnet::transpose(na.value);
  return push(std::move(n));
}

Var Tape::solve(Var a, Var b) {
  const Node &na = at(a, "solve"), &nb = at(b, "solve");
  detail::require(na.value.rows == na.value.cols, ErrorKind::Dimension,
                  "solve: left operand must be square");
  detail::require(na.value.rows == nb.value.rows, ErrorKind::Dimension,
                  "solve: row counts do not match");
  LuFactor<double> f = lu_factor(na.value);
  detail::require(!f.singular, ErrorKind::Singular, "solve: matrix is singular");
  Node n;
  n.op = Op::Solve;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = f.solve(nb.value);
  n.lu = static_cast<int>(factors_.size());
  factors_.push_back(std::move(f));
  return push(std::move(n));
}

Var Tape::emul(Var a, Var b) {
  const Node &na = at(a, "emul"), &nb = at(b, "emul");
  detail::require(na.value.rows == nb.value.rows && na.value.cols == nb.value.cols,
                  ErrorKind::Dimension, "emul: shapes do not match");
  Node n;
  n.op = Op::EMul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = na.value;
  for (size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] *= nb.value.data[i];
  return push(std::move(n));
}

Var Tape::ediv(Var a, Var b) {
  const Node &na = at(a, "ediv"), &nb = at(b, "ediv");
  detail::require(na.value.rows == nb.value.rows && na.value.cols == nb.value.cols,
                  ErrorKind::Dimension, "ediv: shapes do not match");
  Node n;
  n.op = Op::EDiv;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = na.value;
  for (size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] /= nb.value.data[i];
  return push(std::move(n));
}

Var Tape::bc_mul(Var col, Var m) {
  const Node &nc = at(col, "bc_mul"), &nm = at(m, "bc_mul");
  detail::require(nc.value.cols == 1, ErrorKind::Dimension, "bc_mul: scale must be a column");
  detail::require(nc.value.rows == nm.value.rows, ErrorKind::Dimension,
                  "bc_mul: row counts do not match");
  Node n;
  n.op = Op::BcMul;
  n.a = col.id;
  n.b = m.id;
  n.needs_grad = nc.needs_grad || nm.needs_grad;
  n.value = nm.value;
  for (int i = 0; i < n.value.rows; ++i)
    for (int j = 0; j < n.value.cols; ++j) n.value(i, j) *= nc.value(i, 0);
  return push(std::move(n));
}

Var Tape::bc_add(Var m, Var col) {
  const Node &nm = at(m, "bc_add"), &nc = at(col, "bc_add");
  detail::require(nc.value.cols == 1, ErrorKind::Dimension, "bc_add: shift must be a column");
  detail::require(nc.value.rows == nm.value.rows, ErrorKind::Dimension,
                  "bc_add: row counts do not match");
  Node n;
  n.op = Op::BcAdd;
  n.a = m.id;
  n.b = col.id;
  n.needs_grad = nm.needs_grad || nc.needs_grad;
  n.value = nm.value;
  for (int i = 0; i < n.value.rows; ++i)
    for (int j = 0; j < n.value.cols; ++j) n.value(i, j) += nc.value(i, 0);
  return push(std::move(n));
}

Var Tape::scale_const(Var a, double s) {
  const Node& na = at(a, "scale_const");
  Node n;
  n.op = Op::ScaleConst;
  n.a = a.id;
  n.scalar = s;
  n.needs_grad = na.needs_grad;
  n.value = s * na.value;
  return push(std::move(n));
}

Var Tape::scale_var(Var a, Var s) {
  const Node &na = at(a, "scale_var"), &ns = at(s, "scale_var");
  detail::require(ns.value.rows == 1 && ns.value.cols == 1, ErrorKind::Dimension,
                  "scale_var: scale must be 1x1");
  Node n;
  n.op = Op::ScaleVar;
  n.a = a.id;
  n.b = s.id;
  n.needs_grad = na.needs_grad || ns.needs_grad;
  n.value = ns.value(0, 0) * na.value;
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  const Node& na = at(a, "exp");
  Node n;
  n.op = Op::Exp;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = na.value;
  for (auto& v : n.value.data) v = std::exp(v);
  return push(std::move(n));
}

Var Tape::sqrt(Var a) {
  const Node& na = at(a, "sqrt");
  for (double v : na.value.data)
    detail::require(v >= 0.0, ErrorKind::Domain, "sqrt: negative entry");
  Node n;
  n.op = Op::Sqrt;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = na.value;
  for (auto& v : n.value.data) v = std::sqrt(v);
  return push(std::move(n));
}

Var Tape::act(Var a, Activation f) {
  const Node& na = at(a, "act");
  Node n;
  n.op = Op::Act;
  n.a = a.id;
  n.fn = f;
  n.needs_grad = na.needs_grad;
  n.value = na.value;
  for (auto& v : n.value.data) v = activate(f, v);
  return push(std::move(n));
}

Var Tape::sum_sq(Var a) {
  const Node& na = at(a, "sum_sq");
  Node n;
  n.op = Op::SumSq;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  double s = 0.0;
  for (double v : na.value.data) s += v * v;
  n.value = Matrix(1, 1);
  n.value(0, 0) = s;
  return push(std::move(n));
}

Var Tape::fro_norm(Var a) {
  const Node& na = at(a, "fro_norm");
  Node n;
  n.op = Op::FroNorm;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = Matrix(1, 1);
  n.value(0, 0) = frobenius_norm(na.value);
  return push(std::move(n));
}

const Matrix& Tape::value(Var v) const { return at(v, "value").value; }

bool Tape::needs_grad(Var v) const { return at(v, "needs_grad").needs_grad; }

const Matrix& Tape::grad(Var v) {
  at(v, "grad");
  Node& n = nodes_[v.id];
  if (n.grad.empty()) n.grad = Matrix(n.value.rows, n.value.cols);
  return n.grad;
}

void Tape::accumulate(int id, const Matrix& delta) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.empty()) {
    n.grad = delta;
    return;
  }
  for (size_t i = 0; i < n.grad.data.size(); ++i) n.grad.data[i] += delta.data[i];
}

void Tape::backward(Var root) {
  const Node& r = at(root, "backward");
  detail::require(r.value.rows == 1 && r.value.cols == 1, ErrorKind::Dimension,
                  "backward: root must be 1x1");
  detail::require(r.needs_grad, ErrorKind::Internal,
                  "backward: root does not depend on any leaf");
  for (auto& n : nodes_) n.grad = Matrix();
  nodes_[root.id].grad = Matrix(1, 1);
  nodes_[root.id].grad(0, 0) = 1.0;

  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.needs_grad) continue;
    detail::require(is_finite(n.grad), ErrorKind::Diverged,
                    "backward: non-finite adjoint at node #" + std::to_string(i) + " (" +
                        op_name(n.op) + ")");
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::Leaf:
      case Op::Constant:
        break;
      case Op::Add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::Sub:
        accumulate(n.a, g);
        accumulate(n.b, -1.0 * g);
        break;
      case Op::Neg:
        accumulate(n.a, -1.0 * g);
        break;
      case Op::MatMul:
        if (nodes_[n.a].needs_grad)
          accumulate(n.a, lbnet::matmul(g, lbnet::transpose(nodes_[n.b].value)));
        if (nodes_[n.b].needs_grad)
          accumulate(n.b, lbnet::matmul(lbnet::transpose(nodes_[n.a].value), g));
        break;
      case Op::Transpose:
        accumulate(n.a, lbnet::transpose(g));
        break;
      case Op::Solve: {
        // c = a^{-1} b:  b_adj = a^{-T} g,  a_adj = -b_adj c^T
        const Matrix t = factors_[n.lu].solve_transposed(g);
        accumulate(n.b, t);
        if (nodes_[n.a].needs_grad)
          accumulate(n.a, -1.0 * lbnet::matmul(t, lbnet::transpose(n.value)));
        break;
      }
      case Op::EMul: {
        if (nodes_[n.a].needs_grad) {
          Matrix d = g;
          for (size_t k = 0; k < d.data.size(); ++k) d.data[k] *= nodes_[n.b].value.data[k];
          accumulate(n.a, d);
        }
        if (nodes_[n.b].needs_grad) {
          Matrix d = g;
          for (size_t k = 0; k < d.data.size(); ++k) d.data[k] *= nodes_[n.a].value.data[k];
          accumulate(n.b, d);
        }
        break;
      }
      case Op::EDiv: {
        if (nodes_[n.a].needs_grad) {
          Matrix d = g;
          for (size_t k = 0; k < d.data.size(); ++k) d.data[k] /= nodes_[n.b].value.data[k];
          accumulate(n.a, d);
        }
        if (nodes_[n.b].needs_grad) {
          Matrix d = g;
          for (size_t k = 0; k < d.data.size(); ++k)
            d.data[k] *= -n.value.data[k] / nodes_[n.b].value.data[k];
          accumulate(n.b, d);
        }
        break;
      }
      case Op::BcMul: {
        const Matrix& col = nodes_[n.a].value;
        const Matrix& m = nodes_[n.b].value;
        if (nodes_[n.a].needs_grad) {
          Matrix d(col.rows, 1);
          for (int r2 = 0; r2 < m.rows; ++r2) {
            double s = 0.0;
            for (int c2 = 0; c2 < m.cols; ++c2) s += g(r2, c2) * m(r2, c2);
            d(r2, 0) = s;
          }
          accumulate(n.a, d);
        }
        if (nodes_[n.b].needs_grad) {
          Matrix d = g;
          for (int r2 = 0; r2 < d.rows; ++r2)
            for (int c2 = 0; c2 < d.cols; ++c2) d(r2, c2) *= col(r2, 0);
          accumulate(n.b, d);
        }
        break;
      }
      case Op::BcAdd: {
        accumulate(n.a, g);
        if (nodes_[n.b].needs_grad) {
          Matrix d(nodes_[n.b].value.rows, 1);
          for (int r2 = 0; r2 < g.rows; ++r2) {
            double s = 0.0;
            for (int c2 = 0; c2 < g.cols; ++c2) s += g(r2, c2);
            d(r2, 0) = s;
          }
          accumulate(n.b, d);
        }
        break;
      }
      case Op::ScaleConst:
        accumulate(n.a, n.scalar * g);
        break;
      case Op::ScaleVar: {
        const double s = nodes_[n.b].value(0, 0);
        accumulate(n.a, s * g);
        if (nodes_[n.b].needs_grad) {
          double acc = 0.0;
          for (size_t k = 0; k < g.data.size(); ++k) acc += g.data[k] * nodes_[n.a].value.data[k];
          Matrix d(1, 1);
          d(0, 0) = acc;
          accumulate(n.b, d);
        }
        break;
      }
      case Op::Exp: {
        Matrix d = g;
        for (size_t k = 0; k < d.data.size(); ++k) d.data[k] *= n.value.data[k];
        accumulate(n.a, d);
        break;
      }
      case Op::Sqrt: {
        Matrix d = g;
        for (size_t k = 0; k < d.data.size(); ++k) {
          const double s = n.value.data[k];
          d.data[k] = s > 0.0 ? d.data[k] / (2.0 * s) : 0.0;
        }
        accumulate(n.a, d);
        break;
      }
      case Op::Act: {
        Matrix d = g;
        for (size_t k = 0; k < d.data.size(); ++k)
          d.data[k] *= activate_slope(n.fn, nodes_[n.a].value.data[k]);
        accumulate(n.a, d);
        break;
      }
      case Op::SumSq:
        accumulate(n.a, (2.0 * g(0, 0)) * nodes_[n.a].value);
        break;
      case Op::FroNorm: {
        const double nrm = n.value(0, 0);
        if (nrm > 0.0) accumulate(n.a, (g(0, 0) / nrm) * nodes_[n.a].value);
        break;
      }
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  factors_.clear();
}

}  // namespace lbnet::ad
