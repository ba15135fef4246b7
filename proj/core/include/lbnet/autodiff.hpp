#pragma once

#include <vector>

#include "lbnet/activation.hpp"
#include "lbnet/linalg.hpp"
#include "lbnet/matrix.hpp"

// Reverse-mode differentiation over matrix-valued expressions. The tape is
// define-by-run: every operation records a node, backward() sweeps the nodes
// in reverse and accumulates adjoints. Tapes are cheap to build and meant to
// be rebuilt per step rather than reused.
namespace lbnet::ad {

enum class Op {
  Leaf,
  Constant,
  Add,
  Sub,
  Neg,
  MatMul,
  Transpose,
  Solve,
  EMul,
  EDiv,
  BcMul,
  BcAdd,
  ScaleConst,
  ScaleVar,
  Exp,
  Sqrt,
  Act,
  SumSq,
  FroNorm,
};

const char* op_name(Op op);

// Opaque handle into a tape. Only valid for the tape that produced it.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  // Inputs. Leaves receive gradients; constants are never differentiated.
  Var leaf(Matrix value);
  Var constant(Matrix value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var neg(Var a);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  // a^{-1} b. Factorizes a once at record time and reuses the factors for
  // the adjoint pass. Throws Singular if a has no inverse.
  Var solve(Var a, Var b);
  Var emul(Var a, Var b);
  Var ediv(Var a, Var b);
  // Scales row i of m by col(i, 0).
  Var bc_mul(Var col, Var m);
  // Adds col(i, 0) to every entry of row i of m.
  Var bc_add(Var m, Var col);
  Var scale_const(Var a, double s);
  // s must be 1x1; result is s * a.
  Var scale_var(Var a, Var s);
  Var exp(Var a);
  // Elementwise; entries must be non-negative. The derivative at an exact
  // zero is taken as zero rather than infinite.
  Var sqrt(Var a);
  Var act(Var a, Activation f);
  // Sum of squared entries (1x1).
  Var sum_sq(Var a);
  // Frobenius norm (1x1). Gradient at the origin is taken as zero.
  Var fro_norm(Var a);

  const Matrix& value(Var v) const;
  bool needs_grad(Var v) const;
  // Accumulated adjoint of v after backward(); zeros if the sweep never
  // reached it.
  const Matrix& grad(Var v);
  // Seeds the 1x1 root with 1 and sweeps the tape in reverse. Throws
  // Diverged (naming the offending node) if any adjoint goes non-finite.
  void backward(Var root);

  size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double scalar = 0.0;                 // ScaleConst factor
    Activation fn = Activation::Relu;    // Act payload
    int lu = -1;                         // Solve: index into the factor cache
    bool needs_grad = false;
    Matrix value;
    Matrix grad;
  };

  Var push(Node n);
  const Node& at(Var v, const char* who) const;
  void accumulate(int id, const Matrix& delta);

  std::vector<Node> nodes_;
  std::vector<LuFactor<double>> factors_;
};

}  // namespace lbnet::ad
