#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sinkmatch/errors.hpp"

namespace sinkmatch::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape it
/// came from is alive and unchanged by clear().
struct Var {
  Tape* tape = nullptr;
  std::uint32_t idx = 0;
};

/// Reverse-mode autodiff over a flat operation tape. Nodes are appended in
/// evaluation order, so a single reverse sweep propagates adjoints. The tape
/// is single-threaded by construction.
class Tape {
 public:
  enum class Op : std::uint8_t {
    kConst,
    kInput,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kNeg,
    kExp,
    kLog,
    kSqrt,
    kRelu,
  };

  struct Node {
    Op op;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double val = 0.0;
    double grad = 0.0;
  };

  /// Differentiable leaf (a parameter).
  Var input(double v) { return emit(Op::kInput, 0, 0, v); }
  /// Non-differentiable leaf (data, hyperparameters).
  Var constant(double v) { return emit(Op::kConst, 0, 0, v); }

  double value(Var x) const { return nodes_[x.idx].val; }
  double grad(Var x) const { return nodes_[x.idx].grad; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Seeds d(root)/d(root) = 1 and sweeps the tape in reverse, accumulating
  /// adjoints into every node. Idempotent per call (grads are reset first).
  void backward(Var root);

  Var emit(Op op, std::uint32_t a, std::uint32_t b, double val) {
    nodes_.push_back(Node{op, a, b, val, 0.0});
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

 private:
  std::vector<Node> nodes_;
};

inline Var operator+(Var x, Var y) {
  return x.tape->emit(Tape::Op::kAdd, x.idx, y.idx,
                      x.tape->value(x) + y.tape->value(y));
}
inline Var operator-(Var x, Var y) {
  return x.tape->emit(Tape::Op::kSub, x.idx, y.idx,
                      x.tape->value(x) - y.tape->value(y));
}
inline Var operator*(Var x, Var y) {
  return x.tape->emit(Tape::Op::kMul, x.idx, y.idx,
                      x.tape->value(x) * y.tape->value(y));
}
inline Var operator/(Var x, Var y) {
  return x.tape->emit(Tape::Op::kDiv, x.idx, y.idx,
                      x.tape->value(x) / y.tape->value(y));
}
inline Var operator-(Var x) {
  return x.tape->emit(Tape::Op::kNeg, x.idx, 0, -x.tape->value(x));
}

inline Var operator+(Var x, double c) { return x + x.tape->constant(c); }
inline Var operator+(double c, Var x) { return x.tape->constant(c) + x; }
inline Var operator-(Var x, double c) { return x - x.tape->constant(c); }
inline Var operator-(double c, Var x) { return x.tape->constant(c) - x; }
inline Var operator*(Var x, double c) { return x * x.tape->constant(c); }
inline Var operator*(double c, Var x) { return x.tape->constant(c) * x; }
inline Var operator/(Var x, double c) { return x / x.tape->constant(c); }
inline Var operator/(double c, Var x) { return x.tape->constant(c) / x; }

inline Var& operator+=(Var& x, Var y) {
  x = x + y;
  return x;
}

inline Var exp(Var x) {
  return x.tape->emit(Tape::Op::kExp, x.idx, 0, std::exp(x.tape->value(x)));
}
inline Var log(Var x) {
  return x.tape->emit(Tape::Op::kLog, x.idx, 0, std::log(x.tape->value(x)));
}
inline Var sqrt(Var x) {
  return x.tape->emit(Tape::Op::kSqrt, x.idx, 0, std::sqrt(x.tape->value(x)));
}
inline Var relu(Var x) {
  const double v = x.tape->value(x);
  return x.tape->emit(Tape::Op::kRelu, x.idx, 0, v > 0.0 ? v : 0.0);
}

}  // namespace sinkmatch::ad

namespace sinkmatch {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// Numeric value of a scalar, uniform over doubles and tape variables. Used
/// where generic pipeline code needs to branch on magnitudes.
inline double value_of(double x) { return x; }
inline double value_of(ad::Var x) { return x.tape->value(x); }

/// Factory for scalars of type T. Generic pipeline code uses it to lift
/// plain numbers (data, hyperparameters) into the scalar domain it runs in.
template <typename T>
struct ScalarCtx;

template <>
struct ScalarCtx<double> {
  double constant(double v) const { return v; }
};

template <>
struct ScalarCtx<ad::Var> {
  ad::Tape* tape = nullptr;
  ad::Var constant(double v) const { return tape->constant(v); }
};

}  // namespace sinkmatch
