#include "sinkmatch/ad.hpp"

namespace sinkmatch::ad {

void Tape::backward(Var root) {
  if (root.tape != this || root.idx >= nodes_.size()) {
    throw InternalError("backward called with a variable from another tape");
  }
  for (auto& n : nodes_) n.grad = 0.0;
  nodes_[root.idx].grad = 1.0;

  for (std::uint32_t i = static_cast<std::uint32_t>(nodes_.size()); i-- > 0;) {
    const Node n = nodes_[i];
    const double g = n.grad;
    if (g == 0.0) continue;
    switch (n.op) {
      case Op::kAdd:
        nodes_[n.a].grad += g;
        nodes_[n.b].grad += g;
        break;
      case Op::kSub:
        nodes_[n.a].grad += g;
        nodes_[n.b].grad -= g;
        break;
      case Op::kMul:
        nodes_[n.a].grad += g * nodes_[n.b].val;
        nodes_[n.b].grad += g * nodes_[n.a].val;
        break;
      case Op::kDiv: {
        const double bv = nodes_[n.b].val;
        nodes_[n.a].grad += g / bv;
        nodes_[n.b].grad -= g * n.val / bv;  // d(a/b)/db = -a/b^2 = -val/b
        break;
      }
      case Op::kNeg:
        nodes_[n.a].grad -= g;
        break;
      case Op::kExp:
        nodes_[n.a].grad += g * n.val;
        break;
      case Op::kLog:
        nodes_[n.a].grad += g / nodes_[n.a].val;
        break;
      case Op::kSqrt:
        nodes_[n.a].grad += g * 0.5 / n.val;
        break;
      case Op::kRelu:
        if (nodes_[n.a].val > 0.0) nodes_[n.a].grad += g;
        break;
      case Op::kConst:
      case Op::kInput:
        break;
    }
  }
}

}  // namespace sinkmatch::ad
