// Copyright 2026 The rgnnc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode differentiation over canonical (flat) programs. Each forward
// scope gets a mirrored backward scope, emitted in reverse order, whose
// statements are the adjoints of the forward statements in reverse order.

#include <algorithm>
#include <functional>
#include <set>

#include "rgnnc/analysis.h"
#include "rgnnc/passes.h"

namespace rgnnc::ir {

std::string grad_name(std::string_view var) { return "d_" + std::string(var); }

namespace {

class Differentiator {
 public:
  explicit Differentiator(const Program& forward)
      : fwd_(canonicalize_loops(forward)), out_(fwd_) {}

  Program run() {
    if (!is_canonical(fwd_)) {
      throw Error("backward needs flat loops; '" + fwd_.name +
                  "' has a node scope that cannot be canonicalized");
    }
    for (const OpCall* op : fwd_.ops()) {
      if (op->kind == OpKind::kWeightProduct || op->kind == OpKind::kReshape ||
          op->kind == OpKind::kConcat) {
        throw Error("op " + std::to_string(op->id) + " (" +
                    std::string(to_string(op->kind)) +
                    ") is not differentiable");
      }
    }
    find_active();
    seed_outputs();
    for (const TensorDecl& d : fwd_.decls) {
      if (d.input && d.requires_grad) declare_grad(d.name).output = true;
    }
    for (auto it = fwd_.body.rbegin(); it != fwd_.body.rend(); ++it) {
      const Stmt& scope = *it;
      Stmt bwd = Stmt::of_scope(scope.scope);
      edge_loop_ = iterates_edges(scope.scope);
      for (auto op = scope.body.rbegin(); op != scope.body.rend(); ++op) {
        adjoint(op->op, bwd.body);
      }
      if (!bwd.body.empty()) out_.body.push_back(std::move(bwd));
    }
    validate(out_);
    return out_;
  }

 private:
  void find_active() {
    for (const TensorDecl& d : fwd_.decls) {
      if (d.input && d.requires_grad) active_.insert(d.name);
    }
    for (const OpCall* op : fwd_.ops()) {
      for (const auto& v : read_vars(*op)) {
        if (active_.count(v)) active_.insert(op->result.var);
      }
    }
  }

  void seed_outputs() {
    std::set<std::string> consumed;
    for (const OpCall* op : fwd_.ops()) {
      for (const auto& v : read_vars(*op)) consumed.insert(v);
    }
    for (const TensorDecl& d : fwd_.decls) {
      if (!d.output) continue;
      if (consumed.count(d.name)) {
        throw Error("output '" + d.name + "' is also consumed; cannot seed it");
      }
      TensorDecl seed = d;
      seed.name = grad_name(d.name);
      seed.input = true;
      seed.output = false;
      seed.requires_grad = false;
      out_.decls.push_back(seed);
      has_grad_.insert(seed.name);
    }
  }

  TensorDecl& declare_grad(const std::string& var) {
    const std::string g = grad_name(var);
    if (TensorDecl* d = out_.find(g)) return *d;
    TensorDecl d = fwd_.decl(var);
    d.name = g;
    d.input = d.output = d.requires_grad = false;
    out_.decls.push_back(d);
    return out_.decls.back();
  }

  Operand local(const std::string& var) const {
    return edge_loop_ ? edge(var) : node(var);
  }

  void push(std::vector<Stmt>& body, OpCall op) {
    op.id = out_.next_op_id++;
    op.adjoint_of = current_;
    body.push_back(Stmt::of_op(std::move(op)));
  }

  // Assigns a fresh local temporary and returns an operand reading it.
  Operand temp(std::vector<Stmt>& body, OpCall op, Index width) {
    const std::string name =
        "t" + std::to_string(current_) + "_" + std::to_string(temp_count_++);
    TensorDecl d;
    d.name = name;
    d.role = edge_loop_ ? Role::kEdge : Role::kNode;
    d.cols = width;
    out_.decls.push_back(d);
    op.result = local(name);
    push(body, std::move(op));
    return local(name);
  }

  Operand make_binary(std::vector<Stmt>& body, BinaryFn fn, Operand a,
                      Operand b) {
    const Index w = std::max(operand_width(out_, a), operand_width(out_, b));
    OpCall op;
    op.kind = OpKind::kBinary;
    op.binary = fn;
    op.args = {std::move(a), std::move(b)};
    return temp(body, std::move(op), w);
  }

  Operand make_dot(std::vector<Stmt>& body, Operand a, Operand b) {
    OpCall op;
    op.kind = OpKind::kDotProd;
    op.args = {std::move(a), std::move(b)};
    return temp(body, std::move(op), 1);
  }

  Operand make_linear(std::vector<Stmt>& body, Operand x, Operand w) {
    const TensorDecl& wd = out_.decl(w.var);
    const Index width = w.transposed ? wd.weight_rows : wd.cols;
    OpCall op;
    op.kind = OpKind::kTypedLinear;
    op.args = {std::move(x), std::move(w)};
    return temp(body, std::move(op), width);
  }

  void outer_into(std::vector<Stmt>& body, const Operand& w, Operand a,
                  Operand b) {
    declare_grad(w.var);
    OpCall op;
    op.kind = OpKind::kOuterProd;
    op.args = {std::move(a), std::move(b)};
    op.result = weight(grad_name(w.var), w.sel);
    push(body, std::move(op));
    has_grad_.insert(grad_name(w.var));
  }

  bool wants(const Operand& o) const {
    return o.access != Access::kConst && active_.count(o.var) > 0;
  }

  // Adds `value` (a row of this loop) to the gradient of operand `o`.
  void contribute(std::vector<Stmt>& body, const Operand& o, Operand value) {
    if (!wants(o)) return;
    if (o.access == Access::kWeight) {
      outer_into(body, o, constant(1.0), std::move(value));
      return;
    }
    declare_grad(o.var);
    Operand target = o;
    target.var = grad_name(o.var);
    OpCall op;
    op.kind = OpKind::kAccumulateSum;
    op.args = {std::move(value)};
    op.result = target;
    push(body, std::move(op));
    has_grad_.insert(target.var);
  }

  void adjoint(const OpCall& op, std::vector<Stmt>& body) {
    current_ = op.id;
    temp_count_ = 0;
    const std::string dy = grad_name(op.result.var);
    if (!has_grad_.count(dy)) return;
    if (op.kind == OpKind::kAccumulateSum) {
      Operand upstream = op.result;
      upstream.var = dy;
      contribute(body, op.args[0], upstream);
      return;
    }
    if (op.kind == OpKind::kOuterProd) {
      const Operand& a = op.args[0];
      const Operand& b = op.args[1];
      const TypeSel sel = op.result.sel;
      if (wants(a)) contribute(body, a, make_linear(body, b, weight(dy, sel, true)));
      if (wants(b)) contribute(body, b, make_linear(body, a, weight(dy, sel)));
      return;
    }
    const Operand gy = local(dy);
    switch (op.kind) {
      case OpKind::kTypedLinear: {
        const Operand& x = op.args[0];
        const Operand& w = op.args[1];
        if (wants(x)) {
          contribute(body, x,
                     make_linear(body, gy, weight(w.var, w.sel, !w.transposed)));
        }
        if (wants(w)) {
          if (w.transposed) {
            outer_into(body, w, gy, x);
          } else {
            outer_into(body, w, x, gy);
          }
        }
        break;
      }
      case OpKind::kDotProd: {
        const Operand& a = op.args[0];
        const Operand& b = op.args[1];
        if (wants(a)) contribute(body, a, make_binary(body, BinaryFn::kMul, b, gy));
        if (wants(b)) {
          if (b.access == Access::kWeight) {
            outer_into(body, b, gy, a);
          } else {
            contribute(body, b, make_binary(body, BinaryFn::kMul, a, gy));
          }
        }
        break;
      }
      case OpKind::kUnary: {
        const Operand& x = op.args[0];
        if (!wants(x)) break;
        switch (op.unary) {
          case UnaryFn::kIdentity:
            contribute(body, x, gy);
            break;
          case UnaryFn::kExp:
            contribute(body, x,
                       make_binary(body, BinaryFn::kMul, gy, local(op.result.var)));
            break;
          case UnaryFn::kLeakyRelu: {
            OpCall mask;
            mask.kind = OpKind::kUnary;
            mask.unary = UnaryFn::kLeakyReluGrad;
            mask.slope = op.slope;
            mask.args = {x};
            const Operand m = temp(body, std::move(mask), operand_width(out_, x));
            contribute(body, x, make_binary(body, BinaryFn::kMul, gy, m));
            break;
          }
          case UnaryFn::kLeakyReluGrad:
            break;  // piecewise constant
        }
        break;
      }
      case OpKind::kBinary:
        binary_adjoint(op, gy, body);
        break;
      default:
        break;
    }
  }

  void binary_adjoint(const OpCall& op, const Operand& gy,
                      std::vector<Stmt>& body) {
    const Operand& a = op.args[0];
    const Operand& b = op.args[1];
    const Index wy = fwd_.decl(op.result.var).cols;
    const Operand y = local(op.result.var);
    switch (op.binary) {
      case BinaryFn::kAdd:
        contribute(body, a, gy);
        contribute(body, b, gy);
        break;
      case BinaryFn::kSub:
        contribute(body, a, gy);
        if (wants(b)) {
          contribute(body, b, make_binary(body, BinaryFn::kMul, gy, constant(-1.0)));
        }
        break;
      case BinaryFn::kMul: {
        auto side = [&](const Operand& mine, const Operand& other) {
          if (!wants(mine)) return;
          if (operand_width(fwd_, mine) == wy) {
            contribute(body, mine, make_binary(body, BinaryFn::kMul, gy, other));
          } else {
            contribute(body, mine, make_dot(body, gy, other));
          }
        };
        side(a, b);
        side(b, a);
        break;
      }
      case BinaryFn::kDiv: {
        if (wants(a)) contribute(body, a, make_binary(body, BinaryFn::kDiv, gy, b));
        if (wants(b)) {
          const Operand t = operand_width(fwd_, b) == wy
                                ? make_binary(body, BinaryFn::kMul, gy, y)
                                : make_dot(body, gy, y);
          const Operand q = make_binary(body, BinaryFn::kDiv, t, b);
          contribute(body, b, make_binary(body, BinaryFn::kMul, q, constant(-1.0)));
        }
        break;
      }
    }
  }

  Program fwd_;
  Program out_;
  std::set<std::string> active_;
  std::set<std::string> has_grad_;
  bool edge_loop_ = true;
  int current_ = -1;
  int temp_count_ = 0;
};

bool is_gradient_of_decl(const Program& p, const std::string& name) {
  return name.rfind("d_", 0) == 0 && p.find(name.substr(2)) != nullptr;
}

void drop_unreferenced_decls(Program& p) {
  std::set<std::string> used;
  for (const OpCall* op : p.ops()) {
    used.insert(op->result.var);
    for (const auto& v : read_vars(*op)) used.insert(v);
  }
  std::erase_if(p.decls, [&](const TensorDecl& d) {
    return !d.input && !d.output && !used.count(d.name);
  });
}

std::vector<Stmt> filter_ops(const std::vector<Stmt>& body,
                             const std::function<bool(const OpCall&)>& keep) {
  std::vector<Stmt> out;
  for (const Stmt& s : body) {
    if (s.is_scope) {
      Stmt scope = Stmt::of_scope(s.scope, filter_ops(s.body, keep));
      if (!scope.body.empty()) out.push_back(std::move(scope));
    } else if (keep(s.op)) {
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace

Program derive_backward(const Program& forward) {
  return Differentiator(forward).run();
}

Program prune_unused_gradients(const Program& p,
                               const std::set<std::string>& wanted) {
  std::set<std::string> live = wanted;
  for (const TensorDecl& d : p.decls) {
    if (d.output && !is_gradient_of_decl(p, d.name)) live.insert(d.name);
  }
  const std::vector<const OpCall*> ops = p.ops();
  std::set<int> keep;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
      const OpCall& op = **it;
      if (keep.count(op.id) || !live.count(op.result.var)) continue;
      keep.insert(op.id);
      changed = true;
      for (const auto& v : read_vars(op)) live.insert(v);
    }
  }
  Program out = p;
  out.body = filter_ops(p.body, [&](const OpCall& op) { return keep.count(op.id) > 0; });
  for (TensorDecl& d : out.decls) {
    if (d.output && is_gradient_of_decl(p, d.name) && !live.count(d.name)) {
      d.output = false;
    }
  }
  drop_unreferenced_decls(out);
  return out;
}

Program backward_only(const Program& with_backward) {
  Program out = with_backward;
  out.body = filter_ops(with_backward.body,
                        [](const OpCall& op) { return op.adjoint_of >= 0; });
  std::set<std::string> written;
  for (const OpCall* op : out.ops()) written.insert(op->result.var);
  for (TensorDecl& d : out.decls) {
    if (!is_gradient_of_decl(with_backward, d.name)) d.output = false;
    if (!d.input && !written.count(d.name)) {
      d.input = true;
      d.requires_grad = false;
    }
  }
  drop_unreferenced_decls(out);
  for (TensorDecl& d : out.decls) {
    if (d.output && d.input) d.input = false;  // zero gradient, never written
  }
  return out;
}

}  // namespace rgnnc::ir
