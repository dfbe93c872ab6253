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

#include "rgnnc/ir.h"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace rgnnc::ir {

Operand edge(std::string var) { return {Access::kEdge, std::move(var)}; }
Operand src(std::string var) { return {Access::kSrc, std::move(var)}; }
Operand dst(std::string var) { return {Access::kDst, std::move(var)}; }
Operand node(std::string var) { return {Access::kNode, std::move(var)}; }
Operand weight(std::string var, TypeSel sel, bool transposed) {
  return {Access::kWeight, std::move(var), sel, transposed};
}
Operand constant(double value) {
  Operand o;
  o.access = Access::kConst;
  o.value = value;
  return o;
}

bool iterates_edges(ScopeKind kind) {
  return kind == ScopeKind::kEdges || kind == ScopeKind::kIncomingEdges ||
         kind == ScopeKind::kOutgoingEdges;
}
bool iterates_nodes(ScopeKind kind) {
  return kind == ScopeKind::kDstNodes || kind == ScopeKind::kSrcNodes;
}

Stmt Stmt::of_op(OpCall op) {
  Stmt s;
  s.is_scope = false;
  s.op = std::move(op);
  return s;
}

Stmt Stmt::of_scope(ScopeKind kind, std::vector<Stmt> body) {
  Stmt s;
  s.is_scope = true;
  s.scope = kind;
  s.body = std::move(body);
  return s;
}

const TensorDecl* Program::find(std::string_view var) const {
  for (const auto& d : decls) {
    if (d.name == var) return &d;
  }
  return nullptr;
}

TensorDecl* Program::find(std::string_view var) {
  for (auto& d : decls) {
    if (d.name == var) return &d;
  }
  return nullptr;
}

const TensorDecl& Program::decl(std::string_view var) const {
  if (const TensorDecl* d = find(var)) return *d;
  throw Error("undeclared variable '" + std::string(var) + "'");
}

namespace {

void collect_ops(const std::vector<Stmt>& body,
                 std::vector<const OpCall*>& out) {
  for (const Stmt& s : body) {
    if (s.is_scope) {
      collect_ops(s.body, out);
    } else {
      out.push_back(&s.op);
    }
  }
}

}  // namespace

std::vector<const OpCall*> Program::ops() const {
  std::vector<const OpCall*> out;
  collect_ops(body, out);
  return out;
}

const OpCall& Program::op(int id) const {
  for (const OpCall* o : ops()) {
    if (o->id == id) return *o;
  }
  throw Error("no op with id " + std::to_string(id));
}

std::vector<std::string> Program::outputs() const {
  std::vector<std::string> out;
  for (const auto& d : decls) {
    if (d.output) out.push_back(d.name);
  }
  return out;
}

std::vector<std::string> Program::inputs() const {
  std::vector<std::string> out;
  for (const auto& d : decls) {
    if (d.input) out.push_back(d.name);
  }
  return out;
}

Index operand_width(const Program& p, const Operand& o) {
  if (o.access == Access::kConst) return 1;
  const TensorDecl& d = p.decl(o.var);
  if (o.access == Access::kWeight && !d.is_weight_vector()) {
    throw Error("weight matrix '" + o.var + "' used as a row operand");
  }
  return d.cols;
}

std::string_view to_string(OpKind k) {
  switch (k) {
    case OpKind::kTypedLinear: return "linear";
    case OpKind::kOuterProd: return "outer";
    case OpKind::kDotProd: return "dot";
    case OpKind::kUnary: return "unary";
    case OpKind::kBinary: return "binary";
    case OpKind::kAccumulateSum: return "accumulate";
    case OpKind::kReshape: return "reshape";
    case OpKind::kConcat: return "concat";
    case OpKind::kWeightProduct: return "weight_product";
  }
  return "?";
}

std::string_view to_string(UnaryFn f) {
  switch (f) {
    case UnaryFn::kIdentity: return "identity";
    case UnaryFn::kExp: return "exp";
    case UnaryFn::kLeakyRelu: return "leakyrelu";
    case UnaryFn::kLeakyReluGrad: return "leakyrelu_grad";
  }
  return "?";
}

std::string_view to_string(BinaryFn f) {
  switch (f) {
    case BinaryFn::kAdd: return "add";
    case BinaryFn::kSub: return "sub";
    case BinaryFn::kMul: return "mul";
    case BinaryFn::kDiv: return "div";
  }
  return "?";
}

std::string_view to_string(ScopeKind k) {
  switch (k) {
    case ScopeKind::kEdges: return "g.edges()";
    case ScopeKind::kDstNodes: return "g.dst_nodes()";
    case ScopeKind::kSrcNodes: return "g.src_nodes()";
    case ScopeKind::kIncomingEdges: return "n.incoming_edges()";
    case ScopeKind::kOutgoingEdges: return "n.outgoing_edges()";
  }
  return "?";
}

std::string_view to_string(TypeSel s) {
  switch (s) {
    case TypeSel::kNone: return "";
    case TypeSel::kEdgeType: return "e.etype";
    case TypeSel::kSrcNodeType: return "e.src.ntype";
    case TypeSel::kDstNodeType: return "e.dst.ntype";
    case TypeSel::kNodeType: return "n.ntype";
  }
  return "?";
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::kNode: return "node";
    case Role::kEdge: return "edge";
    case Role::kWeight: return "weight";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Validation

namespace {

struct LoopCtx {
  bool top = true;
  bool edge_loop = false;  // iterating edges (flat or nested)
  bool nested = false;     // inside a node scope's neighbor loop
};

bool sel_matches(TypeSel sel, WeightIndex index) {
  switch (sel) {
    case TypeSel::kNone: return index == WeightIndex::kSingle;
    case TypeSel::kEdgeType: return index == WeightIndex::kEdgeType;
    case TypeSel::kSrcNodeType:
    case TypeSel::kDstNodeType:
    case TypeSel::kNodeType: return index == WeightIndex::kNodeType;
  }
  return false;
}

class Validator {
 public:
  explicit Validator(const Program& p) : p_(p) {}

  void run() {
    std::set<std::string> names;
    for (const auto& d : p_.decls) {
      if (d.name.empty()) throw Error("declaration with empty name");
      if (!names.insert(d.name).second) {
        throw Error("duplicate declaration of '" + d.name + "'");
      }
      if (d.cols <= 0) throw Error("'" + d.name + "' has non-positive width");
      if (d.role == Role::kWeight && d.weight_rows <= 0) {
        throw Error("weight '" + d.name + "' has no rows");
      }
      if (d.input) defined_.insert(d.name);
    }
    std::set<int> ids;
    for (const OpCall* op : p_.ops()) {
      if (!ids.insert(op->id).second) {
        throw Error("duplicate op id " + std::to_string(op->id));
      }
      if (op->id >= p_.next_op_id) {
        throw Error("op id " + std::to_string(op->id) + " >= next_op_id");
      }
    }
    walk(p_.body, LoopCtx{});
  }

 private:
  [[noreturn]] void fail(const OpCall& op, const std::string& what) const {
    throw Error("op " + std::to_string(op.id) + " (" +
                std::string(to_string(op.kind)) + "): " + what);
  }

  const TensorDecl& decl_of(const OpCall& op, const Operand& o) const {
    const TensorDecl* d = p_.find(o.var);
    if (!d) fail(op, "undeclared variable '" + o.var + "'");
    return *d;
  }

  void check_access(const OpCall& op, const Operand& o, LoopCtx ctx) const {
    switch (o.access) {
      case Access::kConst: return;
      case Access::kEdge:
      case Access::kSrc:
      case Access::kDst:
        if (!ctx.edge_loop) fail(op, "edge accessor outside an edge loop");
        break;
      case Access::kNode:
        if (ctx.top || (ctx.edge_loop && !ctx.nested)) {
          fail(op, "node accessor outside a node scope");
        }
        break;
      case Access::kWeight: {
        const bool edge_sel = o.sel == TypeSel::kEdgeType ||
                              o.sel == TypeSel::kSrcNodeType ||
                              o.sel == TypeSel::kDstNodeType;
        if (edge_sel && !ctx.edge_loop) {
          fail(op, "edge-typed weight selector outside an edge loop");
        }
        if (o.sel == TypeSel::kNodeType && (ctx.top || (ctx.edge_loop && !ctx.nested))) {
          fail(op, "node-typed weight selector outside a node scope");
        }
        break;
      }
    }
    const TensorDecl& d = decl_of(op, o);
    if (o.access == Access::kEdge && d.role != Role::kEdge) {
      fail(op, "'" + o.var + "' is not edge data");
    }
    if ((o.access == Access::kSrc || o.access == Access::kDst ||
         o.access == Access::kNode) &&
        d.role != Role::kNode) {
      fail(op, "'" + o.var + "' is not node data");
    }
    if (o.access == Access::kWeight) {
      if (d.role != Role::kWeight) fail(op, "'" + o.var + "' is not a weight");
      if (!ctx.top && !sel_matches(o.sel, d.weight_index)) {
        fail(op, "selector does not match how '" + o.var + "' is indexed");
      }
    }
  }

  void check_read(const OpCall& op, const Operand& o) const {
    if (o.access == Access::kConst) return;
    if (!defined_.count(o.var)) {
      fail(op, "variable '" + o.var + "' read before definition");
    }
  }

  Index width(const OpCall& op, const Operand& o) const {
    if (o.access == Access::kConst) return 1;
    const TensorDecl& d = decl_of(op, o);
    if (o.access == Access::kWeight && !d.is_weight_vector()) {
      fail(op, "weight matrix '" + o.var + "' used as a row operand");
    }
    return d.cols;
  }

  void check_shapes(const OpCall& op) const {
    auto need_args = [&](std::size_t n) {
      if (op.args.size() != n) fail(op, "wrong operand count");
    };
    auto result_width = [&]() { return decl_of(op, op.result).cols; };
    switch (op.kind) {
      case OpKind::kTypedLinear: {
        need_args(2);
        const Operand& x = op.args[0];
        const Operand& w = op.args[1];
        if (!x.is_data()) fail(op, "linear input must be row data");
        if (w.access != Access::kWeight) fail(op, "linear needs a weight");
        const TensorDecl& wd = decl_of(op, w);
        const Index in = w.transposed ? wd.cols : wd.weight_rows;
        const Index out = w.transposed ? wd.weight_rows : wd.cols;
        if (width(op, x) != in) fail(op, "linear input width mismatch");
        if (result_width() != out) fail(op, "linear output width mismatch");
        break;
      }
      case OpKind::kDotProd: {
        need_args(2);
        if (!op.args[0].is_data()) fail(op, "dot lhs must be row data");
        if (op.args[1].access == Access::kConst) fail(op, "dot rhs is constant");
        if (width(op, op.args[0]) != width(op, op.args[1])) {
          fail(op, "dot operands differ in width");
        }
        if (result_width() != 1) fail(op, "dot result must be scalar");
        break;
      }
      case OpKind::kUnary:
        need_args(1);
        if (op.args[0].access == Access::kConst) fail(op, "unary of constant");
        if (result_width() != width(op, op.args[0])) {
          fail(op, "unary width mismatch");
        }
        break;
      case OpKind::kBinary: {
        need_args(2);
        const Operand& a = op.args[0];
        const Operand& b = op.args[1];
        if (a.access == Access::kConst && b.access == Access::kConst) {
          fail(op, "binary of two constants");
        }
        const Index wa = width(op, a);
        const Index wb = width(op, b);
        const bool scales =
            op.binary == BinaryFn::kMul || op.binary == BinaryFn::kDiv;
        bool ok = wa == wb;
        if (!ok && scales) ok = wb == 1 || (wa == 1 && op.binary == BinaryFn::kMul);
        if (!ok && !scales) {
          ok = b.access == Access::kConst || a.access == Access::kConst;
        }
        if (!ok) fail(op, "binary operand widths incompatible");
        if (result_width() != std::max(wa, wb)) fail(op, "binary width mismatch");
        break;
      }
      case OpKind::kAccumulateSum:
        need_args(1);
        if (op.args[0].access == Access::kConst) fail(op, "accumulating a constant");
        if (result_width() != width(op, op.args[0])) {
          fail(op, "accumulate width mismatch");
        }
        break;
      case OpKind::kOuterProd: {
        need_args(2);
        if (op.result.access != Access::kWeight) fail(op, "outer target must be a weight");
        const TensorDecl& t = decl_of(op, op.result);
        if (t.weight_rows != width(op, op.args[0]) ||
            t.cols != width(op, op.args[1])) {
          fail(op, "outer shape mismatch");
        }
        break;
      }
      case OpKind::kReshape:
        need_args(1);
        if (result_width() != width(op, op.args[0])) fail(op, "reshape width mismatch");
        break;
      case OpKind::kConcat:
        need_args(2);
        if (result_width() != width(op, op.args[0]) + width(op, op.args[1])) {
          fail(op, "concat width mismatch");
        }
        break;
      case OpKind::kWeightProduct: {
        need_args(2);
        const Operand& m = op.args[0];
        const Operand& v = op.args[1];
        if (m.access != Access::kWeight || v.access != Access::kWeight ||
            op.result.access != Access::kWeight) {
          fail(op, "weight_product operands must be weights");
        }
        const TensorDecl& md = decl_of(op, m);
        const TensorDecl& vd = decl_of(op, v);
        const TensorDecl& rd = decl_of(op, op.result);
        if (!vd.is_weight_vector() || vd.cols != md.cols ||
            vd.weight_index != md.weight_index) {
          fail(op, "weight_product vector must match the matrix columns");
        }
        if (!rd.is_weight_vector() || rd.cols != md.weight_rows ||
            rd.weight_index != md.weight_index) {
          fail(op, "weight_product result shape mismatch");
        }
        break;
      }
    }
  }

  void check_result(const OpCall& op, LoopCtx ctx) {
    const Operand& r = op.result;
    if (op.kind == OpKind::kWeightProduct) {
      if (!ctx.top) fail(op, "weight_product must be at top level");
    } else if (ctx.top) {
      fail(op, "only weight_product may appear outside a scope");
    }
    check_access(op, r, ctx);
    if (op.kind == OpKind::kOuterProd) {
      // Target must be a weight, checked in shapes.
    } else if (op.kind == OpKind::kAccumulateSum) {
      if (!r.is_data()) fail(op, "accumulate target must be node or edge data");
    } else if (op.kind != OpKind::kWeightProduct) {
      const Access local = ctx.edge_loop ? Access::kEdge : Access::kNode;
      if (r.access != local) fail(op, "result must be a row of the loop variable");
    }
    const TensorDecl& d = decl_of(op, r);
    if (d.input) fail(op, "writes input '" + r.var + "'");
    if (op.accumulates()) {
      if (assigned_.count(r.var)) fail(op, "accumulates into assigned '" + r.var + "'");
      accumulated_.insert(r.var);
    } else {
      if (assigned_.count(r.var) || accumulated_.count(r.var)) {
        fail(op, "'" + r.var + "' defined more than once");
      }
      assigned_.insert(r.var);
    }
    defined_.insert(r.var);
  }

  // Cross-row accumulation targets of one edge loop must not be read in the
  // same loop: the value is incomplete until the loop ends.
  void check_edge_loop_hazards(const std::vector<Stmt>& body) const {
    std::set<std::string> cross_acc, node_reads;
    for (const Stmt& s : body) {
      if (s.is_scope) continue;
      const OpCall& op = s.op;
      if (op.kind == OpKind::kAccumulateSum && op.result.access != Access::kEdge) {
        cross_acc.insert(op.result.var);
      }
      for (const Operand& a : op.args) {
        if (a.access == Access::kSrc || a.access == Access::kDst ||
            a.access == Access::kNode) {
          node_reads.insert(a.var);
        }
      }
    }
    for (const auto& v : cross_acc) {
      if (node_reads.count(v)) {
        throw Error("'" + v + "' is accumulated and read in the same edge loop");
      }
    }
  }

  void walk(const std::vector<Stmt>& body, LoopCtx ctx) {
    for (const Stmt& s : body) {
      if (s.is_scope) {
        LoopCtx inner = ctx;
        if (ctx.top) {
          if (s.scope == ScopeKind::kIncomingEdges ||
              s.scope == ScopeKind::kOutgoingEdges) {
            throw Error(std::string("neighbor loop ") +
                        std::string(to_string(s.scope)) +
                        " outside a node scope");
          }
          inner.top = false;
          inner.edge_loop = s.scope == ScopeKind::kEdges;
        } else if (!ctx.edge_loop && !ctx.nested &&
                   (s.scope == ScopeKind::kIncomingEdges ||
                    s.scope == ScopeKind::kOutgoingEdges)) {
          inner.edge_loop = true;
          inner.nested = true;
        } else {
          throw Error(std::string("scope ") + std::string(to_string(s.scope)) +
                      " cannot be nested here");
        }
        if (inner.edge_loop) check_edge_loop_hazards(s.body);
        walk(s.body, inner);
        continue;
      }
      const OpCall& op = s.op;
      for (const Operand& a : op.args) {
        check_access(op, a, ctx);
        check_read(op, a);
      }
      if (op.kind == OpKind::kTypedLinear || op.kind == OpKind::kWeightProduct) {
        // weight operands checked by check_access; matrices allowed here
      }
      check_shapes(op);
      check_result(op, ctx);
    }
  }

  const Program& p_;
  std::set<std::string> defined_, assigned_, accumulated_;
};

}  // namespace

void validate(const Program& p) { Validator(p).run(); }

// ---------------------------------------------------------------------------
// Text form

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class Printer {
 public:
  explicit Printer(const Program& p) : p_(p) {
    for (std::size_t i = 0; i < p.decls.size(); ++i) {
      short_[p.decls[i].name] = "v" + std::to_string(i);
    }
  }

  std::string run() {
    os_ << "program " << p_.name << '\n';
    for (const auto& d : p_.decls) {
      os_ << "decl " << short_[d.name] << " \"" << d.name << "\" "
          << to_string(d.role);
      if (d.role == Role::kWeight) {
        const char* idx = d.weight_index == WeightIndex::kEdgeType ? "etype"
                          : d.weight_index == WeightIndex::kNodeType ? "ntype"
                                                                     : "single";
        os_ << '[' << idx << "][" << d.weight_rows << 'x' << d.cols << ']';
      } else {
        os_ << '[' << d.cols << ']';
      }
      if (d.input) os_ << " input";
      if (d.output) os_ << " output";
      if (d.requires_grad) os_ << " grad";
      os_ << '\n';
    }
    print(p_.body, 0);
    return os_.str();
  }

 private:
  std::string name(const std::string& var) {
    auto it = short_.find(var);
    return it == short_.end() ? "?" + var : it->second;
  }

  std::string operand(const Operand& o) {
    switch (o.access) {
      case Access::kConst: return fmt_double(o.value);
      case Access::kEdge: return "e." + name(o.var);
      case Access::kSrc: return "e.src." + name(o.var);
      case Access::kDst: return "e.dst." + name(o.var);
      case Access::kNode: return "n." + name(o.var);
      case Access::kWeight: {
        std::string s = name(o.var);
        if (o.sel != TypeSel::kNone) s += "[" + std::string(to_string(o.sel)) + "]";
        if (o.transposed) s += "^T";
        return s;
      }
    }
    return "?";
  }

  std::string call(std::string_view fn, const OpCall& op) {
    std::string s(fn);
    s += '(';
    for (std::size_t i = 0; i < op.args.size(); ++i) {
      if (i) s += ", ";
      s += operand(op.args[i]);
    }
    if (op.kind == OpKind::kUnary &&
        (op.unary == UnaryFn::kLeakyRelu || op.unary == UnaryFn::kLeakyReluGrad)) {
      s += ", " + fmt_double(op.slope);
    }
    return s + ')';
  }

  void print(const std::vector<Stmt>& body, int depth) {
    const std::string indent(static_cast<std::size_t>(2 * depth), ' ');
    for (const Stmt& s : body) {
      if (s.is_scope) {
        const char* var = iterates_edges(s.scope) ? "e" : "n";
        os_ << indent << "for " << var << " in " << to_string(s.scope) << ":\n";
        print(s.body, depth + 1);
        continue;
      }
      const OpCall& op = s.op;
      os_ << indent << '[' << op.id << "] ";
      switch (op.kind) {
        case OpKind::kAccumulateSum:
          os_ << operand(op.result) << " += " << operand(op.args[0]);
          break;
        case OpKind::kOuterProd:
          os_ << operand(op.result) << " += " << call("outer", op);
          break;
        case OpKind::kUnary:
          os_ << operand(op.result) << " = " << call(to_string(op.unary), op);
          break;
        case OpKind::kBinary:
          os_ << operand(op.result) << " = " << call(to_string(op.binary), op);
          break;
        case OpKind::kWeightProduct:
          os_ << name(op.result.var) << " = " << call("weight_product", op);
          break;
        default:
          os_ << operand(op.result) << " = " << call(to_string(op.kind), op);
          break;
      }
      if (op.adjoint_of >= 0) os_ << "  ; adjoint of [" << op.adjoint_of << ']';
      os_ << '\n';
    }
  }

  const Program& p_;
  std::map<std::string, std::string> short_;
  std::ostringstream os_;
};

}  // namespace

std::string to_text(const Program& p) { return Printer(p).run(); }

// ---------------------------------------------------------------------------
// Builder

ProgramBuilder::ProgramBuilder(std::string name) { program_.name = std::move(name); }

ProgramBuilder& ProgramBuilder::input(std::string name, Role role, Index cols,
                                      bool requires_grad) {
  TensorDecl d;
  d.name = std::move(name);
  d.role = role;
  d.cols = cols;
  d.input = true;
  d.requires_grad = requires_grad;
  program_.decls.push_back(std::move(d));
  return *this;
}

ProgramBuilder& ProgramBuilder::weight(std::string name, WeightIndex index,
                                       Index rows, Index cols,
                                       bool requires_grad) {
  TensorDecl d;
  d.name = std::move(name);
  d.role = Role::kWeight;
  d.cols = cols;
  d.weight_rows = rows;
  d.weight_index = index;
  d.input = true;
  d.requires_grad = requires_grad;
  program_.decls.push_back(std::move(d));
  return *this;
}

ProgramBuilder& ProgramBuilder::mark_output(std::string name) {
  TensorDecl* d = program_.find(name);
  if (!d) throw Error("cannot mark undeclared '" + name + "' as output");
  d->output = true;
  return *this;
}

std::vector<Stmt>& ProgramBuilder::current() {
  std::vector<Stmt>* body = &program_.body;
  for (std::size_t idx : open_) body = &(*body)[idx].body;
  return *body;
}

ScopeKind ProgramBuilder::innermost() const {
  if (open_.empty()) throw Error("no open scope");
  const std::vector<Stmt>* body = &program_.body;
  const Stmt* s = nullptr;
  for (std::size_t idx : open_) {
    s = &(*body)[idx];
    body = &s->body;
  }
  return s->scope;
}

void ProgramBuilder::begin(ScopeKind kind) {
  auto& body = current();
  body.push_back(Stmt::of_scope(kind));
  open_.push_back(body.size() - 1);
}

void ProgramBuilder::end() {
  if (open_.empty()) throw Error("end() without begin()");
  open_.pop_back();
}

std::string ProgramBuilder::define(OpCall op, std::string result, Index width) {
  if (!program_.find(result)) {
    TensorDecl d;
    d.name = result;
    d.role = iterates_edges(innermost()) ? Role::kEdge : Role::kNode;
    d.cols = width;
    program_.decls.push_back(std::move(d));
  }
  op.result = iterates_edges(innermost()) ? edge(result) : node(result);
  op.id = program_.next_op_id++;
  current().push_back(Stmt::of_op(std::move(op)));
  return result;
}

std::string ProgramBuilder::linear(std::string result, Operand x, Operand w) {
  const TensorDecl& wd = program_.decl(w.var);
  const Index out = w.transposed ? wd.weight_rows : wd.cols;
  OpCall op;
  op.kind = OpKind::kTypedLinear;
  op.args = {std::move(x), std::move(w)};
  return define(std::move(op), std::move(result), out);
}

std::string ProgramBuilder::dot(std::string result, Operand a, Operand b) {
  OpCall op;
  op.kind = OpKind::kDotProd;
  op.args = {std::move(a), std::move(b)};
  return define(std::move(op), std::move(result), 1);
}

std::string ProgramBuilder::unary(UnaryFn fn, std::string result, Operand x,
                                  double slope) {
  const Index w = operand_width(program_, x);
  OpCall op;
  op.kind = OpKind::kUnary;
  op.unary = fn;
  op.slope = slope;
  op.args = {std::move(x)};
  return define(std::move(op), std::move(result), w);
}

std::string ProgramBuilder::binary(BinaryFn fn, std::string result, Operand a,
                                   Operand b) {
  const Index w = std::max(operand_width(program_, a), operand_width(program_, b));
  OpCall op;
  op.kind = OpKind::kBinary;
  op.binary = fn;
  op.args = {std::move(a), std::move(b)};
  return define(std::move(op), std::move(result), w);
}

std::string ProgramBuilder::reshape(std::string result, Operand x) {
  const Index w = operand_width(program_, x);
  OpCall op;
  op.kind = OpKind::kReshape;
  op.args = {std::move(x)};
  return define(std::move(op), std::move(result), w);
}

std::string ProgramBuilder::concat(std::string result, Operand a, Operand b) {
  const Index w = operand_width(program_, a) + operand_width(program_, b);
  OpCall op;
  op.kind = OpKind::kConcat;
  op.args = {std::move(a), std::move(b)};
  return define(std::move(op), std::move(result), w);
}

void ProgramBuilder::accumulate(Operand target, Operand value) {
  if (!program_.find(target.var)) {
    TensorDecl d;
    d.name = target.var;
    d.role = target.access == Access::kEdge ? Role::kEdge : Role::kNode;
    d.cols = operand_width(program_, value);
    program_.decls.push_back(std::move(d));
  }
  OpCall op;
  op.kind = OpKind::kAccumulateSum;
  op.args = {std::move(value)};
  op.result = std::move(target);
  op.id = program_.next_op_id++;
  current().push_back(Stmt::of_op(std::move(op)));
}

void ProgramBuilder::outer(Operand target, Operand a, Operand b) {
  OpCall op;
  op.kind = OpKind::kOuterProd;
  op.args = {std::move(a), std::move(b)};
  op.result = std::move(target);
  op.id = program_.next_op_id++;
  current().push_back(Stmt::of_op(std::move(op)));
}

std::string ProgramBuilder::weight_product(std::string result, Operand w_matrix,
                                           Operand w_vector) {
  if (!open_.empty()) throw Error("weight_product must be at top level");
  const TensorDecl& md = program_.decl(w_matrix.var);
  if (!program_.find(result)) {
    TensorDecl d;
    d.name = result;
    d.role = Role::kWeight;
    d.weight_rows = 1;
    d.cols = md.weight_rows;
    d.weight_index = md.weight_index;
    program_.decls.push_back(std::move(d));
  }
  OpCall op;
  op.kind = OpKind::kWeightProduct;
  op.args = {std::move(w_matrix), std::move(w_vector)};
  op.result = ir::weight(result);
  op.id = program_.next_op_id++;
  program_.body.push_back(Stmt::of_op(std::move(op)));
  return result;
}

Program ProgramBuilder::build() const {
  if (!open_.empty()) throw Error("unclosed scope in program '" + program_.name + "'");
  validate(program_);
  return program_;
}

}  // namespace rgnnc::ir
