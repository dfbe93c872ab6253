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

#include "exec.h"

#include <algorithm>
#include <cmath>

namespace rgnnc::exec {

namespace {

Ref bind_operand(const ir::Program& p, const ir::Operand& o, Environment& env,
                 const GraphContext& g) {
  Ref r;
  r.access = o.access;
  r.sel = o.sel;
  r.transposed = o.transposed;
  r.value = o.value;
  if (o.access == ir::Access::kConst) return r;
  r.tensor = &env.at(o.var);
  r.cols = p.decl(o.var).cols;
  if (r.tensor->cols != r.cols) {
    throw Error("tensor '" + o.var + "' has " + std::to_string(r.tensor->cols) +
                " columns, expected " + std::to_string(r.cols));
  }
  if (r.tensor->role == TensorRole::kEdgeCompact && !g.compact) {
    throw Error("tensor '" + o.var + "' is compact but the graph has no compact index");
  }
  return r;
}

double apply_unary(const ir::OpCall& op, double x) {
  switch (op.unary) {
    case ir::UnaryFn::kIdentity: return x;
    case ir::UnaryFn::kExp: return std::exp(x);
    case ir::UnaryFn::kLeakyRelu: return x > 0.0 ? x : op.slope * x;
    case ir::UnaryFn::kLeakyReluGrad: return x > 0.0 ? 1.0 : op.slope;
  }
  return x;
}

double apply_binary(ir::BinaryFn fn, double a, double b) {
  switch (fn) {
    case ir::BinaryFn::kAdd: return a + b;
    case ir::BinaryFn::kSub: return a - b;
    case ir::BinaryFn::kMul: return a * b;
    case ir::BinaryFn::kDiv: return a / b;
  }
  return 0.0;
}

Index width_of(const Ref& r) {
  return r.access == ir::Access::kConst ? 1 : r.cols;
}

}  // namespace

BoundOp Engine::bind(const ir::Program& p, const ir::OpCall& op,
                     Environment& env) const {
  BoundOp b;
  b.op = &op;
  for (const auto& a : op.args) b.args.push_back(bind_operand(p, a, env, g_));
  b.result = bind_operand(p, op.result, env, g_);
  b.width = b.result.cols;
  if (op.kind == ir::OpKind::kTypedLinear) {
    const Tensor& w = *b.args[1].tensor;
    b.width = b.args[1].transposed ? w.slice_rows() : w.cols;
  }
  return b;
}

Point Engine::edge_point(Index e) const {
  const HeteroGraph& g = g_.graph;
  return Point{e, g.src[e], g.dst[e], g.etype[e], -1};
}

Index Engine::row(const Ref& r, const Point& pt) const {
  switch (r.access) {
    case ir::Access::kEdge:
      return r.tensor->role == TensorRole::kEdgeCompact
                 ? g_.compact->pair_of_edge[pt.edge]
                 : pt.edge;
    case ir::Access::kSrc: return pt.src;
    case ir::Access::kDst: return pt.dst;
    case ir::Access::kNode: return pt.node;
    default: return 0;
  }
}

Index Engine::slice(const Ref& r, const Point& pt) const {
  switch (r.sel) {
    case ir::TypeSel::kNone: return 0;
    case ir::TypeSel::kEdgeType: return pt.etype;
    case ir::TypeSel::kSrcNodeType: return g_.node_type[pt.src];
    case ir::TypeSel::kDstNodeType: return g_.node_type[pt.dst];
    case ir::TypeSel::kNodeType: return g_.node_type[pt.node];
  }
  return 0;
}

const double* Engine::data(const Ref& r, const Point& pt) const {
  if (r.access == ir::Access::kConst) return &r.value;
  if (r.access == ir::Access::kWeight) return r.tensor->slice(slice(r, pt));
  return r.tensor->row(row(r, pt));
}

void Engine::compute(const BoundOp& b, const Point& pt, double* out,
                     bool hoisted) const {
  const ir::OpCall& op = *b.op;
  switch (op.kind) {
    case ir::OpKind::kTypedLinear: {
      const Ref& xr = b.args[0];
      const Ref& wr = b.args[1];
      const double* x = data(xr, pt);
      const double* w = data(wr, pt);
      const Index r = wr.tensor->slice_rows();
      const Index c = wr.tensor->cols;
      if (!wr.transposed) {
        for (Index j = 0; j < c; ++j) {
          double acc = 0.0;
          for (Index i = 0; i < r; ++i) acc += x[i] * w[i * c + j];
          out[j] = acc;
        }
      } else {
        for (Index j = 0; j < r; ++j) {
          double acc = 0.0;
          for (Index i = 0; i < c; ++i) acc += x[i] * w[j * c + i];
          out[j] = acc;
        }
      }
      return;
    }
    case ir::OpKind::kDotProd: {
      const double* a = data(b.args[0], pt);
      const double* c = data(b.args[1], pt);
      const Index n = width_of(b.args[0]);
      double acc = 0.0;
      for (Index k = 0; k < n; ++k) acc += a[k] * c[k];
      out[0] = acc;
      return;
    }
    case ir::OpKind::kUnary: {
      const double* x = hoisted ? data(b.args[0], pt) : nullptr;
      for (Index k = 0; k < b.width; ++k) {
        const double* xs = hoisted ? x : data(b.args[0], pt);
        out[k] = apply_unary(op, xs[k]);
      }
      return;
    }
    case ir::OpKind::kBinary: {
      const Ref& ar = b.args[0];
      const Ref& cr = b.args[1];
      const bool a_bcast = width_of(ar) == 1;
      const bool c_bcast = width_of(cr) == 1;
      const double* a = hoisted ? data(ar, pt) : nullptr;
      const double* c = hoisted ? data(cr, pt) : nullptr;
      for (Index k = 0; k < b.width; ++k) {
        const double* as = hoisted ? a : data(ar, pt);
        const double* cs = hoisted ? c : data(cr, pt);
        out[k] = apply_binary(op.binary, as[a_bcast ? 0 : k], cs[c_bcast ? 0 : k]);
      }
      return;
    }
    case ir::OpKind::kAccumulateSum:
    case ir::OpKind::kReshape: {
      const Ref& xr = b.args[0];
      const bool bcast = width_of(xr) == 1;
      const double* x = hoisted ? data(xr, pt) : nullptr;
      for (Index k = 0; k < b.width; ++k) {
        const double* xs = hoisted ? x : data(xr, pt);
        out[k] = xs[bcast ? 0 : k];
      }
      return;
    }
    case ir::OpKind::kConcat: {
      const Index wa = width_of(b.args[0]);
      const Index wb = width_of(b.args[1]);
      const double* a = data(b.args[0], pt);
      const double* c = data(b.args[1], pt);
      std::copy(a, a + wa, out);
      std::copy(c, c + wb, out + wa);
      return;
    }
    case ir::OpKind::kOuterProd:
    case ir::OpKind::kWeightProduct:
      return;
  }
}

void Engine::store(const BoundOp& b, const Point& pt, const double* value) const {
  double* dst = b.result.tensor->row(row(b.result, pt));
  if (b.op->accumulates()) {
    for (Index k = 0; k < b.width; ++k) dst[k] += value[k];
  } else {
    std::copy(value, value + b.width, dst);
  }
}

void Engine::apply(const BoundOp& b, const Point& pt, double* scratch,
                   bool hoisted) const {
  if (b.op->kind == ir::OpKind::kOuterProd) {
    const Ref& ar = b.args[0];
    const Ref& cr = b.args[1];
    const double* a = data(ar, pt);
    const double* c = data(cr, pt);
    double* w = b.result.tensor->slice(slice(b.result, pt));
    const Index rows = width_of(ar);
    const Index cols = width_of(cr);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) w[i * cols + j] += a[i] * c[j];
    }
    return;
  }
  if (b.op->kind == ir::OpKind::kWeightProduct) {
    weight_product(b);
    return;
  }
  compute(b, pt, scratch, hoisted);
  store(b, pt, scratch);
}

void Engine::weight_product(const BoundOp& b) const {
  const Tensor& m = *b.args[0].tensor;
  const Tensor& v = *b.args[1].tensor;
  Tensor& out = *b.result.tensor;
  const Index rows = m.slice_rows();
  const Index cols = m.cols;
  for (Index t = 0; t < m.slices; ++t) {
    const double* ms = m.slice(t);
    const double* vs = v.slice(t);
    double* os = out.slice(t);
    for (Index i = 0; i < rows; ++i) {
      double acc = 0.0;
      for (Index j = 0; j < cols; ++j) acc += ms[i * cols + j] * vs[j];
      os[i] = acc;
    }
  }
}

Index max_width(const std::vector<BoundOp>& ops) {
  Index w = 1;
  for (const auto& b : ops) w = std::max(w, b.width);
  return w;
}

}  // namespace rgnnc::exec
