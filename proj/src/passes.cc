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

#include "rgnnc/passes.h"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "rgnnc/analysis.h"

namespace rgnnc::ir {

namespace {

void visit_ops(const std::vector<Stmt>& body,
               const std::function<void(const OpCall&)>& fn) {
  for (const Stmt& s : body) {
    if (s.is_scope) {
      visit_ops(s.body, fn);
    } else {
      fn(s.op);
    }
  }
}

bool has_nested(const Stmt& scope) {
  return std::any_of(scope.body.begin(), scope.body.end(),
                     [](const Stmt& s) { return s.is_scope; });
}

}  // namespace

bool is_canonical(const Program& p) {
  return std::none_of(p.body.begin(), p.body.end(), [](const Stmt& s) {
    return s.is_scope && has_nested(s);
  });
}

// ---------------------------------------------------------------------------
// canonicalize_loops

namespace {

Operand to_edge_form(const Operand& o, bool incoming) {
  Operand r = o;
  if (o.access == Access::kNode) r.access = incoming ? Access::kDst : Access::kSrc;
  if (o.access == Access::kWeight && o.sel == TypeSel::kNodeType) {
    r.sel = incoming ? TypeSel::kDstNodeType : TypeSel::kSrcNodeType;
  }
  return r;
}

bool splittable(const Stmt& scope) {
  std::set<std::string> written, far_accumulated;
  visit_ops(scope.body, [&](const OpCall& op) { written.insert(op.result.var); });
  for (const Stmt& inner : scope.body) {
    if (!inner.is_scope) continue;
    const Access far = inner.scope == ScopeKind::kIncomingEdges ? Access::kSrc
                                                                : Access::kDst;
    for (const Stmt& s : inner.body) {
      for (const Operand& a : s.op.args) {
        if (a.access == far && written.count(a.var)) return false;
      }
      if (s.op.result.access == far && s.op.accumulates()) {
        far_accumulated.insert(s.op.result.var);
      }
    }
  }
  bool ok = true;
  visit_ops(scope.body, [&](const OpCall& op) {
    for (const auto& v : read_vars(op)) {
      if (far_accumulated.count(v)) ok = false;
    }
  });
  return ok;
}

}  // namespace

Program canonicalize_loops(const Program& p) {
  Program out = p;
  out.body.clear();
  for (const Stmt& s : p.body) {
    if (!s.is_scope || !has_nested(s) || !splittable(s)) {
      out.body.push_back(s);
      continue;
    }
    std::vector<Stmt> pending;
    auto flush = [&]() {
      if (pending.empty()) return;
      out.body.push_back(Stmt::of_scope(s.scope, std::move(pending)));
      pending.clear();
    };
    for (const Stmt& inner : s.body) {
      if (!inner.is_scope) {
        pending.push_back(inner);
        continue;
      }
      flush();
      const bool incoming = inner.scope == ScopeKind::kIncomingEdges;
      std::vector<Stmt> edge_body;
      for (const Stmt& st : inner.body) {
        OpCall op = st.op;
        for (Operand& a : op.args) a = to_edge_form(a, incoming);
        op.result = to_edge_form(op.result, incoming);
        edge_body.push_back(Stmt::of_op(std::move(op)));
      }
      out.body.push_back(Stmt::of_scope(ScopeKind::kEdges, std::move(edge_body)));
    }
    flush();
  }
  return out;
}

// ---------------------------------------------------------------------------
// fuse_loops

namespace {

struct ScopeSummary {
  std::set<std::string> reads;
  std::set<std::string> cross_accumulated;
  std::set<std::string> accumulated;
};

ScopeSummary summarize(const Stmt& scope) {
  ScopeSummary s;
  const bool edge_loop = iterates_edges(scope.scope);
  visit_ops(scope.body, [&](const OpCall& op) {
    for (const auto& v : read_vars(op)) s.reads.insert(v);
    if (op.kind == OpKind::kAccumulateSum || op.kind == OpKind::kOuterProd) {
      s.accumulated.insert(op.result.var);
      if (op.kind == OpKind::kOuterProd || is_cross_row(op.result, edge_loop)) {
        s.cross_accumulated.insert(op.result.var);
      }
    }
  });
  return s;
}

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
  return std::any_of(a.begin(), a.end(),
                     [&](const std::string& v) { return b.count(v) > 0; });
}

}  // namespace

Program fuse_loops(const Program& p) {
  Program out = p;
  out.body.clear();
  for (const Stmt& s : p.body) {
    if (!out.body.empty()) {
      Stmt& last = out.body.back();
      if (last.is_scope && s.is_scope && last.scope == s.scope &&
          !has_nested(last) && !has_nested(s)) {
        const ScopeSummary a = summarize(last);
        const ScopeSummary b = summarize(s);
        const bool hazard = intersects(b.reads, a.cross_accumulated) ||
                            intersects(b.accumulated, a.reads);
        if (!hazard) {
          last.body.insert(last.body.end(), s.body.begin(), s.body.end());
          continue;
        }
      }
    }
    out.body.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// reorder_linear_ops

namespace {

class Reorderer {
 public:
  explicit Reorderer(const Program& p) : in_(p), out_(p) {
    visit_ops(p.body, [&](const OpCall& op) {
      for (const auto& v : read_vars(op)) ++readers_[v];
    });
  }

  Program run() {
    for (Stmt& s : out_.body) {
      if (s.is_scope) rewrite(s.body, iterates_edges(s.scope));
    }
    if (products_.empty()) return in_;
    std::vector<Stmt> body = std::move(products_);
    for (Stmt& s : out_.body) body.push_back(std::move(s));
    out_.body = std::move(body);
    return out_;
  }

 private:
  const OpCall* local_linear(const std::vector<Stmt>& body,
                             const Operand& a, bool edge_loop) const {
    const Access local = edge_loop ? Access::kEdge : Access::kNode;
    if (a.access != local) return nullptr;
    for (const Stmt& s : body) {
      if (!s.is_scope && s.op.kind == OpKind::kTypedLinear &&
          s.op.result.var == a.var) {
        return &s.op;
      }
    }
    return nullptr;
  }

  std::string product_for(const Operand& w_matrix, const Operand& w_vector) {
    const auto key = std::make_pair(w_matrix.var, w_vector.var);
    auto it = names_.find(key);
    if (it != names_.end()) return it->second;
    std::string name = "wp_" + w_matrix.var + "_" + w_vector.var;
    while (out_.find(name)) name += "_";
    const TensorDecl& md = out_.decl(w_matrix.var);
    TensorDecl d;
    d.name = name;
    d.role = Role::kWeight;
    d.weight_rows = 1;
    d.cols = md.weight_rows;
    d.weight_index = md.weight_index;
    out_.decls.push_back(d);
    OpCall op;
    op.id = out_.next_op_id++;
    op.kind = OpKind::kWeightProduct;
    op.args = {weight(w_matrix.var), weight(w_vector.var)};
    op.result = weight(name);
    products_.push_back(Stmt::of_op(std::move(op)));
    names_[key] = name;
    return name;
  }

  void rewrite(std::vector<Stmt>& body, bool edge_loop) {
    std::set<std::string> dropped;
    for (Stmt& s : body) {
      if (s.is_scope) {
        rewrite(s.body, true);
        continue;
      }
      OpCall& op = s.op;
      if (op.kind != OpKind::kDotProd) continue;
      const Operand& b = op.args[1];
      if (b.access != Access::kWeight) continue;
      const OpCall* lin = local_linear(body, op.args[0], edge_loop);
      if (!lin) continue;
      const Operand& w = lin->args[1];
      const TensorDecl& wd = out_.decl(w.var);
      const TensorDecl& vd = out_.decl(b.var);
      if (w.transposed || w.sel != b.sel || wd.weight_index != vd.weight_index ||
          !wd.input || !vd.input || vd.cols != wd.cols) {
        continue;
      }
      const std::string hs = lin->result.var;
      const Operand x = lin->args[0];
      const std::string prod = product_for(w, b);
      op.args = {x, weight(prod, b.sel)};
      if (--readers_[hs] == 0 && !out_.decl(hs).output) dropped.insert(hs);
    }
    if (dropped.empty()) return;
    std::erase_if(body, [&](const Stmt& s) {
      return !s.is_scope && s.op.kind == OpKind::kTypedLinear &&
             dropped.count(s.op.result.var) > 0;
    });
    std::erase_if(out_.decls, [&](const TensorDecl& d) {
      return dropped.count(d.name) > 0;
    });
  }

  const Program& in_;
  Program out_;
  std::map<std::string, int> readers_;
  std::map<std::pair<std::string, std::string>, std::string> names_;
  std::vector<Stmt> products_;
};

}  // namespace

Program reorder_linear_ops(const Program& p) { return Reorderer(p).run(); }

}  // namespace rgnnc::ir
