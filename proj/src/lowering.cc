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

#include "rgnnc/lowering.h"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "rgnnc/analysis.h"
#include "rgnnc/passes.h"

namespace rgnnc::lowering {

using ir::Access;
using ir::OpKind;

Preference preference_of(const ir::OpCall& op) {
  switch (op.kind) {
    case OpKind::kTypedLinear:
    case OpKind::kOuterProd:
      return Preference::kGemm;
    case OpKind::kDotProd:
    case OpKind::kUnary:
    case OpKind::kBinary:
    case OpKind::kAccumulateSum:
      return Preference::kTraversal;
    case OpKind::kReshape:
    case OpKind::kConcat:
    case OpKind::kWeightProduct:
      return Preference::kFallback;
  }
  return Preference::kFallback;
}

std::string_view to_string(Preference p) {
  switch (p) {
    case Preference::kGemm: return "gemm";
    case Preference::kTraversal: return "traversal";
    case Preference::kFallback: return "fallback";
  }
  return "?";
}

std::string KernelPlan::step_name(const Step& s) const {
  switch (s.kind) {
    case StepKind::kGemm:
      return "gemm_" + std::to_string(gemms[static_cast<std::size_t>(s.index)].kid);
    case StepKind::kTraversal:
      return "traversal_" +
             std::to_string(traversals[static_cast<std::size_t>(s.index)].kid);
    case StepKind::kFallback:
      return "fallback_" + std::to_string(s.index);
  }
  return "?";
}

std::vector<int> KernelPlan::step_ops(const Step& s) const {
  switch (s.kind) {
    case StepKind::kGemm: return gemms[static_cast<std::size_t>(s.index)].ops;
    case StepKind::kTraversal:
      return traversals[static_cast<std::size_t>(s.index)].ops();
    case StepKind::kFallback:
      return fallback_groups[static_cast<std::size_t>(s.index)];
  }
  return {};
}

namespace {

const ir::OpSite* find_site(const std::vector<ir::OpSite>& sites, int id) {
  for (const auto& s : sites) {
    if (s.op->id == id) return &s;
  }
  return nullptr;
}

bool local_read(const ir::Operand& o, bool edge_loop) {
  return o.access == (edge_loop ? Access::kEdge : Access::kNode);
}

std::set<std::string> cross_accumulated(const ir::Program& p,
                                        const std::vector<int>& ops,
                                        bool edge_loop) {
  std::set<std::string> out;
  for (int id : ops) {
    const ir::OpCall& op = p.op(id);
    if (op.kind == OpKind::kOuterProd ||
        (op.kind == OpKind::kAccumulateSum && ir::is_cross_row(op.result, edge_loop))) {
      out.insert(op.result.var);
    }
  }
  return out;
}

}  // namespace

bool can_fuse_gemm(const ir::Program& p, const intra::GemmInstance& g,
                   const ir::OpCall& consumer) {
  if (g.outer || g.y_layout != Layout::kVanilla || g.per_row_scalar) return false;
  if (consumer.kind != OpKind::kBinary || consumer.binary != ir::BinaryFn::kMul) {
    return false;
  }
  const auto sites = ir::collect_sites(p);
  const ir::OpSite* gs = find_site(sites, g.ops.front());
  const ir::OpSite* cs = find_site(sites, consumer.id);
  if (!gs || !cs || !cs->in_scope || cs->nested || cs->top_scope != gs->top_scope) {
    return false;
  }
  const bool edge_loop = ir::iterates_edges(cs->kind);
  const ir::Operand& a = consumer.args[0];
  const ir::Operand& b = consumer.args[1];
  auto is_y = [&](const ir::Operand& o) {
    return o.var == g.y && local_read(o, edge_loop);
  };
  auto is_scalar = [&](const ir::Operand& o) {
    return !is_y(o) && ir::operand_width(p, o) == 1 && o.access != Access::kWeight;
  };
  return (is_y(a) && is_scalar(b)) || (is_y(b) && is_scalar(a));
}

bool can_fuse_traversal(const ir::Program& p, const intra::TraversalInstance& t,
                        const ir::OpCall& b) {
  if (t.stmts.empty()) return false;
  const auto sites = ir::collect_sites(p);
  const ir::OpSite* ts = find_site(sites, t.stmts.front().op);
  const ir::OpSite* bs = find_site(sites, b.id);
  if (!ts || !bs || !bs->in_scope || bs->nested || bs->top_scope != ts->top_scope) {
    return false;
  }
  const auto barrier = cross_accumulated(p, t.ops(), t.edge_loop);
  for (const auto& v : ir::read_vars(b)) {
    if (barrier.count(v)) return false;
  }
  return true;
}

namespace {

class Lowerer {
 public:
  Lowerer(const ir::Program& p, const LowerOptions& o)
      : canonical_(ir::canonicalize_loops(p)), options_(o) {
    options_.gemm.validate();
  }

  KernelPlan run() {
    plan_.options = options_;
    gemm_pass();
    plan_.program = ir::fuse_loops(canonical_);
    sites_ = ir::collect_sites(plan_.program);
    deps_ = ir::dependences(sites_);
    traversal_pass();
    fallback_pass();
    schedule();
    mark_internal();
    return std::move(plan_);
  }

 private:
  bool in_flat_scope(const ir::OpSite& s, const ir::Program& p) const {
    if (!s.in_scope) return false;
    const ir::Stmt& top = p.body[static_cast<std::size_t>(s.top_scope)];
    return std::none_of(top.body.begin(), top.body.end(),
                        [](const ir::Stmt& st) { return st.is_scope; });
  }

  std::vector<int> readers_of(const ir::Program& p, const std::string& var) const {
    std::vector<int> out;
    for (const ir::OpCall* op : p.ops()) {
      const auto r = ir::read_vars(*op);
      if (std::find(r.begin(), r.end(), var) != r.end()) out.push_back(op->id);
    }
    return out;
  }

  void gemm_pass() {
    const auto sites = ir::collect_sites(canonical_);
    for (const auto& s : sites) {
      if (!in_flat_scope(s, canonical_)) continue;
      if (preference_of(*s.op) != Preference::kGemm) continue;
      const Layout layout = intra::materializes_compact(canonical_, *s.op, options_.layout)
                                ? Layout::kCompact
                                : Layout::kVanilla;
      intra::GemmInstance g = intra::specialize_gemm(
          canonical_, *s.op, layout, options_.adjacency, options_.gemm, plan_.layouts);
      if (layout == Layout::kCompact) plan_.layouts[g.y] = Layout::kCompact;
      owner_[s.op->id] = {StepKind::kGemm, static_cast<int>(plan_.gemms.size())};
      plan_.gemms.push_back(std::move(g));
    }
    for (auto& g : plan_.gemms) {
      if (g.outer || canonical_.decl(g.y).output) continue;
      const auto readers = readers_of(canonical_, g.y);
      if (readers.size() != 1 || owner_.count(readers.front())) continue;
      const ir::OpCall& consumer = canonical_.op(readers.front());
      if (!can_fuse_gemm(canonical_, g, consumer)) continue;
      intra::fuse_scalar_consumer(canonical_, g, consumer, plan_.layouts);
      owner_[consumer.id] = owner_[g.ops.front()];
    }
  }

  // Group id per site: instances first, then traversal candidates, then
  // singleton groups for everything else.
  std::vector<int> grouping(int extra_op, int extra_group, int* count) const {
    std::vector<int> group(sites_.size(), -1);
    const int g_count = static_cast<int>(plan_.gemms.size());
    int next = g_count + static_cast<int>(trav_ops_.size());
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      const int id = sites_[i].op->id;
      auto it = owner_.find(id);
      if (it != owner_.end()) {
        group[i] = it->second.kind == StepKind::kGemm ? it->second.index
                                                      : g_count + it->second.index;
      } else if (id == extra_op) {
        group[i] = g_count + extra_group;
      } else {
        group[i] = next++;
      }
    }
    *count = next;
    return group;
  }

  void traversal_pass() {
    const ir::Program& p = plan_.program;
    for (std::size_t top = 0; top < p.body.size(); ++top) {
      const ir::Stmt& scope = p.body[top];
      if (!scope.is_scope) continue;
      if (std::any_of(scope.body.begin(), scope.body.end(),
                      [](const ir::Stmt& s) { return s.is_scope; })) {
        continue;
      }
      int current = -1;
      for (const ir::Stmt& st : scope.body) {
        const ir::OpCall& op = st.op;
        if (owner_.count(op.id)) continue;
        if (preference_of(op) != Preference::kTraversal) continue;
        if (current >= 0 && fusable(current, op)) {
          trav_ops_[static_cast<std::size_t>(current)].push_back(op.id);
          owner_[op.id] = {StepKind::kTraversal, current};
          continue;
        }
        current = static_cast<int>(trav_ops_.size());
        trav_ops_.push_back({op.id});
        owner_[op.id] = {StepKind::kTraversal, current};
      }
    }
  }

  bool fusable(int current, const ir::OpCall& op) const {
    intra::TraversalInstance probe;
    for (int id : trav_ops_[static_cast<std::size_t>(current)]) {
      probe.stmts.push_back({id, intra::kFeatureLevel, {}});
    }
    const auto sites = find_site(sites_, probe.stmts.front().op);
    probe.edge_loop = ir::iterates_edges(sites->kind);
    if (!can_fuse_traversal(plan_.program, probe, op)) return false;
    int count = 0;
    const auto group = grouping(op.id, current, &count);
    return !ir::quotient_has_cycle(deps_, group, count);
  }

  void fallback_pass() {
    const ir::Program& p = plan_.program;
    std::map<int, int> scope_group;  // non-canonical top scope -> group
    for (const auto& s : sites_) {
      const int id = s.op->id;
      if (owner_.count(id)) continue;
      std::string reason;
      int group = -1;
      if (!s.in_scope) {
        reason = "weight-weight operator runs once outside graph loops";
      } else if (!in_flat_scope(s, p)) {
        reason = "node scope with a nested loop could not be canonicalized";
        auto it = scope_group.find(s.top_scope);
        if (it != scope_group.end()) group = it->second;
      } else if (preference_of(*s.op) == Preference::kFallback) {
        reason = "manipulation op " + std::string(ir::to_string(s.op->kind)) +
                 " has no kernel template";
      } else {
        reason = "not claimed by any template";
      }
      if (group < 0) {
        group = static_cast<int>(plan_.fallback_groups.size());
        plan_.fallback_groups.push_back({});
        if (s.in_scope && !in_flat_scope(s, p)) scope_group[s.top_scope] = group;
      }
      plan_.fallback_groups[static_cast<std::size_t>(group)].push_back(id);
      plan_.fallback.push_back({id, reason});
      owner_[id] = {StepKind::kFallback, group};
    }
  }

  void schedule() {
    const int g_count = static_cast<int>(plan_.gemms.size());
    const int t_count = static_cast<int>(trav_ops_.size());
    std::vector<int> group(sites_.size());
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      const Step& o = owner_.at(sites_[i].op->id);
      group[i] = o.kind == StepKind::kGemm        ? o.index
                 : o.kind == StepKind::kTraversal ? g_count + o.index
                                                  : g_count + t_count + o.index;
    }
    const int count = g_count + t_count + static_cast<int>(plan_.fallback_groups.size());
    const auto order = ir::order_groups(deps_, group, count);

    std::vector<intra::GemmInstance> gemms;
    std::vector<intra::TraversalInstance> travs;
    int kid = options_.first_kid;
    for (int g : order) {
      if (g < g_count) {
        intra::GemmInstance inst = plan_.gemms[static_cast<std::size_t>(g)];
        inst.kid = kid++;
        plan_.schedule.push_back({StepKind::kGemm, static_cast<int>(gemms.size())});
        gemms.push_back(std::move(inst));
      } else if (g < g_count + t_count) {
        auto ops = trav_ops_[static_cast<std::size_t>(g - g_count)];
        intra::TraversalInstance inst = intra::specialize_traversal(
            plan_.program, ops, options_.layout, options_.adjacency, plan_.layouts,
            options_.hoisting, kid++);
        inst.partial_aggregation = options_.partial_aggregation;
        plan_.schedule.push_back({StepKind::kTraversal, static_cast<int>(travs.size())});
        travs.push_back(std::move(inst));
      } else {
        plan_.schedule.push_back({StepKind::kFallback, g - g_count - t_count});
      }
    }
    plan_.gemms = std::move(gemms);
    plan_.traversals = std::move(travs);
  }

  void mark_internal() {
    const ir::Program& p = plan_.program;
    std::map<std::string, std::set<std::string>> readers;  // var -> steps
    std::map<int, std::string> step_of;
    for (const Step& s : plan_.schedule) {
      for (int id : plan_.step_ops(s)) step_of[id] = plan_.step_name(s);
    }
    for (const ir::OpCall* op : p.ops()) {
      for (const auto& v : ir::read_vars(*op)) readers[v].insert(step_of[op->id]);
    }
    auto internal_to = [&](const std::string& var, const std::string& step) {
      const ir::TensorDecl& d = p.decl(var);
      if (d.input || d.output) return false;
      const auto& r = readers[var];
      return r.size() == 1 && *r.begin() == step;
    };
    for (auto& g : plan_.gemms) {
      const std::string name = "gemm_" + std::to_string(g.kid);
      std::erase_if(g.internal, [&](const std::string& v) { return !internal_to(v, name); });
    }
    for (auto& t : plan_.traversals) {
      const std::string name = "traversal_" + std::to_string(t.kid);
      std::set<std::string> written;
      for (int id : t.ops()) written.insert(p.op(id).result.var);
      for (const auto& v : written) {
        if (internal_to(v, name)) t.internal.push_back(v);
      }
    }
  }

  ir::Program canonical_;
  LowerOptions options_;
  KernelPlan plan_;
  std::vector<ir::OpSite> sites_;
  ir::Dependences deps_;
  std::map<int, Step> owner_;
  std::vector<std::vector<int>> trav_ops_;
};

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string ref_text(const intra::RowRef& r) {
  if (r.map == intra::RowMap::kConst) return fmt_double(r.value);
  const auto g = intra::gather_array(r.map);
  return g.empty() ? r.var : r.var + "[" + std::string(g) + "]";
}

std::string list(const std::vector<std::string>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += v[i];
  }
  return s + "]";
}

}  // namespace

KernelPlan lower(const ir::Program& p, const LowerOptions& options) {
  return Lowerer(p, options).run();
}

std::string to_text(const KernelPlan& plan) {
  std::ostringstream os;
  const auto& o = plan.options;
  os << "plan " << plan.program.name << " layout=" << to_string(o.layout)
     << " adjacency=" << to_string(o.adjacency) << " tile=" << o.gemm.tile_width
     << " coarsen=" << o.gemm.coarsening << '\n';
  for (const Step& s : plan.schedule) {
    std::vector<std::string> ops;
    for (int id : plan.step_ops(s)) ops.push_back(std::to_string(id));
    os << plan.step_name(s) << " ops=" << list(ops);
    if (s.kind == StepKind::kGemm) {
      const auto& g = plan.gemms[static_cast<std::size_t>(s.index)];
      os << " form=" << (g.outer ? "outer" : "linear")
         << " rows=" << intra::to_string(g.rows) << " x=" << ref_text(g.x);
      if (g.outer) os << " b=" << ref_text(g.b);
      os << " w=" << g.w << (g.w_transposed ? "^T" : "")
         << " types=" << intra::to_string(g.type_mode);
      if (!g.segment_ptr.empty()) os << '(' << g.segment_ptr << ')';
      if (!g.row_type.empty()) os << '(' << g.row_type << ')';
      os << " y=" << g.y << " y_layout=" << to_string(g.y_layout);
      if (g.per_row_scalar) os << " scalar=" << ref_text(*g.per_row_scalar);
      if (g.atomic_output) os << " atomic";
      os << " internal=" << list(g.internal);
    } else if (s.kind == StepKind::kTraversal) {
      const auto& t = plan.traversals[static_cast<std::size_t>(s.index)];
      std::vector<std::string> levels;
      for (const auto& st : t.stmts) {
        levels.push_back(std::to_string(st.op) + "@" + std::to_string(st.level));
      }
      os << " loop=" << ir::to_string(t.scope) << " levels=" << list(levels)
         << " layout=" << to_string(t.layout)
         << " adjacency=" << to_string(t.adjacency)
         << " partial_aggregation=" << (t.partial_aggregation ? "on" : "off")
         << " internal=" << list(t.internal);
    } else {
      std::string reason;
      for (const auto& f : plan.fallback) {
        if (f.op == plan.step_ops(s).front()) reason = f.reason;
      }
      os << " reason=\"" << reason << '"';
    }
    os << '\n';
  }
  std::vector<std::string> compact;
  for (const auto& [var, layout] : plan.layouts) {
    if (layout == Layout::kCompact) compact.push_back(var);
  }
  os << "compact=" << list(compact) << '\n';
  return os.str();
}

}  // namespace rgnnc::lowering
