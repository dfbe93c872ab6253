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

#include "rgnnc/intra.h"

#include <algorithm>

#include "rgnnc/analysis.h"

namespace rgnnc {

std::string_view to_string(Layout l) {
  return l == Layout::kCompact ? "compact" : "vanilla";
}

std::string_view to_string(Adjacency a) {
  return a == Adjacency::kCsr ? "csr" : "coo";
}

}  // namespace rgnnc

namespace rgnnc::intra {

using ir::Access;
using ir::OpKind;
using ir::TypeSel;

void GemmSchedule::validate() const {
  if (tile_width <= 0) throw Error("tile width must be positive");
  if (coarsening != 1 && coarsening != 2 && coarsening != 4) {
    throw Error("coarsening factor must be 1, 2 or 4");
  }
  if (tile_width % coarsening != 0) {
    throw Error("tile width must be a multiple of the coarsening factor");
  }
  if (register_limit_hint && *register_limit_hint <= 0) {
    throw Error("register limit hint must be positive");
  }
}

std::string_view gather_array(RowMap m) {
  switch (m) {
    case RowMap::kEdgeSrc: return "row_idx";
    case RowMap::kEdgeDst: return "col_idx";
    case RowMap::kUniqueSrc: return "unique_row_idx";
    case RowMap::kPairOfEdge: return "pair_of_edge";
    default: return "";
  }
}

std::string to_string(TypeMode m) {
  switch (m) {
    case TypeMode::kSingle: return "single";
    case TypeMode::kSegments: return "segments";
    case TypeMode::kPerRow: return "per_row";
  }
  return "?";
}

std::string to_string(RowSpace r) {
  switch (r) {
    case RowSpace::kEdges: return "edges";
    case RowSpace::kUniquePairs: return "unique_pairs";
    case RowSpace::kNodes: return "nodes";
  }
  return "?";
}

std::vector<int> TraversalInstance::ops() const {
  std::vector<int> out;
  for (const auto& s : stmts) out.push_back(s.op);
  return out;
}

// ---------------------------------------------------------------------------
// Access schemes

AccessScheme make_access_scheme(const HeteroGraph& g, const AdjacencyCSR* csr,
                                const CompactIndex* ci, Adjacency adjacency,
                                Layout layout) {
  AccessScheme s;
  s.adjacency = adjacency;
  s.layout = layout;
  s.size = g.num_edges();
  if (adjacency == Adjacency::kCoo) {
    s.edge_id = [](Index i) { return i; };
    s.etype = [&g](Index i) { return g.etype[i]; };
    s.src = [&g](Index i) { return g.src[i]; };
    s.dst = [&g](Index i) { return g.dst[i]; };
  } else {
    if (!csr) throw Error("CSR access scheme without a CSR adjacency");
    s.edge_id = [csr](Index i) { return csr->edge_id[i]; };
    s.etype = [csr](Index i) { return csr->etype_of_entry[i]; };
    s.src = [csr](Index i) { return csr->col_idx[i]; };
    s.dst = [csr](Index i) {
      const auto it = std::upper_bound(csr->row_ptr.begin(), csr->row_ptr.end(), i);
      return static_cast<Index>(it - csr->row_ptr.begin()) - 1;
    };
  }
  if (layout == Layout::kCompact) {
    if (!ci) throw Error("compact access scheme without a compact index");
    s.row_of_edge = [ci](Index e) { return ci->pair_of_edge[e]; };
  } else {
    s.row_of_edge = [](Index e) { return e; };
  }
  return s;
}

EdgeTriple resolve_access(const AccessScheme& scheme, Index index) {
  if (index < 0 || index >= scheme.size) {
    throw Error("edge index " + std::to_string(index) + " out of range [0, " +
                std::to_string(scheme.size) + ")");
  }
  return {scheme.etype(index), scheme.src(index), scheme.dst(index)};
}

// ---------------------------------------------------------------------------
// Applicability

namespace {

const ir::OpSite& site_of(const std::vector<ir::OpSite>& sites, int id) {
  for (const auto& s : sites) {
    if (s.op->id == id) return s;
  }
  throw Error("op " + std::to_string(id) + " not in program");
}

}  // namespace

bool compact_applicable(const ir::Program& p, const ir::OpCall& op) {
  if (op.kind != OpKind::kTypedLinear) return false;
  const auto sites = ir::collect_sites(p);
  const ir::OpSite& site = site_of(sites, op.id);
  if (!site.in_scope || site.nested || site.kind != ir::ScopeKind::kEdges) {
    return false;
  }
  const ir::Operand& x = op.args[0];
  const ir::Operand& w = op.args[1];
  if (x.access != Access::kSrc) return false;
  if (w.sel != TypeSel::kEdgeType && w.sel != TypeSel::kSrcNodeType &&
      w.sel != TypeSel::kNone) {
    return false;
  }
  return op.result.access == Access::kEdge;
}

bool materializes_compact(const ir::Program& p, const ir::OpCall& op,
                          Layout layout) {
  return layout == Layout::kCompact && compact_applicable(p, op) &&
         !p.decl(op.result.var).output;
}

RowMap row_map_of(const ir::Operand& o, bool edge_loop, const VarLayouts& layouts) {
  switch (o.access) {
    case Access::kConst: return RowMap::kConst;
    case Access::kSrc: return RowMap::kEdgeSrc;
    case Access::kDst: return RowMap::kEdgeDst;
    case Access::kEdge: {
      auto it = layouts.find(o.var);
      if (it != layouts.end() && it->second == Layout::kCompact) {
        return RowMap::kPairOfEdge;
      }
      return RowMap::kIdentity;
    }
    case Access::kNode:
    case Access::kWeight:
      break;
  }
  (void)edge_loop;
  return RowMap::kIdentity;
}

namespace {

RowRef row_ref(const ir::Program& p, const ir::Operand& o, bool edge_loop,
               const VarLayouts& layouts) {
  RowRef r;
  r.map = row_map_of(o, edge_loop, layouts);
  if (o.access == Access::kConst) {
    r.value = o.value;
    r.cols = 1;
  } else {
    r.var = o.var;
    r.cols = p.decl(o.var).cols;
  }
  return r;
}

void set_type_mode(GemmInstance& g, TypeSel sel) {
  const bool pairs = g.rows == RowSpace::kUniquePairs;
  switch (sel) {
    case TypeSel::kNone:
      g.type_mode = TypeMode::kSingle;
      break;
    case TypeSel::kEdgeType:
      g.type_mode = TypeMode::kSegments;
      g.segment_ptr = pairs ? "unique_etype_ptr" : "etype_ptr";
      break;
    case TypeSel::kSrcNodeType:
      g.type_mode = TypeMode::kPerRow;
      g.row_type = pairs ? "ntype[unique_row_idx[row]]" : "ntype[row_idx[row]]";
      break;
    case TypeSel::kDstNodeType:
      g.type_mode = TypeMode::kPerRow;
      g.row_type = "ntype[col_idx[row]]";
      break;
    case TypeSel::kNodeType:
      g.type_mode = TypeMode::kSegments;
      g.segment_ptr = "ntype_ptr";
      break;
  }
}

}  // namespace

GemmInstance specialize_gemm(const ir::Program& p, const ir::OpCall& op,
                             Layout layout, Adjacency adjacency,
                             const GemmSchedule& schedule,
                             const VarLayouts& layouts, int kid) {
  (void)adjacency;  // GEMMs read the type-sorted COO arrays
  schedule.validate();
  if (op.kind != OpKind::kTypedLinear && op.kind != OpKind::kOuterProd) {
    throw Error("op " + std::to_string(op.id) + " is not GEMM-eligible");
  }
  const auto sites = ir::collect_sites(p);
  const ir::OpSite& site = site_of(sites, op.id);
  if (!site.in_scope || site.nested) {
    throw Error("op " + std::to_string(op.id) + " is not in a flat loop");
  }
  const bool edge_loop = ir::iterates_edges(site.kind);
  GemmInstance g;
  g.kid = kid;
  g.ops = {op.id};
  g.schedule = schedule;
  g.scope = site.kind;

  if (op.kind == OpKind::kOuterProd) {
    if (layout == Layout::kCompact) {
      throw Error("compact inapplicable: op " + std::to_string(op.id) +
                  " accumulates into a weight");
    }
    g.outer = true;
    g.rows = edge_loop ? RowSpace::kEdges : RowSpace::kNodes;
    g.x = row_ref(p, op.args[0], edge_loop, layouts);
    g.b = row_ref(p, op.args[1], edge_loop, layouts);
    g.w = op.result.var;
    g.sel = op.result.sel;
    g.k = g.x.cols;
    g.n = g.b.cols;
    g.y = op.result.var;
    g.atomic_output = true;
    set_type_mode(g, g.sel);
    return g;
  }

  const bool compact = layout == Layout::kCompact;
  if (compact && !compact_applicable(p, op)) {
    throw Error("compact inapplicable: op " + std::to_string(op.id) +
                " does not depend only on source data and edge type");
  }
  const ir::Operand& x = op.args[0];
  const ir::Operand& w = op.args[1];
  g.rows = compact ? RowSpace::kUniquePairs
                   : (edge_loop ? RowSpace::kEdges : RowSpace::kNodes);
  g.x = row_ref(p, x, edge_loop, layouts);
  if (compact) g.x.map = RowMap::kUniqueSrc;
  g.w = w.var;
  g.sel = w.sel;
  g.w_transposed = w.transposed;
  g.k = g.x.cols;
  g.n = p.decl(op.result.var).cols;
  g.y = op.result.var;
  g.y_layout = compact ? Layout::kCompact : Layout::kVanilla;
  set_type_mode(g, w.sel);
  return g;
}

void fuse_scalar_consumer(const ir::Program& p, GemmInstance& g,
                          const ir::OpCall& consumer, const VarLayouts& layouts) {
  const bool edge_loop = ir::iterates_edges(g.scope);
  const ir::Operand& a = consumer.args[0];
  const ir::Operand& b = consumer.args[1];
  const ir::Operand& scalar = a.var == g.y && a.is_data() ? b : a;
  g.per_row_scalar = row_ref(p, scalar, edge_loop, layouts);
  g.ops.push_back(consumer.id);
  g.internal.push_back(g.y);
  g.y = consumer.result.var;
}

// ---------------------------------------------------------------------------
// Traversal

TraversalInstance specialize_traversal(const ir::Program& p,
                                       const std::vector<int>& ops,
                                       Layout layout, Adjacency adjacency,
                                       const VarLayouts& layouts, bool hoisting,
                                       int kid) {
  if (ops.empty()) throw Error("traversal instance without statements");
  const auto sites = ir::collect_sites(p);
  const ir::OpSite& first = site_of(sites, ops.front());
  TraversalInstance t;
  t.kid = kid;
  t.scope = first.kind;
  t.edge_loop = ir::iterates_edges(first.kind);
  t.adjacency = adjacency;
  t.hoisting = hoisting;
  bool reads_compact = false;
  for (int id : ops) {
    const ir::OpSite& s = site_of(sites, id);
    if (!s.in_scope || s.nested || s.top_scope != first.top_scope) {
      throw Error("traversal statements must share one flat loop");
    }
    const ir::OpCall& op = *s.op;
    TraversalStmt st;
    st.op = id;
    const Index width = p.decl(op.result.var).cols;
    const bool elementwise = op.kind == OpKind::kUnary ||
                             op.kind == OpKind::kBinary ||
                             op.kind == OpKind::kAccumulateSum ||
                             op.kind == OpKind::kReshape ||
                             op.kind == OpKind::kConcat;
    st.level = hoisting ? (elementwise && width > 1 ? kFeatureLevel : kRowLevel)
                        : kFeatureLevel;
    for (const ir::Operand& a : op.args) {
      int level = kFeatureLevel;
      if (hoisting) {
        if (a.access == Access::kConst ||
            (a.access == Access::kWeight && a.sel == TypeSel::kNone)) {
          level = kKernelLevel;
        } else if (a.access == Access::kWeight) {
          level = kRowLevel;
        } else {
          level = p.decl(a.var).cols > 1 ? kFeatureLevel : kRowLevel;
        }
      }
      st.load_levels.push_back(level);
      RowRef ref = a.access == Access::kWeight ? RowRef{a.var, 0.0, RowMap::kIdentity,
                                                        p.decl(a.var).cols}
                                               : row_ref(p, a, t.edge_loop, layouts);
      if (ref.map == RowMap::kPairOfEdge) reads_compact = true;
      t.operand_maps.push_back(std::move(ref));
    }
    t.stmts.push_back(std::move(st));
  }
  t.layout = layout == Layout::kCompact && reads_compact ? Layout::kCompact
                                                         : Layout::kVanilla;
  const char* outer = t.edge_loop ? "edges" : "nodes";
  t.work_assignment = std::string("outer loop over ") + outer +
                      " -> thread blocks; head and feature loops -> threads";
  return t;
}

}  // namespace rgnnc::intra
