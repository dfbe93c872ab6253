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

#include "rgnnc/kernels.h"

#include <algorithm>
#include <map>

#include "exec.h"
#include "rgnnc/analysis.h"
#include "rgnnc/interp.h"

namespace rgnnc::kernels {

namespace {

struct WorkItem {
  Index slice;
  Index begin;
  Index end;
};

std::vector<WorkItem> tile_rows(const SegmentGemm& g, Index tile) {
  std::vector<WorkItem> items;
  auto add = [&](Index slice, Index begin, Index end) {
    for (Index r = begin; r < end; r += tile) {
      items.push_back({slice, r, std::min(end, r + tile)});
    }
  };
  if (g.segment_ptr) {
    for (Index t = 0; t < g.slices; ++t) add(t, g.segment_ptr[t], g.segment_ptr[t + 1]);
  } else {
    add(-1, 0, g.rows);
  }
  return items;
}

inline void gemm_row(const SegmentGemm& g, Index r, const double* w, Index c0,
                     Index c1) {
  const double* x = g.x.at(r);
  double* y = g.y + r * g.n;
  const double s = g.scale_base ? *g.scale.at(r) : 1.0;
  for (Index c = c0; c < c1; ++c) {
    double acc = 0.0;
    for (Index i = 0; i < g.k; ++i) acc += x[i] * w[i * g.n + c];
    y[c] = g.scale_base ? acc * s : acc;
  }
}

const double* slice_of(const SegmentGemm& g, Index item_slice, Index r) {
  Index t = 0;
  if (item_slice >= 0) t = item_slice;
  else if (g.row_slice) t = g.row_slice[r];
  return g.w + t * g.k * g.n;
}

}  // namespace

void segment_gemm(const SegmentGemm& g, const intra::GemmSchedule& schedule) {
  const Index tile = std::max(1, schedule.tile_width);
  const Index coarsen = std::max(1, schedule.coarsening);
  const std::vector<WorkItem> items = tile_rows(g, tile);
  const Index count = static_cast<Index>(items.size());
#pragma omp parallel for schedule(static)
  for (Index it = 0; it < count; ++it) {
    const WorkItem& item = items[it];
    for (Index c0 = 0; c0 < g.n; c0 += tile) {
      const Index c_end = std::min(g.n, c0 + tile);
      for (Index r = item.begin; r < item.end; ++r) {
        const double* w = slice_of(g, item.slice, r);
        // One thread covers `coarsen` adjacent output columns.
        for (Index c = c0; c < c_end; c += coarsen) {
          gemm_row(g, r, w, c, std::min(c_end, c + coarsen));
        }
      }
    }
  }
}

void outer_accumulate(const OuterAccumulate& o) {
  const Index cells = o.k * o.n;
  std::vector<Index> slice_of_row(static_cast<std::size_t>(o.rows), 0);
  if (o.segment_ptr) {
    for (Index t = 0; o.segment_ptr[t] < o.rows; ++t) {
      for (Index r = o.segment_ptr[t]; r < o.segment_ptr[t + 1]; ++r) slice_of_row[r] = t;
    }
  } else if (o.row_slice) {
    std::copy(o.row_slice, o.row_slice + o.rows, slice_of_row.begin());
  }
#pragma omp parallel for schedule(static)
  for (Index cell = 0; cell < cells; ++cell) {
    const Index i = cell / o.n;
    const Index j = cell % o.n;
    for (Index r = 0; r < o.rows; ++r) {
      o.w[slice_of_row[r] * cells + cell] += o.a.at(r)[i] * o.b.at(r)[j];
    }
  }
}

namespace reference {

void segment_gemm(const SegmentGemm& g) {
  for (Index r = 0; r < g.rows; ++r) {
    Index t = 0;
    if (g.segment_ptr) {
      while (g.segment_ptr[t + 1] <= r) ++t;
    } else if (g.row_slice) {
      t = g.row_slice[r];
    }
    gemm_row(g, r, g.w + t * g.k * g.n, 0, g.n);
  }
}

void outer_accumulate(const OuterAccumulate& o) {
  for (Index r = 0; r < o.rows; ++r) {
    Index t = 0;
    if (o.segment_ptr) {
      while (o.segment_ptr[t + 1] <= r) ++t;
    } else if (o.row_slice) {
      t = o.row_slice[r];
    }
    double* w = o.w + t * o.k * o.n;
    const double* a = o.a.at(r);
    const double* b = o.b.at(r);
    for (Index i = 0; i < o.k; ++i) {
      for (Index j = 0; j < o.n; ++j) w[i * o.n + j] += a[i] * b[j];
    }
  }
}

}  // namespace reference

// ---------------------------------------------------------------------------
// Plan instances

namespace {

struct Arrays {
  const GraphContext& g;

  const Index* gather(intra::RowMap m) const {
    switch (m) {
      case intra::RowMap::kEdgeSrc: return g.graph.src.data();
      case intra::RowMap::kEdgeDst: return g.graph.dst.data();
      case intra::RowMap::kUniqueSrc: return g.compact->unique_row_idx.data();
      case intra::RowMap::kPairOfEdge: return g.compact->pair_of_edge.data();
      default: return nullptr;
    }
  }

  RowSource source(const intra::RowRef& ref, Environment& env) const {
    RowSource s;
    if (ref.map == intra::RowMap::kConst) {
      s.base = &ref.value;
      return s;
    }
    const Tensor& t = env.at(ref.var);
    s.base = t.data.data();
    s.stride = t.cols;
    s.gather = gather(ref.map);
    return s;
  }
};

void require_sorted(const GraphContext& g, int kid) {
  if (!g.graph.is_type_sorted()) {
    throw Error("gemm_" + std::to_string(kid) + " needs SortEdgesByType");
  }
}

// Slice of every iteration row, for per-row typed instances.
std::vector<Index> row_slices(const intra::GemmInstance& gi, const GraphContext& g) {
  const bool pairs = gi.rows == intra::RowSpace::kUniquePairs;
  const Index rows = pairs ? g.compact->unique_count
                           : (gi.rows == intra::RowSpace::kNodes ? g.num_nodes()
                                                                 : g.num_edges());
  std::vector<Index> out(static_cast<std::size_t>(rows), 0);
  for (Index r = 0; r < rows; ++r) {
    switch (gi.sel) {
      case ir::TypeSel::kSrcNodeType:
        out[r] = g.node_type[pairs ? g.compact->unique_row_idx[r] : g.graph.src[r]];
        break;
      case ir::TypeSel::kDstNodeType: out[r] = g.node_type[g.graph.dst[r]]; break;
      case ir::TypeSel::kNodeType: out[r] = g.node_type[r]; break;
      case ir::TypeSel::kEdgeType: out[r] = g.graph.etype[r]; break;
      case ir::TypeSel::kNone: break;
    }
  }
  return out;
}

const Index* segments(const intra::GemmInstance& gi, const GraphContext& g) {
  if (gi.type_mode != intra::TypeMode::kSegments) return nullptr;
  if (gi.segment_ptr == "unique_etype_ptr") return g.compact->unique_etype_ptr.data();
  if (gi.segment_ptr == "ntype_ptr") return g.node_type_ptr.data();
  return g.graph.etype_ptr.data();
}

}  // namespace

void run_gemm(const intra::GemmInstance& gi, const ir::Program& p, Environment& env) {
  const GraphContext& g = *env.graph;
  if (gi.type_mode == intra::TypeMode::kSegments && gi.segment_ptr != "ntype_ptr") {
    require_sorted(g, gi.kid);
  }
  if (gi.rows == intra::RowSpace::kUniquePairs && !g.compact) {
    throw Error("gemm_" + std::to_string(gi.kid) + " needs BuildCompactIndex");
  }
  const Arrays arrays{g};
  std::vector<Index> per_row;
  if (gi.type_mode == intra::TypeMode::kPerRow) per_row = row_slices(gi, g);

  if (gi.outer) {
    Tensor& w = env.at(gi.w);
    OuterAccumulate o;
    o.rows = gi.rows == intra::RowSpace::kNodes ? g.num_nodes() : g.num_edges();
    o.k = gi.k;
    o.n = gi.n;
    o.a = arrays.source(gi.x, env);
    o.b = arrays.source(gi.b, env);
    o.w = w.data.data();
    o.segment_ptr = segments(gi, g);
    o.row_slice = per_row.empty() ? nullptr : per_row.data();
    outer_accumulate(o);
    return;
  }

  const ir::TensorDecl& wd = p.decl(gi.w);
  const Tensor& w = gi.w_transposed ? env.at(transposed_name(gi.w)) : env.at(gi.w);
  const Index k = gi.w_transposed ? wd.cols : wd.weight_rows;
  const Index n = gi.w_transposed ? wd.weight_rows : wd.cols;
  if (k != gi.k || n != gi.n || w.slice_rows() != k || w.cols != n) {
    throw Error("gemm_" + std::to_string(gi.kid) + ": weight '" + gi.w +
                "' does not match the instance shape");
  }
  Tensor& y = env.at(gi.y);
  SegmentGemm s;
  s.rows = y.rows;
  s.k = k;
  s.n = n;
  s.x = arrays.source(gi.x, env);
  s.w = w.data.data();
  s.slices = w.slices;
  s.segment_ptr = segments(gi, g);
  s.row_slice = per_row.empty() ? nullptr : per_row.data();
  if (gi.per_row_scalar) {
    s.scale = arrays.source(*gi.per_row_scalar, env);
    s.scale_base = s.scale.base;
  }
  s.y = y.data.data();
  segment_gemm(s, gi.schedule);
}

void run_traversal(const intra::TraversalInstance& t, const ir::Program& p,
                   Environment& env) {
  const GraphContext& g = *env.graph;
  const exec::Engine engine(g);
  std::vector<exec::BoundOp> ops;
  for (const auto& st : t.stmts) ops.push_back(engine.bind(p, p.op(st.op), env));
  const Index width = exec::max_width(ops);

  if (!t.edge_loop) {
    const Index n = g.num_nodes();
#pragma omp parallel
    {
      std::vector<double> scratch(static_cast<std::size_t>(width));
#pragma omp for schedule(static)
      for (Index v = 0; v < n; ++v) {
        exec::Point pt;
        pt.node = v;
        for (const auto& b : ops) engine.apply(b, pt, scratch.data(), t.hoisting);
      }
    }
    return;
  }

  if (t.adjacency == Adjacency::kCsr && !g.csr) {
    throw Error("traversal_" + std::to_string(t.kid) + " needs CooToCsr");
  }
  const intra::AccessScheme scheme = intra::make_access_scheme(
      g.graph, g.csr ? &*g.csr : nullptr, g.compact ? &*g.compact : nullptr,
      t.adjacency, Layout::kVanilla);
  const Index e_count = g.num_edges();

  // Accumulations into rows shared between edges are staged per edge and
  // reduced afterwards in edge order.
  std::vector<int> staged_slot(ops.size(), -1);
  std::vector<std::vector<double>> staging;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const ir::OpCall& op = *ops[i].op;
    if (op.kind == ir::OpKind::kAccumulateSum &&
        (op.result.access == ir::Access::kSrc || op.result.access == ir::Access::kDst)) {
      staged_slot[i] = static_cast<int>(staging.size());
      staging.emplace_back(static_cast<std::size_t>(e_count * ops[i].width), 0.0);
    }
  }

#pragma omp parallel
  {
    std::vector<double> scratch(static_cast<std::size_t>(width));
#pragma omp for schedule(static)
    for (Index i = 0; i < e_count; ++i) {
      exec::Point pt;
      pt.edge = scheme.edge_id(i);
      pt.etype = scheme.etype(i);
      pt.src = scheme.src(i);
      pt.dst = scheme.dst(i);
      for (std::size_t k = 0; k < ops.size(); ++k) {
        if (staged_slot[k] < 0) {
          engine.apply(ops[k], pt, scratch.data(), t.hoisting);
        } else {
          double* slot = staging[staged_slot[k]].data() + pt.edge * ops[k].width;
          engine.compute(ops[k], pt, slot, t.hoisting);
        }
      }
    }
  }
  if (staging.empty()) return;

  // Group staged statements by target; each target row receives its
  // contributions in (edge, statement) order.
  std::map<std::string, std::vector<std::size_t>> by_target;
  for (std::size_t k = 0; k < ops.size(); ++k) {
    if (staged_slot[k] >= 0) by_target[ops[k].op->result.var].push_back(k);
  }
  for (const auto& [var, members] : by_target) {
    Tensor& target = env.at(var);
    const Index rows = target.rows;
    std::vector<Index> count(static_cast<std::size_t>(rows + 1), 0);
    auto target_row = [&](std::size_t k, Index e) {
      return ops[k].op->result.access == ir::Access::kSrc ? g.graph.src[e]
                                                          : g.graph.dst[e];
    };
    for (Index e = 0; e < e_count; ++e) {
      for (std::size_t k : members) ++count[target_row(k, e) + 1];
    }
    for (Index r = 0; r < rows; ++r) count[r + 1] += count[r];
    std::vector<std::pair<Index, std::size_t>> entries(static_cast<std::size_t>(count[rows]));
    std::vector<Index> fill(count.begin(), count.end() - 1);
    for (Index e = 0; e < e_count; ++e) {
      for (std::size_t k : members) entries[fill[target_row(k, e)]++] = {e, k};
    }
#pragma omp parallel for schedule(static)
    for (Index r = 0; r < rows; ++r) {
      double* out = target.row(r);
      for (Index j = count[r]; j < count[r + 1]; ++j) {
        const auto [e, k] = entries[j];
        const double* v = staging[staged_slot[k]].data() + e * ops[k].width;
        for (Index c = 0; c < ops[k].width; ++c) out[c] += v[c];
      }
    }
  }
}

}  // namespace rgnnc::kernels
