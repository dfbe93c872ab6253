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

// Intra-operator IR: GEMM and traversal kernel instances.
//
// A GEMM instance computes Y[S] = X[G] x W[T]: rows of X are gathered
// through G, each row picks the weight slice of its type T, and results are
// stored through S. A traversal instance is a loop over edges (or nodes)
// with a fused statement list; each statement is placed at the outermost
// loop level that can hold it.

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rgnnc/graph.h"
#include "rgnnc/ir.h"

namespace rgnnc {

enum class Layout { kVanilla, kCompact };
enum class Adjacency { kCoo, kCsr };

std::string_view to_string(Layout l);
std::string_view to_string(Adjacency a);

// Layout chosen for each materialized variable; absent means vanilla.
using VarLayouts = std::map<std::string, Layout>;

}  // namespace rgnnc

namespace rgnnc::intra {

struct GemmSchedule {
  int tile_width = 16;
  int coarsening = 1;  // 1, 2 or 4
  std::optional<int> register_limit_hint;

  void validate() const;  // throws Error
  bool operator==(const GemmSchedule&) const = default;
};

// How an instance finds the storage row of a tensor from its iteration row.
enum class RowMap {
  kIdentity,
  kEdgeSrc,     // row_idx[e]
  kEdgeDst,     // col_idx[e]
  kUniqueSrc,   // unique_row_idx[u]
  kPairOfEdge,  // pair_of_edge[e]: edgewise tensor stored compact
  kConst,       // literal operand
};

// Array name used in emitted code; empty for identity and literals.
std::string_view gather_array(RowMap m);

enum class RowSpace { kEdges, kUniquePairs, kNodes };

enum class TypeMode {
  kSingle,    // one weight slice
  kSegments,  // rows are grouped by type; offsets in `segment_ptr`
  kPerRow,    // type looked up per row through `row_type`
};

struct RowRef {
  std::string var;  // empty for literals
  double value = 0.0;
  RowMap map = RowMap::kIdentity;
  Index cols = 1;
  bool operator==(const RowRef&) const = default;
};

struct GemmInstance {
  int kid = 0;
  std::vector<int> ops;      // primary op, then a fused consumer if any
  bool outer = false;        // weight-gradient form: W[T] += X^T x B
  RowSpace rows = RowSpace::kEdges;
  ir::ScopeKind scope = ir::ScopeKind::kEdges;

  RowRef x;                  // gathered input, G = gather_array(x.map)
  RowRef b;                  // second row operand (outer form only)
  std::string w;             // weight (linear) or weight target (outer)
  ir::TypeSel sel = ir::TypeSel::kNone;
  bool w_transposed = false;
  Index k = 0;               // reduction width (linear)
  Index n = 0;               // output width

  TypeMode type_mode = TypeMode::kSingle;
  std::string segment_ptr;   // etype_ptr / unique_etype_ptr / ntype_ptr
  std::string row_type;      // per-row type expression

  std::optional<RowRef> per_row_scalar;
  std::string y;             // output variable
  Layout y_layout = Layout::kVanilla;
  std::string scatter;       // S; empty means Y rows follow iteration rows
  bool atomic_output = false;
  std::vector<std::string> internal;

  GemmSchedule schedule;
};

// Loop levels of a traversal instance.
enum Level : int { kKernelLevel = 0, kRowLevel = 1, kFeatureLevel = 2 };

struct TraversalStmt {
  int op = -1;
  int level = kFeatureLevel;
  std::vector<int> load_levels;  // one per operand
};

struct TraversalInstance {
  int kid = 0;
  ir::ScopeKind scope = ir::ScopeKind::kEdges;
  bool edge_loop = true;
  std::vector<TraversalStmt> stmts;
  std::vector<RowRef> operand_maps;  // flattened, parallel to load_levels
  Adjacency adjacency = Adjacency::kCoo;
  Layout layout = Layout::kVanilla;
  bool partial_aggregation = true;
  bool hoisting = true;
  std::vector<std::string> internal;
  std::string work_assignment;

  std::vector<int> ops() const;
};

// Resolution of GetEType / GetSrcId / GetDstId for iteration index i, plus
// the row of an edgewise tensor holding edge e.
struct AccessScheme {
  Adjacency adjacency = Adjacency::kCoo;
  Layout layout = Layout::kVanilla;
  Index size = 0;
  std::function<Index(Index)> edge_id;
  std::function<Index(Index)> etype;
  std::function<Index(Index)> src;
  std::function<Index(Index)> dst;
  std::function<Index(Index)> row_of_edge;
};

struct EdgeTriple {
  Index etype = 0;
  Index src = 0;
  Index dst = 0;
  bool operator==(const EdgeTriple&) const = default;
};

// The graph (and csr / compact index when used) must outlive the scheme.
AccessScheme make_access_scheme(const HeteroGraph& g, const AdjacencyCSR* csr,
                                const CompactIndex* ci, Adjacency adjacency,
                                Layout layout);

EdgeTriple resolve_access(const AccessScheme& scheme, Index index);

// True iff `op` is an edgewise typed linear reading only e.src data with a
// weight selected by edge type, source node type, or nothing.
bool compact_applicable(const ir::Program& p, const ir::OpCall& op);

// Whether `op`'s result is stored compact under `layout`. Declared outputs
// always stay vanilla.
bool materializes_compact(const ir::Program& p, const ir::OpCall& op,
                          Layout layout);

RowMap row_map_of(const ir::Operand& o, bool edge_loop, const VarLayouts& layouts);

GemmInstance specialize_gemm(const ir::Program& p, const ir::OpCall& op,
                             Layout layout, Adjacency adjacency,
                             const GemmSchedule& schedule,
                             const VarLayouts& layouts = {}, int kid = 0);

// Fuses a per-row scalar multiply consumer into a vanilla GEMM instance.
void fuse_scalar_consumer(const ir::Program& p, GemmInstance& g,
                          const ir::OpCall& consumer, const VarLayouts& layouts);

TraversalInstance specialize_traversal(const ir::Program& p,
                                       const std::vector<int>& ops,
                                       Layout layout, Adjacency adjacency,
                                       const VarLayouts& layouts = {},
                                       bool hoisting = true, int kid = 0);

std::string to_string(TypeMode m);
std::string to_string(RowSpace r);

}  // namespace rgnnc::intra
