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

#include "rgnnc/flops.h"

#include <algorithm>
#include <map>
#include <set>

#include "rgnnc/analysis.h"

namespace rgnnc::ir {

const OpFlops* FlopReport::find(int op) const {
  for (const auto& f : ops) {
    if (f.op == op) return &f;
  }
  return nullptr;
}

namespace {

Index type_count(const GraphStats& stats, WeightIndex index) {
  switch (index) {
    case WeightIndex::kEdgeType: return stats.edge_type_count;
    case WeightIndex::kNodeType: return stats.node_type_count;
    case WeightIndex::kSingle: return 1;
  }
  return 1;
}

}  // namespace

FlopReport count_flops(const Program& p, const GraphStats& stats, Layout layout) {
  FlopReport r;
  for (const OpSite& site : collect_sites(p)) {
    const OpCall& op = *site.op;
    OpFlops f;
    f.op = op.id;
    f.result = op.result.var;
    f.kind = op.kind;
    if (!site.in_scope) {
      f.rows = type_count(stats, p.decl(op.args[0].var).weight_index);
    } else if (iterates_edges(site.kind)) {
      f.rows = intra::materializes_compact(p, op, layout) ? stats.unique_count
                                                          : stats.edge_count;
    } else {
      f.rows = stats.node_count;
    }
    const Index n = f.rows;
    const Index w = op.kind == OpKind::kOuterProd || op.kind == OpKind::kWeightProduct
                        ? 0
                        : p.decl(op.result.var).cols;
    switch (op.kind) {
      case OpKind::kTypedLinear: {
        const Index din = operand_width(p, op.args[0]);
        f.multiplies = f.adds = n * din * w;
        break;
      }
      case OpKind::kOuterProd:
        f.multiplies = f.adds =
            n * operand_width(p, op.args[0]) * operand_width(p, op.args[1]);
        break;
      case OpKind::kDotProd:
        f.multiplies = f.adds = n * operand_width(p, op.args[0]);
        break;
      case OpKind::kUnary:
        f.other = n * w;
        break;
      case OpKind::kBinary:
        switch (op.binary) {
          case BinaryFn::kAdd:
          case BinaryFn::kSub: f.adds = n * w; break;
          case BinaryFn::kMul: f.multiplies = n * w; break;
          case BinaryFn::kDiv: f.other = n * w; break;
        }
        break;
      case OpKind::kAccumulateSum:
        f.adds = n * w;
        break;
      case OpKind::kReshape:
      case OpKind::kConcat:
        break;
      case OpKind::kWeightProduct: {
        const TensorDecl& m = p.decl(op.args[0].var);
        f.multiplies = f.adds = n * m.weight_rows * m.cols;
        break;
      }
    }
    r.multiplies += f.multiplies;
    r.adds += f.adds;
    r.other += f.other;
    r.ops.push_back(std::move(f));
  }
  return r;
}

FlopSlice variable_cost(const Program& p, const FlopReport& report,
                        std::string_view var) {
  const auto ops = p.ops();
  std::map<std::string, std::vector<int>> writers, readers;
  for (const OpCall* op : ops) {
    writers[op->result.var].push_back(op->id);
    for (const auto& v : read_vars(*op)) readers[v].push_back(op->id);
  }
  std::set<int> slice;
  for (int id : writers[std::string(var)]) slice.insert(id);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const OpCall* op : ops) {
      if (!slice.count(op->id)) continue;
      for (const auto& v : read_vars(*op)) {
        if (v == var || p.decl(v).output || !writers.count(v)) continue;
        const auto& rd = readers[v];
        const bool exclusive = std::all_of(rd.begin(), rd.end(),
                                           [&](int id) { return slice.count(id) > 0; });
        if (!exclusive) continue;
        for (int w : writers[v]) changed |= slice.insert(w).second;
      }
    }
  }
  FlopSlice s;
  for (int id : slice) {
    s.ops.push_back(id);
    if (const OpFlops* f = report.find(id)) {
      s.multiplies += f->multiplies;
      s.adds += f->adds;
      s.other += f->other;
    }
  }
  return s;
}

}  // namespace rgnnc::ir
