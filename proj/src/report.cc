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

#include "rgnnc/report.h"

#include <map>
#include <optional>

#include "json.hpp"
#include "rgnnc/passes.h"

namespace rgnnc::report {

using Json = nlohmann::ordered_json;

const TensorBytes* MemReport::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

namespace {

Index slices_of(const ir::TensorDecl& d, const GraphStats& s) {
  switch (d.weight_index) {
    case ir::WeightIndex::kSingle: return 1;
    case ir::WeightIndex::kEdgeType: return s.edge_type_count;
    case ir::WeightIndex::kNodeType: return s.node_type_count;
  }
  return 1;
}

}  // namespace

MemReport memreport(const ir::Program& p, const GraphStats& stats) {
  const ir::Program canon = ir::canonicalize_loops(p);
  std::map<std::string, const ir::OpCall*> def;
  for (const ir::OpCall* op : canon.ops()) {
    if (!op->accumulates()) def[op->result.var] = op;
  }
  MemReport r;
  r.edge_count = stats.edge_count;
  r.unique_count = stats.unique_count;
  for (const auto& d : canon.decls) {
    TensorBytes t;
    t.name = d.name;
    t.role = d.role;
    t.cols = d.cols;
    switch (d.role) {
      case ir::Role::kNode:
        t.vanilla_rows = t.compact_rows = stats.node_count;
        break;
      case ir::Role::kEdge: {
        t.vanilla_rows = stats.edge_count;
        auto it = def.find(d.name);
        t.compactable = it != def.end() &&
                        intra::materializes_compact(canon, *it->second, Layout::kCompact);
        t.compact_rows = t.compactable ? stats.unique_count : stats.edge_count;
        break;
      }
      case ir::Role::kWeight:
        t.vanilla_rows = t.compact_rows = slices_of(d, stats) * d.weight_rows;
        break;
    }
    r.vanilla_total += t.vanilla_bytes();
    r.compact_total += t.compact_bytes();
    if (t.compactable) {
      r.edgewise_vanilla += t.vanilla_bytes();
      r.edgewise_compact += t.compact_bytes();
    }
    r.tensors.push_back(std::move(t));
  }
  return r;
}

std::string memreport_json(const MemReport& r) {
  Json j;
  j["schema"] = kSchemaVersion;
  j["report"] = "memreport";
  j["edge_count"] = r.edge_count;
  j["unique_count"] = r.unique_count;
  j["entity_compaction_ratio"] = {{"numerator", r.unique_count},
                                  {"denominator", r.edge_count}};
  Json tensors = Json::array();
  for (const auto& t : r.tensors) {
    tensors.push_back({{"name", t.name},
                       {"role", std::string(ir::to_string(t.role))},
                       {"cols", t.cols},
                       {"vanilla_rows", t.vanilla_rows},
                       {"compact_rows", t.compact_rows},
                       {"vanilla_bytes", t.vanilla_bytes()},
                       {"compact_bytes", t.compact_bytes()},
                       {"compactable", t.compactable}});
  }
  j["tensors"] = std::move(tensors);
  j["totals"] = {{"vanilla_bytes", r.vanilla_total}, {"compact_bytes", r.compact_total}};
  j["edgewise"] = {{"vanilla_bytes", r.edgewise_vanilla},
                   {"compact_bytes", r.edgewise_compact}};
  return j.dump(2) + "\n";
}

namespace {

Json totals_json(const ir::FlopReport& f) {
  Json ops = Json::array();
  for (const auto& o : f.ops) {
    ops.push_back({{"op", o.op},
                   {"kind", std::string(ir::to_string(o.kind))},
                   {"result", o.result},
                   {"rows", o.rows},
                   {"multiplies", o.multiplies},
                   {"adds", o.adds},
                   {"other", o.other}});
  }
  return {{"multiplies", f.multiplies},
          {"adds", f.adds},
          {"other", f.other},
          {"ops", std::move(ops)}};
}

Json slice_json(const ir::Program& p, const ir::FlopReport& f, const std::string& var) {
  if (!p.find(var)) return nullptr;
  const ir::FlopSlice s = ir::variable_cost(p, f, var);
  return {{"ops", s.ops},
          {"multiplies", s.multiplies},
          {"adds", s.adds},
          {"other", s.other}};
}

}  // namespace

std::string flops_json(const ir::Program& p, const GraphStats& stats,
                       const ir::Program* reordered,
                       const std::vector<std::string>& focus) {
  const ir::FlopReport vanilla = ir::count_flops(p, stats, Layout::kVanilla);
  const ir::FlopReport compact =
      ir::count_flops(ir::canonicalize_loops(p), stats, Layout::kCompact);
  Json j;
  j["schema"] = kSchemaVersion;
  j["report"] = "flops";
  j["program"] = p.name;
  j["vanilla"] = totals_json(vanilla);
  j["compact"] = totals_json(compact);
  std::optional<ir::FlopReport> after;
  if (reordered) {
    after = ir::count_flops(*reordered, stats, Layout::kVanilla);
    j["reordered"] = totals_json(*after);
  }
  Json vars = Json::array();
  for (const auto& v : focus) {
    Json entry{{"name", v}, {"before", slice_json(p, vanilla, v)}};
    if (after) entry["after"] = slice_json(*reordered, *after, v);
    vars.push_back(std::move(entry));
  }
  j["variables"] = std::move(vars);
  return j.dump(2) + "\n";
}

std::string plan_summary_json(const lowering::KernelPlan& plan) {
  Json j;
  j["schema"] = kSchemaVersion;
  j["report"] = "plan";
  j["program"] = plan.program.name;
  j["layout"] = std::string(to_string(plan.options.layout));
  j["adjacency"] = std::string(to_string(plan.options.adjacency));
  j["gemm_instances"] = plan.gemms.size();
  j["traversal_instances"] = plan.traversals.size();
  j["fallback_ops"] = plan.fallback.size();
  Json steps = Json::array();
  for (const auto& s : plan.schedule) {
    steps.push_back({{"name", plan.step_name(s)}, {"ops", plan.step_ops(s)}});
  }
  j["schedule"] = std::move(steps);
  Json compact = Json::array();
  for (const auto& [var, layout] : plan.layouts) {
    if (layout == Layout::kCompact) compact.push_back(var);
  }
  j["compact"] = std::move(compact);
  return j.dump(2) + "\n";
}

std::string check_json(const std::string& model, const std::vector<CheckResult>& results) {
  Json j;
  j["schema"] = kSchemaVersion;
  j["report"] = "check";
  j["model"] = model;
  bool all = true;
  Json list = Json::array();
  for (const auto& r : results) {
    all = all && r.passed;
    list.push_back({{"name", r.name},
                    {"passed", r.passed},
                    {"max_error", r.max_error},
                    {"detail", r.detail}});
  }
  j["passed"] = all;
  j["properties"] = std::move(list);
  return j.dump(2) + "\n";
}

}  // namespace rgnnc::report
