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

// Memory model and the JSON reports printed by the driver (schema 1,
// documented in docs/reports.md).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgnnc/flops.h"
#include "rgnnc/graph.h"
#include "rgnnc/ir.h"
#include "rgnnc/lowering.h"

namespace rgnnc::report {

inline constexpr int kSchemaVersion = 1;

struct TensorBytes {
  std::string name;
  ir::Role role = ir::Role::kNode;
  Index cols = 0;
  Index vanilla_rows = 0;
  Index compact_rows = 0;
  bool compactable = false;  // edgewise and stored once per unique pair

  std::uint64_t vanilla_bytes() const { return 8ull * vanilla_rows * cols; }
  std::uint64_t compact_bytes() const { return 8ull * compact_rows * cols; }
};

struct MemReport {
  std::vector<TensorBytes> tensors;  // declaration order
  std::uint64_t vanilla_total = 0;
  std::uint64_t compact_total = 0;
  // Totals over compactable edgewise tensors only.
  std::uint64_t edgewise_vanilla = 0;
  std::uint64_t edgewise_compact = 0;
  Index edge_count = 0;
  Index unique_count = 0;

  const TensorBytes* find(const std::string& name) const;
};

// Bytes of every declared variable of `p` (inputs included) under both
// layouts. Weight counts use the graph's type counts.
MemReport memreport(const ir::Program& p, const GraphStats& stats);

std::string memreport_json(const MemReport& r);

// FLOP report under each layout, plus the per-variable slices of `focus`
// variables before and after reordering when `reordered` is given.
std::string flops_json(const ir::Program& p, const GraphStats& stats,
                       const ir::Program* reordered,
                       const std::vector<std::string>& focus);

std::string plan_summary_json(const lowering::KernelPlan& plan);

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  std::string detail;
};

std::string check_json(const std::string& model, const std::vector<CheckResult>& results);

}  // namespace rgnnc::report
