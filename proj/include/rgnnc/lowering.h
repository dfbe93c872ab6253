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

// Greedy lowering of an inter-op program to kernel instances.
//
// Pass 1 turns GEMM-eligible ops into GEMM instances and absorbs per-row
// scalar multiplies that consume them. Loops are then canonicalized and
// fused, and pass 2 groups the remaining row-wise ops of each loop into
// traversal instances. Whatever is left runs in the fallback interpreter.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rgnnc/intra.h"
#include "rgnnc/ir.h"

namespace rgnnc::lowering {

enum class Preference { kFallback = 0, kTraversal = 1, kGemm = 2 };

Preference preference_of(const ir::OpCall& op);
std::string_view to_string(Preference p);

struct LowerOptions {
  Layout layout = Layout::kVanilla;
  Adjacency adjacency = Adjacency::kCoo;
  intra::GemmSchedule gemm;
  bool hoisting = true;
  bool partial_aggregation = true;
  int first_kid = 1;
};

struct FallbackEntry {
  int op = -1;
  std::string reason;
};

enum class StepKind { kGemm, kTraversal, kFallback };

struct Step {
  StepKind kind = StepKind::kGemm;
  int index = 0;  // into gemms, traversals, or fallback_groups
};

struct KernelPlan {
  ir::Program program;  // canonicalized and fused; op ids match the source
  LowerOptions options;
  std::vector<intra::GemmInstance> gemms;
  std::vector<intra::TraversalInstance> traversals;
  std::vector<FallbackEntry> fallback;
  std::vector<std::vector<int>> fallback_groups;  // executed as units
  std::vector<Step> schedule;
  VarLayouts layouts;

  // "gemm_<kid>" / "traversal_<kid>" / "fallback_<n>".
  std::string step_name(const Step& s) const;
  std::vector<int> step_ops(const Step& s) const;
  std::size_t instance_count() const { return gemms.size() + traversals.size(); }
};

bool can_fuse_gemm(const ir::Program& p, const intra::GemmInstance& g,
                   const ir::OpCall& consumer);

bool can_fuse_traversal(const ir::Program& p, const intra::TraversalInstance& t,
                        const ir::OpCall& b);

KernelPlan lower(const ir::Program& p, const LowerOptions& options = {});

// Deterministic text form used by golden tests and `compile`.
std::string to_text(const KernelPlan& plan);

}  // namespace rgnnc::lowering
