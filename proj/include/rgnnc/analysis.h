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

// Read/write sets and dependences between op calls.

#pragma once

#include <set>
#include <string>
#include <vector>

#include "rgnnc/ir.h"

namespace rgnnc::ir {

// Where an op call sits in its program.
struct OpSite {
  const OpCall* op = nullptr;
  int position = 0;    // program order
  int top_scope = -1;  // index into Program::body
  bool in_scope = false;
  ScopeKind kind = ScopeKind::kEdges;  // innermost enclosing scope
  bool nested = false;                 // inside a neighbor loop
};

std::vector<OpSite> collect_sites(const Program& p);

std::vector<std::string> read_vars(const OpCall& op);

// True when the accessor may reach a row other than the current loop row,
// so that writes through it are shared between iterations.
bool is_cross_row(const Operand& o, bool edge_loop);

// Op-level dependences, as indices into the site vector:
//   def/accumulate -> read, accumulate -> later accumulate of the same
//   variable, read -> later accumulate of the same variable.
struct Dependences {
  std::vector<std::vector<int>> succ;
  std::vector<std::vector<int>> pred;
};

Dependences dependences(const std::vector<OpSite>& sites);

// Topological order of the groups of a partition (group[i] for site i),
// ties broken by the smallest member position. Throws Error if the
// quotient graph has a cycle.
std::vector<int> order_groups(const Dependences& deps,
                              const std::vector<int>& group, int group_count);

bool quotient_has_cycle(const Dependences& deps, const std::vector<int>& group,
                        int group_count);

}  // namespace rgnnc::ir
