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

#include "rgnnc/analysis.h"

#include <algorithm>
#include <map>
#include <queue>

namespace rgnnc::ir {

namespace {

void collect(const std::vector<Stmt>& body, int top, bool in_scope,
             ScopeKind kind, bool nested, std::vector<OpSite>& out) {
  for (std::size_t i = 0; i < body.size(); ++i) {
    const Stmt& s = body[i];
    const int t = in_scope ? top : static_cast<int>(i);
    if (s.is_scope) {
      const bool inner_nested = in_scope;
      collect(s.body, t, true, s.scope, inner_nested, out);
      continue;
    }
    OpSite site;
    site.op = &s.op;
    site.position = static_cast<int>(out.size());
    site.top_scope = t;
    site.in_scope = in_scope;
    site.kind = kind;
    site.nested = nested;
    out.push_back(site);
  }
}

}  // namespace

std::vector<OpSite> collect_sites(const Program& p) {
  std::vector<OpSite> out;
  collect(p.body, -1, false, ScopeKind::kEdges, false, out);
  return out;
}

std::vector<std::string> read_vars(const OpCall& op) {
  std::vector<std::string> out;
  for (const Operand& a : op.args) {
    if (a.access == Access::kConst) continue;
    if (std::find(out.begin(), out.end(), a.var) == out.end()) {
      out.push_back(a.var);
    }
  }
  return out;
}

bool is_cross_row(const Operand& o, bool edge_loop) {
  switch (o.access) {
    case Access::kSrc:
    case Access::kDst: return true;
    case Access::kNode: return edge_loop;
    default: return false;
  }
}

Dependences dependences(const std::vector<OpSite>& sites) {
  const std::size_t n = sites.size();
  Dependences d;
  d.succ.assign(n, {});
  d.pred.assign(n, {});
  std::map<std::string, std::vector<int>> writers, readers;
  auto link = [&](int from, int to) {
    if (from == to) return;
    auto& s = d.succ[static_cast<std::size_t>(from)];
    if (std::find(s.begin(), s.end(), to) != s.end()) return;
    s.push_back(to);
    d.pred[static_cast<std::size_t>(to)].push_back(from);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const OpCall& op = *sites[i].op;
    const int me = static_cast<int>(i);
    for (const auto& v : read_vars(op)) {
      for (int w : writers[v]) link(w, me);
    }
    const std::string& r = op.result.var;
    if (op.accumulates()) {
      for (int w : writers[r]) link(w, me);
      for (int rd : readers[r]) link(rd, me);
    }
    for (const auto& v : read_vars(op)) readers[v].push_back(me);
    writers[r].push_back(me);
  }
  for (auto& s : d.succ) std::sort(s.begin(), s.end());
  for (auto& s : d.pred) std::sort(s.begin(), s.end());
  return d;
}

namespace {

std::vector<std::set<int>> quotient(const Dependences& deps,
                                    const std::vector<int>& group,
                                    int group_count) {
  std::vector<std::set<int>> succ(static_cast<std::size_t>(group_count));
  for (std::size_t i = 0; i < deps.succ.size(); ++i) {
    for (int j : deps.succ[i]) {
      const int a = group[i];
      const int b = group[static_cast<std::size_t>(j)];
      if (a != b) succ[static_cast<std::size_t>(a)].insert(b);
    }
  }
  return succ;
}

}  // namespace

std::vector<int> order_groups(const Dependences& deps,
                              const std::vector<int>& group, int group_count) {
  const auto succ = quotient(deps, group, group_count);
  std::vector<int> first(static_cast<std::size_t>(group_count),
                         static_cast<int>(group.size()));
  for (std::size_t i = 0; i < group.size(); ++i) {
    auto& f = first[static_cast<std::size_t>(group[i])];
    f = std::min(f, static_cast<int>(i));
  }
  std::vector<int> indeg(static_cast<std::size_t>(group_count), 0);
  for (const auto& s : succ) {
    for (int b : s) ++indeg[static_cast<std::size_t>(b)];
  }
  using Item = std::pair<int, int>;  // (first position, group)
  std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
  for (int g = 0; g < group_count; ++g) {
    if (indeg[static_cast<std::size_t>(g)] == 0) {
      ready.push({first[static_cast<std::size_t>(g)], g});
    }
  }
  std::vector<int> order;
  while (!ready.empty()) {
    const int g = ready.top().second;
    ready.pop();
    order.push_back(g);
    for (int b : succ[static_cast<std::size_t>(g)]) {
      if (--indeg[static_cast<std::size_t>(b)] == 0) {
        ready.push({first[static_cast<std::size_t>(b)], b});
      }
    }
  }
  if (static_cast<int>(order.size()) != group_count) {
    throw Error("dependence cycle between kernel groups");
  }
  return order;
}

bool quotient_has_cycle(const Dependences& deps, const std::vector<int>& group,
                        int group_count) {
  try {
    order_groups(deps, group, group_count);
  } catch (const Error&) {
    return true;
  }
  return false;
}

}  // namespace rgnnc::ir
