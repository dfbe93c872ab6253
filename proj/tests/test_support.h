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

// Fixtures shared by the test binaries: the G7 graph, seeded random
// graphs, and golden-file comparison.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rgnnc/graph.h"
#include "rgnnc/ir.h"
#include "rgnnc/tensor.h"

namespace rgnnc::testing {

std::filesystem::path testdata_dir();
std::filesystem::path golden_dir();

// Authors a=0, b=1, c=2; papers p=3, q=4. writes = 0, cites = 1.
HeteroGraph g7();
std::string g7_path();

// splitmix64; small and fully specified so generated cases never drift
// with the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(seed) {}
  std::uint64_t next();
  Index below(Index n) { return static_cast<Index>(next() % static_cast<std::uint64_t>(n)); }
  Index between(Index lo, Index hi) { return lo + below(hi - lo + 1); }  // inclusive
  double uniform(double lo, double hi);

 private:
  std::uint64_t s_;
};

struct RandomGraphLimits {
  Index max_nodes = 32;
  Index max_edges = 128;
  Index max_node_types = 3;
  Index max_edge_types = 4;
  Index min_edges = 0;
};

// Multigraph with self-loops and parallel edges allowed, edges in
// arbitrary type order.
HeteroGraph random_graph(std::uint64_t seed, const RandomGraphLimits& limits = {});

// Small well-formed program mixing typed linears (some followed by a dot
// with a per-type vector, the reorder pattern), elementwise ops, edge
// softmax blocks, node loops and aggregations. Feature width is 2..4.
ir::Program random_program(std::uint64_t seed);

// Compares `actual` with golden_dir()/name. With RGNNC_UPDATE_GOLDENS=1 the
// file is rewritten instead. Returns an empty string on success.
std::string check_golden(const std::string& name, const std::string& actual);

std::string read_file(const std::filesystem::path& p);

}  // namespace rgnnc::testing
