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

// Dense tensors bound to a graph, and the environments that hold them.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rgnnc/graph.h"

namespace rgnnc {

enum class TensorRole : std::uint32_t {
  kNode = 0,
  kEdgeVanilla = 1,
  kEdgeCompact = 2,
  kWeight = 3,
};

std::string_view to_string(TensorRole r);

// Row-major f64 matrix. Weights stack their per-type slices vertically:
// rows = slices * slice_rows.
struct Tensor {
  TensorRole role = TensorRole::kNode;
  Index rows = 0;
  Index cols = 0;
  Index slices = 1;
  std::vector<double> data;

  static Tensor zeros(TensorRole role, Index rows, Index cols, Index slices = 1);

  Index slice_rows() const { return slices == 0 ? 0 : rows / slices; }
  double* row(Index r) { return data.data() + r * cols; }
  const double* row(Index r) const { return data.data() + r * cols; }
  double* slice(Index t) { return data.data() + t * slice_rows() * cols; }
  const double* slice(Index t) const {
    return data.data() + t * slice_rows() * cols;
  }
  bool operator==(const Tensor&) const = default;
};

// A graph with the derived structures kernels may need. Immutable once
// shared; preprocessing produces a new context.
struct GraphContext {
  HeteroGraph graph;
  std::vector<Index> node_type;      // per node
  std::vector<Index> node_type_ptr;  // size node types + 1
  GraphStats stats;
  std::optional<AdjacencyCSR> csr;
  std::optional<CompactIndex> compact;
  // Edge ids incident to each node, ascending.
  std::vector<Index> in_ptr, in_edges;
  std::vector<Index> out_ptr, out_edges;

  static std::shared_ptr<const GraphContext> make(HeteroGraph g);

  Index num_nodes() const { return graph.num_nodes(); }
  Index num_edges() const { return graph.num_edges(); }
};

struct Environment {
  std::shared_ptr<const GraphContext> graph;
  std::map<std::string, Tensor> tensors;

  bool has(const std::string& name) const { return tensors.count(name) > 0; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  void bind(const std::string& name, Tensor t) { tensors[name] = std::move(t); }
};

Environment make_environment(HeteroGraph g);

// Directory layout: manifest.json plus one <name>.bin per tensor
// ("RGT1", u64 rows, u64 cols, u32 role, u32 slices, f64 data, all
// little-endian). Weight slice counts are stored in the reserved field.
void save_environment(const Environment& env, const std::filesystem::path& dir);
Environment load_environment(const std::filesystem::path& dir, HeteroGraph g);

void write_tensor(const Tensor& t, const std::filesystem::path& file);
Tensor read_tensor(const std::filesystem::path& file);

}  // namespace rgnnc
