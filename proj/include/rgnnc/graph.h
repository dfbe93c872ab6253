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

// Heterogeneous graph storage and the adjacency encodings derived from it.
//
// Nodes carry global ids; node type t owns the contiguous id range
// [node_type_ptr[t], node_type_ptr[t+1]). Edges are kept as COO arrays in
// "file order" until sort_edges_by_type() groups them by edge type.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rgnnc/common.h"

namespace rgnnc {

struct HeteroGraph {
  std::vector<Index> node_counts;  // per node type
  Index edge_type_count = 0;
  std::vector<Index> src;
  std::vector<Index> dst;
  std::vector<Index> etype;

  // Populated by sort_edges_by_type(): size edge_type_count + 1.
  std::vector<Index> etype_ptr;
  // original_edge_id[i] is the file-order index of the edge now at position
  // i. Empty means identity.
  std::vector<Index> original_edge_id;

  static HeteroGraph create(std::vector<Index> node_counts,
                            Index edge_type_count, std::vector<Index> src,
                            std::vector<Index> dst, std::vector<Index> etype);

  Index num_nodes() const;
  Index num_edges() const { return static_cast<Index>(src.size()); }
  Index node_type_count() const {
    return static_cast<Index>(node_counts.size());
  }
  bool is_type_sorted() const {
    return static_cast<Index>(etype_ptr.size()) == edge_type_count + 1;
  }
  // Prefix sums of node_counts, size node_type_count() + 1.
  std::vector<Index> node_type_ptr() const;
  Index node_type_of(Index node) const;
  std::vector<Index> node_types() const;  // node_type_of for every node

  // Throws Error when any structural invariant is violated.
  void validate() const;

  bool operator==(const HeteroGraph&) const = default;
};

// Destination-keyed CSR. Entries within a row are ordered by (etype, src,
// edge id).
struct AdjacencyCSR {
  std::vector<Index> row_ptr;
  std::vector<Index> col_idx;
  std::vector<Index> edge_id;
  std::vector<Index> etype_of_entry;

  Index num_rows() const { return static_cast<Index>(row_ptr.size()) - 1; }
  Index num_entries() const { return static_cast<Index>(col_idx.size()); }
};

// One row per unique (edge type, source node) pair, grouped by edge type and
// sorted by source id inside each group.
struct CompactIndex {
  Index unique_count = 0;
  std::vector<Index> unique_etype_ptr;
  std::vector<Index> unique_row_idx;
  std::vector<Index> pair_of_edge;
};

struct GraphStats {
  Index node_count = 0;
  Index node_type_count = 0;
  Index edge_type_count = 0;
  Index edge_count = 0;
  Index unique_count = 0;
  // [relation][node]
  std::vector<std::vector<Index>> in_degree;
  std::vector<std::vector<Index>> out_degree;
  // Per edge: 1 / sqrt(out_deg_r(src) * in_deg_r(dst)).
  std::vector<double> edge_norm;
  double entity_compaction_ratio = 1.0;
};

enum class DegreeDistribution { kUniform, kPowerLaw };

struct SyntheticSpec {
  std::vector<Index> node_counts;  // per node type
  Index edge_types = 1;
  Index edges = 0;
  DegreeDistribution degrees = DegreeDistribution::kUniform;
  double power_law_alpha = 1.5;
  bool allow_duplicates = false;
};

HeteroGraph load_graph(std::string_view text);
HeteroGraph load_graph_file(const std::filesystem::path& path);
std::string to_tsv(const HeteroGraph& g);

HeteroGraph sort_edges_by_type(const HeteroGraph& g);
AdjacencyCSR build_csr(const HeteroGraph& g);
CompactIndex build_compact_index(const HeteroGraph& g);
GraphStats graph_stats(const HeteroGraph& g, const CompactIndex& ci);
HeteroGraph generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace rgnnc
