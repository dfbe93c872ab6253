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

#include "rgnnc/graph.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>
#include <unordered_set>

namespace rgnnc {

HeteroGraph HeteroGraph::create(std::vector<Index> node_counts,
                                Index edge_type_count, std::vector<Index> src,
                                std::vector<Index> dst,
                                std::vector<Index> etype) {
  HeteroGraph g;
  g.node_counts = std::move(node_counts);
  g.edge_type_count = edge_type_count;
  g.src = std::move(src);
  g.dst = std::move(dst);
  g.etype = std::move(etype);
  g.validate();
  return g;
}

Index HeteroGraph::num_nodes() const {
  return std::accumulate(node_counts.begin(), node_counts.end(), Index{0});
}

std::vector<Index> HeteroGraph::node_type_ptr() const {
  std::vector<Index> ptr(node_counts.size() + 1, 0);
  std::partial_sum(node_counts.begin(), node_counts.end(), ptr.begin() + 1);
  return ptr;
}

Index HeteroGraph::node_type_of(Index node) const {
  Index begin = 0;
  for (std::size_t t = 0; t < node_counts.size(); ++t) {
    if (node < begin + node_counts[t]) return static_cast<Index>(t);
    begin += node_counts[t];
  }
  throw Error("node id " + std::to_string(node) + " out of range");
}

std::vector<Index> HeteroGraph::node_types() const {
  std::vector<Index> types;
  types.reserve(static_cast<std::size_t>(num_nodes()));
  for (std::size_t t = 0; t < node_counts.size(); ++t) {
    types.insert(types.end(), static_cast<std::size_t>(node_counts[t]),
                 static_cast<Index>(t));
  }
  return types;
}

void HeteroGraph::validate() const {
  if (node_counts.empty()) throw Error("graph has no node types");
  for (Index c : node_counts) {
    if (c < 0) throw Error("negative node count");
  }
  if (edge_type_count <= 0) throw Error("graph has no edge types");
  const Index n = num_nodes();
  const std::size_t e = src.size();
  if (dst.size() != e || etype.size() != e) {
    throw Error("edge arrays have mismatched lengths");
  }
  for (std::size_t i = 0; i < e; ++i) {
    if (src[i] < 0 || src[i] >= n || dst[i] < 0 || dst[i] >= n) {
      throw Error("edge " + std::to_string(i) + " has node id out of range");
    }
    if (etype[i] < 0 || etype[i] >= edge_type_count) {
      throw Error("edge " + std::to_string(i) + " has edge type out of range");
    }
  }
  if (!etype_ptr.empty()) {
    if (!is_type_sorted()) throw Error("etype_ptr has wrong length");
    if (etype_ptr.front() != 0 ||
        etype_ptr.back() != static_cast<Index>(e)) {
      throw Error("etype_ptr does not span the edge list");
    }
    for (Index t = 0; t < edge_type_count; ++t) {
      if (etype_ptr[t] > etype_ptr[t + 1]) {
        throw Error("etype_ptr is not nondecreasing");
      }
      for (Index i = etype_ptr[t]; i < etype_ptr[t + 1]; ++i) {
        if (etype[i] != t) throw Error("edge outside its etype segment");
      }
    }
  }
  if (!original_edge_id.empty() && original_edge_id.size() != e) {
    throw Error("original_edge_id has wrong length");
  }
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t j = i;
    while (j < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Index parse_count(std::string_view tok, int line) {
  Index v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || v < 0) {
    throw ParseError(line, "malformed number '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace

HeteroGraph load_graph(std::string_view text) {
  HeteroGraph g;
  bool have_header = false;
  bool have_counts = false;
  Index total_nodes = 0;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    auto toks = split_ws(line);
    if (toks.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (toks[0] == "H") {
      if (have_header) throw ParseError(line_no, "duplicate header");
      if (toks.size() != 3) throw ParseError(line_no, "malformed line");
      g.node_counts.assign(static_cast<std::size_t>(parse_count(toks[1], line_no)), 0);
      g.edge_type_count = parse_count(toks[2], line_no);
      if (g.node_counts.empty() || g.edge_type_count == 0) {
        throw ParseError(line_no, "header needs at least one node and edge type");
      }
      have_header = true;
    } else if (toks[0] == "N") {
      if (!have_header) throw ParseError(line_no, "node counts before header");
      if (have_counts) throw ParseError(line_no, "duplicate header");
      if (toks.size() != g.node_counts.size() + 1) {
        throw ParseError(line_no, "malformed line");
      }
      for (std::size_t t = 0; t < g.node_counts.size(); ++t) {
        g.node_counts[t] = parse_count(toks[t + 1], line_no);
      }
      total_nodes = g.num_nodes();
      have_counts = true;
    } else if (toks[0] == "E") {
      if (!have_counts) throw ParseError(line_no, "edge before node counts");
      if (toks.size() != 4) throw ParseError(line_no, "malformed line");
      Index s = parse_count(toks[1], line_no);
      Index d = parse_count(toks[2], line_no);
      Index t = parse_count(toks[3], line_no);
      if (s >= total_nodes || d >= total_nodes || t >= g.edge_type_count) {
        throw ParseError(line_no, "id out of range");
      }
      g.src.push_back(s);
      g.dst.push_back(d);
      g.etype.push_back(t);
    } else {
      throw ParseError(line_no, "malformed line");
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw ParseError(line_no, "missing header");
  if (!have_counts) throw ParseError(line_no, "missing node counts");
  g.validate();
  return g;
}

HeteroGraph load_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open graph file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_graph(ss.str());
}

std::string to_tsv(const HeteroGraph& g) {
  std::ostringstream os;
  os << "H " << g.node_type_count() << ' ' << g.edge_type_count << '\n';
  os << 'N';
  for (Index c : g.node_counts) os << ' ' << c;
  os << '\n';
  for (Index i = 0; i < g.num_edges(); ++i) {
    os << "E " << g.src[i] << ' ' << g.dst[i] << ' ' << g.etype[i] << '\n';
  }
  return os.str();
}

HeteroGraph sort_edges_by_type(const HeteroGraph& g) {
  const Index e = g.num_edges();
  const Index r = g.edge_type_count;
  std::vector<Index> ptr(static_cast<std::size_t>(r + 1), 0);
  for (Index t : g.etype) ++ptr[t + 1];
  std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());

  // Stable counting sort.
  std::vector<Index> next(ptr.begin(), ptr.end() - 1);
  std::vector<Index> perm(static_cast<std::size_t>(e));
  for (Index i = 0; i < e; ++i) perm[next[g.etype[i]]++] = i;

  HeteroGraph out;
  out.node_counts = g.node_counts;
  out.edge_type_count = r;
  out.src.resize(perm.size());
  out.dst.resize(perm.size());
  out.etype.resize(perm.size());
  out.original_edge_id.resize(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const Index from = perm[i];
    out.src[i] = g.src[from];
    out.dst[i] = g.dst[from];
    out.etype[i] = g.etype[from];
    out.original_edge_id[i] =
        g.original_edge_id.empty() ? from : g.original_edge_id[from];
  }
  out.etype_ptr = std::move(ptr);
  return out;
}

AdjacencyCSR build_csr(const HeteroGraph& g) {
  const Index n = g.num_nodes();
  const Index e = g.num_edges();
  AdjacencyCSR csr;
  csr.row_ptr.assign(static_cast<std::size_t>(n + 1), 0);
  for (Index d : g.dst) ++csr.row_ptr[d + 1];
  std::partial_sum(csr.row_ptr.begin(), csr.row_ptr.end(), csr.row_ptr.begin());

  std::vector<Index> order(static_cast<std::size_t>(e));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::tie(g.dst[a], g.etype[a], g.src[a], a) <
           std::tie(g.dst[b], g.etype[b], g.src[b], b);
  });
  csr.col_idx.resize(order.size());
  csr.edge_id = order;
  csr.etype_of_entry.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    csr.col_idx[i] = g.src[order[i]];
    csr.etype_of_entry[i] = g.etype[order[i]];
  }
  return csr;
}

CompactIndex build_compact_index(const HeteroGraph& g) {
  if (!g.is_type_sorted()) {
    throw Error("build_compact_index requires a type-sorted graph");
  }
  CompactIndex ci;
  ci.unique_etype_ptr.assign(static_cast<std::size_t>(g.edge_type_count + 1), 0);
  ci.pair_of_edge.assign(static_cast<std::size_t>(g.num_edges()), 0);
  std::vector<Index> srcs;
  for (Index t = 0; t < g.edge_type_count; ++t) {
    const Index begin = g.etype_ptr[t];
    const Index end = g.etype_ptr[t + 1];
    srcs.assign(g.src.begin() + begin, g.src.begin() + end);
    std::sort(srcs.begin(), srcs.end());
    srcs.erase(std::unique(srcs.begin(), srcs.end()), srcs.end());
    const Index base = static_cast<Index>(ci.unique_row_idx.size());
    ci.unique_row_idx.insert(ci.unique_row_idx.end(), srcs.begin(), srcs.end());
    for (Index i = begin; i < end; ++i) {
      auto it = std::lower_bound(srcs.begin(), srcs.end(), g.src[i]);
      ci.pair_of_edge[i] = base + (it - srcs.begin());
    }
    ci.unique_etype_ptr[t + 1] = static_cast<Index>(ci.unique_row_idx.size());
  }
  ci.unique_count = static_cast<Index>(ci.unique_row_idx.size());
  return ci;
}

GraphStats graph_stats(const HeteroGraph& g, const CompactIndex& ci) {
  GraphStats s;
  const Index n = g.num_nodes();
  const Index r = g.edge_type_count;
  s.node_count = n;
  s.node_type_count = g.node_type_count();
  s.edge_type_count = r;
  s.edge_count = g.num_edges();
  s.unique_count = ci.unique_count;
  s.in_degree.assign(static_cast<std::size_t>(r),
                     std::vector<Index>(static_cast<std::size_t>(n), 0));
  s.out_degree = s.in_degree;
  for (Index i = 0; i < s.edge_count; ++i) {
    ++s.in_degree[g.etype[i]][g.dst[i]];
    ++s.out_degree[g.etype[i]][g.src[i]];
  }
  s.edge_norm.resize(static_cast<std::size_t>(s.edge_count));
  for (Index i = 0; i < s.edge_count; ++i) {
    const double d_out = static_cast<double>(s.out_degree[g.etype[i]][g.src[i]]);
    const double d_in = static_cast<double>(s.in_degree[g.etype[i]][g.dst[i]]);
    s.edge_norm[i] = 1.0 / std::sqrt(d_out * d_in);
  }
  s.entity_compaction_ratio =
      s.edge_count == 0 ? 1.0
                        : static_cast<double>(s.unique_count) /
                              static_cast<double>(s.edge_count);
  return s;
}

HeteroGraph generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.node_counts.empty()) throw Error("synthetic spec has no node types");
  for (Index c : spec.node_counts) {
    if (c <= 0) throw Error("synthetic node counts must be positive");
  }
  if (spec.edge_types <= 0) throw Error("synthetic spec needs edge types");
  if (spec.edges < 0) throw Error("synthetic edge count is negative");
  const Index n = std::accumulate(spec.node_counts.begin(),
                                  spec.node_counts.end(), Index{0});
  const Index max_distinct = n * n * spec.edge_types;
  if (!spec.allow_duplicates && spec.edges > max_distinct) {
    throw Error("infeasible synthetic spec: " + std::to_string(spec.edges) +
                " distinct edges requested but only " +
                std::to_string(max_distinct) + " exist");
  }

  std::mt19937_64 rng(seed);
  std::vector<double> weights(static_cast<std::size_t>(n), 1.0);
  if (spec.degrees == DegreeDistribution::kPowerLaw) {
    for (Index v = 0; v < n; ++v) {
      weights[v] = std::pow(static_cast<double>(v + 1), -spec.power_law_alpha);
    }
  }
  std::discrete_distribution<Index> pick_src(weights.begin(), weights.end());
  std::uniform_int_distribution<Index> pick_node(0, n - 1);
  std::uniform_int_distribution<Index> pick_type(0, spec.edge_types - 1);

  std::vector<Index> src, dst, etype;
  src.reserve(static_cast<std::size_t>(spec.edges));
  auto key = [&](Index s, Index d, Index t) { return (t * n + s) * n + d; };
  auto push = [&](Index k) {
    etype.push_back(k / (n * n));
    src.push_back((k / n) % n);
    dst.push_back(k % n);
  };

  if (spec.allow_duplicates) {
    for (Index i = 0; i < spec.edges; ++i) {
      Index s = pick_src(rng), d = pick_node(rng), t = pick_type(rng);
      push(key(s, d, t));
    }
  } else {
    std::unordered_set<Index> used;
    const Index max_attempts = 64 * spec.edges + 64;
    Index attempts = 0;
    // Dense requests go straight to enumeration.
    bool enumerate = 2 * spec.edges > max_distinct;
    while (!enumerate && static_cast<Index>(src.size()) < spec.edges) {
      if (++attempts > max_attempts) {
        enumerate = true;
        break;
      }
      Index k = key(pick_src(rng), pick_node(rng), pick_type(rng));
      if (used.insert(k).second) push(k);
    }
    if (enumerate) {
      std::vector<Index> pool;
      pool.reserve(static_cast<std::size_t>(max_distinct));
      for (Index k = 0; k < max_distinct; ++k) {
        if (!used.count(k)) pool.push_back(k);
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      for (Index k : pool) {
        if (static_cast<Index>(src.size()) == spec.edges) break;
        push(k);
      }
    }
  }
  return HeteroGraph::create(spec.node_counts, spec.edge_types, std::move(src),
                             std::move(dst), std::move(etype));
}

}  // namespace rgnnc
