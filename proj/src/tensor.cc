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

#include "rgnnc/tensor.h"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <set>

#include "json.hpp"

namespace rgnnc {

std::string_view to_string(TensorRole r) {
  switch (r) {
    case TensorRole::kNode: return "node";
    case TensorRole::kEdgeVanilla: return "edge";
    case TensorRole::kEdgeCompact: return "edge_compact";
    case TensorRole::kWeight: return "weight";
  }
  return "?";
}

Tensor Tensor::zeros(TensorRole role, Index rows, Index cols, Index slices) {
  Tensor t;
  t.role = role;
  t.rows = rows;
  t.cols = cols;
  t.slices = slices;
  t.data.assign(static_cast<std::size_t>(rows * cols), 0.0);
  return t;
}

std::shared_ptr<const GraphContext> GraphContext::make(HeteroGraph g) {
  auto ctx = std::make_shared<GraphContext>();
  g.validate();
  ctx->node_type = g.node_types();
  ctx->node_type_ptr = g.node_type_ptr();
  {
    const HeteroGraph sorted = g.is_type_sorted() ? g : sort_edges_by_type(g);
    ctx->stats = graph_stats(g, build_compact_index(sorted));
  }
  const Index n = g.num_nodes();
  const Index e = g.num_edges();
  auto bucket = [&](const std::vector<Index>& key, std::vector<Index>& ptr,
                    std::vector<Index>& ids) {
    ptr.assign(static_cast<std::size_t>(n + 1), 0);
    for (Index i = 0; i < e; ++i) ++ptr[static_cast<std::size_t>(key[i] + 1)];
    for (Index v = 0; v < n; ++v) ptr[v + 1] += ptr[v];
    ids.assign(static_cast<std::size_t>(e), 0);
    std::vector<Index> fill(ptr.begin(), ptr.end() - 1);
    for (Index i = 0; i < e; ++i) ids[fill[key[i]]++] = i;
  };
  bucket(g.dst, ctx->in_ptr, ctx->in_edges);
  bucket(g.src, ctx->out_ptr, ctx->out_edges);
  ctx->graph = std::move(g);
  return ctx;
}

const Tensor& Environment::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw Error("missing binding for '" + name + "'");
  return it->second;
}

Tensor& Environment::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw Error("missing binding for '" + name + "'");
  return it->second;
}

Environment make_environment(HeteroGraph g) {
  Environment env;
  env.graph = GraphContext::make(std::move(g));
  return env;
}

// ---------------------------------------------------------------------------
// Binary tensor files

namespace {

constexpr char kMagic[4] = {'R', 'G', 'T', '1'};

template <typename T>
void put_le(std::ostream& os, T v) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    os.put(static_cast<char>(u & 0xff));
    u = static_cast<U>(u >> 8);
  }
}

template <typename U>
U get_le(std::istream& is) {
  U u = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw Error("truncated tensor file");
    u |= static_cast<U>(static_cast<U>(c & 0xff) << (8 * i));
  }
  return u;
}

std::string file_stem(const std::string& name) {
  std::string s;
  for (char c : name) {
    s += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') ? c : '_';
  }
  return s;
}

}  // namespace

void write_tensor(const Tensor& t, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error("cannot write " + file.string());
  os.write(kMagic, 4);
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(t.rows));
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(t.cols));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.role));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.slices));
  for (double v : t.data) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw Error("failed writing " + file.string());
}

Tensor read_tensor(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw Error("cannot read " + file.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(file.string() + " is not a tensor file");
  }
  Tensor t;
  t.rows = static_cast<Index>(get_le<std::uint64_t>(is));
  t.cols = static_cast<Index>(get_le<std::uint64_t>(is));
  const auto role = get_le<std::uint32_t>(is);
  if (role > 3) throw Error(file.string() + ": unknown tensor role");
  t.role = static_cast<TensorRole>(role);
  t.slices = static_cast<Index>(get_le<std::uint32_t>(is));
  if (t.slices == 0) t.slices = 1;
  t.data.resize(static_cast<std::size_t>(t.rows * t.cols));
  for (double& v : t.data) v = std::bit_cast<double>(get_le<std::uint64_t>(is));
  return t;
}

void save_environment(const Environment& env, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["schema"] = 1;
  manifest["tensors"] = nlohmann::ordered_json::array();
  std::set<std::string> used;
  for (const auto& [name, t] : env.tensors) {
    std::string stem = file_stem(name);
    for (int n = 2; used.count(stem); ++n) stem = file_stem(name) + "-" + std::to_string(n);
    used.insert(stem);
    const std::string file = stem + ".bin";
    write_tensor(t, dir / file);
    manifest["tensors"].push_back({{"name", name},
                                   {"file", file},
                                   {"role", std::string(to_string(t.role))},
                                   {"rows", t.rows},
                                   {"cols", t.cols},
                                   {"slices", t.slices}});
  }
  std::ofstream os(dir / "manifest.json");
  os << manifest.dump(2) << '\n';
}

Environment load_environment(const std::filesystem::path& dir, HeteroGraph g) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw Error("no manifest.json in " + dir.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad environment manifest: " + std::string(e.what()));
  }
  Environment env = make_environment(std::move(g));
  for (const auto& entry : manifest.at("tensors")) {
    env.bind(entry.at("name").get<std::string>(),
             read_tensor(dir / entry.at("file").get<std::string>()));
  }
  return env;
}

}  // namespace rgnnc
