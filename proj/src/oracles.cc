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

#include "rgnnc/oracles.h"

namespace rgnnc::oracle {

namespace {

Row row_of(const Tensor* t, Index r) {
  if (!t) return {};
  return Row(t->row(r), static_cast<std::size_t>(t->cols));
}

void check_width(const std::vector<double>& v, Index cols) {
  if (static_cast<Index>(v.size()) != cols) {
    throw Error("oracle callback returned " + std::to_string(v.size()) +
                " values, expected " + std::to_string(cols));
  }
}

}  // namespace

std::vector<std::vector<std::vector<Index>>> dense_mask(const HeteroGraph& g) {
  const auto n = static_cast<std::size_t>(g.num_nodes());
  std::vector<std::vector<std::vector<Index>>> mask(
      n, std::vector<std::vector<Index>>(n));
  for (Index e = 0; e < g.num_edges(); ++e) mask[g.dst[e]][g.src[e]].push_back(e);
  return mask;
}

Tensor gspmm(const HeteroGraph& g, const Tensor& node_data, const Tensor* edge_data,
             Index out_cols, const MessageFn& message) {
  const auto mask = dense_mask(g);
  const Index n = g.num_nodes();
  Tensor out = Tensor::zeros(TensorRole::kNode, n, out_cols);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      for (Index e : mask[i][j]) {
        const auto m = message(e, row_of(&node_data, j), row_of(edge_data, e));
        check_width(m, out_cols);
        for (Index c = 0; c < out_cols; ++c) out.row(i)[c] += m[c];
      }
    }
  }
  return out;
}

Tensor gsddmm(const HeteroGraph& g, const Tensor& src_data, const Tensor& dst_data,
              const Tensor* edge_data, Index out_cols, const ScoreFn& score) {
  const auto mask = dense_mask(g);
  const Index n = g.num_nodes();
  Tensor out = Tensor::zeros(TensorRole::kEdgeVanilla, g.num_edges(), out_cols);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      for (Index e : mask[i][j]) {
        const auto s =
            score(e, row_of(&src_data, j), row_of(&dst_data, i), row_of(edge_data, e));
        check_width(s, out_cols);
        std::copy(s.begin(), s.end(), out.row(e));
      }
    }
  }
  return out;
}

}  // namespace rgnnc::oracle
