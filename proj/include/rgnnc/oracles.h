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

// Dense reference primitives. Both walk the full N x N adjacency mask, so
// they are only meant for small graphs.
//
//   gspmm:  out[i] = sum over (j, e) with e: j -> i of message(e, x[j], edge[e])
//   gsddmm: out[e] = score(e, src[e], dst[e], edge[e]) for every edge

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rgnnc/graph.h"
#include "rgnnc/tensor.h"

namespace rgnnc::oracle {

using Row = std::span<const double>;

// Empty rows are passed for absent tensors.
using MessageFn = std::function<std::vector<double>(Index edge, Row src, Row edge_data)>;
using ScoreFn =
    std::function<std::vector<double>(Index edge, Row src, Row dst, Row edge_data)>;

// Edges grouped per (dst, src) cell of the dense mask, ascending edge id.
std::vector<std::vector<std::vector<Index>>> dense_mask(const HeteroGraph& g);

Tensor gspmm(const HeteroGraph& g, const Tensor& node_data, const Tensor* edge_data,
             Index out_cols, const MessageFn& message);

Tensor gsddmm(const HeteroGraph& g, const Tensor& src_data, const Tensor& dst_data,
              const Tensor* edge_data, Index out_cols, const ScoreFn& score);

}  // namespace rgnnc::oracle
