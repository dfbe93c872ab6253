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

// Program-to-program transformations. All passes are pure and keep op ids
// stable; new ops take ids from Program::next_op_id.

#pragma once

#include <set>
#include <string>
#include <string_view>

#include "rgnnc/ir.h"

namespace rgnnc::ir {

// Rewrites node scopes with nested neighbor loops into flat edge loops
// (n["x"] becomes e.dst["x"] for incoming edges, e.src["x"] for outgoing)
// with the node-level statements split into their own node loops. Scopes
// whose inner loop observes values written by other nodes of the same scope
// are left intact.
Program canonicalize_loops(const Program& p);

// True when every scope is flat (no nested neighbor loops).
bool is_canonical(const Program& p);

// Merges adjacent top-level scopes of the same kind when no dependence
// hazard crosses the boundary.
Program fuse_loops(const Program& p);

// dot(linear(x, W[t]), w[t])  ==>  dot(x, P[t]) with P[t] = W[t] * w[t]^T
// computed once per type by a top-level weight_product.
Program reorder_linear_ops(const Program& p);

// Name of the gradient variable of `var`.
std::string grad_name(std::string_view var);

// Appends reverse-mode gradient computation for the loss
//   L = sum of all elements of every declared output.
// Upstream gradients d_<output> become inputs (bind them to ones for L);
// gradients of requires_grad inputs become outputs.
Program derive_backward(const Program& forward);

// Drops statements that do not contribute to `wanted` gradients or to
// non-gradient outputs; unwanted gradient outputs are unmarked.
Program prune_unused_gradients(const Program& p,
                               const std::set<std::string>& wanted);

// The backward half of a derive_backward() program: forward statements
// removed, forward values consumed by the backward half turned into inputs.
Program backward_only(const Program& with_backward);

}  // namespace rgnnc::ir
