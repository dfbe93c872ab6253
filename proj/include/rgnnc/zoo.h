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

// Single-layer relational GNN programs.
//
//   rgcn  out[v] = act( sum_r sum_{u -r-> v} norm(u,v,r) * h[u] W[r]  +  h[v] W0 )
//   rgat  attention logits leakyrelu(h[u] W[r] . a_src[r] + h[v] W[r] . a_dst[r]),
//         edge softmax over incoming edges, out[v] = sum attn * h[u] W[r]
//   hgt   base = h Wn[type(u)], q = h Wq[type(v)],
//         logits q[v] . (base[u] Wk[r]) / sqrt(d), edge softmax,
//         out[v] = sum attn * base[u] Wm[r]

#pragma once

#include <cstdint>
#include <string_view>

#include "rgnnc/ir.h"
#include "rgnnc/tensor.h"

namespace rgnnc::zoo {

struct DimsConfig {
  Index in_dim = 64;
  Index out_dim = 64;

  void validate() const;  // throws Error
};

enum class Model { kRgcn, kRgat, kHgt };

Model parse_model(std::string_view name);  // throws Error
std::string_view to_string(Model m);

ir::Program build_rgcn(const DimsConfig& d,
                       ir::UnaryFn activation = ir::UnaryFn::kIdentity);
ir::Program build_rgat(const DimsConfig& d);
ir::Program build_hgt(const DimsConfig& d);
ir::Program build_model(Model m, const DimsConfig& d);

// Binds the edge normalization ("norm", when declared) from the graph
// statistics and every other unbound input randomly.
void bind_model_inputs(const ir::Program& p, Environment& env, std::uint64_t seed);

}  // namespace rgnnc::zoo
