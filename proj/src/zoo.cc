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

#include "rgnnc/zoo.h"

#include <cmath>

#include "rgnnc/interp.h"

namespace rgnnc::zoo {

using ir::BinaryFn;
using ir::ProgramBuilder;
using ir::Role;
using ir::ScopeKind;
using ir::TypeSel;
using ir::UnaryFn;
using ir::WeightIndex;
using ir::constant;
using ir::dst;
using ir::edge;
using ir::node;
using ir::src;
using ir::weight;

void DimsConfig::validate() const {
  if (in_dim <= 0 || out_dim <= 0) {
    throw Error("dimensions must be positive (got " + std::to_string(in_dim) + "->" +
                std::to_string(out_dim) + ")");
  }
}

Model parse_model(std::string_view name) {
  if (name == "rgcn") return Model::kRgcn;
  if (name == "rgat") return Model::kRgat;
  if (name == "hgt") return Model::kHgt;
  throw Error("unknown model '" + std::string(name) + "' (expected rgcn, rgat or hgt)");
}

std::string_view to_string(Model m) {
  switch (m) {
    case Model::kRgcn: return "rgcn";
    case Model::kRgat: return "rgat";
    case Model::kHgt: return "hgt";
  }
  return "?";
}

ir::Program build_rgcn(const DimsConfig& d, UnaryFn activation) {
  d.validate();
  ProgramBuilder b("rgcn");
  b.input("h", Role::kNode, d.in_dim)
      .input("norm", Role::kEdge, 1, /*requires_grad=*/false)
      .weight("W", WeightIndex::kEdgeType, d.in_dim, d.out_dim)
      .weight("W0", WeightIndex::kSingle, d.in_dim, d.out_dim);
  b.begin(ScopeKind::kDstNodes);
  b.begin(ScopeKind::kIncomingEdges);
  b.linear("m", src("h"), weight("W", TypeSel::kEdgeType));
  b.binary(BinaryFn::kMul, "mn", edge("m"), edge("norm"));
  b.accumulate(node("agg"), edge("mn"));
  b.end();
  b.linear("self", node("h"), weight("W0"));
  b.binary(BinaryFn::kAdd, "pre", node("agg"), node("self"));
  b.unary(activation, "out", node("pre"));
  b.end();
  b.mark_output("out");
  return b.build();
}

ir::Program build_rgat(const DimsConfig& d) {
  d.validate();
  ProgramBuilder b("rgat");
  b.input("feature", Role::kNode, d.in_dim)
      .weight("W", WeightIndex::kEdgeType, d.in_dim, d.out_dim)
      .weight("w_s", WeightIndex::kEdgeType, 1, d.out_dim)
      .weight("w_t", WeightIndex::kEdgeType, 1, d.out_dim);
  b.begin(ScopeKind::kEdges);
  b.linear("hs", src("feature"), weight("W", TypeSel::kEdgeType));
  b.dot("atts", edge("hs"), weight("w_s", TypeSel::kEdgeType));
  b.linear("ht", dst("feature"), weight("W", TypeSel::kEdgeType));
  b.dot("attt", edge("ht"), weight("w_t", TypeSel::kEdgeType));
  b.binary(BinaryFn::kAdd, "s", edge("atts"), edge("attt"));
  b.unary(UnaryFn::kLeakyRelu, "att", edge("s"));
  b.end();

  b.begin(ScopeKind::kDstNodes);
  b.begin(ScopeKind::kIncomingEdges);
  b.unary(UnaryFn::kExp, "ex", edge("att"));
  b.accumulate(node("att_sum"), edge("ex"));
  b.end();
  b.begin(ScopeKind::kIncomingEdges);
  b.binary(BinaryFn::kDiv, "attn", edge("ex"), node("att_sum"));
  b.end();
  b.end();

  b.begin(ScopeKind::kEdges);
  b.linear("msg", src("feature"), weight("W", TypeSel::kEdgeType));
  b.binary(BinaryFn::kMul, "wmsg", edge("msg"), edge("attn"));
  b.accumulate(dst("out"), edge("wmsg"));
  b.end();
  b.mark_output("out");
  return b.build();
}

ir::Program build_hgt(const DimsConfig& d) {
  d.validate();
  ProgramBuilder b("hgt");
  b.input("h", Role::kNode, d.in_dim)
      .weight("Wn", WeightIndex::kNodeType, d.in_dim, d.out_dim)
      .weight("Wq", WeightIndex::kNodeType, d.in_dim, d.out_dim)
      .weight("Wk", WeightIndex::kEdgeType, d.out_dim, d.out_dim)
      .weight("Wm", WeightIndex::kEdgeType, d.out_dim, d.out_dim);
  b.begin(ScopeKind::kDstNodes);
  b.linear("base", node("h"), weight("Wn", TypeSel::kNodeType));
  b.linear("q", node("h"), weight("Wq", TypeSel::kNodeType));
  b.end();

  b.begin(ScopeKind::kEdges);
  b.linear("k", src("base"), weight("Wk", TypeSel::kEdgeType));
  b.dot("s0", dst("q"), edge("k"));
  b.binary(BinaryFn::kMul, "s", edge("s0"),
           constant(1.0 / std::sqrt(static_cast<double>(d.out_dim))));
  b.unary(UnaryFn::kExp, "ex", edge("s"));
  b.accumulate(dst("sum"), edge("ex"));
  b.end();

  b.begin(ScopeKind::kEdges);
  b.binary(BinaryFn::kDiv, "a", edge("ex"), dst("sum"));
  b.linear("msg", src("base"), weight("Wm", TypeSel::kEdgeType));
  b.binary(BinaryFn::kMul, "wmsg", edge("msg"), edge("a"));
  b.accumulate(dst("out"), edge("wmsg"));
  b.end();
  b.mark_output("out");
  return b.build();
}

ir::Program build_model(Model m, const DimsConfig& d) {
  switch (m) {
    case Model::kRgcn: return build_rgcn(d);
    case Model::kRgat: return build_rgat(d);
    case Model::kHgt: return build_hgt(d);
  }
  throw Error("unknown model");
}

void bind_model_inputs(const ir::Program& p, Environment& env, std::uint64_t seed) {
  const ir::TensorDecl* norm = p.find("norm");
  if (norm && norm->input && norm->role == Role::kEdge && !env.has("norm")) {
    const GraphContext& g = *env.graph;
    Tensor t = Tensor::zeros(TensorRole::kEdgeVanilla, g.num_edges(), 1);
    for (Index e = 0; e < g.num_edges(); ++e) t.data[e] = g.stats.edge_norm[e];
    env.bind("norm", std::move(t));
  }
  interp::bind_random_inputs(p, env, seed);
}

}  // namespace rgnnc::zoo
