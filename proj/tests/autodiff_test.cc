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

#include <gtest/gtest.h>

#include <cmath>

#include "rgnnc/interp.h"
#include "rgnnc/passes.h"
#include "rgnnc/zoo.h"
#include "test_support.h"

namespace rgnnc::ir {
namespace {

using testing::g7;
using testing::random_graph;

Program single_linear() {
  ProgramBuilder b("single");
  b.input("x", Role::kNode, 3).weight("W", WeightIndex::kEdgeType, 3, 2);
  b.begin(ScopeKind::kEdges);
  b.linear("y", src("x"), weight("W", TypeSel::kEdgeType));
  b.end();
  b.mark_output("y");
  return b.build();
}

// dL/dW[t][i][j] = sum over edges of type t of x[src][i], for L = sum(y).
Tensor linear_weight_grad_oracle(const Environment& env) {
  const HeteroGraph& g = env.graph->graph;
  const Tensor& x = env.at("x");
  Tensor w = Tensor::zeros(TensorRole::kWeight, g.edge_type_count * 3, 2, g.edge_type_count);
  for (Index e = 0; e < g.num_edges(); ++e) {
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 2; ++j) {
        w.data[static_cast<std::size_t>((g.etype[e] * 3 + i) * 2 + j)] += x.row(g.src[e])[i];
      }
    }
  }
  return w;
}

Environment run_backward(const Program& fwd, const Program& bwd, const HeteroGraph& g,
                         std::uint64_t seed) {
  Environment env = make_environment(g);
  zoo::bind_model_inputs(fwd, env, seed);
  interp::bind_gradient_seeds(bwd, env);
  return interp::run_forward(bwd, env);
}

TEST(DeriveBackward, SingleLinearWeightGradient) {
  const Program p = single_linear();
  const Program bwd = derive_backward(p);
  EXPECT_TRUE(bwd.decl(grad_name("W")).output);
  EXPECT_TRUE(bwd.decl(grad_name("x")).output);
  EXPECT_TRUE(bwd.decl(grad_name("y")).input);
  const Environment out = run_backward(p, bwd, g7(), 5);
  EXPECT_LE(interp::max_relative_error(out.at("d_W"), linear_weight_grad_oracle(out)), 1e-12);
}

TEST(DeriveBackward, InputGradientIsTransposedProduct) {
  const Program p = single_linear();
  const Environment out = run_backward(p, derive_backward(p), g7(), 6);
  const HeteroGraph& g = out.graph->graph;
  const Tensor& w = out.at("W");
  Tensor expect = Tensor::zeros(TensorRole::kNode, g.num_nodes(), 3);
  for (Index e = 0; e < g.num_edges(); ++e) {
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 2; ++j) {
        expect.row(g.src[e])[i] += w.slice(g.etype[e])[i * 2 + j];
      }
    }
  }
  EXPECT_LE(interp::max_relative_error(out.at("d_x"), expect), 1e-12);
}

TEST(DeriveBackward, RejectsNonDifferentiableOps) {
  ProgramBuilder b("shape");
  b.input("x", Role::kNode, 2);
  b.begin(ScopeKind::kDstNodes);
  b.reshape("r", node("x"));
  b.end();
  b.mark_output("r");
  try {
    derive_backward(b.build());
    FAIL() << "expected Error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("reshape"), std::string::npos) << e.what();
  }
  EXPECT_THROW(derive_backward(reorder_linear_ops(zoo::build_rgat({3, 3}))), Error);
}

TEST(DeriveBackward, ConsumedOutputCannotBeSeeded) {
  ProgramBuilder b("consumed");
  b.input("x", Role::kNode, 2);
  b.begin(ScopeKind::kDstNodes);
  b.unary(UnaryFn::kIdentity, "a", node("x"));
  b.binary(BinaryFn::kAdd, "c", node("a"), node("x"));
  b.end();
  b.mark_output("a").mark_output("c");
  EXPECT_THROW(derive_backward(b.build()), Error);
}

TEST(DeriveBackward, EdgeSoftmaxGradientSumsToZeroPerDestination) {
  ProgramBuilder b("softmax");
  b.input("z", Role::kEdge, 1);
  b.begin(ScopeKind::kDstNodes);
  b.begin(ScopeKind::kIncomingEdges);
  b.unary(UnaryFn::kExp, "ex", edge("z"));
  b.accumulate(node("sum"), edge("ex"));
  b.end();
  b.begin(ScopeKind::kIncomingEdges);
  b.binary(BinaryFn::kDiv, "attn", edge("ex"), node("sum"));
  b.end();
  b.end();
  b.mark_output("attn");
  const Program p = b.build();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const HeteroGraph g = random_graph(seed);
    const Environment out = run_backward(p, derive_backward(p), g, seed);
    std::vector<double> per_dst(static_cast<std::size_t>(g.num_nodes()), 0.0);
    const Tensor& dz = out.at("d_z");
    for (Index e = 0; e < g.num_edges(); ++e) per_dst[g.dst[e]] += dz.data[e];
    for (double s : per_dst) EXPECT_NEAR(s, 0.0, 1e-12);
  }
}

TEST(DeriveBackward, LeakyReluGradientAtZeroUsesSlope) {
  ProgramBuilder b("lrelu");
  b.input("z", Role::kEdge, 1);
  b.begin(ScopeKind::kEdges);
  b.unary(UnaryFn::kLeakyRelu, "r", edge("z"), 0.3);
  b.end();
  b.mark_output("r");
  const Program p = b.build();
  const Program bwd = derive_backward(p);
  Environment env = make_environment(g7());
  Tensor z = Tensor::zeros(TensorRole::kEdgeVanilla, 7, 1);
  z.data = {-1.0, 0.0, 2.0, -0.5, 0.0, 3.0, 1e-300};
  env.bind("z", z);
  interp::bind_gradient_seeds(bwd, env);
  const Environment out = interp::run_forward(bwd, env);
  EXPECT_EQ(out.at("d_z").data, (std::vector<double>{0.3, 0.3, 1.0, 0.3, 0.3, 1.0, 1.0}));
}

TEST(PruneUnusedGradients, KeepingEverythingChangesNothing) {
  const Program bwd = derive_backward(zoo::build_rgat({3, 3}));
  EXPECT_EQ(prune_unused_gradients(bwd, {"d_feature", "d_W", "d_w_s", "d_w_t"}), bwd);
}

TEST(PruneUnusedGradients, WeightGradientsOnly) {
  const Program p = zoo::build_rgat({3, 3});
  const Program bwd = derive_backward(p);
  const std::set<std::string> wanted = {"d_W", "d_w_s", "d_w_t"};
  const Program pruned = prune_unused_gradients(bwd, wanted);
  EXPECT_LT(pruned.ops().size(), bwd.ops().size());
  for (const OpCall* op : pruned.ops()) EXPECT_NE(op->result.var, "d_feature");
  EXPECT_FALSE(pruned.find("d_feature") && pruned.decl("d_feature").output);
  const HeteroGraph g = random_graph(12);
  const Environment full = run_backward(p, bwd, g, 4);
  const Environment part = run_backward(p, pruned, g, 4);
  for (const auto& name : wanted) EXPECT_EQ(full.at(name), part.at(name)) << name;
}

TEST(BackwardOnly, ReproducesGradientsFromForwardValues) {
  const Program p = zoo::build_hgt({3, 3});
  const Program bwd = derive_backward(p);
  const Program half = backward_only(bwd);
  for (const OpCall* op : half.ops()) EXPECT_GE(op->adjoint_of, 0);
  const HeteroGraph g = random_graph(21);
  const Environment full = run_backward(p, bwd, g, 8);
  Environment env = make_environment(g);
  for (const auto& name : half.inputs()) env.bind(name, full.at(name));
  const Environment out = interp::run_forward(half, env);
  for (const auto& name : half.outputs()) EXPECT_EQ(out.at(name), full.at(name)) << name;
}

TEST(FiniteDiff, LinearCaseMatchesAnalytic) {
  const Program p = single_linear();
  Environment env = make_environment(g7());
  interp::bind_random_inputs(p, env, 9);
  const Tensor fd = interp::finite_diff_grad(p, env, "W");
  EXPECT_LE(interp::max_relative_error(fd, linear_weight_grad_oracle(env)), 1e-9);
}

TEST(FiniteDiff, RejectsBadStep) {
  const Program p = single_linear();
  Environment env = make_environment(g7());
  interp::bind_random_inputs(p, env, 9);
  EXPECT_THROW(interp::finite_diff_grad(p, env, "W", 0.0), Error);
  EXPECT_THROW(interp::finite_diff_grad(p, env, "W", -1e-6), Error);
  EXPECT_THROW(interp::finite_diff_element(p, env, "W", 0, std::nan("")), Error);
  EXPECT_THROW(interp::finite_diff_grad(p, env, "y"), Error);
}

TEST(FiniteDiff, NonFiniteLoss) {
  const Program p = single_linear();
  Environment env = make_environment(g7());
  interp::bind_random_inputs(p, env, 9);
  env.at("x").data[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(interp::finite_diff_grad(p, env, "W"), Error);
}

class ZooGradients : public ::testing::TestWithParam<zoo::Model> {};

TEST_P(ZooGradients, EveryParameterOnG7) {
  const Program p = zoo::build_model(GetParam(), {4, 3});
  Environment env = make_environment(g7());
  zoo::bind_model_inputs(p, env, 2);
  const auto checks = interp::check_gradients(p, env, 1e-6, 0);
  EXPECT_FALSE(checks.empty());
  for (const auto& c : checks) {
    EXPECT_GT(c.checked, 0u) << c.param;
    EXPECT_LE(c.max_error, 1e-4) << c.param;
  }
}

TEST_P(ZooGradients, RandomGraphs) {
  const Program p = zoo::build_model(GetParam(), {3, 3});
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Environment env = make_environment(random_graph(seed, {.max_nodes = 12, .max_edges = 40}));
    zoo::bind_model_inputs(p, env, seed);
    for (const auto& c : interp::check_gradients(p, env, 1e-6, 0)) {
      EXPECT_LE(c.max_error, 1e-4) << c.param << " seed " << seed;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Models, ZooGradients,
                         ::testing::Values(zoo::Model::kRgcn, zoo::Model::kRgat,
                                           zoo::Model::kHgt),
                         [](const auto& info) { return std::string(zoo::to_string(info.param)); });

}  // namespace
}  // namespace rgnnc::ir
