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

#include "rgnnc/lowering.h"

#include <gtest/gtest.h>

#include <map>

#include "rgnnc/passes.h"
#include "rgnnc/zoo.h"
#include "golden_cases.h"
#include "test_support.h"

namespace rgnnc::lowering {
namespace {

using ir::OpKind;
using zoo::Model;

LowerOptions options(Layout l, Adjacency a = Adjacency::kCoo) {
  LowerOptions o;
  o.layout = l;
  o.adjacency = a;
  return o;
}

constexpr Model kModels[] = {Model::kRgcn, Model::kRgat, Model::kHgt};

// op id -> number of plan steps claiming it.
std::map<int, int> coverage(const KernelPlan& plan) {
  std::map<int, int> seen;
  for (const auto& s : plan.schedule) {
    for (int op : plan.step_ops(s)) ++seen[op];
  }
  return seen;
}

void expect_exact_partition(const ir::Program& source, const KernelPlan& plan) {
  const auto seen = coverage(plan);
  std::size_t fallback = 0;
  for (const auto& group : plan.fallback_groups) fallback += group.size();
  EXPECT_EQ(fallback, plan.fallback.size());
  std::size_t covered = 0;
  for (const auto& [op, count] : seen) {
    EXPECT_EQ(count, 1) << "op " << op;
    covered += static_cast<std::size_t>(count);
  }
  EXPECT_EQ(covered, source.ops().size());
  for (const ir::OpCall* op : source.ops()) EXPECT_EQ(seen.count(op->id), 1u) << op->id;
}

void expect_gemm_ops_in_gemms(const KernelPlan& plan) {
  std::set<int> in_gemm;
  for (const auto& g : plan.gemms) in_gemm.insert(g.ops.front());
  for (const ir::OpCall* op : plan.program.ops()) {
    if (preference_of(*op) == Preference::kGemm) {
      EXPECT_TRUE(in_gemm.count(op->id)) << "op " << op->id << " missed pass 1";
    }
  }
}

TEST(PreferenceOf, Levels) {
  ir::OpCall op;
  op.kind = OpKind::kTypedLinear;
  EXPECT_EQ(preference_of(op), Preference::kGemm);
  op.kind = OpKind::kOuterProd;
  EXPECT_EQ(preference_of(op), Preference::kGemm);
  op.kind = OpKind::kDotProd;
  EXPECT_EQ(preference_of(op), Preference::kTraversal);
  op.kind = OpKind::kAccumulateSum;
  EXPECT_EQ(preference_of(op), Preference::kTraversal);
  op.kind = OpKind::kReshape;
  EXPECT_EQ(preference_of(op), Preference::kFallback);
  op.kind = OpKind::kConcat;
  EXPECT_EQ(preference_of(op), Preference::kFallback);
  EXPECT_GT(Preference::kGemm, Preference::kTraversal);
  EXPECT_GT(Preference::kTraversal, Preference::kFallback);
}

TEST(Lower, SingleLinearIsOneGemm) {
  ir::ProgramBuilder b("single");
  b.input("x", ir::Role::kNode, 3).weight("W", ir::WeightIndex::kEdgeType, 3, 3);
  b.begin(ir::ScopeKind::kEdges);
  b.linear("m", ir::src("x"), ir::weight("W", ir::TypeSel::kEdgeType));
  b.end();
  b.mark_output("m");
  const KernelPlan plan = lower(b.build());
  EXPECT_EQ(plan.gemms.size(), 1u);
  EXPECT_TRUE(plan.traversals.empty());
  EXPECT_TRUE(plan.fallback.empty());
  EXPECT_EQ(plan.gemms[0].kid, 1);
}

TEST(Lower, SingleReshapeFallsBack) {
  ir::ProgramBuilder b("reshape");
  b.input("x", ir::Role::kNode, 3);
  b.begin(ir::ScopeKind::kDstNodes);
  b.reshape("r", ir::node("x"));
  b.end();
  b.mark_output("r");
  const KernelPlan plan = lower(b.build());
  EXPECT_EQ(plan.instance_count(), 0u);
  ASSERT_EQ(plan.fallback.size(), 1u);
  EXPECT_FALSE(plan.fallback[0].reason.empty());
  EXPECT_EQ(plan.step_name(plan.schedule.at(0)), "fallback_0");
}

TEST(Lower, RgatVanillaShape) {
  const KernelPlan plan = lower(zoo::build_rgat({8, 8}));
  EXPECT_EQ(plan.gemms.size(), 3u);
  EXPECT_EQ(plan.traversals.size(), 3u);
  EXPECT_TRUE(plan.fallback.empty());
  // msg * attn is absorbed into its GEMM; msg never reaches memory.
  const auto& msg = plan.gemms[2];
  EXPECT_EQ(msg.ops, (std::vector<int>{9, 10}));
  ASSERT_TRUE(msg.per_row_scalar);
  EXPECT_EQ(msg.per_row_scalar->var, "attn");
  EXPECT_EQ(msg.internal, std::vector<std::string>{"msg"});
  EXPECT_EQ(plan.traversals[0].ops(), (std::vector<int>{1, 3, 4, 5, 6, 7}));
  EXPECT_EQ(plan.traversals[0].internal,
            (std::vector<std::string>{"att", "atts", "attt", "s"}));
}

TEST(Lower, KidsFollowPlanOrder) {
  for (Model m : kModels) {
    LowerOptions o;
    o.first_kid = 5;
    const KernelPlan plan = lower(zoo::build_model(m, {4, 4}), o);
    std::set<int> kids;
    for (const auto& g : plan.gemms) kids.insert(g.kid);
    for (const auto& t : plan.traversals) kids.insert(t.kid);
    EXPECT_EQ(kids.size(), plan.instance_count());
    EXPECT_EQ(*kids.begin(), 5);
    EXPECT_EQ(*kids.rbegin(), 4 + static_cast<int>(plan.instance_count()));
  }
}

TEST(CanFuseGemm, ScalarConsumerInSameLoop) {
  const ir::Program p = ir::fuse_loops(ir::canonicalize_loops(zoo::build_rgat({4, 4})));
  const intra::GemmInstance g =
      intra::specialize_gemm(p, p.op(9), Layout::kVanilla, Adjacency::kCoo, {});
  EXPECT_TRUE(can_fuse_gemm(p, g, p.op(10)));
  EXPECT_FALSE(can_fuse_gemm(p, g, p.op(11)));  // accumulate, not a multiply
  const intra::GemmInstance compact =
      intra::specialize_gemm(p, p.op(9), Layout::kCompact, Adjacency::kCoo, {});
  EXPECT_FALSE(can_fuse_gemm(p, compact, p.op(10)));
}

TEST(CanFuseGemm, RejectsOtherLoopsAndVectorOperands) {
  ir::ProgramBuilder b("split");
  b.input("x", ir::Role::kNode, 2)
      .input("ew", ir::Role::kEdge, 1)
      .input("ev", ir::Role::kEdge, 2)
      .weight("W", ir::WeightIndex::kEdgeType, 2, 2);
  b.begin(ir::ScopeKind::kEdges);
  b.linear("m", ir::src("x"), ir::weight("W", ir::TypeSel::kEdgeType));
  b.binary(ir::BinaryFn::kMul, "v", ir::edge("m"), ir::edge("ev"));
  b.binary(ir::BinaryFn::kAdd, "a", ir::edge("m"), ir::edge("ev"));
  b.end();
  b.begin(ir::ScopeKind::kEdges);
  b.binary(ir::BinaryFn::kMul, "r", ir::edge("m"), ir::edge("ew"));
  b.end();
  b.mark_output("v").mark_output("a").mark_output("r");
  const ir::Program p = b.build();
  const intra::GemmInstance g =
      intra::specialize_gemm(p, p.op(0), Layout::kVanilla, Adjacency::kCoo, {});
  EXPECT_FALSE(can_fuse_gemm(p, g, p.op(1)));  // vector operand
  EXPECT_FALSE(can_fuse_gemm(p, g, p.op(2)));  // add
  EXPECT_FALSE(can_fuse_gemm(p, g, p.op(3)));  // different loop
}

TEST(CanFuseTraversal, AggregationBarrier) {
  const ir::Program p = ir::fuse_loops(ir::canonicalize_loops(zoo::build_rgat({4, 4})));
  // The first edge loop ends with att_sum += ex.
  const intra::TraversalInstance first =
      intra::specialize_traversal(p, {5, 6, 7}, Layout::kVanilla, Adjacency::kCoo);
  const intra::TraversalInstance second =
      intra::specialize_traversal(p, {10}, Layout::kVanilla, Adjacency::kCoo);
  EXPECT_FALSE(can_fuse_traversal(p, first, p.op(8)));  // other loop
  EXPECT_TRUE(can_fuse_traversal(p, first, p.op(4)));   // same loop, independent
  EXPECT_TRUE(can_fuse_traversal(p, second, p.op(8)));  // att_sum finalized earlier
  EXPECT_TRUE(can_fuse_traversal(p, second, p.op(11)));

  // Within one loop, a value aggregated by the instance cannot be read.
  ir::ProgramBuilder b("barrier");
  b.input("z", ir::Role::kEdge, 1).input("y", ir::Role::kNode, 1);
  b.begin(ir::ScopeKind::kEdges);
  b.unary(ir::UnaryFn::kExp, "ex", ir::edge("z"));
  b.accumulate(ir::dst("sum"), ir::edge("ex"));
  b.binary(ir::BinaryFn::kMul, "r", ir::edge("ex"), ir::src("y"));
  b.end();
  b.mark_output("sum").mark_output("r");
  const ir::Program q = b.build();
  const intra::TraversalInstance t =
      intra::specialize_traversal(q, {0, 1}, Layout::kVanilla, Adjacency::kCoo);
  EXPECT_TRUE(can_fuse_traversal(q, t, q.op(2)));
}

TEST(Lower, PartitionAndPreferenceForZoo) {
  for (Model m : kModels) {
    for (bool reorder : {false, true}) {
      for (Layout l : {Layout::kVanilla, Layout::kCompact}) {
        for (Adjacency a : {Adjacency::kCoo, Adjacency::kCsr}) {
          ir::Program p = zoo::build_model(m, {8, 8});
          if (reorder) p = ir::reorder_linear_ops(p);
          const KernelPlan plan = lower(p, options(l, a));
          SCOPED_TRACE(std::string(zoo::to_string(m)) + (reorder ? " reorder" : ""));
          expect_exact_partition(p, plan);
          expect_gemm_ops_in_gemms(plan);
        }
      }
    }
  }
}

TEST(Lower, PartitionForBackwardPrograms) {
  for (Model m : kModels) {
    const ir::Program b = ir::derive_backward(zoo::build_model(m, {4, 4}));
    const KernelPlan plan = lower(b);
    expect_exact_partition(b, plan);
    expect_gemm_ops_in_gemms(plan);
    std::size_t outer = 0;
    for (const auto& g : plan.gemms) outer += g.outer ? 1 : 0;
    EXPECT_GT(outer, 0u);
  }
}

TEST(Lower, PartitionForRandomPrograms) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const ir::Program p = testing::random_program(seed);
    for (Layout l : {Layout::kVanilla, Layout::kCompact}) {
      const KernelPlan plan = lower(p, options(l, Adjacency::kCoo));
      SCOPED_TRACE("seed " + std::to_string(seed));
      expect_exact_partition(p, plan);
      expect_gemm_ops_in_gemms(plan);
    }
  }
}

TEST(Lower, Deterministic) {
  for (Model m : kModels) {
    const ir::Program p = zoo::build_model(m, {8, 8});
    EXPECT_EQ(to_text(lower(p, options(Layout::kCompact))),
              to_text(lower(p, options(Layout::kCompact))));
  }
}

TEST(PlanGoldens, ForwardAndBackward) {
  for (const auto& c : testing::plan_cases()) {
    EXPECT_EQ(testing::check_golden(c.golden, testing::plan_text(c.plan)), "");
  }
}

}  // namespace
}  // namespace rgnnc::lowering
