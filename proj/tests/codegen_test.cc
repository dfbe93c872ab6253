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

#include "rgnnc/codegen.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <algorithm>
#include <set>

#include "dialect_parser.h"
#include "rgnnc/passes.h"
#include "rgnnc/zoo.h"
#include "golden_cases.h"
#include "test_support.h"
#include "json.hpp"

namespace rgnnc::codegen {
namespace {

using lowering::KernelPlan;
using lowering::LowerOptions;
using zoo::Model;

LowerOptions options(Layout l, Adjacency a = Adjacency::kCoo) {
  LowerOptions o;
  o.layout = l;
  o.adjacency = a;
  return o;
}

constexpr Model kModels[] = {Model::kRgcn, Model::kRgat, Model::kHgt};

struct Config {
  Model model;
  Layout layout;
  Adjacency adjacency;
  bool reorder;
  int coarsening;
};

std::vector<Config> all_configs() {
  std::vector<Config> out;
  for (Model m : kModels) {
    for (Layout l : {Layout::kVanilla, Layout::kCompact}) {
      for (Adjacency a : {Adjacency::kCoo, Adjacency::kCsr}) {
        for (bool r : {false, true}) {
          for (int c : {1, 2}) out.push_back({m, l, a, r, c});
        }
      }
    }
  }
  return out;
}

std::string describe(const Config& c) {
  return std::string(zoo::to_string(c.model)) + "_" + std::string(to_string(c.layout)) + "_" +
         std::string(to_string(c.adjacency)) + (c.reorder ? "_reorder" : "") +
         (c.coarsening > 1 ? "_c" + std::to_string(c.coarsening) : "");
}

ir::Program source_of(const Config& c, int d = 8) {
  ir::Program p = zoo::build_model(c.model, {d, d});
  return c.reorder ? ir::reorder_linear_ops(p) : p;
}

KernelPlan plan_of(const ir::Program& p, const Config& c) {
  LowerOptions o;
  o.layout = c.layout;
  o.adjacency = c.adjacency;
  o.gemm.coarsening = c.coarsening;
  return lowering::lower(p, o);
}

KernelPlan backward_plan_of(const KernelPlan& forward, const Config& c) {
  LowerOptions o;
  o.layout = c.layout;
  o.adjacency = c.adjacency;
  o.gemm.coarsening = c.coarsening;
  return testing::backward_plan(c.model, {8, 8}, forward, o);
}

std::set<std::string> f64_params(const dialect::Unit& u) {
  std::set<std::string> out;
  for (const auto& p : u.params) {
    if (p.type == "f64*") out.insert(p.name);
  }
  return out;
}

TEST(CollectPreprocessing, Examples) {
  const KernelPlan compact = lowering::lower(zoo::build_rgat({8, 8}), options(Layout::kCompact));
  const auto steps = collect_preprocessing(compact);
  ASSERT_EQ(steps.size(), 2u);
  EXPECT_EQ(steps[0].name(), "SortEdgesByType");
  EXPECT_EQ(steps[1].name(), "BuildCompactIndex");

  const auto vanilla = collect_preprocessing(lowering::lower(zoo::build_rgat({8, 8})));
  ASSERT_EQ(vanilla.size(), 1u);
  EXPECT_EQ(vanilla[0].kind, PreprocessKind::kSortEdgesByType);

  ir::ProgramBuilder b("empty");
  b.input("x", ir::Role::kNode, 2);
  b.begin(ir::ScopeKind::kDstNodes);
  b.reshape("r", ir::node("x"));
  b.end();
  b.mark_output("r");
  EXPECT_TRUE(collect_preprocessing(lowering::lower(b.build())).empty());
}

TEST(CollectPreprocessing, CsrAndTransposes) {
  const ir::Program rgcn = zoo::build_rgcn({8, 8});
  const Config c{Model::kRgcn, Layout::kVanilla, Adjacency::kCsr, false, 1};
  const KernelPlan fwd = plan_of(rgcn, c);
  std::vector<std::string> names;
  for (const auto& s : collect_preprocessing(backward_plan_of(fwd, c))) {
    names.push_back(s.name());
  }
  EXPECT_EQ(names, (std::vector<std::string>{"SortEdgesByType", "CooToCsr", "Transpose(W)",
                                             "Transpose(W0)"}));
}

TEST(Emit, EveryKernelParses) {
  for (const Config& c : all_configs()) {
    SCOPED_TRACE(describe(c));
    const ir::Program src = source_of(c);
    const KernelPlan fwd = plan_of(src, c);
    const KernelPlan bwd = backward_plan_of(fwd, c);
    const Bundle b = emit_plan(fwd, &bwd);
    EXPECT_EQ(b.kernels.size(), fwd.instance_count() + bwd.instance_count());
    for (const auto& k : b.kernels) {
      dialect::Unit u;
      ASSERT_NO_THROW(u = dialect::parse(k.text)) << k.name << "\n" << k.text;
      EXPECT_EQ(u.kernel, k.name);
    }
  }
}

TEST(Emit, ManifestOperandsMatchKernelParams) {
  for (const Config& c : all_configs()) {
    SCOPED_TRACE(describe(c));
    const ir::Program src = source_of(c);
    const KernelPlan fwd = plan_of(src, c);
    const KernelPlan bwd = backward_plan_of(fwd, c);
    const Bundle b = emit_plan(fwd, &bwd);
    const auto manifest = nlohmann::json::parse(b.manifest);
    ASSERT_EQ(manifest["kernels"].size(), b.kernels.size());
    for (std::size_t i = 0; i < b.kernels.size(); ++i) {
      const auto& entry = manifest["kernels"][i];
      const dialect::Unit u = dialect::parse(b.kernels[i].text);
      EXPECT_EQ(entry["name"], b.kernels[i].name);
      EXPECT_EQ(entry["kid"], b.kernels[i].kid);
      EXPECT_EQ(entry["direction"], b.kernels[i].backward ? "backward" : "forward");
      std::set<std::string> names;
      for (const auto& op : entry["operands"]) {
        const std::string name = op.value("param", op["name"].get<std::string>());
        names.insert(name);
        const dialect::Param* param = u.param(name);
        ASSERT_NE(param, nullptr) << name;
        EXPECT_EQ(param->is_const, op["access"] == "read") << name;
      }
      EXPECT_EQ(names, f64_params(u)) << b.kernels[i].name;
    }
  }
}

TEST(Emit, KidsAreOrderedAndUnique) {
  for (const Config& c : all_configs()) {
    const ir::Program src = source_of(c);
    const KernelPlan fwd = plan_of(src, c);
    const KernelPlan bwd = backward_plan_of(fwd, c);
    const Bundle b = emit_plan(fwd, &bwd);
    for (std::size_t i = 1; i < b.kernels.size(); ++i) {
      EXPECT_LT(b.kernels[i - 1].kid, b.kernels[i].kid) << describe(c);
    }
  }
}

TEST(Emit, DuplicateKidsAreRejected) {
  const ir::Program p = zoo::build_rgcn({4, 4});
  const KernelPlan fwd = lowering::lower(p);
  EXPECT_THROW(emit_plan(fwd, &fwd), Error);
}

TEST(Emit, EmptyPlanHasNoKernels) {
  ir::ProgramBuilder b("empty");
  b.input("x", ir::Role::kNode, 2);
  b.begin(ir::ScopeKind::kDstNodes);
  b.reshape("r", ir::node("x"));
  b.end();
  b.mark_output("r");
  const Bundle bundle = emit_plan(lowering::lower(b.build()));
  EXPECT_TRUE(bundle.kernels.empty());
  const auto manifest = nlohmann::json::parse(bundle.manifest);
  EXPECT_TRUE(manifest["kernels"].empty());
  EXPECT_TRUE(manifest["preprocessing"].empty());
}

TEST(Emit, RgatManifestListsKernels) {
  const Bundle b = emit_plan(lowering::lower(zoo::build_rgat({8, 8})));
  const auto manifest = nlohmann::json::parse(b.manifest);
  EXPECT_EQ(manifest["program"], "rgat");
  std::vector<std::string> names;
  for (const auto& k : manifest["kernels"]) names.push_back(k["name"]);
  EXPECT_EQ(names, (std::vector<std::string>{"gemm_1", "gemm_2", "traversal_3", "traversal_4",
                                             "gemm_5", "traversal_6"}));
}

TEST(Emit, CompactGemmUsesUniqueArrays) {
  const Bundle b = emit_plan(lowering::lower(zoo::build_rgat({8, 8}), options(Layout::kCompact)));
  bool found = false;
  for (const auto& k : b.kernels) {
    if (k.name.rfind("gemm_", 0) != 0) continue;
    const dialect::Unit u = dialect::parse(k.text);
    if (!u.param("unique_row_idx")) continue;
    found = true;
    EXPECT_NE(u.param("unique_etype_ptr"), nullptr);
    const auto& subs = u.subscripted;
    EXPECT_NE(std::find(subs.begin(), subs.end(), "unique_row_idx"), subs.end());
    EXPECT_NE(std::find(subs.begin(), subs.end(), "unique_etype_ptr"), subs.end());
  }
  EXPECT_TRUE(found);
}

TEST(Emit, CsrTraversalSearchesRowPointer) {
  const Bundle b = emit_plan(
      lowering::lower(zoo::build_rgat({8, 8}), options(Layout::kVanilla, Adjacency::kCsr)));
  int edge_kernels = 0;
  for (const auto& k : b.kernels) {
    if (k.name.rfind("traversal_", 0) != 0) continue;
    const dialect::Unit u = dialect::parse(k.text);
    if (!u.param("csr_row_ptr")) continue;
    ++edge_kernels;
    EXPECT_GE(u.count("while"), 1) << k.text;
    const auto& subs = u.subscripted;
    EXPECT_NE(std::find(subs.begin(), subs.end(), "csr_row_ptr"), subs.end());
  }
  EXPECT_GT(edge_kernels, 0);
}

TEST(Emit, CoarseningSplitsThreads) {
  const ir::Program p = zoo::build_rgcn({8, 8});
  LowerOptions o;
  o.gemm.coarsening = 2;
  const KernelPlan two = lowering::lower(p, o);
  const KernelPlan one = lowering::lower(p);
  const std::string t2 = emit_gemm(two.gemms[0], two.program);
  const std::string t1 = emit_gemm(one.gemms[0], one.program);
  EXPECT_NE(t2.find("for @serial q in 0 .. 2"), std::string::npos) << t2;
  EXPECT_NE(t2.find("for @thread t in 0 .. 4"), std::string::npos) << t2;
  EXPECT_NE(t1.find("for @thread t in 0 .. 8"), std::string::npos) << t1;
  EXPECT_EQ(t1.find(" q in "), std::string::npos);
  const auto m2 = nlohmann::json::parse(emit_plan(two).manifest);
  EXPECT_EQ(m2["kernels"][0]["block"], 4);
  EXPECT_EQ(m2["kernels"][0]["coarsening"], 2);
}

TEST(Emit, OddWidthCoarseningGuardsTail) {
  const ir::Program p = zoo::build_rgcn({5, 5});
  LowerOptions o;
  o.gemm.coarsening = 2;
  const KernelPlan plan = lowering::lower(p, o);
  const std::string text = emit_gemm(plan.gemms[0], plan.program);
  const dialect::Unit u = dialect::parse(text);
  EXPECT_GE(u.count("if"), 1) << text;
}

TEST(Emit, Deterministic) {
  for (const Config& c : all_configs()) {
    const ir::Program src = source_of(c);
    const KernelPlan f1 = plan_of(src, c);
    const KernelPlan b1 = backward_plan_of(f1, c);
    const KernelPlan f2 = plan_of(source_of(c), c);
    const KernelPlan b2 = backward_plan_of(f2, c);
    EXPECT_EQ(testing::bundle_text(emit_plan(f1, &b1)), testing::bundle_text(emit_plan(f2, &b2)))
        << describe(c);
  }
}

TEST(Emit, WriteBundleLayout) {
  const auto dir = std::filesystem::temp_directory_path() / "rgnnc_codegen_test_bundle";
  std::filesystem::remove_all(dir);
  const Bundle b = emit_plan(lowering::lower(zoo::build_hgt({4, 4})));
  write_bundle(b, dir);
  EXPECT_EQ(testing::read_file(dir / "manifest.json"), b.manifest);
  for (const auto& k : b.kernels) {
    EXPECT_EQ(testing::read_file(dir / "kernels" / (k.name + ".k")), k.text);
  }
  std::filesystem::remove_all(dir);
}

TEST(BundleGoldens, ForwardAndBackward) {
  for (const auto& c : testing::bundle_cases()) {
    EXPECT_EQ(testing::check_golden(c.golden, testing::bundle_text(c.bundle)), "") << c.golden;
  }
}

TEST(Emit, TensorNamesNeverShadowKernelLocals) {
  ir::ProgramBuilder b("clash");
  b.input("src", ir::Role::kNode, 3)
      .input("e", ir::Role::kEdge, 1)
      .weight("k", ir::WeightIndex::kEdgeType, 3, 3)
      .weight("acc1", ir::WeightIndex::kEdgeType, 1, 3);
  b.begin(ir::ScopeKind::kEdges);
  b.linear("t", ir::src("src"), ir::weight("k", ir::TypeSel::kEdgeType));
  b.dot("row", ir::edge("t"), ir::weight("acc1", ir::TypeSel::kEdgeType));
  b.binary(ir::BinaryFn::kMul, "k_v1", ir::edge("row"), ir::edge("e"));
  b.accumulate(ir::dst("dst"), ir::edge("k_v1"));
  b.end();
  b.mark_output("dst");
  const ir::Program p = b.build();
  for (Adjacency a : {Adjacency::kCoo, Adjacency::kCsr}) {
    const Bundle bundle = emit_plan(lowering::lower(p, options(Layout::kVanilla, a)));
    const auto manifest = nlohmann::json::parse(bundle.manifest);
    for (std::size_t i = 0; i < bundle.kernels.size(); ++i) {
      dialect::Unit u;
      ASSERT_NO_THROW(u = dialect::parse(bundle.kernels[i].text)) << bundle.kernels[i].text;
      std::set<std::string> params;
      for (const auto& op : manifest["kernels"][i]["operands"]) {
        params.insert(op.value("param", op["name"].get<std::string>()));
      }
      EXPECT_EQ(params, f64_params(u));
      EXPECT_EQ(params.count("src"), 0u);
      EXPECT_EQ(params.count("k"), 0u);
    }
  }
}

TEST(Dialect, AcceptsMinimalKernel) {
  const dialect::Unit u = dialect::parse(
      "// k\n"
      "func Id(i64 i) -> i64 {\n  return i;\n}\n"
      "kernel k(i64 n, const f64* x, f64* y) {\n"
      "  for @block i in 0 .. n step 2 {\n"
      "    let v = select(i < n, x[Id(i)], 0.0);\n"
      "    if (v > 1.5e-3) {\n      atomic_add(y[i], -v * 2);\n    } else {\n"
      "      y[i] += max(v, 1);\n    }\n  }\n}\n");
  EXPECT_EQ(u.kernel, "k");
  EXPECT_EQ(u.count("for @block"), 1);
  EXPECT_EQ(u.count("atomic_add"), 1);
  EXPECT_EQ(u.count("call Id"), 1);
  ASSERT_NE(u.param("x"), nullptr);
  EXPECT_TRUE(u.param("x")->is_const);
  EXPECT_EQ(u.param("y")->type, "f64*");
}

TEST(Dialect, RejectsMalformedKernels) {
  const char* bad[] = {
      "kernel k(i64 n) {\n}\n",                                         // no header comment
      "// k\nkernel k(i64 n) {\n  y = 1;\n}\n",                       // undeclared
      "// k\nkernel k(i64 n) {\n  let n = 1;\n}\n",                   // shadows a param
      "// k\nkernel k(f64* y) {\n  y[0] = exp(1, 2);\n}\n",           // arity
      "// k\nkernel k(f64* y) {\n  y[0] = foo(1);\n}\n",              // unknown call
      "// k\nkernel k(f64* y) {\n  for @warp i in 0 .. 1 {\n  }\n}\n",  // loop level
      "// k\nkernel k(f64* y) {\n  atomic_add(y, 1);\n}\n",           // unindexed target
      "// k\nfunc F(i64 i) -> i64 {\n  return q[i];\n}\nkernel k(f64* y) {\n}\n",
      "// k\nkernel k(const i64 n) {\n}\n",                            // const scalar
      "// k\nkernel k(f64* y) {\n  y[0] = 1;\n}\nkernel j() {\n}\n",  // trailing input
      "// k\nkernel k(f64* y) {\n\ty[0] = 1;\n}\n",                   // tab
  };
  for (const char* text : bad) EXPECT_THROW(dialect::parse(text), std::runtime_error) << text;
}

}  // namespace
}  // namespace rgnnc::codegen
