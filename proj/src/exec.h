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

// Row-level evaluation shared by the interpreter and the traversal kernels.
// Operands are bound to tensors once; evaluation itself never throws, so it
// is safe inside parallel regions.

#pragma once

#include <vector>

#include "rgnnc/ir.h"
#include "rgnnc/tensor.h"

namespace rgnnc::exec {

// One loop iteration. Edge iterations carry the resolved endpoints and
// type; node iterations (and neighbor loops) carry the node.
struct Point {
  Index edge = -1;
  Index src = -1;
  Index dst = -1;
  Index etype = -1;
  Index node = -1;
};

struct Ref {
  ir::Access access = ir::Access::kConst;
  ir::TypeSel sel = ir::TypeSel::kNone;
  bool transposed = false;
  double value = 0.0;
  Tensor* tensor = nullptr;
  Index cols = 1;
};

struct BoundOp {
  const ir::OpCall* op = nullptr;
  std::vector<Ref> args;
  Ref result;
  Index width = 1;  // row width of the computed value
};

class Engine {
 public:
  explicit Engine(const GraphContext& g) : g_(g) {}

  // Throws Error when a variable is unbound or a compact tensor is read
  // without a compact index.
  BoundOp bind(const ir::Program& p, const ir::OpCall& op, Environment& env) const;

  Point edge_point(Index e) const;

  Index row(const Ref& r, const Point& pt) const;
  Index slice(const Ref& r, const Point& pt) const;
  const double* data(const Ref& r, const Point& pt) const;

  // Row value of a row-producing op (everything but OuterProd and
  // WeightProduct). With hoisted = false every element re-resolves its
  // operand addresses.
  void compute(const BoundOp& b, const Point& pt, double* out,
               bool hoisted = true) const;
  // Assigns or accumulates `value` into the result row.
  void store(const BoundOp& b, const Point& pt, const double* value) const;
  // compute + store; also handles OuterProd.
  void apply(const BoundOp& b, const Point& pt, double* scratch,
             bool hoisted = true) const;
  void weight_product(const BoundOp& b) const;

  const GraphContext& graph() const { return g_; }

 private:
  const GraphContext& g_;
};

// Largest row width any op of `ops` produces (scratch size).
Index max_width(const std::vector<BoundOp>& ops);

}  // namespace rgnnc::exec
