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

// Inter-operator IR.
//
// A program is a sequence of graph scopes (edge loops, node loops with
// optional nested neighbor loops) holding row-level operator calls. Tensor
// variables are only associated with nodes, edges, or per-type weights; how
// they are laid out in memory is decided later, during lowering.
//
// Every variable is either assigned exactly once or only accumulated into
// (AccumulateSum / OuterProd); accumulated variables start at zero.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rgnnc/common.h"

namespace rgnnc::ir {

enum class Role { kNode, kEdge, kWeight };

// What the slices of a weight tensor are indexed by.
enum class WeightIndex { kSingle, kEdgeType, kNodeType };

struct TensorDecl {
  std::string name;
  Role role = Role::kNode;
  Index cols = 1;         // feature width; for weights the slice width
  Index weight_rows = 0;  // weights only: rows of each slice
  WeightIndex weight_index = WeightIndex::kSingle;
  bool input = false;
  bool output = false;
  bool requires_grad = false;

  bool is_weight_vector() const {
    return role == Role::kWeight && weight_rows == 1;
  }
  bool operator==(const TensorDecl&) const = default;
};

// How an operand reaches its data from the current loop iteration.
//   kEdge   e["x"]          kSrc  e.src["x"]     kDst  e.dst["x"]
//   kNode   n["x"]          kWeight  W[sel]      kConst  literal
enum class Access { kEdge, kSrc, kDst, kNode, kWeight, kConst };

// Slice selector for weight operands: W[e.etype], W[e.src.ntype], ...
enum class TypeSel { kNone, kEdgeType, kSrcNodeType, kDstNodeType, kNodeType };

struct Operand {
  Access access = Access::kConst;
  std::string var;
  TypeSel sel = TypeSel::kNone;
  bool transposed = false;
  double value = 0.0;

  bool is_data() const {
    return access == Access::kEdge || access == Access::kSrc ||
           access == Access::kDst || access == Access::kNode;
  }
  bool operator==(const Operand&) const = default;
};

Operand edge(std::string var);
Operand src(std::string var);
Operand dst(std::string var);
Operand node(std::string var);
Operand weight(std::string var, TypeSel sel = TypeSel::kNone,
               bool transposed = false);
Operand constant(double value);

enum class OpKind {
  kTypedLinear,
  kOuterProd,
  kDotProd,
  kUnary,
  kBinary,
  kAccumulateSum,
  kReshape,
  kConcat,
  kWeightProduct,
};

// kLeakyReluGrad is the derivative mask of leakyrelu; only derive_backward
// emits it.
enum class UnaryFn { kIdentity, kExp, kLeakyRelu, kLeakyReluGrad };
enum class BinaryFn { kAdd, kSub, kMul, kDiv };

inline constexpr double kDefaultLeakyReluSlope = 0.2;

struct OpCall {
  int id = -1;
  OpKind kind = OpKind::kUnary;
  UnaryFn unary = UnaryFn::kIdentity;
  BinaryFn binary = BinaryFn::kAdd;
  double slope = kDefaultLeakyReluSlope;
  std::vector<Operand> args;
  // Assigned row for most ops; the += target for kAccumulateSum and
  // kOuterProd; the whole weight for kWeightProduct.
  Operand result;
  int adjoint_of = -1;  // forward op id, set by derive_backward

  bool accumulates() const {
    return kind == OpKind::kAccumulateSum || kind == OpKind::kOuterProd;
  }
  bool operator==(const OpCall&) const = default;
};

enum class ScopeKind {
  kEdges,          // g.edges()
  kDstNodes,       // g.dst_nodes()
  kSrcNodes,       // g.src_nodes()
  kIncomingEdges,  // n.incoming_edges()
  kOutgoingEdges,  // n.outgoing_edges()
};

bool iterates_edges(ScopeKind kind);
bool iterates_nodes(ScopeKind kind);

struct Stmt {
  bool is_scope = false;
  OpCall op;                          // when !is_scope
  ScopeKind scope = ScopeKind::kEdges;  // when is_scope
  std::vector<Stmt> body;

  static Stmt of_op(OpCall op);
  static Stmt of_scope(ScopeKind kind, std::vector<Stmt> body = {});
  bool operator==(const Stmt&) const = default;
};

struct Program {
  std::string name;
  std::vector<TensorDecl> decls;
  std::vector<Stmt> body;
  int next_op_id = 0;

  const TensorDecl* find(std::string_view var) const;
  TensorDecl* find(std::string_view var);
  const TensorDecl& decl(std::string_view var) const;  // throws if absent
  // All op calls in program order.
  std::vector<const OpCall*> ops() const;
  const OpCall& op(int id) const;  // throws if absent
  std::vector<std::string> outputs() const;
  std::vector<std::string> inputs() const;

  bool operator==(const Program&) const = default;
};

// Width (number of columns) an operand contributes to a row computation.
Index operand_width(const Program& p, const Operand& o);

// Throws Error naming the offending statement or variable.
void validate(const Program& p);

// Deterministic text form; variables are renamed v0, v1, ... by
// declaration order.
std::string to_text(const Program& p);

std::string_view to_string(OpKind k);
std::string_view to_string(UnaryFn f);
std::string_view to_string(BinaryFn f);
std::string_view to_string(ScopeKind k);
std::string_view to_string(TypeSel s);
std::string_view to_string(Role r);

// Builds programs scope by scope. Result variables are declared on first
// definition with widths inferred from the operands.
class ProgramBuilder {
 public:
  explicit ProgramBuilder(std::string name);

  ProgramBuilder& input(std::string name, Role role, Index cols,
                        bool requires_grad = true);
  ProgramBuilder& weight(std::string name, WeightIndex index, Index rows,
                         Index cols, bool requires_grad = true);
  ProgramBuilder& mark_output(std::string name);

  void begin(ScopeKind kind);
  void end();

  std::string linear(std::string result, Operand x, Operand w);
  std::string dot(std::string result, Operand a, Operand b);
  std::string unary(UnaryFn fn, std::string result, Operand x,
                    double slope = kDefaultLeakyReluSlope);
  std::string binary(BinaryFn fn, std::string result, Operand a, Operand b);
  std::string reshape(std::string result, Operand x);
  std::string concat(std::string result, Operand a, Operand b);
  void accumulate(Operand target, Operand value);
  void outer(Operand target, Operand a, Operand b);
  // Top-level only.
  std::string weight_product(std::string result, Operand w_matrix,
                             Operand w_vector);

  Program build() const;  // validates

 private:
  std::string define(OpCall op, std::string result, Index width);
  std::vector<Stmt>& current();
  ScopeKind innermost() const;

  Program program_;
  std::vector<std::size_t> open_;  // index path of the open scopes
};

}  // namespace rgnnc::ir
