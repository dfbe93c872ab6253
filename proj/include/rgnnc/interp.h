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

// Reference execution of inter-op programs and of lowered kernel plans.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rgnnc/ir.h"
#include "rgnnc/lowering.h"
#include "rgnnc/tensor.h"

namespace rgnnc {

enum class PreprocessKind { kSortEdgesByType, kCooToCsr, kBuildCompactIndex, kTranspose };

struct PreprocessStep {
  PreprocessKind kind = PreprocessKind::kSortEdgesByType;
  std::string weight;  // kTranspose only

  std::string name() const;  // "SortEdgesByType", "Transpose(W)", ...
  bool operator==(const PreprocessStep&) const = default;
};

// Host-side steps a plan relies on, in execution order.
std::vector<PreprocessStep> collect_preprocessing(const lowering::KernelPlan& plan);

// Name under which Transpose(W) binds the transposed weight.
std::string transposed_name(std::string_view weight);

// Sorting permutes every vanilla edgewise tensor along with the edges and
// drops derived structures that depended on the old order.
void apply_preprocessing(Environment& env, const std::vector<PreprocessStep>& steps);

// Throws Error naming the first step the environment lacks.
void check_preprocessing(const Environment& env, const std::vector<PreprocessStep>& steps);

namespace interp {

// Number of slices a weight declaration has on this graph.
Index slice_count(const ir::TensorDecl& d, const GraphContext& g);

// A zero tensor shaped for `d`; edgewise tensors use `layout`.
Tensor make_tensor(const ir::TensorDecl& d, const GraphContext& g,
                   Layout layout = Layout::kVanilla);

// Throws Error when `t` cannot hold `d` on this graph.
void check_shape(const ir::TensorDecl& d, const Tensor& t, const GraphContext& g);

// Literal, serial execution. Inputs must be bound; every other declared
// variable is (re)allocated as zeros.
Environment run_forward(const ir::Program& p, Environment env);

// Executes the plan's schedule with the parallel kernels. The plan's
// preprocessing must already have been applied.
Environment run_plan(const lowering::KernelPlan& plan, Environment env);

// Binds every input of `p` that is not yet bound to values uniform in
// [lo, hi), drawn in declaration order.
void bind_random_inputs(const ir::Program& p, Environment& env, std::uint64_t seed,
                        double lo = -1.0, double hi = 1.0);

// Binds every gradient seed input (d_<output>) of a backward program to ones.
void bind_gradient_seeds(const ir::Program& backward, Environment& env);

// Sum of every element of every declared output.
double output_sum(const ir::Program& p, const Environment& env);

// Central differences of output_sum with respect to input `param`.
Tensor finite_diff_grad(const ir::Program& p, const Environment& env,
                        const std::string& param, double h = 1e-6);

// Central difference for a single element of `param`.
double finite_diff_element(const ir::Program& p, const Environment& env,
                           const std::string& param, std::size_t element,
                           double h = 1e-6);

// max over elements of |a - b| / max(1, |b|); throws on shape mismatch.
double max_relative_error(const Tensor& a, const Tensor& b);

struct GradientCheck {
  std::string param;
  std::size_t checked = 0;  // elements compared
  double max_error = 0.0;   // relative, as in max_relative_error
};

// Compares derive_backward gradients of every requires_grad input against
// central differences. With max_samples > 0 only that many evenly spaced
// elements per input are differenced.
std::vector<GradientCheck> check_gradients(const ir::Program& p, const Environment& env,
                                           double h = 1e-6, std::size_t max_samples = 0);

}  // namespace interp
}  // namespace rgnnc
