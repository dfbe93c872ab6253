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

// Kernel text emission in the dialect of docs/kernel-dialect.md, and the
// bundle (manifest + one file per kernel) written by `rgnnc compile`.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rgnnc/interp.h"
#include "rgnnc/lowering.h"

namespace rgnnc::codegen {

std::string emit_gemm(const intra::GemmInstance& g, const ir::Program& p);
std::string emit_traversal(const intra::TraversalInstance& t, const ir::Program& p);

struct KernelText {
  std::string name;  // gemm_<kid> / traversal_<kid>
  int kid = 0;
  bool backward = false;
  std::string text;
};

struct Bundle {
  std::vector<KernelText> kernels;  // ordered by kid
  std::vector<PreprocessStep> preprocessing;
  std::string manifest;  // JSON text
};

// Backward kernels must use kids disjoint from the forward plan's; they are
// paired with the forward instance whose ops they are adjoints of.
Bundle emit_plan(const lowering::KernelPlan& plan,
                 const lowering::KernelPlan* backward = nullptr);

// <dir>/manifest.json and <dir>/kernels/<name>.k
void write_bundle(const Bundle& b, const std::filesystem::path& dir);

}  // namespace rgnnc::codegen
