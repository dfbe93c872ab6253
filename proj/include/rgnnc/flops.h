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

// Arithmetic cost model. A multiply-accumulate counts as one multiply and
// one add; exp, leakyrelu and division are reported separately as "other".

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rgnnc/graph.h"
#include "rgnnc/intra.h"
#include "rgnnc/ir.h"

namespace rgnnc::ir {

struct OpFlops {
  int op = -1;
  std::string result;
  OpKind kind = OpKind::kUnary;
  Index rows = 0;
  Index multiplies = 0;
  Index adds = 0;
  Index other = 0;
};

struct FlopReport {
  std::vector<OpFlops> ops;  // program order
  Index multiplies = 0;
  Index adds = 0;
  Index other = 0;

  const OpFlops* find(int op) const;
};

FlopReport count_flops(const Program& p, const GraphStats& stats,
                       Layout layout = Layout::kVanilla);

// Cost of producing `var`: its defining ops plus, transitively, every op
// whose result feeds only the slice.
struct FlopSlice {
  std::vector<int> ops;
  Index multiplies = 0;
  Index adds = 0;
  Index other = 0;
};

FlopSlice variable_cost(const Program& p, const FlopReport& report,
                        std::string_view var);

}  // namespace rgnnc::ir
