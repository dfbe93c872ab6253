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

// Host kernels for GEMM and traversal instances (OpenMP), plus serial
// references with the same per-element summation order.

#pragma once

#include "rgnnc/intra.h"
#include "rgnnc/ir.h"
#include "rgnnc/tensor.h"

namespace rgnnc::kernels {

// Row r lives at base + (gather ? gather[r] : r) * stride. A stride of 0
// makes every row alias base (literals).
struct RowSource {
  const double* base = nullptr;
  Index stride = 0;
  const Index* gather = nullptr;

  const double* at(Index r) const {
    return base + (gather ? gather[r] : r) * stride;
  }
};

// y[r] = x[r] * W[type(r)] (* scale[r]). Each weight slice is k x n.
// Types come from segment_ptr (rows of slice t are
// [segment_ptr[t], segment_ptr[t+1])), from row_slice[r], or are all 0.
struct SegmentGemm {
  Index rows = 0;
  Index k = 0;
  Index n = 0;
  RowSource x;
  const double* w = nullptr;
  Index slices = 1;
  const Index* segment_ptr = nullptr;
  const Index* row_slice = nullptr;
  const double* scale_base = nullptr;  // optional per-row scalar
  RowSource scale;
  double* y = nullptr;  // rows x n, dense
};

// W[type(r)] += a[r]^T b[r] for every row r. Slices are k x n.
struct OuterAccumulate {
  Index rows = 0;
  Index k = 0;
  Index n = 0;
  RowSource a;
  RowSource b;
  double* w = nullptr;
  const Index* segment_ptr = nullptr;
  const Index* row_slice = nullptr;
};

void segment_gemm(const SegmentGemm& g, const intra::GemmSchedule& schedule);
void outer_accumulate(const OuterAccumulate& o);

namespace reference {
void segment_gemm(const SegmentGemm& g);
void outer_accumulate(const OuterAccumulate& o);
}  // namespace reference

// Execute one instance of a plan against an environment whose tensors are
// already allocated.
void run_gemm(const intra::GemmInstance& g, const ir::Program& p, Environment& env);
void run_traversal(const intra::TraversalInstance& t, const ir::Program& p,
                   Environment& env);

}  // namespace rgnnc::kernels
