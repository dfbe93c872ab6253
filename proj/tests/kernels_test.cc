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

#include "rgnnc/kernels.h"

#include <gtest/gtest.h>

#include <vector>

#include "test_support.h"

namespace rgnnc::kernels {
namespace {

using testing::Rng;

std::vector<double> random_values(Rng& rng, Index n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Owns the buffers behind a SegmentGemm.
struct GemmCase {
  std::vector<double> x, w, scale;
  std::vector<Index> gather, segment_ptr, row_slice;
  SegmentGemm g;
};

enum class Typing { kSegments, kPerRow, kSingle };

GemmCase make_gemm_case(std::uint64_t seed, Typing typing, bool gather, bool scaled) {
  Rng rng(seed);
  GemmCase c;
  const Index rows = rng.between(0, 70);
  const Index src_rows = rng.between(1, 20);
  const Index k = rng.between(1, 9);
  const Index n = rng.between(1, 9);
  const Index slices = typing == Typing::kSingle ? 1 : rng.between(1, 4);
  c.x = random_values(rng, (gather ? src_rows : rows) * k + 1);
  c.w = random_values(rng, slices * k * n);
  c.g.rows = rows;
  c.g.k = k;
  c.g.n = n;
  c.g.slices = slices;
  c.g.w = c.w.data();
  c.g.x = {c.x.data(), k, nullptr};
  if (gather) {
    for (Index r = 0; r < rows; ++r) c.gather.push_back(rng.below(src_rows));
    c.g.x.gather = c.gather.data();
  }
  if (typing == Typing::kSegments) {
    c.segment_ptr.assign(static_cast<std::size_t>(slices + 1), 0);
    for (Index r = 0; r < rows; ++r) ++c.segment_ptr[rng.below(slices) + 1];
    for (Index t = 0; t < slices; ++t) c.segment_ptr[t + 1] += c.segment_ptr[t];
    c.g.segment_ptr = c.segment_ptr.data();
  } else if (typing == Typing::kPerRow) {
    for (Index r = 0; r < rows; ++r) c.row_slice.push_back(rng.below(slices));
    c.g.row_slice = c.row_slice.data();
  }
  if (scaled) {
    c.scale = random_values(rng, rows + 1);
    c.g.scale = {c.scale.data(), 1, nullptr};
    c.g.scale_base = c.scale.data();
  }
  return c;
}

std::vector<double> run_parallel(GemmCase& c, const intra::GemmSchedule& s) {
  std::vector<double> y(static_cast<std::size_t>(c.g.rows * c.g.n), -7.0);
  SegmentGemm g = c.g;
  g.y = y.data();
  segment_gemm(g, s);
  return y;
}

std::vector<double> run_reference(GemmCase& c) {
  std::vector<double> y(static_cast<std::size_t>(c.g.rows * c.g.n), -7.0);
  SegmentGemm g = c.g;
  g.y = y.data();
  reference::segment_gemm(g);
  return y;
}

TEST(SegmentGemm, ParallelEqualsReferenceExactly) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    for (Typing typing : {Typing::kSegments, Typing::kPerRow, Typing::kSingle}) {
      for (bool gather : {false, true}) {
        for (bool scaled : {false, true}) {
          GemmCase c = make_gemm_case(seed, typing, gather, scaled);
          const std::vector<double> expected = run_reference(c);
          for (int tile : {1, 4, 16, 32}) {
            for (int coarsen : {1, 2, 4}) {
              intra::GemmSchedule s;
              s.tile_width = tile;
              s.coarsening = coarsen;
              EXPECT_EQ(run_parallel(c, s), expected)
                  << "seed " << seed << " tile " << tile << " coarsen " << coarsen;
            }
          }
        }
      }
    }
  }
}

TEST(SegmentGemm, ReferenceMatchesNaiveProduct) {
  GemmCase c = make_gemm_case(11, Typing::kSegments, true, true);
  const std::vector<double> y = run_reference(c);
  for (Index t = 0; t < c.g.slices; ++t) {
    for (Index r = c.segment_ptr[t]; r < c.segment_ptr[t + 1]; ++r) {
      for (Index j = 0; j < c.g.n; ++j) {
        double acc = 0.0;
        for (Index q = 0; q < c.g.k; ++q) {
          acc += c.x[c.gather[r] * c.g.k + q] * c.w[(t * c.g.k + q) * c.g.n + j];
        }
        EXPECT_NEAR(y[r * c.g.n + j], acc * c.scale[r], 1e-14);
      }
    }
  }
}

TEST(SegmentGemm, ZeroRowsWriteNothing) {
  std::vector<double> w(4, 1.0);
  double sentinel = 3.0;
  SegmentGemm g;
  g.k = 2;
  g.n = 2;
  g.w = w.data();
  g.y = &sentinel;
  segment_gemm(g, {});
  EXPECT_EQ(sentinel, 3.0);
}

struct OuterCase {
  std::vector<double> a, b;
  std::vector<Index> segment_ptr, row_slice;
  OuterAccumulate o;
};

OuterCase make_outer_case(std::uint64_t seed, bool segments) {
  Rng rng(seed);
  OuterCase c;
  const Index rows = rng.between(0, 80);
  const Index k = rng.between(1, 7);
  const Index n = rng.between(1, 7);
  const Index slices = rng.between(1, 4);
  c.a = random_values(rng, rows * k + 1);
  c.b = random_values(rng, rows * n + 1);
  c.o.rows = rows;
  c.o.k = k;
  c.o.n = n;
  c.o.a = {c.a.data(), k, nullptr};
  c.o.b = {c.b.data(), n, nullptr};
  if (segments) {
    c.segment_ptr.assign(static_cast<std::size_t>(slices + 1), 0);
    for (Index r = 0; r < rows; ++r) ++c.segment_ptr[rng.below(slices) + 1];
    for (Index t = 0; t < slices; ++t) c.segment_ptr[t + 1] += c.segment_ptr[t];
    c.o.segment_ptr = c.segment_ptr.data();
  } else {
    for (Index r = 0; r < rows; ++r) c.row_slice.push_back(rng.below(slices));
    c.o.row_slice = c.row_slice.data();
  }
  return c;
}

TEST(OuterAccumulate, ParallelEqualsReferenceExactly) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    for (bool segments : {false, true}) {
      OuterCase c = make_outer_case(seed, segments);
      const Index size = 4 * c.o.k * c.o.n;
      std::vector<double> parallel(static_cast<std::size_t>(size), 0.5);
      std::vector<double> serial = parallel;
      OuterAccumulate o = c.o;
      o.w = parallel.data();
      outer_accumulate(o);
      o.w = serial.data();
      reference::outer_accumulate(o);
      EXPECT_EQ(parallel, serial) << "seed " << seed;
    }
  }
}

TEST(OuterAccumulate, AccumulatesIntoExistingValues) {
  std::vector<double> a{1.0, 2.0};
  std::vector<double> b{3.0};
  std::vector<double> w{10.0, 20.0};
  OuterAccumulate o;
  o.rows = 1;
  o.k = 2;
  o.n = 1;
  o.a = {a.data(), 2, nullptr};
  o.b = {b.data(), 1, nullptr};
  o.w = w.data();
  outer_accumulate(o);
  EXPECT_EQ(w, (std::vector<double>{13.0, 26.0}));
}

TEST(RowSource, GatherAndBroadcast) {
  std::vector<double> base{1, 2, 3, 4, 5, 6};
  std::vector<Index> gather{2, 0};
  RowSource dense{base.data(), 2, nullptr};
  RowSource gathered{base.data(), 2, gather.data()};
  RowSource literal{base.data(), 0, nullptr};
  EXPECT_EQ(*dense.at(1), 3.0);
  EXPECT_EQ(*gathered.at(0), 5.0);
  EXPECT_EQ(*gathered.at(1), 1.0);
  EXPECT_EQ(*literal.at(5), 1.0);
}

}  // namespace
}  // namespace rgnnc::kernels
