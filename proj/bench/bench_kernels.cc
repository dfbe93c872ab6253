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

// Parallel kernels against their serial references, and a whole RGAT plan
// against the interpreter.

#include <benchmark/benchmark.h>

#include <random>

#include "rgnnc/interp.h"
#include "rgnnc/kernels.h"
#include "rgnnc/lowering.h"
#include "rgnnc/zoo.h"

namespace {

using namespace rgnnc;

struct GemmFixture {
  HeteroGraph g;
  std::vector<double> x, w, y;
  kernels::SegmentGemm problem;

  explicit GemmFixture(Index d) {
    g = sort_edges_by_type(generate_synthetic({{2000, 2000}, 4, 40000}, 7));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    x.resize(static_cast<std::size_t>(g.num_nodes() * d));
    w.resize(static_cast<std::size_t>(4 * d * d));
    y.assign(static_cast<std::size_t>(g.num_edges() * d), 0.0);
    for (double& v : x) v = u(rng);
    for (double& v : w) v = u(rng);
    problem.rows = g.num_edges();
    problem.k = problem.n = d;
    problem.x = {x.data(), d, g.src.data()};
    problem.w = w.data();
    problem.slices = 4;
    problem.segment_ptr = g.etype_ptr.data();
    problem.y = y.data();
  }
};

void BM_SegmentGemmParallel(benchmark::State& state) {
  GemmFixture f(state.range(0));
  intra::GemmSchedule s;
  s.coarsening = static_cast<int>(state.range(1));
  for (auto _ : state) {
    kernels::segment_gemm(f.problem, s);
    benchmark::DoNotOptimize(f.y.data());
  }
}
BENCHMARK(BM_SegmentGemmParallel)->Args({32, 1})->Args({64, 1})->Args({64, 2})->Args({64, 4});

void BM_SegmentGemmReference(benchmark::State& state) {
  GemmFixture f(state.range(0));
  for (auto _ : state) {
    kernels::reference::segment_gemm(f.problem);
    benchmark::DoNotOptimize(f.y.data());
  }
}
BENCHMARK(BM_SegmentGemmReference)->Arg(32)->Arg(64);

void BM_OuterParallel(benchmark::State& state) {
  GemmFixture f(32);
  std::vector<double> grad(f.w.size(), 0.0);
  kernels::OuterAccumulate o{f.problem.rows, 32, 32, f.problem.x, f.problem.x,
                             grad.data(), f.g.etype_ptr.data(), nullptr};
  for (auto _ : state) {
    if (state.range(0)) kernels::outer_accumulate(o);
    else kernels::reference::outer_accumulate(o);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_OuterParallel)->Arg(1)->Arg(0);

void BM_RgatPlanVersusInterpreter(benchmark::State& state) {
  const ir::Program p = zoo::build_rgat({32, 32});
  const auto plan = lowering::lower(p, {});
  Environment env = make_environment(generate_synthetic({{500, 500}, 3, 8000}, 11));
  apply_preprocessing(env, collect_preprocessing(plan));
  zoo::bind_model_inputs(p, env, 5);
  for (auto _ : state) {
    Environment out = state.range(0) ? interp::run_plan(plan, env) : interp::run_forward(p, env);
    benchmark::DoNotOptimize(out.tensors.size());
  }
}
BENCHMARK(BM_RgatPlanVersusInterpreter)->Arg(1)->Arg(0);

}  // namespace

BENCHMARK_MAIN();
