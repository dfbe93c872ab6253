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

#include "rgnnc/interp.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "exec.h"
#include "rgnnc/kernels.h"
#include "rgnnc/passes.h"

namespace rgnnc {

using ir::Access;
using ir::OpKind;
using ir::Program;
using ir::ScopeKind;
using ir::Stmt;

// ---------------------------------------------------------------------------
// Preprocessing

std::string PreprocessStep::name() const {
  switch (kind) {
    case PreprocessKind::kSortEdgesByType: return "SortEdgesByType";
    case PreprocessKind::kCooToCsr: return "CooToCsr";
    case PreprocessKind::kBuildCompactIndex: return "BuildCompactIndex";
    case PreprocessKind::kTranspose: return "Transpose(" + weight + ")";
  }
  return "?";
}

std::string transposed_name(std::string_view weight) {
  return std::string(weight) + "^T";
}

std::vector<PreprocessStep> collect_preprocessing(const lowering::KernelPlan& plan) {
  bool sort = false;
  bool csr = false;
  bool compact = false;
  std::set<std::string> transposes;
  for (const auto& g : plan.gemms) {
    if (g.type_mode == intra::TypeMode::kSegments && g.segment_ptr != "ntype_ptr") {
      sort = true;
    }
    if (g.rows == intra::RowSpace::kUniquePairs) compact = true;
    if (g.w_transposed && !g.outer) transposes.insert(g.w);
  }
  for (const auto& t : plan.traversals) {
    if (t.edge_loop && t.adjacency == Adjacency::kCsr) csr = true;
  }
  for (const auto& [var, layout] : plan.layouts) {
    if (layout == Layout::kCompact) compact = true;
  }
  if (compact) sort = true;
  std::vector<PreprocessStep> steps;
  if (sort) steps.push_back({PreprocessKind::kSortEdgesByType, ""});
  if (csr) steps.push_back({PreprocessKind::kCooToCsr, ""});
  if (compact) steps.push_back({PreprocessKind::kBuildCompactIndex, ""});
  for (const auto& w : transposes) steps.push_back({PreprocessKind::kTranspose, w});
  return steps;
}

namespace {

Tensor transpose_slices(const Tensor& w) {
  const Index r = w.slice_rows();
  const Index c = w.cols;
  Tensor t = Tensor::zeros(TensorRole::kWeight, w.slices * c, r, w.slices);
  for (Index s = 0; s < w.slices; ++s) {
    const double* in = w.slice(s);
    double* out = t.slice(s);
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
    }
  }
  return t;
}

}  // namespace

void apply_preprocessing(Environment& env, const std::vector<PreprocessStep>& steps) {
  if (!env.graph) throw Error("environment has no graph");
  for (const auto& step : steps) {
    switch (step.kind) {
      case PreprocessKind::kSortEdgesByType: {
        const HeteroGraph& old = env.graph->graph;
        if (old.is_type_sorted()) break;
        HeteroGraph sorted = sort_edges_by_type(old);
        const Index e = old.num_edges();
        std::vector<Index> old_pos(static_cast<std::size_t>(e));
        for (Index i = 0; i < e; ++i) {
          old_pos[old.original_edge_id.empty() ? i : old.original_edge_id[i]] = i;
        }
        std::vector<Index> perm(static_cast<std::size_t>(e));
        for (Index i = 0; i < e; ++i) {
          perm[i] = old_pos[sorted.original_edge_id.empty() ? i
                                                           : sorted.original_edge_id[i]];
        }
        for (auto& [name, t] : env.tensors) {
          if (t.role != TensorRole::kEdgeVanilla) continue;
          Tensor moved = t;
          for (Index i = 0; i < e; ++i) {
            std::copy(t.row(perm[i]), t.row(perm[i]) + t.cols, moved.row(i));
          }
          t = std::move(moved);
        }
        env.graph = GraphContext::make(std::move(sorted));
        break;
      }
      case PreprocessKind::kCooToCsr: {
        auto ctx = std::make_shared<GraphContext>(*env.graph);
        ctx->csr = build_csr(ctx->graph);
        env.graph = std::move(ctx);
        break;
      }
      case PreprocessKind::kBuildCompactIndex: {
        if (!env.graph->graph.is_type_sorted()) {
          throw Error("BuildCompactIndex needs SortEdgesByType first");
        }
        auto ctx = std::make_shared<GraphContext>(*env.graph);
        ctx->compact = build_compact_index(ctx->graph);
        env.graph = std::move(ctx);
        break;
      }
      case PreprocessKind::kTranspose:
        env.bind(transposed_name(step.weight), transpose_slices(env.at(step.weight)));
        break;
    }
  }
}

void check_preprocessing(const Environment& env, const std::vector<PreprocessStep>& steps) {
  for (const auto& step : steps) {
    bool ok = true;
    switch (step.kind) {
      case PreprocessKind::kSortEdgesByType: ok = env.graph->graph.is_type_sorted(); break;
      case PreprocessKind::kCooToCsr: ok = env.graph->csr.has_value(); break;
      case PreprocessKind::kBuildCompactIndex: ok = env.graph->compact.has_value(); break;
      case PreprocessKind::kTranspose: ok = env.has(transposed_name(step.weight)); break;
    }
    if (!ok) throw Error("missing preprocessing step " + step.name());
  }
}

namespace interp {

Index slice_count(const ir::TensorDecl& d, const GraphContext& g) {
  switch (d.weight_index) {
    case ir::WeightIndex::kSingle: return 1;
    case ir::WeightIndex::kEdgeType: return g.graph.edge_type_count;
    case ir::WeightIndex::kNodeType: return g.graph.node_type_count();
  }
  return 1;
}

Tensor make_tensor(const ir::TensorDecl& d, const GraphContext& g, Layout layout) {
  switch (d.role) {
    case ir::Role::kNode:
      return Tensor::zeros(TensorRole::kNode, g.num_nodes(), d.cols);
    case ir::Role::kEdge:
      if (layout == Layout::kCompact) {
        return Tensor::zeros(TensorRole::kEdgeCompact, g.stats.unique_count, d.cols);
      }
      return Tensor::zeros(TensorRole::kEdgeVanilla, g.num_edges(), d.cols);
    case ir::Role::kWeight: {
      const Index slices = slice_count(d, g);
      return Tensor::zeros(TensorRole::kWeight, slices * d.weight_rows, d.cols, slices);
    }
  }
  return {};
}

void check_shape(const ir::TensorDecl& d, const Tensor& t, const GraphContext& g) {
  const Tensor want = make_tensor(d, g);
  if (t.role != want.role || t.rows != want.rows || t.cols != want.cols ||
      t.slices != want.slices ||
      static_cast<Index>(t.data.size()) != t.rows * t.cols) {
    throw Error("tensor '" + d.name + "' has shape " + std::to_string(t.rows) + "x" +
                std::to_string(t.cols) + " (" + std::string(to_string(t.role)) +
                "), expected " + std::to_string(want.rows) + "x" +
                std::to_string(want.cols) + " (" + std::string(to_string(want.role)) +
                ")");
  }
}

namespace {

void allocate(const Program& p, Environment& env, const VarLayouts& layouts) {
  if (!env.graph) throw Error("environment has no graph");
  const GraphContext& g = *env.graph;
  for (const auto& d : p.decls) {
    if (d.input) {
      if (!env.has(d.name)) throw Error("missing binding for input '" + d.name + "'");
      check_shape(d, env.at(d.name), g);
      continue;
    }
    auto it = layouts.find(d.name);
    const Layout layout = it == layouts.end() ? Layout::kVanilla : it->second;
    env.bind(d.name, make_tensor(d, g, layout));
  }
}

// Executes statements literally, optionally restricted to a set of ops.
class Runner {
 public:
  Runner(const Program& p, Environment& env) : g_(*env.graph), engine_(g_) {
    for (const ir::OpCall* op : p.ops()) {
      bound_.emplace(op->id, engine_.bind(p, *op, env));
      width_ = std::max(width_, bound_.at(op->id).width);
    }
    scratch_.resize(static_cast<std::size_t>(width_));
  }

  void run(const std::vector<Stmt>& body, const std::set<int>* only = nullptr) {
    only_ = only;
    for (const Stmt& s : body) top(s);
  }

 private:
  bool wanted(const ir::OpCall& op) const { return !only_ || only_->count(op.id) > 0; }

  void apply(const ir::OpCall& op, const exec::Point& pt) {
    if (wanted(op)) engine_.apply(bound_.at(op.id), pt, scratch_.data());
  }

  void top(const Stmt& s) {
    if (!s.is_scope) {
      apply(s.op, {});
      return;
    }
    if (ir::iterates_edges(s.scope)) {
      for (Index e = 0; e < g_.num_edges(); ++e) {
        const exec::Point pt = engine_.edge_point(e);
        for (const Stmt& st : s.body) apply(st.op, pt);
      }
      return;
    }
    for (Index n = 0; n < g_.num_nodes(); ++n) {
      exec::Point node_pt;
      node_pt.node = n;
      for (const Stmt& st : s.body) {
        if (!st.is_scope) {
          apply(st.op, node_pt);
          continue;
        }
        const bool in = st.scope == ScopeKind::kIncomingEdges;
        const auto& ptr = in ? g_.in_ptr : g_.out_ptr;
        const auto& ids = in ? g_.in_edges : g_.out_edges;
        for (Index i = ptr[n]; i < ptr[n + 1]; ++i) {
          exec::Point pt = engine_.edge_point(ids[i]);
          pt.node = n;
          for (const Stmt& inner : st.body) apply(inner.op, pt);
        }
      }
    }
  }

  const GraphContext& g_;
  exec::Engine engine_;
  std::map<int, exec::BoundOp> bound_;
  Index width_ = 1;
  std::vector<double> scratch_;
  const std::set<int>* only_ = nullptr;
};

const Stmt* top_stmt_of(const Program& p, int op_id) {
  for (const Stmt& s : p.body) {
    if (!s.is_scope) {
      if (s.op.id == op_id) return &s;
      continue;
    }
    bool found = false;
    std::function<void(const std::vector<Stmt>&)> walk = [&](const std::vector<Stmt>& b) {
      for (const Stmt& t : b) {
        if (t.is_scope) walk(t.body);
        else if (t.op.id == op_id) found = true;
      }
    };
    walk(s.body);
    if (found) return &s;
  }
  throw Error("op " + std::to_string(op_id) + " not found");
}

}  // namespace

Environment run_forward(const Program& p, Environment env) {
  allocate(p, env, {});
  Runner runner(p, env);
  runner.run(p.body);
  return env;
}

Environment run_plan(const lowering::KernelPlan& plan, Environment env) {
  if (!env.graph) throw Error("environment has no graph");
  check_preprocessing(env, collect_preprocessing(plan));
  const Program& p = plan.program;
  allocate(p, env, plan.layouts);
  Runner runner(p, env);
  for (const auto& step : plan.schedule) {
    switch (step.kind) {
      case lowering::StepKind::kGemm:
        kernels::run_gemm(plan.gemms[step.index], p, env);
        break;
      case lowering::StepKind::kTraversal:
        kernels::run_traversal(plan.traversals[step.index], p, env);
        break;
      case lowering::StepKind::kFallback: {
        const auto& group = plan.fallback_groups[step.index];
        const std::set<int> only(group.begin(), group.end());
        std::vector<const Stmt*> tops;
        for (int id : group) {
          const Stmt* s = top_stmt_of(p, id);
          if (std::find(tops.begin(), tops.end(), s) == tops.end()) tops.push_back(s);
        }
        for (const Stmt* s : tops) runner.run({*s}, &only);
        break;
      }
    }
  }
  return env;
}

void bind_random_inputs(const Program& p, Environment& env, std::uint64_t seed,
                        double lo, double hi) {
  if (!env.graph) throw Error("environment has no graph");
  std::mt19937_64 rng(seed);
  for (const auto& d : p.decls) {
    if (!d.input || env.has(d.name)) continue;
    Tensor t = make_tensor(d, *env.graph);
    for (double& v : t.data) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v = lo + (hi - lo) * u;
    }
    env.bind(d.name, std::move(t));
  }
}

void bind_gradient_seeds(const Program& backward, Environment& env) {
  for (const auto& d : backward.decls) {
    if (!d.input || d.requires_grad || !d.name.starts_with("d_")) continue;
    Tensor t = make_tensor(d, *env.graph);
    std::fill(t.data.begin(), t.data.end(), 1.0);
    env.bind(d.name, std::move(t));
  }
}

double output_sum(const Program& p, const Environment& env) {
  double s = 0.0;
  for (const auto& name : p.outputs()) {
    for (double v : env.at(name).data) s += v;
  }
  return s;
}

Tensor finite_diff_grad(const Program& p, const Environment& env,
                        const std::string& param, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error("finite-difference step must be positive and finite");
  }
  const ir::TensorDecl& d = p.decl(param);
  if (!d.input) throw Error("'" + param + "' is not an input");
  Environment work = env;
  Tensor grad = work.at(param);
  grad.data.assign(grad.data.size(), 0.0);
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    const double orig = work.at(param).data[i];
    work.at(param).data[i] = orig + h;
    const double plus = output_sum(p, run_forward(p, work));
    work.at(param).data[i] = orig - h;
    const double minus = output_sum(p, run_forward(p, work));
    work.at(param).data[i] = orig;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw Error("non-finite loss while differentiating '" + param + "'");
    }
    grad.data[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double finite_diff_element(const Program& p, const Environment& env,
                           const std::string& param, std::size_t element, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error("finite-difference step must be positive and finite");
  }
  Environment work = env;
  Tensor& t = work.at(param);
  if (element >= t.data.size()) throw Error("element out of range for '" + param + "'");
  const double orig = t.data[element];
  t.data[element] = orig + h;
  const double plus = output_sum(p, run_forward(p, work));
  work.at(param).data[element] = orig - h;
  const double minus = output_sum(p, run_forward(p, work));
  if (!std::isfinite(plus) || !std::isfinite(minus)) {
    throw Error("non-finite loss while differentiating '" + param + "'");
  }
  return (plus - minus) / (2.0 * h);
}

double max_relative_error(const Tensor& a, const Tensor& b) {
  if (a.rows != b.rows || a.cols != b.cols || a.data.size() != b.data.size()) {
    throw Error("tensor shapes differ");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double err = std::fabs(a.data[i] - b.data[i]) / std::max(1.0, std::fabs(b.data[i]));
    if (!(err <= worst)) worst = err;  // NaN propagates
  }
  return worst;
}

std::vector<GradientCheck> check_gradients(const Program& p, const Environment& env,
                                           double h, std::size_t max_samples) {
  const Program with_backward = ir::derive_backward(p);
  Environment benv = env;
  bind_gradient_seeds(with_backward, benv);
  const Environment grads = run_forward(with_backward, benv);
  std::vector<GradientCheck> out;
  for (const auto& d : p.decls) {
    if (!d.input || !d.requires_grad) continue;
    const Tensor& analytic = grads.at(ir::grad_name(d.name));
    const std::size_t size = analytic.data.size();
    std::size_t stride = 1;
    if (max_samples > 0 && size > max_samples) stride = (size + max_samples - 1) / max_samples;
    GradientCheck c;
    c.param = d.name;
    for (std::size_t i = 0; i < size; i += stride) {
      const double fd = finite_diff_element(p, env, d.name, i, h);
      const double err = std::fabs(analytic.data[i] - fd) / std::max(1.0, std::fabs(fd));
      if (!(err <= c.max_error)) c.max_error = err;
      ++c.checked;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace interp
}  // namespace rgnnc
