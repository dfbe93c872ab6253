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

#include "rgnnc/cli.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rgnnc/codegen.h"
#include "rgnnc/interp.h"
#include "rgnnc/lowering.h"
#include "rgnnc/passes.h"
#include "rgnnc/report.h"
#include "rgnnc/zoo.h"

namespace rgnnc::cli {

using Json = nlohmann::ordered_json;

std::uint64_t seed_from_env() {
  const char* s = std::getenv("RGNNC_SEED");
  if (!s || !*s) return 1;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw Error("RGNNC_SEED must be an unsigned integer");
  return v;
}

SyntheticSpec parse_synthetic(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() < 3 || parts.size() > 4) {
    throw Error("bad --synthetic '" + text + "' (expected <n0>,<n1>,...:<etypes>:<edges>)");
  }
  auto number = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw Error("bad number '" + s + "' in --synthetic");
    }
    return static_cast<Index>(std::stoll(s));
  };
  SyntheticSpec spec;
  std::stringstream counts(parts[0]);
  for (std::string c; std::getline(counts, c, ',');) spec.node_counts.push_back(number(c));
  if (spec.node_counts.empty()) throw Error("bad --synthetic '" + text + "': no node counts");
  spec.edge_types = number(parts[1]);
  spec.edges = number(parts[2]);
  if (parts.size() == 4) {
    if (parts[3] != "powerlaw" && parts[3] != "uniform") {
      throw Error("unknown degree distribution '" + parts[3] + "'");
    }
    if (parts[3] == "powerlaw") spec.degrees = DegreeDistribution::kPowerLaw;
  }
  return spec;
}

namespace {

struct Options {
  std::string model;
  std::string graph;
  std::string synthetic;
  std::optional<Index> hidden;
  std::optional<Index> in_dim;
  std::optional<Index> out_dim;
  bool compact = false;
  bool reorder = false;
  std::string adjacency = "coo";
  int tile = 16;
  int coarsen = 1;
  bool dump_ir = false;
  bool backward = false;
  std::string output;
  std::string env_dir;
  std::size_t grad_samples = 32;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--model", o.model, "rgcn, rgat or hgt")->required();
  app->add_option("--graph", o.graph, "graph file (TSV)");
  app->add_option("--synthetic", o.synthetic,
                  "synthetic graph <n0>,<n1>,...:<etypes>:<edges>[:powerlaw]");
  app->add_option("--hidden", o.hidden, "input and output width");
  app->add_option("--in-dim", o.in_dim, "input width");
  app->add_option("--out-dim", o.out_dim, "output width");
  app->add_flag("--compact", o.compact, "compact materialization");
  app->add_flag("--reorder", o.reorder, "linear operator reordering");
  app->add_option("--adjacency", o.adjacency, "coo or csr")
      ->check(CLI::IsMember({"coo", "csr"}));
  app->add_option("--tile", o.tile, "GEMM tile width");
  app->add_option("--coarsen", o.coarsen, "GEMM coarsening factor (1, 2, 4)");
  app->add_flag("--dump-ir", o.dump_ir, "print the IR and plan to stderr");
}

zoo::DimsConfig dims_of(const Options& o) {
  zoo::DimsConfig d;
  if (o.hidden) d.in_dim = d.out_dim = *o.hidden;
  if (o.in_dim) d.in_dim = *o.in_dim;
  if (o.out_dim) d.out_dim = *o.out_dim;
  d.validate();
  return d;
}

HeteroGraph graph_of(const Options& o) {
  if (!o.graph.empty() && !o.synthetic.empty()) {
    throw Error("--graph and --synthetic are mutually exclusive");
  }
  if (!o.graph.empty()) return load_graph_file(o.graph);
  if (!o.synthetic.empty()) {
    return generate_synthetic(parse_synthetic(o.synthetic), seed_from_env());
  }
  throw Error("one of --graph or --synthetic is required");
}

lowering::LowerOptions lower_options(const Options& o) {
  lowering::LowerOptions l;
  l.layout = o.compact ? Layout::kCompact : Layout::kVanilla;
  l.adjacency = o.adjacency == "csr" ? Adjacency::kCsr : Adjacency::kCoo;
  l.gemm.tile_width = o.tile;
  l.gemm.coarsening = o.coarsen;
  l.gemm.validate();
  return l;
}

void emit(const std::string& json, const std::string& output, std::ostream& out) {
  if (output.empty()) {
    out << json;
    return;
  }
  std::ofstream os(output);
  if (!os) throw Error("cannot write " + output);
  os << json;
}

// Program as compiled: the zoo model, optionally reordered.
ir::Program compiled_program(const Options& o, const ir::Program& source) {
  return o.reorder ? ir::reorder_linear_ops(source) : source;
}

int cmd_compile(const Options& o, std::ostream& out, std::ostream& err) {
  const ir::Program source = zoo::build_model(zoo::parse_model(o.model), dims_of(o));
  const ir::Program p = compiled_program(o, source);
  const lowering::KernelPlan plan = lowering::lower(p, lower_options(o));
  std::optional<lowering::KernelPlan> backward;
  if (o.backward) {
    std::set<std::string> wanted;
    for (const auto& d : source.decls) {
      if (d.input && d.requires_grad) wanted.insert(ir::grad_name(d.name));
    }
    const ir::Program bw = ir::backward_only(
        ir::prune_unused_gradients(ir::derive_backward(source), wanted));
    lowering::LowerOptions bo = lower_options(o);
    bo.first_kid = static_cast<int>(plan.instance_count()) + 1;
    backward = lowering::lower(bw, bo);
  }
  if (o.dump_ir) {
    err << ir::to_text(plan.program) << lowering::to_text(plan);
    if (backward) err << ir::to_text(backward->program) << lowering::to_text(*backward);
  }
  std::string summary = report::plan_summary_json(plan);
  if (!o.output.empty()) {
    const codegen::Bundle bundle = codegen::emit_plan(plan, backward ? &*backward : nullptr);
    codegen::write_bundle(bundle, o.output);
    Json j = Json::parse(summary);
    j["bundle"] = o.output;
    j["kernels"] = bundle.kernels.size();
    Json pre = Json::array();
    for (const auto& s : bundle.preprocessing) pre.push_back(s.name());
    j["preprocessing"] = std::move(pre);
    summary = j.dump(2) + "\n";
  }
  out << summary;
  return 0;
}

Environment model_environment(const Options& o, const ir::Program& source) {
  Environment env = o.env_dir.empty() ? make_environment(graph_of(o))
                                      : load_environment(o.env_dir, graph_of(o));
  zoo::bind_model_inputs(source, env, seed_from_env());
  return env;
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  const ir::Program source = zoo::build_model(zoo::parse_model(o.model), dims_of(o));
  const ir::Program p = compiled_program(o, source);
  const lowering::KernelPlan plan = lowering::lower(p, lower_options(o));
  if (o.dump_ir) err << ir::to_text(plan.program) << lowering::to_text(plan);
  Environment env = model_environment(o, source);
  apply_preprocessing(env, collect_preprocessing(plan));
  const Environment reference = interp::run_forward(source, env);
  const Environment result = interp::run_plan(plan, env);
  Json j;
  j["schema"] = report::kSchemaVersion;
  j["report"] = "run";
  j["program"] = p.name;
  double worst = 0.0;
  Json outputs = Json::array();
  for (const auto& name : source.outputs()) {
    const Tensor& t = result.at(name);
    double sum = 0.0;
    for (double v : t.data) sum += v;
    const double err_rel = interp::max_relative_error(t, reference.at(name));
    worst = std::max(worst, err_rel);
    outputs.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}, {"sum", sum}});
  }
  j["outputs"] = std::move(outputs);
  j["max_relative_error_vs_interpreter"] = worst;
  if (!o.output.empty()) {
    Environment saved;
    saved.graph = result.graph;
    for (const auto& name : source.outputs()) saved.bind(name, result.at(name));
    save_environment(saved, o.output);
    j["saved"] = o.output;
  }
  out << j.dump(2) << "\n";
  return 0;
}

// Attention variable normalized over incoming edges, per model.
std::string attention_var(zoo::Model m) {
  switch (m) {
    case zoo::Model::kRgat: return "attn";
    case zoo::Model::kHgt: return "a";
    case zoo::Model::kRgcn: return "";
  }
  return "";
}

int cmd_check(const Options& o, std::ostream& out, std::ostream&) {
  const zoo::Model model = zoo::parse_model(o.model);
  const zoo::DimsConfig dims = dims_of(o);
  const ir::Program source = zoo::build_model(model, dims);
  Environment env = model_environment(o, source);
  apply_preprocessing(env, {{PreprocessKind::kSortEdgesByType, ""}});
  const Environment reference = interp::run_forward(source, env);
  std::vector<report::CheckResult> results;

  report::CheckResult eq{"plan_equivalence", true, 0.0, ""};
  for (bool compact : {false, true}) {
    for (bool reorder : {false, true}) {
      for (Adjacency adj : {Adjacency::kCoo, Adjacency::kCsr}) {
        lowering::LowerOptions lo;
        lo.layout = compact ? Layout::kCompact : Layout::kVanilla;
        lo.adjacency = adj;
        const auto plan = lowering::lower(reorder ? ir::reorder_linear_ops(source) : source, lo);
        Environment e = env;
        apply_preprocessing(e, collect_preprocessing(plan));
        const Environment got = interp::run_plan(plan, e);
        for (const auto& name : source.outputs()) {
          eq.max_error = std::max(eq.max_error,
                                  interp::max_relative_error(got.at(name), reference.at(name)));
        }
      }
    }
  }
  eq.passed = eq.max_error <= 1e-9;
  eq.detail = "8 flag combinations, tolerance 1e-9 relative";
  results.push_back(eq);

  if (const std::string att = attention_var(model); !att.empty()) {
    report::CheckResult sm{"softmax_normalization", true, 0.0, "tolerance 1e-9"};
    const GraphContext& g = *reference.graph;
    const Tensor& a = reference.at(att);
    for (Index v = 0; v < g.num_nodes(); ++v) {
      if (g.in_ptr[v] == g.in_ptr[v + 1]) continue;
      double sum = 0.0;
      for (Index i = g.in_ptr[v]; i < g.in_ptr[v + 1]; ++i) sum += a.data[g.in_edges[i]];
      sm.max_error = std::max(sm.max_error, std::fabs(sum - 1.0));
    }
    sm.passed = sm.max_error <= 1e-9;
    results.push_back(sm);
  }

  report::CheckResult gr{"gradients", true, 0.0, ""};
  std::size_t checked = 0;
  for (const auto& c : interp::check_gradients(source, env, 1e-6, o.grad_samples)) {
    gr.max_error = std::max(gr.max_error, c.max_error);
    checked += c.checked;
  }
  gr.passed = gr.max_error <= 1e-4;
  gr.detail = std::to_string(checked) + " elements, h=1e-6, tolerance 1e-4";
  results.push_back(gr);

  report::CheckResult mem{"memreport_monotonic", true, 0.0, ""};
  for (const auto& t : report::memreport(source, env.graph->stats).tensors) {
    if (t.compact_bytes() > t.vanilla_bytes()) {
      mem.passed = false;
      mem.detail += t.name + " ";
    }
  }
  results.push_back(mem);

  const bool all = std::all_of(results.begin(), results.end(),
                               [](const auto& r) { return r.passed; });
  emit(report::check_json(o.model, results), o.output, out);
  return all ? 0 : 1;
}

void dump_plan(const Options& o, const ir::Program& source, std::ostream& err) {
  if (!o.dump_ir) return;
  const lowering::KernelPlan plan =
      lowering::lower(compiled_program(o, source), lower_options(o));
  err << ir::to_text(plan.program) << lowering::to_text(plan);
}

int cmd_flops(const Options& o, std::ostream& out, std::ostream& err) {
  const ir::Program source = zoo::build_model(zoo::parse_model(o.model), dims_of(o));
  dump_plan(o, source, err);
  const HeteroGraph g = graph_of(o);
  const GraphStats stats = graph_stats(g, build_compact_index(sort_edges_by_type(g)));
  std::vector<std::string> focus;
  for (const ir::OpCall* op : source.ops()) {
    if (op->kind == ir::OpKind::kDotProd && op->args[1].access == ir::Access::kWeight) {
      focus.push_back(op->result.var);
    }
  }
  const ir::Program reordered = ir::reorder_linear_ops(source);
  emit(report::flops_json(source, stats, o.reorder ? &reordered : nullptr, focus), o.output,
       out);
  return 0;
}

int cmd_memreport(const Options& o, std::ostream& out, std::ostream& err) {
  const ir::Program source = zoo::build_model(zoo::parse_model(o.model), dims_of(o));
  dump_plan(o, source, err);
  const HeteroGraph g = graph_of(o);
  const GraphStats stats = graph_stats(g, build_compact_index(sort_edges_by_type(g)));
  emit(report::memreport_json(report::memreport(source, stats)), o.output, out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rgnnc: relational GNN compiler"};
  app.require_subcommand(1);
  Options o;

  auto* compile = app.add_subcommand("compile", "lower a model and emit a kernel bundle");
  add_common(compile, o);
  compile->add_flag("--backward", o.backward, "also emit backward kernels");
  compile->add_option("-o,--output", o.output, "bundle directory");

  auto* run_cmd = app.add_subcommand("run", "execute a lowered model on a graph");
  add_common(run_cmd, o);
  run_cmd->add_option("--env", o.env_dir, "environment directory with input tensors");
  run_cmd->add_option("-o,--output", o.output, "directory for the output tensors");

  auto* check = app.add_subcommand("check", "pass equivalence and gradient checks");
  add_common(check, o);
  check->add_option("--grad-samples", o.grad_samples,
                    "elements differenced per input (0 = all)");
  check->add_option("-o,--output", o.output, "report file");

  auto* flops = app.add_subcommand("flops", "arithmetic cost report");
  add_common(flops, o);
  flops->add_option("-o,--output", o.output, "report file");

  auto* mem = app.add_subcommand("memreport", "memory footprint report");
  add_common(mem, o);
  mem->add_option("-o,--output", o.output, "report file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    if (*compile) return cmd_compile(o, out, err);
    if (*run_cmd) return cmd_run(o, out, err);
    if (*check) return cmd_check(o, out, err);
    if (*flops) return cmd_flops(o, out, err);
    if (*mem) return cmd_memreport(o, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace rgnnc::cli
