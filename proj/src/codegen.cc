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

#include "rgnnc/codegen.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

namespace rgnnc::codegen {

using ir::Access;
using ir::OpKind;
using ir::TypeSel;
using Json = nlohmann::ordered_json;

namespace {

// Shortest text that reads back as the same double; always has a '.' or
// an exponent so the dialect lexer sees a float literal.
std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string idx(Index v) { return std::to_string(v); }

enum class Use { kRead, kWrite, kAtomic };

// Kernel-side identifiers for program variables. A variable whose name is
// one of the emitter's own locals, index arrays or helper names gets a
// suffix so generated code never shadows or aliases it.
class Names {
 public:
  explicit Names(const ir::Program& p) {
    std::set<std::string> taken;
    for (const auto& d : p.decls) taken.insert(d.name);
    for (const auto& d : p.decls) {
      std::string id = d.name;
      for (int n = 1; reserved(id) || (id != d.name && taken.count(id)); ++n) {
        id = d.name + "_v" + std::to_string(n);
      }
      taken.insert(id);
      ids_[d.name] = id;
    }
  }

  const std::string& of(const std::string& var) const {
    auto it = ids_.find(var);
    if (it == ids_.end()) throw Error("internal error: no identifier for '" + var + "'");
    return it->second;
  }

 private:
  static bool reserved(const std::string& id) {
    static const std::set<std::string> kFixed = {
        // dialect keywords and builtins
        "kernel", "func", "for", "in", "step", "let", "if", "else", "while", "return", "const",
        "i64", "f64", "block", "thread", "serial", "atomic_add", "min", "max", "exp",
        "leakyrelu", "leakyrelu_grad", "select",
        // loop variables and locals
        "seg", "tile", "t", "row", "slice", "q", "c", "acc", "k", "cell", "i", "j", "e", "src",
        "dst", "et", "n", "lo", "hi", "mid", "f",
        // graph scalars and index arrays
        "num_edges", "num_nodes", "num_unique", "num_etypes", "num_ntypes", "num_rows",
        "etype_ptr", "ntype_ptr", "unique_etype_ptr", "row_idx", "col_idx", "etype", "ntype",
        "unique_row_idx", "pair_of_edge", "csr_row_ptr", "csr_col_idx", "csr_edge_id",
        "csr_etype"};
    if (kFixed.count(id)) return true;
    auto digits_from = [&](std::size_t pos) {
      return pos < id.size() &&
             id.find_first_not_of("0123456789_", pos) == std::string::npos;
    };
    if (id.rfind("acc", 0) == 0 && digits_from(3)) return true;  // acc<op>
    if (id.rfind("ld", 0) == 0 && digits_from(2)) return true;   // ld<op>_<arg>
    if (id.rfind("Get", 0) == 0) return true;                    // edge helpers
    return false;
  }

  std::map<std::string, std::string> ids_;
};

class Params {
 public:
  // Registers tensor `var` under kernel identifier `id` and returns `id`.
  const std::string& tensor(const std::string& var, const std::string& id, Use use) {
    add(id, "f64*", use);
    var_of_[id] = var;
    return id;
  }
  void array(const std::string& name) { add(name, "i64*", Use::kRead); }
  void scalar(const std::string& name) { add(name, "i64", Use::kRead); }

  std::string header() const {
    std::string out;
    for (const auto& name : order_) {
      const Entry& e = entries_.at(name);
      if (!out.empty()) out += ", ";
      const bool pointer = e.type.back() == '*';
      if (pointer && e.use == Use::kRead) out += "const ";
      out += e.type + " " + name;
    }
    return out;
  }

  Json operands() const {
    Json list = Json::array();
    for (const auto& name : order_) {
      const Entry& e = entries_.at(name);
      if (e.type != "f64*") continue;
      const char* use = e.use == Use::kRead ? "read" : e.use == Use::kWrite ? "write" : "atomic";
      Json entry = {{"name", var_of_.at(name)}};
      if (var_of_.at(name) != name) entry["param"] = name;
      entry["access"] = use;
      list.push_back(std::move(entry));
    }
    return list;
  }

 private:
  struct Entry {
    std::string type;
    Use use = Use::kRead;
  };

  void add(const std::string& name, const std::string& type, Use use) {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
      entries_[name] = {type, use};
      order_.push_back(name);
    } else if (static_cast<int>(use) > static_cast<int>(it->second.use)) {
      it->second.use = use;
    }
  }

  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
  std::map<std::string, std::string> var_of_;
};

class Writer {
 public:
  explicit Writer(int indent = 1) : indent_(indent) {}
  void line(const std::string& s) { out_ += std::string(2 * indent_, ' ') + s + "\n"; }
  void open(const std::string& s) {
    line(s + " {");
    ++indent_;
  }
  void close() {
    --indent_;
    line("}");
  }
  const std::string& str() const { return out_; }

 private:
  int indent_;
  std::string out_;
};

std::string rows_symbol(intra::RowSpace r) {
  switch (r) {
    case intra::RowSpace::kEdges: return "num_edges";
    case intra::RowSpace::kUniquePairs: return "num_unique";
    case intra::RowSpace::kNodes: return "num_nodes";
  }
  return "num_rows";
}

// ---------------------------------------------------------------------------
// GEMM

class GemmEmitter {
 public:
  GemmEmitter(const intra::GemmInstance& g, const Names& names) : g_(g), names_(names) {}

  std::string run() {
    const std::string name = "gemm_" + std::to_string(g_.kid);
    Writer w;
    const std::string rows = rows_symbol(g_.rows);
    params_.scalar(rows);
    std::string slice = "0";
    std::string lo = "0";
    std::string hi = rows;
    int opened = 0;
    if (g_.type_mode == intra::TypeMode::kSegments) {
      const std::string count = g_.segment_ptr == "ntype_ptr" ? "num_ntypes" : "num_etypes";
      params_.scalar(count);
      params_.array(g_.segment_ptr);
      w.open("for @block seg in 0 .. " + count);
      ++opened;
      slice = "seg";
      lo = g_.segment_ptr + "[seg]";
      hi = g_.segment_ptr + "[seg + 1]";
    }
    const Index tile = g_.schedule.tile_width;
    w.open("for @block tile in " + lo + " .. " + hi + " step " + idx(tile));
    ++opened;
    if (g_.outer) {
      emit_outer(w, slice, hi);
    } else {
      emit_linear(w, slice, hi);
    }
    while (opened-- > 0) w.close();

    std::string text = "// " + name + ": " + summary() + "\n";
    text += "kernel " + name + "(" + params_.header() + ") {\n" + w.str() + "}\n";
    return text;
  }

  const Params& params() const { return params_; }

 private:
  std::string summary() const {
    std::string x = g_.x.var;
    if (const auto a = intra::gather_array(g_.x.map); !a.empty()) x += "[" + std::string(a) + "]";
    if (g_.outer) {
      std::string b = g_.b.var.empty() ? num(g_.b.value) : g_.b.var;
      if (const auto a = intra::gather_array(g_.b.map); !a.empty()) b += "[" + std::string(a) + "]";
      return g_.w + "[T] += " + x + "^T x " + b;
    }
    std::string s = g_.y + " = " + x + " x " + g_.w + (g_.w_transposed ? "^T" : "") + "[T]";
    if (g_.per_row_scalar) s += " * " + g_.per_row_scalar->var;
    return s;
  }

  std::string row_of(const intra::RowRef& r) {
    const auto a = intra::gather_array(r.map);
    if (a.empty()) return "row";
    params_.array(std::string(a));
    return std::string(a) + "[row]";
  }

  std::string element(const intra::RowRef& r, const std::string& col) {
    if (r.map == intra::RowMap::kConst) return num(r.value);
    const std::string& id = params_.tensor(r.var, names_.of(r.var), Use::kRead);
    const std::string row = row_of(r);
    if (r.cols == 1) return id + "[" + row + "]";
    return id + "[" + row + " * " + idx(r.cols) + " + " + col + "]";
  }

  // Slice expression for per-row types; registers the arrays it reads.
  std::string row_slice(const std::string& slice) {
    if (g_.type_mode != intra::TypeMode::kPerRow) return slice;
    params_.array("ntype");
    if (g_.row_type.find("unique_row_idx") != std::string::npos) params_.array("unique_row_idx");
    else if (g_.row_type.find("row_idx") != std::string::npos) params_.array("row_idx");
    if (g_.row_type.find("col_idx") != std::string::npos) params_.array("col_idx");
    return "slice";
  }

  void row_loop(Writer& w, const std::string& hi, const std::string& slice) {
    const Index tile = g_.schedule.tile_width;
    w.open("for @serial row in tile .. min(tile + " + idx(tile) + ", " + hi + ")");
    if (g_.type_mode == intra::TypeMode::kPerRow) w.line("let slice = " + g_.row_type + ";");
    (void)slice;
  }

  void emit_linear(Writer& w, const std::string& seg_slice, const std::string& hi) {
    const std::string wvar = g_.w_transposed ? g_.w + "_T" : g_.w;
    const std::string wname = g_.w_transposed ? names_.of(g_.w) + "_T" : names_.of(g_.w);
    const Index k = g_.k;
    const Index n = g_.n;
    const int coarsen = g_.schedule.coarsening;
    const Index threads = (n + coarsen - 1) / coarsen;
    w.open("for @thread t in 0 .. " + idx(threads));
    row_loop(w, hi, seg_slice);
    const std::string slice = row_slice(seg_slice);
    std::string col = "t";
    const bool guard = coarsen > 1 && n % coarsen != 0;
    if (coarsen > 1) {
      w.open("for @serial q in 0 .. " + std::to_string(coarsen));
      w.line("let c = t * " + std::to_string(coarsen) + " + q;");
      col = "c";
      if (guard) w.open("if (c < " + idx(n) + ")");
    }
    params_.tensor(wvar, wname, Use::kRead);
    const std::string x = element(g_.x, "k");
    w.line("let acc = 0.0;");
    w.open("for @serial k in 0 .. " + idx(k));
    w.line("acc += " + x + " * " + wname + "[" + slice + " * " + idx(k * n) + " + k * " +
           idx(n) + " + " + col + "];");
    w.close();
    std::string value = "acc";
    if (g_.per_row_scalar) value += " * " + element(*g_.per_row_scalar, "0");
    const std::string& yname =
        params_.tensor(g_.y, names_.of(g_.y), g_.atomic_output ? Use::kAtomic : Use::kWrite);
    const std::string y_row = g_.scatter.empty() ? "row" : g_.scatter + "[row]";
    if (!g_.scatter.empty()) params_.array(g_.scatter);
    const std::string target = yname + "[" + y_row + " * " + idx(n) + " + " + col + "]";
    if (g_.atomic_output) w.line("atomic_add(" + target + ", " + value + ");");
    else w.line(target + " = " + value + ";");
    if (guard) w.close();
    if (coarsen > 1) w.close();
    w.close();  // row
    w.close();  // thread
  }

  void emit_outer(Writer& w, const std::string& seg_slice, const std::string& hi) {
    const Index k = g_.k;
    const Index n = g_.n;
    w.open("for @thread cell in 0 .. " + idx(k * n));
    w.line("let i = cell / " + idx(n) + ";");
    w.line("let j = cell % " + idx(n) + ";");
    row_loop(w, hi, seg_slice);
    const std::string slice = row_slice(seg_slice);
    const std::string a = element(g_.x, "i");
    const std::string b = element(g_.b, "j");
    const std::string& wname = params_.tensor(g_.w, names_.of(g_.w), Use::kAtomic);
    w.line("atomic_add(" + wname + "[" + slice + " * " + idx(k * n) + " + cell], " + a + " * " +
           b + ");");
    w.close();
    w.close();
  }

  const intra::GemmInstance& g_;
  const Names& names_;
  Params params_;
};

// ---------------------------------------------------------------------------
// Traversal

class TraversalEmitter {
 public:
  TraversalEmitter(const intra::TraversalInstance& t, const ir::Program& p, const Names& names)
      : t_(t), p_(p), names_(names) {}

  std::string run() {
    const std::string name = "traversal_" + std::to_string(t_.kid);
    const std::string k = std::to_string(t_.kid);
    Writer w;
    std::string helpers;
    if (t_.edge_loop) {
      params_.scalar("num_edges");
      helpers = edge_helpers(k);
      w.open("for @block i in 0 .. num_edges");
      w.line("let e = GetEdgeId_" + k + "(i);");
      w.line("let src = GetSrcId_" + k + "(i);");
      w.line("let dst = GetDstId_" + k + "(i);");
      w.line("let et = GetEType_" + k + "(i);");
    } else {
      params_.scalar("num_nodes");
      w.open("for @block i in 0 .. num_nodes");
      w.line("let n = i;");
    }
    std::size_t operand = 0;
    for (const auto& st : t_.stmts) {
      const ir::OpCall& op = p_.op(st.op);
      emit_stmt(w, op, st, operand);
      operand += op.args.size();
    }
    w.close();
    std::string text = "// " + name + ": " + std::string(ir::to_string(t_.scope)) + ", " +
                       to_string(t_.adjacency).data() + " adjacency\n";
    text += helpers;
    text += "kernel " + name + "(" + params_.header() + ") {\n" + w.str() + "}\n";
    return text;
  }

  const Params& params() const { return params_; }
  Index block_extent() const { return block_; }

 private:
  std::string edge_helpers(const std::string& k) {
    Writer h(0);
    if (t_.adjacency == Adjacency::kCsr) {
      params_.array("csr_row_ptr");
      params_.array("csr_col_idx");
      params_.array("csr_edge_id");
      params_.array("csr_etype");
      params_.scalar("num_nodes");
      h.open("func GetEdgeId_" + k + "(i64 i) -> i64");
      h.line("return csr_edge_id[i];");
      h.close();
      h.open("func GetSrcId_" + k + "(i64 i) -> i64");
      h.line("return csr_col_idx[i];");
      h.close();
      // Rows of the CSR are destinations: find the row holding entry i.
      h.open("func GetDstId_" + k + "(i64 i) -> i64");
      h.line("let lo = 0;");
      h.line("let hi = num_nodes;");
      h.open("while (hi - lo > 1)");
      h.line("let mid = (lo + hi) / 2;");
      h.open("if (csr_row_ptr[mid] <= i)");
      h.line("lo = mid;");
      h.close();
      h.open("else");
      h.line("hi = mid;");
      h.close();
      h.close();
      h.line("return lo;");
      h.close();
      h.open("func GetEType_" + k + "(i64 i) -> i64");
      h.line("return csr_etype[i];");
      h.close();
    } else {
      params_.array("row_idx");
      params_.array("col_idx");
      params_.array("etype");
      h.open("func GetEdgeId_" + k + "(i64 i) -> i64");
      h.line("return i;");
      h.close();
      h.open("func GetSrcId_" + k + "(i64 i) -> i64");
      h.line("return row_idx[i];");
      h.close();
      h.open("func GetDstId_" + k + "(i64 i) -> i64");
      h.line("return col_idx[i];");
      h.close();
      h.open("func GetEType_" + k + "(i64 i) -> i64");
      h.line("return etype[i];");
      h.close();
    }
    return h.str();
  }

  std::string row_of(const ir::Operand& o) {
    switch (o.access) {
      case Access::kEdge: {
        const intra::RowRef& ref = t_.operand_maps[current_];
        if (ref.map == intra::RowMap::kPairOfEdge) {
          params_.array("pair_of_edge");
          return "pair_of_edge[e]";
        }
        return "e";
      }
      case Access::kSrc: return "src";
      case Access::kDst: return "dst";
      case Access::kNode: return "n";
      default: return "0";
    }
  }

  std::string slice_of(const ir::Operand& o) {
    switch (o.sel) {
      case TypeSel::kNone: return "0";
      case TypeSel::kEdgeType: return "et";
      case TypeSel::kSrcNodeType: params_.array("ntype"); return "ntype[src]";
      case TypeSel::kDstNodeType: params_.array("ntype"); return "ntype[dst]";
      case TypeSel::kNodeType: params_.array("ntype"); return "ntype[n]";
    }
    return "0";
  }

  // Element `col` of operand `o`, which is operand number `current_` of
  // the instance.
  std::string element(const ir::Operand& o, const std::string& col, Use use = Use::kRead) {
    if (o.access == Access::kConst) return num(o.value);
    const ir::TensorDecl& d = p_.decl(o.var);
    const std::string& id = params_.tensor(o.var, names_.of(o.var), use);
    if (o.access == Access::kWeight) {
      const std::string s = slice_of(o);
      const Index size = d.weight_rows * d.cols;
      return id + "[" + s + " * " + idx(size) + " + " + col + "]";
    }
    const std::string row = row_of(o);
    if (d.cols == 1) return id + "[" + row + "]";
    return id + "[" + row + " * " + idx(d.cols) + " + " + col + "]";
  }

  std::string result_element(const ir::OpCall& op, const std::string& col, Use use) {
    const ir::TensorDecl& d = p_.decl(op.result.var);
    const std::string& id = params_.tensor(op.result.var, names_.of(op.result.var), use);
    std::string row;
    switch (op.result.access) {
      case Access::kEdge: row = "e"; break;
      case Access::kSrc: row = "src"; break;
      case Access::kDst: row = "dst"; break;
      default: row = "n"; break;
    }
    if (d.cols == 1) return id + "[" + row + "]";
    return id + "[" + row + " * " + idx(d.cols) + " + " + col + "]";
  }

  void emit_stmt(Writer& w, const ir::OpCall& op, const intra::TraversalStmt& st,
                 std::size_t first_operand) {
    const ir::TensorDecl& rd = p_.decl(op.result.var);
    const Index width = rd.cols;
    const std::string id = std::to_string(op.id);
    // Operands loaded above the statement's level are bound once.
    std::vector<std::string> loaded(op.args.size());
    for (std::size_t a = 0; a < op.args.size(); ++a) {
      current_ = first_operand + a;
      const ir::Operand& o = op.args[a];
      const int level = st.load_levels[a];
      if (level < st.level && o.access != Access::kConst && o.is_data() &&
          p_.decl(o.var).cols == 1) {
        loaded[a] = "ld" + id + "_" + std::to_string(a);
        w.line("let " + loaded[a] + " = " + element(o, "0") + ";");
      }
    }
    auto arg = [&](std::size_t a, const std::string& col) {
      current_ = first_operand + a;
      if (!loaded[a].empty()) return loaded[a];
      return element(op.args[a], col);
    };

    if (op.kind == OpKind::kDotProd) {
      const Index d = ir::operand_width(p_, op.args[0]);
      w.line("let acc" + id + " = 0.0;");
      w.open("for @serial k in 0 .. " + idx(d));
      w.line("acc" + id + " += " + arg(0, "k") + " * " + arg(1, "k") + ";");
      w.close();
      w.line(result_element(op, "0", Use::kWrite) + " = acc" + id + ";");
      return;
    }
    if (op.kind == OpKind::kTypedLinear) {
      const ir::Operand& wo = op.args[1];
      const ir::TensorDecl& wd = p_.decl(wo.var);
      const Index kdim = wo.transposed ? wd.cols : wd.weight_rows;
      open_feature(w, st, width);
      const std::string f = feature_var(st, width);
      w.line("let acc" + id + " = 0.0;");
      w.open("for @serial k in 0 .. " + idx(kdim));
      current_ = first_operand + 1;
      const std::string widx = wo.transposed ? f + " * " + idx(wd.cols) + " + k"
                                             : "k * " + idx(wd.cols) + " + " + f;
      const std::string wexpr = element(wo, widx);
      w.line("acc" + id + " += " + arg(0, "k") + " * " + wexpr + ";");
      w.close();
      w.line(result_element(op, f, Use::kWrite) + " = acc" + id + ";");
      close_feature(w, st, width);
      return;
    }

    open_feature(w, st, width);
    const std::string f = feature_var(st, width);
    auto bcast = [&](std::size_t a) {
      const ir::Operand& o = op.args[a];
      return o.access == Access::kConst || ir::operand_width(p_, o) == 1 ? std::string("0") : f;
    };
    std::string value;
    switch (op.kind) {
      case OpKind::kUnary: {
        const std::string x = arg(0, bcast(0));
        switch (op.unary) {
          case ir::UnaryFn::kIdentity: value = x; break;
          case ir::UnaryFn::kExp: value = "exp(" + x + ")"; break;
          case ir::UnaryFn::kLeakyRelu:
            value = "leakyrelu(" + x + ", " + num(op.slope) + ")";
            break;
          case ir::UnaryFn::kLeakyReluGrad:
            value = "leakyrelu_grad(" + x + ", " + num(op.slope) + ")";
            break;
        }
        break;
      }
      case OpKind::kBinary: {
        const char* sym = op.binary == ir::BinaryFn::kAdd   ? " + "
                          : op.binary == ir::BinaryFn::kSub ? " - "
                          : op.binary == ir::BinaryFn::kMul ? " * "
                                                            : " / ";
        value = "(" + arg(0, bcast(0)) + sym + arg(1, bcast(1)) + ")";
        break;
      }
      case OpKind::kAccumulateSum:
      case OpKind::kReshape:
        value = arg(0, bcast(0));
        break;
      case OpKind::kConcat: {
        const Index wa = ir::operand_width(p_, op.args[0]);
        value = "select(" + f + " < " + idx(wa) + ", " + arg(0, f) + ", " +
                arg(1, f + " - " + idx(wa)) + ")";
        break;
      }
      default:
        value = "0.0";
        break;
    }
    if (op.kind == OpKind::kAccumulateSum) {
      const bool cross = t_.edge_loop && (op.result.access == Access::kSrc ||
                                          op.result.access == Access::kDst);
      if (cross) {
        w.line("atomic_add(" + result_element(op, f, Use::kAtomic) + ", " + value + ");");
      } else {
        w.line(result_element(op, f, Use::kWrite) + " += " + value + ";");
      }
    } else {
      w.line(result_element(op, f, Use::kWrite) + " = " + value + ";");
    }
    close_feature(w, st, width);
  }

  static bool feature_loop(const intra::TraversalStmt& st, Index width) {
    return st.level == intra::kFeatureLevel && width >= 1;
  }
  static std::string feature_var(const intra::TraversalStmt& st, Index width) {
    return feature_loop(st, width) ? "f" : "0";
  }
  void open_feature(Writer& w, const intra::TraversalStmt& st, Index width) {
    if (!feature_loop(st, width)) return;
    block_ = std::max(block_, width);
    w.open("for @thread f in 0 .. " + idx(width));
  }
  void close_feature(Writer& w, const intra::TraversalStmt& st, Index width) {
    if (feature_loop(st, width)) w.close();
  }

  const intra::TraversalInstance& t_;
  const ir::Program& p_;
  const Names& names_;
  Params params_;
  std::size_t current_ = 0;
  Index block_ = 1;
};

Json gemm_descriptor(const intra::GemmInstance& g, const Params& params) {
  const std::string rows = rows_symbol(g.rows);
  const Index threads = g.outer ? g.k * g.n
                                : (g.n + g.schedule.coarsening - 1) / g.schedule.coarsening;
  std::string grid = "ceil(" + rows + " / " + std::to_string(g.schedule.tile_width) + ")";
  if (g.type_mode == intra::TypeMode::kSegments) {
    grid = "sum_t ceil((" + g.segment_ptr + "[t + 1] - " + g.segment_ptr + "[t]) / " +
           std::to_string(g.schedule.tile_width) + ")";
  }
  Json d;
  d["grid"] = grid;
  d["block"] = threads;
  d["rows"] = rows;
  d["form"] = g.outer ? "outer" : "linear";
  d["type_mode"] = intra::to_string(g.type_mode);
  if (!g.segment_ptr.empty()) d["segment_ptr"] = g.segment_ptr;
  if (!g.row_type.empty()) d["row_type"] = g.row_type;
  d["tile_width"] = g.schedule.tile_width;
  d["coarsening"] = g.schedule.coarsening;
  if (g.schedule.register_limit_hint) d["register_limit_hint"] = *g.schedule.register_limit_hint;
  d["atomic_output"] = g.atomic_output;
  d["operands"] = params.operands();
  return d;
}

Json traversal_descriptor(const intra::TraversalInstance& t, const Params& params,
                          Index block) {
  Json d;
  d["grid"] = t.edge_loop ? "num_edges" : "num_nodes";
  d["block"] = block;
  d["adjacency"] = std::string(to_string(t.adjacency));
  d["layout"] = std::string(to_string(t.layout));
  d["hoisting"] = t.hoisting;
  d["partial_aggregation"] = t.partial_aggregation;
  d["work_assignment"] = t.work_assignment;
  d["operands"] = params.operands();
  return d;
}

struct Emitted {
  KernelText text;
  Json entry;
  std::vector<int> ops;
};

void emit_instances(const lowering::KernelPlan& plan, bool backward,
                    std::vector<Emitted>& out) {
  const Names names(plan.program);
  for (const auto& g : plan.gemms) {
    GemmEmitter e(g, names);
    Emitted k;
    k.text = {"gemm_" + std::to_string(g.kid), g.kid, backward, e.run()};
    k.ops = g.ops;
    k.entry = {{"name", k.text.name}, {"kind", "gemm"}, {"kid", g.kid}};
    k.entry["direction"] = backward ? "backward" : "forward";
    k.entry["file"] = "kernels/" + k.text.name + ".k";
    k.entry["ops"] = g.ops;
    k.entry.update(gemm_descriptor(g, e.params()));
    out.push_back(std::move(k));
  }
  for (const auto& t : plan.traversals) {
    TraversalEmitter e(t, plan.program, names);
    Emitted k;
    k.text = {"traversal_" + std::to_string(t.kid), t.kid, backward, e.run()};
    k.ops = t.ops();
    k.entry = {{"name", k.text.name}, {"kind", "traversal"}, {"kid", t.kid}};
    k.entry["direction"] = backward ? "backward" : "forward";
    k.entry["file"] = "kernels/" + k.text.name + ".k";
    k.entry["ops"] = k.ops;
    k.entry.update(traversal_descriptor(t, e.params(), e.block_extent()));
    out.push_back(std::move(k));
  }
}

Json plan_fallback(const lowering::KernelPlan& plan) {
  Json list = Json::array();
  for (const auto& f : plan.fallback) list.push_back({{"op", f.op}, {"reason", f.reason}});
  return list;
}

}  // namespace

std::string emit_gemm(const intra::GemmInstance& g, const ir::Program& p) {
  const Names names(p);
  return GemmEmitter(g, names).run();
}

std::string emit_traversal(const intra::TraversalInstance& t, const ir::Program& p) {
  const Names names(p);
  return TraversalEmitter(t, p, names).run();
}

Bundle emit_plan(const lowering::KernelPlan& plan, const lowering::KernelPlan* backward) {
  std::vector<Emitted> fwd;
  emit_instances(plan, false, fwd);
  std::vector<Emitted> bwd;
  if (backward) emit_instances(*backward, true, bwd);

  std::vector<Emitted*> all;
  for (auto& k : fwd) all.push_back(&k);
  for (auto& k : bwd) all.push_back(&k);
  std::sort(all.begin(), all.end(),
            [](const Emitted* a, const Emitted* b) { return a->text.kid < b->text.kid; });
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i]->text.kid == all[i - 1]->text.kid) {
      throw Error("internal error: duplicate kernel id " + std::to_string(all[i]->text.kid));
    }
  }

  Bundle b;
  b.preprocessing = collect_preprocessing(plan);
  if (backward) {
    for (const auto& s : collect_preprocessing(*backward)) {
      if (std::find(b.preprocessing.begin(), b.preprocessing.end(), s) ==
          b.preprocessing.end()) {
        b.preprocessing.push_back(s);
      }
    }
    std::stable_sort(b.preprocessing.begin(), b.preprocessing.end(),
                     [](const PreprocessStep& x, const PreprocessStep& y) {
                       return static_cast<int>(x.kind) < static_cast<int>(y.kind);
                     });
  }

  Json m;
  m["schema"] = 1;
  m["program"] = plan.program.name;
  m["layout"] = std::string(to_string(plan.options.layout));
  m["adjacency"] = std::string(to_string(plan.options.adjacency));
  Json pre = Json::array();
  for (const auto& s : b.preprocessing) pre.push_back(s.name());
  m["preprocessing"] = std::move(pre);
  Json kernels = Json::array();
  for (const Emitted* k : all) {
    b.kernels.push_back(k->text);
    kernels.push_back(k->entry);
  }
  m["kernels"] = std::move(kernels);
  Json schedule = Json::array();
  for (const auto& s : plan.schedule) schedule.push_back(plan.step_name(s));
  m["schedule"] = std::move(schedule);
  m["fallback"] = plan_fallback(plan);
  if (backward) {
    Json bsched = Json::array();
    for (const auto& s : backward->schedule) bsched.push_back(backward->step_name(s));
    m["backward_schedule"] = std::move(bsched);
    m["backward_fallback"] = plan_fallback(*backward);
    Json pairs = Json::array();
    for (const auto& f : fwd) {
      const std::set<int> ops(f.ops.begin(), f.ops.end());
      Json names = Json::array();
      for (const auto& k : bwd) {
        for (int id : k.ops) {
          if (ops.count(backward->program.op(id).adjoint_of)) {
            names.push_back(k.text.name);
            break;
          }
        }
      }
      pairs.push_back({{"forward", f.text.name}, {"backward", std::move(names)}});
    }
    m["backward_pairs"] = std::move(pairs);
  }
  b.manifest = m.dump(2) + "\n";
  return b;
}

void write_bundle(const Bundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "kernels");
  auto write = [](const std::filesystem::path& file, const std::string& text) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw Error("cannot write " + file.string());
    os << text;
  };
  write(dir / "manifest.json", b.manifest);
  for (const auto& k : b.kernels) write(dir / "kernels" / (k.name + ".k"), k.text);
}

}  // namespace rgnnc::codegen
