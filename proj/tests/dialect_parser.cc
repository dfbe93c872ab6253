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

#include "dialect_parser.h"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

namespace rgnnc::dialect {
namespace {

enum class Tok { kIdent, kInt, kFloat, kPunct, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  int line = 1;
};

const std::set<std::string> kKeywords = {"kernel", "func", "for", "in",  "step", "let",
                                         "if",     "else", "while", "return", "const",
                                         "i64",    "f64"};

// Callable builtins and their arity.
const std::map<std::string, int> kBuiltins = {
    {"min", 2}, {"max", 2}, {"exp", 1}, {"leakyrelu", 2}, {"leakyrelu_grad", 2}, {"select", 3}};

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0;
  auto fail = [&](const std::string& m) {
    throw std::runtime_error("line " + std::to_string(line) + ": " + m);
  };
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (c == ' ') {
      ++i;
    } else if (c == '\t' || c == '\r') {
      fail("tabs and carriage returns are not allowed");
    } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      const std::size_t end = s.find('\n', i);
      out.push_back({Tok::kPunct, "//" + s.substr(i + 2, end - i - 2), line});
      out.back().text = "#" + out.back().text;  // comment marker
      i = end == std::string::npos ? s.size() : end;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Tok::kIdent, s.substr(i, j - i), line});
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      bool is_float = false;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
        is_float = true;
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        is_float = true;
        ++j;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j >= s.size() || !std::isdigit(static_cast<unsigned char>(s[j]))) fail("bad exponent");
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      out.push_back({is_float ? Tok::kFloat : Tok::kInt, s.substr(i, j - i), line});
      i = j;
    } else {
      static const char* kTwo[] = {"..", "+=", "->", "<=", ">=", "==", "!="};
      std::string p(1, c);
      for (const char* t : kTwo) {
        if (s.compare(i, 2, t) == 0) p = t;
      }
      if (p.size() == 1 && std::string("{}()[];,=+-*/%<>@").find(c) == std::string::npos) {
        fail(std::string("unexpected character '") + c + "'");
      }
      out.push_back({Tok::kPunct, p, line});
      i += p.size();
    }
  }
  out.push_back({Tok::kEnd, "", line});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  Unit run() {
    while (peek().kind == Tok::kPunct && peek().text[0] == '#') {
      u_.comments.push_back(peek().text.substr(3));
      ++pos_;
    }
    if (u_.comments.empty()) fail("expected a header comment");
    while (is("func")) func();
    kernel();
    if (peek().kind != Tok::kEnd) fail("trailing input after kernel");
    return std::move(u_);
  }

 private:
  const Token& peek(int ahead = 0) const { return t_[pos_ + ahead]; }
  bool is(const std::string& text) const {
    const Token& k = peek();
    return (k.kind == Tok::kIdent || k.kind == Tok::kPunct) && k.text == text;
  }
  [[noreturn]] void fail(const std::string& m) const {
    throw std::runtime_error("line " + std::to_string(peek().line) + ": " + m +
                             (peek().kind == Tok::kEnd ? " at end"
                                                       : " near '" + peek().text + "'"));
  }
  void expect(const std::string& text) {
    if (!is(text)) fail("expected '" + text + "'");
    ++pos_;
  }
  std::string ident() {
    if (peek().kind != Tok::kIdent || kKeywords.count(peek().text)) fail("expected identifier");
    return t_[pos_++].text;
  }

  // Scopes ------------------------------------------------------------------
  void push() { scopes_.emplace_back(); }
  void pop() { scopes_.pop_back(); }
  void declare(const std::string& name) {
    if (scopes_.back().count(name)) fail("redeclaration of '" + name + "'");
    if (globals_.count(name)) fail("'" + name + "' shadows a kernel parameter");
    for (const auto& s : scopes_) {
      if (s.count(name)) fail("'" + name + "' shadows an outer name");
    }
    scopes_.back().insert(name);
  }
  bool declared(const std::string& name) const {
    if (globals_.count(name)) return true;
    return std::any_of(scopes_.begin(), scopes_.end(),
                       [&](const auto& s) { return s.count(name) > 0; });
  }

  std::string type() {
    if (!is("i64") && !is("f64")) fail("expected type");
    return t_[pos_++].text;
  }

  Param param() {
    Param p;
    if (is("const")) {
      p.is_const = true;
      ++pos_;
    }
    p.type = type();
    if (is("*")) {
      ++pos_;
      p.type += "*";
    } else if (p.is_const) {
      fail("const applies to pointers only");
    }
    p.name = ident();
    return p;
  }

  void func() {
    expect("func");
    const std::string name = ident();
    if (funcs_.count(name)) fail("duplicate func '" + name + "'");
    funcs_.insert(name);
    u_.funcs.push_back(name);
    push();
    expect("(");
    if (!is(")")) {
      for (;;) {
        const Param p = param();
        if (p.type.back() == '*') fail("func parameters are scalars");
        declare(p.name);
        if (!is(",")) break;
        ++pos_;
      }
    }
    expect(")");
    expect("->");
    type();
    in_func_ = true;
    block(false);
    in_func_ = false;
    pop();
  }

  void kernel() {
    expect("kernel");
    u_.kernel = ident();
    expect("(");
    if (!is(")")) {
      for (;;) {
        Param p = param();
        if (globals_.count(p.name)) fail("duplicate parameter '" + p.name + "'");
        globals_.insert(p.name);
        u_.params.push_back(std::move(p));
        if (!is(",")) break;
        ++pos_;
      }
    }
    expect(")");
    // Helpers may only name kernel parameters, which are known only now.
    for (const auto& [name, line] : pending_globals_) {
      if (!globals_.count(name)) {
        throw std::runtime_error("line " + std::to_string(line) + ": undeclared '" + name + "'");
      }
    }
    push();
    block(false);
    pop();
  }

  void block(bool new_scope = true) {
    expect("{");
    if (new_scope) push();
    while (!is("}")) stmt();
    expect("}");
    if (new_scope) pop();
  }

  void stmt() {
    if (is("for")) {
      ++pos_;
      expect("@");
      const std::string level = ident();
      if (level != "block" && level != "thread" && level != "serial") fail("unknown loop level");
      if (in_func_) fail("loops are not allowed in func bodies");
      ++u_.counts["for @" + level];
      const std::string var = ident();
      expect("in");
      expr();
      expect("..");
      expr();
      if (is("step")) {
        ++pos_;
        expr();
      }
      push();
      declare(var);
      block();
      pop();
      return;
    }
    if (is("let")) {
      ++pos_;
      const std::string name = ident();
      expect("=");
      expr();
      expect(";");
      declare(name);
      return;
    }
    if (is("if")) {
      ++pos_;
      ++u_.counts["if"];
      expect("(");
      expr();
      expect(")");
      block();
      if (is("else")) {
        ++pos_;
        block();
      }
      return;
    }
    if (is("while")) {
      ++pos_;
      ++u_.counts["while"];
      expect("(");
      expr();
      expect(")");
      block();
      return;
    }
    if (is("return")) {
      if (!in_func_) fail("return outside func");
      ++pos_;
      expr();
      expect(";");
      return;
    }
    if (is("atomic_add")) {
      if (in_func_) fail("atomic_add in func body");
      ++pos_;
      ++u_.counts["atomic_add"];
      expect("(");
      lvalue(true);
      expect(",");
      expr();
      expect(")");
      expect(";");
      return;
    }
    lvalue(false);
    if (is("=") || is("+=")) {
      ++pos_;
    } else {
      fail("expected '=' or '+='");
    }
    expr();
    expect(";");
  }

  void lvalue(bool must_index) {
    const std::string name = ident();
    use(name);
    if (is("[")) {
      ++pos_;
      u_.subscripted.push_back(name);
      expr();
      expect("]");
    } else if (must_index) {
      fail("atomic_add needs an indexed target");
    }
  }

  void use(const std::string& name) {
    if (declared(name)) return;
    if (in_func_) {
      pending_globals_.emplace_back(name, peek().line);
      return;
    }
    fail("undeclared '" + name + "'");
  }

  void expr() {
    sum();
    if (is("<") || is("<=") || is(">") || is(">=") || is("==") || is("!=")) {
      ++pos_;
      sum();
    }
  }
  void sum() {
    term();
    while (is("+") || is("-")) {
      ++pos_;
      term();
    }
  }
  void term() {
    unary();
    while (is("*") || is("/") || is("%")) {
      ++pos_;
      unary();
    }
  }
  void unary() {
    if (is("-")) ++pos_;
    primary();
  }
  void primary() {
    const Token& k = peek();
    if (k.kind == Tok::kInt || k.kind == Tok::kFloat) {
      ++pos_;
      return;
    }
    if (is("(")) {
      ++pos_;
      expr();
      expect(")");
      return;
    }
    const std::string name = ident();
    if (is("(")) {
      ++pos_;
      int arity = 0;
      if (!is(")")) {
        for (;;) {
          expr();
          ++arity;
          if (!is(",")) break;
          ++pos_;
        }
      }
      expect(")");
      auto b = kBuiltins.find(name);
      if (b != kBuiltins.end()) {
        if (b->second != arity) fail("wrong arity for '" + name + "'");
      } else if (funcs_.count(name)) {
        if (arity != 1) fail("helpers take one argument");
      } else {
        fail("unknown function '" + name + "'");
      }
      ++u_.counts["call " + name];
      return;
    }
    use(name);
    if (is("[")) {
      ++pos_;
      u_.subscripted.push_back(name);
      expr();
      expect("]");
    }
  }

  std::vector<Token> t_;
  std::size_t pos_ = 0;
  Unit u_;
  std::set<std::string> funcs_;
  std::set<std::string> globals_;
  std::vector<std::set<std::string>> scopes_;
  std::vector<std::pair<std::string, int>> pending_globals_;
  bool in_func_ = false;
};

}  // namespace

const Param* Unit::param(const std::string& name) const {
  for (const auto& p : params) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Unit parse(const std::string& text) { return Parser(lex(text)).run(); }

}  // namespace rgnnc::dialect
