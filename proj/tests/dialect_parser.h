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

// Recursive-descent parser for the kernel dialect of docs/kernel-dialect.md.
// Besides the grammar it checks that every name is declared before use.

#pragma once

#include <map>
#include <string>
#include <vector>

namespace rgnnc::dialect {

struct Param {
  std::string type;  // "i64", "f64", "i64*", "f64*"
  std::string name;
  bool is_const = false;
};

struct Unit {
  std::string kernel;
  std::vector<Param> params;
  std::vector<std::string> funcs;
  std::vector<std::string> comments;
  // Construct counts, keyed by "for @block", "for @thread", "for @serial",
  // "atomic_add", "while", "if", "call <name>", ...
  std::map<std::string, int> counts;
  // Names indexed with [] anywhere in the kernel or its helpers.
  std::vector<std::string> subscripted;

  int count(const std::string& key) const {
    auto it = counts.find(key);
    return it == counts.end() ? 0 : it->second;
  }
  const Param* param(const std::string& name) const;
};

// Throws std::runtime_error("line L: message") on the first error.
Unit parse(const std::string& text);

}  // namespace rgnnc::dialect
