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

// The `rgnnc` command line: compile, run, check, flops, memreport.

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rgnnc/graph.h"

namespace rgnnc::cli {

// argv without the program name. Reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "<n0>,<n1>,...:<edge types>:<edges>[:powerlaw]"
SyntheticSpec parse_synthetic(const std::string& text);

// RGNNC_SEED, or 1 when unset.
std::uint64_t seed_from_env();

}  // namespace rgnnc::cli
