// Copyright 2026 The carfn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "carfn/function.hpp"

namespace fixtures {

inline constexpr const char* kAddWindow = "ADD WINDOW T1 NONE IF WINDOW ABSENT";
inline constexpr const char* kPaintGreen =
    "PAINT WINDOW GREEN IF WINDOW PRESENT TYPE ANY COLOR NONE";
inline constexpr const char* kRemoveWindow =
    "REMOVE WINDOW IF WINDOW PRESENT TYPE ANY COLOR ANY";

inline carfn::FunctionDef named(const carfn::Grammar& g, const char* dsl, const char* handle) {
  auto f = carfn::parse_function(g, dsl);
  f.handle = handle;
  return f;
}

}  // namespace fixtures
