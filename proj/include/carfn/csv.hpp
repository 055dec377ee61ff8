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

#include <string>
#include <string_view>
#include <vector>

namespace carfn {

// RFC 4180 fields: quoted when they contain a comma, quote or newline, with
// embedded quotes doubled.
std::string csv_field(std::string_view s);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace carfn
