// Copyright 2026 The bgnlm-sindy Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace bgnlm::csv {

inline constexpr int kSchemaVersion = 1;

/// "# schema_version=1"
std::string schema_line();

/// 17 significant digits; parses back to the identical double.
std::string format_double(double value);

/// Comma-joined row terminated by '\n'. Fields are written verbatim; callers
/// only emit fields without commas or quotes.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::out_of_range if absent.
  std::size_t column(std::string_view name) const;
};

/// Reads a header + rows table, skipping lines that start with '#'.
Table read_table(std::istream& in);

}  // namespace bgnlm::csv
