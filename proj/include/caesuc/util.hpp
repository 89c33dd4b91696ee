// Copyright 2026 The caesuc Authors
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

#ifndef CAESUC_UTIL_HPP_
#define CAESUC_UTIL_HPP_

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace caesuc {

// Error category. Categories map 1:1 onto C-API status codes and CLI exit
// codes, so every failure surfaced anywhere in the toolkit carries one.
enum class ErrorKind {
  kValidation = 1,  // bad domain data (case files, probabilities, bounds)
  kIo = 2,          // missing/unreadable/unwritable files, parse failures
  kSolver = 3,      // LP/MIP failures, external solver failures
  kVerify = 4,      // schedule decode or verification failures
  kArgument = 5,    // API misuse (bad handles, inverted bounds, duplicates)
  kInternal = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

// Strict double/int parsers; throw Error(kIo) with `context` on failure.
double parse_double(std::string_view text, const std::string& context);
long long parse_int(std::string_view text, const std::string& context);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Split on any run of blanks; never returns empty tokens.
std::vector<std::string> split_ws(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

}  // namespace caesuc

#endif  // CAESUC_UTIL_HPP_
