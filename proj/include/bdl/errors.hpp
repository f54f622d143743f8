// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#ifndef BDL_ERRORS_HPP
#define BDL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bdl {

// Exit codes used by the command line tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_data = 2,
    exit_numeric = 3,
};

/// Bad flags, bad config keys, malformed argument strings.
class UsageError : public std::runtime_error {
  public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

/// Unreadable or malformed input data, dimension mismatches against files.
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Overflow, domain violations, non-finite results in numeric kernels.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Shape disagreement between tensors; message names both shapes.
class ShapeError : public std::invalid_argument {
  public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace bdl

#endif  // BDL_ERRORS_HPP
