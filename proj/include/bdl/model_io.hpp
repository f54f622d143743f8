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

#ifndef BDL_MODEL_IO_HPP
#define BDL_MODEL_IO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bdl/data.hpp"
#include "bdl/network.hpp"
#include "bdl/variational.hpp"

namespace bdl {

/// Self-describing single-file model artifact.  Plain text with a format
/// tag and version line; parameter blobs are written in shortest
/// round-trip decimal, so save -> load -> save reproduces identical bytes.
struct ModelFile {
    bool deterministic = false;  // point-estimate baseline (sigma pinned to 0)
    Task task = Task::regression;
    NetworkSpec spec;
    std::string prior = "none";
    VariationalState state;
    std::optional<Standardization> standardization;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config;  // provenance
};

void save_model(const std::string& path, const ModelFile& model);

ModelFile load_model(const std::string& path);

}  // namespace bdl

#endif  // BDL_MODEL_IO_HPP
