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

#ifndef BDL_CLI_HPP
#define BDL_CLI_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bdl/model_io.hpp"
#include "bdl/optimizer.hpp"
#include "bdl/predictive.hpp"

namespace bdl::cli {

/// Flat configuration shared by every command.  Config files are plain
/// key=value lines with these exact field names; values given on the
/// command line win over the file, which wins over the preset.
struct RunConfig {
    // model / training
    std::string task = "regression";
    std::vector<std::size_t> widths = {1, 20, 1};
    std::vector<std::string> activations;  // empty: tanh hidden + task default output
    std::string prior = "gaussian(0,1)";
    int epochs = 5000;
    std::size_t batch = 30;
    int samples = 1;
    double lr = 0.01;
    double lr_decay = 1.0;
    int lr_interval = 0;
    double tau_eps = 1.0;
    bool tau_refresh = false;
    int tau_warmup = 0;
    std::uint64_t seed = 1;
    bool standardize_x = false;
    // prediction
    int k = 1000;
    std::vector<double> levels = {0.5, 0.9};
    std::string grid;
    // dataset generation
    std::string generate = "xsinx";
    std::size_t n = 30;
    double noise = 0.3;
    double lo = -10.0;
    double hi = 10.0;
    // inspection
    int layer = 1;
    int bins = 40;
    // benchmark
    std::string suite = "xsinx-grid";
    int seeds = 5;
    int jobs = 0;  // 0: hardware concurrency
    // paths and misc
    std::string data;
    std::string model;
    std::string out;
    std::string preset;
    bool quiet = false;
};

/// Applies one key=value pair; throws UsageError on unknown keys or
/// malformed values.
void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Loads a key=value config file ('#' starts a comment).  A preset line is
/// applied first regardless of position.
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Baked-in experiment defaults: xsinx-paper, moons-paper, membrane-style.
void apply_preset(RunConfig& cfg, const std::string& name);

/// Checked conversions from the flat config.
NetworkSpec spec_from(const RunConfig& cfg);
TrainConfig train_config_from(const RunConfig& cfg);

struct GridSpec {
    std::size_t dims = 1;
    double lo0 = 0.0, hi0 = 0.0;
    double lo1 = 0.0, hi1 = 0.0;
    std::size_t steps = 0;

    Tensor materialize() const;
};

/// "(lo,hi)@steps" or "(lo,hi)x(lo,hi)@steps"
GridSpec parse_grid(const std::string& text);

// Command entry points; they throw typed errors which main maps onto exit
// codes (1 usage, 2 data, 3 numeric).
void run_generate(const RunConfig& cfg);
void run_train(const RunConfig& cfg);
void run_predict(const RunConfig& cfg);
void run_inspect(const RunConfig& cfg);
void run_benchmark(const RunConfig& cfg);

/// Two-parameter linear-Gaussian model with a zero-sum design, so the
/// posterior factorizes exactly and the optimal mean-field Gaussian attains
/// the evidence.  Shared by the estimator-variance suite and the tests.
struct ConjugateToy {
    NetworkSpec spec;            // [1, 1] identity
    TrainData data;              // fixed eight-point design
    PriorSpec prior;             // gaussian(0, 1)
    double tau_eps = 4.0;        // observation precision
    VariationalState fixed_state;  // reference point for estimator studies
};

ConjugateToy make_conjugate_toy();

/// argv-level entry used by the binary; returns a process exit code.
int main_entry(int argc, const char* const* argv);

}  // namespace bdl::cli

#endif  // BDL_CLI_HPP
