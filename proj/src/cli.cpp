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

#include "bdl/cli.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "bdl/errors.hpp"
#include "bdl/kernels.hpp"
#include "bdl/metrics.hpp"

namespace bdl::cli {

namespace {

// ---------------------------------------------------------------------------
// value parsing

double parse_double_value(const std::string& v, const std::string& key) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw UsageError("bad numeric value '" + v + "' for key " + key);
    }
    return out;
}

long long parse_int_value(const std::string& v, const std::string& key) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw UsageError("bad integer value '" + v + "' for key " + key);
    }
    return out;
}

std::uint64_t parse_u64_value(const std::string& v, const std::string& key) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw UsageError("bad unsigned value '" + v + "' for key " + key);
    }
    return out;
}

bool parse_bool_value(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw UsageError("bad boolean value '" + v + "' for key " + key);
}

std::vector<std::string> split_commas(const std::string& v) {
    std::vector<std::string> parts;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ',')) {
        parts.push_back(item);
    }
    return parts;
}

std::vector<std::size_t> parse_size_list(const std::string& v, const std::string& key) {
    std::vector<std::size_t> out;
    for (const auto& part : split_commas(v)) {
        const long long n = parse_int_value(part, key);
        if (n < 1) {
            throw UsageError("entries of " + key + " must be positive");
        }
        out.push_back(static_cast<std::size_t>(n));
    }
    if (out.empty()) {
        throw UsageError("empty list for key " + key);
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    for (const auto& part : split_commas(v)) {
        out.push_back(parse_double_value(part, key));
    }
    return out;
}

}  // namespace

void apply_preset(RunConfig& cfg, const std::string& name) {
    if (name == "xsinx-paper") {
        cfg.task = "regression";
        cfg.widths = {1, 20, 1};
        cfg.activations.clear();
        cfg.prior = "gaussian(0,0.1)";
        cfg.epochs = 20000;
        cfg.batch = 30;
        cfg.samples = 1;
        cfg.lr = 0.02;
        cfg.lr_decay = 0.75;
        cfg.lr_interval = 2500;
        cfg.tau_eps = 1.0;
        cfg.tau_refresh = true;
        cfg.tau_warmup = 1000;
        cfg.k = 1000;
        cfg.levels = {0.5, 0.9};
        cfg.generate = "xsinx";
        cfg.n = 30;
        cfg.noise = 0.3;
        cfg.lo = -10.0;
        cfg.hi = 10.0;
        cfg.standardize_x = false;
    } else if (name == "moons-paper") {
        cfg.task = "classification";
        cfg.widths = {2, 5, 5, 2};
        cfg.activations.clear();
        cfg.prior = "gaussian(0,1)";
        cfg.epochs = 3000;
        cfg.batch = 30;
        cfg.samples = 1;
        cfg.lr = 0.001;
        cfg.lr_decay = 1.0;
        cfg.lr_interval = 0;
        cfg.tau_refresh = false;
        cfg.k = 200;
        cfg.generate = "two-moons";
        cfg.n = 900;
        cfg.noise = 0.1;
        cfg.standardize_x = false;
    } else if (name == "membrane-style") {
        cfg.task = "regression";
        cfg.widths = {5, 30, 15, 10, 3};
        cfg.activations.clear();
        cfg.prior = "hier(gaussian,ig(1,1))";
        cfg.epochs = 1000;
        cfg.batch = 16;
        cfg.samples = 200;
        cfg.lr = 0.005;
        cfg.lr_decay = 0.75;
        cfg.lr_interval = 100;
        cfg.tau_eps = 10.0;
        cfg.tau_refresh = false;
        cfg.k = 1000;
        cfg.standardize_x = true;
    } else {
        throw UsageError("unknown preset '" + name +
                         "' (expected xsinx-paper|moons-paper|membrane-style)");
    }
}

void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "task") {
        parse_task(value);  // validation
        cfg.task = value;
    } else if (key == "widths") {
        cfg.widths = parse_size_list(value, key);
    } else if (key == "activations") {
        cfg.activations = split_commas(value);
        for (const auto& a : cfg.activations) parse_activation(a);
    } else if (key == "prior") {
        parse_prior_or_none(value);  // validation
        cfg.prior = value;
    } else if (key == "epochs") {
        cfg.epochs = static_cast<int>(parse_int_value(value, key));
    } else if (key == "batch") {
        const long long b = parse_int_value(value, key);
        if (b < 1) throw UsageError("batch must be positive");
        cfg.batch = static_cast<std::size_t>(b);
    } else if (key == "samples") {
        cfg.samples = static_cast<int>(parse_int_value(value, key));
    } else if (key == "lr") {
        cfg.lr = parse_double_value(value, key);
    } else if (key == "lr_decay") {
        cfg.lr_decay = parse_double_value(value, key);
    } else if (key == "lr_interval") {
        cfg.lr_interval = static_cast<int>(parse_int_value(value, key));
    } else if (key == "tau_eps") {
        cfg.tau_eps = parse_double_value(value, key);
    } else if (key == "tau_refresh") {
        cfg.tau_refresh = parse_bool_value(value, key);
    } else if (key == "tau_warmup") {
        cfg.tau_warmup = static_cast<int>(parse_int_value(value, key));
    } else if (key == "seed") {
        cfg.seed = parse_u64_value(value, key);
    } else if (key == "standardize_x") {
        cfg.standardize_x = parse_bool_value(value, key);
    } else if (key == "k") {
        cfg.k = static_cast<int>(parse_int_value(value, key));
    } else if (key == "levels") {
        cfg.levels = parse_double_list(value, key);
    } else if (key == "grid") {
        cfg.grid = value;
    } else if (key == "generate") {
        if (value != "xsinx" && value != "two-moons") {
            throw UsageError("generate kind must be xsinx or two-moons, got '" + value + "'");
        }
        cfg.generate = value;
    } else if (key == "n") {
        cfg.n = static_cast<std::size_t>(parse_int_value(value, key));
    } else if (key == "noise") {
        cfg.noise = parse_double_value(value, key);
    } else if (key == "lo") {
        cfg.lo = parse_double_value(value, key);
    } else if (key == "hi") {
        cfg.hi = parse_double_value(value, key);
    } else if (key == "layer") {
        cfg.layer = static_cast<int>(parse_int_value(value, key));
    } else if (key == "bins") {
        cfg.bins = static_cast<int>(parse_int_value(value, key));
    } else if (key == "suite") {
        if (value != "xsinx-grid" && value != "two-moons" && value != "estimator-variance") {
            throw UsageError("suite must be xsinx-grid|two-moons|estimator-variance");
        }
        cfg.suite = value;
    } else if (key == "seeds") {
        cfg.seeds = static_cast<int>(parse_int_value(value, key));
    } else if (key == "jobs") {
        cfg.jobs = static_cast<int>(parse_int_value(value, key));
    } else if (key == "data") {
        cfg.data = value;
    } else if (key == "model") {
        cfg.model = value;
    } else if (key == "out") {
        cfg.out = value;
    } else if (key == "preset") {
        apply_preset(cfg, value);
    } else if (key == "quiet") {
        cfg.quiet = parse_bool_value(value, key);
    } else {
        throw UsageError("unknown config key '" + key + "'");
    }
}

namespace {

std::vector<std::pair<std::string, std::string>> read_config_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open config file '" + path + "'");
    }
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path + ": expected key=value at line " + std::to_string(line_no));
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto kend = key.find_last_not_of(" \t");
        key = key.substr(0, kend == std::string::npos ? 0 : kend + 1);
        const auto vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);
        pairs.emplace_back(key, value);
    }
    return pairs;
}

}  // namespace

void apply_config_file(RunConfig& cfg, const std::string& path) {
    const auto pairs = read_config_pairs(path);
    for (const auto& [key, value] : pairs) {
        if (key == "preset") {
            apply_preset(cfg, value);
        }
    }
    for (const auto& [key, value] : pairs) {
        if (key != "preset") {
            apply_key_value(cfg, key, value);
        }
    }
}

NetworkSpec spec_from(const RunConfig& cfg) {
    const Task task = parse_task(cfg.task);
    if (cfg.activations.empty()) {
        return make_spec(cfg.widths, task == Task::classification);
    }
    NetworkSpec spec;
    spec.widths = cfg.widths;
    for (const auto& name : cfg.activations) {
        spec.activations.push_back(parse_activation(name));
    }
    spec.validate();
    return spec;
}

TrainConfig train_config_from(const RunConfig& cfg) {
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch = cfg.batch;
    tc.mc_samples = cfg.samples;
    tc.lr = {cfg.lr, cfg.lr_decay, cfg.lr_interval};
    tc.seed = cfg.seed;
    tc.task = parse_task(cfg.task);
    tc.tau_eps = cfg.tau_eps;
    tc.tau_refresh = cfg.tau_refresh;
    tc.tau_refresh_warmup = cfg.tau_warmup;
    return tc;
}

GridSpec parse_grid(const std::string& text) {
    // "(lo,hi)@steps" or "(lo,hi)x(lo,hi)@steps"
    GridSpec g;
    std::string s;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    }
    const auto at = s.find('@');
    if (at == std::string::npos || s.empty() || s.front() != '(') {
        throw UsageError("bad grid spec '" + text + "' (expected (lo,hi)@steps)");
    }
    const long long steps = parse_int_value(s.substr(at + 1), "grid steps");
    if (steps < 2) {
        throw UsageError("grid needs at least 2 steps");
    }
    g.steps = static_cast<std::size_t>(steps);
    std::string ranges = s.substr(0, at);
    auto parse_range = [&](const std::string& r, double& lo, double& hi) {
        if (r.size() < 5 || r.front() != '(' || r.back() != ')') {
            throw UsageError("bad grid range '" + r + "'");
        }
        const auto comma = r.find(',');
        if (comma == std::string::npos) {
            throw UsageError("bad grid range '" + r + "'");
        }
        lo = parse_double_value(r.substr(1, comma - 1), "grid lo");
        hi = parse_double_value(r.substr(comma + 1, r.size() - comma - 2), "grid hi");
        if (!(lo < hi)) {
            throw UsageError("grid range must have lo < hi");
        }
    };
    const auto x = ranges.find(")x(");
    if (x == std::string::npos) {
        g.dims = 1;
        parse_range(ranges, g.lo0, g.hi0);
    } else {
        g.dims = 2;
        parse_range(ranges.substr(0, x + 1), g.lo0, g.hi0);
        parse_range(ranges.substr(x + 2), g.lo1, g.hi1);
    }
    return g;
}

Tensor GridSpec::materialize() const {
    if (dims == 1) {
        Tensor x = Tensor::zeros({steps, 1});
        for (std::size_t i = 0; i < steps; ++i) {
            x.at(i, 0) = lo0 + (hi0 - lo0) * static_cast<double>(i) /
                                   static_cast<double>(steps - 1);
        }
        return x;
    }
    Tensor x = Tensor::zeros({steps * steps, 2});
    for (std::size_t i = 0; i < steps; ++i) {
        const double v1 =
            lo1 + (hi1 - lo1) * static_cast<double>(i) / static_cast<double>(steps - 1);
        for (std::size_t j = 0; j < steps; ++j) {
            const double v0 =
                lo0 + (hi0 - lo0) * static_cast<double>(j) / static_cast<double>(steps - 1);
            x.at(i * steps + j, 0) = v0;
            x.at(i * steps + j, 1) = v1;
        }
    }
    return x;
}

// ---------------------------------------------------------------------------
// commands

void run_generate(const RunConfig& cfg) {
    const std::string out = cfg.out.empty() ? "dataset.csv" : cfg.out;
    Dataset ds;
    if (cfg.generate == "xsinx") {
        ds = gen_xsinx(cfg.n, cfg.noise, cfg.lo, cfg.hi, cfg.seed);
    } else {
        ds = gen_two_moons(cfg.n, cfg.noise, cfg.seed);
    }
    save_csv(out, ds);
    if (!cfg.quiet) {
        std::cout << "generated " << ds.size() << " rows (kind " << cfg.generate << ", seed "
                  << cfg.seed << ") -> " << out << "\n";
    }
}

namespace {

TrainData to_train_data(const Dataset& ds) {
    TrainData data;
    data.x = ds.x;
    data.y = ds.y;
    data.labels = ds.labels;
    return data;
}

void write_trace(const std::string& path, const std::vector<TraceRow>& trace) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write trace file '" + path + "'");
    }
    out << "epoch,elbo,data_term,kl_term,lr\n";
    for (const auto& row : trace) {
        out << row.epoch << ',' << format_double(row.elbo) << ',' << format_double(row.data_term)
            << ',' << format_double(row.kl_term) << ',' << format_double(row.lr) << '\n';
    }
}

std::vector<std::pair<std::string, std::string>> provenance(const RunConfig& cfg) {
    return {
        {"task", cfg.task},
        {"prior", cfg.prior},
        {"epochs", std::to_string(cfg.epochs)},
        {"batch", std::to_string(cfg.batch)},
        {"samples", std::to_string(cfg.samples)},
        {"lr", format_double(cfg.lr)},
        {"lr_decay", format_double(cfg.lr_decay)},
        {"lr_interval", std::to_string(cfg.lr_interval)},
        {"tau_refresh", cfg.tau_refresh ? "1" : "0"},
        {"tau_warmup", std::to_string(cfg.tau_warmup)},
        {"standardize_x", cfg.standardize_x ? "1" : "0"},
    };
}

ModelFile train_model(const RunConfig& cfg, const NetworkSpec& spec, const TrainData& data,
                      const std::optional<Standardization>& rec,
                      std::vector<TraceRow>* trace_out) {
    const TrainConfig tc = train_config_from(cfg);
    const auto prior = parse_prior_or_none(cfg.prior);
    Rng rng(tc.seed);

    ModelFile model;
    model.task = tc.task;
    model.spec = spec;
    model.prior = cfg.prior;
    model.standardization = rec;
    model.seed = tc.seed;
    model.config = provenance(cfg);

    if (!prior.has_value()) {
        if (tc.task != Task::regression) {
            throw UsageError("prior=none (deterministic baseline) requires the regression task");
        }
        DeterministicResult res = train_deterministic(spec, data, tc, rng);
        model.deterministic = true;
        model.state.mu = res.weights;
        model.state.rho =
            Tensor::full({spec.param_count()}, -std::numeric_limits<double>::infinity());
        model.state.tau_eps = res.tau_mle;
        if (trace_out != nullptr) {
            *trace_out = std::move(res.trace);
        }
    } else {
        VariationalResult res = train_variational(spec, data, tc, *prior, rng);
        model.deterministic = false;
        model.state = std::move(res.state);
        if (trace_out != nullptr) {
            *trace_out = std::move(res.trace);
        }
    }
    return model;
}

}  // namespace

void run_train(const RunConfig& cfg) {
    if (cfg.data.empty()) {
        throw UsageError("train needs --data <csv>");
    }
    const std::string out = cfg.out.empty() ? "model.bdl" : cfg.out;
    NetworkSpec spec = spec_from(cfg);
    const Task task = parse_task(cfg.task);

    CsvSchema schema;
    schema.n_features = spec.input_dim();
    schema.n_targets = spec.output_dim();
    schema.classification = task == Task::classification;
    Dataset ds = load_csv(cfg.data, schema);
    if (task == Task::classification) {
        for (int lab : ds.labels) {
            if (lab >= static_cast<int>(spec.output_dim())) {
                throw DataError("label " + std::to_string(lab) + " exceeds the " +
                                std::to_string(spec.output_dim()) + "-class output layer");
            }
        }
    }

    std::optional<Standardization> rec;
    if (cfg.standardize_x) {
        auto [standardized, record] = standardize(ds);
        ds = std::move(standardized);
        rec = record;
    }

    std::vector<TraceRow> trace;
    ModelFile model = train_model(cfg, spec, to_train_data(ds), rec, &trace);
    save_model(out, model);
    write_trace(out + ".trace.csv", trace);

    if (!cfg.quiet) {
        std::cout << "trained " << (model.deterministic ? "deterministic" : "variational")
                  << " model on " << ds.size() << " rows";
        if (!trace.empty()) {
            std::cout << ", final " << (model.deterministic ? "-loss" : "elbo") << " "
                      << format_double(trace.back().elbo);
        }
        std::cout << ", tau_eps " << format_double(model.state.tau_eps) << " -> " << out << "\n";
    }
}

void run_predict(const RunConfig& cfg) {
    if (cfg.model.empty()) {
        throw UsageError("predict needs --model <file>");
    }
    if (cfg.k < 1) {
        throw UsageError("k must be at least 1");
    }
    const std::string out = cfg.out.empty() ? "predictions.csv" : cfg.out;
    const ModelFile model = load_model(cfg.model);
    for (double level : cfg.levels) {
        if (!(level > 0.0 && level < 1.0)) {
            throw UsageError("credible levels must lie in (0, 1)");
        }
    }

    Tensor inputs;
    if (!cfg.grid.empty()) {
        const GridSpec grid = parse_grid(cfg.grid);
        if (grid.dims != model.spec.input_dim()) {
            throw DataError("grid dimension " + std::to_string(grid.dims) +
                            " does not match the model input dim " +
                            std::to_string(model.spec.input_dim()));
        }
        inputs = grid.materialize();
    } else if (!cfg.data.empty()) {
        CsvSchema schema;
        schema.n_features = model.spec.input_dim();
        schema.n_targets = 0;
        inputs = load_csv(cfg.data, schema).x;
    } else {
        throw UsageError("predict needs --grid or --data");
    }

    const Tensor raw_inputs = inputs;
    if (model.standardization) {
        inputs = model.standardization->apply(inputs);
    }

    Rng rng(cfg.seed);
    const auto summaries =
        predict_summaries(model.spec, model.state, inputs, cfg.k, cfg.levels, model.task, rng);

    std::ofstream os(out);
    if (!os) {
        throw DataError("cannot write '" + out + "'");
    }
    const std::size_t d = raw_inputs.cols();
    const std::size_t n_out = model.spec.output_dim();
    for (std::size_t j = 0; j < d; ++j) {
        os << (j ? "," : "") << "x" << j;
    }
    for (std::size_t j = 0; j < n_out; ++j) {
        os << ",mean" << j;
    }
    for (std::size_t j = 0; j < n_out; ++j) {
        os << ",var" << j;
    }
    for (double level : cfg.levels) {
        for (std::size_t j = 0; j < n_out; ++j) {
            os << ",lo" << j << "_" << format_double(level) << ",hi" << j << "_"
               << format_double(level);
        }
    }
    os << "\n";
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        const auto& s = summaries[i];
        for (std::size_t j = 0; j < d; ++j) {
            os << (j ? "," : "") << format_double(raw_inputs.at(i, j));
        }
        for (std::size_t j = 0; j < n_out; ++j) {
            os << ',' << format_double(s.mean[j]);
        }
        for (std::size_t j = 0; j < n_out; ++j) {
            os << ',' << format_double(s.variance.at(j, j));
        }
        for (std::size_t li = 0; li < s.intervals.size(); ++li) {
            for (std::size_t j = 0; j < n_out; ++j) {
                os << ',' << format_double(s.intervals[li][j].first) << ','
                   << format_double(s.intervals[li][j].second);
            }
        }
        os << "\n";
    }
    if (!cfg.quiet) {
        std::cout << "predicted " << summaries.size() << " rows (k=" << cfg.k << ") -> " << out
                  << "\n";
    }
}

void run_inspect(const RunConfig& cfg) {
    if (cfg.model.empty()) {
        throw UsageError("inspect needs --model <file>");
    }
    if (cfg.bins < 1) {
        throw UsageError("bins must be at least 1");
    }
    const std::string out = cfg.out.empty() ? "inspect.csv" : cfg.out;
    const ModelFile model = load_model(cfg.model);
    const std::size_t depth = model.spec.depth();
    if (cfg.layer < 1 || static_cast<std::size_t>(cfg.layer) > depth) {
        throw UsageError("layer must lie in [1, " + std::to_string(depth) + "]");
    }
    const auto blk = model.spec.layer_block(static_cast<std::size_t>(cfg.layer - 1));
    const Tensor sigma = model.state.sigma();

    std::ofstream os(out);
    if (!os) {
        throw DataError("cannot write '" + out + "'");
    }
    os << "record,slice,row,col,a,b\n";  // param: a=mu b=sigma; hist: a=lo b=hi plus count
    // per-parameter dump; the bias slice is the trailing row of the block
    for (std::size_t r = 0; r < blk.rows; ++r) {
        const bool bias = r + 1 == blk.rows;
        for (std::size_t c = 0; c < blk.cols; ++c) {
            const std::size_t idx = blk.offset + r * blk.cols + c;
            os << "param," << (bias ? "bias" : "weight") << ',' << r << ',' << c << ','
               << format_double(model.state.mu[idx]) << ',' << format_double(sigma[idx]) << "\n";
        }
    }
    // pooled Monte Carlo histograms per slice
    Rng rng(cfg.seed);
    const int draws = std::max(1, cfg.k);
    auto emit_hist = [&](bool bias) {
        std::vector<double> pool;
        for (std::size_t r = bias ? blk.rows - 1 : 0; r < (bias ? blk.rows : blk.rows - 1); ++r) {
            for (std::size_t c = 0; c < blk.cols; ++c) {
                const std::size_t idx = blk.offset + r * blk.cols + c;
                for (int s = 0; s < draws; ++s) {
                    pool.push_back(model.state.mu[idx] + sigma[idx] * rng.normal());
                }
            }
        }
        if (pool.empty()) {
            return;
        }
        double lo = pool[0];
        double hi = pool[0];
        for (double v : pool) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(hi > lo)) {
            hi = lo + 1e-12;
        }
        std::vector<std::size_t> counts(static_cast<std::size_t>(cfg.bins), 0);
        for (double v : pool) {
            auto bin = static_cast<std::size_t>(static_cast<double>(cfg.bins) * (v - lo) /
                                                (hi - lo));
            counts[std::min(bin, counts.size() - 1)] += 1;
        }
        for (std::size_t b = 0; b < counts.size(); ++b) {
            const double blo = lo + (hi - lo) * static_cast<double>(b) / cfg.bins;
            const double bhi = lo + (hi - lo) * static_cast<double>(b + 1) / cfg.bins;
            os << "hist," << (bias ? "bias" : "weight") << ',' << b << ',' << counts[b] << ','
               << format_double(blo) << ',' << format_double(bhi) << "\n";
        }
    };
    emit_hist(false);
    emit_hist(true);
    if (!cfg.quiet) {
        std::cout << "inspected layer " << cfg.layer << " -> " << out << "\n";
    }
}

// ---------------------------------------------------------------------------
// benchmark

namespace {

struct CellResult {
    std::vector<std::string> rows;
};

void run_cells(int jobs, std::vector<std::function<CellResult()>>& cells,
               std::vector<CellResult>& results) {
    results.resize(cells.size());
    unsigned n_threads = jobs > 0 ? static_cast<unsigned>(jobs)
                                  : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(cells.size()));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error = nullptr;
    std::mutex error_mu;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) {
                return;
            }
            try {
                results[i] = cells[i]();
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        }
    };
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

Tensor linspace_column(double lo, double hi, std::size_t steps) {
    Tensor x = Tensor::zeros({steps, 1});
    for (std::size_t i = 0; i < steps; ++i) {
        x.at(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }
    return x;
}

struct XsinxEval {
    double r2 = 0.0;
    double rmse = 0.0;
    double var_floor_slack = 0.0;
    double tau = 0.0;
};

XsinxEval eval_xsinx_model(const NetworkSpec& spec, const VariationalState& state,
                           bool deterministic, const Tensor& grid_x, const Tensor& grid_y,
                           int k, Rng&& rng) {
    XsinxEval ev;
    ev.tau = state.tau_eps;
    const int draws = deterministic ? 1 : k;
    const Tensor samples = predict_samples(spec, state, grid_x, draws, rng);
    Tensor mean = Tensor::zeros({grid_x.rows(), 1});
    double slack = std::numeric_limits<double>::infinity();
    const double floor = state.tau_eps > 0.0 ? 1.0 / state.tau_eps : 0.0;
    for (std::size_t i = 0; i < grid_x.rows(); ++i) {
        const Tensor block = sample_block(samples, i);
        const Tensor m = predictive_mean(block);
        const Tensor var = predictive_variance(block, state.tau_eps);
        mean.at(i, 0) = m[0];
        slack = std::min(slack, var.at(0, 0) - floor);
    }
    ev.var_floor_slack = slack;
    ev.r2 = r2(grid_y, mean);
    ev.rmse = rmse(grid_y, mean);
    return ev;
}

void benchmark_xsinx(const RunConfig& cfg, std::ostream& os) {
    const std::vector<double> noises = {0.0, 0.1, 0.3, 0.5, 0.7, 0.9};
    const std::vector<std::string> models = {"nn", "bdl-gauss", "bdl-hier"};
    const std::map<std::string, std::string> priors = {
        {"nn", "none"},
        {"bdl-gauss", "gaussian(0,0.1)"},
        {"bdl-hier", "hier(gaussian,ig(1,1))"},
    };
    const Tensor grid_x = linspace_column(cfg.lo, cfg.hi, 400);
    Tensor grid_y = Tensor::zeros({grid_x.rows(), 1});
    for (std::size_t i = 0; i < grid_x.rows(); ++i) {
        const double x = grid_x.at(i, 0);
        grid_y.at(i, 0) = x * std::sin(x);
    }

    std::vector<std::function<CellResult()>> cells;
    for (std::size_t ni = 0; ni < noises.size(); ++ni) {
        for (std::size_t mi = 0; mi < models.size(); ++mi) {
            for (int si = 0; si < cfg.seeds; ++si) {
                const std::size_t cell = (ni * models.size() + mi) * cfg.seeds +
                                         static_cast<std::size_t>(si);
                cells.push_back([&, ni, mi, si, cell]() {
                    const double noise = noises[ni];
                    const std::string& model_name = models[mi];
                    RunConfig local = cfg;
                    local.prior = priors.at(model_name);
                    local.seed = mix_seed(cfg.seed, 1000 + cell, 1);
                    const Dataset ds = gen_xsinx(cfg.n, noise, cfg.lo, cfg.hi,
                                                 mix_seed(cfg.seed, 100 + ni,
                                                          static_cast<std::uint64_t>(si)));
                    const NetworkSpec spec = spec_from(local);
                    std::vector<TraceRow> trace;
                    const ModelFile model =
                        train_model(local, spec, to_train_data(ds), std::nullopt, &trace);
                    const XsinxEval ev = eval_xsinx_model(
                        spec, model.state, model.deterministic, grid_x, grid_y, cfg.k,
                        Rng(mix_seed(cfg.seed, 2000 + cell, 2)));
                    std::ostringstream row;
                    row << "xsinx-grid," << cell << ',' << model_name << ','
                        << format_double(noise) << ',' << si << ',' << ds.size() << ','
                        << format_double(ev.r2) << ',' << format_double(ev.rmse) << ','
                        << format_double(ev.tau) << ',' << format_double(ev.var_floor_slack)
                        << ',' << format_double(trace.empty() ? 0.0 : trace.back().elbo);
                    return CellResult{{row.str()}};
                });
            }
        }
    }
    std::vector<CellResult> results;
    run_cells(cfg.jobs, cells, results);
    os << "suite,cell,model,noise,seed,n_train,r2,rmse,tau_eps,var_floor_slack,final_elbo\n";
    for (const auto& res : results) {
        for (const auto& row : res.rows) {
            os << row << "\n";
        }
    }
}

double min_distance_to_moons(double x0, double x1) {
    // noiseless manifolds: (cos t, sin t) and (1 - cos t, 1/2 - sin t)
    constexpr int samples = 1024;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double t = std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(samples - 1);
        const double c = std::cos(t);
        const double s = std::sin(t);
        const double d0 = (x0 - c) * (x0 - c) + (x1 - s) * (x1 - s);
        const double d1 = (x0 - (1.0 - c)) * (x0 - (1.0 - c)) + (x1 - (0.5 - s)) * (x1 - (0.5 - s));
        best = std::min({best, d0, d1});
    }
    return std::sqrt(best);
}

void benchmark_moons(const RunConfig& cfg, std::ostream& os) {
    const std::vector<std::string> priors = {
        "laplace(0,1)",          "gaussian(0,1)",         "cauchy(1,1)",
        "hier(laplace,ig(1,1))", "hier(gaussian,ig(1,1))", "hier(cauchy,ig(1,1))",
    };
    // evaluation grid over (-3,3)^2 and its band mask near the manifolds
    const std::size_t steps = 61;
    GridSpec gspec{2, -3.0, 3.0, -3.0, 3.0, steps};
    const Tensor grid = gspec.materialize();
    std::vector<bool> in_band(grid.rows());
    for (std::size_t i = 0; i < grid.rows(); ++i) {
        in_band[i] = min_distance_to_moons(grid.at(i, 0), grid.at(i, 1)) <= 0.2;
    }

    std::vector<std::function<CellResult()>> cells;
    for (std::size_t pi = 0; pi < priors.size(); ++pi) {
        for (int si = 0; si < cfg.seeds; ++si) {
            const std::size_t cell = pi * static_cast<std::size_t>(cfg.seeds) +
                                     static_cast<std::size_t>(si);
            cells.push_back([&, pi, si, cell]() {
                RunConfig local = cfg;
                local.prior = priors[pi];
                local.seed = mix_seed(cfg.seed, 5000 + cell, 1);
                const Dataset full =
                    gen_two_moons(cfg.n, cfg.noise,
                                  mix_seed(cfg.seed, 300 + static_cast<std::uint64_t>(si), 0));
                auto [train_set, val_set] =
                    split(full, 0.7, mix_seed(cfg.seed, 400 + static_cast<std::uint64_t>(si), 0));
                const NetworkSpec spec = spec_from(local);
                const ModelFile model =
                    train_model(local, spec, to_train_data(train_set), std::nullopt, nullptr);

                // validation accuracy from the mean predictive probabilities
                Rng acc_rng(mix_seed(cfg.seed, 6000 + cell, 2));
                const Tensor val_samples =
                    predict_samples(spec, model.state, val_set.x, cfg.k, acc_rng);
                Tensor val_probs = Tensor::zeros({val_set.size(), spec.output_dim()});
                for (std::size_t i = 0; i < val_set.size(); ++i) {
                    const Tensor m = predictive_mean(sample_block(val_samples, i));
                    for (std::size_t j = 0; j < spec.output_dim(); ++j) {
                        val_probs.at(i, j) = m[j];
                    }
                }
                const double acc = accuracy(val_set.labels, val_probs);

                // predictive variance of the class-0 probability over the grid
                Rng grid_rng(mix_seed(cfg.seed, 7000 + cell, 3));
                const Tensor grid_samples =
                    predict_samples(spec, model.state, grid, cfg.k, grid_rng);
                double band_acc = 0.0;
                double out_acc = 0.0;
                std::size_t band_n = 0;
                std::size_t out_n = 0;
                for (std::size_t i = 0; i < grid.rows(); ++i) {
                    const Tensor var = predictive_variance(sample_block(grid_samples, i), 0.0);
                    const double v = var.at(0, 0);
                    if (in_band[i]) {
                        band_acc += v;
                        ++band_n;
                    } else {
                        out_acc += v;
                        ++out_n;
                    }
                }
                std::ostringstream row;
                row << "two-moons," << cell << ',' << priors[pi] << ',' << si << ','
                    << train_set.size() << ',' << format_double(acc) << ','
                    << format_double(band_acc / static_cast<double>(band_n)) << ','
                    << format_double(out_acc / static_cast<double>(out_n));
                return CellResult{{row.str()}};
            });
        }
    }
    std::vector<CellResult> results;
    run_cells(cfg.jobs, cells, results);
    os << "suite,cell,prior,seed,n_train,accuracy,band_var,outside_var\n";
    for (const auto& res : results) {
        for (const auto& row : res.rows) {
            os << row << "\n";
        }
    }
}

void benchmark_estimators(const RunConfig& cfg, std::ostream& os) {
    const ConjugateToy toy = make_conjugate_toy();
    const int reps = 10000;
    Batch batch;
    batch.x = toy.data.x;
    batch.y = toy.data.y;
    const std::size_t n = toy.data.size();
    const std::size_t p2 = 2 * toy.spec.param_count();

    std::vector<std::function<CellResult()>> cells;
    cells.push_back([&]() {
        // Welford accumulators per coordinate
        std::vector<double> mean_s(p2, 0.0), m2_s(p2, 0.0);
        std::vector<double> mean_p(p2, 0.0), m2_p(p2, 0.0);
        Rng rng_score(mix_seed(cfg.seed, 11, 0));
        Rng rng_path(mix_seed(cfg.seed, 12, 0));
        for (int r = 0; r < reps; ++r) {
            const Tensor gs = elbo_grad_score(toy.spec, toy.fixed_state, toy.prior, batch, n, 1,
                                              rng_score)
                                  .concatenated();
            const Tensor gp = elbo_grad_pathwise(toy.spec, toy.fixed_state, toy.prior, batch, n,
                                                 1, rng_path)
                                  .concatenated();
            const double k = static_cast<double>(r + 1);
            for (std::size_t i = 0; i < p2; ++i) {
                double d = gs[i] - mean_s[i];
                mean_s[i] += d / k;
                m2_s[i] += d * (gs[i] - mean_s[i]);
                d = gp[i] - mean_p[i];
                mean_p[i] += d / k;
                m2_p[i] += d * (gp[i] - mean_p[i]);
            }
        }
        CellResult res;
        const char* names[4] = {"mu_w", "mu_b", "rho_w", "rho_b"};
        for (std::size_t i = 0; i < p2; ++i) {
            const double vs = m2_s[i] / (reps - 1);
            const double vp = m2_p[i] / (reps - 1);
            std::ostringstream row;
            row << "estimator-variance,0," << names[i] << ',' << format_double(vs) << ','
                << format_double(vp) << ',' << format_double(vs / vp);
            res.rows.push_back(row.str());
        }
        return res;
    });
    std::vector<CellResult> results;
    run_cells(1, cells, results);
    os << "suite,cell,coordinate,var_score,var_pathwise,ratio\n";
    for (const auto& res : results) {
        for (const auto& row : res.rows) {
            os << row << "\n";
        }
    }
}

}  // namespace

void run_benchmark(const RunConfig& cfg) {
    if (cfg.seeds < 1) {
        throw UsageError("seeds must be at least 1");
    }
    const std::string out = cfg.out.empty() ? "benchmark.csv" : cfg.out;
    std::ostringstream buffer;
    if (cfg.suite == "xsinx-grid") {
        benchmark_xsinx(cfg, buffer);
    } else if (cfg.suite == "two-moons") {
        benchmark_moons(cfg, buffer);
    } else {
        benchmark_estimators(cfg, buffer);
    }
    std::ofstream os(out);
    if (!os) {
        throw DataError("cannot write '" + out + "'");
    }
    os << buffer.str();
    if (!os) {
        throw DataError("failed writing '" + out + "'");
    }
    if (!cfg.quiet) {
        std::cout << "benchmark " << cfg.suite << " (seeds=" << cfg.seeds << ") -> " << out
                  << "\n";
    }
}

ConjugateToy make_conjugate_toy() {
    ConjugateToy toy;
    toy.spec.widths = {1, 1};
    toy.spec.activations = {Activation::identity};
    // zero-sum design keeps the weight/bias posterior uncorrelated
    const std::vector<double> xs = {-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0};
    const std::vector<double> offsets = {0.12, -0.05, 0.08, -0.1, 0.06, -0.14, 0.03, 0.09};
    const double w_true = 1.2;
    const double b_true = 0.4;
    const std::size_t n = xs.size();
    toy.data.x = Tensor::zeros({n, 1});
    toy.data.y = Tensor::zeros({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
        toy.data.x.at(i, 0) = xs[i];
        toy.data.y.at(i, 0) = w_true * xs[i] + b_true + offsets[i];
    }
    toy.prior = GaussianPrior{0.0, 1.0};
    toy.tau_eps = 4.0;
    toy.fixed_state.mu = Tensor::row({0.3, -0.2});
    toy.fixed_state.rho =
        Tensor::row({kernels::softplus_inv(0.25), kernels::softplus_inv(0.2)});
    toy.fixed_state.tau_eps = toy.tau_eps;
    return toy;
}

// ---------------------------------------------------------------------------
// argv entry

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

void bind_key(CLI::App* cmd, Overrides& ov, const std::string& flag, const std::string& key,
              const std::string& desc) {
    cmd->add_option_function<std::string>(
        flag, [&ov, key](const std::string& v) { ov.emplace_back(key, v); }, desc);
}

RunConfig build_config(const std::string& command, const std::string& config_path,
                       const Overrides& overrides) {
    RunConfig cfg;

    // settle the preset first: explicit flag > config file > suite default
    std::string preset;
    std::string suite = cfg.suite;
    Overrides file_pairs;
    if (!config_path.empty()) {
        file_pairs = read_config_pairs(config_path);
    }
    for (const auto& [key, value] : file_pairs) {
        if (key == "preset") preset = value;
        if (key == "suite") suite = value;
    }
    for (const auto& [key, value] : overrides) {
        if (key == "preset") preset = value;
        if (key == "suite") suite = value;
    }
    if (preset.empty() && command == "benchmark") {
        preset = suite == "two-moons" ? "moons-paper" : "xsinx-paper";
    }
    if (!preset.empty()) {
        apply_preset(cfg, preset);
        cfg.preset = preset;
    }
    for (const auto& [key, value] : file_pairs) {
        if (key != "preset") apply_key_value(cfg, key, value);
    }
    for (const auto& [key, value] : overrides) {
        if (key != "preset") apply_key_value(cfg, key, value);
    }
    return cfg;
}

}  // namespace

int main_entry(int argc, const char* const* argv) {
    CLI::App app{"Bayesian deep learning for small noisy datasets"};
    app.require_subcommand(1);

    struct Cmd {
        CLI::App* sub = nullptr;
        Overrides overrides;
        std::string config_path;
    };
    std::map<std::string, Cmd> cmds;

    auto add_command = [&](const std::string& name, const std::string& desc) {
        Cmd& c = cmds[name];
        c.sub = app.add_subcommand(name, desc);
        c.sub->add_option("--config", c.config_path, "key=value config file");
        bind_key(c.sub, c.overrides, "--seed", "seed", "master seed");
        bind_key(c.sub, c.overrides, "--out", "out", "output path");
        c.sub->add_flag_function(
            "--quiet", [&c](std::int64_t) { c.overrides.emplace_back("quiet", "1"); },
            "suppress progress output");
        bind_key(c.sub, c.overrides, "--preset", "preset",
                 "xsinx-paper|moons-paper|membrane-style");
        return c.sub;
    };

    {
        auto* sub = add_command("generate", "write a synthetic dataset as CSV");
        Cmd& c = cmds["generate"];
        bind_key(sub, c.overrides, "--kind", "generate", "xsinx|two-moons");
        bind_key(sub, c.overrides, "--n", "n", "sample count");
        bind_key(sub, c.overrides, "--noise", "noise", "noise standard deviation");
        bind_key(sub, c.overrides, "--lo", "lo", "interval start (xsinx)");
        bind_key(sub, c.overrides, "--hi", "hi", "interval end (xsinx)");
    }
    {
        auto* sub = add_command("train", "fit a model on a CSV dataset");
        Cmd& c = cmds["train"];
        bind_key(sub, c.overrides, "--data", "data", "training CSV");
        bind_key(sub, c.overrides, "--task", "task", "regression|classification");
        bind_key(sub, c.overrides, "--widths", "widths", "layer widths, e.g. 1,20,1");
        bind_key(sub, c.overrides, "--prior", "prior", "prior string or none");
        bind_key(sub, c.overrides, "--epochs", "epochs", "epoch budget");
        bind_key(sub, c.overrides, "--batch", "batch", "mini-batch size");
        bind_key(sub, c.overrides, "--samples", "samples", "MC samples per step");
        bind_key(sub, c.overrides, "--lr", "lr", "base learning rate");
        bind_key(sub, c.overrides, "--tau-eps", "tau_eps", "noise precision");
    }
    {
        auto* sub = add_command("predict", "Monte Carlo predictions from a model file");
        Cmd& c = cmds["predict"];
        bind_key(sub, c.overrides, "--model", "model", "model file");
        bind_key(sub, c.overrides, "--data", "data", "inputs CSV (features only)");
        bind_key(sub, c.overrides, "--grid", "grid", "(lo,hi)@steps or (lo,hi)x(lo,hi)@steps");
        bind_key(sub, c.overrides, "--k", "k", "predictive draws");
        bind_key(sub, c.overrides, "--levels", "levels", "credible levels, e.g. 0.5,0.9");
    }
    {
        auto* sub = add_command("inspect", "dump variational marginals of one layer");
        Cmd& c = cmds["inspect"];
        bind_key(sub, c.overrides, "--model", "model", "model file");
        bind_key(sub, c.overrides, "--layer", "layer", "1-based layer index");
        bind_key(sub, c.overrides, "--bins", "bins", "histogram bins");
        bind_key(sub, c.overrides, "--k", "k", "draws per parameter");
    }
    {
        auto* sub = add_command("benchmark", "run a study suite and write a results table");
        Cmd& c = cmds["benchmark"];
        bind_key(sub, c.overrides, "--suite", "suite",
                 "xsinx-grid|two-moons|estimator-variance");
        bind_key(sub, c.overrides, "--seeds", "seeds", "seeds per cell");
        bind_key(sub, c.overrides, "--jobs", "jobs", "worker threads (0 = auto)");
        bind_key(sub, c.overrides, "--epochs", "epochs", "override epoch budget");
        bind_key(sub, c.overrides, "--k", "k", "predictive draws");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        for (auto& [name, cmd] : cmds) {
            if (cmd.sub->parsed()) {
                const RunConfig cfg = build_config(name, cmd.config_path, cmd.overrides);
                if (name == "generate") run_generate(cfg);
                else if (name == "train") run_train(cfg);
                else if (name == "predict") run_predict(cfg);
                else if (name == "inspect") run_inspect(cfg);
                else run_benchmark(cfg);
                return exit_ok;
            }
        }
        throw UsageError("no command given");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const ShapeError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    }
}

}  // namespace bdl::cli
