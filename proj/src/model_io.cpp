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

#include "bdl/model_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "bdl/errors.hpp"

namespace bdl {

namespace {

constexpr const char* format_tag = "bdl-model v1";

void write_vector(std::ofstream& out, const char* key, const Tensor& t) {
    out << key;
    for (std::size_t i = 0; i < t.numel(); ++i) {
        out << ' ' << format_double(t[i]);
    }
    out << '\n';
}

double parse_double(const std::string& token, const std::string& context) {
    double v = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw DataError("model file: bad number '" + token + "' in " + context);
    }
    return v;
}

}  // namespace

void save_model(const std::string& path, const ModelFile& model) {
    model.spec.validate();
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write model file '" + path + "'");
    }
    out << format_tag << '\n';
    out << "kind " << (model.deterministic ? "deterministic" : "variational") << '\n';
    out << "task " << task_name(model.task) << '\n';
    out << "widths";
    for (std::size_t w : model.spec.widths) {
        out << ' ' << w;
    }
    out << '\n';
    out << "activations";
    for (Activation a : model.spec.activations) {
        out << ' ' << activation_name(a);
    }
    out << '\n';
    out << "prior " << model.prior << '\n';
    out << "tau_eps " << format_double(model.state.tau_eps) << '\n';
    out << "seed " << model.seed << '\n';
    if (model.standardization) {
        const auto& rec = *model.standardization;
        out << "standardize " << rec.mean.size() << '\n';
        for (std::size_t j = 0; j < rec.mean.size(); ++j) {
            out << "feature " << format_double(rec.mean[j]) << ' '
                << format_double(rec.stddev[j]) << ' ' << (rec.constant[j] ? 1 : 0) << '\n';
        }
    } else {
        out << "standardize none\n";
    }
    for (const auto& [key, value] : model.config) {
        out << "config " << key << ' ' << value << '\n';
    }
    out << "params " << model.state.size() << '\n';
    write_vector(out, "mu", model.state.mu);
    write_vector(out, "rho", model.state.rho);
    out << "end\n";
    if (!out) {
        throw DataError("failed writing model file '" + path + "'");
    }
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open model file '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line) || line != format_tag) {
        throw DataError("'" + path + "' is not a " + std::string(format_tag) + " file");
    }

    ModelFile model;
    std::size_t param_count = 0;
    bool have_mu = false;
    bool have_rho = false;
    bool ended = false;

    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) {
            continue;
        }
        if (key == "kind") {
            std::string kind;
            ls >> kind;
            if (kind != "variational" && kind != "deterministic") {
                throw DataError("model file: unknown kind '" + kind + "'");
            }
            model.deterministic = kind == "deterministic";
        } else if (key == "task") {
            std::string task;
            ls >> task;
            model.task = parse_task(task);
        } else if (key == "widths") {
            std::size_t w = 0;
            while (ls >> w) {
                model.spec.widths.push_back(w);
            }
        } else if (key == "activations") {
            std::string name;
            while (ls >> name) {
                model.spec.activations.push_back(parse_activation(name));
            }
        } else if (key == "prior") {
            ls >> model.prior;
        } else if (key == "tau_eps") {
            std::string token;
            ls >> token;
            model.state.tau_eps = parse_double(token, "tau_eps");
        } else if (key == "seed") {
            ls >> model.seed;
        } else if (key == "standardize") {
            std::string arg;
            ls >> arg;
            if (arg != "none") {
                const std::size_t d = static_cast<std::size_t>(std::stoul(arg));
                Standardization rec;
                for (std::size_t j = 0; j < d; ++j) {
                    std::string fline;
                    if (!std::getline(in, fline)) {
                        throw DataError("model file: truncated standardization record");
                    }
                    std::istringstream fs(fline);
                    std::string tag, m, s;
                    int c = 0;
                    if (!(fs >> tag >> m >> s >> c) || tag != "feature") {
                        throw DataError("model file: bad standardization line '" + fline + "'");
                    }
                    rec.mean.push_back(parse_double(m, "standardize mean"));
                    rec.stddev.push_back(parse_double(s, "standardize stddev"));
                    rec.constant.push_back(c != 0);
                }
                model.standardization = std::move(rec);
            }
        } else if (key == "config") {
            std::string ckey;
            ls >> ckey;
            std::string value;
            std::getline(ls, value);
            if (!value.empty() && value.front() == ' ') {
                value.erase(value.begin());
            }
            model.config.emplace_back(ckey, value);
        } else if (key == "params") {
            ls >> param_count;
        } else if (key == "mu" || key == "rho") {
            std::vector<double> values;
            values.reserve(param_count);
            std::string token;
            while (ls >> token) {
                values.push_back(parse_double(token, key));
            }
            if (values.size() != param_count) {
                throw DataError("model file: " + key + " has " + std::to_string(values.size()) +
                                " entries, expected " + std::to_string(param_count));
            }
            Tensor t = Tensor::row(std::move(values));
            if (key == "mu") {
                model.state.mu = std::move(t);
                have_mu = true;
            } else {
                model.state.rho = std::move(t);
                have_rho = true;
            }
        } else if (key == "end") {
            ended = true;
            break;
        } else {
            throw DataError("model file: unknown key '" + key + "'");
        }
    }
    if (!ended || !have_mu || !have_rho) {
        throw DataError("model file '" + path + "' is truncated");
    }
    model.spec.validate();
    if (model.spec.param_count() != param_count) {
        throw DataError("model file: parameter count " + std::to_string(param_count) +
                        " does not match the architecture (" +
                        std::to_string(model.spec.param_count()) + ")");
    }
    return model;
}

}  // namespace bdl
