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

#include "bdl/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bdl/errors.hpp"

namespace bdl {

Tensor Standardization::apply(const Tensor& x) const {
    if (x.cols() != mean.size()) {
        throw ShapeError("standardization record covers " + std::to_string(mean.size()) +
                         " features, input has " + std::to_string(x.cols()));
    }
    Tensor out = x;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            if (!constant[j]) {
                out.at(i, j) = (out.at(i, j) - mean[j]) / stddev[j];
            }
        }
    }
    return out;
}

Tensor Standardization::invert(const Tensor& x) const {
    if (x.cols() != mean.size()) {
        throw ShapeError("standardization record covers " + std::to_string(mean.size()) +
                         " features, input has " + std::to_string(x.cols()));
    }
    Tensor out = x;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            if (!constant[j]) {
                out.at(i, j) = out.at(i, j) * stddev[j] + mean[j];
            }
        }
    }
    return out;
}

Dataset gen_xsinx(std::size_t n, double sigma, double lo, double hi, std::uint64_t seed) {
    if (n < 1) {
        throw UsageError("need at least one sample");
    }
    if (!(lo < hi)) {
        throw UsageError("invalid interval: lo must be below hi");
    }
    if (sigma < 0.0) {
        throw UsageError("noise deviation must be non-negative");
    }
    Rng rng(seed);
    Dataset ds;
    ds.x = Tensor::zeros({n, 1});
    ds.y = Tensor::zeros({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(lo, hi);
        ds.x.at(i, 0) = x;
        ds.y.at(i, 0) = x * std::sin(x) + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
    }
    return ds;
}

Dataset gen_two_moons(std::size_t n, double sigma, std::uint64_t seed) {
    if (n < 2) {
        throw UsageError("need at least two samples");
    }
    if (sigma < 0.0) {
        throw UsageError("noise deviation must be non-negative");
    }
    Rng rng(seed);
    Dataset ds;
    ds.x = Tensor::zeros({n, 2});
    ds.labels.resize(n);
    const std::size_t n0 = (n + 1) / 2;  // class 0 takes the extra point
    for (std::size_t i = 0; i < n; ++i) {
        const bool upper = i < n0;
        const double t = rng.uniform(0.0, std::numbers::pi);
        double x0 = upper ? std::cos(t) : 1.0 - std::cos(t);
        double x1 = upper ? std::sin(t) : 0.5 - std::sin(t);
        if (sigma > 0.0) {
            x0 += sigma * rng.normal();
            x1 += sigma * rng.normal();
        }
        ds.x.at(i, 0) = x0;
        ds.x.at(i, 1) = x1;
        ds.labels[i] = upper ? 0 : 1;
    }
    return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw UsageError("train fraction must lie in (0, 1)");
    }
    const std::size_t n = ds.size();
    const std::size_t n_train = std::min(
        n, static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n))));
    Rng rng(seed);
    const auto order = rng.permutation(n);

    auto take = [&](std::size_t begin, std::size_t end) {
        Dataset part;
        const std::size_t m = end - begin;
        part.x = Tensor::zeros({m, ds.x.cols()});
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < ds.x.cols(); ++j) {
                part.x.at(i, j) = ds.x.at(order[begin + i], j);
            }
        }
        if (ds.classification()) {
            part.labels.resize(m);
            for (std::size_t i = 0; i < m; ++i) {
                part.labels[i] = ds.labels[order[begin + i]];
            }
        } else {
            part.y = Tensor::zeros({m, ds.y.cols()});
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < ds.y.cols(); ++j) {
                    part.y.at(i, j) = ds.y.at(order[begin + i], j);
                }
            }
        }
        part.applied = ds.applied;
        return part;
    };
    if (n_train == 0 || n_train == n) {
        throw UsageError("split would leave an empty part");
    }
    return {take(0, n_train), take(n_train, n)};
}

std::pair<Dataset, Standardization> standardize(const Dataset& ds) {
    const std::size_t n = ds.size();
    const std::size_t d = ds.x.cols();
    Standardization rec;
    rec.mean.resize(d);
    rec.stddev.resize(d);
    rec.constant.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean += ds.x.at(i, j);
        }
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = ds.x.at(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(n);
        const double sd = std::sqrt(var);
        rec.mean[j] = mean;
        rec.stddev[j] = sd > 0.0 ? sd : 1.0;
        rec.constant[j] = !(sd > 0.0);
    }
    Dataset out = ds;
    out.x = rec.apply(ds.x);
    out.applied = rec;
    return {out, rec};
}

namespace {

bool parse_field(const std::string& field, double& out) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
    if (begin == end) {
        return false;
    }
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    const std::size_t want =
        schema.n_features + (schema.classification ? 1 : schema.n_targets);

    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> row_lines;
    std::string line;
    std::size_t line_no = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) {
            continue;
        }
        const auto fields = split_line(line);
        std::vector<double> values(fields.size());
        bool numeric = true;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (!parse_field(fields[j], values[j])) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first_content_line) {
                first_content_line = false;  // header row
                continue;
            }
            throw DataError(path + ": non-numeric value at line " + std::to_string(line_no));
        }
        first_content_line = false;
        if (fields.size() != want) {
            throw DataError(path + ": expected " + std::to_string(want) + " columns, got " +
                            std::to_string(fields.size()) + " at line " + std::to_string(line_no));
        }
        rows.push_back(std::move(values));
        row_lines.push_back(line_no);
    }
    if (rows.empty()) {
        throw DataError(path + ": no data rows");
    }

    Dataset ds;
    const std::size_t n = rows.size();
    ds.x = Tensor::zeros({n, schema.n_features});
    if (schema.classification) {
        ds.labels.resize(n);
    } else if (schema.n_targets > 0) {
        ds.y = Tensor::zeros({n, schema.n_targets});
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < schema.n_features; ++j) {
            ds.x.at(i, j) = rows[i][j];
        }
        if (schema.classification) {
            const double lab = rows[i][schema.n_features];
            if (lab != std::floor(lab) || lab < 0.0) {
                throw DataError(path + ": label must be a non-negative integer at line " +
                                std::to_string(row_lines[i]));
            }
            ds.labels[i] = static_cast<int>(lab);
        } else {
            for (std::size_t j = 0; j < schema.n_targets; ++j) {
                ds.y.at(i, j) = rows[i][schema.n_features + j];
            }
        }
    }
    return ds;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void save_csv(const std::string& path, const Dataset& ds, bool header) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path + "'");
    }
    if (header) {
        for (std::size_t j = 0; j < ds.x.cols(); ++j) {
            out << (j ? "," : "") << "x" << j;
        }
        if (ds.classification()) {
            out << ",label";
        } else {
            for (std::size_t j = 0; j < ds.y.cols(); ++j) {
                out << ",y" << j;
            }
        }
        out << "\n";
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.x.cols(); ++j) {
            out << (j ? "," : "") << format_double(ds.x.at(i, j));
        }
        if (ds.classification()) {
            out << "," << ds.labels[i];
        } else {
            for (std::size_t j = 0; j < ds.y.cols(); ++j) {
                out << "," << format_double(ds.y.at(i, j));
            }
        }
        out << "\n";
    }
    if (!out) {
        throw DataError("failed writing '" + path + "'");
    }
}

}  // namespace bdl
