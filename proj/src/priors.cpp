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

#include "bdl/priors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bdl/errors.hpp"
#include "bdl/quadrature.hpp"

namespace bdl {

namespace {

constexpr double half_log_2pi = 0.91893853320467274178;

void require_positive(double v, const char* name) {
    if (!(v > 0.0)) {
        throw UsageError(std::string("prior parameter ") + name + " must be positive, got " +
                         std::to_string(v));
    }
}

// ---------------------------------------------------------------------------
// Scale-mixture quadrature: p(w) = Int base(w | s) IG(s | alpha, beta) ds on
// the axis t = ln s.  The log-integrand is strictly concave in t for every
// base in the catalog, so the mode and the level crossings used to place the
// panels are found by closed form or safeguarded bisection.

struct ScaleMixture {
    PriorBase base;
    double alpha;
    double beta;
    double loc;

    // log of e^t * base(w | e^t) * IG(e^t | alpha, beta) up to the constant
    // alpha*ln(beta) - lgamma(alpha), which cancels against log_norm().
    double log_integrand(double u, double t) const {
        const double ig = -alpha * t - beta * std::exp(-t);
        switch (base) {
            case PriorBase::gaussian:  // s is the variance
                return -half_log_2pi - 0.5 * t - 0.5 * u * u * std::exp(-t) + ig;
            case PriorBase::laplace:  // s is the scale
                return -std::numbers::ln2 - t - std::fabs(u) * std::exp(-t) + ig;
            case PriorBase::cauchy: {  // s is the scale
                const double q = u * std::exp(-t);
                // ln(e^{2t} + u^2) = 2t + log1p(q^2)
                return t - std::log(std::numbers::pi) - (2.0 * t + std::log1p(q * q)) + ig;
            }
        }
        return 0.0;
    }

    double dlog_integrand(double u, double t) const {
        const double ig = -alpha + beta * std::exp(-t);
        switch (base) {
            case PriorBase::gaussian:
                return -0.5 + 0.5 * u * u * std::exp(-t) + ig;
            case PriorBase::laplace:
                return -1.0 + std::fabs(u) * std::exp(-t) + ig;
            case PriorBase::cauchy: {
                const double q = u * std::exp(-t);
                return 1.0 - 2.0 / (1.0 + q * q) + ig;
            }
        }
        return 0.0;
    }

    // d/du of log base(u | s=e^t); multiplies the integrand in the
    // derivative integral.
    double dbase_du(double u, double t) const {
        switch (base) {
            case PriorBase::gaussian:
                return -u * std::exp(-t);
            case PriorBase::laplace:
                return (u > 0.0 ? -1.0 : (u < 0.0 ? 1.0 : 0.0)) * std::exp(-t);
            case PriorBase::cauchy: {
                const double q = u * std::exp(-t);
                return -2.0 * q * std::exp(-t) / (1.0 + q * q);
            }
        }
        return 0.0;
    }

    double log_norm() const { return alpha * std::log(beta) - std::lgamma(alpha); }

    double mode(double u) const {
        switch (base) {
            case PriorBase::gaussian:
                return std::log((0.5 * u * u + beta) / (alpha + 0.5));
            case PriorBase::laplace:
                return std::log((std::fabs(u) + beta) / (alpha + 1.0));
            case PriorBase::cauchy: {
                if (u == 0.0) {
                    return std::log(beta / (alpha + 1.0));
                }
                // dlog_integrand is monotone decreasing; bracket then bisect.
                double lo = std::min(std::log(beta / (alpha + 1.0)), std::log(std::fabs(u))) - 4.0;
                double hi = std::max(std::log(beta), std::log(std::fabs(u))) + 4.0;
                while (dlog_integrand(u, lo) <= 0.0) lo -= 8.0;
                while (dlog_integrand(u, hi) >= 0.0) hi += 8.0;
                for (int i = 0; i < 90; ++i) {
                    const double mid = 0.5 * (lo + hi);
                    (dlog_integrand(u, mid) > 0.0 ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            }
        }
        return 0.0;
    }

    // t where the log-integrand has fallen `drop` below its peak, searched
    // on one side of the mode (side = -1 left, +1 right).
    double level_crossing(double u, double t_peak, double l_peak, double drop, int side) const {
        const double target = l_peak - drop;
        double step = 0.5;
        double inside = t_peak;
        double outside = t_peak + side * step;
        int guard = 0;
        while (log_integrand(u, outside) > target && guard++ < 200) {
            inside = outside;
            step *= 2.0;
            outside = t_peak + side * step;
        }
        for (int i = 0; i < 80; ++i) {
            const double mid = 0.5 * (inside + outside);
            (log_integrand(u, mid) > target ? inside : outside) = mid;
        }
        return 0.5 * (inside + outside);
    }

    // Returns log p(w); when dlogp is non-null also fills d(log p)/dw.
    double evaluate(double w, double* dlogp) const {
        const double u = w - loc;
        const double t_peak = mode(u);
        const double l_peak = log_integrand(u, t_peak);

        // Four 16-point panels: outer edges at a 24 e-fold drop (truncation
        // ~ 4e-11 of the peak), inner edges at 12 so no panel spans more
        // than ~12 e-folds of integrand variation.
        const double t_lo = level_crossing(u, t_peak, l_peak, 24.0, -1);
        const double l_mid = level_crossing(u, t_peak, l_peak, 12.0, -1);
        const double r_mid = level_crossing(u, t_peak, l_peak, 12.0, +1);
        const double t_hi = level_crossing(u, t_peak, l_peak, 24.0, +1);
        const double edges[5] = {t_lo, l_mid, t_peak, r_mid, t_hi};

        const auto& rule = gauss_legendre(16);
        double mass = 0.0;
        double dmass = 0.0;
        for (int p = 0; p < 4; ++p) {
            const double mid = 0.5 * (edges[p] + edges[p + 1]);
            const double halfwidth = 0.5 * (edges[p + 1] - edges[p]);
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double t = mid + halfwidth * rule.nodes[i];
                const double f = std::exp(log_integrand(u, t) - l_peak) * rule.weights[i] *
                                 halfwidth;
                mass += f;
                if (dlogp != nullptr) {
                    dmass += f * dbase_du(u, t);
                }
            }
        }
        if (!(mass > 0.0) || !std::isfinite(mass)) {
            throw NumericError("scale-mixture quadrature produced a non-finite density");
        }
        if (dlogp != nullptr) {
            *dlogp = dmass / mass;
        }
        return l_peak + std::log(mass) + log_norm();
    }
};

class ScaleMixturePdf final : public ScalarPdf {
  public:
    ScaleMixturePdf(PriorBase base, double alpha, double beta, double loc)
        : mix_{base, alpha, beta, loc} {}

    void eval(double w, double& logp, double& dlogp_dw) const override {
        logp = mix_.evaluate(w, &dlogp_dw);
    }

  private:
    ScaleMixture mix_;
};

double studentt_const(const StudentTParams& p) {
    return std::lgamma(0.5 * (p.nu + 1.0)) - std::lgamma(0.5 * p.nu) +
           0.5 * std::log(p.lambda / (std::numbers::pi * p.nu));
}

}  // namespace

double hier_base_location(PriorBase base) { return base == PriorBase::cauchy ? 1.0 : 0.0; }

void validate_prior(const PriorSpec& spec) {
    std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GaussianPrior>) {
                require_positive(p.sigma, "sigma");
            } else if constexpr (std::is_same_v<T, LaplacePrior> ||
                                 std::is_same_v<T, CauchyPrior>) {
                require_positive(p.scale, "scale");
            } else {
                require_positive(p.alpha, "alpha");
                require_positive(p.beta, "beta");
            }
        },
        spec);
}

StudentTParams marginalize_gamma(double alpha, double beta) {
    require_positive(alpha, "alpha");
    require_positive(beta, "beta");
    return {0.0, alpha / beta, 2.0 * alpha};
}

double student_t_log_pdf(const StudentTParams& p, double w) {
    const double u = w - p.location;
    return studentt_const(p) - 0.5 * (p.nu + 1.0) * std::log1p(p.lambda * u * u / p.nu);
}

double log_marginal_numeric(PriorBase base, double alpha, double beta, double w) {
    require_positive(alpha, "alpha");
    require_positive(beta, "beta");
    ScaleMixture mix{base, alpha, beta, hier_base_location(base)};
    return mix.evaluate(w, nullptr);
}

double log_prior_value(const PriorSpec& spec, const Tensor& w) {
    validate_prior(spec);
    const std::size_t d = w.numel();
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            double total = 0.0;
            if constexpr (std::is_same_v<T, GaussianPrior>) {
                double ss = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    const double u = w[i] - p.mean;
                    ss += u * u;
                }
                total = -static_cast<double>(d) * (half_log_2pi + std::log(p.sigma)) -
                        0.5 * ss / (p.sigma * p.sigma);
            } else if constexpr (std::is_same_v<T, LaplacePrior>) {
                double sa = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    sa += std::fabs(w[i] - p.loc);
                }
                total = -static_cast<double>(d) * std::log(2.0 * p.scale) - sa / p.scale;
            } else if constexpr (std::is_same_v<T, CauchyPrior>) {
                double s = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    const double u = (w[i] - p.loc) / p.scale;
                    s += std::log1p(u * u);
                }
                total = -static_cast<double>(d) * std::log(std::numbers::pi * p.scale) - s;
            } else if constexpr (std::is_same_v<T, HierGammaPrecision>) {
                const StudentTParams st = marginalize_gamma(p.alpha, p.beta);
                for (std::size_t i = 0; i < d; ++i) {
                    total += student_t_log_pdf(st, w[i]);
                }
            } else {  // HierScaleIG
                if (p.base == PriorBase::gaussian) {
                    // IG on the variance == Gamma on the precision
                    const StudentTParams st = marginalize_gamma(p.alpha, p.beta);
                    for (std::size_t i = 0; i < d; ++i) {
                        total += student_t_log_pdf(st, w[i]);
                    }
                } else if (p.base == PriorBase::laplace) {
                    // closed form: p(w) = (a/2) b^a (|w| + b)^{-(a+1)}
                    const double c = std::log(0.5 * p.alpha) + p.alpha * std::log(p.beta);
                    for (std::size_t i = 0; i < d; ++i) {
                        total += c - (p.alpha + 1.0) * std::log(std::fabs(w[i]) + p.beta);
                    }
                } else {
                    ScaleMixture mix{PriorBase::cauchy, p.alpha, p.beta,
                                     hier_base_location(PriorBase::cauchy)};
                    for (std::size_t i = 0; i < d; ++i) {
                        total += mix.evaluate(w[i], nullptr);
                    }
                }
            }
            return total;
        },
        spec);
}

Var log_prior(Tape& tape, const PriorSpec& spec, Var w) {
    validate_prior(spec);
    const double d = static_cast<double>(tape.value(w).numel());
    return std::visit(
        [&](const auto& p) -> Var {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GaussianPrior>) {
                Var t = tape.add_const(w, -p.mean);
                Var s = tape.sum(tape.square(t));
                return tape.add_const(tape.scale(s, -0.5 / (p.sigma * p.sigma)),
                                      -d * (half_log_2pi + std::log(p.sigma)));
            } else if constexpr (std::is_same_v<T, LaplacePrior>) {
                Var t = tape.abs(tape.add_const(w, -p.loc));
                Var s = tape.sum(t);
                return tape.add_const(tape.scale(s, -1.0 / p.scale),
                                      -d * std::log(2.0 * p.scale));
            } else if constexpr (std::is_same_v<T, CauchyPrior>) {
                Var t = tape.scale(tape.add_const(w, -p.loc), 1.0 / p.scale);
                Var s = tape.sum(tape.ln(tape.add_const(tape.square(t), 1.0)));
                return tape.add_const(tape.scale(s, -1.0),
                                      -d * std::log(std::numbers::pi * p.scale));
            } else if constexpr (std::is_same_v<T, HierGammaPrecision>) {
                const StudentTParams st = marginalize_gamma(p.alpha, p.beta);
                Var q = tape.scale(tape.square(w), st.lambda / st.nu);
                Var s = tape.sum(tape.ln(tape.add_const(q, 1.0)));
                return tape.add_const(tape.scale(s, -0.5 * (st.nu + 1.0)),
                                      d * studentt_const(st));
            } else {  // HierScaleIG
                if (p.base == PriorBase::gaussian) {
                    const StudentTParams st = marginalize_gamma(p.alpha, p.beta);
                    Var q = tape.scale(tape.square(w), st.lambda / st.nu);
                    Var s = tape.sum(tape.ln(tape.add_const(q, 1.0)));
                    return tape.add_const(tape.scale(s, -0.5 * (st.nu + 1.0)),
                                          d * studentt_const(st));
                }
                if (p.base == PriorBase::laplace) {
                    Var t = tape.add_const(tape.abs(w), p.beta);
                    Var s = tape.sum(tape.ln(t));
                    return tape.add_const(
                        tape.scale(s, -(p.alpha + 1.0)),
                        d * (std::log(0.5 * p.alpha) + p.alpha * std::log(p.beta)));
                }
                ScaleMixturePdf pdf(PriorBase::cauchy, p.alpha, p.beta,
                                    hier_base_location(PriorBase::cauchy));
                return tape.logpdf_sum(w, pdf);
            }
        },
        spec);
}

// ---------------------------------------------------------------------------
// Prior strings

namespace {

std::string strip_spaces(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    return out;
}

// parses "(a,b)" off the front of `rest`
std::pair<double, double> parse_pair(const std::string& rest, const std::string& full) {
    if (rest.size() < 5 || rest.front() != '(' || rest.back() != ')') {
        throw UsageError("cannot parse prior '" + full + "': expected (a,b) parameters");
    }
    const std::string inner = rest.substr(1, rest.size() - 2);
    const auto comma = inner.find(',');
    if (comma == std::string::npos) {
        throw UsageError("cannot parse prior '" + full + "': expected two parameters");
    }
    try {
        std::size_t used = 0;
        const double a = std::stod(inner.substr(0, comma), &used);
        if (used != comma) throw std::invalid_argument("");
        const std::string btxt = inner.substr(comma + 1);
        const double b = std::stod(btxt, &used);
        if (used != btxt.size()) throw std::invalid_argument("");
        return {a, b};
    } catch (const std::exception&) {
        throw UsageError("cannot parse prior '" + full + "': bad numeric parameter");
    }
}

PriorBase parse_base(const std::string& name, const std::string& full) {
    if (name == "gaussian") return PriorBase::gaussian;
    if (name == "laplace") return PriorBase::laplace;
    if (name == "cauchy") return PriorBase::cauchy;
    throw UsageError("cannot parse prior '" + full + "': unknown base '" + name + "'");
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

PriorSpec parse_prior(const std::string& text) {
    const std::string s = strip_spaces(text);
    auto starts = [&](const char* prefix) { return s.rfind(prefix, 0) == 0; };

    PriorSpec spec;
    if (starts("gaussian(")) {
        auto [a, b] = parse_pair(s.substr(8), text);
        spec = GaussianPrior{a, b};
    } else if (starts("laplace(")) {
        auto [a, b] = parse_pair(s.substr(7), text);
        spec = LaplacePrior{a, b};
    } else if (starts("cauchy(")) {
        auto [a, b] = parse_pair(s.substr(6), text);
        spec = CauchyPrior{a, b};
    } else if (starts("hier-gauss-gamma(")) {
        auto [a, b] = parse_pair(s.substr(16), text);
        spec = HierGammaPrecision{a, b};
    } else if (starts("hier(")) {
        if (s.back() != ')') {
            throw UsageError("cannot parse prior '" + text + "'");
        }
        const std::string inner = s.substr(5, s.size() - 6);
        const auto comma = inner.find(',');
        if (comma == std::string::npos) {
            throw UsageError("cannot parse prior '" + text + "': expected hier(<base>, ig(a,b))");
        }
        const PriorBase base = parse_base(inner.substr(0, comma), text);
        const std::string igpart = inner.substr(comma + 1);
        if (igpart.rfind("ig(", 0) != 0) {
            throw UsageError("cannot parse prior '" + text + "': expected ig(a,b) hyperprior");
        }
        auto [a, b] = parse_pair(igpart.substr(2), text);
        spec = HierScaleIG{base, a, b};
    } else {
        throw UsageError("unknown prior '" + text +
                         "' (expected gaussian/laplace/cauchy/hier-gauss-gamma/hier)");
    }
    validate_prior(spec);
    return spec;
}

std::optional<PriorSpec> parse_prior_or_none(const std::string& text) {
    if (strip_spaces(text) == "none") {
        return std::nullopt;
    }
    return parse_prior(text);
}

std::string prior_to_string(const PriorSpec& spec) {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GaussianPrior>) {
                return "gaussian(" + fmt(p.mean) + "," + fmt(p.sigma) + ")";
            } else if constexpr (std::is_same_v<T, LaplacePrior>) {
                return "laplace(" + fmt(p.loc) + "," + fmt(p.scale) + ")";
            } else if constexpr (std::is_same_v<T, CauchyPrior>) {
                return "cauchy(" + fmt(p.loc) + "," + fmt(p.scale) + ")";
            } else if constexpr (std::is_same_v<T, HierGammaPrecision>) {
                return "hier-gauss-gamma(" + fmt(p.alpha) + "," + fmt(p.beta) + ")";
            } else {
                const char* base = p.base == PriorBase::gaussian
                                       ? "gaussian"
                                       : (p.base == PriorBase::laplace ? "laplace" : "cauchy");
                return std::string("hier(") + base + ",ig(" + fmt(p.alpha) + "," + fmt(p.beta) +
                       "))";
            }
        },
        spec);
}

}  // namespace bdl
