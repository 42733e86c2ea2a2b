#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "smtl/solver.hpp"
#include "smtl/types.hpp"

namespace smtl {

enum class MipMode { common, heterogeneous };

struct MipSummary {
    long long n_binaries = 0;
    long long n_continuous = 0;
    long long n_constraints = 0;
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string bvar(int k, int j) {
    return "b_" + std::to_string(k + 1) + "_" + std::to_string(j + 1);
}
inline std::string bbvar(int j) { return "bb_" + std::to_string(j + 1); }
inline std::string zvar_common(int j) { return "z_" + std::to_string(j + 1); }
inline std::string zvar(int k, int j) {
    return "z_" + std::to_string(k + 1) + "_" + std::to_string(j + 1);
}
inline std::string zbvar(int j) { return "zb_" + std::to_string(j + 1); }

/// Accumulates the objective as constant + linear + quadratic triplets, then
/// renders the quadratic block in the [ 2q ... ] / 2 convention.
struct ObjectiveBuilder {
    double constant = 0.0;
    std::vector<std::pair<std::string, double>> linear;
    std::vector<std::tuple<std::string, std::string, double>> quad;

    void add_linear(const std::string& v, double c) {
        if (c != 0.0) linear.push_back({v, c});
    }
    void add_quad(const std::string& a, const std::string& b, double c) {
        if (c != 0.0) quad.push_back({a, b, c});
    }

    void write(std::ostream& os) const {
        os << " obj:";
        bool first = true;
        auto emit = [&](double c, const std::string& body) {
            os << (c < 0 ? (first ? " -" : " - ") : (first ? " " : " + "))
               << fmt17(std::abs(c));
            if (!body.empty()) os << " " << body;
            first = false;
        };
        if (constant != 0.0) emit(constant, "");
        for (const auto& [v, c] : linear) emit(c, v);
        if (first) os << " 0";
        if (!quad.empty()) {
            os << " + [";
            bool qfirst = true;
            for (const auto& [a, b, c] : quad) {
                const double w = 2.0 * c;  // halved back by the ] / 2 below
                os << (w < 0 ? (qfirst ? " -" : " - ") : (qfirst ? " " : " + "))
                   << fmt17(std::abs(w)) << " " << a;
                if (a == b)
                    os << " ^ 2";
                else
                    os << " * " << b;
                qfirst = false;
            }
            os << " ] / 2";
        }
        os << "\n";
    }
};

}  // namespace detail

/// Writes the big-M mixed-integer quadratic program for the given mode. Data
/// is centered per task first and intercepts are dropped, which matches how
/// the solver treats them. Returns exact variable/constraint counts.
inline MipSummary export_mip(const MTLProblem& prob, const Hyperparameters& hyper,
                             double M, MipMode mode, std::ostream& os) {
    validate_problem(prob);
    validate_hyper(hyper, prob.p());
    require(M > 0.0 && std::isfinite(M), ErrorKind::config,
            "big-M must be positive and finite");
    const int p = int(prob.p()), K = int(prob.K());
    const bool het = mode == MipMode::heterogeneous;
    const double delta = het && !hyper.common_support ? hyper.delta : 0.0;

    auto [cprob, centering] = center_problem(prob);

    os << "\\ sparse multi-task regression big-M model\n";
    os << "\\ mode=" << (het ? "heterogeneous" : "common") << " p=" << p
       << " K=" << K << " s=" << hyper.s << " lambda=" << detail::fmt17(hyper.lambda)
       << " delta=" << detail::fmt17(delta) << " alpha=" << detail::fmt17(hyper.alpha)
       << " M=" << detail::fmt17(M) << "\n";
    os << "\\ per-task centered data; intercepts omitted\n";

    detail::ObjectiveBuilder obj;
    for (int k = 0; k < K; ++k) {
        const auto& t = cprob.tasks[k];
        const double inv_n = 1.0 / double(t.n());
        obj.constant += inv_n * t.y.squaredNorm();
        const VectorXd xty = t.X.transpose() * t.y;
        const MatrixXd gram = t.X.transpose() * t.X;
        for (int j = 0; j < p; ++j)
            obj.add_linear(detail::bvar(k, j), -2.0 * inv_n * xty[j]);
        for (int i = 0; i < p; ++i) {
            obj.add_quad(detail::bvar(k, i), detail::bvar(k, i),
                         inv_n * gram(i, i) + hyper.alpha + hyper.lambda);
            for (int j = i + 1; j < p; ++j)
                obj.add_quad(detail::bvar(k, i), detail::bvar(k, j),
                             2.0 * inv_n * gram(i, j));
        }
        if (hyper.lambda != 0.0)
            for (int j = 0; j < p; ++j)
                obj.add_quad(detail::bvar(k, j), detail::bbvar(j), -2.0 * hyper.lambda);
        if (delta != 0.0)
            for (int j = 0; j < p; ++j) {
                obj.add_quad(detail::zvar(k, j), detail::zvar(k, j), delta);
                obj.add_quad(detail::zvar(k, j), detail::zbvar(j), -2.0 * delta);
            }
    }
    if (hyper.lambda != 0.0)
        for (int j = 0; j < p; ++j)
            obj.add_quad(detail::bbvar(j), detail::bbvar(j), double(K) * hyper.lambda);
    if (delta != 0.0)
        for (int j = 0; j < p; ++j)
            obj.add_quad(detail::zbvar(j), detail::zbvar(j), double(K) * delta);

    os << "OBJECTIVE\n";
    obj.write(os);

    MipSummary summary;
    os << "SUBJECT TO\n";
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < p; ++j) {
            const std::string z = het ? detail::zvar(k, j) : detail::zvar_common(j);
            os << " mneg_" << k + 1 << "_" << j + 1 << ": " << detail::bvar(k, j)
               << " + " << detail::fmt17(M) << " " << z << " >= 0\n";
            os << " mpos_" << k + 1 << "_" << j + 1 << ": " << detail::bvar(k, j)
               << " - " << detail::fmt17(M) << " " << z << " <= 0\n";
            summary.n_constraints += 2;
        }
    if (het) {
        for (int k = 0; k < K; ++k) {
            os << " card_" << k + 1 << ":";
            for (int j = 0; j < p; ++j)
                os << (j ? " + " : " ") << detail::zvar(k, j);
            os << " <= " << hyper.s << "\n";
            ++summary.n_constraints;
        }
        const double inv_K = 1.0 / double(K);
        for (int j = 0; j < p; ++j) {
            os << " zdef_" << j + 1 << ": " << detail::zbvar(j);
            for (int k = 0; k < K; ++k)
                os << " - " << detail::fmt17(inv_K) << " " << detail::zvar(k, j);
            os << " = 0\n";
            ++summary.n_constraints;
        }
    } else {
        os << " card:";
        for (int j = 0; j < p; ++j)
            os << (j ? " + " : " ") << detail::zvar_common(j);
        os << " <= " << hyper.s << "\n";
        ++summary.n_constraints;
    }

    os << "BOUNDS\n";
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < p; ++j) {
            os << " " << detail::bvar(k, j) << " free\n";
            ++summary.n_continuous;
        }
    for (int j = 0; j < p; ++j) {
        os << " " << detail::bbvar(j) << " free\n";
        ++summary.n_continuous;
    }
    if (het)
        for (int j = 0; j < p; ++j) {
            os << " 0 <= " << detail::zbvar(j) << " <= 1\n";
            ++summary.n_continuous;
        }

    os << "BINARIES\n";
    if (het) {
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < p; ++j) {
                os << " " << detail::zvar(k, j);
                ++summary.n_binaries;
            }
    } else {
        for (int j = 0; j < p; ++j) {
            os << " " << detail::zvar_common(j);
            ++summary.n_binaries;
        }
    }
    os << "\nEND\n";
    require(os.good(), ErrorKind::io, "failed writing the model file");
    return summary;
}

/// Parsed model: objective (constant + linear + quadratic) plus structural
/// counts. The reader understands exactly the dialect export_mip writes.
struct LpModel {
    double constant = 0.0;
    std::map<std::string, double> linear;
    std::vector<std::tuple<std::string, std::string, double>> quad;
    long long n_constraints = 0;
    std::vector<std::string> binaries;
    long long n_continuous = 0;

    double evaluate(const std::map<std::string, double>& assignment) const {
        auto value = [&](const std::string& v) {
            const auto it = assignment.find(v);
            require(it != assignment.end(), ErrorKind::config,
                    "no assignment for variable '" + v + "'");
            return it->second;
        };
        double total = constant;
        for (const auto& [v, c] : linear) total += c * value(v);
        for (const auto& [a, b, c] : quad) total += c * value(a) * value(b);
        return total;
    }

    MipSummary summary() const {
        return {static_cast<long long>(binaries.size()), n_continuous,
                n_constraints};
    }
};

namespace detail {

inline std::vector<std::string> lp_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&]() {
        if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    };
    for (size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (ch == '\\') {  // comment to end of line
            flush();
            while (i < text.size() && text[i] != '\n') ++i;
        } else if (std::isspace(static_cast<unsigned char>(ch))) {
            flush();
        } else if (ch == '+' || ch == '-' || ch == '*' || ch == '^' ||
                   ch == '[' || ch == ']' || ch == '/' || ch == ':') {
            flush();
            tokens.push_back(std::string(1, ch));
        } else {
            cur.push_back(ch);
        }
    }
    flush();
    return tokens;
}

inline bool lp_is_number(const std::string& t, double& out) {
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end && *end == '\0' && end != t.c_str();
}

}  // namespace detail

/// Parses a model written by export_mip back into evaluable form.
inline LpModel parse_lp(const std::string& text) {
    const auto tokens = detail::lp_tokens(text);
    LpModel model;
    size_t i = 0;
    auto expect = [&](const std::string& tok) {
        require(i < tokens.size() && tokens[i] == tok, ErrorKind::schema,
                "LP parse error: expected '" + tok + "'");
        ++i;
    };
    expect("OBJECTIVE");
    expect("obj");
    expect(":");

    double sign = 1.0;
    bool in_quad = false;
    while (i < tokens.size() && tokens[i] != "SUBJECT") {
        const std::string& tok = tokens[i];
        if (tok == "+") {
            sign = 1.0;
            ++i;
            continue;
        }
        if (tok == "-") {
            sign = -1.0;
            ++i;
            continue;
        }
        if (tok == "[") {
            in_quad = true;
            ++i;
            sign = 1.0;
            continue;
        }
        if (tok == "]") {
            ++i;
            expect("/");
            double two;
            require(i < tokens.size() && detail::lp_is_number(tokens[i], two) &&
                        two == 2.0,
                    ErrorKind::schema, "LP parse error: expected ] / 2");
            ++i;
            in_quad = false;
            sign = 1.0;
            continue;
        }
        double coef;
        require(detail::lp_is_number(tok, coef), ErrorKind::schema,
                "LP parse error: expected a number, got '" + tok + "'");
        coef *= sign;
        ++i;
        std::string var_a;
        double lookahead;
        if (i < tokens.size() && !detail::lp_is_number(tokens[i], lookahead) &&
            tokens[i] != "+" && tokens[i] != "-" && tokens[i] != "]" &&
            tokens[i] != "[" && tokens[i] != "SUBJECT") {
            var_a = tokens[i];
            ++i;
        }
        if (var_a.empty()) {
            model.constant += coef;
            sign = 1.0;
            continue;
        }
        if (in_quad) {
            require(i < tokens.size(), ErrorKind::schema,
                    "LP parse error: truncated quadratic term");
            if (tokens[i] == "^") {
                ++i;
                expect("2");
                model.quad.push_back({var_a, var_a, coef / 2.0});
            } else if (tokens[i] == "*") {
                ++i;
                require(i < tokens.size(), ErrorKind::schema,
                        "LP parse error: truncated product");
                model.quad.push_back({var_a, tokens[i], coef / 2.0});
                ++i;
            } else {
                fail(ErrorKind::schema, "LP parse error: malformed quadratic term");
            }
        } else {
            model.linear[var_a] += coef;
        }
        sign = 1.0;
    }
    expect("SUBJECT");
    expect("TO");
    // Constraint rows: name : <terms> sense rhs. Count rows by ':' markers.
    while (i < tokens.size() && tokens[i] != "BOUNDS") {
        if (tokens[i] == ":") ++model.n_constraints;
        ++i;
    }
    expect("BOUNDS");
    // Either "<name> free" or "0 <= <name> <= 1"; one variable per line.
    while (i < tokens.size() && tokens[i] != "BINARIES") {
        double dummy;
        if (!detail::lp_is_number(tokens[i], dummy) && tokens[i] != "free" &&
            tokens[i] != "<=")
            ++model.n_continuous;
        ++i;
    }
    expect("BINARIES");
    while (i < tokens.size() && tokens[i] != "END") {
        model.binaries.push_back(tokens[i]);
        ++i;
    }
    expect("END");
    return model;
}

/// Variable assignment corresponding to a fit of the exported model: b from
/// B, z from Z, bb as row means of B and zb as row means of Z.
inline std::map<std::string, double> mip_assignment(const ModelFit& fit,
                                                    MipMode mode) {
    const int p = int(fit.p()), K = int(fit.K());
    std::map<std::string, double> a;
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < p; ++j) a[detail::bvar(k, j)] = fit.B(j, k);
    for (int j = 0; j < p; ++j)
        a[detail::bbvar(j)] = fit.B.row(j).mean();
    if (mode == MipMode::heterogeneous) {
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < p; ++j)
                a[detail::zvar(k, j)] = double(fit.Z(j, k));
        for (int j = 0; j < p; ++j)
            a[detail::zbvar(j)] = fit.Z.row(j).cast<double>().mean();
    } else {
        for (int j = 0; j < p; ++j) a[detail::zvar_common(j)] = double(fit.Z(j, 0));
    }
    return a;
}

}  // namespace smtl
