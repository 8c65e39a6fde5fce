#include "foldfinder/model.hpp"

#include "foldfinder/error.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

namespace foldfinder {

namespace {

// u^e with the convention u^0 = 1 (including u = 0).
double power(double u, double e) {
    if (e == 0.0) return 1.0;
    if (e == 1.0) return u;
    if (e == 2.0) return u * u;
    return std::pow(u, e);
}

// prod_{k != skip1, skip2} u_k^{p_k}
double partial_product(const Monomial& t, const Eigen::VectorXd& u, int skip1 = -1, int skip2 = -1) {
    double v = t.coefficient;
    for (int k = 0; k < static_cast<int>(t.exponents.size()); ++k) {
        if (k == skip1 || k == skip2) continue;
        v *= power(u[k], t.exponents[static_cast<std::size_t>(k)]);
    }
    return v;
}

std::string format_number(double x) {
    std::ostringstream out;
    out << x;
    return out.str();
}

double parse_double(const std::string& s) {
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw InvalidArgument("cannot parse number '" + s + "'");
    return v;
}

}  // namespace

double Monomial::degree() const {
    double d = 0.0;
    for (double p : exponents) d += p;
    return d;
}

ModelSpec::ModelSpec(std::string name, int components, double q, std::vector<Monomial> terms)
    : name_(std::move(name)), m_(components), q_(q), terms_(std::move(terms)) {
    if (m_ < 1) throw InvalidArgument("ModelSpec: need at least one component");
    if (!std::isfinite(q_)) throw InvalidArgument("ModelSpec: q must be finite");
    for (const auto& t : terms_) {
        if (static_cast<int>(t.exponents.size()) != m_) {
            throw InvalidArgument("ModelSpec: monomial exponent count does not match component count");
        }
        for (double p : t.exponents) {
            if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("ModelSpec: exponents must be >= 0");
        }
        if (!std::isfinite(t.coefficient)) throw InvalidArgument("ModelSpec: coefficient must be finite");
    }
}

std::optional<double> ModelSpec::min_degree() const {
    if (terms_.empty()) return std::nullopt;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& t : terms_) d = std::min(d, t.degree());
    return d;
}

std::optional<double> ModelSpec::max_degree() const {
    if (terms_.empty()) return std::nullopt;
    double d = 0.0;
    for (const auto& t : terms_) d = std::max(d, t.degree());
    return d;
}

void ModelSpec::check_point(const Eigen::VectorXd& u) const {
    if (u.size() != m_) throw InvalidArgument("ModelSpec: point has wrong component count");
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (!(u[i] >= 0.0)) throw DomainError("ModelSpec: nonlinearity is defined on the positive cone only");
    }
}

Eigen::VectorXd ModelSpec::g(const Eigen::VectorXd& u) const {
    check_point(u);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m_);
    for (const auto& t : terms_) {
        for (int i = 0; i < m_; ++i) {
            const double p = t.exponents[static_cast<std::size_t>(i)];
            if (p == 0.0) continue;
            out[i] += p * power(u[i], p - 1.0) * partial_product(t, u, i);
        }
    }
    return out;
}

Eigen::MatrixXd ModelSpec::jacobian(const Eigen::VectorXd& u) const {
    check_point(u);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m_, m_);
    for (const auto& t : terms_) {
        for (int i = 0; i < m_; ++i) {
            const double pi = t.exponents[static_cast<std::size_t>(i)];
            if (pi == 0.0) continue;
            if (pi != 1.0) out(i, i) += pi * (pi - 1.0) * power(u[i], pi - 2.0) * partial_product(t, u, i);
            for (int j = i + 1; j < m_; ++j) {
                const double pj = t.exponents[static_cast<std::size_t>(j)];
                if (pj == 0.0) continue;
                const double v = pi * pj * power(u[i], pi - 1.0) * power(u[j], pj - 1.0) * partial_product(t, u, i, j);
                out(i, j) += v;
                out(j, i) += v;
            }
        }
    }
    return out;
}

double ModelSpec::primitive(const Eigen::VectorXd& u) const {
    check_point(u);
    double v = 0.0;
    for (const auto& t : terms_) v += partial_product(t, u);
    return v;
}

ModelSpec abc_model(double q, double gamma) {
    if (!(gamma > 0.0)) throw InvalidArgument("abc_model: gamma must be positive");
    return ModelSpec("abc", 1, q, {Monomial{1.0 / gamma, {gamma}}});
}

ModelSpec coupled_model(double q) {
    return ModelSpec("coupled", 2, q,
                     {Monomial{0.25, {4.0, 0.0}}, Monomial{0.25, {0.0, 4.0}}, Monomial{1.0, {2.0, 2.0}}});
}

ModelSpec sublinear_model(int components, double q) { return ModelSpec("sublinear", components, q, {}); }

std::vector<Monomial> parse_terms(const std::string& text, int components) {
    std::vector<Monomial> terms;
    std::string compact;
    for (char ch : text) {
        if (!std::isspace(static_cast<unsigned char>(ch))) compact.push_back(ch);
    }
    std::istringstream in(compact);
    std::string item;
    while (std::getline(in, item, ';')) {
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw InvalidArgument("term '" + item + "' must look like c:p1,p2,...");
        Monomial t;
        t.coefficient = parse_double(item.substr(0, colon));
        std::istringstream ex(item.substr(colon + 1));
        std::string p;
        while (std::getline(ex, p, ',')) t.exponents.push_back(parse_double(p));
        if (static_cast<int>(t.exponents.size()) != components) {
            throw InvalidArgument("term '" + item + "' has the wrong number of exponents");
        }
        terms.push_back(std::move(t));
    }
    return terms;
}

Eigen::VectorXd eval_g(const ModelSpec& spec, const Eigen::VectorXd& u) { return spec.g(u); }
Eigen::MatrixXd eval_g_jacobian(const ModelSpec& spec, const Eigen::VectorXd& u) { return spec.jacobian(u); }
double eval_G(const ModelSpec& spec, const Eigen::VectorXd& u) { return spec.primitive(u); }

bool HypothesisReport::solvable() const {
    return q_range.status == CheckStatus::pass && g1.status == CheckStatus::pass &&
           g2.status == CheckStatus::pass && g3.status == CheckStatus::pass;
}

bool HypothesisReport::all_pass() const { return solvable() && g4.status == CheckStatus::pass; }

std::string HypothesisReport::to_string() const {
    std::ostringstream out;
    for (const auto* c : {&q_range, &g1, &g2, &g3, &g4}) {
        out << c->name << ": " << (c->status == CheckStatus::pass ? "pass" : "FAIL");
        if (!c->witness.empty()) out << " (" << c->witness << ")";
        out << '\n';
    }
    out << "theta=" << theta << " gamma1=" << gamma1 << " gamma2=" << gamma2 << " g4 method: " << g4_method << '\n';
    return out.str();
}

HypothesisReport validate_hypotheses(const ModelSpec& spec) {
    HypothesisReport r;
    r.q_range.name = "1<q<2";
    r.g1.name = "(g1)";
    r.g2.name = "(g2)";
    r.g3.name = "(g3)";
    r.g4.name = "(g4)";
    const double q = spec.q();

    if (!(q > 1.0 && q < 2.0)) {
        r.q_range.status = CheckStatus::fail;
        r.q_range.witness = "q=" + format_number(q) + " outside (1,2)";
    }

    const auto dmin = spec.min_degree();
    const auto dmax = spec.max_degree();
    r.gamma1 = dmin.value_or(0.0);
    r.gamma2 = dmax.value_or(0.0);

    // Only d <= 2 grids exist, where the critical exponent 2* is +infinity.
    for (std::size_t k = 0; k < spec.terms().size(); ++k) {
        const auto& t = spec.terms()[k];
        const std::string label = "term " + std::to_string(k);
        if (t.coefficient < 0.0) {
            r.g1.status = CheckStatus::fail;
            r.g1.witness = label + " has negative coefficient";
            break;
        }
        if (!(t.degree() > 2.0)) {
            r.g1.status = CheckStatus::fail;
            r.g1.witness = label + " has degree " + format_number(t.degree()) + " <= 2";
            break;
        }
        for (double p : t.exponents) {
            if (p != 0.0 && p != 1.0 && p < 2.0) {
                r.g1.status = CheckStatus::fail;
                r.g1.witness = label + " exponent " + format_number(p) + " makes Dg singular on the cone boundary";
                break;
            }
        }
        if (r.g1.status == CheckStatus::fail) break;
    }

    // Euler's identity: sum_i g_i u_i = sum_k deg_k term_k >= theta G with theta = min degree.
    if (!dmin) {
        r.theta = std::numeric_limits<double>::infinity();
        r.g2.witness = "G = 0: holds for every theta";
    } else {
        r.theta = *dmin;
        if (!(r.theta > 2.0)) {
            r.g2.status = CheckStatus::fail;
            r.g2.witness = "theta=" + format_number(r.theta) + " <= 2";
        }
    }

    // sum G_ij u_i u_j = sum deg (deg - 1) term >= (q+1) sum deg term iff every deg >= q + 2.
    if (dmin && *dmin < q + 2.0) {
        r.g3.status = CheckStatus::fail;
        r.g3.witness = "min degree " + format_number(*dmin) + " < q+2 = " + format_number(q + 2.0);
    }

    // sum g / sum u -> infinity along every positive ray iff every coordinate
    // axis carries a pure power of degree > 2 (the growth on a face depends
    // only on which monomials live on that face, and axes are the smallest faces).
    r.g4_method = "pure-power terms (exact for monomial families)";
    for (int i = 0; i < spec.components(); ++i) {
        bool found = false;
        for (const auto& t : spec.terms()) {
            bool pure = t.coefficient > 0.0 && t.exponents[static_cast<std::size_t>(i)] > 2.0;
            for (int j = 0; j < spec.components() && pure; ++j) {
                if (j != i && t.exponents[static_cast<std::size_t>(j)] != 0.0) pure = false;
            }
            found = found || pure;
        }
        if (!found) {
            r.g4.status = CheckStatus::fail;
            r.g4.witness = "no superquadratic growth along the u" + std::to_string(i + 1) + " axis";
            break;
        }
    }
    return r;
}

}  // namespace foldfinder
