#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace foldfinder {

/// One monomial c * prod_i u_i^{p_i} of the primitive G.
struct Monomial {
    double coefficient = 0.0;
    std::vector<double> exponents;

    double degree() const;
};

/// Nonlinearity g_i = dG/du_i with G a nonnegative combination of monomials,
/// together with the sublinear exponent q of the lambda term.
///
/// All evaluations are restricted to the closed positive cone.
class ModelSpec {
public:
    ModelSpec(std::string name, int components, double q, std::vector<Monomial> terms);

    const std::string& name() const { return name_; }
    int components() const { return m_; }
    double q() const { return q_; }
    const std::vector<Monomial>& terms() const { return terms_; }

    /// Smallest / largest total degree over the terms (nullopt when G == 0).
    std::optional<double> min_degree() const;
    std::optional<double> max_degree() const;

    /// Returns g(u). Throws DomainError on a negative component.
    Eigen::VectorXd g(const Eigen::VectorXd& u) const;
    /// Returns the symmetric Jacobian dg_i/du_j.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const;
    /// Returns G(u).
    double primitive(const Eigen::VectorXd& u) const;

private:
    void check_point(const Eigen::VectorXd& u) const;

    std::string name_;
    int m_;
    double q_;
    std::vector<Monomial> terms_;
};

/// G = u^gamma / gamma, scalar concave-convex model.
ModelSpec abc_model(double q, double gamma);
/// G = (u1^4 + u2^4)/4 + u1^2 u2^2.
ModelSpec coupled_model(double q);
/// G == 0: the purely sublinear problem, which has no fold.
ModelSpec sublinear_model(int components, double q);

/// Parses "c:p1,p2,...;c:p1,..." into monomials over `components` variables.
std::vector<Monomial> parse_terms(const std::string& text, int components);

Eigen::VectorXd eval_g(const ModelSpec& spec, const Eigen::VectorXd& u);
Eigen::MatrixXd eval_g_jacobian(const ModelSpec& spec, const Eigen::VectorXd& u);
double eval_G(const ModelSpec& spec, const Eigen::VectorXd& u);

enum class CheckStatus { pass, fail };

struct HypothesisCheck {
    std::string name;
    CheckStatus status = CheckStatus::pass;
    std::string witness;  ///< empty when passing
};

/// Closed-form verification of the structural hypotheses for a monomial model.
struct HypothesisReport {
    HypothesisCheck q_range;  ///< 1 < q < 2
    HypothesisCheck g1;       ///< growth: degrees in (2, 2*), C^2 on the cone
    HypothesisCheck g2;       ///< Ambrosetti-Rabinowitz with theta > 2
    HypothesisCheck g3;       ///< (q+1) g.u <= u.Dg.u
    HypothesisCheck g4;       ///< superlinear growth along every positive ray
    std::string g4_method;
    double theta = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;

    /// q-range and (g1)-(g3): what the solvers need to be well posed.
    bool solvable() const;
    /// Everything, including (g4), which guarantees a finite fold.
    bool all_pass() const;
    std::string to_string() const;
};

HypothesisReport validate_hypotheses(const ModelSpec& spec);

}  // namespace foldfinder
