#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "qcens/field.hpp"
#include "qcens/grid.hpp"

namespace qcens {

/// Variable universe for phase-space polynomials. q1..q3/p1..p3 are the phase
/// coordinates (printed "q","p" in one dimension), x the quantum-sector
/// coordinate, t time, q0/p0 a reference phase point.
enum class Var : std::uint8_t { q1, q2, q3, p1, p2, p3, x, t, q0, p0 };
inline constexpr int kNumVars = 10;

const char* var_name(Var v, int dim);
Var q_var(int i);  // q_var(0) == Var::q1 ...
Var p_var(int i);

/// Exact multivariate polynomial with double coefficients. Addition,
/// multiplication and differentiation introduce no grid error; coefficient
/// arithmetic is plain IEEE754 (exact for dyadic-rational inputs of modest
/// size, which is what the zero-tolerance checks use).
class Poly {
  public:
    using Exp = std::array<std::uint8_t, kNumVars>;

    Poly() = default;
    static Poly constant(double c);
    static Poly variable(Var v);
    /// c * prod(vars[i]^exps[i])
    static Poly monomial(double c, std::initializer_list<std::pair<Var, int>> ve);

    Poly operator+(const Poly& o) const;
    Poly operator-(const Poly& o) const;
    Poly operator*(const Poly& o) const;
    Poly operator-() const;
    Poly scaled(double s) const;

    Poly diff(Var v) const;
    /// Substitute a polynomial for a variable.
    Poly subst(Var v, const Poly& replacement) const;
    /// Substitute a numeric value for a variable.
    Poly subst(Var v, double value) const;

    double eval(const std::array<double, kNumVars>& vals) const;
    int degree(Var v) const;
    int total_degree() const;
    bool depends_on(Var v) const;
    bool is_zero() const { return terms_.empty(); }

    bool operator==(const Poly& o) const { return terms_ == o.terms_; }
    bool operator!=(const Poly& o) const { return !(*this == o); }

    /// Canonical text form, e.g. "q^2 p - 2 x". `dim` controls q/p naming.
    std::string str(int dim = 1) const;

    const std::map<Exp, double>& terms() const { return terms_; }
    void add_term(const Exp& e, double c);

  private:
    // invariant: no stored coefficient is exactly 0
    std::map<Exp, double> terms_;
};

/// Canonical Poisson bracket {F,G} = sum_i dF/dq_i dG/dp_i - dF/dp_i dG/dq_i
/// over the first `dim` phase-space pairs.
Poly poisson_bracket(const Poly& F, const Poly& G, int dim = 1);

/// Sample a polynomial on a grid. Grid axes named q/p/x bind to Var::q1,
/// Var::p1, Var::x; `fixed` supplies values for any other variables used.
RealField sample(const Poly& f, const Grid& g,
                 const std::map<Var, double>& fixed = {});

/// Sample with some variables bound to fields on the same grid (e.g. p -> dS/dq).
RealField sample_with(const Poly& f, const Grid& g,
                      const std::map<Var, const RealField*>& bound,
                      const std::map<Var, double>& fixed = {});

/// True when f uses only the phase variables of the given dimension (plus x/t
/// when allowed).
bool valid_phase_fn(const Poly& f, int dim, bool allow_x = false, bool allow_t = false);

/// Inverse of Poly::str under both naming schemes ("q p" and "q1..p3"): terms
/// joined by +/-, each term a product of an optional decimal coefficient and
/// variables with optional ^k powers ("0.5 q^2 - q p0", "2*q1 p2"). '*' works
/// as a separator. Throws ConfigError on anything it cannot read.
Poly parse_poly(const std::string& text);

}  // namespace qcens
