#pragma once

#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qcens/field.hpp"
#include "qcens/poly.hpp"

namespace qcens {

/// Polynomial with complex coefficients, stored as a (real, imaginary) pair of
/// exact polynomials.
struct CPoly {
    Poly re, im;

    static CPoly from_real(Poly p) { return {std::move(p), {}}; }
    static CPoly from_imag(Poly p) { return {{}, std::move(p)}; }

    CPoly operator+(const CPoly& o) const { return {re + o.re, im + o.im}; }
    CPoly operator-(const CPoly& o) const { return {re - o.re, im - o.im}; }
    CPoly operator-() const { return {-re, -im}; }
    CPoly operator*(const CPoly& o) const {
        return {re * o.re - im * o.im, re * o.im + im * o.re};
    }
    CPoly diff(Var v) const { return {re.diff(v), im.diff(v)}; }
    CPoly scaled(std::complex<double> s) const {
        return {re.scaled(s.real()) - im.scaled(s.imag()),
                re.scaled(s.imag()) + im.scaled(s.real())};
    }
    bool is_zero() const { return re.is_zero() && im.is_zero(); }
    bool operator==(const CPoly& o) const { return re == o.re && im == o.im; }
    std::string str(int dim = 1) const;
};

/// Derivative slot identifier: q_i or p_i of the phase space.
struct DerivSlot {
    bool is_p = false;
    int index = 0;  // 0..dim-1
    auto operator<=>(const DerivSlot&) const = default;
};

/// Operator of the form  zeroth + sum_k dq[k] d/dq_k + sum_k dp[k] d/dp_k
/// (+ optional symmetric second-order terms produced by composition).
/// Operators built by `vanhove_of` have no second-order part.
struct FirstOrderOperator {
    int dim = 1;
    CPoly zeroth;
    std::vector<CPoly> dq, dp;                       // size == dim
    std::map<std::pair<DerivSlot, DerivSlot>, CPoly> second;  // key ordered first<=second

    explicit FirstOrderOperator(int d = 1) : dim(d), dq(static_cast<std::size_t>(d)), dp(static_cast<std::size_t>(d)) {}

    bool pure_first_order() const { return second.empty(); }
    bool operator==(const FirstOrderOperator& o) const;
    /// Canonical text form, e.g. "(-0.5 p^2 + q) + i*h*(1) d/dp".
    std::string str() const;
};

/// The operator associated with phase function F:
///   (F - p.grad_p F) + i*hbar*(grad_q F . grad_p - grad_p F . grad_q).
FirstOrderOperator vanhove_of(const Poly& F, int dim, double hbar);

FirstOrderOperator op_add(const FirstOrderOperator& a, const FirstOrderOperator& b);
FirstOrderOperator op_sub(const FirstOrderOperator& a, const FirstOrderOperator& b);
FirstOrderOperator op_scale(const FirstOrderOperator& a, std::complex<double> s);

/// Operator composition a∘b; generally produces second-order terms.
FirstOrderOperator compose(const FirstOrderOperator& a, const FirstOrderOperator& b);

/// Commutator [a,b] = a∘b - b∘a. The second-order parts must cancel exactly
/// (they do, term by term); a nonzero residue raises CancellationError.
FirstOrderOperator commute(const FirstOrderOperator& a, const FirstOrderOperator& b);

/// Apply a 1-dimensional operator to a grid wavefunction. Second-order terms
/// are rejected unless `allow_second` (diagnostic use).
ComplexField apply(const FirstOrderOperator& op, const ComplexField& phi,
                   bool allow_second = false);

/// <phi| op phi> on the grid.
std::complex<double> expectation(const FirstOrderOperator& op, const ComplexField& phi);

}  // namespace qcens
