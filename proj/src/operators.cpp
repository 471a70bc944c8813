#include "qcens/operators.hpp"

#include <sstream>

#include "qcens/errors.hpp"

namespace qcens {

std::string CPoly::str(int dim) const {
    if (re.is_zero() && im.is_zero()) return "0";
    if (im.is_zero()) return re.str(dim);
    if (re.is_zero()) return "i*(" + im.str(dim) + ")";
    return "(" + re.str(dim) + ") + i*(" + im.str(dim) + ")";
}

bool FirstOrderOperator::operator==(const FirstOrderOperator& o) const {
    return dim == o.dim && zeroth == o.zeroth && dq == o.dq && dp == o.dp && second == o.second;
}

namespace {
std::string slot_name(const DerivSlot& s, int dim) {
    return var_name(s.is_p ? p_var(s.index) : q_var(s.index), dim);
}
}  // namespace

std::string FirstOrderOperator::str() const {
    std::ostringstream os;
    bool any = false;
    if (!zeroth.is_zero()) {
        os << "(" << zeroth.str(dim) << ")";
        any = true;
    }
    for (int k = 0; k < dim; ++k) {
        const CPoly& c = dq[static_cast<std::size_t>(k)];
        if (c.is_zero()) continue;
        if (any) os << " + ";
        os << "(" << c.str(dim) << ") d/d" << var_name(q_var(k), dim);
        any = true;
    }
    for (int k = 0; k < dim; ++k) {
        const CPoly& c = dp[static_cast<std::size_t>(k)];
        if (c.is_zero()) continue;
        if (any) os << " + ";
        os << "(" << c.str(dim) << ") d/d" << var_name(p_var(k), dim);
        any = true;
    }
    for (const auto& [key, c] : second) {
        if (c.is_zero()) continue;
        if (any) os << " + ";
        os << "(" << c.str(dim) << ") d2/d" << slot_name(key.first, dim) << "d"
           << slot_name(key.second, dim);
        any = true;
    }
    if (!any) return "0";
    return os.str();
}

FirstOrderOperator vanhove_of(const Poly& F, int dim, double hbar) {
    if (!valid_phase_fn(F, dim, false, true))
        throw Error("vanhove_of: F must be a phase function of the given dimension");
    FirstOrderOperator op(dim);
    Poly gamma = F;
    for (int k = 0; k < dim; ++k)
        gamma = gamma - Poly::variable(p_var(k)) * F.diff(p_var(k));
    op.zeroth = CPoly::from_real(gamma);
    for (int k = 0; k < dim; ++k) {
        op.dq[static_cast<std::size_t>(k)] = CPoly::from_imag(F.diff(p_var(k)).scaled(-hbar));
        op.dp[static_cast<std::size_t>(k)] = CPoly::from_imag(F.diff(q_var(k)).scaled(hbar));
    }
    return op;
}

namespace {
void check_same_dim(const FirstOrderOperator& a, const FirstOrderOperator& b) {
    if (a.dim != b.dim) throw Error("operator dimensions differ");
}

Var slot_var(const DerivSlot& s) { return s.is_p ? p_var(s.index) : q_var(s.index); }

void add_second(FirstOrderOperator& op, DerivSlot a, DerivSlot b, const CPoly& c) {
    if (c.is_zero()) return;
    if (b < a) std::swap(a, b);
    auto key = std::make_pair(a, b);
    auto it = op.second.find(key);
    if (it == op.second.end()) {
        op.second.emplace(key, c);
    } else {
        it->second = it->second + c;
        if (it->second.is_zero()) op.second.erase(it);
    }
}
}  // namespace

FirstOrderOperator op_add(const FirstOrderOperator& a, const FirstOrderOperator& b) {
    check_same_dim(a, b);
    FirstOrderOperator out(a.dim);
    out.zeroth = a.zeroth + b.zeroth;
    for (int k = 0; k < a.dim; ++k) {
        out.dq[static_cast<std::size_t>(k)] = a.dq[static_cast<std::size_t>(k)] + b.dq[static_cast<std::size_t>(k)];
        out.dp[static_cast<std::size_t>(k)] = a.dp[static_cast<std::size_t>(k)] + b.dp[static_cast<std::size_t>(k)];
    }
    out.second = a.second;
    for (const auto& [key, c] : b.second) add_second(out, key.first, key.second, c);
    return out;
}

FirstOrderOperator op_sub(const FirstOrderOperator& a, const FirstOrderOperator& b) {
    return op_add(a, op_scale(b, -1.0));
}

FirstOrderOperator op_scale(const FirstOrderOperator& a, std::complex<double> s) {
    FirstOrderOperator out(a.dim);
    out.zeroth = a.zeroth.scaled(s);
    for (int k = 0; k < a.dim; ++k) {
        out.dq[static_cast<std::size_t>(k)] = a.dq[static_cast<std::size_t>(k)].scaled(s);
        out.dp[static_cast<std::size_t>(k)] = a.dp[static_cast<std::size_t>(k)].scaled(s);
    }
    for (const auto& [key, c] : a.second) {
        const CPoly sc = c.scaled(s);
        if (!sc.is_zero()) out.second.emplace(key, sc);
    }
    return out;
}

FirstOrderOperator compose(const FirstOrderOperator& a, const FirstOrderOperator& b) {
    check_same_dim(a, b);
    if (!a.pure_first_order() || !b.pure_first_order())
        throw Error("compose requires first-order operands");
    const int dim = a.dim;
    FirstOrderOperator out(dim);

    auto a_coeff = [&](const DerivSlot& s) -> const CPoly& {
        return s.is_p ? a.dp[static_cast<std::size_t>(s.index)] : a.dq[static_cast<std::size_t>(s.index)];
    };
    auto b_coeff = [&](const DerivSlot& s) -> const CPoly& {
        return s.is_p ? b.dp[static_cast<std::size_t>(s.index)] : b.dq[static_cast<std::size_t>(s.index)];
    };
    std::vector<DerivSlot> slots;
    for (int k = 0; k < dim; ++k) slots.push_back({false, k});
    for (int k = 0; k < dim; ++k) slots.push_back({true, k});

    // zeroth: a0*b0 + sum_k a_k d_k(b0)
    out.zeroth = a.zeroth * b.zeroth;
    for (const DerivSlot& s : slots)
        out.zeroth = out.zeroth + a_coeff(s) * b.zeroth.diff(slot_var(s));

    // first order, coefficient of d_l: a0*b_l + sum_k a_k d_k(b_l) + a_l*b0
    for (const DerivSlot& l : slots) {
        CPoly c = a.zeroth * b_coeff(l) + a_coeff(l) * b.zeroth;
        for (const DerivSlot& s : slots) c = c + a_coeff(s) * b_coeff(l).diff(slot_var(s));
        if (l.is_p)
            out.dp[static_cast<std::size_t>(l.index)] = c;
        else
            out.dq[static_cast<std::size_t>(l.index)] = c;
    }

    // second order: a_k b_l d_k d_l (symmetrized)
    for (const DerivSlot& k : slots)
        for (const DerivSlot& l : slots) add_second(out, k, l, a_coeff(k) * b_coeff(l));
    return out;
}

FirstOrderOperator commute(const FirstOrderOperator& a, const FirstOrderOperator& b) {
    FirstOrderOperator c = op_sub(compose(a, b), compose(b, a));
    if (!c.second.empty())
        throw CancellationError(
            "commutator second-order terms failed to cancel: " + c.str());
    return c;
}

namespace {
ComplexField sample_cpoly(const CPoly& c, const Grid& g) {
    const RealField re = sample(c.re, g);
    const RealField im = sample(c.im, g);
    ComplexField out(g);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {re[i], im[i]};
    return out;
}
}  // namespace

ComplexField apply(const FirstOrderOperator& op, const ComplexField& phi, bool allow_second) {
    if (op.dim != 1) throw Error("apply: only 1-dimensional operators act on grids");
    if (!op.pure_first_order() && !allow_second)
        throw Error("apply: operator has second-order terms");
    const Grid& g = phi.grid;
    const int qa = g.require_axis("q");
    const int pa = g.require_axis("p");
    require_finite(phi, "apply input");

    ComplexField out(g);
    if (!op.zeroth.is_zero()) {
        const ComplexField z = sample_cpoly(op.zeroth, g);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += z[i] * phi[i];
    }
    auto add_deriv = [&](const CPoly& coeff, int axis, int order) {
        if (coeff.is_zero()) return;
        const ComplexField d = order == 1 ? partial(phi, axis) : second_partial(phi, axis);
        const ComplexField c = sample_cpoly(coeff, g);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i] * d[i];
    };
    add_deriv(op.dq[0], qa, 1);
    add_deriv(op.dp[0], pa, 1);
    for (const auto& [key, c] : op.second) {
        const auto& [s1, s2] = key;
        const int ax1 = s1.is_p ? pa : qa;
        const int ax2 = s2.is_p ? pa : qa;
        if (c.is_zero()) continue;
        const ComplexField cf = sample_cpoly(c, g);
        const ComplexField d =
            (s1 == s2) ? second_partial(phi, ax1) : partial(partial(phi, ax1), ax2);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += cf[i] * d[i];
    }
    return out;
}

std::complex<double> expectation(const FirstOrderOperator& op, const ComplexField& phi) {
    return inner(phi, apply(op, phi, true));
}

}  // namespace qcens
