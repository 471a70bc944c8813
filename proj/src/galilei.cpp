#include "qcens/galilei.hpp"

#include <cmath>
#include <complex>
#include <limits>

#include "json.hpp"
#include "qcens/errors.hpp"
#include "qcens/io.hpp"
#include "qcens/operators.hpp"

namespace qcens {

namespace {

int epsilon(int i, int j, int k) {
    if (i == j || j == k || i == k) return 0;
    return ((j - i + 3) % 3 == 1) ? 1 : -1;  // cyclic iff j follows i
}

double max_abs_coeff(const Poly& f) {
    double m = 0.0;
    for (const auto& [e, c] : f.terms()) m = std::max(m, std::abs(c));
    return m;
}

double cpoly_residual(const CPoly& c) {
    return std::max(max_abs_coeff(c.re), max_abs_coeff(c.im));
}

double op_residual(const FirstOrderOperator& d) {
    double m = cpoly_residual(d.zeroth);
    for (const auto& c : d.dq) m = std::max(m, cpoly_residual(c));
    for (const auto& c : d.dp) m = std::max(m, cpoly_residual(c));
    for (const auto& [slots, c] : d.second) m = std::max(m, cpoly_residual(c));
    return m;
}

std::string axis_name(const char* base, int i) {
    return std::string(base) + "_" + "xyz"[i];
}

struct Relation {
    std::string a, b;
    Poly A, B, rhs;
};

// the algebra table, oriented as printed: {A, B} = rhs
std::vector<Relation> bracket_table(const GalileiGenerators& g) {
    std::vector<Relation> out;
    auto cross = [&](const std::array<Poly, 3>& basis, int i, int j) {
        Poly rhs;
        for (int k = 0; k < 3; ++k)
            if (const int e = epsilon(i, j, k)) rhs = rhs + basis[k].scaled(e);
        return rhs;
    };
    for (int i = 0; i < 3; ++i) out.push_back({"H", axis_name("Pi", i), g.H, g.Pi[i], {}});
    for (int i = 0; i < 3; ++i) out.push_back({"H", axis_name("L", i), g.H, g.L[i], {}});
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            out.push_back({axis_name("Pi", i), axis_name("Pi", j), g.Pi[i], g.Pi[j], {}});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out.push_back({axis_name("L", i), axis_name("Pi", j), g.L[i], g.Pi[j],
                           cross(g.Pi, i, j)});
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            out.push_back({axis_name("L", i), axis_name("L", j), g.L[i], g.L[j],
                           cross(g.L, i, j)});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out.push_back({axis_name("L", i), axis_name("G", j), g.L[i], g.G[j],
                           cross(g.G, i, j)});
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            out.push_back({axis_name("G", i), axis_name("G", j), g.G[i], g.G[j], {}});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out.push_back({axis_name("G", i), axis_name("Pi", j), g.G[i], g.Pi[j],
                           i == j ? Poly::constant(g.mass) : Poly{}});
    for (int i = 0; i < 3; ++i)
        out.push_back({axis_name("G", i), "H", g.G[i], g.H, g.Pi[i]});
    return out;  // 45 = all unordered generator pairs
}

}  // namespace

GalileiGenerators galilei_phase(double mass, double time) {
    if (!(mass > 0.0)) throw Error("mass must be positive");
    GalileiGenerators g;
    g.mass = mass;
    g.time = time;
    for (int i = 0; i < 3; ++i) {
        const Poly qi = Poly::variable(q_var(i));
        const Poly pi = Poly::variable(p_var(i));
        g.H = g.H + (pi * pi).scaled(1.0 / (2.0 * mass));
        g.Pi[i] = pi;
        g.G[i] = qi.scaled(mass) - pi.scaled(time);
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                if (const int e = epsilon(i, j, k))
                    g.L[i] = g.L[i] +
                             (Poly::variable(q_var(j)) * Poly::variable(p_var(k))).scaled(e);
    }
    return g;
}

std::vector<RelationCheck> check_galilei_symbolic(const GalileiGenerators& gen) {
    std::vector<RelationCheck> out;
    for (const auto& r : bracket_table(gen)) {
        const Poly got = poisson_bracket(r.A, r.B, 3);
        const Poly diff = got - r.rhs;
        RelationCheck c;
        c.representation = "phase";
        c.symbols = "{" + r.a + ", " + r.b + "}";
        c.expected = r.rhs.str(3);
        c.got = got.str(3);
        c.residual = max_abs_coeff(diff);
        c.pass = diff.is_zero();
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<RelationCheck> check_galilei_vanhove(double hbar, double time, double mass) {
    if (!(hbar > 0.0)) throw Error("hbar must be positive");
    const GalileiGenerators gen = galilei_phase(mass, time);
    const std::complex<double> ih(0.0, hbar);
    std::vector<RelationCheck> out;

    for (const auto& r : bracket_table(gen)) {
        RelationCheck c;
        c.representation = "vanhove";
        c.symbols = "[O_{" + r.a + "}, O_{" + r.b + "}]";
        const FirstOrderOperator expect = op_scale(vanhove_of(r.rhs, 3, hbar), ih);
        c.expected = expect.str();
        try {
            const FirstOrderOperator got =
                commute(vanhove_of(r.A, 3, hbar), vanhove_of(r.B, 3, hbar));
            c.got = got.str();
            c.residual = op_residual(op_sub(got, expect));
            c.pass = (got == expect);
        } catch (const CancellationError& e) {
            c.got = std::string("cancellation failure: ") + e.what();
            c.residual = std::numeric_limits<double>::infinity();
            c.pass = false;
        }
        out.push_back(std::move(c));
    }

    // the explicit operator forms, built by hand from the table column
    std::vector<std::pair<std::string, std::pair<Poly, FirstOrderOperator>>> forms;
    for (int i = 0; i < 3; ++i) {
        FirstOrderOperator pi_op(3);
        pi_op.dq[static_cast<std::size_t>(i)] = CPoly::from_imag(Poly::constant(-hbar));
        forms.push_back({axis_name("Pi", i), {gen.Pi[i], pi_op}});

        FirstOrderOperator l_op(3);
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                if (const int e = epsilon(i, j, k)) {
                    auto& dqk = l_op.dq[static_cast<std::size_t>(k)];
                    auto& dpj = l_op.dp[static_cast<std::size_t>(j)];
                    dqk = dqk + CPoly::from_imag(
                                    Poly::variable(q_var(j)).scaled(-hbar * e));
                    dpj = dpj + CPoly::from_imag(
                                    Poly::variable(p_var(k)).scaled(hbar * e));
                }
        forms.push_back({axis_name("L", i), {gen.L[i], l_op}});

        FirstOrderOperator g_op(3);
        g_op.zeroth = CPoly::from_real(Poly::variable(q_var(i)).scaled(mass));
        g_op.dp[static_cast<std::size_t>(i)] = CPoly::from_imag(Poly::constant(hbar * mass));
        g_op.dq[static_cast<std::size_t>(i)] = CPoly::from_imag(Poly::constant(hbar * time));
        forms.push_back({axis_name("G", i), {gen.G[i], g_op}});
    }
    FirstOrderOperator h_op(3);
    h_op.zeroth = CPoly::from_real(gen.H.scaled(-1.0));
    for (int a = 0; a < 3; ++a)
        h_op.dq[static_cast<std::size_t>(a)] =
            CPoly::from_imag(Poly::variable(p_var(a)).scaled(-hbar / mass));
    forms.push_back({"H", {gen.H, h_op}});

    for (const auto& [name, pf] : forms) {
        const FirstOrderOperator got = vanhove_of(pf.first, 3, hbar);
        RelationCheck c;
        c.representation = "vanhove";
        c.symbols = "O_{" + name + "} explicit form";
        c.expected = pf.second.str();
        c.got = got.str();
        c.residual = op_residual(op_sub(got, pf.second));
        c.pass = (got == pf.second);
        out.push_back(std::move(c));
    }

    // central term as a grid expectation on a Gaussian state
    {
        const Grid g2 = make_grid_2d(make_axis("q", -8, 8, 64), make_axis("p", -8, 8, 64));
        ComplexField phi(g2);
        for (std::size_t i = 0; i < phi.size(); ++i) {
            const double q = g2.coord(i, 0) - 0.5;
            const double p = g2.coord(i, 1) + 0.3;
            phi[i] = std::exp(-0.5 * (q * q + p * p));
        }
        phi = normalized_l2(phi);
        const Poly g1 = Poly::variable(Var::q1).scaled(mass) -
                        Poly::variable(Var::p1).scaled(time);
        const FirstOrderOperator comm =
            commute(vanhove_of(g1, 1, hbar), vanhove_of(Poly::variable(Var::p1), 1, hbar));
        const std::complex<double> val = expectation(comm, phi) / ih;
        RelationCheck c;
        c.representation = "vanhove";
        c.symbols = "<(1/ih)[O_{G}, O_{Pi}]>";
        c.expected = io::format_double(mass);
        c.got = io::format_double(val.real());
        c.residual = std::abs(val - mass);
        c.pass = c.residual <= 1e-8;
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

template <class BracketFn, class ValueFn>
std::vector<RelationCheck> functional_checks(const char* tag, const char* vars,
                                             double mass, double time, double tol,
                                             BracketFn bracket, ValueFn value) {
    const Poly Pi = Poly::variable(Var::p1);
    const Poly H = (Pi * Pi).scaled(1.0 / (2.0 * mass));
    const Poly G = Poly::variable(Var::q1).scaled(mass) - Pi.scaled(time);

    struct Row {
        const char* a;
        const char* b;
        Poly A, B;
        double expected;
    };
    const Row rows[] = {
        {"H", "Pi", H, Pi, 0.0},
        {"G", "Pi", G, Pi, mass},
        {"G", "H", G, H, value(Pi)},
    };
    std::vector<RelationCheck> out;
    for (const auto& r : rows) {
        RelationCheck c;
        c.representation = tag;
        c.symbols = std::string("{") + r.a + ", " + r.b + "}_" + vars;
        c.expected = io::format_double(r.expected);
        const double got = bracket(r.A, r.B);
        c.got = io::format_double(got);
        c.residual = std::abs(got - r.expected);
        c.pass = c.residual <= tol;
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace

std::vector<RelationCheck> check_galilei_functional(const ConfigEnsemble& ens,
                                                    double time, double tol) {
    check_config_ensemble(ens);
    return functional_checks(
        "ecs", "(P,S)", ens.mass, time, tol,
        [&](const Poly& A, const Poly& B) { return bracket_ecs(A, B, ens); },
        [&](const Poly& F) { return observable_ecs(ens, F); });
}

std::vector<RelationCheck> check_galilei_functional(const PhaseEnsemble& ens,
                                                    double time, double tol) {
    check_phase_ensemble(ens);
    return functional_checks(
        "eps", "(rho,sigma)", ens.mass, time, tol,
        [&](const Poly& A, const Poly& B) { return bracket_eps(A, B, ens); },
        [&](const Poly& F) { return observable_eps(ens, F); });
}

bool all_pass(const std::vector<RelationCheck>& checks) {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::string relations_to_json(const std::vector<RelationCheck>& checks) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks)
        arr.push_back({{"representation", c.representation},
                       {"symbols", c.symbols},
                       {"expected", c.expected},
                       {"got", c.got},
                       {"residual", c.residual},
                       {"pass", c.pass}});
    const nlohmann::json doc{{"schema_version", io::schema_version},
                             {"all_pass", all_pass(checks)},
                             {"relations", arr}};
    return doc.dump();
}

}  // namespace qcens
