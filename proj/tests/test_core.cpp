#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "qcens/errors.hpp"
#include "qcens/field.hpp"
#include "qcens/fft.hpp"
#include "qcens/grid.hpp"
#include "qcens/io.hpp"
#include "qcens/madelung.hpp"
#include "qcens/operators.hpp"
#include "qcens/poly.hpp"

using namespace qcens;
using std::numbers::pi;

namespace {

RealField fill_real(const Grid& g, auto fn) {
    RealField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::array<double, 3> c{};
        for (int a = 0; a < g.rank(); ++a) c[static_cast<std::size_t>(a)] = g.coord(i, a);
        f[i] = fn(c);
    }
    return f;
}

ComplexField fill_complex(const Grid& g, auto fn) {
    ComplexField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::array<double, 3> c{};
        for (int a = 0; a < g.rank(); ++a) c[static_cast<std::size_t>(a)] = g.coord(i, a);
        f[i] = fn(c);
    }
    return f;
}

double max_err(const RealField& a, const RealField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("axis nodes are cell-centered and symmetric boxes stay symmetric") {
    const Axis a = make_axis("q", -1.0, 1.0, 16);
    CHECK(a.spacing() == 0.125);
    CHECK(a.node(0) == -0.9375);
    CHECK(a.node(15) == 0.9375);
    for (int i = 0; i < 16; ++i) CHECK(a.node(i) == -a.node(15 - i));
}

TEST_CASE("grid layout is row-major with the last axis fastest") {
    const Grid g = make_grid_2d(make_axis("q", 0, 1, 8), make_axis("p", 0, 1, 16));
    CHECK(g.total_points() == 128);
    CHECK(g.stride(0) == 16);
    CHECK(g.stride(1) == 1);
    const std::array<int, 3> idx{3, 9, 0};
    CHECK(g.ravel(idx) == 3 * 16 + 9);
    CHECK(g.unravel(3 * 16 + 9) == idx);
    CHECK(g.coord(3 * 16 + 9, 0) == g.axis(0).node(3));
    CHECK(g.coord(3 * 16 + 9, 1) == g.axis(1).node(9));
}

TEST_CASE("grid construction rejects bad shapes") {
    CHECK_THROWS_AS(make_grid_1d(make_axis("q", 0, 1, 4)), GridError);
    CHECK_THROWS_AS(make_grid_1d(make_axis("z", 0, 1, 16)), GridError);
    CHECK_THROWS_AS(make_grid_2d(make_axis("q", 0, 1, 16), make_axis("q", 0, 1, 16)),
                    GridError);
    CHECK_THROWS_AS(make_grid_1d(make_axis("q", 1, 1, 16)), GridError);
    CHECK_THROWS_AS(Grid({make_axis("q", 0, 1, 1 << 13), make_axis("p", 0, 1, 1 << 13)}),
                    GridError);  // over the point budget
}

TEST_CASE("midpoint quadrature: constants exact, odd integrands cancel exactly") {
    const Grid g = make_grid_1d(make_axis("q", -2.0, 2.0, 64));
    RealField one(g, 1.0);
    CHECK(integrate(one) == 4.0);
    const RealField q = coordinate_field(g, 0);
    CHECK(integrate(q) == 0.0);
    const RealField q3 = q * q * q;
    CHECK(integrate(q3) == 0.0);
}

TEST_CASE("midpoint quadrature resolves a gaussian to near machine precision") {
    const Grid g = make_grid_1d(make_axis("q", -8.0, 8.0, 256));
    const RealField rho = fill_real(g, [](auto c) {
        return std::exp(-0.5 * c[0] * c[0]) / std::sqrt(2.0 * pi);
    });
    CHECK(std::abs(integrate(rho) - 1.0) < 1e-13);
    // second moment of the standard gaussian
    const RealField q = coordinate_field(g, 0);
    CHECK(std::abs(integrate(q * q * rho) - 1.0) < 1e-12);
}

TEST_CASE("spectral derivative is exact on resolved modes") {
    const Grid g = make_grid_1d(make_axis("q", 0.0, 2.0 * pi, 64, Boundary::periodic));
    const RealField f = fill_real(g, [](auto c) { return std::sin(3.0 * c[0]); });
    const RealField want = fill_real(g, [](auto c) { return 3.0 * std::cos(3.0 * c[0]); });
    CHECK(max_err(partial(f, 0), want) < 1e-12);
    const RealField want2 =
        fill_real(g, [](auto c) { return -9.0 * std::sin(3.0 * c[0]); });
    CHECK(max_err(second_partial(f, 0), want2) < 1e-11);
}

TEST_CASE("clamped stencils differentiate low-degree polynomials exactly") {
    const Grid g = make_grid_1d(make_axis("q", -1.0, 3.0, 32, Boundary::clamped));
    const RealField f = fill_real(g, [](auto c) {
        const double q = c[0];
        return ((q - 2.0) * q + 3.0) * q * q;  // q^4 - 2q^3 + 3q^2
    });
    const RealField d1 = fill_real(g, [](auto c) {
        const double q = c[0];
        return ((4.0 * q - 6.0) * q + 6.0) * q;
    });
    const RealField d2 = fill_real(g, [](auto c) {
        const double q = c[0];
        return (12.0 * q - 12.0) * q + 6.0;
    });
    CHECK(max_err(partial(f, 0), d1) < 1e-9);
    CHECK(max_err(second_partial(f, 0), d2) < 1e-8);
}

TEST_CASE("action derivatives ignore the periodic flag") {
    // linear ramps are the generic action profile; spectral differentiation
    // would wreck them, the dedicated path must not
    const Grid g = make_grid_1d(make_axis("q", -2.0, 2.0, 64, Boundary::periodic));
    const RealField s = fill_real(g, [](auto c) { return 1.5 * c[0] - 0.25; });
    RealField want(g, 1.5);
    CHECK(max_err(action_partial(s, 0), want) < 1e-10);
}

TEST_CASE("derivatives reject non-finite input") {
    const Grid g = make_grid_1d(make_axis("q", -1.0, 1.0, 16));
    RealField f(g, 1.0);
    f[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(partial(f, 0), Error);
}

TEST_CASE("marginal integrates out the named axes") {
    const Grid g = make_grid_2d(make_axis("q", -3.0, 3.0, 48), make_axis("p", -4.0, 4.0, 64));
    const RealField rho = fill_real(g, [](auto c) {
        return std::exp(-c[0] * c[0] - 0.5 * c[1] * c[1]);
    });
    const RealField mq = marginal(rho, {"q"});
    CHECK(mq.grid.rank() == 1);
    CHECK(mq.grid.axis(0).name == "q");
    // factorized density: the marginal is the q-gaussian times the p-mass
    const Grid gq = make_grid_1d(make_axis("q", -3.0, 3.0, 48));
    const RealField qg = fill_real(gq, [](auto c) { return std::exp(-c[0] * c[0]); });
    double pmass = 0.0;
    {
        const Grid gp = make_grid_1d(make_axis("p", -4.0, 4.0, 64));
        pmass = integrate(fill_real(gp, [](auto c) { return std::exp(-0.5 * c[0] * c[0]); }));
    }
    double m = 0.0;
    for (std::size_t i = 0; i < mq.size(); ++i)
        m = std::max(m, std::abs(mq[i] - pmass * qg[i]));
    CHECK(m < 1e-12);
    CHECK(std::abs(integrate(mq) - integrate(rho)) < 1e-12);
}

TEST_CASE("polynomial arithmetic, printing and evaluation agree") {
    const Poly q = Poly::variable(Var::q1);
    const Poly p = Poly::variable(Var::p1);
    const Poly f = (q + p) * (q + p);
    CHECK(f.str() == "q^2 + 2 q p + p^2");
    CHECK(f.eval({2.0, 0, 0, 3.0, 0, 0, 0, 0, 0, 0}) == 25.0);
    CHECK(f.diff(Var::q1).str() == "2 q + 2 p");
    CHECK(f.subst(Var::p1, Poly::constant(1.0)).str() == "q^2 + 2 q + 1");
    CHECK((f - f).is_zero());
    CHECK(f.total_degree() == 2);
    CHECK(f.degree(Var::q1) == 2);
    CHECK_FALSE(f.depends_on(Var::x));
}

TEST_CASE("canonical bracket relations hold exactly") {
    const Poly q = Poly::variable(Var::q1);
    const Poly p = Poly::variable(Var::p1);
    CHECK(poisson_bracket(q, p, 1) == Poly::constant(1.0));
    CHECK(poisson_bracket(p, q, 1) == Poly::constant(-1.0));
    CHECK(poisson_bracket(q, q, 1).is_zero());
    // {q^2 p, q p^2} = 2qp*qp... verify against the hand result 3 q^2 p^2 - ...
    const Poly F = q * q * p;
    const Poly G = q * p * p;
    const Poly want = (q * q) * (p * p).scaled(2.0) - (q * p) * (q * p);
    // dF/dq dG/dp - dF/dp dG/dq = (2qp)(2qp) - (q^2)(p^2) = 3 q^2 p^2
    CHECK(poisson_bracket(F, G, 1) == (q * q * p * p).scaled(3.0));
    CHECK(want == (q * q * p * p));  // sanity on the helper algebra itself
}

TEST_CASE("poisson bracket satisfies the jacobi identity termwise") {
    const Poly q = Poly::variable(Var::q1);
    const Poly p = Poly::variable(Var::p1);
    const Poly A = q * q * p - p.scaled(2.0);
    const Poly B = q * p * p + q.scaled(3.0);
    const Poly C = q * q + p * p + q * p;
    const Poly jac = poisson_bracket(A, poisson_bracket(B, C, 1), 1) +
                     poisson_bracket(B, poisson_bracket(C, A, 1), 1) +
                     poisson_bracket(C, poisson_bracket(A, B, 1), 1);
    CHECK(jac.is_zero());
}

TEST_CASE("angular momentum closes under the 3d bracket") {
    auto Lcomp = [](int i) {
        const int j = (i + 1) % 3;
        const int k = (i + 2) % 3;
        return Poly::variable(q_var(j)) * Poly::variable(p_var(k)) -
               Poly::variable(q_var(k)) * Poly::variable(p_var(j));
    };
    CHECK(poisson_bracket(Lcomp(0), Lcomp(1), 3) == Lcomp(2));
    CHECK(poisson_bracket(Lcomp(1), Lcomp(2), 3) == Lcomp(0));
    CHECK(poisson_bracket(Lcomp(2), Lcomp(0), 3) == Lcomp(1));
}

TEST_CASE("sampling binds grid axes and fixed values") {
    const Grid g = make_grid_2d(make_axis("q", -1.0, 1.0, 16), make_axis("p", -2.0, 2.0, 16));
    const Poly f = Poly::variable(Var::q1) * Poly::variable(Var::p1) +
                   Poly::variable(Var::t).scaled(2.0);
    const RealField s = sample(f, g, {{Var::t, 0.5}});
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(s[i] == g.coord(i, 0) * g.coord(i, 1) + 1.0);
    CHECK_THROWS_AS(sample(f, g), Error);  // t left unbound
}

TEST_CASE("sampling with a bound field substitutes pointwise") {
    const Grid g = make_grid_1d(make_axis("q", -1.0, 1.0, 32));
    const RealField slope = fill_real(g, [](auto c) { return 2.0 * c[0]; });
    const Poly f = Poly::variable(Var::p1) * Poly::variable(Var::p1) +
                   Poly::variable(Var::q1);
    const RealField s = sample_with(f, g, {{Var::p1, &slope}});
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double q = g.coord(i, 0);
        CHECK(s[i] == doctest::Approx(4.0 * q * q + q).epsilon(1e-14));
    }
}

TEST_CASE("operator of a phase function: structure and printing") {
    const Poly q = Poly::variable(Var::q1);
    const Poly p = Poly::variable(Var::p1);
    const double h = 0.5;

    const FirstOrderOperator oq = vanhove_of(q, 1, h);
    CHECK(oq.zeroth == CPoly::from_real(q));
    CHECK(oq.dq[0].is_zero());
    CHECK(oq.dp[0] == CPoly::from_imag(Poly::constant(h)));
    CHECK(oq.str() == "(q) + (i*(0.5)) d/dp");

    const FirstOrderOperator op = vanhove_of(p, 1, h);
    CHECK(op.zeroth.is_zero());  // p - p*1 cancels
    CHECK(op.dq[0] == CPoly::from_imag(Poly::constant(-h)));
    CHECK(op.dp[0].is_zero());

    // quadratic momentum picks up the characteristic negative zeroth term
    const FirstOrderOperator oke = vanhove_of((p * p).scaled(0.5), 1, h);
    CHECK(oke.zeroth == CPoly::from_real((p * p).scaled(-0.5)));
}

TEST_CASE("commutators reproduce the bracket operator exactly") {
    const Poly q = Poly::variable(Var::q1);
    const Poly p = Poly::variable(Var::p1);
    const double h = 0.5;  // dyadic so every coefficient op is exact
    const std::complex<double> ih{0.0, h};

    const std::array<Poly, 5> battery = {
        q, p, (p * p).scaled(0.5) + q * q, q * q * p, q * p * p - q.scaled(2.0)};
    for (const Poly& F : battery) {
        for (const Poly& G : battery) {
            const FirstOrderOperator lhs =
                commute(vanhove_of(F, 1, h), vanhove_of(G, 1, h));
            const FirstOrderOperator rhs =
                op_scale(vanhove_of(poisson_bracket(F, G, 1), 1, h), ih);
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("position operator squared leaves a second-order remainder") {
    const Poly q = Poly::variable(Var::q1);
    const double h = 2.0;
    const FirstOrderOperator oq = vanhove_of(q, 1, h);
    const FirstOrderOperator sq = compose(oq, oq);
    CHECK_FALSE(sq.pure_first_order());
    // zeroth q^2, first 2 i h q d/dp, second -h^2 d2/dp2
    CHECK(sq.zeroth == CPoly::from_real(q * q));
    CHECK(sq.dp[0] == CPoly::from_imag(q.scaled(2.0 * h)));
    const auto key = std::make_pair(DerivSlot{true, 0}, DerivSlot{true, 0});
    REQUIRE(sq.second.count(key) == 1);
    CHECK(sq.second.at(key) == CPoly::from_real(Poly::constant(-h * h)));
    // and the square of a squared coordinate is not the operator of q^2
    CHECK_FALSE(sq == vanhove_of(q * q, 1, h));
}

TEST_CASE("gridded operator application matches hand-computed action") {
    const Grid g = make_grid_2d(make_axis("q", -pi, pi, 32, Boundary::periodic),
                                make_axis("p", -pi, pi, 32, Boundary::periodic));
    const ComplexField phi = fill_complex(g, [](auto c) {
        return std::complex<double>{std::sin(c[0]), std::cos(c[1])};
    });
    const double h = 1.0;
    const FirstOrderOperator op = vanhove_of(Poly::variable(Var::q1), 1, h);
    const ComplexField got = apply(op, phi);
    double m = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double qv = g.coord(i, 0);
        const double pv = g.coord(i, 1);
        const std::complex<double> want =
            qv * std::complex<double>{std::sin(qv), std::cos(pv)} +
            std::complex<double>{0.0, h} *
                std::complex<double>{0.0, -std::sin(pv)};
        m = std::max(m, std::abs(got[i] - want));
    }
    CHECK(m < 1e-11);
}

TEST_CASE("polar split and join round-trip a smooth state") {
    const Grid g = make_grid_1d(make_axis("q", -6.0, 6.0, 128));
    const double h = 0.5;
    const RealField rho = normalized(fill_real(
        g, [](auto c) { return std::exp(-0.5 * c[0] * c[0]); }));
    const RealField s = fill_real(g, [](auto c) { return 0.3 * c[0]; });
    const ComplexField phi = madelung_join(rho, s, h);
    const MadelungSplit ms = madelung_split(phi, h);
    double md = 0.0, ms_err = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        md = std::max(md, std::abs(ms.density[i] - rho[i]));
        if (ms.defined[i]) ms_err = std::max(ms_err, std::abs(ms.action[i] - s[i]));
    }
    CHECK(md < 1e-14);
    CHECK(ms_err < 1e-10);
}

TEST_CASE("phase unwrapping survives multi-wavelength winding") {
    const Grid g = make_grid_1d(make_axis("q", -6.0, 6.0, 256));
    const double h = 0.5;
    // 4 full phase turns across the support at h=0.5
    const RealField rho = normalized(fill_real(
        g, [](auto c) { return std::exp(-0.5 * c[0] * c[0]); }));
    const RealField s = fill_real(g, [](auto c) { return 1.2 * c[0]; });
    const ComplexField phi = madelung_join(rho, s, h);
    const MadelungSplit ms = madelung_split(phi, h);
    double err = 0.0;
    double offset = 0.0;
    bool have_offset = false;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (!ms.defined[i]) continue;
        if (!have_offset) {
            offset = ms.action[i] - s[i];
            have_offset = true;
        }
        err = std::max(err, std::abs(ms.action[i] - s[i] - offset));
    }
    // seed sits at the density max where s~0, so the global offset is ~0 too
    CHECK(std::abs(offset) < 1e-9);
    CHECK(err < 1e-9);
}

TEST_CASE("phase gradient reads the local momentum without unwrapping") {
    // clamped axis: a linear phase ramp is not periodic on the box
    const Grid g = make_grid_1d(make_axis("q", -6.0, 6.0, 256, Boundary::clamped));
    const double h = 1.0;
    const RealField rho = normalized(fill_real(
        g, [](auto c) { return std::exp(-0.5 * c[0] * c[0]); }));
    const RealField s = fill_real(g, [](auto c) { return 0.7 * c[0]; });
    const ComplexField phi = madelung_join(rho, s, h);
    const RealField grad = phase_gradient(phi, h, 0);
    const double peak = max_abs(rho);
    double err = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (rho[i] < 1e-3 * peak) continue;  // stay on solid support
        err = std::max(err, std::abs(grad[i] - 0.7));
    }
    CHECK(err < 1e-4);
}

TEST_CASE("json snapshots round-trip bit-exactly") {
    const Grid g = make_grid_2d(make_axis("q", -1.5, 2.5, 8, Boundary::clamped),
                                make_axis("p", -3.0, 3.0, 16));
    const RealField f = fill_real(g, [](auto c) {
        return std::sin(c[0] * 3.1) * std::exp(0.2 * c[1]);
    });
    const std::string text = io::field_to_json(f, "density");
    const RealField back = io::real_field_from_json(text);
    REQUIRE(back.grid == g);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(back[i] == f[i]);

    ComplexField cf(g);
    for (std::size_t i = 0; i < cf.size(); ++i)
        cf[i] = {std::cos(0.1 * static_cast<double>(i)), std::sin(0.2 * static_cast<double>(i))};
    const ComplexField cback = io::complex_field_from_json(io::field_to_json(cf));
    for (std::size_t i = 0; i < cf.size(); ++i) CHECK(cback[i] == cf[i]);
}

TEST_CASE("numeric formatting picks the shortest exact decimal") {
    CHECK(io::format_double(0.5) == "0.5");
    CHECK(io::format_double(1.0 / 3.0) == "0.3333333333333333");
    CHECK(io::format_double(-0.0) == "-0");
    CHECK(io::format_double(1e22) == "1e+22");
    const double v = 0.1 + 0.2;
    CHECK(std::strtod(io::format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("csv export writes one row per node with coordinates first") {
    const Grid g = make_grid_1d(make_axis("q", 0.0, 1.0, 8));
    RealField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(i);
    std::ostringstream os;
    io::field_to_csv(f, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "q,value");
    std::getline(is, line);
    CHECK(line == "0.0625,0");
}
