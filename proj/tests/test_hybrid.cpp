#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "qcens/ecs.hpp"
#include "qcens/errors.hpp"
#include "qcens/field.hpp"
#include "qcens/grid.hpp"
#include "qcens/hybrid.hpp"
#include "qcens/madelung.hpp"
#include "qcens/poly.hpp"
#include "qcens/vanhove.hpp"

using namespace qcens;

namespace {

double gauss(double v, double c, double s) {
    return std::exp(-0.5 * (v - c) * (v - c) / (s * s));
}

/// Normalized product Gaussian on a (q,x) grid.
RealField blob_qx(const Grid& g, double cq, double sq, double cx, double sx) {
    RealField f(g);
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = gauss(g.coord(i, 0), cq, sq) * gauss(g.coord(i, 1), cx, sx);
    return normalized(f);
}

double l1_diff(const RealField& a, const RealField& b) {
    return integrate(zip_fields(a, b, [](double x, double y) { return std::abs(x - y); }));
}

double field_mean(const RealField& f, int axis) {
    return integrate(f * coordinate_field(f.grid, axis));
}

/// |psi|^2 variance at time t of an initially minimal Gaussian packet.
double spread_variance(double s0, double hbar, double mass, double t) {
    const double r = hbar * t / (2.0 * mass * s0 * s0);
    return s0 * s0 * (1.0 + r * r);
}

InteractionPotential harmonic_coupling(double strength) {
    return {Poly::monomial(1.0, {{Var::q1, 2}}), strength};
}

const Grid& cube_grid() {
    static const Grid g = make_grid_3d(make_axis("q", -6, 6, 64),
                                       make_axis("p", -6, 6, 64),
                                       make_axis("x", -6, 6, 64));
    return g;
}

/// Normalized product wavefunction blob(q,p) * packet(x) with momentum kx.
HybridWavefunction product_wave(const Grid& g, double cq, double sq_, double cp,
                                double sp, double cx, double sx, double kx = 0.0) {
    ComplexField psi(g);
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double q = g.coord(i, 0), p = g.coord(i, 1), x = g.coord(i, 2);
        const double amp = std::sqrt(gauss(q, cq, sq_) * gauss(p, cp, sp)) *
                           std::sqrt(gauss(x, cx, sx));
        psi[i] = std::polar(amp, kx * x);
    }
    return {normalized_l2(psi), 1.0, 1.0, 1.0};
}

/// rho = P(q,x) N(p; 0.6 q, width^2), sigma = 0.3 q^2 + 0.2 x: a lifted state
/// whose momentum ridge follows d_q sigma exactly.
struct LiftedState {
    RealField rho;
    RealField sigma;
};

LiftedState lifted_state(const Grid& g, double width) {
    RealField rho(g);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double q = g.coord(i, 0), p = g.coord(i, 1), x = g.coord(i, 2);
        rho[i] = gauss(q, -0.5, 0.8) * gauss(x, 0.5, 0.7) * gauss(p, 0.6 * q, width);
    }
    const Poly S = Poly::monomial(0.3, {{Var::q1, 2}}) + Poly::monomial(0.2, {{Var::x, 1}});
    return {normalized(rho), sample(S, g)};
}

}  // namespace

TEST_CASE("interaction potential expands and validates") {
    const InteractionPotential V = harmonic_coupling(0.5);
    const Poly q = Poly::variable(Var::q1), x = Poly::variable(Var::x);
    CHECK(V.full() == ((q - x) * (q - x)).scaled(0.5));

    CHECK_NOTHROW(check_interaction(V));
    CHECK_NOTHROW(check_interaction(InteractionPotential{}));  // zero coupling
    CHECK_THROWS_AS(check_interaction({Poly::monomial(1.0, {{Var::q1, 3}}), 1.0}), Error);
    CHECK_THROWS_AS(check_interaction({Poly::variable(Var::x), 1.0}), Error);
    CHECK_THROWS_AS(check_interaction({Poly::variable(Var::p1), 1.0}), Error);
}

TEST_CASE("hybrid states reject malformed data") {
    const Grid g = make_grid_2d(make_axis("q", -6, 6, 32), make_axis("x", -6, 6, 32));
    HybridConfigEnsemble ens{blob_qx(g, 0, 1, 0, 1), RealField(g), 1.0, 1.0, 1.0};
    CHECK_NOTHROW(check_hybrid_config(ens));

    HybridConfigEnsemble bad = ens;
    bad.P = map_field(bad.P, [](double v) { return 2.0 * v; });
    CHECK_THROWS_AS(check_hybrid_config(bad), Error);
    bad = ens;
    bad.quantum_mass = 0.0;
    CHECK_THROWS_AS(check_hybrid_config(bad), Error);

    const Grid wrong = make_grid_2d(make_axis("q", -6, 6, 32), make_axis("p", -6, 6, 32));
    HybridConfigEnsemble named{RealField(wrong), RealField(wrong), 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(check_hybrid_config(named), GridError);

    HybridWavefunction w{ComplexField(cube_grid()), 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(check_hybrid_wavefunction(w), Error);  // zero norm
}

TEST_CASE("free hybrid ensemble evolves sectors independently") {
    const Axis qax = make_axis("q", -8, 8, 128);
    const Axis xax = make_axis("x", -8, 8, 128);
    const Grid g = make_grid_2d(qax, xax);
    const double s0 = 0.7, T = 0.25, dt = 1e-3;
    const int steps = 250;

    HybridConfigEnsemble ens{blob_qx(g, -1.0, 1.0, 0.0, s0),
                             sample(Poly::monomial(0.8, {{Var::q1, 1}}), g), 1.0, 1.0,
                             1.0};
    const HybridConfigEnsemble out = evolve_hybrid_ecs(ens, {}, dt, steps);
    CHECK(integrate(out.P) == doctest::Approx(1.0).epsilon(1e-8));

    // classical sector against the pure configuration-space evolution
    const Grid gq = make_grid_1d(qax);
    RealField Pc(gq), Sc(gq);
    for (std::size_t i = 0; i < Pc.size(); ++i) {
        Pc[i] = gauss(gq.coord(i, 0), -1.0, 1.0);
        Sc[i] = 0.8 * gq.coord(i, 0);
    }
    const ConfigEnsemble ref =
        evolve_ecs({normalized(Pc), Sc, 1.0}, Poly{}, dt, steps);
    CHECK(l1_diff(marginals(out).classical, ref.P) < 1e-4);

    // quantum sector against closed-form free packet spreading
    const double vT = spread_variance(s0, 1.0, 1.0, T);
    RealField packet(make_grid_1d(xax));
    for (std::size_t i = 0; i < packet.size(); ++i)
        packet[i] = gauss(packet.grid.coord(i, 0), 0.0, std::sqrt(vT));
    CHECK(l1_diff(marginals(out).quantum, normalized(packet)) < 1e-4);

    const double mx = quantum_observable_hybrid(out, QuantumOp::x);
    const double var = quantum_observable_hybrid(out, QuantumOp::xx) - mx * mx;
    CHECK(var == doctest::Approx(vT).epsilon(1e-4));

    CHECK(std::abs(sector_mutual_information(out)) < 1e-6);
}

TEST_CASE("coupled hybrid ensemble conserves momentum and energy") {
    const Grid g = make_grid_2d(make_axis("q", -8, 8, 128), make_axis("x", -8, 8, 128));
    const InteractionPotential V = harmonic_coupling(0.25);

    // translation invariance at the generator level, with zero tolerance
    CHECK((V.full().diff(Var::q1) + V.full().diff(Var::x)).is_zero());

    HybridConfigEnsemble ens{blob_qx(g, -1.0, 0.5, 1.0, 0.7), RealField(g), 1.0, 1.0,
                             1.0};
    const double pi0 = total_momentum_hybrid(ens);
    const double e0 = total_energy_hybrid(ens, V);
    const HybridConfigEnsemble out = evolve_hybrid_ecs(ens, V, 0.002, 200);
    CHECK(std::abs(total_momentum_hybrid(out) - pi0) < 1e-9);
    CHECK(std::abs(total_energy_hybrid(out, V) - e0) < 1e-4);
    CHECK(integrate(out.P) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("focusing classical sector trips the caustic detector") {
    // the converging phase -1.2 q^2 focuses the classical sector at t = 0.42;
    // the fine q axis keeps the initial chirp resolved, so any abort is earned
    const Grid g = make_grid_2d(make_axis("q", -8, 8, 128), make_axis("x", -8, 8, 64));
    HybridConfigEnsemble ens{blob_qx(g, 0.0, 0.9, 0.0, 0.7),
                             sample(Poly::monomial(-1.2, {{Var::q1, 2}}), g), 1.0, 1.0,
                             1.0};
    HybridEcsOptions opts;
    opts.caustic_phase_limit = 0.5;
    bool caught = false;
    try {
        evolve_hybrid_ecs(ens, {}, 0.01, 60, opts);
    } catch (const NumericalAbort& e) {
        caught = true;
        CHECK(e.kind == "caustic");
        CHECK(e.step > 5);  // fires once focusing has sharpened the sector, not at once
    }
    CHECK(caught);
}

TEST_CASE("free hybrid wavefunction factorizes into sector evolutions") {
    const Grid& g = cube_grid();
    const double s0 = 0.7, T = 0.25, dt = 0.005;
    const int steps = 50;

    const HybridWavefunction w0 = product_wave(g, -1.0, 0.8, 0.5, 0.8, 0.0, s0);
    const HybridWavefunction wT = evolve_hybrid_hilbert(w0, {}, dt, steps);
    const SectorMarginals m = marginals(wT);

    // classical sector against the pure phase-space evolution
    const Grid gqp = make_grid_2d(g.axis(0), g.axis(1));
    ComplexField phi(gqp);
    for (std::size_t i = 0; i < phi.size(); ++i)
        phi[i] = std::sqrt(gauss(gqp.coord(i, 0), -1.0, 0.8) *
                           gauss(gqp.coord(i, 1), 0.5, 0.8));
    const ClassicalWavefunction ref =
        evolve_vanhove({normalized_l2(phi), 1.0}, Poly{}, 1.0, dt, steps);
    RealField ref_rho(gqp);
    for (std::size_t i = 0; i < ref_rho.size(); ++i) ref_rho[i] = std::norm(ref.phi[i]);
    CHECK(l1_diff(m.classical, ref_rho) < 1e-4);

    // quantum sector against closed-form spreading
    RealField packet(make_grid_1d(g.axis(2)));
    const double vT = spread_variance(s0, 1.0, 1.0, T);
    for (std::size_t i = 0; i < packet.size(); ++i)
        packet[i] = gauss(packet.grid.coord(i, 0), 0.0, std::sqrt(vT));
    CHECK(l1_diff(m.quantum, normalized(packet)) < 1e-4);

    CHECK(std::abs(sector_mutual_information(wT)) < 1e-6);
    CHECK(std::abs(sector_mutual_information(w0)) < 1e-6);
}

TEST_CASE("hilbert evolution satisfies the phase-space equations of motion") {
    const Grid& g = cube_grid();
    const InteractionPotential V = harmonic_coupling(0.25);
    const HybridWavefunction w0 = product_wave(g, -1.0, 0.8, 0.0, 0.8, 1.0, 0.7);

    const HybridMadelungResiduals r0 = madelung_residuals_hybrid(w0, V);
    CHECK(r0.continuity < 1e-3);
    CHECK(r0.action < 1e-3);

    const HybridWavefunction wT = evolve_hybrid_hilbert(w0, V, 0.005, 40);
    const HybridMadelungResiduals rT = madelung_residuals_hybrid(wT, V);
    CHECK(rT.continuity < 1e-3);
    CHECK(rT.action < 1e-3);

    // a wrong-sign transport term would leave an O(1) residual
    CHECK(rT.continuity < 2e-4);
}

TEST_CASE("hilbert harmonic coupling conserves energy and momentum") {
    // one full swing of the relative coordinate (half the relative period); the
    // box must hold the phase winding exp(i p^2 t / 2M hbar) below the p Nyquist
    const Grid g = make_grid_3d(make_axis("q", -8, 8, 64), make_axis("p", -8, 8, 64),
                                make_axis("x", -8, 8, 64));
    const InteractionPotential V = harmonic_coupling(1.0);
    const HybridWavefunction w0 = product_wave(g, -1.0, 0.6, 0.0, 0.6, 1.0, 0.7);
    const double e0 = total_energy_hybrid(w0, V);
    const double pi0 = total_momentum_hybrid(w0);
    const double T = 3.141592653589793 / 2.0;

    const int steps = 158;
    const HybridWavefunction w1 = evolve_hybrid_hilbert(w0, V, T / steps, steps);
    const double de1 = std::abs(total_energy_hybrid(w1, V) - e0);
    CHECK(de1 < 1e-5);
    CHECK(std::abs(total_momentum_hybrid(w1) - pi0) < 5e-6);
    CHECK(std::abs(l2_norm_sq(w1.psi) - 1.0) < 1e-8);

    // the relative coordinate has flipped sign by now
    CHECK(quantum_observable_hybrid(w1, QuantumOp::x) ==
          doctest::Approx(-1.0).epsilon(1e-3));

    // successive halvings contract the position error by the second-order factor
    const HybridWavefunction w2 = evolve_hybrid_hilbert(w0, V, T / (2 * steps), 2 * steps);
    const HybridWavefunction w4 = evolve_hybrid_hilbert(w0, V, T / (4 * steps), 4 * steps);
    const double e1 = std::abs(quantum_observable_hybrid(w1, QuantumOp::x) -
                               quantum_observable_hybrid(w2, QuantumOp::x));
    const double e2 = std::abs(quantum_observable_hybrid(w2, QuantumOp::x) -
                               quantum_observable_hybrid(w4, QuantumOp::x));
    CHECK(e1 < 1e-4);
    CHECK(e1 / e2 > 3.0);
    CHECK(e1 / e2 < 5.0);
    CHECK(std::abs(total_energy_hybrid(w2, V) - e0) < 0.5 * de1);
}

TEST_CASE("marginals reproduce factors and the entangled family variances") {
    const Grid& g = cube_grid();
    const HybridWavefunction w = product_wave(g, -1.0, 0.8, 0.5, 0.8, 0.2, 0.7);
    const SectorMarginals m = marginals(w);
    CHECK(integrate(m.classical) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(integrate(m.quantum) == doctest::Approx(1.0).epsilon(1e-8));

    // product state: marginals equal the factors pointwise
    RealField fact(make_grid_1d(g.axis(2)));
    for (std::size_t i = 0; i < fact.size(); ++i)
        fact[i] = gauss(fact.grid.coord(i, 0), 0.2, 0.7);
    fact = normalized(fact);
    double worst = 0.0;
    for (std::size_t i = 0; i < fact.size(); ++i)
        worst = std::max(worst, std::abs(m.quantum[i] - fact[i]));
    CHECK(worst < 1e-10);

    // quadrature oracle values for Var(x) on this exact grid
    const double oracle[4][2] = {{0.0, 0.5},
                                 {0.1, 0.501253132832},
                                 {0.2, 0.505050505051},
                                 {0.4, 0.520833333333}};
    for (const auto& [lam, vx] : oracle) {
        const RealField rho = entangled_gaussian_family(g, lam);
        const RealField rq = marginal(rho, {"x"});
        const double mean = field_mean(rq, 0);
        const double var = integrate(rq * coordinate_field(rq.grid, 0) *
                                     coordinate_field(rq.grid, 0)) -
                           mean * mean;
        CHECK(var == doctest::Approx(vx).epsilon(1e-9));
        for (double v : rq.values) CHECK(v >= -1e-12);
    }
}

TEST_CASE("observable routes agree") {
    const Grid& g = cube_grid();
    const HybridWavefunction w = product_wave(g, -1.0, 0.8, 0.5, 0.8, 0.3, 0.7, 0.4);

    CHECK(classical_observable_hybrid(w, Poly::constant(1.0)) ==
          doctest::Approx(1.0).epsilon(1e-10));

    // product state: the x expectation is the mean of the quantum factor alone
    const RealField rq = marginals(w).quantum;
    CHECK(quantum_observable_hybrid(w, QuantumOp::x) ==
          doctest::Approx(field_mean(rq, 0)).epsilon(1e-10));

    // kernel (double-integral) route against the sector route
    for (const QuantumOp op : {QuantumOp::x, QuantumOp::p}) {
        CHECK(std::abs(quantum_observable_kernel(w, op) -
                       quantum_observable_hybrid(w, op)) < 1e-10);
    }
    CHECK_THROWS_AS(quantum_observable_kernel(w, QuantumOp::xx), Error);
    CHECK(quantum_observable_hybrid(w, QuantumOp::p) == doctest::Approx(0.4).epsilon(1e-6));

    // configuration ensemble: same cross-checks through (P,S)
    const Grid g2 = make_grid_2d(make_axis("q", -6, 6, 96), make_axis("x", -6, 6, 96));
    const Poly S2 = Poly::monomial(0.8, {{Var::q1, 1}}) + Poly::monomial(0.3, {{Var::x, 1}});
    const HybridConfigEnsemble ens{blob_qx(g2, -0.5, 0.8, 0.3, 0.7), sample(S2, g2),
                                   1.0, 1.0, 1.0};
    CHECK(classical_observable_hybrid(ens, Poly::constant(1.0)) ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(quantum_observable_hybrid(ens, QuantumOp::p) ==
          doctest::Approx(0.3).epsilon(1e-8));
    for (const QuantumOp op : {QuantumOp::x, QuantumOp::p}) {
        CHECK(std::abs(quantum_observable_kernel(ens, op) -
                       quantum_observable_hybrid(ens, op)) < 1e-10);
    }

    // on a constraint-satisfying phase state the full form reduces to int rho F
    const LiftedState lift = lifted_state(g, 0.4);
    ComplexField psi(g);
    for (std::size_t i = 0; i < psi.size(); ++i)
        psi[i] = std::polar(std::sqrt(lift.rho[i]), lift.sigma[i]);
    const HybridWavefunction wl{normalized_l2(psi), 1.0, 1.0, 1.0};
    const RealField rho = map_field(lift.rho, [](double v) { return v; });
    for (const Poly& F : {Poly::variable(Var::p1),
                          Poly::variable(Var::q1) * Poly::variable(Var::p1)}) {
        const double reduced = integrate(rho * sample(F, g));
        CHECK(classical_observable_hybrid(wl, F) == doctest::Approx(reduced).epsilon(1e-6));
    }
}

TEST_CASE("bohm energies match closed forms and scale correctly") {
    const Grid g2 = make_grid_2d(make_axis("q", -6, 6, 96), make_axis("x", -6, 6, 96));
    const double hb = 1.3, m = 0.8, s = 0.7;

    const RealField P = blob_qx(g2, 0.0, 1.0, 0.3, s);
    CHECK(bohm_energy_ecs(P, m, hb) ==
          doctest::Approx(hb * hb / (8.0 * m * s * s)).epsilon(1e-9));

    // doubling the width quarters the energy (wider box so the fat tail clears)
    const Grid gw =
        make_grid_2d(make_axis("q", -10, 10, 128), make_axis("x", -10, 10, 128));
    const RealField P2 = blob_qx(gw, 0.0, 1.0, 0.3, 2.0 * s);
    CHECK(bohm_energy_ecs(P2, m, hb) ==
          doctest::Approx(hb * hb / (8.0 * m * 4.0 * s * s)).epsilon(5e-9));

    // constant in x: zero exactly
    RealField flat(g2);
    for (std::size_t i = 0; i < flat.size(); ++i)
        flat[i] = gauss(g2.coord(i, 0), 0.0, 1.0);
    flat = normalized(flat);
    CHECK(bohm_energy_ecs(flat, m, hb) == 0.0);

    // product phase-space density: Q^EPS equals Q^ECS of the marginal
    const Grid& g3 = cube_grid();
    RealField rho(g3);
    for (std::size_t i = 0; i < rho.size(); ++i)
        rho[i] = gauss(g3.coord(i, 0), -0.5, 0.9) * gauss(g3.coord(i, 1), 0.4, 0.8) *
                 gauss(g3.coord(i, 2), 0.0, s);
    rho = normalized(rho);
    CHECK(bohm_energy_eps(rho, m, hb) ==
          doctest::Approx(bohm_energy_ecs(marginal(rho, {"q", "x"}), m, hb))
              .epsilon(1e-9));
}

TEST_CASE("energy comparison separates the hybrid models on the entangled family") {
    const Grid& g = cube_grid();
    // quadrature oracle on this exact grid: Q^EPS, Q^ECS, difference
    const double oracle[4][4] = {{0.0, 0.25, 0.25, 0.0},
                                 {0.1, 0.25, 0.249375, 0.000625},
                                 {0.2, 0.25, 0.2475, 0.0025},
                                 {0.4, 0.25, 0.24, 0.01}};
    for (const auto& [lam, qeps, qecs, diff] : oracle) {
        const RealField rho = entangled_gaussian_family(g, lam);
        const BohmEnergyComparison cmp = compare_hybrid_energies(rho, 1.0, 1.0);
        CHECK(std::abs(cmp.phase_space - qeps) < 1e-6);
        CHECK(std::abs(cmp.config_space - qecs) < 1e-6);
        CHECK(std::abs(cmp.difference - diff) < 1e-6);
        CHECK(std::abs(cmp.cross) < 1e-10);
        CHECK(std::abs(cmp.identity_residual) < 1e-12);
        CHECK(std::abs(bohm_energy_eps(rho, 1.0, 1.0) - cmp.phase_space) < 1e-9);
        CHECK(std::abs(bohm_energy_ecs(marginal(rho, {"q", "x"}), 1.0, 1.0) -
                       cmp.config_space) < 1e-8);
    }
    // product state: the two models agree; entangled: they measurably differ
    CHECK(std::abs(compare_hybrid_energies(entangled_gaussian_family(g, 0.0), 1.0, 1.0)
                       .difference) < 1e-6);
    CHECK(compare_hybrid_energies(entangled_gaussian_family(g, 0.4), 1.0, 1.0)
              .difference > 1e-3);
}

TEST_CASE("action constraints hold on lifted states and survive evolution") {
    const Grid& g = cube_grid();
    const double width = 0.4;
    const LiftedState lift = lifted_state(g, width);
    const InteractionPotential V = harmonic_coupling(0.25);

    const HybridSigmaResiduals r0 =
        check_hybrid_sigma_constraints(lift.rho, lift.sigma, V, 1.0);
    CHECK(r0.r1 == doctest::Approx(width * width).epsilon(1e-4));
    CHECK(r0.r2 < 1e-30);  // sigma carries no p dependence; zero up to stencil rounding
    CHECK(r0.eta > 0.0);

    ComplexField psi(g);
    for (std::size_t i = 0; i < psi.size(); ++i)
        psi[i] = std::polar(std::sqrt(lift.rho[i]), lift.sigma[i]);
    const HybridWavefunction w0{normalized_l2(psi), 1.0, 1.0, 1.0};
    const HybridWavefunction wT = evolve_hybrid_hilbert(w0, V, 0.005, 40);
    const MadelungSplit split = madelung_split(wT.psi, wT.hbar);
    const HybridSigmaResiduals rT =
        check_hybrid_sigma_constraints(split.density, split.action, V, 1.0);
    CHECK(rT.r1 < 5.0 * r0.r1);
    CHECK(rT.r2 < 5.0 * r0.r1);
    CHECK(rT.eta < 5.0 * r0.eta);
}
