#include "qcens/vanhove.hpp"

#include <cmath>

#include "qcens/errors.hpp"

namespace qcens {

namespace {

void require_qp_grid(const Grid& g) {
    if (g.rank() != 2 || g.axis(0).name != "q" || g.axis(1).name != "p")
        throw GridError("classical wavefunction lives on a (q,p) grid");
}

void phase_multiply(ComplexField& phi, const RealField& angle) {
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] *= std::polar(1.0, angle[i]);
}

}  // namespace

void check_classical_wavefunction(const ClassicalWavefunction& w) {
    require_qp_grid(w.phi.grid);
    if (!(w.hbar > 0.0)) throw Error("hbar must be positive");
    require_finite(w.phi, "phi");
    if (std::abs(l2_norm_sq(w.phi) - 1.0) > 1e-8)
        throw Error("wavefunction is not normalized");
}

ClassicalWavefunction evolve_vanhove(ClassicalWavefunction w, const Poly& V, double mass,
                                     double dt, int steps, const VanHoveOptions& opts) {
    check_classical_wavefunction(w);
    if (!valid_phase_fn(V, 1) || V.depends_on(Var::p1))
        throw Error("potential must be a polynomial in q only");
    if (!(mass > 0.0)) throw Error("mass must be positive");
    const Grid& g = w.phi.grid;
    if (g.axis(0).boundary != Boundary::periodic ||
        g.axis(1).boundary != Boundary::periodic)
        throw GridError("spectral evolution requires periodic axes");

    // Gamma_H = H - p dH/dp = V - p^2/2M
    const Poly p = Poly::variable(Var::p1);
    const Poly gamma = V - (p * p).scaled(1.0 / (2.0 * mass));
    const RealField half_phase =
        map_field(sample(gamma, g), [&](double v) { return -v * dt / (2.0 * w.hbar); });
    const RealField q_shift = map_field(coordinate_field(g, 1), [&](double pv) {
        return pv * dt / (2.0 * mass);
    });
    const RealField p_kick =
        map_field(sample(V.diff(Var::q1), g), [&](double vp) { return -vp * dt; });

    for (int s = 0; s < steps; ++s) {
        phase_multiply(w.phi, half_phase);
        spectral_shift(w.phi, 0, q_shift);
        spectral_shift(w.phi, 1, p_kick);
        spectral_shift(w.phi, 0, q_shift);
        phase_multiply(w.phi, half_phase);
        const double drift = std::abs(l2_norm_sq(w.phi) - 1.0);
        if (drift > opts.norm_drift_abort)
            throw NumericalAbort("norm-drift", "wavefunction norm drifted", drift, s);
    }
    return w;
}

UncertaintyDemo no_uncertainty_demo(const Grid& qp_grid, double width_q, double width_p,
                                    double hbar) {
    require_qp_grid(qp_grid);
    if (!(width_q >= qp_grid.axis(0).spacing()) || !(width_p >= qp_grid.axis(1).spacing()))
        throw Error("demo widths are below the grid resolution");
    ComplexField phi(qp_grid);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double zq = qp_grid.coord(i, 0) / width_q;
        const double zp = qp_grid.coord(i, 1) / width_p;
        phi[i] = std::exp(-0.25 * (zq * zq + zp * zp));
    }
    phi = normalized_l2(phi);
    RealField rho(qp_grid);
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::norm(phi[i]);
    const RealField q = coordinate_field(qp_grid, 0);
    const RealField pp = coordinate_field(qp_grid, 1);
    const double mq = integrate(rho * q);
    const double mp = integrate(rho * pp);
    UncertaintyDemo out;
    out.var_q = integrate(rho * q * q) - mq * mq;
    out.var_p = integrate(rho * pp * pp) - mp * mp;
    out.product = out.var_q * out.var_p;
    out.quantum_bound = hbar * hbar / 4.0;
    return out;
}

CrossBracketCheck cross_bracket_check(const Poly& F, const Poly& G,
                                      const ClassicalWavefunction& w) {
    check_classical_wavefunction(w);
    const MadelungSplit split = madelung_split(w.phi, w.hbar);
    double undefined_mass = 0.0;
    for (std::size_t i = 0; i < split.density.size(); ++i)
        if (!split.defined[i]) undefined_mass += split.density[i];
    undefined_mass *= w.phi.grid.cell_volume();
    if (undefined_mass > 0.01) throw Error("sigma undefined on over 1% of the density");

    CrossBracketCheck out;
    const PhaseEnsemble ens{split.density, split.action, 1.0};
    out.lhs = bracket_eps(F, G, ens);
    const FirstOrderOperator comm =
        commute(vanhove_of(F, 1, w.hbar), vanhove_of(G, 1, w.hbar));
    const std::complex<double> val = expectation(comm, w.phi);
    out.rhs = (val / std::complex<double>(0.0, w.hbar)).real();
    return out;
}

}  // namespace qcens
