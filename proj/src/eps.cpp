#include "qcens/eps.hpp"

#include <cmath>

#include "qcens/errors.hpp"

namespace qcens {

namespace {

void require_qp_grid(const Grid& g) {
    if (g.rank() != 2 || g.axis(0).name != "q" || g.axis(1).name != "p")
        throw GridError("phase ensemble lives on a (q,p) grid");
}

void check_potential(const Poly& V) {
    if (!valid_phase_fn(V, 1) || V.depends_on(Var::p1))
        throw Error("potential must be a polynomial in q only");
}

double advection_cfl(const Grid& g, const RealField& vq, const RealField& vp, double dt) {
    return dt * (max_abs(vq) * M_PI / g.axis(0).spacing() +
                 max_abs(vp) * M_PI / g.axis(1).spacing());
}

// -(p/M) d_q f + V'(q) d_p f, with the derivative rule chosen per field kind
template <bool kActionField>
RealField transport(const RealField& f, const RealField& vq, const RealField& vp) {
    const RealField fq = kActionField ? action_partial(f, 0) : partial(f, 0);
    const RealField fp = kActionField ? action_partial(f, 1) : partial(f, 1);
    RealField out(f.grid);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -vq[i] * fq[i] - vp[i] * fp[i];
    return out;
}

struct Velocities {
    RealField vq, vp;  // q-dot = p/M, p-dot = -V'(q)
};

Velocities velocity_fields(const Grid& g, const Poly& V, double mass) {
    Velocities v{RealField(g), RealField(g)};
    const RealField p = coordinate_field(g, 1);
    v.vq = map_field(p, [mass](double x) { return x / mass; });
    v.vp = map_field(sample(V.diff(Var::q1), g), [](double x) { return -x; });
    return v;
}

template <class Rhs>
RealField rk4_step(const RealField& f, double dt, Rhs&& rhs) {
    const RealField k1 = rhs(f);
    const RealField k2 = rhs(f + (0.5 * dt) * k1);
    const RealField k3 = rhs(f + (0.5 * dt) * k2);
    const RealField k4 = rhs(f + dt * k3);
    return f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

void check_phase_ensemble(const PhaseEnsemble& ens) {
    require_qp_grid(ens.rho.grid);
    if (ens.rho.grid != ens.sigma.grid) throw GridError("rho and sigma grids differ");
    if (!(ens.mass > 0.0)) throw Error("mass must be positive");
    require_finite(ens.rho, "rho");
    require_finite(ens.sigma, "sigma");
    for (double v : ens.rho.values)
        if (v < -1e-12) throw Error("rho has a negative excursion beyond the floor");
    if (std::abs(integrate(ens.rho) - 1.0) > 1e-8) throw Error("rho is not normalized");
}

PhaseEnsemble evolve_liouville(PhaseEnsemble ens, const Poly& V, double dt, int steps,
                               const EpsOptions& opts) {
    check_phase_ensemble(ens);
    check_potential(V);
    const Velocities v = velocity_fields(ens.rho.grid, V, ens.mass);
    const double cfl = advection_cfl(ens.rho.grid, v.vq, v.vp, dt);
    if (cfl > opts.stability_limit) throw NumericalAbort("stability", cfl, 0);
    const double mass0 = integrate(ens.rho);
    for (int s = 0; s < steps; ++s) {
        ens.rho = rk4_step(ens.rho, dt, [&](const RealField& f) {
            return transport<false>(f, v.vq, v.vp);
        });
        require_finite(ens.rho, "rho");
        const double peak = max_abs(ens.rho);
        for (double val : ens.rho.values)
            if (val < -opts.negative_floor * peak)
                throw NumericalAbort("negative-density", val, s);
        const double drift = std::abs(integrate(ens.rho) - mass0);
        if (drift > opts.norm_drift_abort) throw NumericalAbort("norm-drift", drift, s);
    }
    return ens;
}

RealField evolve_action(RealField sigma, const Poly& V, double mass, double dt,
                        int steps, const EpsOptions& opts) {
    require_qp_grid(sigma.grid);
    check_potential(V);
    require_finite(sigma, "sigma");
    const Velocities v = velocity_fields(sigma.grid, V, mass);
    const double cfl = advection_cfl(sigma.grid, v.vq, v.vp, dt);
    if (cfl > opts.stability_limit) throw NumericalAbort("stability", cfl, 0);
    // Lagrangian source p^2/2M - V along the characteristics
    const Poly source = Poly::monomial(1.0 / (2.0 * mass), {{Var::p1, 2}}) - V;
    const RealField src = sample(source, sigma.grid);
    for (int s = 0; s < steps; ++s) {
        sigma = rk4_step(sigma, dt, [&](const RealField& f) {
            return transport<true>(f, v.vq, v.vp) + src;
        });
        require_finite(sigma, "sigma");
    }
    return sigma;
}

PhaseEnsemble evolve_phase(PhaseEnsemble ens, const Poly& V, double dt, int steps,
                           const EpsOptions& opts) {
    ens = evolve_liouville(std::move(ens), V, dt, steps, opts);
    ens.sigma = evolve_action(std::move(ens.sigma), V, ens.mass, dt, steps, opts);
    return ens;
}

TrajectorySigmaSpec free_fall_sigma_spec(double mass, double g, double q0, double p0) {
    TrajectorySigmaSpec spec;
    spec.mass = mass;
    spec.q0 = q0;
    spec.p0 = p0;
    const Poly q = Poly::variable(Var::q1);
    const Poly p = Poly::variable(Var::p1);
    spec.eta = q * p + (p * p * p).scaled(1.0 / (6.0 * mass * mass * g));
    spec.tau = p.scaled(-1.0 / (mass * g));
    spec.H = (p * p).scaled(1.0 / (2.0 * mass)) + q.scaled(mass * g);
    return spec;
}

namespace {
Poly kinetic_part(const TrajectorySigmaSpec& spec) {
    return Poly::monomial(1.0 / (2.0 * spec.mass), {{Var::p1, 2}});
}
}  // namespace

void validate_sigma_spec(const TrajectorySigmaSpec& spec) {
    if (!(spec.mass > 0.0)) throw Error("sigma spec: mass must be positive");
    for (const Poly* f : {&spec.eta, &spec.tau, &spec.H})
        if (!valid_phase_fn(*f, 1)) throw Error("sigma spec: fields must be 1-d phase functions");
    const Poly one = Poly::constant(1.0);
    if (!(poisson_bracket(spec.tau, spec.H, 1) - one).is_zero())
        throw Error("sigma spec: {tau,H} != 1 (symbolic)");
    const Poly kin = kinetic_part(spec);
    const Poly V = spec.H - kin;
    if (!(poisson_bracket(spec.eta, spec.H, 1) - kin + V).is_zero())
        throw Error("sigma spec: {eta,H} != p^2/2M - V (symbolic)");
}

Poly sigma_trajectory(const TrajectorySigmaSpec& spec) {
    validate_sigma_spec(spec);
    const double tau0 =
        spec.tau.eval({spec.q0, 0, 0, spec.p0, 0, 0, 0, 0, 0, 0});
    const Poly bracket =
        spec.tau - Poly::constant(tau0) - Poly::variable(Var::t);
    return spec.eta + spec.H * bracket;
}

Poly sigma_lagrangian_residual(const TrajectorySigmaSpec& spec) {
    const Poly sigma = sigma_trajectory(spec);
    const Poly kin = kinetic_part(spec);
    const Poly V = spec.H - kin;
    // total derivative along the flow: d_t + {., H}
    const Poly total = sigma.diff(Var::t) + poisson_bracket(sigma, spec.H, 1);
    return total - kin + V;
}

PhaseEnsemble lift_from_config(const ConfigEnsemble& ens, const Grid& phase_grid,
                               double width) {
    check_config_ensemble(ens);
    require_qp_grid(phase_grid);
    if (phase_grid.axis(0).points != ens.P.grid.axis(0).points ||
        phase_grid.axis(0).min != ens.P.grid.axis(0).min ||
        phase_grid.axis(0).max != ens.P.grid.axis(0).max)
        throw GridError("phase grid q axis must match the config grid");
    const Axis& pax = phase_grid.axis(1);
    if (!(width >= pax.spacing()))
        throw Error("lift width is below the momentum grid resolution");

    const RealField Sq = action_partial(ens.S, 0);
    double lo = Sq[0], hi = Sq[0];
    for (std::size_t i = 0; i < Sq.size(); ++i) {
        lo = std::min(lo, Sq[i]);
        hi = std::max(hi, Sq[i]);
    }
    if (lo - 6.0 * width < pax.min || hi + 6.0 * width > pax.max)
        throw Error("momentum axis does not cover the lifted ensemble");

    PhaseEnsemble out{RealField(phase_grid), RealField(phase_grid), ens.mass};
    const double norm = 1.0 / (width * std::sqrt(2.0 * M_PI));
    for (std::size_t flat = 0; flat < out.rho.size(); ++flat) {
        const auto idx = phase_grid.unravel(flat);
        const std::size_t iq = static_cast<std::size_t>(idx[0]);
        const double p = pax.node(idx[1]);
        const double z = (p - Sq[iq]) / width;
        out.rho[flat] = ens.P[iq] * norm * std::exp(-0.5 * z * z);
        out.sigma[flat] = ens.S[iq];
    }
    out.rho = normalized(out.rho);
    return out;
}

SigmaConstraintResiduals check_sigma_constraints(const PhaseEnsemble& ens) {
    require_qp_grid(ens.rho.grid);
    const RealField sq = action_partial(ens.sigma, 0);
    const RealField sp = action_partial(ens.sigma, 1);
    const RealField p = coordinate_field(ens.rho.grid, 1);
    SigmaConstraintResiduals r;
    r.r1 = integrate(zip_fields(ens.rho, sq - p, [](double rho, double d) {
        return rho * d * d;
    }));
    r.r2 = integrate(zip_fields(ens.rho, sp, [](double rho, double d) {
        return rho * d * d;
    }));
    return r;
}

double observable_eps(const PhaseEnsemble& ens, const Poly& F) {
    const EpsGradients grad = functional_derivatives_eps(ens, F);
    return integrate(ens.rho * grad.dRho);
}

double observable_eps_reduced(const PhaseEnsemble& ens, const Poly& F) {
    if (!valid_phase_fn(F, 1)) throw Error("observable must be a 1-d phase function");
    return integrate(ens.rho * sample(F, ens.rho.grid));
}

EpsGradients functional_derivatives_eps(const PhaseEnsemble& ens, const Poly& F) {
    if (!valid_phase_fn(F, 1)) throw Error("observable must be a 1-d phase function");
    const Grid& g = ens.rho.grid;
    const Poly gamma = F - Poly::variable(Var::p1) * F.diff(Var::p1);
    const RealField gammaF = sample(gamma, g);
    const RealField Fq = sample(F.diff(Var::q1), g);
    const RealField Fp = sample(F.diff(Var::p1), g);
    const RealField sq = action_partial(ens.sigma, 0);
    const RealField sp = action_partial(ens.sigma, 1);
    EpsGradients out;
    out.dRho = gammaF - (Fq * sp - Fp * sq);
    out.dSigma = partial(ens.rho * Fq, 1) - partial(ens.rho * Fp, 0);
    return out;
}

double bracket_eps(const Poly& F, const Poly& G, const PhaseEnsemble& ens) {
    const Grid& g = ens.rho.grid;
    // the functional derivatives are integrated by parts assuming decay
    const double peak = max_abs(ens.rho);
    double edge = 0.0;
    const int nq = g.axis(0).points, np = g.axis(1).points;
    for (int i = 0; i < nq; ++i)
        for (int j : {0, np - 1})
            edge = std::max(edge, std::abs(ens.rho[g.ravel({i, j, 0})]));
    for (int j = 0; j < np; ++j)
        for (int i : {0, nq - 1})
            edge = std::max(edge, std::abs(ens.rho[g.ravel({i, j, 0})]));
    if (edge > 1e-8 * peak) throw Error("rho does not decay at the grid boundary");

    const EpsGradients f = functional_derivatives_eps(ens, F);
    const EpsGradients gg = functional_derivatives_eps(ens, G);
    return integrate(f.dRho * gg.dSigma - f.dSigma * gg.dRho);
}

}  // namespace qcens
