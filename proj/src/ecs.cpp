#include "qcens/ecs.hpp"

#include <cmath>

#include "qcens/errors.hpp"

namespace qcens {

namespace {

void require_q_grid(const Grid& g) {
    if (g.rank() != 1 || g.axis(0).name != "q")
        throw GridError("config ensemble lives on a 1-d q grid");
}

struct EcsRhs {
    RealField dP, dS;
};

// dS/dt = -(S_q)^2/2M - V ;  dP/dt = -(P S_q / M)_q
EcsRhs ecs_rhs(const RealField& P, const RealField& S, const RealField& Vq, double mass) {
    const RealField Sq = action_partial(S, 0);
    const RealField flux = map_field(P * Sq, [mass](double v) { return v / mass; });
    EcsRhs out;
    out.dP = map_field(partial(flux, 0), [](double v) { return -v; });
    out.dS = zip_fields(Sq, Vq, [mass](double sq, double v) {
        return -sq * sq / (2.0 * mass) - v;
    });
    return out;
}

}  // namespace

void check_config_ensemble(const ConfigEnsemble& ens) {
    require_q_grid(ens.P.grid);
    if (ens.P.grid != ens.S.grid) throw GridError("P and S grids differ");
    if (!(ens.mass > 0.0)) throw Error("mass must be positive");
    require_finite(ens.P, "P");
    require_finite(ens.S, "S");
    for (double v : ens.P.values)
        if (v < -1e-12) throw Error("P has a negative excursion beyond the floor");
    const double m = integrate(ens.P);
    if (std::abs(m - 1.0) > 1e-8) throw Error("P is not normalized");
}

ConfigEnsemble evolve_ecs(ConfigEnsemble ens, const Poly& V, double dt, int steps,
                          const EcsOptions& opts) {
    check_config_ensemble(ens);
    if (!valid_phase_fn(V, 1) || V.depends_on(Var::p1))
        throw Error("potential must be a polynomial in q only");
    if (!(dt > 0.0) || steps < 0) throw Error("bad dt/steps");

    const Grid& g = ens.P.grid;
    const double dq = g.axis(0).spacing();
    const RealField Vq = sample(V, g);
    const double mass0 = integrate(ens.P);

    for (int s = 0; s < steps; ++s) {
        {
            const RealField Sq = action_partial(ens.S, 0);
            const double cfl = dt * max_abs(Sq) / ens.mass * (M_PI / dq);
            if (cfl > opts.stability_limit)
                throw NumericalAbort("stability", cfl, s);
            const double curvature = max_abs(action_partial(Sq, 0));
            if (curvature > opts.caustic_threshold)
                throw NumericalAbort("caustic", curvature, s);
        }
        const EcsRhs k1 = ecs_rhs(ens.P, ens.S, Vq, ens.mass);
        const EcsRhs k2 = ecs_rhs(ens.P + (0.5 * dt) * k1.dP, ens.S + (0.5 * dt) * k1.dS,
                                  Vq, ens.mass);
        const EcsRhs k3 = ecs_rhs(ens.P + (0.5 * dt) * k2.dP, ens.S + (0.5 * dt) * k2.dS,
                                  Vq, ens.mass);
        const EcsRhs k4 = ecs_rhs(ens.P + dt * k3.dP, ens.S + dt * k3.dS, Vq, ens.mass);
        const double w = dt / 6.0;
        ens.P = ens.P + w * (k1.dP + 2.0 * k2.dP + 2.0 * k3.dP + k4.dP);
        ens.S = ens.S + w * (k1.dS + 2.0 * k2.dS + 2.0 * k3.dS + k4.dS);
        require_finite(ens.P, "P");
        require_finite(ens.S, "S");
        const double drift = std::abs(integrate(ens.P) - mass0);
        if (drift > opts.norm_drift_abort) throw NumericalAbort("norm-drift", drift, s);
    }
    return ens;
}

double observable_ecs(const ConfigEnsemble& ens, const Poly& F) {
    if (!valid_phase_fn(F, 1)) throw Error("observable must be a 1-d phase function");
    const RealField Sq = action_partial(ens.S, 0);
    const RealField f = sample_with(F, ens.P.grid, {{Var::p1, &Sq}});
    return integrate(ens.P * f);
}

EcsGradients functional_derivatives_ecs(const ConfigEnsemble& ens, const Poly& F) {
    if (!valid_phase_fn(F, 1)) throw Error("observable must be a 1-d phase function");
    const RealField Sq = action_partial(ens.S, 0);
    EcsGradients out;
    out.dP = sample_with(F, ens.P.grid, {{Var::p1, &Sq}});
    const RealField Fp = sample_with(F.diff(Var::p1), ens.P.grid, {{Var::p1, &Sq}});
    out.dS = map_field(partial(ens.P * Fp, 0), [](double v) { return -v; });
    return out;
}

double bracket_ecs(const Poly& F, const Poly& G, const ConfigEnsemble& ens) {
    const EcsGradients f = functional_derivatives_ecs(ens, F);
    const EcsGradients gg = functional_derivatives_ecs(ens, G);
    return integrate(f.dP * gg.dS - f.dS * gg.dP);
}

double ensemble_energy_ecs(const ConfigEnsemble& ens, const Poly& V) {
    const Poly H = Poly::monomial(1.0 / (2.0 * ens.mass), {{Var::p1, 2}}) + V;
    return observable_ecs(ens, H);
}

}  // namespace qcens
