#pragma once

#include "qcens/field.hpp"
#include "qcens/poly.hpp"

namespace qcens {

/// Ensemble on configuration space: probability density P(q) and action S(q).
/// Dynamics: Hamilton-Jacobi for S, continuity for P. Only derivatives of S
/// are physical (S is defined up to an additive constant).
struct ConfigEnsemble {
    RealField P;
    RealField S;
    double mass = 1.0;
};

struct EcsOptions {
    /// abort when the advection CFL number dt*max|dS/dq|/M * pi/dq exceeds this
    double stability_limit = 2.8;
    /// abort when ||d2S/dq2||_inf exceeds this (caustic forming)
    double caustic_threshold = 1e3;
    /// abort when |integral P - initial| exceeds this
    double norm_drift_abort = 1e-6;
};

/// P >= -1e-12 everywhere, integral 1 within 1e-8, everything finite.
void check_config_ensemble(const ConfigEnsemble& ens);

/// RK4 method-of-lines on the coupled system
///   dS/dt = -(dS/dq)^2/2M - V,   dP/dt = -d/dq(P dS/dq / M).
/// V is a polynomial in q only.
ConfigEnsemble evolve_ecs(ConfigEnsemble ens, const Poly& V, double dt, int steps,
                          const EcsOptions& opts = {});

/// O_F = integral dq P(q) F(q, dS/dq).
double observable_ecs(const ConfigEnsemble& ens, const Poly& F);

/// Functional derivatives of O_F:
///   dO/dP = F(q, dS/dq),   dO/dS = -d/dq [ P dF/dp(q, dS/dq) ].
struct EcsGradients {
    RealField dP;
    RealField dS;
};
EcsGradients functional_derivatives_ecs(const ConfigEnsemble& ens, const Poly& F);

/// Functional bracket {O_F, O_G} = integral (dF/dP dG/dS - dF/dS dG/dP).
/// Matches observable_ecs(ens, {F,G}) — the algebra isomorphism.
double bracket_ecs(const Poly& F, const Poly& G, const ConfigEnsemble& ens);

/// Ensemble Hamiltonian quadrature: integral P [ (dS/dq)^2/2M + V ].
double ensemble_energy_ecs(const ConfigEnsemble& ens, const Poly& V);

}  // namespace qcens
