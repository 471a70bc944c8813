#pragma once

#include "qcens/ecs.hpp"
#include "qcens/field.hpp"
#include "qcens/poly.hpp"

namespace qcens {

/// Ensemble on phase space: density rho(q,p) and action sigma(q,p). The two
/// evolution equations share characteristics but are uncoupled.
struct PhaseEnsemble {
    RealField rho;
    RealField sigma;
    double mass = 1.0;
};

struct EpsOptions {
    double stability_limit = 2.8;
    /// abort when min(rho) < -negative_floor * max(rho)
    double negative_floor = 1e-6;
    double norm_drift_abort = 1e-6;
};

void check_phase_ensemble(const PhaseEnsemble& ens);

/// d rho/dt = -(p/M) d_q rho + V'(q) d_p rho   (RK4, mode-aware derivatives)
PhaseEnsemble evolve_liouville(PhaseEnsemble ens, const Poly& V, double dt, int steps,
                               const EpsOptions& opts = {});

/// d sigma/dt = -(p/M) d_q sigma + V'(q) d_p sigma + p^2/2M - V
/// The one-sided derivative closures admit rounding-seeded modes that grow
/// like exp(|v| t / dx) at inflow edges; they stay confined to a boundary
/// layer of width |v| t, so density-weighted quantities are unaffected.
RealField evolve_action(RealField sigma, const Poly& V, double mass, double dt,
                        int steps, const EpsOptions& opts = {});

/// Co-evolve both fields in one loop (the equations stay uncoupled).
PhaseEnsemble evolve_phase(PhaseEnsemble ens, const Poly& V, double dt, int steps,
                           const EpsOptions& opts = {});

/// Closed-form action data built from constants of motion:
///   sigma = eta + H * (tau - tau(q0,p0) - t),
/// valid when {tau,H} = 1 and {eta,H} = p^2/2M - V hold exactly.
struct TrajectorySigmaSpec {
    Poly eta;
    Poly tau;
    Poly H;
    double mass = 1.0;
    double q0 = 0.0;
    double p0 = 0.0;
};

/// eta = qp + p^3/(6 M^2 g), tau = -p/(Mg), H = p^2/2M + Mgq.
TrajectorySigmaSpec free_fall_sigma_spec(double mass, double g, double q0, double p0);

/// Symbolic invariants, checked with zero tolerance:
///   {tau,H} - 1 == 0   and   {eta,H} - p^2/2M + V == 0  with V = H - p^2/2M.
/// Throws on failure.
void validate_sigma_spec(const TrajectorySigmaSpec& spec);

/// The closed-form sigma as a polynomial in (q, p, t) with the initial point
/// substituted numerically.
Poly sigma_trajectory(const TrajectorySigmaSpec& spec);

/// (d_t + {., H}) sigma - (p^2/2M - V): identically zero for a valid spec;
/// returned for the zero-tolerance check.
Poly sigma_lagrangian_residual(const TrajectorySigmaSpec& spec);

/// rho(q,p) = P(q) * Gaussian(p; dS/dq(q), width), sigma(q,p) = S(q).
/// The phase grid's q axis must equal the config grid's axis; the p axis must
/// cover the momentum range dS/dq +- 6 width; width must resolve (>= dp).
PhaseEnsemble lift_from_config(const ConfigEnsemble& ens, const Grid& phase_grid,
                               double width);

/// Residuals of the action constraints:
///   r1 = int rho (d_q sigma - p)^2,   r2 = int rho (d_p sigma)^2.
struct SigmaConstraintResiduals {
    double r1 = 0.0;
    double r2 = 0.0;
};
SigmaConstraintResiduals check_sigma_constraints(const PhaseEnsemble& ens);

/// O_F = int rho [ (F - p dF/dp) - {F, sigma} ]  (exact F-derivatives, grid
/// sigma-derivatives).
double observable_eps(const PhaseEnsemble& ens, const Poly& F);

/// O'_F = int rho F: the reduced form, equal to O_F when the constraints hold.
double observable_eps_reduced(const PhaseEnsemble& ens, const Poly& F);

/// dO/d(rho) = (F - p dF/dp) - {F,sigma};  dO/d(sigma) = d_p(rho F_q) - d_q(rho F_p).
struct EpsGradients {
    RealField dRho;
    RealField dSigma;
};
EpsGradients functional_derivatives_eps(const PhaseEnsemble& ens, const Poly& F);

/// Functional bracket int (dF/dRho dG/dSigma - dF/dSigma dG/dRho).
/// Requires rho to decay at the grid boundary.
double bracket_eps(const Poly& F, const Poly& G, const PhaseEnsemble& ens);

}  // namespace qcens
