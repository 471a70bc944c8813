#pragma once

#include "qcens/eps.hpp"
#include "qcens/field.hpp"
#include "qcens/madelung.hpp"
#include "qcens/operators.hpp"
#include "qcens/poly.hpp"

namespace qcens {

/// Phase-space wavefunction |phi|^2 = rho, arg phi = sigma/hbar.
struct ClassicalWavefunction {
    ComplexField phi;
    double hbar = 1.0;
};

void check_classical_wavefunction(const ClassicalWavefunction& w);

struct VanHoveOptions {
    /// abort when |norm^2 - 1| exceeds this at any step
    double norm_drift_abort = 1e-8;
};

/// Strang splitting of i hbar d(phi)/dt = O_H phi with H = p^2/2M + V(q):
///   half multiplication phase exp(-i (V - p^2/2M) dt / 2 hbar),
///   exact advection along the classical flow as three spectral shears
///   (half q-shift by p dt/2M, full p-kick by -V' dt, half q-shift),
///   half multiplication phase.
/// Every factor has unit modulus, so the norm is conserved to roundoff.
/// Both grid axes must be periodic.
ClassicalWavefunction evolve_vanhove(ClassicalWavefunction w, const Poly& V, double mass,
                                     double dt, int steps,
                                     const VanHoveOptions& opts = {});

/// Product of narrow Gaussians in q and p: admissible states localize both
/// variances at once — there is no lower bound tied to hbar.
struct UncertaintyDemo {
    double var_q = 0.0;
    double var_p = 0.0;
    double product = 0.0;      // var_q * var_p
    double quantum_bound = 0.0;  // hbar^2 / 4, for contrast
};
UncertaintyDemo no_uncertainty_demo(const Grid& qp_grid, double width_q, double width_p,
                                    double hbar);

/// Two routes to the same bracket value:
///   lhs = the functional bracket on the polar split of phi,
///   rhs = <phi| [O_F,O_G] |phi> / (i hbar).
struct CrossBracketCheck {
    double lhs = 0.0;
    double rhs = 0.0;
};
CrossBracketCheck cross_bracket_check(const Poly& F, const Poly& G,
                                      const ClassicalWavefunction& w);

}  // namespace qcens
