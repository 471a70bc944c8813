#pragma once

#include "qcens/field.hpp"
#include "qcens/poly.hpp"

namespace qcens {

/// Coupled classical+quantum ensemble on configuration space: P and S live on
/// a (q,x) grid. The q sector follows classical Hamilton-Jacobi dynamics; only
/// the x sector carries a quantum potential.
struct HybridConfigEnsemble {
    RealField P;
    RealField S;
    double classical_mass = 1.0;
    double quantum_mass = 1.0;
    double hbar = 1.0;
};

/// Grid axes must be named (q,x); P >= -1e-12 with unit mass within 1e-8;
/// masses and hbar positive; everything finite.
void check_hybrid_config(const HybridConfigEnsemble& ens);

/// Hybrid wavefunction on a (q,p,x) grid: |psi|^2 is the joint density,
/// hbar*arg(psi) the joint action.
struct HybridWavefunction {
    ComplexField psi;
    double classical_mass = 1.0;
    double quantum_mass = 1.0;
    double hbar = 1.0;
};

void check_hybrid_wavefunction(const HybridWavefunction& w);

/// Coupling potential V(q - x). `shape` is a polynomial in a single variable
/// (written with Var::q1) standing for the separation s = q - x; it must be
/// even in s, which in one dimension is what survives of rotational
/// invariance. The potential applied to states is strength * shape(q - x).
struct InteractionPotential {
    Poly shape;
    double strength = 1.0;

    /// strength * shape(q - x), expanded as a polynomial in (q, x).
    Poly full() const;
};

void check_interaction(const InteractionPotential& V);

struct HybridEcsOptions {
    /// abort ("caustic") when the q-sector compensation phase per step
    /// exceeds this: the classical sector has focused onto a scale the grid
    /// cannot represent
    double caustic_phase_limit = 3.141592653589793;
    /// abort when |l2 norm^2 - 1| exceeds this at any step
    double norm_drift_abort = 1e-8;
    /// relative amplitude scale damping the compensation ratio
    /// (d^2 sqrt(P))/sqrt(P): cells far below it carry wrap ringing rather
    /// than curvature, so their ratio is rolled off smoothly instead of fed
    /// to the caustic detector
    double amplitude_floor = 1e-4;
};

/// Coupled evolution
///   dS/dt = -(d_q S)^2/2M - (d_x S)^2/2m + (hbar^2/2m)(d^2_x sqrt P)/sqrt P - V,
///   dP/dt = -d_q(P d_q S/M) - d_x(P d_x S/m).
/// Implemented in the wavefunction form: chi = sqrt(P) exp(iS/hbar) on (q,x)
/// is advanced by Strang split steps — half spectral kinetic in both sectors,
/// full phase exp(-i (V + B) dt/hbar), half kinetic — where the extra
/// potential B = +(hbar^2/2M)(d^2_q|chi|)/|chi| cancels the q-sector quantum
/// pressure so that sector stays on the classical Hamilton-Jacobi flow. P and
/// S are recovered by the unwrapping polar split; every factor has unit
/// modulus, so the norm is conserved to roundoff. Both axes must be periodic.
HybridConfigEnsemble evolve_hybrid_ecs(HybridConfigEnsemble ens,
                                       const InteractionPotential& V, double dt,
                                       int steps, const HybridEcsOptions& opts = {});

struct HybridHilbertOptions {
    double norm_drift_abort = 1e-8;
};

/// Strang splitting of i hbar dpsi/dt = [ (V - p^2/2M)
///   + i hbar (d_q V d_p - (p/M) d_q) - (hbar^2/2m) d^2_x ] psi:
/// a half spectral x-kinetic step wraps the classical advection step in (q,p)
/// parameterized by x (half multiplication phase, half q-shear by p dt/2M,
/// p-kick by -d_q V dt, half q-shear, half phase). All factors have unit
/// modulus; the norm is conserved to roundoff. All three axes must be periodic.
HybridWavefunction evolve_hybrid_hilbert(HybridWavefunction w,
                                         const InteractionPotential& V, double dt,
                                         int steps,
                                         const HybridHilbertOptions& opts = {});

/// Sector densities by marginalization.
struct SectorMarginals {
    RealField classical;  // P_C(q) or rho_C(q,p)
    RealField quantum;    // P_Q(x) or rho_Q(x)
};

SectorMarginals marginals(const HybridConfigEnsemble& ens);
SectorMarginals marginals(const HybridWavefunction& w);

/// O_F = int dq dx P F(q, d_q S) for a phase function F(q,p).
double classical_observable_hybrid(const HybridConfigEnsemble& ens, const Poly& F);

/// O_F = int dq dp dx rho [ (F - p dF/dp) - (dF/dq d_p sigma - dF/dp d_q sigma) ],
/// evaluated division-free from psi (rho d(sigma) = hbar Im(conj(psi) d(psi))).
/// Equals the reduced form int rho F whenever the sigma constraints hold.
double classical_observable_hybrid(const HybridWavefunction& w, const Poly& F);

/// Quantum-sector operators: position, momentum, their squares, and the
/// sector Hamiltonian p_x^2/2m (the coupling is a hybrid observable, not a
/// sector one).
enum class QuantumOp { x, p, xx, pp, energy };

/// Expectation through the wavefunction sector (O(N) route): moments of x,
/// hbar Im(conj(psi) d_x psi), hbar^2 |d_x psi|^2, and p_x^2/2m. For the
/// configuration ensemble the same values are read from (P,S):
/// <p_x> = int P d_x S,  <p_x^2> = int [ hbar^2 (d_x sqrt P)^2 + P (d_x S)^2 ].
double quantum_observable_hybrid(const HybridConfigEnsemble& ens, QuantumOp op);
double quantum_observable_hybrid(const HybridWavefunction& w, QuantumOp op);

/// The O(N^2) double-integral route int dx dx' sqrt(rho rho') exp(i(S-S')/hbar)
/// <x'|op|x> with the operator kernel materialized as a dense matrix on the x
/// axis (position: diagonal; momentum: the spectral derivative matrix).
/// Implemented for QuantumOp::x and QuantumOp::p as a cross-check of the
/// wavefunction-sector route; throws Error for other operators.
double quantum_observable_kernel(const HybridConfigEnsemble& ens, QuantumOp op);
double quantum_observable_kernel(const HybridWavefunction& w, QuantumOp op);

/// Q^ECS = (hbar^2/8m) int dq dx |d_x P|^2 / P for P on a (q,x) grid.
/// Cells with P < 1e-12 * max(P) are excluded (the ratio there is rounding
/// noise on empty cells).
double bohm_energy_ecs(const RealField& P, double quantum_mass, double hbar);

/// Q^EPS = (hbar^2/8m) int dq dp dx |d_x rho|^2 / rho for rho on a (q,p,x)
/// grid, with the same relative floor.
double bohm_energy_eps(const RealField& rho, double quantum_mass, double hbar);

/// Split of Q^EPS against the (q,x) marginal: with a = d_x log rho and
/// b = d_x log P (P the p-marginal), Q^EPS = int rho a^2, Q^ECS = int rho b^2,
/// and a = b + c splits the difference into the Fisher information of the
/// p-conditionals (int rho c^2) and a cross term (2 int rho b c) that
/// integrates to zero analytically. All four integrals share one mask and one
/// derivative, so the identity holds to roundoff.
struct BohmEnergyComparison {
    double phase_space = 0.0;        // Q^EPS
    double config_space = 0.0;       // Q^ECS of the p-marginal
    double conditional = 0.0;        // Fisher term of the conditionals
    double cross = 0.0;              // mixed term, ~0
    double difference = 0.0;         // phase_space - config_space
    double identity_residual = 0.0;  // difference - conditional - cross
};

/// Throws Error when |identity_residual| > 1e-5 (it is ~roundoff by
/// construction; a violation means the mask or marginal broke).
BohmEnergyComparison compare_hybrid_energies(const RealField& rho,
                                             double quantum_mass, double hbar);

/// rho ∝ exp(-q^2 - p^2 - x^2 - lambda p x), normalized on the given (q,p,x)
/// grid. The p-x coupling entangles the sectors: the x-conditionals depend on
/// p, so Q^EPS and Q^ECS separate at order lambda^2.
RealField entangled_gaussian_family(const Grid& g, double lambda);

/// Residuals of the action constraints on (q,p,x), plus the stationarity of
/// the trajectory-label part of sigma. The label equation, evaluated through
/// the equations of motion with the quantum-sector mass in the x-kinetic term,
/// loses its x-sector pieces (they cancel against the action equation) and
/// reduces to an advected combination of the two constraints.
struct HybridSigmaResiduals {
    double r1 = 0.0;   // int rho (d_q sigma - p)^2
    double r2 = 0.0;   // int rho (d_p sigma)^2
    double eta = 0.0;  // int rho [ (p/M)(d_q sigma - p) - d_q V d_p sigma ]^2
};

HybridSigmaResiduals check_hybrid_sigma_constraints(const RealField& rho,
                                                    const RealField& sigma,
                                                    const InteractionPotential& V,
                                                    double classical_mass);

/// rho-weighted RMS residuals of the two phase-space equations of motion
///   d_t rho + (p/M) d_q rho - d_q V d_p rho + (1/m) d_x(rho d_x sigma) = 0,
///   d_t sigma + (p/M) d_q sigma - d_q V d_p sigma - p^2/2M
///     + (d_x sigma)^2/2m - (hbar^2/2m)(d^2_x sqrt rho)/sqrt rho + V = 0,
/// evaluated on the polar split of psi with d_t read off the generator
/// (rho d_t sigma = hbar Im(conj(psi) d_t psi), d_t rho = 2 Re(conj(psi)
/// d_t psi) — no unwrapping enters). Restricted to rho >= 1e-3 * max(rho);
/// outside, the division by rho amplifies empty-cell noise.
struct HybridMadelungResiduals {
    double continuity = 0.0;
    double action = 0.0;
};

HybridMadelungResiduals madelung_residuals_hybrid(const HybridWavefunction& w,
                                                  const InteractionPotential& V);

/// Mutual information (nats) between the sectors, from the joint density and
/// its marginals on the grid; zero exactly for product states. Contributions
/// below 1e-12 * max of the joint are skipped.
double sector_mutual_information(const HybridConfigEnsemble& ens);
double sector_mutual_information(const HybridWavefunction& w);

/// <Pi_classical + Pi_quantum>. Both sector momenta are generators of
/// translation: -i hbar d_q (the classical momentum operator) plus
/// -i hbar d_x; for the configuration ensemble, int P (d_q S + d_x S).
/// Conserved under any coupling that depends on q - x only.
double total_momentum_hybrid(const HybridConfigEnsemble& ens);
double total_momentum_hybrid(const HybridWavefunction& w);

/// Energy expectation of the coupled model. Wavefunction: <O_H> with
/// H = p^2/2M + V plus the quantum kinetic term (hbar^2/2m)|d_x psi|^2.
/// Configuration ensemble: int P [ (d_q S)^2/2M + (d_x S)^2/2m + V ]
/// plus the quantum pressure (hbar^2/8m) int |d_x P|^2 / P.
double total_energy_hybrid(const HybridConfigEnsemble& ens,
                           const InteractionPotential& V);
double total_energy_hybrid(const HybridWavefunction& w,
                           const InteractionPotential& V);

}  // namespace qcens
