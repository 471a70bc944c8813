#pragma once

#include <array>
#include <string>
#include <vector>

#include "qcens/ecs.hpp"
#include "qcens/eps.hpp"
#include "qcens/poly.hpp"

namespace qcens {

/// The ten Galilei generators as 3-d phase functions at a fixed time:
///   H = |p|^2/2M,  Pi_i = p_i,  L_i = eps_ijk q_j p_k,  G_i = M q_i - t p_i.
struct GalileiGenerators {
    double mass = 1.0;
    double time = 0.0;
    Poly H;
    std::array<Poly, 3> Pi, L, G;
};

GalileiGenerators galilei_phase(double mass, double time);

/// One bracket relation (or explicit-form identity), checked in one
/// representation. `residual` is the largest mismatched coefficient for
/// symbolic checks and the absolute numeric error for grid checks.
struct RelationCheck {
    std::string representation;  // phase | vanhove | ecs | eps
    std::string symbols;
    std::string expected;
    std::string got;
    double residual = 0.0;
    bool pass = false;
};

/// All 45 pairwise Poisson brackets against the algebra table, zero tolerance.
std::vector<RelationCheck> check_galilei_symbolic(const GalileiGenerators& gen);

/// The same 45 relations as operator commutators, [O_A, O_B] == i hbar O_rhs
/// exactly; the ten explicit operator forms; and the grid expectation
/// <(1/i hbar)[G, Pi]> = M on a Gaussian test state (tolerance 1e-8).
std::vector<RelationCheck> check_galilei_vanhove(double hbar, double time,
                                                 double mass = 1.5);

/// Functional brackets of the 1-d subalgebra {H, Pi, G} on a test ensemble:
/// {H,Pi} = 0, {G,Pi} = M, {G,H} = value of Pi on the ensemble.
std::vector<RelationCheck> check_galilei_functional(const ConfigEnsemble& ens,
                                                    double time, double tol);
std::vector<RelationCheck> check_galilei_functional(const PhaseEnsemble& ens,
                                                    double time, double tol);

bool all_pass(const std::vector<RelationCheck>& checks);

/// JSON array with one record per relation.
std::string relations_to_json(const std::vector<RelationCheck>& checks);

}  // namespace qcens
