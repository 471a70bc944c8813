#pragma once

#include <string>
#include <vector>

#include "qcens/ecs.hpp"
#include "qcens/field.hpp"
#include "qcens/poly.hpp"

namespace qcens {

/// Complete solution S(q, alpha) of the Hamilton-Jacobi equation: one free
/// parameter alpha (carried by Var::p0) so that p = dS/dq sweeps out a leaf
/// per alpha value. May depend on Var::t; decompose() freezes t first.
/// Usable families keep d2S/(dq dalpha) bounded away from zero, which makes
/// the leaf momentum monotone in alpha at every q.
struct CompleteHJSolution {
    Poly action;
};

/// S = alpha q. Solves the free Hamilton-Jacobi equation and is invertible
/// everywhere; alpha is literally the momentum label.
CompleteHJSolution momentum_label_family();

/// S = (alpha - M g t) q - alpha^2 t/2M + alpha g t^2/2 - M g^2 t^3/6,
/// the complete integral for V = M g q (zero Hamilton-Jacobi residual).
CompleteHJSolution free_fall_family(double mass, double g);

/// A phase-space density rewritten as a weighted family of configuration
/// ensembles: rho(q,p) = sum_j dalpha w_j P_j(q) delta(p - dS_j/dq(q)).
/// Weights are a density over alpha; members with zero weight carry empty
/// fields (a conditional density is undefined where w vanishes).
struct MixtureDecomposition {
    Axis alpha_axis;
    std::vector<double> weights;
    std::vector<ConfigEnsemble> members;
    Poly family;  // S(q, alpha) with t already frozen
    double time = 0.0;
};

/// Sizes consistent, weights finite and >= 0 with quadrature sum 1 within
/// 1e-8, every positive-weight member a valid ensemble on the shared q grid.
void check_mixture(const MixtureDecomposition& mix);

/// Split rho along the leaves p = dS/dq(q, alpha):
///   w(alpha)   = integral dq |d2S/dqdalpha| rho(q, dS/dq),
///   P(q|alpha) = |d2S/dqdalpha| rho(q, dS/dq) / w(alpha).
/// rho is read off its p-axis by cubic interpolation (zero outside the box,
/// negative overshoot clipped). Throws when the family loses invertibility
/// on the window or the alpha grid cannot reach the momentum support of rho.
MixtureDecomposition decompose(const RealField& rho, const CompleteHJSolution& hj,
                               const Axis& alpha_axis, double mass, double time = 0.0);

/// Rebuild a phase-space density on (member q-axis) x (alpha axis as p): each
/// member contributes dalpha w_j P_j(q) N(p; dS_j/dq(q), width), a normalized
/// Gaussian standing in for the delta ridge. The leaf momentum comes from the
/// member's current gridded action, so evolved mixtures recompose the same
/// way as fresh ones. width must resolve the p grid (>= its spacing).
///
/// decompose drops labels below 1e-14 of the peak weight: a conditional
/// density there would be rounding noise scaled up by a denormal division.
RealField recompose(const MixtureDecomposition& mix, double width);

/// Advance every positive-weight member by the configuration-space flow under
/// V. Weights never change: each label rides its own member.
MixtureDecomposition evolve_mixture(MixtureDecomposition mix, const Poly& V, double dt,
                                    int steps, const EcsOptions& opts = {});

/// Archive layout: <dir>/index.json carries the alpha grid, weights, time and
/// family descriptor plus the member file list; each member file holds one
/// alpha value, its weight, and density/action snapshots.
void write_mixture_archive(const std::string& dir, const MixtureDecomposition& mix);
MixtureDecomposition read_mixture_archive(const std::string& dir);

}  // namespace qcens
