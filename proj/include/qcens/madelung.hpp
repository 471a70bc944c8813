#pragma once

#include <cstdint>
#include <vector>

#include "qcens/field.hpp"

namespace qcens {

/// Result of the polar decomposition phi = sqrt(rho) exp(i sigma/hbar).
struct MadelungSplit {
    RealField density;
    RealField action;
    /// 1 where |phi|^2 >= 1e-12 (sigma meaningfully defined).
    std::vector<std::uint8_t> defined;
    /// 1 where rho >= 1e-6 * max(rho) (the reported support of the state).
    std::vector<std::uint8_t> support;
};

/// phi = sqrt(max(rho,0)) * exp(i sigma / hbar).
ComplexField madelung_join(const RealField& density, const RealField& action, double hbar);

/// Polar split with phase unwrapping. The phase is seeded at the density
/// maximum with the principal value hbar*arg(phi) and flood-filled outward in
/// decreasing-density order so 2*pi jumps never cross high-density ridges.
/// Below the defined threshold sigma is extended by nearest-neighbor value and
/// flagged undefined.
MadelungSplit madelung_split(const ComplexField& phi, double hbar);

/// d(sigma)/d(axis) computed directly as hbar*Im(d(phi)/phi) where the density
/// exceeds `floor_rel * max`, else 0. Avoids unwrapping entirely.
RealField phase_gradient(const ComplexField& phi, double hbar, int axis,
                         double floor_rel = 1e-12);

}  // namespace qcens
