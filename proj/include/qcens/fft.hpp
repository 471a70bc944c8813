#pragma once

#include <complex>
#include <vector>

#include "qcens/grid.hpp"

namespace qcens::fft {

/// In-place complex FFT along one grid axis, applied to every line of `data`
/// (row-major layout matching `grid`). `forward == false` is the unnormalized
/// inverse; callers divide by the axis length when round-tripping.
void transform_axis(std::vector<std::complex<double>>& data, const Grid& grid, int axis,
                    bool forward);

/// Physical wavenumbers of the FFT bins for `axis`: k_m = 2*pi*m/L with m in
/// [-n/2, n/2). Index order matches the FFT output layout.
std::vector<double> wavenumbers(const Axis& axis);

/// Same, but with the Nyquist bin (even n) zeroed; use for odd-order derivatives
/// so real fields stay real.
std::vector<double> derivative_wavenumbers(const Axis& axis);

}  // namespace qcens::fft
