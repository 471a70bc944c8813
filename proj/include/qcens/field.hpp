#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "qcens/grid.hpp"

namespace qcens {

/// A scalar field sampled on a Grid, row-major. Operations below treat fields
/// as values: they validate inputs and return new fields.
template <class T>
struct Field {
    Grid grid;
    std::vector<T> values;

    Field() = default;
    explicit Field(Grid g, T fill = T{})
        : grid(std::move(g)), values(grid.total_points(), fill) {}

    T& operator[](std::size_t i) { return values[i]; }
    const T& operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

using RealField = Field<double>;
using ComplexField = Field<std::complex<double>>;

/// Midpoint-rule quadrature over the whole grid (compensated summation).
double integrate(const RealField& f);
std::complex<double> integrate(const ComplexField& f);

/// L2 inner product <a|b> = integral of conj(a)*b.
std::complex<double> inner(const ComplexField& a, const ComplexField& b);

/// Partial derivative along `axis`, honoring the axis boundary mode:
/// spectral for periodic axes, 4th-order finite differences with one-sided
/// closures for clamped axes. Rejects non-finite input.
RealField partial(const RealField& f, int axis);
ComplexField partial(const ComplexField& f, int axis);

/// Partial derivative for action-type fields (S, sigma). These are generically
/// non-periodic (e.g. sigma = q*p), so this always uses the 4th-order
/// one-sided-closure stencils regardless of the axis boundary mode.
RealField action_partial(const RealField& f, int axis);

/// Second partial derivative along `axis` (spectral -k^2 on periodic axes,
/// 4th-order stencils on clamped axes).
RealField second_partial(const RealField& f, int axis);
ComplexField second_partial(const ComplexField& f, int axis);

/// Field of node coordinates along `axis`.
RealField coordinate_field(const Grid& g, int axis);

/// Rigid translation f(x) -> f(x - amount) along a periodic axis, as an exact
/// FFT phase shift. `amount` may vary over the other axes but must be constant
/// along `axis` (a shear). Unit-modulus multipliers: the L2 norm of every line
/// is conserved to roundoff.
void spectral_shift(ComplexField& f, int axis, const RealField& amount);

/// Scale so the field integrates to exactly 1; throws on non-positive mass.
RealField normalized(const RealField& f);
ComplexField normalized_l2(const ComplexField& f);

double max_abs(const RealField& f);
double max_abs(const ComplexField& f);
double l1_distance(const RealField& a, const RealField& b);
double l2_norm_sq(const ComplexField& f);

/// Integrate out every axis not listed in `keep` (by name); result lives on
/// the sub-grid of the kept axes in their original order.
RealField marginal(const RealField& f, const std::vector<std::string>& keep);

bool all_finite(const RealField& f);
bool all_finite(const ComplexField& f);
void require_finite(const RealField& f, const char* what);
void require_finite(const ComplexField& f, const char* what);

// -- small inline helpers -------------------------------------------------

template <class T, class F>
Field<T> map_field(const Field<T>& a, F&& fn) {
    Field<T> out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i]);
    return out;
}

template <class T, class F>
Field<T> zip_fields(const Field<T>& a, const Field<T>& b, F&& fn) {
    if (a.grid != b.grid) throw GridError("field grids differ");
    Field<T> out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i], b[i]);
    return out;
}

inline RealField operator*(const RealField& a, const RealField& b) {
    return zip_fields(a, b, [](double x, double y) { return x * y; });
}
inline RealField operator+(const RealField& a, const RealField& b) {
    return zip_fields(a, b, [](double x, double y) { return x + y; });
}
inline RealField operator-(const RealField& a, const RealField& b) {
    return zip_fields(a, b, [](double x, double y) { return x - y; });
}
inline RealField operator*(double s, const RealField& a) {
    return map_field(a, [s](double x) { return s * x; });
}

}  // namespace qcens
