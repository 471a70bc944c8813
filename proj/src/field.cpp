#include "qcens/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "qcens/fft.hpp"

namespace qcens {

namespace {

// Kahan-compensated sum; deterministic and accurate enough for 2^24-point grids.
double ksum(const std::vector<double>& v) {
    double s = 0.0, c = 0.0;
    for (double x : v) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

template <class T>
void for_each_line(const Grid& g, int axis, T&& fn) {
    const int n = g.axis(axis).points;
    const std::size_t stride = g.stride(axis);
    const std::size_t block = stride * static_cast<std::size_t>(n);
    const std::size_t total = g.total_points();
    for (std::size_t base = 0; base < total; base += block)
        for (std::size_t off = 0; off < stride; ++off) fn(base + off, stride, n);
}

// Fornberg finite-difference weights for derivative order m at point z over
// stencil nodes x[0..nn-1]. Exact polynomial-interpolation weights.
std::vector<double> fornberg_weights(double z, const std::vector<double>& x, int m) {
    const int nn = static_cast<int>(x.size());
    std::vector<std::vector<double>> c(static_cast<std::size_t>(nn),
                                       std::vector<double>(static_cast<std::size_t>(m) + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i < nn; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[static_cast<std::size_t>(i)] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                        c1 *
                        (k * c[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(k) - 1] -
                         c5 * c[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(k)]) /
                        c2;
                c[static_cast<std::size_t>(i)][0] =
                    -c1 * c5 * c[static_cast<std::size_t>(i) - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
                    (c4 * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] -
                     k * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k) - 1]) /
                    c3;
            c[static_cast<std::size_t>(j)][0] =
                c4 * c[static_cast<std::size_t>(j)][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(static_cast<std::size_t>(nn));
    for (int i = 0; i < nn; ++i)
        w[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
    return w;
}

// Per-row stencils for an n-point line: window of `width` nodes, centered when
// possible, clamped at the ends. Returns (start index, weights/h^m) per row.
struct LineStencils {
    int width;
    std::vector<int> start;
    std::vector<std::vector<double>> weights;
};

LineStencils build_stencils(int n, double h, int width, int m) {
    LineStencils st;
    st.width = width;
    st.start.resize(static_cast<std::size_t>(n));
    st.weights.resize(static_cast<std::size_t>(n));
    const double hm = std::pow(h, m);
    for (int i = 0; i < n; ++i) {
        int s = i - width / 2;
        s = std::max(0, std::min(s, n - width));
        std::vector<double> xs(static_cast<std::size_t>(width));
        for (int j = 0; j < width; ++j) xs[static_cast<std::size_t>(j)] = double(s + j - i);
        auto w = fornberg_weights(0.0, xs, m);
        for (double& wi : w) wi /= hm;
        st.start[static_cast<std::size_t>(i)] = s;
        st.weights[static_cast<std::size_t>(i)] = std::move(w);
    }
    return st;
}

template <class T>
Field<T> fd_derivative(const Field<T>& f, int axis, int m) {
    const Axis& ax = f.grid.axis(axis);
    const int width = (m == 1) ? 5 : 6;
    if (ax.points < width) throw GridError("axis too short for stencil");
    const LineStencils st = build_stencils(ax.points, ax.spacing(), width, m);
    Field<T> out(f.grid);
    for_each_line(f.grid, axis, [&](std::size_t base, std::size_t stride, int n) {
        for (int i = 0; i < n; ++i) {
            T acc{};
            const auto& w = st.weights[static_cast<std::size_t>(i)];
            const int s = st.start[static_cast<std::size_t>(i)];
            for (int j = 0; j < width; ++j)
                acc += w[static_cast<std::size_t>(j)] *
                       f.values[base + static_cast<std::size_t>(s + j) * stride];
            out.values[base + static_cast<std::size_t>(i) * stride] = acc;
        }
    });
    return out;
}

ComplexField to_complex(const RealField& f) {
    ComplexField out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i];
    return out;
}

// Spectral derivative: multiply mode m by (i k_m)^order (Nyquist zeroed for
// odd orders).
ComplexField spectral_derivative(const ComplexField& f, int axis, int order) {
    ComplexField out = f;
    fft::transform_axis(out.values, out.grid, axis, true);
    const Axis& ax = f.grid.axis(axis);
    const std::vector<double> k =
        (order % 2 == 1) ? fft::derivative_wavenumbers(ax) : fft::wavenumbers(ax);
    const double inv_n = 1.0 / ax.points;
    for_each_line(out.grid, axis, [&](std::size_t base, std::size_t stride, int n) {
        for (int i = 0; i < n; ++i) {
            std::complex<double> mult = std::pow(std::complex<double>(0.0, k[static_cast<std::size_t>(i)]),
                                                 order);
            out.values[base + static_cast<std::size_t>(i) * stride] *= mult * inv_n;
        }
    });
    fft::transform_axis(out.values, out.grid, axis, false);
    return out;
}

}  // namespace

double integrate(const RealField& f) { return ksum(f.values) * f.grid.cell_volume(); }

std::complex<double> integrate(const ComplexField& f) {
    std::vector<double> re(f.size()), im(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        re[i] = f[i].real();
        im[i] = f[i].imag();
    }
    return {ksum(re) * f.grid.cell_volume(), ksum(im) * f.grid.cell_volume()};
}

std::complex<double> inner(const ComplexField& a, const ComplexField& b) {
    if (a.grid != b.grid) throw GridError("field grids differ");
    std::vector<double> re(a.size()), im(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::complex<double> v = std::conj(a[i]) * b[i];
        re[i] = v.real();
        im[i] = v.imag();
    }
    return {ksum(re) * a.grid.cell_volume(), ksum(im) * a.grid.cell_volume()};
}

RealField partial(const RealField& f, int axis) {
    require_finite(f, "partial input");
    if (f.grid.axis(axis).boundary == Boundary::clamped) return fd_derivative(f, axis, 1);
    ComplexField c = spectral_derivative(to_complex(f), axis, 1);
    RealField out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = c[i].real();
    return out;
}

ComplexField partial(const ComplexField& f, int axis) {
    require_finite(f, "partial input");
    if (f.grid.axis(axis).boundary == Boundary::clamped) return fd_derivative(f, axis, 1);
    return spectral_derivative(f, axis, 1);
}

RealField action_partial(const RealField& f, int axis) {
    require_finite(f, "action_partial input");
    return fd_derivative(f, axis, 1);
}

RealField second_partial(const RealField& f, int axis) {
    require_finite(f, "second_partial input");
    if (f.grid.axis(axis).boundary == Boundary::clamped) return fd_derivative(f, axis, 2);
    ComplexField c = spectral_derivative(to_complex(f), axis, 2);
    RealField out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = c[i].real();
    return out;
}

ComplexField second_partial(const ComplexField& f, int axis) {
    require_finite(f, "second_partial input");
    if (f.grid.axis(axis).boundary == Boundary::clamped) return fd_derivative(f, axis, 2);
    return spectral_derivative(f, axis, 2);
}

RealField coordinate_field(const Grid& g, int axis) {
    RealField out(g);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = g.coord(i, axis);
    return out;
}

void spectral_shift(ComplexField& f, int axis, const RealField& amount) {
    if (f.grid != amount.grid) throw GridError("field grids differ");
    if (f.grid.axis(axis).boundary != Boundary::periodic)
        throw GridError("spectral shift requires a periodic axis");
    require_finite(f, "spectral_shift input");
    fft::transform_axis(f.values, f.grid, axis, true);
    const std::vector<double> k = fft::wavenumbers(f.grid.axis(axis));
    const double inv_n = 1.0 / f.grid.axis(axis).points;
    const std::size_t stride = f.grid.stride(axis);
    const int n = f.grid.axis(axis).points;
    const std::size_t block = stride * static_cast<std::size_t>(n);
    for (std::size_t base = 0; base < f.size(); base += block)
        for (int i = 0; i < n; ++i)
            for (std::size_t off = 0; off < stride; ++off) {
                const std::size_t flat = base + static_cast<std::size_t>(i) * stride + off;
                // amount is constant along the axis, so indexing by flat is safe
                const double phase = -k[static_cast<std::size_t>(i)] * amount[flat];
                f[flat] *= std::polar(inv_n, phase);
            }
    fft::transform_axis(f.values, f.grid, axis, false);
}

RealField normalized(const RealField& f) {
    const double mass = integrate(f);
    if (!(mass > 0.0)) throw Error("cannot normalize field with non-positive mass");
    return (1.0 / mass) * f;
}

ComplexField normalized_l2(const ComplexField& f) {
    const double n2 = l2_norm_sq(f);
    if (!(n2 > 0.0)) throw Error("cannot normalize zero field");
    const double s = 1.0 / std::sqrt(n2);
    ComplexField out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = s * f[i];
    return out;
}

double max_abs(const RealField& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

double max_abs(const ComplexField& f) {
    double m = 0.0;
    for (const auto& v : f.values) m = std::max(m, std::abs(v));
    return m;
}

double l1_distance(const RealField& a, const RealField& b) {
    if (a.grid != b.grid) throw GridError("field grids differ");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::abs(a[i] - b[i]);
    return ksum(d) * a.grid.cell_volume();
}

double l2_norm_sq(const ComplexField& f) {
    std::vector<double> d(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) d[i] = std::norm(f[i]);
    return ksum(d) * f.grid.cell_volume();
}

RealField marginal(const RealField& f, const std::vector<std::string>& keep) {
    std::vector<int> keep_idx;
    std::vector<Axis> kept_axes;
    for (const std::string& name : keep) {
        const int i = f.grid.require_axis(name);
        keep_idx.push_back(i);
        kept_axes.push_back(f.grid.axis(i));
    }
    double weight = f.grid.cell_volume();
    for (const Axis& a : kept_axes) weight /= a.spacing();

    Grid sub(kept_axes);
    RealField out(sub, 0.0);
    for (std::size_t flat = 0; flat < f.size(); ++flat) {
        std::array<int, 3> idx = f.grid.unravel(flat);
        std::array<int, 3> sidx{0, 0, 0};
        for (std::size_t k = 0; k < keep_idx.size(); ++k)
            sidx[k] = idx[static_cast<std::size_t>(keep_idx[k])];
        out[sub.ravel(sidx)] += f[flat];
    }
    for (double& v : out.values) v *= weight;
    return out;
}

bool all_finite(const RealField& f) {
    for (double v : f.values)
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const ComplexField& f) {
    for (const auto& v : f.values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

void require_finite(const RealField& f, const char* what) {
    if (!all_finite(f)) throw Error(std::string(what) + ": non-finite values");
}

void require_finite(const ComplexField& f, const char* what) {
    if (!all_finite(f)) throw Error(std::string(what) + ": non-finite values");
}

}  // namespace qcens
