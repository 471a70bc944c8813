#include "qcens/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <numbers>

namespace qcens::fft {

namespace {

// One cached FFTW plan pair per line length. Plans are created with
// FFTW_ESTIMATE so plan selection is deterministic run to run.
struct LinePlans {
    fftw_complex* buf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    int n = 0;

    explicit LinePlans(int len) : n(len) {
        buf = fftw_alloc_complex(static_cast<std::size_t>(n));
        fwd = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    LinePlans(const LinePlans&) = delete;
    LinePlans& operator=(const LinePlans&) = delete;
    ~LinePlans() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        if (buf) fftw_free(buf);
    }
};

LinePlans& plans_for(int n) {
    static std::map<int, LinePlans> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.try_emplace(n, n).first;
    return it->second;
}

}  // namespace

void transform_axis(std::vector<std::complex<double>>& data, const Grid& grid, int axis,
                    bool forward) {
    const int n = grid.axis(axis).points;
    const std::size_t stride = grid.stride(axis);
    const std::size_t total = grid.total_points();
    const std::size_t block = stride * static_cast<std::size_t>(n);

    LinePlans& p = plans_for(n);
    auto* buf = reinterpret_cast<std::complex<double>*>(p.buf);

    // Lines are enumerated as (outer block) x (inner offset within a block).
    for (std::size_t base = 0; base < total; base += block) {
        for (std::size_t off = 0; off < stride; ++off) {
            std::complex<double>* line0 = data.data() + base + off;
            for (int i = 0; i < n; ++i) buf[i] = line0[static_cast<std::size_t>(i) * stride];
            fftw_execute(forward ? p.fwd : p.bwd);
            for (int i = 0; i < n; ++i) line0[static_cast<std::size_t>(i) * stride] = buf[i];
        }
    }
}

std::vector<double> wavenumbers(const Axis& axis) {
    const int n = axis.points;
    const double L = axis.max - axis.min;
    std::vector<double> k(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
        const int signed_m = m < (n + 1) / 2 ? m : m - n;
        k[static_cast<std::size_t>(m)] = 2.0 * std::numbers::pi * signed_m / L;
    }
    return k;
}

std::vector<double> derivative_wavenumbers(const Axis& axis) {
    std::vector<double> k = wavenumbers(axis);
    if (axis.points % 2 == 0) k[static_cast<std::size_t>(axis.points) / 2] = 0.0;
    return k;
}

}  // namespace qcens::fft
