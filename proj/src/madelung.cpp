#include "qcens/madelung.hpp"

#include <cmath>
#include <queue>

#include "qcens/errors.hpp"

namespace qcens {

ComplexField madelung_join(const RealField& density, const RealField& action, double hbar) {
    if (density.grid != action.grid) throw GridError("density/action grids differ");
    if (!(hbar > 0.0)) throw Error("hbar must be positive");
    ComplexField phi(density.grid);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double r = std::sqrt(std::max(density[i], 0.0));
        const double th = action[i] / hbar;
        phi[i] = {r * std::cos(th), r * std::sin(th)};
    }
    return phi;
}

namespace {

// Flat indices of the 2*rank axis neighbors; periodic axes wrap, clamped stop.
template <class Fn>
void for_neighbors(const Grid& g, std::size_t flat, Fn&& fn) {
    const auto idx = g.unravel(flat);
    for (int a = 0; a < g.rank(); ++a) {
        const int n = g.axis(a).points;
        const bool wrap = g.axis(a).boundary == Boundary::periodic;
        for (int d : {-1, +1}) {
            auto nb = idx;
            int v = nb[static_cast<std::size_t>(a)] + d;
            if (v < 0 || v >= n) {
                if (!wrap) continue;
                v = (v + n) % n;
            }
            nb[static_cast<std::size_t>(a)] = v;
            fn(g.ravel(nb));
        }
    }
}

}  // namespace

MadelungSplit madelung_split(const ComplexField& phi, double hbar) {
    if (!(hbar > 0.0)) throw Error("hbar must be positive");
    require_finite(phi, "madelung_split input");
    const Grid& g = phi.grid;
    const std::size_t n = phi.size();

    MadelungSplit out;
    out.density = RealField(g);
    out.action = RealField(g);
    out.defined.assign(n, 0);
    out.support.assign(n, 0);

    double rho_max = 0.0;
    std::size_t seed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        out.density[i] = std::norm(phi[i]);
        if (out.density[i] > rho_max) {
            rho_max = out.density[i];
            seed = i;
        }
    }
    if (rho_max <= 0.0) throw Error("madelung_split: zero field");
    constexpr double defined_abs = 1e-12;
    const double support_level = 1e-6 * rho_max;
    for (std::size_t i = 0; i < n; ++i)
        out.support[i] = out.density[i] >= support_level ? 1 : 0;

    // pass 1: unwrap over the defined region, highest density first
    std::priority_queue<std::pair<double, std::size_t>> heap;
    std::vector<std::uint8_t> visited(n, 0);
    out.action[seed] = hbar * std::arg(phi[seed]);  // phase convention: principal value at the peak
    visited[seed] = 1;
    out.defined[seed] = 1;
    heap.emplace(out.density[seed], seed);
    while (!heap.empty()) {
        const auto [rho, cur] = heap.top();
        heap.pop();
        for_neighbors(g, cur, [&](std::size_t nb) {
            if (visited[nb] || out.density[nb] < defined_abs) return;
            visited[nb] = 1;
            out.defined[nb] = 1;
            const double dphase = std::arg(phi[nb] * std::conj(phi[cur]));
            out.action[nb] = out.action[cur] + hbar * dphase;
            heap.emplace(out.density[nb], nb);
        });
    }

    // pass 2: extend sigma by nearest visited value where it is undefined
    std::queue<std::size_t> fifo;
    for (std::size_t i = 0; i < n; ++i)
        if (visited[i]) fifo.push(i);
    while (!fifo.empty()) {
        const std::size_t cur = fifo.front();
        fifo.pop();
        for_neighbors(g, cur, [&](std::size_t nb) {
            if (visited[nb]) return;
            visited[nb] = 1;
            out.action[nb] = out.action[cur];
            fifo.push(nb);
        });
    }
    return out;
}

RealField phase_gradient(const ComplexField& phi, double hbar, int axis, double floor_rel) {
    const ComplexField d = partial(phi, axis);
    double rho_max = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) rho_max = std::max(rho_max, std::norm(phi[i]));
    const double floor_abs = floor_rel * rho_max;
    RealField out(phi.grid);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double rho = std::norm(phi[i]);
        out[i] = rho >= floor_abs && rho > 0.0 ? hbar * std::imag(d[i] / phi[i]) : 0.0;
    }
    return out;
}

}  // namespace qcens
