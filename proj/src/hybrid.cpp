#include "qcens/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "qcens/errors.hpp"
#include "qcens/fft.hpp"
#include "qcens/madelung.hpp"

namespace qcens {

namespace {

void require_qx_grid(const Grid& g) {
    if (g.rank() != 2 || g.axis(0).name != "q" || g.axis(1).name != "x")
        throw GridError("hybrid configuration ensemble lives on a (q,x) grid");
}

void require_qpx_grid(const Grid& g) {
    if (g.rank() != 3 || g.axis(0).name != "q" || g.axis(1).name != "p" ||
        g.axis(2).name != "x")
        throw GridError("hybrid wavefunction lives on a (q,p,x) grid");
}

void require_periodic(const Grid& g) {
    for (int a = 0; a < g.rank(); ++a)
        if (g.axis(a).boundary != Boundary::periodic)
            throw GridError("spectral evolution requires periodic axes");
}

void phase_multiply(ComplexField& phi, const RealField& angle) {
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] *= std::polar(1.0, angle[i]);
}

/// Exact dispersive factor exp(-i hbar k^2 tau / 2 mass) along one axis.
void kinetic_step(ComplexField& phi, int axis, double mass, double hbar, double tau) {
    fft::transform_axis(phi.values, phi.grid, axis, true);
    const std::vector<double> k = fft::wavenumbers(phi.grid.axis(axis));
    const int n = phi.grid.axis(axis).points;
    std::vector<std::complex<double>> fac(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double kk = k[static_cast<std::size_t>(i)];
        fac[static_cast<std::size_t>(i)] =
            std::polar(1.0 / n, -hbar * kk * kk * tau / (2.0 * mass));
    }
    const std::size_t stride = phi.grid.stride(axis);
    const std::size_t block = stride * static_cast<std::size_t>(n);
    for (std::size_t base = 0; base < phi.size(); base += block)
        for (int i = 0; i < n; ++i)
            for (std::size_t off = 0; off < stride; ++off)
                phi[base + static_cast<std::size_t>(i) * stride + off] *=
                    fac[static_cast<std::size_t>(i)];
    fft::transform_axis(phi.values, phi.grid, axis, false);
}

RealField density_of(const ComplexField& psi) {
    RealField rho(psi.grid);
    for (std::size_t i = 0; i < psi.size(); ++i) rho[i] = std::norm(psi[i]);
    return rho;
}

double max_value(const RealField& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, v);
    return m;
}

}  // namespace

void check_hybrid_config(const HybridConfigEnsemble& ens) {
    require_qx_grid(ens.P.grid);
    if (ens.P.grid != ens.S.grid) throw GridError("P and S grids differ");
    if (!(ens.classical_mass > 0.0) || !(ens.quantum_mass > 0.0))
        throw Error("masses must be positive");
    if (!(ens.hbar > 0.0)) throw Error("hbar must be positive");
    require_finite(ens.P, "P");
    require_finite(ens.S, "S");
    for (double v : ens.P.values)
        if (v < -1e-12) throw Error("P has a negative excursion beyond the floor");
    if (std::abs(integrate(ens.P) - 1.0) > 1e-8) throw Error("P is not normalized");
}

void check_hybrid_wavefunction(const HybridWavefunction& w) {
    require_qpx_grid(w.psi.grid);
    if (!(w.classical_mass > 0.0) || !(w.quantum_mass > 0.0))
        throw Error("masses must be positive");
    if (!(w.hbar > 0.0)) throw Error("hbar must be positive");
    require_finite(w.psi, "psi");
    if (std::abs(l2_norm_sq(w.psi) - 1.0) > 1e-8)
        throw Error("wavefunction is not normalized");
}

Poly InteractionPotential::full() const {
    const Poly s = Poly::variable(Var::q1) - Poly::variable(Var::x);
    return shape.subst(Var::q1, s).scaled(strength);
}

void check_interaction(const InteractionPotential& V) {
    if (!valid_phase_fn(V.shape, 1) || V.shape.depends_on(Var::p1))
        throw Error("interaction shape must be a polynomial in the separation only");
    if (!(V.shape.subst(Var::q1, -Poly::variable(Var::q1)) == V.shape))
        throw Error("interaction shape must be even in the separation");
    if (!std::isfinite(V.strength)) throw Error("interaction strength is not finite");
}

HybridConfigEnsemble evolve_hybrid_ecs(HybridConfigEnsemble ens,
                                       const InteractionPotential& V, double dt,
                                       int steps, const HybridEcsOptions& opts) {
    check_hybrid_config(ens);
    check_interaction(V);
    if (!(dt > 0.0) || steps < 0) throw Error("bad dt/steps");
    const Grid& g = ens.P.grid;
    require_periodic(g);

    const double M = ens.classical_mass;
    const double m = ens.quantum_mass;
    const double hb = ens.hbar;
    const RealField Vs = sample(V.full(), g);
    ComplexField chi = madelung_join(ens.P, ens.S, hb);

    RealField amp(g), angle(g);
    for (int s = 0; s < steps; ++s) {
        kinetic_step(chi, 0, M, hb, 0.5 * dt);
        kinetic_step(chi, 1, m, hb, 0.5 * dt);

        for (std::size_t i = 0; i < chi.size(); ++i) amp[i] = std::abs(chi[i]);
        // local stencils: a spectral second derivative would ring globally off
        // the wrap mismatch of exp(iS) and feed noise into the compensation
        const RealField curv = action_partial(action_partial(amp, 0), 0);
        const double floor = opts.amplitude_floor * max_value(amp);
        double worst = 0.0;
        for (std::size_t i = 0; i < chi.size(); ++i) {
            // damped ratio: near-empty cells carry ringing, not curvature
            const double comp = hb * hb / (2.0 * M) * curv[i] * amp[i] /
                                (amp[i] * amp[i] + floor * floor);
            worst = std::max(worst, std::abs(comp) * dt / hb);
            angle[i] = -(Vs[i] + comp) * dt / hb;
        }
        if (worst > opts.caustic_phase_limit)
            throw NumericalAbort("caustic", "q-sector compensation phase exceeded the representable range",
                                 worst, s);
        phase_multiply(chi, angle);

        kinetic_step(chi, 0, M, hb, 0.5 * dt);
        kinetic_step(chi, 1, m, hb, 0.5 * dt);

        const double drift = std::abs(l2_norm_sq(chi) - 1.0);
        if (drift > opts.norm_drift_abort)
            throw NumericalAbort("norm-drift", "hybrid ensemble norm drifted", drift, s);
    }

    const MadelungSplit split = madelung_split(chi, hb);
    ens.P = split.density;
    ens.S = split.action;
    return ens;
}

HybridWavefunction evolve_hybrid_hilbert(HybridWavefunction w,
                                         const InteractionPotential& V, double dt,
                                         int steps, const HybridHilbertOptions& opts) {
    check_hybrid_wavefunction(w);
    check_interaction(V);
    if (!(dt > 0.0) || steps < 0) throw Error("bad dt/steps");
    const Grid& g = w.psi.grid;
    require_periodic(g);

    const double M = w.classical_mass;
    const double m = w.quantum_mass;
    const double hb = w.hbar;
    const Poly Vqx = V.full();
    const Poly p = Poly::variable(Var::p1);
    const Poly gamma = Vqx - (p * p).scaled(1.0 / (2.0 * M));
    const RealField half_phase =
        map_field(sample(gamma, g), [&](double v) { return -v * dt / (2.0 * hb); });
    const RealField q_shift = map_field(coordinate_field(g, 1), [&](double pv) {
        return pv * dt / (2.0 * M);
    });
    const RealField p_kick =
        map_field(sample(Vqx.diff(Var::q1), g), [&](double vp) { return -vp * dt; });

    for (int s = 0; s < steps; ++s) {
        kinetic_step(w.psi, 2, m, hb, 0.5 * dt);
        phase_multiply(w.psi, half_phase);
        spectral_shift(w.psi, 0, q_shift);
        spectral_shift(w.psi, 1, p_kick);
        spectral_shift(w.psi, 0, q_shift);
        phase_multiply(w.psi, half_phase);
        kinetic_step(w.psi, 2, m, hb, 0.5 * dt);

        const double drift = std::abs(l2_norm_sq(w.psi) - 1.0);
        if (drift > opts.norm_drift_abort)
            throw NumericalAbort("norm-drift", "hybrid wavefunction norm drifted", drift,
                                 s);
    }
    return w;
}

SectorMarginals marginals(const HybridConfigEnsemble& ens) {
    check_hybrid_config(ens);
    return {marginal(ens.P, {"q"}), marginal(ens.P, {"x"})};
}

SectorMarginals marginals(const HybridWavefunction& w) {
    check_hybrid_wavefunction(w);
    const RealField rho = density_of(w.psi);
    return {marginal(rho, {"q", "p"}), marginal(rho, {"x"})};
}

double classical_observable_hybrid(const HybridConfigEnsemble& ens, const Poly& F) {
    check_hybrid_config(ens);
    if (!valid_phase_fn(F, 1)) throw Error("observable must be a phase function of (q,p)");
    const RealField Sq = action_partial(ens.S, 0);
    const RealField f = sample_with(F, ens.P.grid, {{Var::p1, &Sq}});
    return integrate(ens.P * f);
}

double classical_observable_hybrid(const HybridWavefunction& w, const Poly& F) {
    check_hybrid_wavefunction(w);
    if (!valid_phase_fn(F, 1)) throw Error("observable must be a phase function of (q,p)");
    const Grid& g = w.psi.grid;
    const Poly p = Poly::variable(Var::p1);
    const RealField gf = sample(F - p * F.diff(Var::p1), g);
    const RealField fq = sample(F.diff(Var::q1), g);
    const RealField fp = sample(F.diff(Var::p1), g);
    const ComplexField dq = partial(w.psi, 0);
    const ComplexField dp = partial(w.psi, 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < w.psi.size(); ++i) {
        const std::complex<double> c = std::conj(w.psi[i]);
        const double jq = w.hbar * std::imag(c * dq[i]);  // rho d_q sigma
        const double jp = w.hbar * std::imag(c * dp[i]);
        acc += std::norm(w.psi[i]) * gf[i] - fq[i] * jp + fp[i] * jq;
    }
    return acc * g.cell_volume();
}

double quantum_observable_hybrid(const HybridConfigEnsemble& ens, QuantumOp op) {
    check_hybrid_config(ens);
    const Grid& g = ens.P.grid;
    const RealField x = coordinate_field(g, 1);
    switch (op) {
        case QuantumOp::x: return integrate(ens.P * x);
        case QuantumOp::xx: return integrate(ens.P * x * x);
        case QuantumOp::p: return integrate(ens.P * action_partial(ens.S, 1));
        case QuantumOp::pp:
        case QuantumOp::energy: {
            RealField amp(g);
            for (std::size_t i = 0; i < amp.size(); ++i)
                amp[i] = std::sqrt(std::max(ens.P[i], 0.0));
            const RealField da = partial(amp, 1);
            const RealField Sx = action_partial(ens.S, 1);
            const double pp = integrate(map_field(da, [&](double v) {
                                  return ens.hbar * ens.hbar * v * v;
                              })) +
                              integrate(ens.P * Sx * Sx);
            return op == QuantumOp::pp ? pp : pp / (2.0 * ens.quantum_mass);
        }
    }
    throw Error("unknown quantum operator");
}

double quantum_observable_hybrid(const HybridWavefunction& w, QuantumOp op) {
    check_hybrid_wavefunction(w);
    const Grid& g = w.psi.grid;
    const double dv = g.cell_volume();
    switch (op) {
        case QuantumOp::x:
        case QuantumOp::xx: {
            const RealField x = coordinate_field(g, 2);
            double acc = 0.0;
            for (std::size_t i = 0; i < w.psi.size(); ++i)
                acc += std::norm(w.psi[i]) * (op == QuantumOp::x ? x[i] : x[i] * x[i]);
            return acc * dv;
        }
        case QuantumOp::p: {
            const ComplexField dx = partial(w.psi, 2);
            double acc = 0.0;
            for (std::size_t i = 0; i < w.psi.size(); ++i)
                acc += std::imag(std::conj(w.psi[i]) * dx[i]);
            return w.hbar * acc * dv;
        }
        case QuantumOp::pp:
        case QuantumOp::energy: {
            const ComplexField dx = partial(w.psi, 2);
            double acc = 0.0;
            for (std::size_t i = 0; i < w.psi.size(); ++i) acc += std::norm(dx[i]);
            const double pp = w.hbar * w.hbar * acc * dv;
            return op == QuantumOp::pp ? pp : pp / (2.0 * w.quantum_mass);
        }
    }
    throw Error("unknown quantum operator");
}

namespace {

/// <psi| K |psi> with K a dense kernel on the x axis, summed over all
/// transverse lines: the literal double-integral route.
double kernel_expectation(const ComplexField& psi, int xaxis, QuantumOp op,
                          double hbar) {
    if (op != QuantumOp::x && op != QuantumOp::p)
        throw Error("kernel route implemented for position and momentum only");
    const Axis& ax = psi.grid.axis(xaxis);
    const int n = ax.points;
    const std::size_t un = static_cast<std::size_t>(n);
    std::vector<std::complex<double>> K(un * un, 0.0);
    if (op == QuantumOp::x) {
        for (int i = 0; i < n; ++i) K[static_cast<std::size_t>(i) * un + static_cast<std::size_t>(i)] = ax.node(i);
    } else {
        // column j of the derivative matrix = derivative of the j-th unit line
        const Grid line_grid({ax});
        for (int j = 0; j < n; ++j) {
            ComplexField e(line_grid);
            e[static_cast<std::size_t>(j)] = 1.0;
            const ComplexField de = partial(e, 0);
            for (int i = 0; i < n; ++i)
                K[static_cast<std::size_t>(i) * un + static_cast<std::size_t>(j)] =
                    std::complex<double>(0.0, -hbar) * de[static_cast<std::size_t>(i)];
        }
    }

    const std::size_t stride = psi.grid.stride(xaxis);
    const std::size_t block = stride * un;
    std::vector<std::complex<double>> line(un), kline(un);
    std::complex<double> acc = 0.0;
    for (std::size_t base = 0; base < psi.size(); base += block)
        for (std::size_t off = 0; off < stride; ++off) {
            for (std::size_t i = 0; i < un; ++i) line[i] = psi[base + i * stride + off];
            for (std::size_t i = 0; i < un; ++i) {
                std::complex<double> s = 0.0;
                for (std::size_t j = 0; j < un; ++j) s += K[i * un + j] * line[j];
                kline[i] = s;
            }
            for (std::size_t i = 0; i < un; ++i) acc += std::conj(line[i]) * kline[i];
        }
    return (acc * psi.grid.cell_volume()).real();
}

}  // namespace

double quantum_observable_kernel(const HybridConfigEnsemble& ens, QuantumOp op) {
    check_hybrid_config(ens);
    const ComplexField psi = madelung_join(ens.P, ens.S, ens.hbar);
    return kernel_expectation(psi, 1, op, ens.hbar);
}

double quantum_observable_kernel(const HybridWavefunction& w, QuantumOp op) {
    check_hybrid_wavefunction(w);
    return kernel_expectation(w.psi, 2, op, w.hbar);
}

namespace {

double fisher_along_x(const RealField& f, double quantum_mass, double hbar) {
    if (!(quantum_mass > 0.0) || !(hbar > 0.0))
        throw Error("mass and hbar must be positive");
    require_finite(f, "density");
    const int xaxis = f.grid.require_axis("x");
    const double fmax = max_value(f);
    if (!(fmax > 0.0)) throw Error("density is identically zero");
    for (double v : f.values)
        if (v < -1e-12 * fmax) throw Error("density has a negative excursion");
    const double floor = 1e-12 * fmax;
    const RealField df = partial(f, xaxis);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] >= floor) acc += df[i] * df[i] / f[i];
    return acc * f.grid.cell_volume() * hbar * hbar / (8.0 * quantum_mass);
}

}  // namespace

double bohm_energy_ecs(const RealField& P, double quantum_mass, double hbar) {
    require_qx_grid(P.grid);
    return fisher_along_x(P, quantum_mass, hbar);
}

double bohm_energy_eps(const RealField& rho, double quantum_mass, double hbar) {
    require_qpx_grid(rho.grid);
    return fisher_along_x(rho, quantum_mass, hbar);
}

BohmEnergyComparison compare_hybrid_energies(const RealField& rho, double quantum_mass,
                                             double hbar) {
    require_qpx_grid(rho.grid);
    if (!(quantum_mass > 0.0) || !(hbar > 0.0))
        throw Error("mass and hbar must be positive");
    require_finite(rho, "rho");
    const RealField P = marginal(rho, {"q", "x"});
    const RealField drho = partial(rho, 2);
    const RealField dP = partial(P, 1);
    const double rfloor = 1e-12 * max_value(rho);
    const double pfloor = 1e-12 * max_value(P);

    const int nq = rho.grid.axis(0).points;
    const int np = rho.grid.axis(1).points;
    const int nx = rho.grid.axis(2).points;
    double eps = 0.0, ecs = 0.0, cond = 0.0, cross = 0.0;
    for (int iq = 0; iq < nq; ++iq)
        for (int ip = 0; ip < np; ++ip)
            for (int ix = 0; ix < nx; ++ix) {
                const std::size_t i =
                    (static_cast<std::size_t>(iq) * static_cast<std::size_t>(np) +
                     static_cast<std::size_t>(ip)) *
                        static_cast<std::size_t>(nx) +
                    static_cast<std::size_t>(ix);
                const std::size_t j =
                    static_cast<std::size_t>(iq) * static_cast<std::size_t>(nx) +
                    static_cast<std::size_t>(ix);
                if (rho[i] < rfloor || P[j] < pfloor) continue;
                const double a = drho[i] / rho[i];
                const double b = dP[j] / P[j];
                const double c = a - b;
                eps += rho[i] * a * a;
                ecs += rho[i] * b * b;
                cond += rho[i] * c * c;
                cross += 2.0 * rho[i] * b * c;
            }
    const double scale = rho.grid.cell_volume() * hbar * hbar / (8.0 * quantum_mass);
    BohmEnergyComparison out;
    out.phase_space = eps * scale;
    out.config_space = ecs * scale;
    out.conditional = cond * scale;
    out.cross = cross * scale;
    out.difference = out.phase_space - out.config_space;
    out.identity_residual = out.difference - out.conditional - out.cross;
    if (std::abs(out.identity_residual) > 1e-5)
        throw Error("energy split identity violated");
    return out;
}

RealField entangled_gaussian_family(const Grid& g, double lambda) {
    require_qpx_grid(g);
    if (!std::isfinite(lambda)) throw Error("lambda is not finite");
    RealField rho(g);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double q = g.coord(i, 0);
        const double p = g.coord(i, 1);
        const double x = g.coord(i, 2);
        rho[i] = std::exp(-q * q - p * p - x * x - lambda * p * x);
    }
    return normalized(rho);
}

HybridSigmaResiduals check_hybrid_sigma_constraints(const RealField& rho,
                                                    const RealField& sigma,
                                                    const InteractionPotential& V,
                                                    double classical_mass) {
    require_qpx_grid(rho.grid);
    if (rho.grid != sigma.grid) throw GridError("rho and sigma grids differ");
    if (!(classical_mass > 0.0)) throw Error("mass must be positive");
    require_finite(rho, "rho");
    require_finite(sigma, "sigma");
    check_interaction(V);

    const RealField sq = action_partial(sigma, 0);
    const RealField sp = action_partial(sigma, 1);
    const RealField Vq = sample(V.full().diff(Var::q1), rho.grid);
    const RealField pc = coordinate_field(rho.grid, 1);
    HybridSigmaResiduals out;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double e1 = sq[i] - pc[i];
        const double e3 = pc[i] / classical_mass * e1 - Vq[i] * sp[i];
        out.r1 += rho[i] * e1 * e1;
        out.r2 += rho[i] * sp[i] * sp[i];
        out.eta += rho[i] * e3 * e3;
    }
    const double dv = rho.grid.cell_volume();
    out.r1 *= dv;
    out.r2 *= dv;
    out.eta *= dv;
    return out;
}

HybridMadelungResiduals madelung_residuals_hybrid(const HybridWavefunction& w,
                                                  const InteractionPotential& V) {
    check_hybrid_wavefunction(w);
    check_interaction(V);
    const Grid& g = w.psi.grid;
    const double M = w.classical_mass;
    const double m = w.quantum_mass;
    const double hb = w.hbar;
    const Poly Vqx = V.full();
    const Poly p = Poly::variable(Var::p1);
    const RealField gam = sample(Vqx - (p * p).scaled(1.0 / (2.0 * M)), g);
    const RealField Vq = sample(Vqx.diff(Var::q1), g);
    const RealField pc = coordinate_field(g, 1);

    const ComplexField dq = partial(w.psi, 0);
    const ComplexField dp = partial(w.psi, 1);
    const ComplexField dx = partial(w.psi, 2);
    const ComplexField d2x = second_partial(w.psi, 2);

    const RealField rho = density_of(w.psi);
    RealField amp(g), jx(g);
    for (std::size_t i = 0; i < g.total_points(); ++i) {
        amp[i] = std::abs(w.psi[i]);
        jx[i] = hb * std::imag(std::conj(w.psi[i]) * dx[i]);  // rho d_x sigma
    }
    const RealField drq = partial(rho, 0);
    const RealField drp = partial(rho, 1);
    const RealField djx = partial(jx, 2);
    const RealField d2a = second_partial(amp, 2);

    const double mask = 1e-3 * max_value(rho);
    double num1 = 0.0, num2 = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.total_points(); ++i) {
        if (rho[i] < mask) continue;
        const std::complex<double> c = std::conj(w.psi[i]);
        // d_t psi = H psi / (i hbar), H = gamma + i hbar (V_q d_p - (p/M) d_q)
        //           - (hbar^2/2m) d^2_x
        const std::complex<double> Hpsi =
            gam[i] * w.psi[i] +
            std::complex<double>(0.0, hb) * (Vq[i] * dp[i] - pc[i] / M * dq[i]) -
            hb * hb / (2.0 * m) * d2x[i];
        const std::complex<double> dtpsi = Hpsi / std::complex<double>(0.0, hb);
        const double dtrho = 2.0 * std::real(c * dtpsi);
        const double rho_dtsigma = hb * std::imag(c * dtpsi);
        const double jq = hb * std::imag(c * dq[i]);
        const double jp = hb * std::imag(c * dp[i]);

        const double e1 =
            (dtrho + pc[i] / M * drq[i] - Vq[i] * drp[i] + djx[i] / m) / rho[i];
        const double e2 = (rho_dtsigma + pc[i] / M * jq - Vq[i] * jp + rho[i] * gam[i] +
                           jx[i] * jx[i] / rho[i] / (2.0 * m) -
                           hb * hb / (2.0 * m) * amp[i] * d2a[i]) /
                          rho[i];
        num1 += rho[i] * e1 * e1;
        num2 += rho[i] * e2 * e2;
        den += rho[i];
    }
    if (!(den > 0.0)) throw Error("density mask is empty");
    return {std::sqrt(num1 / den), std::sqrt(num2 / den)};
}

namespace {

double mutual_information_2(const RealField& joint, const RealField& ma,
                            const RealField& mb) {
    const double floor = 1e-12 * max_value(joint);
    const int na = joint.grid.axis(0).points;
    const int nb = joint.grid.axis(1).points;
    double mi = 0.0;
    for (int ia = 0; ia < na; ++ia)
        for (int ib = 0; ib < nb; ++ib) {
            const double v = joint[static_cast<std::size_t>(ia) *
                                       static_cast<std::size_t>(nb) +
                                   static_cast<std::size_t>(ib)];
            if (v < floor) continue;
            const double prod = ma[static_cast<std::size_t>(ia)] *
                                mb[static_cast<std::size_t>(ib)];
            if (!(prod > 0.0)) continue;
            mi += v * std::log(v / prod);
        }
    return mi * joint.grid.cell_volume();
}

}  // namespace

double sector_mutual_information(const HybridConfigEnsemble& ens) {
    check_hybrid_config(ens);
    return mutual_information_2(ens.P, marginal(ens.P, {"q"}), marginal(ens.P, {"x"}));
}

double sector_mutual_information(const HybridWavefunction& w) {
    check_hybrid_wavefunction(w);
    const RealField rho = density_of(w.psi);
    const RealField rc = marginal(rho, {"q", "p"});
    const RealField rq = marginal(rho, {"x"});
    const double floor = 1e-12 * max_value(rho);
    const int nq = rho.grid.axis(0).points;
    const int np = rho.grid.axis(1).points;
    const int nx = rho.grid.axis(2).points;
    double mi = 0.0;
    for (int iq = 0; iq < nq; ++iq)
        for (int ip = 0; ip < np; ++ip)
            for (int ix = 0; ix < nx; ++ix) {
                const std::size_t i =
                    (static_cast<std::size_t>(iq) * static_cast<std::size_t>(np) +
                     static_cast<std::size_t>(ip)) *
                        static_cast<std::size_t>(nx) +
                    static_cast<std::size_t>(ix);
                const double v = rho[i];
                if (v < floor) continue;
                const double prod =
                    rc[static_cast<std::size_t>(iq) * static_cast<std::size_t>(np) +
                       static_cast<std::size_t>(ip)] *
                    rq[static_cast<std::size_t>(ix)];
                if (!(prod > 0.0)) continue;
                mi += v * std::log(v / prod);
            }
    return mi * rho.grid.cell_volume();
}

double total_momentum_hybrid(const HybridConfigEnsemble& ens) {
    check_hybrid_config(ens);
    return integrate(ens.P * action_partial(ens.S, 0)) +
           integrate(ens.P * action_partial(ens.S, 1));
}

double total_momentum_hybrid(const HybridWavefunction& w) {
    check_hybrid_wavefunction(w);
    const ComplexField dq = partial(w.psi, 0);
    const ComplexField dx = partial(w.psi, 2);
    double acc = 0.0;
    for (std::size_t i = 0; i < w.psi.size(); ++i)
        acc += std::imag(std::conj(w.psi[i]) * (dq[i] + dx[i]));
    return w.hbar * acc * w.psi.grid.cell_volume();
}

double total_energy_hybrid(const HybridConfigEnsemble& ens,
                           const InteractionPotential& V) {
    check_hybrid_config(ens);
    check_interaction(V);
    const Grid& g = ens.P.grid;
    const RealField Sq = action_partial(ens.S, 0);
    const RealField Sx = action_partial(ens.S, 1);
    const RealField Vs = sample(V.full(), g);
    RealField amp(g);
    for (std::size_t i = 0; i < amp.size(); ++i)
        amp[i] = std::sqrt(std::max(ens.P[i], 0.0));
    const RealField da = partial(amp, 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.total_points(); ++i)
        acc += ens.P[i] * (Sq[i] * Sq[i] / (2.0 * ens.classical_mass) +
                           Sx[i] * Sx[i] / (2.0 * ens.quantum_mass) + Vs[i]) +
               ens.hbar * ens.hbar / (2.0 * ens.quantum_mass) * da[i] * da[i];
    return acc * g.cell_volume();
}

double total_energy_hybrid(const HybridWavefunction& w, const InteractionPotential& V) {
    check_hybrid_wavefunction(w);
    check_interaction(V);
    const Grid& g = w.psi.grid;
    const double M = w.classical_mass;
    const double m = w.quantum_mass;
    const double hb = w.hbar;
    const Poly Vqx = V.full();
    const Poly p = Poly::variable(Var::p1);
    const RealField gam = sample(Vqx - (p * p).scaled(1.0 / (2.0 * M)), g);
    const RealField Vq = sample(Vqx.diff(Var::q1), g);
    const RealField pc = coordinate_field(g, 1);
    const ComplexField dq = partial(w.psi, 0);
    const ComplexField dp = partial(w.psi, 1);
    const ComplexField dx = partial(w.psi, 2);
    std::complex<double> acc = 0.0;
    double kin = 0.0;
    for (std::size_t i = 0; i < w.psi.size(); ++i) {
        const std::complex<double> c = std::conj(w.psi[i]);
        acc += c * (gam[i] * w.psi[i] +
                    std::complex<double>(0.0, hb) * (Vq[i] * dp[i] - pc[i] / M * dq[i]));
        kin += std::norm(dx[i]);
    }
    return (acc.real() + hb * hb / (2.0 * m) * kin) * g.cell_volume();
}

}  // namespace qcens
