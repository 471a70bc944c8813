#include "qcens/bridge.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <utility>

#include "json.hpp"
#include "qcens/io.hpp"

namespace qcens {

namespace {

constexpr std::size_t idx(Var v) { return static_cast<std::size_t>(v); }

/// Cubic Lagrange read of one sampled line at an off-node position. The
/// 4-point window slides to stay inside the array near the edges; positions
/// outside the axis box read as zero.
double cubic_read(const double* line, int n, const Axis& ax, double pos) {
    if (pos < ax.min || pos > ax.max) return 0.0;
    const double u = (pos - ax.min) / ax.spacing() - 0.5;
    int i0 = static_cast<int>(std::floor(u)) - 1;
    i0 = std::clamp(i0, 0, n - 4);
    const double s = u - i0;
    const double c0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    const double c1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    const double c2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    const double c3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    return c0 * line[i0] + c1 * line[i0 + 1] + c2 * line[i0 + 2] + c3 * line[i0 + 3];
}

std::string member_file_name(std::size_t j) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "member_%04zu.json", j);
    return buf;
}

}  // namespace

CompleteHJSolution momentum_label_family() {
    return {Poly::monomial(1.0, {{Var::q1, 1}, {Var::p0, 1}})};
}

CompleteHJSolution free_fall_family(double mass, double g) {
    if (!(mass > 0.0)) throw Error("mass must be positive");
    Poly s = Poly::monomial(1.0, {{Var::q1, 1}, {Var::p0, 1}});
    s = s + Poly::monomial(-mass * g, {{Var::q1, 1}, {Var::t, 1}});
    s = s + Poly::monomial(-0.5 / mass, {{Var::p0, 2}, {Var::t, 1}});
    s = s + Poly::monomial(0.5 * g, {{Var::p0, 1}, {Var::t, 2}});
    s = s + Poly::monomial(-mass * g * g / 6.0, {{Var::t, 3}});
    return {s};
}

void check_mixture(const MixtureDecomposition& mix) {
    const auto n = static_cast<std::size_t>(mix.alpha_axis.points);
    if (n == 0 || !(mix.alpha_axis.spacing() > 0.0))
        throw GridError("alpha axis is empty or inverted");
    if (mix.weights.size() != n || mix.members.size() != n)
        throw Error("mixture sizes disagree with the alpha axis");
    double total = 0.0;
    for (const double w : mix.weights) {
        if (!std::isfinite(w) || w < 0.0) throw Error("mixture weight is negative or not finite");
        total += w;
    }
    total *= mix.alpha_axis.spacing();
    if (std::abs(total - 1.0) > 1e-8) throw Error("mixture weights are not normalized");
    const Grid* qgrid = nullptr;
    double mass = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!(mix.weights[j] > 0.0)) continue;
        check_config_ensemble(mix.members[j]);
        if (!qgrid) {
            qgrid = &mix.members[j].P.grid;
            mass = mix.members[j].mass;
        } else if (*qgrid != mix.members[j].P.grid) {
            throw GridError("mixture members live on different q grids");
        } else if (mix.members[j].mass != mass) {
            throw Error("mixture members disagree on mass");
        }
    }
    if (!qgrid) throw Error("mixture has no positive-weight member");
}

MixtureDecomposition decompose(const RealField& rho, const CompleteHJSolution& hj,
                               const Axis& alpha_axis, double mass, double time) {
    if (rho.grid.rank() != 2 || rho.grid.axis(0).name != "q" || rho.grid.axis(1).name != "p")
        throw GridError("decompose expects a density on a (q,p) grid");
    require_finite(rho, "rho");
    for (const double v : rho.values)
        if (v < -1e-12) throw Error("rho has a negative excursion beyond the floor");
    if (std::abs(integrate(rho) - 1.0) > 1e-8) throw Error("rho is not normalized");
    if (!(mass > 0.0)) throw Error("mass must be positive");
    for (const Var v : {Var::q2, Var::q3, Var::p1, Var::p2, Var::p3, Var::x, Var::q0})
        if (hj.action.depends_on(v))
            throw Error("complete solution may depend only on q, alpha, and t");
    if (alpha_axis.points <= 0 || !(alpha_axis.spacing() > 0.0))
        throw GridError("alpha axis is empty or inverted");

    const Axis& qax = rho.grid.axis(0);
    const Axis& pax = rho.grid.axis(1);
    if (pax.points < 4) throw GridError("momentum axis too coarse for cubic interpolation");

    const Poly st = hj.action.subst(Var::t, time);
    const Poly sq = st.diff(Var::q1);
    const Poly sqa = sq.diff(Var::p0);

    const int nq = qax.points, na = alpha_axis.points, np = pax.points;
    std::vector<double> leaf(static_cast<std::size_t>(nq) * na);
    std::vector<double> jac(leaf.size());
    {
        std::array<double, kNumVars> vals{};
        for (int i = 0; i < nq; ++i) {
            vals[idx(Var::q1)] = qax.node(i);
            for (int j = 0; j < na; ++j) {
                vals[idx(Var::p0)] = alpha_axis.node(j);
                leaf[static_cast<std::size_t>(i) * na + j] = sq.eval(vals);
                jac[static_cast<std::size_t>(i) * na + j] = sqa.eval(vals);
            }
        }
    }
    double jlo = jac[0], jhi = jac[0];
    for (const double v : jac) {
        if (!std::isfinite(v)) throw Error("complete solution is not finite on the window");
        jlo = std::min(jlo, v);
        jhi = std::max(jhi, v);
    }
    if (!(jlo > 0.0) && !(jhi < 0.0))
        throw Error("complete solution loses invertibility on the working window");

    // support of rho: marginal mass above 1e-8 of the peak, per axis
    std::vector<double> pm(static_cast<std::size_t>(np), 0.0);
    std::vector<double> qm(static_cast<std::size_t>(nq), 0.0);
    for (int i = 0; i < nq; ++i)
        for (int k = 0; k < np; ++k) {
            const double v = rho[static_cast<std::size_t>(i) * np + k];
            pm[static_cast<std::size_t>(k)] += v;
            qm[static_cast<std::size_t>(i)] += v;
        }
    const double pthr = 1e-8 * *std::max_element(pm.begin(), pm.end());
    const double qthr = 1e-8 * *std::max_element(qm.begin(), qm.end());
    int klo = 0, khi = np - 1;
    while (klo < np && pm[static_cast<std::size_t>(klo)] <= pthr) ++klo;
    while (khi >= 0 && pm[static_cast<std::size_t>(khi)] <= pthr) --khi;
    const double plo = pax.node(klo), phi = pax.node(khi);
    for (int i = 0; i < nq; ++i) {
        if (qm[static_cast<std::size_t>(i)] <= qthr) continue;
        // dS/dq is monotone in alpha, so the alpha endpoints bound the leaves
        const double a = leaf[static_cast<std::size_t>(i) * na];
        const double b = leaf[static_cast<std::size_t>(i) * na + na - 1];
        if (std::min(a, b) > plo || std::max(a, b) < phi)
            throw Error("alpha grid does not cover the momentum support");
    }

    const Grid qgrid = make_grid_1d(qax);
    MixtureDecomposition mix{alpha_axis, std::vector<double>(static_cast<std::size_t>(na)),
                             {}, st, time};
    mix.members.reserve(static_cast<std::size_t>(na));
    std::vector<RealField> raws;
    raws.reserve(static_cast<std::size_t>(na));
    double wmax = 0.0;
    for (int j = 0; j < na; ++j) {
        RealField raw(qgrid);
        for (int i = 0; i < nq; ++i) {
            const std::size_t ij = static_cast<std::size_t>(i) * na + j;
            const double v =
                std::abs(jac[ij]) * cubic_read(&rho.values[static_cast<std::size_t>(i) * np],
                                               np, pax, leaf[ij]);
            raw[static_cast<std::size_t>(i)] = std::max(v, 0.0);
        }
        const double wj = integrate(raw);
        mix.weights[static_cast<std::size_t>(j)] = wj;
        wmax = std::max(wmax, wj);
        raws.push_back(std::move(raw));
    }
    if (!(wmax > 0.0)) throw Error("density has no mass on the alpha window");
    double total = 0.0;
    for (int j = 0; j < na; ++j) {
        // a label carrying less than 1e-14 of the peak weight holds nothing
        // but rounding noise; drop it rather than divide by a denormal
        double& wj = mix.weights[static_cast<std::size_t>(j)];
        if (wj <= 1e-14 * wmax) wj = 0.0;
        total += wj;
        ConfigEnsemble m;
        m.mass = mass;
        m.S = sample(st, qgrid, {{Var::p0, alpha_axis.node(j)}});
        m.P = wj > 0.0 ? normalized(raws[static_cast<std::size_t>(j)]) : RealField(qgrid);
        mix.members.push_back(std::move(m));
    }
    total *= alpha_axis.spacing();
    for (double& w : mix.weights) w /= total;
    return mix;
}

RealField recompose(const MixtureDecomposition& mix, double width) {
    check_mixture(mix);
    const double da = mix.alpha_axis.spacing();
    if (!(width >= da)) throw Error("mollifier width is below the momentum grid resolution");
    std::size_t first = 0;
    while (!(mix.weights[first] > 0.0)) ++first;
    const Axis& qax = mix.members[first].P.grid.axis(0);
    Axis pax = mix.alpha_axis;
    pax.name = "p";
    RealField out(make_grid_2d(qax, pax));
    const int nq = qax.points, np = pax.points;
    const double norm = 1.0 / (width * std::sqrt(2.0 * M_PI));
    const double cut = 8.0 * width;  // beyond 8 sigma the ridge is < 1e-14 of its peak
    for (std::size_t j = 0; j < mix.weights.size(); ++j) {
        if (!(mix.weights[j] > 0.0)) continue;
        const RealField ridge = action_partial(mix.members[j].S, 0);
        const double scale = da * mix.weights[j] * norm;
        for (int i = 0; i < nq; ++i) {
            const double density = mix.members[j].P[static_cast<std::size_t>(i)];
            if (!(density > 0.0)) continue;
            const double m = ridge[static_cast<std::size_t>(i)];
            const int k0 = std::max(0, static_cast<int>(std::ceil((m - cut - pax.min) / da - 0.5)));
            const int k1 =
                std::min(np - 1, static_cast<int>(std::floor((m + cut - pax.min) / da - 0.5)));
            for (int k = k0; k <= k1; ++k) {
                const double z = (pax.node(k) - m) / width;
                out[static_cast<std::size_t>(i) * np + k] += scale * density * std::exp(-0.5 * z * z);
            }
        }
    }
    return out;
}

MixtureDecomposition evolve_mixture(MixtureDecomposition mix, const Poly& V, double dt,
                                    int steps, const EcsOptions& opts) {
    check_mixture(mix);
    for (std::size_t j = 0; j < mix.members.size(); ++j)
        if (mix.weights[j] > 0.0)
            mix.members[j] = evolve_ecs(std::move(mix.members[j]), V, dt, steps, opts);
    mix.time += dt * steps;
    return mix;
}

void write_mixture_archive(const std::string& dir, const MixtureDecomposition& mix) {
    check_mixture(mix);
    std::filesystem::create_directories(dir);
    nlohmann::json index;
    index["schema_version"] = io::schema_version;
    index["kind"] = "mixture-archive";
    index["time"] = mix.time;
    index["family"] = mix.family.str(1);
    auto terms = nlohmann::json::array();
    for (const auto& [e, c] : mix.family.terms())
        terms.push_back({{"coeff", c}, {"exps", e}});
    index["family_terms"] = terms;
    index["alpha_axis"] = {
        {"name", mix.alpha_axis.name},
        {"min", mix.alpha_axis.min},
        {"max", mix.alpha_axis.max},
        {"points", mix.alpha_axis.points},
        {"boundary", mix.alpha_axis.boundary == Boundary::periodic ? "periodic" : "clamped"},
    };
    index["alpha_values"] = mix.alpha_axis.nodes();
    index["weights"] = mix.weights;
    auto files = nlohmann::json::array();
    for (std::size_t j = 0; j < mix.members.size(); ++j) files.push_back(member_file_name(j));
    index["members"] = files;
    io::write_text_file(dir + "/index.json", index.dump(2) + "\n");
    for (std::size_t j = 0; j < mix.members.size(); ++j) {
        nlohmann::json m;
        m["schema_version"] = io::schema_version;
        m["alpha"] = mix.alpha_axis.node(static_cast<int>(j));
        m["weight"] = mix.weights[j];
        m["mass"] = mix.members[j].mass;
        m["density"] = nlohmann::json::parse(io::field_to_json(mix.members[j].P, "density"));
        m["action"] = nlohmann::json::parse(io::field_to_json(mix.members[j].S, "action"));
        io::write_text_file(dir + "/" + member_file_name(j), m.dump(2) + "\n");
    }
}

MixtureDecomposition read_mixture_archive(const std::string& dir) {
    if (!std::filesystem::exists(dir + "/index.json"))
        throw ConfigError("mixture archive: no index.json under " + dir);
    nlohmann::json index;
    try {
        index = nlohmann::json::parse(io::read_text_file(dir + "/index.json"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mixture archive: ") + e.what());
    }
    try {
        if (index.at("schema_version").get<int>() != io::schema_version)
            throw ConfigError("mixture archive: unsupported schema_version");
        MixtureDecomposition mix;
        const auto& ax = index.at("alpha_axis");
        mix.alpha_axis =
            Axis{ax.at("name").get<std::string>(), ax.at("min").get<double>(),
                 ax.at("max").get<double>(), ax.at("points").get<int>(),
                 ax.at("boundary").get<std::string>() == "periodic" ? Boundary::periodic
                                                                    : Boundary::clamped};
        mix.time = index.at("time").get<double>();
        for (const auto& term : index.at("family_terms")) {
            Poly::Exp e{};
            const auto& xs = term.at("exps");
            if (xs.size() != e.size()) throw ConfigError("mixture archive: malformed family term");
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = xs[i].get<std::uint8_t>();
            mix.family.add_term(e, term.at("coeff").get<double>());
        }
        mix.weights = index.at("weights").get<std::vector<double>>();
        for (const auto& fname : index.at("members")) {
            nlohmann::json m =
                nlohmann::json::parse(io::read_text_file(dir + "/" + fname.get<std::string>()));
            ConfigEnsemble ens;
            ens.P = io::real_field_from_json(m.at("density").dump());
            ens.S = io::real_field_from_json(m.at("action").dump());
            ens.mass = m.at("mass").get<double>();
            mix.members.push_back(std::move(ens));
        }
        if (mix.weights.size() != mix.members.size() ||
            mix.members.size() != static_cast<std::size_t>(mix.alpha_axis.points))
            throw ConfigError("mixture archive: sizes disagree");
        check_mixture(mix);
        return mix;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mixture archive: ") + e.what());
    }
}

}  // namespace qcens
