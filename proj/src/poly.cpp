#include "qcens/poly.hpp"

#include <cmath>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace qcens {

const char* var_name(Var v, int dim) {
    static const char* one[] = {"q", "?", "?", "p", "?", "?", "x", "t", "q0", "p0"};
    static const char* three[] = {"q1", "q2", "q3", "p1", "p2", "p3", "x", "t", "q0", "p0"};
    return (dim == 1 ? one : three)[static_cast<int>(v)];
}

Var q_var(int i) { return static_cast<Var>(static_cast<int>(Var::q1) + i); }
Var p_var(int i) { return static_cast<Var>(static_cast<int>(Var::p1) + i); }

void Poly::add_term(const Exp& e, double c) {
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

Poly Poly::constant(double c) {
    Poly f;
    f.add_term(Exp{}, c);
    return f;
}

Poly Poly::variable(Var v) {
    Poly f;
    Exp e{};
    e[static_cast<std::size_t>(v)] = 1;
    f.add_term(e, 1.0);
    return f;
}

Poly Poly::monomial(double c, std::initializer_list<std::pair<Var, int>> ve) {
    Poly f;
    Exp e{};
    for (const auto& [v, k] : ve)
        e[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(
            e[static_cast<std::size_t>(v)] + k);
    f.add_term(e, c);
    return f;
}

Poly Poly::operator+(const Poly& o) const {
    Poly out = *this;
    for (const auto& [e, c] : o.terms_) out.add_term(e, c);
    return out;
}

Poly Poly::operator-(const Poly& o) const {
    Poly out = *this;
    for (const auto& [e, c] : o.terms_) out.add_term(e, -c);
    return out;
}

Poly Poly::operator-() const {
    Poly out;
    for (const auto& [e, c] : terms_) out.terms_.emplace(e, -c);
    return out;
}

Poly Poly::scaled(double s) const {
    Poly out;
    if (s == 0.0) return out;
    for (const auto& [e, c] : terms_)
        if (c * s != 0.0) out.terms_.emplace(e, c * s);
    return out;
}

Poly Poly::operator*(const Poly& o) const {
    Poly out;
    for (const auto& [e1, c1] : terms_) {
        for (const auto& [e2, c2] : o.terms_) {
            Exp e{};
            for (int i = 0; i < kNumVars; ++i)
                e[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(
                    e1[static_cast<std::size_t>(i)] + e2[static_cast<std::size_t>(i)]);
            out.add_term(e, c1 * c2);
        }
    }
    return out;
}

Poly Poly::diff(Var v) const {
    const auto vi = static_cast<std::size_t>(v);
    Poly out;
    for (const auto& [e, c] : terms_) {
        if (e[vi] == 0) continue;
        Exp d = e;
        d[vi] -= 1;
        out.add_term(d, c * e[vi]);
    }
    return out;
}

Poly Poly::subst(Var v, const Poly& replacement) const {
    const auto vi = static_cast<std::size_t>(v);
    Poly out;
    for (const auto& [e, c] : terms_) {
        Exp base = e;
        const int k = base[vi];
        base[vi] = 0;
        Poly term;
        term.add_term(base, c);
        for (int i = 0; i < k; ++i) term = term * replacement;
        out = out + term;
    }
    return out;
}

Poly Poly::subst(Var v, double value) const {
    const auto vi = static_cast<std::size_t>(v);
    Poly out;
    for (const auto& [e, c] : terms_) {
        Exp base = e;
        const int k = base[vi];
        base[vi] = 0;
        double f = c;
        for (int i = 0; i < k; ++i) f *= value;
        out.add_term(base, f);
    }
    return out;
}

double Poly::eval(const std::array<double, kNumVars>& vals) const {
    double acc = 0.0;
    for (const auto& [e, c] : terms_) {
        double t = c;
        for (int i = 0; i < kNumVars; ++i) {
            for (int k = 0; k < e[static_cast<std::size_t>(i)]; ++k)
                t *= vals[static_cast<std::size_t>(i)];
        }
        acc += t;
    }
    return acc;
}

int Poly::degree(Var v) const {
    int d = 0;
    for (const auto& [e, c] : terms_)
        d = std::max(d, static_cast<int>(e[static_cast<std::size_t>(v)]));
    (void)0;
    return d;
}

int Poly::total_degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
        int s = 0;
        for (int i = 0; i < kNumVars; ++i) s += e[static_cast<std::size_t>(i)];
        d = std::max(d, s);
    }
    return d;
}

bool Poly::depends_on(Var v) const { return degree(v) > 0; }

namespace {
std::string fmt_coeff(double c) {
    char buf[40];
    if (c == static_cast<long long>(c) && std::abs(c) < 1e15)
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(c));
    else
        std::snprintf(buf, sizeof buf, "%.12g", c);
    return buf;
}
}  // namespace

std::string Poly::str(int dim) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    // reverse map order puts the leading q-power first: "q^2 + 2 q p + p^2"
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
        const auto& [e, c] = *it;
        double mag = std::abs(c);
        const bool neg = c < 0.0;
        if (first) {
            if (neg) os << "-";
        } else {
            os << (neg ? " - " : " + ");
        }
        first = false;
        bool has_vars = false;
        for (int i = 0; i < kNumVars; ++i)
            if (e[static_cast<std::size_t>(i)] > 0) has_vars = true;
        if (!has_vars || mag != 1.0) {
            os << fmt_coeff(mag);
            if (has_vars) os << " ";
        }
        bool first_var = true;
        for (int i = 0; i < kNumVars; ++i) {
            const int k = e[static_cast<std::size_t>(i)];
            if (k == 0) continue;
            if (!first_var) os << " ";
            first_var = false;
            os << var_name(static_cast<Var>(i), dim);
            if (k > 1) os << "^" << k;
        }
    }
    return os.str();
}

Poly poisson_bracket(const Poly& F, const Poly& G, int dim) {
    Poly out;
    for (int i = 0; i < dim; ++i) {
        out = out + F.diff(q_var(i)) * G.diff(p_var(i)) -
              F.diff(p_var(i)) * G.diff(q_var(i));
    }
    return out;
}

namespace {
std::map<Var, int> grid_bindings(const Grid& g) {
    std::map<Var, int> out;
    for (int i = 0; i < g.rank(); ++i) {
        const std::string& n = g.axis(i).name;
        if (n == "q") out[Var::q1] = i;
        else if (n == "p") out[Var::p1] = i;
        else out[Var::x] = i;
    }
    return out;
}
}  // namespace

RealField sample(const Poly& f, const Grid& g, const std::map<Var, double>& fixed) {
    return sample_with(f, g, {}, fixed);
}

RealField sample_with(const Poly& f, const Grid& g,
                      const std::map<Var, const RealField*>& bound,
                      const std::map<Var, double>& fixed) {
    const auto axes = grid_bindings(g);
    RealField out(g);
    std::array<double, kNumVars> vals{};
    for (const auto& [v, val] : fixed) vals[static_cast<std::size_t>(v)] = val;
    for (int vi = 0; vi < kNumVars; ++vi) {
        const Var v = static_cast<Var>(vi);
        if (f.depends_on(v) && !axes.count(v) && !bound.count(v) && !fixed.count(v))
            throw Error(std::string("sample: unbound variable ") + var_name(v, 3));
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (const auto& [v, ax] : axes) vals[static_cast<std::size_t>(v)] = g.coord(i, ax);
        for (const auto& [v, fld] : bound) vals[static_cast<std::size_t>(v)] = (*fld)[i];
        out[i] = f.eval(vals);
    }
    return out;
}

bool valid_phase_fn(const Poly& f, int dim, bool allow_x, bool allow_t) {
    for (int i = dim; i < 3; ++i)
        if (f.depends_on(q_var(i)) || f.depends_on(p_var(i))) return false;
    if (!allow_x && f.depends_on(Var::x)) return false;
    if (!allow_t && f.depends_on(Var::t)) return false;
    if (f.depends_on(Var::q0) || f.depends_on(Var::p0)) return false;
    return true;
}

Poly parse_poly(const std::string& text) {
    static const std::map<std::string, Var, std::less<>> names = {
        {"q", Var::q1},  {"p", Var::p1},  {"q1", Var::q1}, {"q2", Var::q2},
        {"q3", Var::q3}, {"p1", Var::p1}, {"p2", Var::p2}, {"p3", Var::p3},
        {"x", Var::x},   {"t", Var::t},   {"q0", Var::q0}, {"p0", Var::p0},
    };
    const char* s = text.c_str();
    const char* const end = s + text.size();
    const auto skip = [&] {
        while (s < end && (std::isspace(static_cast<unsigned char>(*s)) || *s == '*')) ++s;
    };

    Poly out;
    skip();
    if (s == end) throw ConfigError("empty polynomial");
    double sign = 1.0;
    if (*s == '+' || *s == '-') sign = (*s++ == '-') ? -1.0 : 1.0;
    while (true) {
        double coeff = sign;
        Poly::Exp e{};
        bool any = false;
        for (skip(); s < end && *s != '+' && *s != '-'; skip()) {
            if (std::isdigit(static_cast<unsigned char>(*s)) || *s == '.') {
                char* after = nullptr;
                coeff *= std::strtod(s, &after);
                if (after == s) throw ConfigError("bad number in polynomial");
                s = after;
                any = true;
            } else if (std::isalpha(static_cast<unsigned char>(*s))) {
                std::string name(1, *s++);
                if (s < end && std::isdigit(static_cast<unsigned char>(*s))) name += *s++;
                const auto it = names.find(name);
                if (it == names.end())
                    throw ConfigError("unknown variable '" + name + "' in polynomial");
                long k = 1;
                skip();
                if (s < end && *s == '^') {
                    ++s;
                    skip();
                    char* after = nullptr;
                    k = std::strtol(s, &after, 10);
                    if (after == s || k < 0) throw ConfigError("bad exponent in polynomial");
                    s = after;
                }
                auto& slot = e[static_cast<std::size_t>(it->second)];
                if (slot + k > 32) throw ConfigError("exponent too large in polynomial");
                slot = static_cast<std::uint8_t>(slot + k);
                any = true;
            } else {
                throw ConfigError(std::string("unexpected character '") + *s + "' in polynomial");
            }
        }
        if (!any) throw ConfigError("empty term in polynomial");
        out.add_term(e, coeff);
        if (s == end) break;
        sign = (*s++ == '-') ? -1.0 : 1.0;
    }
    return out;
}

}  // namespace qcens
