#pragma once
// Jacobi group elements, their action on H x C^N, and the slash actions.

#include "mjf/lattice.hpp"
#include "mjf/specfun.hpp"

#include <functional>

namespace mjf {

/// A point (tau, z) with y = Im tau, v = Im z.
struct Point {
    cplx tau;
    std::vector<cplx> z;

    Point() = default;
    Point(cplx t, std::vector<cplx> zz) : tau(t), z(std::move(zz)) {
        if (tau.imag() <= 0) throw std::domain_error("Im tau must be positive");
    }
    real y() const { return tau.imag(); }
    std::vector<real> v() const {
        std::vector<real> out(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].imag();
        return out;
    }
};

/// (gamma, lambda, mu). Acts on points by z -> (z + lambda tau + mu)/(c tau + d), tau -> gamma tau.
struct JacobiElement {
    long long a = 1, b = 0, c = 0, d = 1;
    RatVec lambda, mu;

    static JacobiElement identity(std::size_t n) { return {1, 0, 0, 1, RatVec(n, Rat(0)), RatVec(n, Rat(0))}; }
    static JacobiElement T(std::size_t n) { return {1, 1, 0, 1, RatVec(n, Rat(0)), RatVec(n, Rat(0))}; }
    static JacobiElement S(std::size_t n) { return {0, -1, 1, 0, RatVec(n, Rat(0)), RatVec(n, Rat(0))}; }
    static JacobiElement heisenberg(RatVec l, RatVec m) { return {1, 0, 0, 1, std::move(l), std::move(m)}; }

    void validate() const {
        if (a * d - b * c != 1) throw input_error("gamma must have determinant 1");
        if (lambda.size() != mu.size()) throw input_error("lambda and mu lengths differ");
    }
    bool integral() const {
        for (auto& x : lambda)
            if (!is_integral(x)) return false;
        for (auto& x : mu)
            if (!is_integral(x)) return false;
        return true;
    }

    /// (g, l, m)(g', l', m') = (g g', (l, m) g' + (l', m')).
    friend JacobiElement operator*(const JacobiElement& x, const JacobiElement& y) {
        JacobiElement r;
        r.a = x.a * y.a + x.b * y.c;
        r.b = x.a * y.b + x.b * y.d;
        r.c = x.c * y.a + x.d * y.c;
        r.d = x.c * y.b + x.d * y.d;
        std::size_t n = x.lambda.size();
        r.lambda.resize(n);
        r.mu.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            r.lambda[i] = Rat(y.a) * x.lambda[i] + Rat(y.c) * x.mu[i] + y.lambda[i];
            r.mu[i] = Rat(y.b) * x.lambda[i] + Rat(y.d) * x.mu[i] + y.mu[i];
        }
        return r;
    }
    friend bool operator==(const JacobiElement& x, const JacobiElement& y) {
        return x.a == y.a && x.b == y.b && x.c == y.c && x.d == y.d && x.lambda == y.lambda && x.mu == y.mu;
    }

    cplx j(cplx tau) const { return cplx(real(c)) * tau + cplx(real(d)); }

    Point act(const Point& p) const {
        cplx den = j(p.tau);
        if (std::abs(den) == 0) throw std::domain_error("c tau + d vanishes");
        cplx t = (cplx(real(a)) * p.tau + cplx(real(b))) / den;
        std::vector<cplx> z(p.z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            z[i] = (p.z[i] + cplx(to_ld(lambda[i])) * p.tau + cplx(to_ld(mu[i]))) / den;
        return Point(t, z);
    }
};

using Evaluatable = std::function<cplx(const Point&)>;

namespace detail {
inline cplx cquad(const Lattice& L, const std::vector<cplx>& x) {
    auto G = to_real_mat<real>(L.gram());
    cplx s = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) s += x[i] * cplx(G[i][j]) * x[j];
    return s / cplx(2);
}
inline cplx cbil(const Lattice& L, const std::vector<cplx>& x, const std::vector<cplx>& y) {
    auto G = to_real_mat<real>(L.gram());
    cplx s = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) s += x[i] * cplx(G[i][j]) * y[j];
    return s;
}
inline std::vector<cplx> to_cvec(const RatVec& r) {
    std::vector<cplx> out(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = cplx(to_ld(r[i]));
    return out;
}

/// e(-c Q(z + l tau + m)/(c tau + d) + Q(l) tau + B(l, z) + B(l, m)).
inline cplx index_factor(const Lattice& L, const JacobiElement& g, const Point& p) {
    std::size_t n = p.z.size();
    auto l = to_cvec(g.lambda), m = to_cvec(g.mu);
    std::vector<cplx> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = p.z[i] + l[i] * p.tau + m[i];
    cplx ph = -cplx(real(g.c)) * cquad(L, w) / g.j(p.tau);
    ph += cplx(to_ld(L.Q(g.lambda))) * p.tau + cbil(L, l, p.z) + cplx(to_ld(L.B(g.lambda, g.mu)));
    return e_of<real>(ph);
}
}  // namespace detail

/// (phi |_{k,L} g)(p). Half-integral k uses the principal branch of (c tau + d)^k.
inline cplx apply_slash(const Evaluatable& phi, real k, const Lattice& L, const JacobiElement& g, const Point& p) {
    g.validate();
    if (p.z.size() != L.rank()) throw input_error("point dimension differs from lattice rank");
    if (g.lambda.size() != p.z.size()) throw input_error("element and point dimensions differ");
    cplx jj = g.j(p.tau);
    if (std::abs(jj) == 0) throw std::domain_error("c tau + d vanishes");
    return std::pow(jj, cplx(-k)) * detail::index_factor(L, g, p) * phi(g.act(p));
}

struct SlashWeights {
    real alpha = 0, beta = 0;
    void validate() const {
        real twice = 2 * (alpha - beta);
        if (std::abs(twice - std::round(twice)) > 1e-12L) throw input_error("alpha - beta must lie in Z/2");
    }
    /// |^{sk[E]}_{k,L} = |_{k - #E/2, #E/2, L}.
    static SlashWeights skew(real k, std::size_t nE) { return {k - real(nE) / 2, real(nE) / 2}; }
};

/// (c tau + d)^{-alpha} (c taubar + d)^{-beta}, taken as |c tau + d|^{-2 beta} (c tau + d)^{beta - alpha}.
inline cplx apply_two_weight_slash(const Evaluatable& phi, const SlashWeights& w, const Lattice& L,
                                   const JacobiElement& g, const Point& p) {
    w.validate();
    g.validate();
    if (p.z.size() != L.rank()) throw input_error("point dimension differs from lattice rank");
    cplx jj = g.j(p.tau);
    if (std::abs(jj) == 0) throw std::domain_error("c tau + d vanishes");
    cplx aut = std::pow(std::abs(jj), -2 * w.beta) * std::pow(jj, cplx(w.beta - w.alpha));
    return aut * detail::index_factor(L, g, p) * phi(g.act(p));
}

/// z(tau) = alpha tau + beta.
struct TorsionPoint {
    RatVec alpha, beta;
    std::vector<cplx> z(cplx tau) const {
        std::vector<cplx> out(alpha.size());
        for (std::size_t i = 0; i < alpha.size(); ++i)
            out[i] = cplx(to_ld(alpha[i])) * tau + cplx(to_ld(beta[i]));
        return out;
    }
};

/// Singular set { ell . z - (a tau + b) in Z tau + Z }, or the single hyperplane when modular is false.
struct Divisor {
    RatVec ell;
    Rat a = 0, b = 0;
    bool modular = true;
    std::string name;
};

/// Divisors the torsion path lies on. A linear path meets a linear divisor in H either
/// identically or not at all, since (ell.alpha - a) tau = const forces tau real otherwise.
inline std::vector<std::string> torsion_collisions(const TorsionPoint& t, const std::vector<Divisor>& divs) {
    std::vector<std::string> hit;
    for (auto& D : divs) {
        if (D.ell.size() != t.alpha.size()) throw input_error("divisor dimension mismatch");
        Rat da = dot(D.ell, t.alpha) - D.a, db = dot(D.ell, t.beta) - D.b;
        bool on = D.modular ? (is_integral(da) && is_integral(db)) : (da == 0 && db == 0);
        if (on) hit.push_back(D.name.empty() ? "unnamed divisor" : D.name);
    }
    return hit;
}

struct Specialized {
    std::function<cplx(cplx)> f;
    TorsionPoint shift;
};

inline Specialized specialize_torsion(const Evaluatable& phi, const TorsionPoint& t, const std::vector<Divisor>& divs = {}) {
    if (t.alpha.size() != t.beta.size()) throw input_error("alpha and beta lengths differ");
    auto hit = torsion_collisions(t, divs);
    if (!hit.empty()) {
        std::string msg = "torsion path lies on a singular divisor:";
        for (auto& h : hit) msg += " " + h;
        throw std::domain_error(msg);
    }
    return {[phi, t](cplx tau) { return phi(Point(tau, t.z(tau))); }, t};
}

}  // namespace mjf
