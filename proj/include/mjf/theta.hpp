#pragma once
// Indefinite theta series theta_L^{E,E'} attached to a compatible pair of partial frames.

#include "mjf/jacobigroup.hpp"
#include "mjf/qseries.hpp"

#include <algorithm>

namespace mjf {

/// completed: the real-analytic kernel (E for negative, sgn for isotropic vectors).
/// sgn_limit: sgn(B(e, nu + v/y)) for every frame vector.
enum class KernelMode { completed, sgn_limit };

struct ThetaSpec {
    Lattice L;
    CompatiblePair pair;
    RatVec shift;  // nu runs over shift + Z^N
    KernelMode mode = KernelMode::completed;
    Precision<real> prec{};
    bool vanishes = false;  // some e'_i is a positive multiple of e_i
};

namespace detail {

inline bool positive_multiple(const RatVec& a, const RatVec& b) {
    std::optional<Rat> ratio;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0 && b[i] == 0) continue;
        if (a[i] == 0 || b[i] == 0) return false;
        Rat r = b[i] / a[i];
        if (ratio && *ratio != r) return false;
        ratio = r;
    }
    return ratio && *ratio > 0;
}

inline std::vector<real> gram_row(const Lattice& L, const RatVec& e) { return to_ld(L.Gx(e)); }

inline real rdot(const std::vector<real>& a, const std::vector<real>& b) {
    real s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

/// Builds and checks a spec. Pairs where some e'_i is a positive multiple of e_i give the zero series.
inline ThetaSpec make_theta_spec(const Lattice& L, const std::vector<RatVec>& E, const std::vector<RatVec>& Ep,
                                 RatVec shift = {}, KernelMode mode = KernelMode::completed, Precision<real> prec = {}) {
    for (auto* f : {&E, &Ep})
        for (auto& e : *f) {
            L.check_dim(e);
            if (L.Q(e) > 0) throw std::domain_error("positive frame vector");
        }
    if (shift.empty()) shift.assign(L.rank(), Rat(0));
    L.check_dim(shift);
    ThetaSpec s{L, validate_compatible_pair(L, E, Ep), shift, mode, prec, false};
    if (E.size() == Ep.size())
        for (std::size_t i = 0; i < E.size(); ++i)
            if (detail::positive_multiple(E[i], Ep[i])) s.vanishes = true;
    if (s.vanishes) return s;
    if (L.degenerate()) throw std::domain_error("indefinite theta needs a non-degenerate lattice");
    const auto& v = s.pair.validation;
    if (!v.valid()) {
        std::string msg = "invalid compatible pair:";
        for (auto& [k, ok] : v.items())
            if (!ok && k != "same_cone") msg += " " + k;
        throw std::invalid_argument(msg);
    }
    if (!v.same_cone)
        throw std::invalid_argument("non-convergent pair: some B(e_i, e'_i) >= 0, the kernel does not decay");
    return s;
}

/// rho^e(p; nu) for a lattice point nu (already shifted).
inline real rho_factor(const Lattice& L, const RatVec& e, const Point& p, const std::vector<real>& nu,
                       KernelMode mode = KernelMode::completed) {
    Rat q = L.Q(e);
    if (q > 0) throw std::domain_error("positive frame vector");
    auto Ge = detail::gram_row(L, e);
    real y = p.y();
    auto v = p.v();
    real b = 0;
    for (std::size_t i = 0; i < nu.size(); ++i) b += Ge[i] * (nu[i] + v[i] / y);
    if (q == 0 || mode == KernelMode::sgn_limit) return real(sgn_r(b));
    return erf_E(b * std::sqrt(y / -to_ld(q)));
}

/// True iff B(e, nu + v/y) != 0 for every nu in shift + Z^N and isotropic e in E.
/// With shift 0 and G e primitive integral this is B(e, v/y) not in Z.
inline bool domain_check(const Lattice& L, const std::vector<RatVec>& E, const Point& p, const RatVec& shift = {}) {
    RatVec lam = shift.empty() ? RatVec(L.rank(), Rat(0)) : shift;
    auto v = p.v();
    for (auto& e : E) {
        if (L.Q(e) != 0) continue;
        auto Ge = L.Gx(e);
        // B(e, Z^N) = g Z with g the rational gcd of the entries of G e
        Int num = 0, den = 1;
        for (auto& x : Ge) {
            num = boost::multiprecision::gcd(num, numerator(x));
            den = boost::multiprecision::lcm(den, denominator(x));
        }
        if (num == 0) return false;  // e in the radical
        real g = to_ld(Rat(num, den));
        real b = to_ld(L.B(e, lam));
        for (std::size_t i = 0; i < v.size(); ++i) b += to_ld(Ge[i]) * v[i] / p.y();
        real t = b / g;
        if (std::abs(t - std::round(t)) < 1e-12L) return false;
    }
    return true;
}

struct TruncationCertificate {
    real radius = 0;  // majorant radius sqrt(M[nu + v/y])
    real tail = 0;    // estimated bound on the discarded terms
    int shells = 0;   // majorant shells summed
};

struct ThetaValue {
    cplx value;
    TruncationCertificate cert;
};

namespace detail {

struct PreparedPair {
    std::vector<real> Ge, Gep;
    real qe, qep;  // Q(e), Q(e') <= 0
};

// M = G - sum_i (G w_i)(G w_i)^T / Q(w_i), i.e. x^T M x / 2 = Q(x) + sum_i B(w_i, x)^2 / (2 |Q(w_i)|),
// positive definite for orthogonal negative w_i
// spanning a maximal negative subspace. w_i is the negative vector of pair i, or e_i + e'_i.
inline std::vector<std::vector<real>> majorant(const Lattice& L, const CompatiblePair& cp) {
    RatMat M = L.gram();
    for (std::size_t i = 0; i < cp.E.vectors.size(); ++i) {
        const RatVec& e = cp.E.vectors[i];
        const RatVec& f = cp.Ep.vectors[i];
        RatVec w = L.Q(e) < 0 ? e : (L.Q(f) < 0 ? f : add(e, f));
        Rat qw = L.Q(w);
        auto Gw = L.Gx(w);
        for (std::size_t r = 0; r < M.size(); ++r)
            for (std::size_t c = 0; c < M.size(); ++c) M[r][c] -= Gw[r] * Gw[c] / qw;
    }
    return to_real_mat<real>(M);
}

inline std::vector<std::vector<real>> real_inverse(const std::vector<std::vector<real>>& m) {
    std::size_t n = m.size();
    std::vector<std::vector<real>> a = m, inv(n, std::vector<real>(n, 0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        std::swap(a[p], a[c]);
        std::swap(inv[p], inv[c]);
        real d = a[c][c];
        for (std::size_t j = 0; j < n; ++j) a[c][j] /= d, inv[c][j] /= d;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            real f = a[r][c];
            for (std::size_t j = 0; j < n; ++j) a[r][j] -= f * a[c][j], inv[r][j] -= f * inv[c][j];
        }
    }
    return inv;
}

// One factor rho^e - rho^{e'} at x = nu + v/y, split so that no two O(1) quantities cancel.
inline real kernel_factor(const PreparedPair& pp, const std::vector<real>& x, real y, KernelMode mode) {
    real be = rdot(pp.Ge, x), bf = rdot(pp.Gep, x);
    int se = sgn_r(be), sf = sgn_r(bf);
    real k = real(se - sf);
    if (mode == KernelMode::sgn_limit) return k;
    if (pp.qe < 0) k -= sgn_minus_E(se, be * std::sqrt(y / -pp.qe));
    if (pp.qep < 0) k += sgn_minus_E(sf, bf * std::sqrt(y / -pp.qep));
    return k;
}

}  // namespace detail

/// theta_L^{E,E'}(tau, z) summed over nu in shift + Z^N.
/// Points are taken in shells of the majorant M around -v/y. The tail is extrapolated
/// geometrically from the last two shells and doubled; it is an estimate, not a proof.
inline ThetaValue theta_indef_eval(const ThetaSpec& spec, const Point& p) {
    const Lattice& L = spec.L;
    std::size_t n = L.rank();
    if (p.z.size() != n) throw input_error("point dimension differs from lattice rank");
    if (spec.vanishes) return {cplx(0), {0, 0, 0}};
    std::vector<RatVec> all = spec.pair.E.vectors;
    all.insert(all.end(), spec.pair.Ep.vectors.begin(), spec.pair.Ep.vectors.end());
    if (!domain_check(L, all, p, spec.shift))
        throw std::domain_error("point outside D(E) and D(E'): some B(e, nu + v/y) vanishes for isotropic e");

    std::vector<detail::PreparedPair> pairs;
    for (std::size_t i = 0; i < spec.pair.E.vectors.size(); ++i)
        pairs.push_back({detail::gram_row(L, spec.pair.E.vectors[i]), detail::gram_row(L, spec.pair.Ep.vectors[i]),
                         to_ld(L.Q(spec.pair.E.vectors[i])), to_ld(L.Q(spec.pair.Ep.vectors[i]))});
    auto G = detail::to_real_mat<real>(L.gram());
    auto M = detail::majorant(L, spec.pair);
    auto Minv = detail::real_inverse(M);
    real y = p.y();
    auto v = p.v();
    std::vector<real> a(n), lam = to_ld(spec.shift);
    for (std::size_t i = 0; i < n; ++i) a[i] = v[i] / y;
    // shell width: twice the covering radius bound sqrt(trace M)/2, so every shell meets the lattice
    real tr = 0;
    for (std::size_t i = 0; i < n; ++i) tr += M[i][i];
    real h = std::sqrt(tr);
    const real eps = spec.prec.eps;

    struct Term {
        real s;  // majorant radius
        cplx t;
    };
    auto collect = [&](real R) {
        std::vector<Term> out;
        std::vector<long long> lo(n), hi(n);
        for (std::size_t i = 0; i < n; ++i) {
            real w = R * std::sqrt(Minv[i][i]);
            lo[i] = static_cast<long long>(std::floor(-a[i] - lam[i] - w));
            hi[i] = static_cast<long long>(std::ceil(-a[i] - lam[i] + w));
        }
        std::vector<real> nu(n), x(n);
        detail::for_box(lo, hi, [&](const std::vector<long long>& k) {
            for (std::size_t i = 0; i < n; ++i) nu[i] = lam[i] + real(k[i]), x[i] = nu[i] + a[i];
            real m2 = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) m2 += x[i] * M[i][j] * x[j];
            real s = std::sqrt(std::max(m2, real(0)));
            if (s > R) return;
            real ker = 1;
            for (auto& pp : pairs) {
                ker *= detail::kernel_factor(pp, x, y, spec.mode);
                if (ker == 0) return;
            }
            real Q = 0;
            cplx Bz = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    Q += nu[i] * G[i][j] * nu[j] / 2;
                    Bz += cplx(nu[i] * G[i][j]) * p.z[j];
                }
            out.push_back({s, cplx(ker) * e_of<real>(cplx(Q) * p.tau + Bz)});
        });
        return out;
    };

    // terms decay like exp(-pi y s^2) in the majorant radius s
    real R = std::max({3 * h, std::sqrt(-std::log(eps) / (pi_v<real>() * y)), spec.prec.min_radius});
    for (int iter = 0; iter < 60; ++iter, R += h) {
        auto terms = collect(R);
        real band1 = 0, band0 = 0;
        cplx sum = 0;
        // fixed summation order for reproducibility
        std::sort(terms.begin(), terms.end(), [](const Term& u, const Term& w) { return u.s < w.s; });
        for (auto& t : terms) {
            sum += t.t;
            if (t.s > R - h) band1 += std::abs(t.t);
            else if (t.s > R - 2 * h) band0 += std::abs(t.t);
        }
        real tail;
        if (band1 == 0) tail = 0;
        else if (band0 == 0) tail = std::numeric_limits<real>::infinity();
        else {
            real r = band1 / band0;
            tail = r < 0.9L ? 2 * band1 * r / (1 - r) : std::numeric_limits<real>::infinity();
        }
        int shells = static_cast<int>(std::ceil(R / h));
        if (tail < eps / 10 || iter == 59) {
            if (!(tail < eps / 10)) tail = std::max(tail, band1);
            return {sum, {R, tail, shells}};
        }
    }
    throw std::logic_error("unreachable");
}

/// One value per element of disc(L), in the order of discriminant_group(L).
inline std::vector<ThetaValue> theta_indef_components(const ThetaSpec& spec, const Point& p) {
    if (!spec.L.is_even()) throw std::domain_error("components need an even lattice");
    auto D = discriminant_group(spec.L);
    std::vector<ThetaValue> out;
    for (auto& el : D.elements) {
        ThetaSpec s = spec;
        s.shift = add(spec.shift, el.rep);
        out.push_back(theta_indef_eval(s, p));
    }
    return out;
}

/// Holomorphic part at z = alpha tau + beta, with the Heisenberg factor e(Q(alpha) tau + B(alpha, beta)):
///   sum_nu prod_i (sgn B(e_i, x) - sgn B(e'_i, x)) e(B(x, beta)) q^{Q(x)},  x = nu + alpha.
/// Terms with Q(x) >= order are dropped. The search box doubles until a shell adds nothing.
inline ExactSeries holomorphic_part_qexp(const ThetaSpec& spec, const TorsionPoint& t, const Rat& order) {
    const Lattice& L = spec.L;
    std::size_t n = L.rank();
    if (t.alpha.size() != n || t.beta.size() != n) throw input_error("torsion point dimension mismatch");
    ExactSeries out(0, order);
    if (spec.vanishes) return out;
    RatVec base = add(spec.shift, t.alpha);
    std::vector<RatVec> Ge, Gf;
    for (std::size_t i = 0; i < spec.pair.E.vectors.size(); ++i) {
        Ge.push_back(L.Gx(spec.pair.E.vectors[i]));
        Gf.push_back(L.Gx(spec.pair.Ep.vectors[i]));
    }
    auto Gbeta = L.Gx(t.beta);
    std::vector<long long> center(n);
    for (std::size_t i = 0; i < n; ++i) center[i] = static_cast<long long>(floor_rat(-base[i]));

    auto visit = [&](long long K, long long inner, bool add_terms) {
        bool found = false;
        std::vector<long long> lo(n), hi(n);
        for (std::size_t i = 0; i < n; ++i) lo[i] = center[i] - K, hi[i] = center[i] + K;
        detail::for_box(lo, hi, [&](const std::vector<long long>& k) {
            long long dist = 0;
            for (std::size_t i = 0; i < n; ++i) dist = std::max(dist, std::abs(k[i] - center[i]));
            if (dist <= inner) return;
            RatVec x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = base[i] + Rat(k[i]);
            Int ker = 1;
            for (std::size_t i = 0; i < Ge.size(); ++i) {
                ker *= sgn(dot(Ge[i], x)) - sgn(dot(Gf[i], x));
                if (ker == 0) return;
            }
            Rat q = L.Q(x);
            if (q < 0) throw std::domain_error("kernel is nonzero on a negative vector: the series does not converge");
            if (q >= order) return;
            found = true;
            if (add_terms) out.add_term(q, Cyclo(Rat(ker)) * Cyclo::root(frac(dot(Gbeta, x))));
        });
        return found;
    };

    long long K = 4;
    visit(K, -1, true);
    std::size_t budget = 1;
    for (std::size_t i = 0; i < n; ++i) budget *= 4096;
    while (true) {
        long long K2 = 2 * K;
        std::size_t pts = 1;
        for (std::size_t i = 0; i < n; ++i) pts *= static_cast<std::size_t>(2 * K2 + 1);
        if (pts > std::min<std::size_t>(budget, 50'000'000))
            throw std::runtime_error("holomorphic_part_qexp: search box exceeded its budget before stabilizing");
        bool more = visit(K2, K, true);
        K = K2;
        if (!more && K >= 16) break;
    }
    return out;
}

}  // namespace mjf
