#pragma once
// The mu-function family: two-variable mu-hat, mu_m, mu-hat_{m,l}, mu-hat_{L,l}
// and the splitting residual against the Weierstrass zeta quotient.

#include "mjf/lattice.hpp"
#include "mjf/specfun.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace mjf {

using CertC = Certified<cplx, real>;

namespace detail {

/// Euclidean distance from w to the lattice Z tau + Z.
inline real lattice_distance(cplx tau, cplx w) {
    real y = tau.imag();
    real best = std::numeric_limits<real>::infinity();
    long long n0 = std::llround(w.imag() / y);
    for (long long n = n0 - 1; n <= n0 + 1; ++n) {
        cplx r = w - cplx(real(n)) * tau;
        real m = std::round(r.real());
        best = std::min(best, std::abs(r - cplx(m)));
    }
    return best;
}

/// Pole test: closer than 10 sqrt(eps) to Z tau + Z.
inline void check_off_lattice(cplx tau, cplx w, real eps, const std::string& what) {
    if (lattice_distance(tau, w) < 10 * std::sqrt(eps))
        throw std::domain_error("pole: " + what + " lies on the divisor Z tau + Z");
}

}  // namespace detail

/// mu-hat(tau, u, v): e(u/2)/theta(v) sum_n (-1)^n q^{(n^2+n)/2} e(n v)/(1 - e(u) q^n)
/// plus the completion term, where theta is the odd theta with (-1)^{r+1/2}.
/// The completion is -R(tau, u - v)/2 with R as in R_completion.
inline CertC mu_two_var(cplx tau, cplx u, cplx v, const Precision<real>& prec = {}) {
    const real pi = pi_v<real>();
    real y = tau.imag();
    if (!(y > 0)) throw std::domain_error("mu: Im tau must be positive");
    detail::check_off_lattice(tau, u, prec.eps, "u");
    detail::check_off_lattice(tau, v, prec.eps, "v");
    detail::check_off_lattice(tau, u - v, prec.eps, "u - v");

    // Past K the denominator is within a factor 2 of 1 or of e(u) q^n.
    real iu = u.imag(), iv = v.imag(), l2 = std::log(real(2)) / (2 * pi);
    long long K = 2 + static_cast<long long>(std::ceil(std::max(std::abs(l2 - iu), std::abs(l2 + iu)) / y));
    real growth = 2 * std::max(real(1), std::exp(2 * pi * iu));
    auto tail = [&](long long k) { return 2 * growth * gaussian_tail<real>(pi * y, pi * y + 2 * pi * std::abs(iv), real(k)); };
    auto th = jacobi_theta_odd<real>(tau, v, prec);
    cplx pref = e_of<real>(u / cplx(2)) / th.value;
    K = std::max(K, static_cast<long long>(std::ceil(prec.min_radius)));
    while (std::abs(pref) * tail(K + 1) > prec.eps / 20 && K < 100000) ++K;

    cplx s = 0;
    for (long long n = -K; n <= K; ++n) {
        cplx num = e_of<real>(cplx(real(n * n + n) / 2) * tau + cplx(real(n)) * v);
        cplx den = cplx(1) - e_of<real>(cplx(real(n)) * tau + u);
        s += (n % 2 == 0 ? real(1) : real(-1)) * num / den;
    }
    auto R = R_completion<real>(tau, u - v, prec);
    cplx first = pref * s;
    real t_first = std::abs(pref) * tail(K + 1) + std::abs(first) * th.tail / std::abs(th.value);
    return {first - R.value / cplx(2), t_first + R.tail / 2, real(K)};
}

/// Holomorphic (first) term of mu_two_var alone.
inline CertC mu_two_var_meromorphic(cplx tau, cplx u, cplx v, const Precision<real>& prec = {}) {
    auto full = mu_two_var(tau, u, v, prec);
    auto R = R_completion<real>(tau, u - v, prec);
    return {full.value + R.value / cplx(2), full.tail + R.tail / 2, full.radius};
}

/// mu_m(tau, z1, z2) = e(z1/2)/theta(z2)^{2m} sum_{n in Z^{2m}} (-1)^{|n|} q^{(||n||^2 + |n|)/2} e(z2 |n|)/(1 - e(z1) q^{|n|}),
/// |n| the coordinate sum, ||n||^2 the square sum. The lattice sum is grouped by (|n|, ||n||^2).
inline CertC mu_m_eval(int m, cplx tau, cplx z1, cplx z2, const Precision<real>& prec = {}) {
    if (m <= 0) throw input_error("mu_m: m must be positive");
    const real pi = pi_v<real>();
    real y = tau.imag();
    if (!(y > 0)) throw std::domain_error("mu_m: Im tau must be positive");
    detail::check_off_lattice(tau, z1, prec.eps, "z1 (denominator 1 - e(z1) q^{|n|})");
    detail::check_off_lattice(tau, z2, prec.eps, "z2 (theta zero)");
    const int d = 2 * m;

    auto den = [&](long long s) { return cplx(1) - e_of<real>(z1 + cplx(real(s)) * tau); };
    // max over s of 1/|1 - e(z1) q^s|: exact near |e(z1) q^s| = 1, monotone bound outside
    real sstar = -z1.imag() / y;
    long long s0 = static_cast<long long>(std::floor(sstar)) - 2, s1 = static_cast<long long>(std::ceil(sstar)) + 2;
    real Dmax = 0;
    for (long long s = s0; s <= s1; ++s) Dmax = std::max(Dmax, 1 / std::abs(den(s)));
    for (long long s : {s0 - 1, s1 + 1}) {
        real rho = std::exp(-2 * pi * (z1.imag() + real(s) * y));
        Dmax = std::max(Dmax, 1 / std::abs(1 - rho));
    }
    // |term| <= Dmax exp(-pi y t + c sqrt t), t = ||n||^2, since ||s|| <= sqrt(2m t)
    real c = std::sqrt(real(d)) * (pi * y + 2 * pi * std::abs(z2.imag()));
    auto tail = [&](long long T) {
        real acc = 0, prev = std::numeric_limits<real>::infinity();
        for (long long t = T + 1;; ++t) {
            real st = std::sqrt(real(t));
            real term = std::pow(2 * st + 1, real(d)) * std::exp(-pi * y * real(t) + c * st);
            acc += term;
            if (term < prev && term < acc * 1e-30L) break;
            if (t > T + 1000000) return std::numeric_limits<real>::infinity();
            prev = term;
        }
        return Dmax * acc;
    };
    auto th = jacobi_theta_odd<real>(tau, z2, prec);
    cplx pref = e_of<real>(z1 / cplx(2)) / std::pow(th.value, real(d));
    long long T = std::max(4LL, static_cast<long long>(std::ceil(prec.min_radius * prec.min_radius)));
    T += T % 2;
    while (std::abs(pref) * tail(T) > prec.eps / 10 && T < 100000) T += 2;

    // counts of n with coordinate sum s and square sum t <= T
    long long kmax = static_cast<long long>(std::floor(std::sqrt(real(T))));
    std::map<std::pair<long long, long long>, real> cnt{{{0, 0}, 1}};
    for (int i = 0; i < d; ++i) {
        std::map<std::pair<long long, long long>, real> next;
        for (auto& [st, w] : cnt)
            for (long long k = -kmax; k <= kmax; ++k) {
                long long t = st.second + k * k;
                if (t <= T) next[{st.first + k, t}] += w;
            }
        cnt = std::move(next);
    }
    cplx s = 0;
    for (auto& [st, w] : cnt) {
        auto [sn, t] = st;
        cplx num = e_of<real>(cplx(real(t + sn) / 2) * tau + cplx(real(sn)) * z2);
        s += (sn % 2 == 0 ? w : -w) * num / den(sn);
    }
    cplx val = pref * s;
    real t_all = std::abs(pref) * tail(T) + std::abs(val) * real(d) * th.tail / std::abs(th.value);
    return {val, t_all, std::sqrt(real(T))};
}

/// mu-hat_{m,l}(tau, z) = (-1)^m / sqrt(m) q^{-(l+m)^2/4m} zeta^{-(l+m)}
///   (mu_m(tau, 2mz + (l+m)tau + 1/2, 1/4m) - (i/2) R(2m tau, 2mz + (l+m)tau - (2m+1)/2)).
inline CertC mu_hat_ml(int m, long long l, cplx tau, cplx z, const Precision<real>& prec = {}) {
    if (m <= 0) throw input_error("mu_hat_ml: m must be positive");
    real lm = real(l + m), M = real(m);
    cplx A = cplx(2 * M) * z + cplx(lm) * tau;
    auto mu = mu_m_eval(m, tau, A + cplx(0.5L), cplx(1 / (4 * M)), prec);
    auto R = R_completion<real>(cplx(2 * M) * tau, A - cplx((2 * M + 1) / 2), prec);
    cplx pref = cplx((m % 2 == 0 ? 1 : -1) / std::sqrt(M)) * e_of<real>(cplx(-lm * lm / (4 * M)) * tau - cplx(lm) * z);
    const cplx half_i(0, 0.5L);
    cplx val = pref * (mu.value - half_i * R.value);
    return {val, std::abs(pref) * (mu.tail + R.tail / 2), std::max(mu.radius, R.radius)};
}

// ------------------------------------------------------------ mu-hat_{L,l}

/// Lattice data for mu-hat_{L,l}: Lambda = A^T L A diagonal along E, with
/// column i of A a multiple of E[i].
struct MuLatticeData {
    Lattice L;
    Frame E;
    RatMat A;                   // integer N x N
    std::vector<RatVec> cosets;  // representatives of L / A Z^N

    RatMat Lambda() const { return matmul(matmul(transpose(A), L.gram()), A); }
};

namespace detail {

inline RatVec primitive_integer(const RatVec& v) {
    Int den = lcm_den(v);
    RatVec w = scale(v, Rat(den));
    Int g = 0;
    for (auto& x : w) g = boost::multiprecision::gcd(g, boost::multiprecision::abs(numerator(x)));
    if (g == 0) throw input_error("zero frame vector");
    return scale(w, Rat(Int(1), g));
}

/// Representatives of Z^N / A Z^N by reduction of the box [0, |det A|)^N.
inline std::vector<RatVec> coset_reps(const RatMat& A) {
    std::size_t n = A.size();
    Rat dt = det(A);
    if (dt == 0) throw input_error("A is singular");
    long long D = static_cast<long long>(boost::multiprecision::abs(numerator(dt)));
    if (D > 64 && n > 1) throw input_error("index |det A| too large for coset enumeration");
    RatMat Ai = inverse(A);
    std::map<RatVec, RatVec> seen;
    std::vector<long long> lo(n, 0), hi(n, D - 1);
    for_box(lo, hi, [&](const std::vector<long long>& k) {
        RatVec x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = Rat(k[i]);
        RatVec key = matvec(Ai, x);
        for (auto& c : key) c = frac(c);
        seen.emplace(key, x);
    });
    std::vector<RatVec> out;
    for (auto& [k, x] : seen) out.push_back(x);
    if (static_cast<long long>(out.size()) != D) throw std::logic_error("coset count differs from |det A|");
    return out;
}

}  // namespace detail

/// Validates (L, E, A) and enumerates L / A Z^N.
inline MuLatticeData make_mu_lattice_data(const Lattice& L, const Frame& E, const RatMat& A) {
    std::size_t n = L.rank();
    if (L.degenerate()) throw std::domain_error("mu_hat_Ll: lattice is degenerate");
    if (E.vectors.size() != n || !linearly_independent(E.vectors)) throw input_error("E must be a frame spanning the space");
    for (auto c : E.classes)
        if (c == VecClass::isotropic) throw input_error("E contains an isotropic vector");
    if (A.size() != n) throw input_error("A has the wrong size");
    for (auto& r : A) {
        if (r.size() != n) throw input_error("A has the wrong size");
        for (auto& x : r)
            if (!is_integral(x)) throw input_error("A must be integral");
    }
    RatMat At = transpose(A);
    for (std::size_t i = 0; i < n; ++i) {
        // column i must be parallel to E[i]
        RatMat two{At[i], E.vectors[i]};
        if (rank_of(two) != 1) throw input_error("column " + std::to_string(i) + " of A is not along E[" + std::to_string(i) + "]");
    }
    MuLatticeData d{L, E, A, {}};
    auto Lam = d.Lambda();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && Lam[i][j] != 0) throw input_error("A^T L A is not diagonal along E");
    for (std::size_t i = 0; i < n; ++i)
        if (E.classes[i] == VecClass::negative && !(is_integral(Lam[i][i] / 2)))
            throw input_error("negative block of A^T L A must be even");
    d.cosets = detail::coset_reps(A);
    return d;
}

/// The default A: primitive integer vectors along an orthogonal frame E.
inline MuLatticeData make_mu_lattice_data(const Lattice& L, const Frame& E) {
    std::size_t n = L.rank();
    if (E.vectors.size() != n) throw input_error("E must have rank(L) vectors");
    RatMat A(n, RatVec(n));
    for (std::size_t i = 0; i < n; ++i) {
        auto p = detail::primitive_integer(E.vectors[i]);
        for (std::size_t r = 0; r < n; ++r) A[r][i] = p[r];
    }
    return make_mu_lattice_data(L, E, A);
}

/// sum_{lambda in L/Lambda} prod_{E+} theta_{Lambda_e, (l+lambda)_e} prod_{E-} mu-hat_{Lambda_e, (l+lambda)_e},
/// evaluated at (A^{-1} z)_i. Negative blocks Lambda_e = (-2m) use mu-hat_{m, 2m (l+lambda)_e}.
inline CertC mu_hat_Ll(const MuLatticeData& d, const RatVec& l, cplx tau, const std::vector<cplx>& z,
                       const Precision<real>& prec = {}) {
    std::size_t n = d.L.rank();
    d.L.check_dim(l);
    if (z.size() != n) throw input_error("z has wrong length");
    RatMat Ai = inverse(d.A);
    auto Aireal = detail::to_real_mat<real>(Ai);
    std::vector<cplx> zp(n, cplx(0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) zp[i] += cplx(Aireal[i][j]) * z[j];
    auto Lam = d.Lambda();
    cplx total = 0;
    real tail = 0, radius = 0;
    for (auto& lam : d.cosets) {
        RatVec w = matvec(Ai, add(l, lam));
        cplx prod = 1;
        real rel = 0;  // relative error of the product
        for (std::size_t i = 0; i < n; ++i) {
            CertC f;
            if (d.E.classes[i] == VecClass::positive) {
                Lattice Le(RatMat{{Lam[i][i]}}, FormMode::gram);
                f = theta_definite<real>(Le, RatVec{frac(w[i])}, tau, {zp[i]}, prec);
            } else {
                Rat m2 = -Lam[i][i];  // 2m
                Rat j = m2 * w[i];
                if (!is_integral(j)) throw input_error("l is not in the dual of Lambda");
                int m = static_cast<int>(numerator(Rat(m2 / 2)));
                f = mu_hat_ml(m, static_cast<long long>(numerator(j)), tau, zp[i], prec);
            }
            radius = std::max(radius, f.radius);
            prod *= f.value;
            rel += f.tail / std::max(std::abs(f.value), real(1e-300L));
        }
        total += prod;
        tail += std::abs(prod) * rel;
    }
    return {total, tail, radius};
}

// ------------------------------------------------------------ splitting

/// mu-hat(u, v) - (1/2 pi i)(zeta(u) - zeta(v) + zeta(u - v)) / theta(u - v).
inline CertC splitting_residual(cplx tau, cplx u, cplx v, const Precision<real>& prec = {}) {
    auto mu = mu_two_var(tau, u, v, prec);
    auto zu = weierstrass_zeta<real>(tau, u, prec), zv = weierstrass_zeta<real>(tau, v, prec),
         zw = weierstrass_zeta<real>(tau, u - v, prec);
    auto th = jacobi_theta_odd<real>(tau, u - v, prec);
    const cplx kappa = cplx(1) / cplx(0, 2 * pi_v<real>());
    cplx num = zu.value - zv.value + zw.value;
    cplx mer = kappa * num / th.value;
    real t = mu.tail + std::abs(kappa) * (zu.tail + zv.tail + zw.tail) / std::abs(th.value) +
             std::abs(mer) * th.tail / std::abs(th.value);
    return {mu.value - mer, t, mu.radius};
}

}  // namespace mjf
