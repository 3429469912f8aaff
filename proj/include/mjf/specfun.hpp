#pragma once
// Special functions: incomplete gamma, the error-function form E, the Fourier
// profiles H and H^{H[e]}, the odd Jacobi theta function, definite theta
// components, eta, Weierstrass zeta and the R completion series.
//
// Every series evaluator returns a Certified value: the value, an upper bound
// on the discarded tail and the truncation radius that was used.

#include "mjf/lattice.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mjf {

using real = long double;

template <class R>
struct Precision {
    int digits = std::numeric_limits<R>::digits10;
    R eps = R(1e-15);
    /// Lower bound on the truncation radius, in the evaluator's own radius units.
    R min_radius = 0;
    Precision() = default;
    explicit Precision(R e) : eps(e) {
        if (!(e > 0)) throw std::invalid_argument("precision: eps must be positive");
    }
    /// digits >= 2 * (-log10 eps): whether the working type carries enough guard digits.
    bool guarded() const {
        using std::log10;
        return R(digits) >= 2 * (-log10(eps));
    }
};

template <class T, class R = real>
struct Certified {
    T value{};
    R tail = 0;    // bound on the discarded part
    R radius = 0;  // truncation parameter actually used
};

template <class R>
R pi_v() {
    return boost::math::constants::pi<R>();
}

template <class R>
std::complex<R> e_of(const std::complex<R>& x) {  // exp(2 pi i x)
    using std::exp;
    return exp(std::complex<R>(0, 2 * pi_v<R>()) * x);
}

template <class R>
int sgn_r(const R& x) {
    return x > 0 ? 1 : (x < 0 ? -1 : 0);
}

// ------------------------------------------------------- incomplete gamma

enum class GammaKind { lower, upper };

/// Lower kind needs s > 0.  The upper kind accepts any real s (x > 0) and
/// walks down from s + n > 0 with Gamma(s,x) = (Gamma(s+1,x) - x^s e^{-x}) / s.
template <class R>
R incomplete_gamma(R s, R x, GammaKind kind) {
    using std::exp;
    using std::floor;
    using std::pow;
    if (x < 0) throw std::domain_error("incomplete_gamma: x must be >= 0");
    if (kind == GammaKind::lower) {
        if (!(s > 0)) throw std::domain_error("incomplete_gamma: lower kind needs s > 0");
        if (x == 0) return R(0);
        return boost::math::tgamma_lower(s, x);
    }
    if (s > 0) return boost::math::tgamma(s, x);
    if (x == 0) throw std::domain_error("incomplete_gamma: upper kind with s <= 0 needs x > 0");
    int n = static_cast<int>(floor(-s)) + 1;  // s + n in (0, 1]
    R top = s + n;
    R g;
    if (top == 1 && floor(s) == s) {
        // s integral: start from Gamma(0, x) = E_1(x)
        n -= 1;
        top = s + n;
        g = boost::math::expint(1, x);
    } else {
        g = boost::math::tgamma(top, x);
    }
    for (R a = top - 1; n > 0; --n, a -= 1) g = (g - pow(x, a) * exp(-x)) / a;
    return g;
}

/// E(x) = 2 int_0^x exp(-pi u^2) du = erf(sqrt(pi) x).
template <class R>
R erf_E(R x) {
    using std::sqrt;
    return boost::math::erf(sqrt(pi_v<R>()) * x);
}

/// sgn(r) - E(x) without cancellation when sgn(x) = sgn(r).
template <class R>
R sgn_minus_E(int s, R x) {
    using std::abs;
    using std::sqrt;
    R t = sqrt(pi_v<R>()) * abs(x);
    if (s == 0) return -erf_E(x);
    int sx = sgn_r(x);
    if (sx == s) return s * boost::math::erfc(t);
    if (sx == 0) return R(s);
    return s * (2 - boost::math::erfc(t));
}

/// H(y; D).  D = 0 gives y^{-k+N/2}; D < 0 gives e^{-Y} Gamma(1-k-N/2, -2Y)
/// with Y = pi D y / (2 absdet), the value of the defining integral.
template <class R>
R H_weight(R y, const Rat& D, int k, int N, const Rat& absdet) {
    using std::exp;
    using std::pow;
    if (!(y > 0)) throw std::domain_error("H_weight: y must be positive");
    if (D > 0) throw std::domain_error("unsupported branch (analytic continuation in k not implemented)");
    if (D == 0) return pow(y, R(-k) + R(N) / 2);
    R Y = pi_v<R>() * R(to_ld(D)) * y / (2 * R(to_ld(absdet)));
    return exp(-Y) * incomplete_gamma<R>(R(1 - k) - R(N) / 2, -2 * Y, GammaKind::upper);
}

/// y-profile a(y) = Gamma(1 - kappa, -2Y) for which a(y) q^{D/(4 absdet)} is
/// annihilated by Delta_kappa (D < 0).
template <class R>
R H_harmonic(R y, const Rat& D, R kappa, const Rat& absdet) {
    if (!(D < 0)) throw std::domain_error("H_harmonic: needs D < 0");
    R Y = pi_v<R>() * R(to_ld(D)) * y / (2 * R(to_ld(absdet)));
    return incomplete_gamma<R>(1 - kappa, -2 * Y, GammaKind::upper);
}

template <class R>
struct HeisData {
    R L_e;  // Q on the unit frame vector, must be negative
    R y;
    R v_e;
    R r_e;
};

/// sgn(X) gamma(1/2, -y pi X^2 / L_e), X = r_e + 2 L_e v_e / y.
template <class R>
R H_heis(const HeisData<R>& d) {
    if (!(d.L_e < 0)) throw std::domain_error("H_heis: L_e must be negative");
    if (!(d.y > 0)) throw std::domain_error("H_heis: y must be positive");
    R X = d.r_e + 2 * d.L_e * d.v_e / d.y;
    int s = sgn_r(X);
    if (s == 0) return R(0);
    return s * incomplete_gamma<R>(R(1) / 2, -d.y * pi_v<R>() * X * X / d.L_e, GammaKind::lower);
}

// ------------------------------------------------------------ tail bounds

/// Bound on sum_{r in r0 + Z, r > R} exp(-a r^2 + b r), a > 0, for R beyond
/// the vertex: the terms then decrease at least geometrically.
template <class R>
R gaussian_tail(R a, R b, R from) {
    using std::exp;
    using std::max;
    R r1 = from;
    R vertex = b / (2 * a);
    if (r1 < vertex + 1) r1 = vertex + 1;
    R extra = 0;
    // terms between `from` and r1 bounded by the peak value
    if (r1 > from) extra = (r1 - from + 1) * exp(b * b / (4 * a));
    R t1 = exp(-a * r1 * r1 + b * r1);
    R rho = exp(-a * (2 * r1 + 1) + b);
    if (rho >= 1) return std::numeric_limits<R>::infinity();
    return extra + t1 / (1 - rho);
}

// ------------------------------------------------------------ theta odd

/// theta(z; tau) = sum_{r in Z+1/2} (-1)^{r+1/2} q^{r^2/2} zeta^r.
template <class R>
Certified<std::complex<R>, R> jacobi_theta_odd(std::complex<R> tau, std::complex<R> z,
                                               const Precision<R>& prec = {}) {
    using std::abs;
    using std::exp;
    using C = std::complex<R>;
    R y = tau.imag(), v = z.imag();
    if (!(y > 0)) throw std::domain_error("jacobi_theta_odd: Im tau must be positive");
    R a = pi_v<R>() * y, b = 2 * pi_v<R>() * abs(v);
    // |q^{r^2/2} zeta^r| = exp(-pi y r^2 - 2 pi r v)
    int K = std::max(1, static_cast<int>(std::ceil(prec.min_radius)));
    while (2 * gaussian_tail<R>(a, b, R(K) + R(0.5)) > prec.eps / 10 && K < 100000) ++K;
    C s = 0;
    for (int k = -K; k < K; ++k) {
        R r = R(k) + R(0.5);
        C term = e_of<R>(C(r * r / 2) * tau + C(r) * z);
        s += ((k + 1) % 2 == 0 ? R(1) : R(-1)) * term;
    }
    return {s, 2 * gaussian_tail<R>(a, b, R(K) + R(0.5)), R(K)};
}

// ------------------------------------------------------------- eta

template <class R>
Certified<std::complex<R>, R> dedekind_eta(std::complex<R> tau, const Precision<R>& prec = {}) {
    using std::abs;
    using std::exp;
    using C = std::complex<R>;
    if (!(tau.imag() > 0)) throw std::domain_error("dedekind_eta: Im tau must be positive");
    C q = e_of<R>(tau);
    R aq = abs(q);
    C p = 1, qn = 1;
    int n = 0;
    auto tail_of = [&](int m) {
        using std::pow;
        R s = pow(aq, R(m + 1)) / (1 - aq);
        return exp(s) - 1;
    };
    while (true) {
        ++n;
        qn *= q;
        p *= (C(1) - qn);
        if ((abs(p) * tail_of(n) < prec.eps / 10 && R(n) >= prec.min_radius) || n > 1000000) break;
    }
    C val = e_of<R>(tau / C(24)) * p;
    return {val, abs(val) * tail_of(n) * R(1.01), R(n)};
}

// ------------------------------------------------------ Weierstrass zeta

/// zeta(u) for Z + tau Z, from the absolutely convergent Eisenstein-corrected
/// lattice sum with each row m + n tau summed over m in closed form.
template <class R>
Certified<std::complex<R>, R> weierstrass_zeta(std::complex<R> tau, std::complex<R> u,
                                               const Precision<R>& prec = {}) {
    using std::abs;
    using std::exp;
    using std::floor;
    using std::round;
    using C = std::complex<R>;
    const R pi = pi_v<R>();
    R y = tau.imag();
    if (!(y > 0)) throw std::domain_error("weierstrass_zeta: Im tau must be positive");
    // pole check: distance to the nearest lattice point
    {
        R n = round(u.imag() / y);
        C w = u - C(n) * tau;
        R m = round(w.real());
        if (abs(w - C(m)) < R(10) * std::sqrt(prec.eps))
            throw std::domain_error("pole: u lies on the lattice Z + tau Z");
    }
    const C I(0, 1);
    // pi cot(pi w) split by half plane; exact constant terms removed
    auto cot_red = [&](C w, int& sgn_im) {
        // returns pi cot(pi w) - (sign) * (-i pi)
        if (w.imag() > 0) {
            C p = exp(C(0, 2 * pi) * w);
            sgn_im = 1;
            return -I * pi * (C(2) * p / (C(1) - p));
        }
        C p = exp(C(0, -2 * pi) * w);
        sgn_im = -1;
        return I * pi * (C(2) * p / (C(1) - p));
    };
    auto cotpi = [&](C w) {
        using std::cos;
        using std::sin;
        return pi * cos(pi * w) / sin(pi * w);
    };
    auto inv_sin2 = [&](C w) {  // 1/sin^2(pi w)
        C p = exp(C(0, (w.imag() > 0 ? 2 : -2) * pi) * w);
        return C(-4) * p / ((C(1) - p) * (C(1) - p));
    };
    C s = cotpi(u) + C(pi * pi / 3) * u;
    R av = abs(u.imag());
    auto row_bound = [&](int n) {
        R pn = exp(-2 * pi * (n * y - av));
        R p0 = exp(-2 * pi * n * y);
        if (pn >= 1) return std::numeric_limits<R>::infinity();
        return 2 * pi * 2 * pn / (1 - pn) + 2 * pi * 2 * p0 / (1 - p0) + abs(u) * pi * pi * 4 * p0 / ((1 - p0) * (1 - p0));
    };
    auto tail_from = [&](int n) {  // two rows per n, geometric in n
        R b = row_bound(n);
        R ratio = exp(-2 * pi * y);
        return 2 * b / (1 - ratio);
    };
    int N = std::max(1, static_cast<int>(std::ceil(prec.min_radius)));
    while (tail_from(N) > prec.eps / 10 && N < 100000) ++N;
    for (int n = 1; n < N; ++n)
        for (int sg : {1, -1}) {
            C nt = C(R(sg * n)) * tau;
            int s1, s2;
            C a = cot_red(u - nt, s1);
            C b = cot_red(nt, s2);
            // constants: s1 * (-i pi) + s2 * (-i pi) cancel because the half planes differ
            C row = a + b + (s1 + s2 == 0 ? C(0) : C(-I * pi * R(s1 + s2))) + u * C(pi * pi) * inv_sin2(nt);
            s += row;
        }
    return {s, tail_from(N), R(N)};
}

// ------------------------------------------------------------ R series

/// R(tau, z) = sum_{r in Z+1/2} (sgn r - E((r - v/y) sqrt(2y))) (-1)^{r+1/2} q^{-r^2/2} zeta^r,
/// i.e. the weight sgn(r) - H^{H}/sqrt(pi) with L_e = -1/2.
template <class R>
Certified<std::complex<R>, R> R_completion(std::complex<R> tau, std::complex<R> z, const Precision<R>& prec = {}) {
    using std::abs;
    using std::exp;
    using std::sqrt;
    using C = std::complex<R>;
    const R pi = pi_v<R>();
    R y = tau.imag(), v = z.imag();
    if (!(y > 0)) throw std::domain_error("R_completion: Im tau must be positive");
    R a = v / y;
    // |summand| <= 2 exp(-2 pi y (r-a)^2 + pi y r^2 - 2 pi r v) = 2 exp(-pi y r^2 + 2 pi y a^2 ... )
    // exponent: -pi y r^2 + 4 pi y a r - 2 pi y a^2 - 2 pi r v = -pi y r^2 + 2 pi v r - 2 pi v^2/y
    auto tail = [&](R from) {
        R A = pi * y, Bc = 2 * pi * abs(v);
        return 2 * 2 * exp(-2 * pi * v * v / y) * gaussian_tail<R>(A, Bc, from);
    };
    int K = std::max(1, static_cast<int>(std::ceil(prec.min_radius)));
    while (tail(R(K) + R(0.5)) > prec.eps / 10 && K < 100000) ++K;
    C s = 0;
    for (int k = -K; k < K; ++k) {
        R r = R(k) + R(0.5);
        R w = sgn_minus_E<R>(sgn_r(r), (r - a) * sqrt(2 * y));
        if (w == 0) continue;
        C term = e_of<R>(C(-r * r / 2) * tau + C(r) * z);
        s += ((k + 1) % 2 == 0 ? R(1) : R(-1)) * w * term;
    }
    return {s, tail(R(K) + R(0.5)), R(K)};
}

// ------------------------------------------------- definite theta components

namespace detail {

template <class R>
std::vector<std::vector<R>> to_real_mat(const RatMat& m) {
    std::vector<std::vector<R>> out(m.size(), std::vector<R>(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) out[i][j] = R(to_ld(m[i][j]));
    return out;
}

// smallest and largest eigenvalue bounds of a symmetric positive matrix via
// Gershgorin for the upper bound and inverse Gershgorin for the lower one
template <class R>
std::pair<R, R> eig_bounds(const RatMat& G) {
    using std::abs;
    auto g = to_real_mat<R>(G);
    R hi = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        R s = 0;
        for (std::size_t j = 0; j < g.size(); ++j) s += abs(g[i][j]);
        hi = std::max(hi, s);
    }
    auto gi = to_real_mat<R>(inverse(G));
    R hi_inv = 0;
    for (std::size_t i = 0; i < gi.size(); ++i) {
        R s = 0;
        for (std::size_t j = 0; j < gi.size(); ++j) s += abs(gi[i][j]);
        hi_inv = std::max(hi_inv, s);
    }
    return {1 / hi_inv, hi};
}

// Visit every integer point in the box |x_i - c_i| <= rad_i.
template <class F>
void for_box(const std::vector<long long>& lo, const std::vector<long long>& hi, F&& f) {
    std::size_t n = lo.size();
    std::vector<long long> x = lo;
    if (n == 0) {
        f(x);
        return;
    }
    while (true) {
        f(x);
        std::size_t i = 0;
        while (i < n && ++x[i] > hi[i]) x[i] = lo[i], ++i;
        if (i == n) return;
    }
}

}  // namespace detail

/// sum_{nu in l + Z^N} e(Q(nu) tau + B(nu, z)) for positive definite Lambda.
/// The tail bound uses Q(x) >= lmin |x|^2 / 2 and a sup-norm box.
template <class R>
Certified<std::complex<R>, R> theta_definite(const Lattice& Lam, const RatVec& l, std::complex<R> tau,
                                             const std::vector<std::complex<R>>& z, const Precision<R>& prec = {}) {
    using std::ceil;
    using std::exp;
    using std::floor;
    using std::sqrt;
    using C = std::complex<R>;
    auto sig = Lam.signature();
    if (sig.pos != static_cast<int>(Lam.rank())) throw std::domain_error("theta_definite: lattice must be positive definite");
    std::size_t n = Lam.rank();
    R y = tau.imag();
    if (!(y > 0)) throw std::domain_error("theta_definite: Im tau must be positive");
    if (z.size() != n) throw input_error("theta_definite: z has wrong length");
    auto G = detail::to_real_mat<R>(Lam.gram());
    auto [lmin, lmax] = detail::eig_bounds<R>(Lam.gram());
    const R pi = pi_v<R>();
    // |term| = exp(-2 pi y Q(nu + a)) exp(2 pi y Q(a)) with a = v / y
    std::vector<R> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = z[i].imag() / y;
    R Qa = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) Qa += a[i] * G[i][j] * a[j] / 2;
    R growth = exp(2 * pi * y * Qa);
    R c = pi * y * lmin;  // exp(-2 pi y Q(x)) <= exp(-c |x|^2)
    auto one_dim_full = [&](void) {
        // sum_{t in s + Z} exp(-c t^2) <= 1 + 2 sum_{k>=0} exp(-c k^2) upper bound (any shift)
        return 1 + 2 * gaussian_tail<R>(c, R(0), R(0)) + 1;
    };
    auto tail_for = [&](R rho) {  // points with |x|_inf > rho
        return growth * R(n) * 2 * gaussian_tail<R>(c, R(0), rho) * std::pow(one_dim_full(), R(n - 1));
    };
    R rho = std::max(R(1), prec.min_radius);
    while (tail_for(rho) > prec.eps / 10 && rho < 1e6) rho += R(0.5);
    std::vector<long long> lo(n), hi(n);
    std::vector<R> lr(n);
    for (std::size_t i = 0; i < n; ++i) {
        lr[i] = R(to_ld(l[i]));
        // nu_i = lr_i + k, need |nu_i + a_i| <= rho
        lo[i] = static_cast<long long>(floor(-rho - a[i] - lr[i]));
        hi[i] = static_cast<long long>(ceil(rho - a[i] - lr[i]));
    }
    C s = 0;
    detail::for_box(lo, hi, [&](const std::vector<long long>& k) {
        std::vector<R> nu(n);
        for (std::size_t i = 0; i < n; ++i) nu[i] = lr[i] + R(k[i]);
        R Q = 0;
        C Bz = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                Q += nu[i] * G[i][j] * nu[j] / 2;
                Bz += C(nu[i] * G[i][j]) * z[j];
            }
        s += e_of<R>(C(Q) * tau + Bz);
    });
    return {s, tail_for(rho), rho};
}

}  // namespace mjf
