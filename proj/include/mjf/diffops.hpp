#pragma once
// Covariant differential operators evaluated with central finite differences
// in Wirtinger form. Complex variable 0 is tau, variable j + 1 is z_j.

#include "mjf/jacobigroup.hpp"
#include "mjf/report.hpp"

#include <map>
#include <mutex>

namespace mjf {

struct StencilConfig {
    real h = 0;      // 0 picks eps^{1/(order + d)} min(1, y) per operator
    int order = 4;   // 2 or 4
    real func_eps = std::numeric_limits<real>::epsilon();  // accuracy of phi itself
    std::vector<Divisor> divisors;  // stencil must stay clear of these

    void validate() const {
        if (order != 2 && order != 4) throw input_error("stencil order must be 2 or 4");
        if (h < 0) throw input_error("stencil step must be positive");
        if (!(func_eps > 0)) throw input_error("func_eps must be positive");
    }
};

struct Derivative {
    cplx value;
    real err;  // truncation (Richardson) plus roundoff
};

/// Wirtinger factor: d_w, d_wbar or the real-part derivative d/d(Re w).
struct WFactor {
    enum Kind { hol, antihol, re } kind;
    int var;
};
using WMono = std::vector<WFactor>;

inline WFactor d_tau() { return {WFactor::hol, 0}; }
inline WFactor d_taubar() { return {WFactor::antihol, 0}; }
inline WFactor d_z(int j) { return {WFactor::hol, j + 1}; }
inline WFactor d_zbar(int j) { return {WFactor::antihol, j + 1}; }
inline WFactor d_u(int j) { return {WFactor::re, j + 1}; }

namespace detail {

/// Fornberg weights on nodes -M..M for the d-th derivative at 0.
inline std::vector<real> fornberg(int d, int M) {
    int n = 2 * M + 1;
    std::vector<real> x(n);
    for (int i = 0; i < n; ++i) x[i] = real(i - M);
    std::vector<std::vector<std::vector<real>>> c(d + 1, std::vector<std::vector<real>>(n, std::vector<real>(n, 0)));
    c[0][0][0] = 1;
    real c1 = 1;
    for (int i = 1; i < n; ++i) {
        real c2 = 1;
        for (int j = 0; j < i; ++j) {
            real c3 = x[i] - x[j];
            c2 *= c3;
            for (int k = 0; k <= std::min(i, d); ++k) {
                c[k][i][j] = (x[i] * c[k][i - 1][j] - (k ? k * c[k - 1][i - 1][j] : 0)) / c3;
            }
        }
        for (int k = 0; k <= std::min(i, d); ++k)
            c[k][i][i] = c1 / c2 * ((k ? k * c[k - 1][i - 1][i - 1] : 0) - x[i - 1] * c[k][i - 1][i - 1]);
        c1 = c2;
    }
    return c[d][n - 1];
}

/// Central weights of accuracy `order` for the d-th derivative, indexed by offset + M.
inline const std::vector<real>& central_weights(int d, int order) {
    static std::map<std::pair<int, int>, std::vector<real>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(d, order);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    int pts = 2 * ((d + 1) / 2) - 1 + order;
    auto w = fornberg(d, (pts - 1) / 2);
    for (auto& x : w)
        if (std::abs(x) < 1e-15L) x = 0;
    return cache.emplace(key, std::move(w)).first->second;
}

}  // namespace detail

/// Lazily evaluates Wirtinger derivatives of phi at p on a shared grid.
class WirtingerTable {
public:
    WirtingerTable(Evaluatable phi, Point p, real h, const StencilConfig& cfg) : phi_(std::move(phi)), p_(std::move(p)), h_(h), cfg_(cfg) {
        cfg_.validate();
        if (!(h_ > 0)) throw input_error("stencil step must be positive");
        nvar_ = p_.z.size() + 1;
        real reach = 4 * h_;
        if (p_.y() <= reach * 4) throw std::domain_error("stencil leaves the upper half plane");
        auto zt = p_.z;
        for (auto& D : cfg_.divisors) {
            if (D.ell.size() != zt.size()) throw input_error("divisor dimension mismatch");
            cplx lz = 0;
            for (std::size_t i = 0; i < zt.size(); ++i) lz += cplx(to_ld(D.ell[i])) * zt[i];
            cplx w = lz - cplx(to_ld(D.a)) * p_.tau - cplx(to_ld(D.b));
            real dist;
            if (D.modular) {
                real y = p_.y();
                long long n0 = std::llround(w.imag() / y);
                dist = std::numeric_limits<real>::infinity();
                for (long long n = n0 - 1; n <= n0 + 1; ++n) {
                    cplx r = w - cplx(real(n)) * p_.tau;
                    dist = std::min(dist, std::abs(r - cplx(std::round(r.real()))));
                }
            } else {
                dist = std::abs(w);
            }
            real ellnorm = 0;
            for (auto& x : D.ell) ellnorm += std::abs(to_ld(x));
            // doubled order-4 stencils reach 6h per coordinate
            if (dist < 8 * h_ * std::max(real(1), ellnorm))
                throw std::domain_error("stencil reaches divisor " + (D.name.empty() ? std::string("(unnamed)") : D.name));
        }
    }

    cplx value() { return at(std::vector<int>(2 * nvar_, 0)); }
    real step() const { return h_; }

    Derivative operator()(const WMono& m) {
        auto expansion = expand(m);
        int d = static_cast<int>(m.size());
        if (d == 0) return {value(), cfg_.func_eps * std::abs(value())};
        cplx v1 = combine(expansion, 1), v2 = combine(expansion, 2);
        real trunc = std::abs(v1 - v2) / (std::pow(real(2), real(cfg_.order)) - 1);
        real wsum = 0;
        for (auto& [alpha, c] : expansion) {
            real prod = 1;
            for (int a : alpha)
                if (a) {
                    real s = 0;
                    for (real w : detail::central_weights(a, cfg_.order)) s += std::abs(w);
                    prod *= s;
                }
            wsum += std::abs(c) * prod;
        }
        real eps = std::max(cfg_.func_eps, std::numeric_limits<real>::epsilon());
        real round = eps * std::max(std::abs(value()), real(1e-300L)) * wsum / std::pow(h_, real(d));
        return {v1, trunc + round};
    }

private:
    using Alpha = std::vector<int>;  // derivative counts per real variable

    std::map<Alpha, cplx> expand(const WMono& m) const {
        std::map<Alpha, cplx> out{{Alpha(2 * nvar_, 0), cplx(1)}};
        for (auto& f : m) {
            if (f.var < 0 || static_cast<std::size_t>(f.var) >= nvar_) throw input_error("derivative variable out of range");
            std::map<Alpha, cplx> next;
            for (auto& [a, c] : out) {
                Alpha re = a, im = a;
                re[2 * f.var]++;
                im[2 * f.var + 1]++;
                if (f.kind == WFactor::re) {
                    next[re] += c;
                } else {
                    real s = f.kind == WFactor::hol ? -1 : 1;  // d_w = (d_a - i d_b)/2
                    next[re] += c * cplx(0.5L);
                    next[im] += c * cplx(0, s * 0.5L);
                }
            }
            out = std::move(next);
        }
        return out;
    }

    cplx combine(const std::map<Alpha, cplx>& ex, int mult) {
        cplx s = 0;
        for (auto& [a, c] : ex) s += c * partial(a, mult);
        return s;
    }

    /// Tensor-product central difference with step mult * h.
    cplx partial(const Alpha& a, int mult) {
        std::vector<int> vars;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i]) vars.push_back(static_cast<int>(i));
        std::vector<const std::vector<real>*> W;
        std::vector<int> M;
        real denom = 1;
        for (int v : vars) {
            W.push_back(&detail::central_weights(a[v], cfg_.order));
            M.push_back(static_cast<int>(W.back()->size() / 2));
            denom *= std::pow(mult * h_, real(a[v]));
        }
        cplx s = 0;
        std::vector<int> idx(vars.size(), 0);
        while (true) {
            real w = 1;
            Alpha off(a.size(), 0);
            for (std::size_t t = 0; t < vars.size(); ++t) {
                w *= (*W[t])[idx[t]];
                off[vars[t]] = (idx[t] - M[t]) * mult;
            }
            if (w != 0) s += w * at(off);
            std::size_t t = 0;
            for (; t < vars.size(); ++t) {
                if (++idx[t] < static_cast<int>(W[t]->size())) break;
                idx[t] = 0;
            }
            if (t == vars.size()) break;
        }
        return s / denom;
    }

    cplx at(const Alpha& off) {
        auto it = cache_.find(off);
        if (it != cache_.end()) return it->second;
        Point q = p_;
        q.tau += cplx(off[0] * h_, off[1] * h_);
        for (std::size_t j = 0; j + 1 < nvar_; ++j) q.z[j] += cplx(off[2 * j + 2] * h_, off[2 * j + 3] * h_);
        cplx v;
        try {
            v = phi_(q);
        } catch (const std::domain_error& e) {
            throw std::domain_error(std::string("stencil point hits a singularity: ") + e.what());
        }
        cache_.emplace(off, v);
        return v;
    }

    Evaluatable phi_;
    Point p_;
    real h_;
    StencilConfig cfg_;
    std::size_t nvar_;
    std::map<Alpha, cplx> cache_;
};

/// Values of the requested Wirtinger monomials at p.
inline std::vector<Derivative> wirtinger_derivs(const Evaluatable& phi, const Point& p, const StencilConfig& cfg,
                                                const std::vector<WMono>& which) {
    int d = 0;
    for (auto& m : which) d = std::max(d, static_cast<int>(m.size()));
    real h = cfg.h > 0 ? cfg.h : std::pow(std::max(cfg.func_eps, std::numeric_limits<real>::epsilon()), 1 / real(cfg.order + std::max(d, 1))) * std::min(real(1), p.y());
    WirtingerTable t(phi, p, h, cfg);
    std::vector<Derivative> out;
    for (auto& m : which) out.push_back(t(m));
    return out;
}

// ------------------------------------------------------------- operators

enum class OpId { Xminus, Xplus, Yminus_e, Yplus_e, Laplacian_k, Casimir, HeisLaplacian_e, Heat, HeatE, Xi, XiE, XiHE };

inline std::string to_string(OpId id) {
    static const char* names[] = {"Xminus", "Xplus", "Yminus_e", "Yplus_e", "Laplacian_k", "Casimir",
                                  "HeisLaplacian_e", "Heat", "HeatE", "Xi", "XiE", "XiHE"};
    return names[static_cast<int>(id)];
}
inline OpId parse_op(const std::string& s) {
    for (int i = 0; i <= static_cast<int>(OpId::XiHE); ++i)
        if (to_string(static_cast<OpId>(i)) == s) return static_cast<OpId>(i);
    throw input_error("unknown operator '" + s + "'");
}

/// Reading of the d_u symbol in the Casimir operator.
enum class CasimirDu { real_part, holomorphic };

struct OperatorSpec {
    OpId id;
    real k = 0;
    Lattice L;
    RatVec e{};                // Yminus_e, Yplus_e, HeisLaplacian_e
    std::vector<RatVec> E{};   // HeatE, XiE, XiHE
    CasimirDu du = CasimirDu::real_part;

    /// Highest derivative order the operator uses.
    int order() const {
        switch (id) {
            case OpId::Casimir: return 4;
            case OpId::XiHE: return std::max<int>(1, static_cast<int>(E.size()));
            case OpId::Xminus: case OpId::Xplus: case OpId::Yminus_e: case OpId::Yplus_e: return 1;
            default: return 2;
        }
    }

    void validate() const {
        bool needs_e = id == OpId::Yminus_e || id == OpId::Yplus_e || id == OpId::HeisLaplacian_e;
        bool needs_E = id == OpId::HeatE || id == OpId::XiE || id == OpId::XiHE;
        if (needs_e) {
            L.check_dim(e);
            bool zero = true;
            for (auto& x : e) zero = zero && x == 0;
            if (zero) throw input_error(to_string(id) + ": e must be nonzero");
        }
        if (needs_E) {
            if (E.empty()) throw input_error(to_string(id) + ": needs a partial frame E");
            for (auto& x : E) L.check_dim(x);
            if (!linearly_independent(E)) throw input_error(to_string(id) + ": E must be linearly independent");
            if (det(detail::gram_of(L, E)) == 0) throw input_error(to_string(id) + ": L_E must be non-degenerate");
        }
        if (id == OpId::XiHE) {
            for (std::size_t i = 0; i < E.size(); ++i) {
                if (!(L.Q(E[i]) < 0)) throw input_error("XiHE: L must be negative on E");
                for (std::size_t j = 0; j < i; ++j)
                    if (L.B(E[i], E[j]) != 0) throw input_error("XiHE: E must be orthogonal");
            }
        }
    }
};

struct OpResult {
    cplx value;
    real err;    // propagated derivative error
    real scale;    // sum of |term|
    real h;
    real phi_abs;  // |phi(p)| under the same outer factor; floors scale when every term vanishes
};

namespace detail {

inline CMat pseudo_inverse_over_pi_i(const Lattice& L) {
    // L^{-1}_nd for Ł = 2 pi i L (paper-L input) = pi i G: G^+ / (pi i), with G^+ = (G + P)^{-1} - P, P onto the radical
    std::size_t n = L.rank();
    const RatMat& Pnd = L.nd_projector();
    RatMat GP = L.gram();
    RatMat P(n, RatVec(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            P[i][j] = (i == j ? Rat(1) : Rat(0)) - Pnd[i][j];
            GP[i][j] += P[i][j];
        }
    RatMat Gp = inverse(GP);
    CMat out(n, std::vector<cplx>(n));
    cplx pii(0, pi_v<real>());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i][j] = cplx(to_ld(Gp[i][j] - P[i][j])) / pii;
    return out;
}

/// E (E^T G E)^{-1} E^T / (pi i): the inverse of Ł restricted to span E.
inline CMat restricted_inverse_over_pi_i(const Lattice& L, const std::vector<RatVec>& E) {
    std::size_t n = L.rank(), r = E.size();
    auto inv = inverse(detail::gram_of(L, E));
    CMat out(n, std::vector<cplx>(n, cplx(0)));
    cplx pii(0, pi_v<real>());
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            Rat s = 0;
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < r; ++j) s += E[i][a] * inv[i][j] * E[j][b];
            out[a][b] = cplx(to_ld(s)) / pii;
        }
    return out;
}

inline std::vector<real> unit(const RatVec& e) {
    auto v = to_ld(e);
    real s = 0;
    for (auto x : v) s += x * x;
    s = std::sqrt(s);
    for (auto& x : v) x /= s;
    return v;
}

}  // namespace detail

/// Applies the operator at p, building the printed expression from Wirtinger derivatives.
inline OpResult apply_operator(const OperatorSpec& op, const Evaluatable& phi, const Point& p, const StencilConfig& cfg = {}) {
    op.validate();
    cfg.validate();
    const Lattice& L = op.L;
    const std::size_t N = L.rank();
    if (p.z.size() != N) throw input_error("point dimension differs from lattice rank");
    const real pi = pi_v<real>();
    const cplx I(0, 1);
    real y = p.y();
    int d = op.order();
    real h = cfg.h > 0 ? cfg.h
                       : std::pow(std::max(cfg.func_eps, std::numeric_limits<real>::epsilon()), 1 / real(cfg.order + d)) *
                             std::min(real(1), y);
    WirtingerTable D(phi, p, h, cfg);

    // pi_nd v
    auto vr = p.v();
    auto Pnd = detail::to_real_mat<real>(L.nd_projector());
    auto G = detail::to_real_mat<real>(L.gram());
    std::vector<real> pv(N, 0);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) pv[i] += Pnd[i][j] * vr[j];

    OpResult res{0, 0, 0, h, std::abs(D.value())};
    auto acc = [&](cplx c, const WMono& m) {
        if (c == cplx(0)) return;
        auto r = D(m);
        cplx t = c * r.value;
        res.value += t;
        res.err += std::abs(c) * r.err;
        res.scale += std::abs(t);
    };
    auto zb = [](std::size_t i) { return d_zbar(static_cast<int>(i)); };
    auto zh = [](std::size_t i) { return d_z(static_cast<int>(i)); };
    int Ni = static_cast<int>(N);
    auto Xminus = [&]() {
        acc(-2.0L * I * y * y, {d_taubar()});
        for (std::size_t i = 0; i < N; ++i) acc(-2.0L * I * y * pv[i], {zb(i)});
    };
    auto xi_tail = [&](const CMat& Li) {
        // -(i/2) Li[Y_-] with Y_- = -i y d_zbar
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) acc(0.5L * I * y * y * Li[i][j], {zb(i), zb(j)});
    };

    switch (op.id) {
        case OpId::Xminus: Xminus(); break;
        case OpId::Xplus: {
            acc(2.0L * I, {d_tau()});
            for (std::size_t i = 0; i < N; ++i) acc(2.0L * I * vr[i] / y, {zh(i)});
            real Lpv = 0;  // Ł[pv] = pi i pv^T G pv
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) Lpv += pv[i] * G[i][j] * pv[j];
            acc(2.0L * I * cplx(0, pi * Lpv) / (y * y) + cplx(op.k / y), {});
            break;
        }
        case OpId::Yminus_e: {
            auto e = detail::unit(op.e);
            for (std::size_t i = 0; i < N; ++i) acc(-I * y * e[i], {zb(i)});
            break;
        }
        case OpId::Yplus_e: {
            auto e = detail::unit(op.e);
            for (std::size_t i = 0; i < N; ++i) acc(I * e[i], {zh(i)});
            real eGpv = 0;
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) eGpv += e[i] * G[i][j] * pv[j];
            acc(2.0L * I / y * cplx(0, pi * eGpv), {});
            break;
        }
        case OpId::Laplacian_k:
            acc(cplx(4 * y * y), {d_tau(), d_taubar()});
            acc(-2.0L * op.k * I * y, {d_taubar()});
            break;
        case OpId::HeisLaplacian_e: {
            // y d_{z_e} d_{zbar_e} + 2 pi i (pv^T G e) d_{zbar_e}, e euclidean unit
            auto e = detail::unit(op.e);
            real pvGe = 0;
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) pvGe += pv[i] * G[i][j] * e[j];
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) acc(cplx(y * e[i] * e[j]), {zh(i), zb(j)});
            for (std::size_t j = 0; j < N; ++j) acc(2.0L * pi * I * pvGe * e[j], {zb(j)});
            break;
        }
        case OpId::Heat:
        case OpId::HeatE: {
            CMat Li = op.id == OpId::Heat ? detail::pseudo_inverse_over_pi_i(L) : detail::restricted_inverse_over_pi_i(L, op.E);
            acc(cplx(2), {d_tau()});
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) acc(-0.5L * Li[i][j], {zh(i), zh(j)});
            break;
        }
        case OpId::Xi:
        case OpId::XiE: {
            CMat Li = op.id == OpId::Xi ? detail::pseudo_inverse_over_pi_i(L) : detail::restricted_inverse_over_pi_i(L, op.E);
            Xminus();
            xi_tail(Li);
            real f = std::pow(y, op.k - 2 - real(N) / 2);
            res.value = std::conj(f * res.value);
            res.err *= f;
            res.scale *= f;
            res.phi_abs *= f;
            break;
        }
        case OpId::XiHE: {
            // y^{-r/2} exp(-4 pi L_E[v_E]/y) prod_e (-i y d_{zbar_e})
            std::size_t r = op.E.size();
            std::vector<std::vector<real>> units;
            for (auto& e : op.E) units.push_back(detail::unit(e));
            real QvE = 0;  // Q(v_E) = sum B(e, v)^2 / (4 Q(e)) for an orthogonal E
            for (auto& e : op.E) {
                auto er = to_ld(e);
                real Bev = 0;
                for (std::size_t i = 0; i < N; ++i)
                    for (std::size_t j = 0; j < N; ++j) Bev += er[i] * G[i][j] * vr[j];
                QvE += Bev * Bev / (4 * to_ld(L.Q(e)));
            }
            std::vector<std::size_t> idx(r, 0);
            while (true) {
                cplx c = 1;
                WMono m;
                for (std::size_t t = 0; t < r; ++t) {
                    c *= -I * y * units[t][idx[t]];
                    m.push_back(zb(idx[t]));
                }
                acc(c, m);
                std::size_t t = 0;
                for (; t < r; ++t) {
                    if (++idx[t] < N) break;
                    idx[t] = 0;
                }
                if (t == r) break;
            }
            real f = std::pow(y, -real(r) / 2) * std::exp(-4 * pi * QvE / y);
            res.value *= f;
            res.err *= f;
            res.scale *= f;
            res.phi_abs *= f;
            break;
        }
        case OpId::Casimir: {
            CMat Li = detail::pseudo_inverse_over_pi_i(L);
            real kap = op.k - real(N) / 2;
            auto U = [&](std::size_t j) { return op.du == CasimirDu::real_part ? d_u(static_cast<int>(j)) : d_z(static_cast<int>(j)); };
            // -2 Delta_{k - N/2}
            acc(cplx(-8 * y * y), {d_tau(), d_taubar()});
            acc(4.0L * kap * I * y, {d_taubar()});
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) {
                    acc(2 * y * y * Li[i][j], {d_taubar(), zh(i), zh(j)});
                    acc(2 * y * y * Li[i][j], {d_tau(), zb(i), zb(j)});
                }
            for (std::size_t i = 0; i < N; ++i) acc(cplx(-8 * y * pv[i]), {d_tau(), zb(i)});
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j)
                    for (std::size_t k = 0; k < N; ++k)
                        for (std::size_t l = 0; l < N; ++l) {
                            cplx c = -0.5L * y * y * Li[i][j] * Li[k][l];
                            acc(c, {zb(i), zb(j), zh(k), zh(l)});
                            acc(-c, {zb(i), zh(j), zb(k), zh(l)});
                        }
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j)
                    for (std::size_t k = 0; k < N; ++k) acc(2 * y * pv[i] * Li[j][k], {zb(i), zh(j), U(k)});
            for (std::size_t j = 0; j < N; ++j)
                for (std::size_t k = 0; k < N; ++k) acc(-0.5L * (2 * op.k - Ni + 1) * I * y * Li[j][k], {zb(j), U(k)});
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = 0; j < N; ++j) acc(cplx(2 * pv[i] * pv[j]), {zb(i), zb(j)});
            for (std::size_t i = 0; i < N; ++i) acc((2 * op.k - Ni - 1) * I * pv[i], {zb(i)});
            break;
        }
    }
    return res;
}

// ------------------------------------------------------- annihilation check

struct AnnihilationOptions {
    std::vector<real> sweep = {1, 0.5L, 0.25L};  // multiples of the base step
    real tol_factor = 1000;                        // pass if residual < factor * predicted error
    real rel_floor = 0;                            // optional absolute relative threshold
    real max_rel = 1e-4L;                          // a residual above this never passes
};

/// Relative residual |op phi| / max(scale, |phi|) across an h-sweep at each point.
inline VerificationReport check_annihilation(const OperatorSpec& op, const Evaluatable& phi, const std::vector<Point>& points,
                                             const StencilConfig& cfg = {}, const AnnihilationOptions& opt = {}) {
    VerificationReport rep;
    rep.suite = "annihilation:" + to_string(op.id);
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        CheckRecord c;
        c.name = to_string(op.id) + " at point " + std::to_string(pi);
        c.oracle = Oracle::structural;
        c.expected = 0;
        const Point& p = points[pi];
        c.inputs = {{"tau", {(double)p.tau.real(), (double)p.tau.imag()}}};
        real h0 = cfg.h > 0 ? cfg.h
                            : std::pow(std::max(cfg.func_eps, std::numeric_limits<real>::epsilon()),
                                       1 / real(cfg.order + op.order())) * std::min(real(1), p.y());
        nlohmann::json sweep = nlohmann::json::array();
        real best = std::numeric_limits<real>::infinity(), best_tol = 0;
        std::vector<real> rels;
        try {
            for (real f : opt.sweep) {
                StencilConfig c2 = cfg;
                c2.h = h0 * f;
                auto r = apply_operator(op, phi, p, c2);
                real scale = std::max({r.scale, r.phi_abs, real(1e-300L)});
                real rel = std::abs(r.value) / scale;
                real tol = std::max(opt.tol_factor * r.err / scale, opt.rel_floor);
                rels.push_back(rel);
                sweep.push_back({{"h", (double)c2.h}, {"residual", (double)rel}, {"predicted", (double)(r.err / scale)}});
                if (rel < best) {
                    best = rel;
                    best_tol = tol;
                }
            }
        } catch (const std::exception& e) {
            c.observed = std::string("error: ") + e.what();
            c.pass = false;
            rep.add(c);
            continue;
        }
        // convergence: residual decreases along the sweep until it reaches the tolerance
        bool converging = true;
        for (std::size_t i = 1; i < rels.size(); ++i)
            if (rels[i] > rels[i - 1] * 1.5L && rels[i - 1] > best_tol) converging = false;
        c.observed = (double)best;
        c.residual = (double)best;
        c.tolerance = (double)best_tol;
        c.certificates = {{"h_sweep", sweep}, {"converging", converging}};
        c.pass = best < best_tol && best < opt.max_rel && converging;
        rep.add(c);
    }
    return rep;
}

}  // namespace mjf
