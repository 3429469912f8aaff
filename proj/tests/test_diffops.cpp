#include "mjf/diffops.hpp"
#include "mjf/mu.hpp"
#include "mjf/theta.hpp"

#include <gtest/gtest.h>

using namespace mjf;
using C = cplx;

namespace {
const C I(0, 1);
const real PI = pi_v<real>();

Lattice rank1(long long g) { return Lattice::from_ints({{g}}, FormMode::gram); }

Point pt(C tau, std::vector<C> z) { return Point(tau, std::move(z)); }

// a(y) q^n zeta^r times the H^{H[e1]} profile for e1 = (1, 0) on paper-L diag(-1, 3/2)
struct FourierBlock {
    Lattice L{RatMat{{Rat(-1), Rat(0)}, {Rat(0), make_rat(3, 2)}}, FormMode::paper_L};
    real n = -1;
    std::vector<real> r{0.25L, 1.0L / 3};
    real nn() const { return n - (r[0] * r[0] / (4 * -1.0L) + r[1] * r[1] / (4 * 1.5L)); }
    Evaluatable make(std::function<real(real)> a) const {
        auto rr = r;
        real nv = n;
        return [a, rr, nv](const Point& p) {
            real y = p.y(), v0 = p.z[0].imag();
            C ph = C(nv) * p.tau + C(rr[0]) * p.z[0] + C(rr[1]) * p.z[1];
            real prof = erf_E<real>(std::sqrt(y) * (rr[0] - 2 * v0 / y));
            return C(a(y)) * e_of<real>(ph) * C(prof);
        };
    }
};
}  // namespace

TEST(Stencil, FornbergWeights) {
    auto& w1 = detail::central_weights(1, 4);
    ASSERT_EQ(w1.size(), 5u);
    std::vector<real> want{1.0L / 12, -2.0L / 3, 0, 2.0L / 3, -1.0L / 12};
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(w1[i], want[i], 1e-17L);
    auto& w2 = detail::central_weights(2, 2);
    ASSERT_EQ(w2.size(), 3u);
    EXPECT_NEAR(w2[0], 1, 1e-17L);
    EXPECT_NEAR(w2[1], -2, 1e-17L);
    EXPECT_EQ(detail::central_weights(4, 4).size(), 7u);
}

TEST(Stencil, WirtingerExamples) {
    Point p = pt(C(0.2L, 0.8L), {C(0.1L, 0.3L)});
    StencilConfig cfg;
    Evaluatable tau = [](const Point& q) { return q.tau; };
    auto d = wirtinger_derivs(tau, p, cfg, {{d_tau()}, {d_taubar()}});
    EXPECT_NEAR(std::abs(d[0].value - C(1)), 0, 1e-14L);
    EXPECT_NEAR(std::abs(d[1].value), 0, 1e-14L);
    Evaluatable q = [](const Point& x) { return e_of<real>(x.tau); };
    auto dq = wirtinger_derivs(q, p, cfg, {{d_tau()}});
    C want = C(0, 2 * PI) * e_of<real>(p.tau);
    EXPECT_LT(std::abs(dq[0].value - want), 1e-10L * std::abs(want));
    EXPECT_LT(std::abs(dq[0].value - want), 10 * dq[0].err + 1e-15L);
    Evaluatable mod2 = [](const Point& x) { return C(std::norm(x.tau)); };
    auto dm = wirtinger_derivs(mod2, p, cfg, {{d_tau()}, {d_tau(), d_taubar()}});
    EXPECT_LT(std::abs(dm[0].value - std::conj(p.tau)), 1e-12L);
    EXPECT_LT(std::abs(dm[1].value - C(1)), 1e-9L);
}

TEST(Stencil, ConvergesAtStencilOrder) {
    // d_z d_zbar of |z|^2 e^{z} ... use f = exp(sin z) conj(z)^2: d_z d_zbar f = 2 conj(z) cos z exp(sin z)
    Point p = pt(C(0.1L, 1.0L), {C(0.3L, 0.2L)});
    Evaluatable f = [](const Point& x) { C z = x.z[0]; return std::exp(std::sin(z)) * std::conj(z) * std::conj(z); };
    C z = p.z[0];
    C want = C(2) * std::conj(z) * std::cos(z) * std::exp(std::sin(z));
    for (int order : {2, 4}) {
        StencilConfig c1, c2;
        c1.order = c2.order = order;
        c1.h = 0.02L;
        c2.h = 0.01L;
        real e1 = std::abs(wirtinger_derivs(f, p, c1, {{d_z(0), d_zbar(0)}})[0].value - want);
        real e2 = std::abs(wirtinger_derivs(f, p, c2, {{d_z(0), d_zbar(0)}})[0].value - want);
        real ratio = e1 / e2, expect = std::pow(real(2), real(order));
        EXPECT_GT(ratio, expect * 0.7L) << order;
        EXPECT_LT(ratio, expect * 1.3L) << order;
    }
}

TEST(Stencil, DivisorProximityIsAnError) {
    auto L = rank1(2);
    Point p = pt(C(0, 1), {C(1e-3L, 0)});
    StencilConfig cfg;
    cfg.h = 1e-3L;
    cfg.divisors = {Divisor{{Rat(1)}, 0, 0, true, "z in Z tau + Z"}};
    Evaluatable one = [](const Point&) { return C(1); };
    EXPECT_THROW(apply_operator({OpId::Yminus_e, 1, L, {Rat(1)}}, one, p, cfg), std::domain_error);
    cfg.divisors.clear();
    EXPECT_NO_THROW(apply_operator({OpId::Yminus_e, 1, L, {Rat(1)}}, one, p, cfg));
}

TEST(Operators, HolomorphicInZIsKilledByYminusAndHeisenberg) {
    auto L = Lattice::from_ints({{2, 1}, {1, -2}}, FormMode::gram);
    Evaluatable f = [](const Point& x) { return std::exp(x.z[0] * x.z[1]) * std::sin(x.tau + x.z[0]); };
    std::vector<Point> pts{pt(C(0.1L, 0.9L), {C(0.2L, 0.1L), C(-0.1L, 0.3L)}), pt(C(-0.2L, 1.2L), {C(0.05L, -0.2L), C(0.3L, 0.1L)})};
    for (auto id : {OpId::Yminus_e, OpId::HeisLaplacian_e}) {
        auto rep = check_annihilation({id, 1, L, {Rat(1), Rat(1)}}, f, pts);
        EXPECT_TRUE(rep.pass()) << to_json(rep).dump();
    }
    // |z_e|^4 is not annihilated
    Evaluatable g = [](const Point& x) { return C(std::pow(std::norm(x.z[1]), real(2))); };
    auto bad = check_annihilation({OpId::HeisLaplacian_e, 1, L, {Rat(0), Rat(1)}}, g, pts);
    EXPECT_FALSE(bad.pass());
}

TEST(Operators, HeisenbergLaplacianKillsIndefiniteTheta) {
    auto L = Lattice::from_ints({{1, 0}, {0, -1}}, FormMode::paper_L);
    auto nf = normalize_frames(L, make_frame(L, {{Rat(0), Rat(1)}}), make_frame(L, {{Rat(1), Rat(1)}}));
    auto spec = make_theta_spec(L, nf.E.vectors, nf.Ep.vectors, {}, KernelMode::completed, Precision<real>(1e-18L));
    Evaluatable th = [spec](const Point& p) { return theta_indef_eval(spec, p).value; };
    std::vector<Point> pts{pt(C(0.1L, 0.9L), {C(0.13L, 0.21L), C(-0.07L, 0.37L)}),
                           pt(C(-0.35L, 1.3L), {C(0.3L, -0.29L), C(0.05L, 0.11L)}),
                           pt(C(0.45L, 0.75L), {C(-0.2L, 0.08L), C(0.4L, -0.17L)})};
    StencilConfig cfg;
    cfg.func_eps = 1e-17L;
    auto rep = check_annihilation({OpId::HeisLaplacian_e, 1, L, nf.E.vectors[0]}, th, pts, cfg);
    EXPECT_TRUE(rep.pass()) << to_json(rep).dump();
}

TEST(Operators, CasimirKillsDefiniteThetaNotControl) {
    auto L = Lattice::from_ints({{2, 0}, {0, 4}}, FormMode::gram);
    auto D = discriminant_group(L);
    std::vector<Point> pts{pt(C(0.1L, 0.9L), {C(0.13L, 0.21L), C(-0.07L, 0.17L)}),
                           pt(C(-0.3L, 1.1L), {C(0.3L, -0.2L), C(0.05L, 0.11L)})};
    for (std::size_t i : {std::size_t(0), D.order() - 1}) {
        auto rep_l = D.elements[i].rep;
        Evaluatable th = [L, rep_l](const Point& p) { return theta_definite<real>(L, rep_l, p.tau, p.z, Precision<real>(1e-19L)).value; };
        auto rep = check_annihilation({OpId::Casimir, 1, L}, th, pts);
        EXPECT_TRUE(rep.pass()) << to_json(rep).dump();
    }
    Evaluatable ctrl = [L](const Point& p) {
        return std::pow(p.y(), real(3)) * theta_definite<real>(L, {Rat(0), Rat(0)}, p.tau, p.z, Precision<real>(1e-19L)).value;
    };
    EXPECT_FALSE(check_annihilation({OpId::Casimir, 1, L}, ctrl, pts).pass());
}

TEST(Operators, CasimirFourierBlocksSelectRealDerivative) {
    FourierBlock fb;
    real k = 2.5L, kap = k - 1;
    real nn = fb.nn();
    auto harm = fb.make([=](real y) { return incomplete_gamma<real>(1 - kap, -4 * PI * nn * y, GammaKind::upper); });
    auto cube = fb.make([](real y) { return y * y * y; });
    std::vector<Point> pts{pt(C(0.13L, 0.9L), {C(0.21L, 0.37L), C(-0.3L, 0.11L)}), pt(C(-0.2L, 1.2L), {C(0.1L, -0.2L), C(0.25L, 0.05L)})};
    OperatorSpec cas{OpId::Casimir, k, fb.L};
    EXPECT_TRUE(check_annihilation(cas, harm, pts).pass());
    EXPECT_FALSE(check_annihilation(cas, cube, pts).pass());
    cas.du = CasimirDu::holomorphic;
    EXPECT_FALSE(check_annihilation(cas, harm, pts).pass());
    // the elliptic side: Delta_{k - N/2} a(y) q^{nn}
    Evaluatable lhs = [=](const Point& p) {
        return C(incomplete_gamma<real>(1 - kap, -4 * PI * nn * p.y(), GammaKind::upper)) * e_of<real>(C(nn) * p.tau);
    };
    EXPECT_TRUE(check_annihilation({OpId::Laplacian_k, kap, fb.L}, lhs, pts).pass());
}

TEST(Operators, DeltaHTransport) {
    // Delta^{H[e]} a(v_e^2/y) = [Delta_{1/2} a(y) e(L_e tau) / (y e(L_e tau))] at y -> v_e^2 / y
    auto L = Lattice::from_ints({{-2, 0}, {0, 4}}, FormMode::gram);
    real Le = -1;  // Q(e) for the unit e = (1, 0)
    std::vector<std::function<real(real)>> as{[](real t) { return std::exp(-t); }, [](real t) { return t * t + std::sin(t); }};
    for (auto& a : as) {
        Evaluatable lhs_f = [a](const Point& p) { real v = p.z[0].imag(); return C(a(v * v / p.y())); };
        for (auto [y, ve] : std::vector<std::pair<real, real>>{{0.9L, 0.4L}, {1.3L, -0.7L}}) {
            Point p = pt(C(0.1L, y), {C(0.2L, ve), C(0.1L, 0.3L)});
            auto L1 = apply_operator({OpId::HeisLaplacian_e, 0, L, {Rat(1), Rat(0)}}, lhs_f, p);
            real Y = ve * ve / y;
            Evaluatable rhs_f = [a, Le](const Point& q) { return C(a(q.y())) * e_of<real>(C(Le) * q.tau); };
            Point q = pt(C(0.1L, Y), {C(0), C(0)});
            auto R1 = apply_operator({OpId::Laplacian_k, 0.5L, L, {}}, rhs_f, q);
            C rhs = R1.value / (C(Y) * e_of<real>(C(Le) * q.tau));
            EXPECT_LT(std::abs(L1.value - rhs), 1e-6L * std::max(real(1), std::abs(rhs)));
        }
    }
}

TEST(Operators, XiHOfMuHatIsConjugateTheta) {
    auto L = rank1(-2);
    auto L2 = rank1(2);
    std::vector<Point> pts{pt(C(0.05L, 1.1L), {C(0.17L, 0.05L)}), pt(C(-0.2L, 0.9L), {C(0.31L, -0.12L)}),
                           pt(C(0.3L, 1.4L), {C(-0.1L, 0.2L)}), pt(C(0.0L, 1.0L), {C(0.4L, 0.1L)})};
    for (long long l : {0LL, 1LL}) {
        Evaluatable mu = [l](const Point& p) { return mu_hat_ml(1, l, p.tau, p.z[0], Precision<real>(1e-18L)).value; };
        std::vector<C> ratio;
        StencilConfig cfg;
        cfg.func_eps = 1e-17L;
        for (auto& p : pts) {
            auto r = apply_operator({OpId::XiHE, 1, L, {}, {{Rat(1)}}}, mu, p, cfg);
            C th = theta_definite<real>(L2, {make_rat(l, 2)}, p.tau, p.z).value;
            ratio.push_back(r.value / std::conj(th));
        }
        for (auto& c : ratio) EXPECT_LT(std::abs(c - ratio[0]), 1e-6L * std::abs(ratio[0])) << l;
    }
}

TEST(Operators, XiOperatorsConjugateAndScale) {
    auto L = rank1(2);
    Evaluatable f = [](const Point& p) { return C(p.y()) * std::conj(p.z[0]); };
    Point p = pt(C(0.1L, 0.8L), {C(0.2L, 0.3L)});
    // X_- f = -2iy(y * (i/2) z-bar-part ...) evaluated directly: d_taubar f = (i/2) conj z, d_zbar f = y
    C xm = -2.0L * I * p.y() * (p.y() * (I / C(2)) * std::conj(p.z[0]) + C(p.z[0].imag()) * C(p.y()));
    auto r = apply_operator({OpId::Xi, 1.5L, L}, f, p);
    C want = std::conj(std::pow(p.y(), 1.5L - 2 - 0.5L) * xm);  // d_zbar d_zbar f = 0
    EXPECT_LT(std::abs(r.value - want), 1e-10L);
    EXPECT_THROW(apply_operator({OpId::XiHE, 1, L, {}, {{Rat(1)}}}, f, p), input_error);  // L positive on E
    EXPECT_THROW(apply_operator({OpId::HeatE, 1, L, {}, {}}, f, p), input_error);
}

TEST(Operators, HeatKillsThetaOfDefiniteLattice) {
    // theta_definite is annihilated by 2 d_tau - (1/2) Ł^{-1}[d_z] with Ł = 2 pi i L = pi i G
    auto L = Lattice::from_ints({{2, -1}, {-1, 2}}, FormMode::gram);
    Evaluatable th = [L](const Point& p) { return theta_definite<real>(L, {make_rat(1, 3), make_rat(2, 3)}, p.tau, p.z, Precision<real>(1e-19L)).value; };
    std::vector<Point> pts{pt(C(0.1L, 0.9L), {C(0.13L, 0.21L), C(-0.07L, 0.17L)})};
    EXPECT_TRUE(check_annihilation({OpId::Heat, 1, L}, th, pts).pass());
    EXPECT_TRUE(check_annihilation({OpId::HeatE, 1, L, {}, {{Rat(1), Rat(0)}, {Rat(0), Rat(1)}}}, th, pts).pass());
}
