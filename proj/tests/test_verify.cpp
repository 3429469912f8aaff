#include "mjf/verify.hpp"

#include <gtest/gtest.h>

using namespace mjf;

namespace {
const CheckRecord& find(const VerificationReport& r, const std::string& prefix) {
    for (auto& c : r.checks)
        if (c.name.rfind(prefix, 0) == 0) return c;
    throw std::runtime_error("no check " + prefix);
}
}  // namespace

TEST(Verify, Splitting) {
    auto r = check_identity(IdentityId::splitting);
    EXPECT_EQ(r.checks.size(), 6u);
    EXPECT_TRUE(r.pass()) << to_json(r).dump(1);
}

TEST(Verify, GzProductStrictFormHoldsPrintedFormDoesNot) {
    auto r = check_identity(IdentityId::gz_product, {{"copies", 1}, {"order", 10}});
    ASSERT_FALSE(r.config_error) << r.message;
    EXPECT_FALSE(find(r, "printed series").pass);
    EXPECT_TRUE(find(r, "strict-sign series").pass);
    EXPECT_TRUE(find(r, "product").pass);
    // the origin term alone separates the two forms
    auto printed = gz_core_series(Rat(3), false), strict = gz_core_series(Rat(3), true);
    EXPECT_TRUE(printed.coefficient(Rat(0)) == Cyclo(2));
    EXPECT_TRUE(strict.coefficient(Rat(0)) == Cyclo(1));
}

TEST(Verify, GzProductTwoCopies) {
    auto r = check_identity(IdentityId::gz_product, {{"copies", 2}, {"order", 3}});
    EXPECT_TRUE(find(r, "strict-sign series").pass);
    EXPECT_TRUE(find(r, "product").pass);
}

TEST(Verify, MockThetaF0) {
    auto r = check_identity(IdentityId::mock_theta_F0, {{"order", 20}});
    EXPECT_TRUE(r.pass()) << to_json(r).dump(1);
    EXPECT_EQ(find(r, "frame sign").observed["same_cone"], false);
    EXPECT_GE(find(r, "holomorphic part").certificates["nonzero_coefficients"].get<int>(), 8);
}

TEST(Verify, F0OracleFirstCoefficients) {
    // F0 = 1 + q + q^3 + q^4 + q^5 + q^7 + q^8 + 2 q^9 + ...
    auto f = mock_theta_F0_eulerian(10);
    std::vector<long long> want{1, 1, 0, 1, 1, 1, 0, 2, 1, 2};
    for (long long n = 0; n < 10; ++n) EXPECT_TRUE(f.coefficient(Rat(n)) == Cyclo(want[n])) << n;
}

TEST(Verify, EfunctionAndProps) {
    for (auto id : {IdentityId::efunction, IdentityId::prop_deltaH, IdentityId::prop_casimir_fourier, IdentityId::prop5_xi_image,
                    IdentityId::heisenberg_invariance}) {
        auto r = check_identity(id);
        EXPECT_TRUE(r.pass()) << to_json(r).dump(1);
        EXPECT_FALSE(r.checks.empty());
    }
}

TEST(Verify, ModularityDefiniteAndWrongWeight) {
    EXPECT_TRUE(modularity_theta_definite().pass());
    auto L = Lattice::from_ints({{2, -1}, {-1, 2}}, FormMode::gram);
    auto D = discriminant_group(L);
    VectorEvaluatable phi = [L, D](const Point& p) {
        std::vector<cplx> out;
        for (auto& el : D.elements) out.push_back(theta_definite<real>(L, el.rep, p.tau, p.z).value);
        return out;
    };
    auto bad = check_modularity(phi, {2, 0}, L, {weil_representation(L, D, WeilGen::S)}, {JacobiElement::S(2)},
                                modularity_points(), 1e-8L, ModularityMode::exact);
    EXPECT_FALSE(bad.pass());
    // T only changes phases, so the moduli agree at any weight
    auto proj = check_modularity(phi, {2, 0}, L, {weil_representation(L, D, WeilGen::T)}, {JacobiElement::T(2)},
                                 modularity_points(), 1e-8L, ModularityMode::projective);
    EXPECT_TRUE(proj.pass());
}

TEST(Verify, ModularityIndefinite) {
    auto r = modularity_theta_indef();
    EXPECT_TRUE(r.pass()) << render_text({r});
    EXPECT_EQ(r.checks.size(), 6u);
    EXPECT_FALSE(modularity_theta_indef(1e-6L, 2).pass());
}

TEST(Verify, ReportAggregation) {
    auto empty = generate_report({});
    EXPECT_EQ(empty["schema"], "verify/1");
    EXPECT_EQ(empty["pass"], true);
    EXPECT_EQ(empty["exit_code"], 0);
    VerificationReport ok{"a", {}, false, "", {}}, bad{"b", {}, false, "", {}}, cfg{"c", {}, true, "broken", {}};
    CheckRecord f;
    f.name = "x";
    bad.add(f);
    EXPECT_EQ(exit_code({ok, bad}), 1);
    EXPECT_EQ(exit_code({ok, bad, cfg}), 2);
    auto j = generate_report({bad, ok});
    EXPECT_EQ(j["suites"][0]["suite"], "b");
    EXPECT_EQ(j["suites"][1]["suite"], "a");
    EXPECT_EQ(run_suite("nonsense").config_error, true);
    EXPECT_TRUE(check_identity(IdentityId::gz_product, {{"copies", "x"}}).config_error);
}

TEST(Verify, DeterministicJson) {
    auto a = generate_report(run_suites({"splitting", "efunction"})).dump();
    auto b = generate_report(run_suites({"splitting", "efunction"})).dump();
    EXPECT_EQ(a, b);
}
