#pragma once
// Verification report records shared by diffops and verify.

#include <json.hpp>

#include <complex>
#include <cstdio>
#include <string>
#include <vector>

namespace mjf {

/// Where an "expected" value comes from.
enum class Oracle { quadrature, brute_force, exact_qseries, printed_formula, structural };

inline std::string to_string(Oracle o) {
    switch (o) {
        case Oracle::quadrature: return "quadrature";
        case Oracle::brute_force: return "brute-force enumeration";
        case Oracle::exact_qseries: return "exact q-series";
        case Oracle::printed_formula: return "printed formula";
        case Oracle::structural: return "structural identity";
    }
    return "unknown";
}

/// Complex number as {"re": "...", "im": "..."} decimal strings at full long double precision.
inline nlohmann::json complex_json(const std::complex<long double>& c) {
    auto f = [](long double x) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.21Lg", x);
        return std::string(buf);
    };
    return {{"re", f(c.real())}, {"im", f(c.imag())}};
}

inline std::complex<long double> complex_from_json(const nlohmann::json& j) {
    auto f = [](const nlohmann::json& v) { return v.is_string() ? std::stold(v.get<std::string>()) : v.get<long double>(); };
    if (j.is_array()) return {f(j.at(0)), f(j.at(1))};
    if (j.is_object()) return {f(j.at("re")), j.contains("im") ? f(j.at("im")) : 0.0L};
    return {f(j), 0.0L};
}

struct CheckRecord {
    std::string name;
    nlohmann::json inputs = nlohmann::json::object();
    nlohmann::json expected;
    nlohmann::json observed;
    double residual = 0;
    double tolerance = 0;
    Oracle oracle = Oracle::structural;
    nlohmann::json certificates = nlohmann::json::object();
    bool pass = false;
};

struct VerificationReport {
    std::string suite;
    std::vector<CheckRecord> checks;
    bool config_error = false;
    std::string message;
    nlohmann::json metadata = nlohmann::json::object();

    bool pass() const {
        if (config_error) return false;
        for (auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    void add(CheckRecord c) { checks.push_back(std::move(c)); }
};

inline nlohmann::json to_json(const CheckRecord& c) {
    return {{"name", c.name},         {"inputs", c.inputs},     {"expected", c.expected},
            {"observed", c.observed}, {"residual", c.residual}, {"tolerance", c.tolerance},
            {"oracle", to_string(c.oracle)}, {"certificates", c.certificates}, {"pass", c.pass}};
}

inline nlohmann::json to_json(const VerificationReport& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (auto& c : r.checks) checks.push_back(to_json(c));
    nlohmann::json j = {{"suite", r.suite}, {"pass", r.pass()}, {"checks", checks}, {"metadata", r.metadata}};
    if (r.config_error) j["config_error"] = r.message;
    return j;
}

}  // namespace mjf
