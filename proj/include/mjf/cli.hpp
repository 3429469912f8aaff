#pragma once
// Command-line front end. run_command is the whole program; main only forwards argv.
//
// Every leaf command collects one JSON input object. It starts from --from-json (a file,
// or "-" for stdin; an emitted result is accepted too and its "input" member is used),
// then each flag overrides the field of the same name with dashes read as underscores.
// Flag values are parsed as JSON when they parse, otherwise kept as strings.

#include "mjf/verify.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace mjf::cli {

using nlohmann::json;
namespace fs = std::filesystem;

/// Malformed input; the message starts with the offending field.
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void bad(const std::string& field, const std::string& msg) { throw usage_error(field + ": " + msg); }

// ------------------------------------------------------------ field readers

inline bool has(const json& in, const std::string& f) { return in.contains(f) && !in.at(f).is_null(); }

/// `path` names the field in messages when it sits inside another object.
inline const json& need(const json& in, const std::string& f, const std::string& path = "") {
    if (!in.is_object()) bad(path.empty() ? f : path, "expected an object");
    if (!has(in, f)) bad(path.empty() ? f : path, "missing");
    return in.at(f);
}

inline Rat rat_of(const json& v, const std::string& f) {
    try {
        if (v.is_number_integer()) return Rat(v.get<long long>());
        if (v.is_string()) return parse_rat(v.get<std::string>());
    } catch (const std::exception& e) {
        bad(f, e.what());
    }
    bad(f, "expected an integer or a \"p/q\" string");
}

inline RatVec ratvec_of(const json& v, const std::string& f) {
    if (!v.is_array()) bad(f, "expected an array of rationals");
    RatVec out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(rat_of(v[i], f + "[" + std::to_string(i) + "]"));
    return out;
}

inline RatMat ratmat_of(const json& v, const std::string& f) {
    if (!v.is_array() || v.empty()) bad(f, "expected a non-empty matrix (array of rows)");
    RatMat m;
    for (std::size_t i = 0; i < v.size(); ++i) m.push_back(ratvec_of(v[i], f + "[" + std::to_string(i) + "]"));
    for (auto& r : m)
        if (r.size() != m.size()) bad(f, "matrix is not square");
    return m;
}

inline std::vector<RatVec> vectors_of(const json& v, const std::string& f) {
    if (!v.is_array()) bad(f, "expected an array of vectors");
    std::vector<RatVec> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(ratvec_of(v[i], f + "[" + std::to_string(i) + "]"));
    return out;
}

inline real real_of(const json& v, const std::string& f) {
    try {
        if (v.is_number()) return v.get<real>();
        if (v.is_string()) {
            std::size_t pos = 0;
            real x = std::stold(v.get<std::string>(), &pos);
            if (pos == v.get<std::string>().size()) return x;
        }
    } catch (const std::exception&) {
    }
    bad(f, "expected a real number");
}

inline long long int_of(const json& v, const std::string& f) {
    if (v.is_number_integer()) return v.get<long long>();
    Rat r = rat_of(v, f);
    if (!is_integral(r)) bad(f, "expected an integer");
    return numerator(r).convert_to<long long>();
}

inline cplx cplx_of(const json& v, const std::string& f) {
    cplx c;
    try {
        c = complex_from_json(v);
    } catch (const std::exception&) {
        bad(f, "expected a complex number: [re, im], {\"re\": .., \"im\": ..} or a real");
    }
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) bad(f, "not finite");
    return c;
}

inline std::vector<cplx> cplx_list_of(const json& v, const std::string& f) {
    if (!v.is_array()) bad(f, "expected an array of complex numbers");
    std::vector<cplx> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(cplx_of(v[i], f + "[" + std::to_string(i) + "]"));
    return out;
}

inline json rats_json(const RatVec& v) {
    json a = json::array();
    for (auto& x : v) a.push_back(to_string(x));
    return a;
}
inline json rats_json(const std::vector<RatVec>& m) {
    json a = json::array();
    for (auto& r : m) a.push_back(rats_json(r));
    return a;
}
inline json cplx_list_json(const std::vector<cplx>& v) {
    json a = json::array();
    for (auto& c : v) a.push_back(complex_json(c));
    return a;
}

// ------------------------------------------------------------ config

struct CliConfig {
    real eps = 1e-12L;
    std::string format = "json";  // json | text
    fs::path cache_dir;
    bool cache_enabled = true;
};

/// --cache-dir, then MJF_CACHE_DIR, then ~/.cache/indef-theta-lab. No home directory disables caching.
inline void resolve_cache_dir(CliConfig& cfg, const std::string& flag) {
    if (!flag.empty()) cfg.cache_dir = flag;
    else if (const char* env = std::getenv("MJF_CACHE_DIR"); env && *env) cfg.cache_dir = env;
    else if (const char* home = std::getenv("HOME"); home && *home) cfg.cache_dir = fs::path(home) / ".cache" / "indef-theta-lab";
    else cfg.cache_enabled = false;
}

inline real eps_of(const json& in, real fallback) {
    real e = has(in, "eps") ? real_of(in.at("eps"), "eps") : fallback;
    if (!(e > 0) || e > 1e-3L) bad("eps", "must lie in (0, 1e-3]");
    return e;
}

// ------------------------------------------------------------ cache

/// FNV-1a, 64 bit; stable across platforms, which std::hash is not.
inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Content-addressed JSON files <key>.json holding {"schema","kind","input","eps","payload"}.
class Cache {
public:
    Cache(const CliConfig& cfg, std::ostream& err) : dir_(cfg.cache_dir), on_(cfg.cache_enabled), err_(err) {}

    bool enabled() const { return on_; }
    const fs::path& dir() const { return dir_; }

    static std::string key(const std::string& kind, const json& input) { return fnv1a_hex(kind + "\n" + input.dump()); }

    /// Entry computed at an eps no looser than the one requested. Unreadable entries warn and miss.
    std::optional<json> load(const std::string& kind, const json& input, std::optional<real> eps) {
        if (!on_) return std::nullopt;
        fs::path p = dir_ / (key(kind, input) + ".json");
        std::error_code ec;
        if (!fs::exists(p, ec)) return std::nullopt;
        try {
            std::ifstream f(p);
            json e = json::parse(f);
            if (e.at("schema") != "cache/1" || !e.contains("payload")) throw std::runtime_error("bad layout");
            if (e.at("kind") != kind || e.at("input") != input) return std::nullopt;  // hash collision
            if (eps && !(real_of(e.at("eps"), "eps") <= *eps)) return std::nullopt;   // too loose
            return e.at("payload");
        } catch (const std::exception&) {
            err_ << "warning: corrupt cache entry " << p.string() << " ignored, recomputing\n";
            return std::nullopt;
        }
    }

    /// Write-then-rename, so readers never see a partial file. Failure disables the cache.
    void store(const std::string& kind, const json& input, std::optional<real> eps, const json& payload) {
        if (!on_) return;
        json e{{"schema", "cache/1"}, {"kind", kind}, {"input", input}, {"payload", payload}};
        if (eps) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.21Lg", *eps);
            e["eps"] = buf;
        } else {
            e["eps"] = nullptr;
        }
        std::error_code ec;
        fs::create_directories(dir_, ec);
        std::string k = key(kind, input);
        std::random_device rd;
        fs::path tmp = dir_ / (k + ".tmp." + fnv1a_hex(std::to_string(rd()) + std::to_string(rd())));
        {
            std::ofstream f(tmp);
            f << e.dump();
            if (!f) {
                err_ << "warning: cache directory " << dir_.string() << " is not writable, caching disabled\n";
                on_ = false;
                fs::remove(tmp, ec);
                return;
            }
        }
        fs::rename(tmp, dir_ / (k + ".json"), ec);
        if (ec) {
            err_ << "warning: cache rename failed (" << ec.message() << "), caching disabled\n";
            fs::remove(tmp, ec);
            on_ = false;
        }
    }

    static bool ours(const fs::path& p) {
        std::string n = p.filename().string();
        bool hex16 = n.size() >= 16 && n.find_first_not_of("0123456789abcdef") >= 16;
        return hex16 && (p.extension() == ".json" || n.find(".tmp.") == 16);
    }

    json stats() const {
        std::size_t entries = 0;
        std::uintmax_t bytes = 0;
        std::error_code ec;
        if (fs::is_directory(dir_, ec))
            for (auto& de : fs::directory_iterator(dir_, ec))
                if (de.is_regular_file() && ours(de.path()) && de.path().extension() == ".json") {
                    ++entries;
                    bytes += de.file_size();
                }
        return {{"schema", "cache-stats/1"}, {"dir", dir_.string()}, {"enabled", on_}, {"entries", entries}, {"bytes", bytes}};
    }

    json clear() {
        std::size_t removed = 0;
        std::error_code ec;
        if (fs::is_directory(dir_, ec)) {
            std::vector<fs::path> victims;
            for (auto& de : fs::directory_iterator(dir_, ec))
                if (de.is_regular_file() && ours(de.path())) victims.push_back(de.path());
            for (auto& p : victims) removed += fs::remove(p, ec);
        }
        return {{"schema", "cache-clear/1"}, {"dir", dir_.string()}, {"removed", removed}};
    }

private:
    fs::path dir_;
    bool on_;
    std::ostream& err_;
};

// ------------------------------------------------------------ input decoding

inline Lattice lattice_of(const json& in) {
    RatMat g = ratmat_of(need(in, "gram"), "gram");
    FormMode mode = FormMode::gram;
    if (has(in, "mode")) {
        if (!in.at("mode").is_string()) bad("mode", "expected 'paper-L' or 'gram'");
        mode = parse_mode(in.at("mode").get<std::string>());
    }
    return Lattice(g, mode);
}

inline json lattice_json(const Lattice& L) { return {{"gram", rats_json(L.input())}, {"mode", to_string(L.mode())}}; }

inline KernelMode kernel_of(const json& in) {
    if (!has(in, "kernel")) return KernelMode::completed;
    auto k = in.at("kernel");
    if (k == "completed") return KernelMode::completed;
    if (k == "sgn_limit") return KernelMode::sgn_limit;
    bad("kernel", "expected 'completed' or 'sgn_limit'");
}

struct ThetaInput {
    ThetaSpec spec;
    json canon;  // normalized echo of the spec fields
};

inline ThetaInput theta_input(const json& in, real eps) {
    Lattice L = lattice_of(in);
    auto E = has(in, "E") ? vectors_of(in.at("E"), "E") : std::vector<RatVec>{};
    auto Ep = has(in, "Ep") ? vectors_of(in.at("Ep"), "Ep") : std::vector<RatVec>{};
    RatVec shift = has(in, "shift") ? ratvec_of(in.at("shift"), "shift") : RatVec(L.rank(), Rat(0));
    if (shift.size() != L.rank()) bad("shift", "length differs from the rank");
    for (auto* fr : {&E, &Ep})
        for (auto& v : *fr)
            if (v.size() != L.rank()) bad(fr == &E ? "E" : "Ep", "vector length differs from the rank");
    KernelMode km = kernel_of(in);
    auto spec = [&] {
        try {
            return make_theta_spec(L, E, Ep, shift, km, Precision<real>(eps));
        } catch (const std::domain_error& e) {
            bad("E/Ep", e.what());
        } catch (const std::invalid_argument& e) {
            bad("E/Ep", e.what());
        }
    };
    ThetaInput t{spec(), lattice_json(L)};
    t.canon["E"] = rats_json(E);
    t.canon["Ep"] = rats_json(Ep);
    t.canon["shift"] = rats_json(shift);
    t.canon["kernel"] = km == KernelMode::completed ? "completed" : "sgn_limit";
    return t;
}

inline Point point_of(const json& in, std::size_t rank, const std::string& where = "") {
    cplx tau = cplx_of(need(in, "tau", where + "tau"), where + "tau");
    if (!(tau.imag() > 0)) bad(where + "tau", "imaginary part must be positive");
    auto z = has(in, "z") ? cplx_list_of(in.at("z"), where + "z") : std::vector<cplx>{};
    if (z.size() != rank) bad(where + "z", "expected " + std::to_string(rank) + " entries");
    return Point(tau, z);
}

inline json point_json(const Point& p) { return {{"tau", complex_json(p.tau)}, {"z", cplx_list_json(p.z)}}; }

inline json eps_json(real e) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6Lg", e);
    return std::string(buf);
}

inline json certified_json(const CertC& c) {
    return {{"value", complex_json(c.value)},
            {"certificate", {{"radius", static_cast<double>(c.radius)}, {"tail", static_cast<double>(c.tail)}}}};
}

inline json theta_value_json(const ThetaValue& v) {
    return {{"value", complex_json(v.value)},
            {"certificate", {{"radius", static_cast<double>(v.cert.radius)}, {"tail", static_cast<double>(v.cert.tail)}, {"shells", v.cert.shells}}}};
}

// ------------------------------------------------------------ output

inline void render_generic(const json& j, std::ostream& out, const std::string& prefix = "");

inline void render_value(const std::string& name, const json& v, std::ostream& out) {
    if (v.is_object() && v.size() == 2 && v.contains("re") && v.contains("im") && v["re"].is_string())
        out << name << " = " << v["re"].get<std::string>() << " + " << v["im"].get<std::string>() << " i\n";
    else if (v.is_object()) render_generic(v, out, name + ".");
    else if (v.is_array() && !v.empty() && v[0].is_object())
        for (std::size_t i = 0; i < v.size(); ++i) render_value(name + "[" + std::to_string(i) + "]", v[i], out);
    else out << name << " = " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
}

/// One "path = value" line per leaf.
inline void render_generic(const json& j, std::ostream& out, const std::string& prefix) {
    for (auto& [k, v] : j.items()) render_value(prefix + k, v, out);
}

inline void emit(const json& j, const CliConfig& cfg, std::ostream& out) {
    if (cfg.format == "json") out << j.dump(2) << "\n";
    else render_generic(j, out);
}

// ------------------------------------------------------------ commands

inline int cmd_lattice_analyze(const json& in, const CliConfig& cfg, std::ostream& out) {
    Lattice L = lattice_of(in);
    auto s = L.signature();
    json r{{"schema", "lattice/1"}, {"input", lattice_json(L)}, {"rank", L.rank()}, {"det", to_string(L.det())},
           {"signature", {s.pos, s.neg, s.zero}}, {"degenerate", L.degenerate()}, {"integral", L.is_integral_gram()},
           {"even", L.is_even()}, {"radical", rats_json(L.radical())}};
    if (!L.degenerate() && L.is_integral_gram()) {
        auto D = discriminant_group(L);
        json inv = json::array();
        for (auto& x : D.invariants) inv.push_back(x.str());
        r["discriminant"] = {{"order", D.order()}, {"invariants", inv}};
    } else {
        r["discriminant"] = nullptr;
    }
    emit(r, cfg, out);
    return 0;
}

/// Looks the payload up, computes and stores on a miss, and records the outcome in "metadata".
/// A hit whose payload fails `check` counts as corrupt.
template <class F, class V>
json cached(Cache& cache, const std::string& kind, const json& key_input, std::optional<real> eps, F compute, V check, json& meta,
            std::ostream& err) {
    if (auto hit = cache.load(kind, key_input, eps)) {
        try {
            check(*hit);
            meta["cache"] = "hit";
            meta["cache_key"] = Cache::key(kind, key_input);
            return *hit;
        } catch (const std::exception&) {
            err << "warning: corrupt cache entry " << Cache::key(kind, key_input) << " ignored, recomputing\n";
        }
    }
    json payload = compute();
    cache.store(kind, key_input, eps, payload);
    meta["cache"] = cache.enabled() ? "miss" : "disabled";
    if (cache.enabled()) meta["cache_key"] = Cache::key(kind, key_input);
    return payload;
}

inline int cmd_theta(const std::string& sub, const json& in, const CliConfig& cfg, Cache& cache, std::ostream& out,
                     std::ostream& err) {
    real eps = eps_of(in, cfg.eps);
    auto t = theta_input(in, eps);
    const auto& L = t.spec.L;
    json echo = t.canon, meta = json::object(), r;
    if (sub == "qexp") {
        Rat order = rat_of(need(in, "order"), "order");
        if (!(order > 0)) bad("order", "must be positive");
        const json& tp = need(in, "torsion");
        TorsionPoint tor{ratvec_of(need(tp, "alpha", "torsion.alpha"), "torsion.alpha"),
                         ratvec_of(need(tp, "beta", "torsion.beta"), "torsion.beta")};
        if (tor.alpha.size() != L.rank()) bad("torsion.alpha", "length differs from the rank");
        if (tor.beta.size() != L.rank()) bad("torsion.beta", "length differs from the rank");
        echo["torsion"] = {{"alpha", rats_json(tor.alpha)}, {"beta", rats_json(tor.beta)}};
        echo["order"] = to_string(order);
        // exact: eps plays no part, so it stays out of the key
        json series = cached(
            cache, "theta-qexp", echo, std::nullopt, [&] { return to_json(holomorphic_part_qexp(t.spec, tor, order)); },
            [](const json& j) { series_from_json(j); }, meta, err);
        r = {{"schema", "theta-qexp/1"}, {"input", echo}, {"series", series}};
    } else {
        Point p = point_of(in, L.rank());
        echo.update(point_json(p));
        if (sub == "eval") {
            auto check = [](const json& j) { complex_from_json(j.at("value")), j.at("certificate").at("tail").get<double>(); };
            json v = cached(cache, "theta-eval", echo, eps, [&] { return theta_value_json(theta_indef_eval(t.spec, p)); }, check, meta, err);
            r = {{"schema", "theta-eval/1"}, {"input", echo}, {"value", v.at("value")}, {"certificate", v.at("certificate")}};
        } else {
            if (!L.is_even()) bad("gram", "components need an even lattice");
            json comps = cached(cache, "theta-components", echo, eps, [&] {
                auto D = discriminant_group(L);
                auto vals = theta_indef_components(t.spec, p);
                json a = json::array();
                for (std::size_t i = 0; i < vals.size(); ++i) {
                    json c = theta_value_json(vals[i]);
                    c["element"] = rats_json(D.elements[i].rep);
                    a.push_back(c);
                }
                return a;
            }, [&](const json& j) {
                if (!j.is_array() || j.size() != discriminant_group(L).order()) throw std::runtime_error("size");
                for (auto& c : j) complex_from_json(c.at("value"));
            }, meta, err);
            r = {{"schema", "theta-components/1"}, {"input", echo}, {"components", comps}};
        }
        r["input"]["eps"] = eps_json(eps);
    }
    r["metadata"] = meta;
    emit(r, cfg, out);
    return 0;
}

inline int cmd_mu(const std::string& sub, const json& in, const CliConfig& cfg, std::ostream& out) {
    real eps = eps_of(in, cfg.eps);
    Precision<real> prec(eps);
    cplx tau = cplx_of(need(in, "tau"), "tau");
    if (!(tau.imag() > 0)) bad("tau", "imaginary part must be positive");
    json echo{{"tau", complex_json(tau)}, {"eps", eps_json(eps)}};
    CertC c;
    std::string kind = sub == "residual" ? "splitting_residual" : (has(in, "kind") ? in.at("kind").get<std::string>() : "two_var");
    echo["kind"] = kind;
    if (kind == "two_var" || kind == "splitting_residual") {
        cplx u = cplx_of(need(in, "u"), "u"), v = cplx_of(need(in, "v"), "v");
        echo["u"] = complex_json(u);
        echo["v"] = complex_json(v);
        c = kind == "two_var" ? mu_two_var(tau, u, v, prec) : splitting_residual(tau, u, v, prec);
    } else if (kind == "mu_m") {
        long long m = int_of(need(in, "m"), "m");
        if (m <= 0) bad("m", "must be positive");
        cplx z1 = cplx_of(need(in, "z1"), "z1"), z2 = cplx_of(need(in, "z2"), "z2");
        echo.update({{"m", m}, {"z1", complex_json(z1)}, {"z2", complex_json(z2)}});
        c = mu_m_eval(static_cast<int>(m), tau, z1, z2, prec);
    } else if (kind == "hat_ml") {
        long long m = int_of(need(in, "m"), "m"), l = int_of(need(in, "l"), "l");
        if (m <= 0) bad("m", "must be positive");
        cplx z = cplx_of(need(in, "z"), "z");
        echo.update({{"m", m}, {"l", l}, {"z", complex_json(z)}});
        c = mu_hat_ml(static_cast<int>(m), l, tau, z, prec);
    } else if (kind == "hat_Ll") {
        Lattice L = lattice_of(in);
        auto E = vectors_of(need(in, "E"), "E");
        for (auto& v : E)
            if (v.size() != L.rank()) bad("E", "vector length differs from the rank");
        RatVec l = ratvec_of(need(in, "l"), "l");
        if (l.size() != L.rank()) bad("l", "length differs from the rank");
        auto z = cplx_list_of(need(in, "z"), "z");
        if (z.size() != L.rank()) bad("z", "expected " + std::to_string(L.rank()) + " entries");
        echo.update(lattice_json(L));
        echo.update({{"E", rats_json(E)}, {"l", rats_json(l)}, {"z", cplx_list_json(z)}});
        auto md = [&] {
            try {
                return make_mu_lattice_data(L, make_frame(L, E));
            } catch (const input_error& e) {
                bad("E", e.what());
            }
        };
        c = mu_hat_Ll(md(), l, tau, z, prec);
    } else {
        bad("kind", "expected two_var, mu_m, hat_ml or hat_Ll");
    }
    json r = certified_json(c);
    r["schema"] = sub == "residual" ? "mu-residual/1" : "mu-eval/1";
    r["input"] = echo;
    emit(r, cfg, out);
    return 0;
}

inline int cmd_op(const std::string& sub, const json& in, const CliConfig& cfg, std::ostream& out) {
    real eps = eps_of(in, cfg.eps);
    std::string target = has(in, "target") ? in.at("target").get<std::string>() : "theta";
    json echo{{"target", target}, {"eps", eps_json(eps)}};
    Evaluatable phi;
    std::optional<Lattice> L;
    if (target == "theta") {
        auto t = theta_input(in, eps);
        echo.update(t.canon);
        L = t.spec.L;
        phi = [spec = t.spec](const Point& p) { return theta_indef_eval(spec, p).value; };
    } else if (target == "mu_hat_ml") {
        long long m = int_of(need(in, "m"), "m"), l = int_of(need(in, "l"), "l");
        if (m <= 0) bad("m", "must be positive");
        echo.update({{"m", m}, {"l", l}});
        L = has(in, "gram") ? lattice_of(in) : Lattice(RatMat{{Rat(-2 * m)}}, FormMode::gram);
        echo.update(lattice_json(*L));
        if (L->rank() != 1) bad("gram", "mu_hat_ml has one elliptic variable");
        phi = [m, l, eps](const Point& p) { return mu_hat_ml(static_cast<int>(m), l, p.tau, p.z[0], Precision<real>(eps)).value; };
    } else {
        bad("target", "expected 'theta' or 'mu_hat_ml'");
    }
    OperatorSpec op{parse_op(need(in, "op").is_string() ? in.at("op").get<std::string>() : ""), 0, *L};
    echo["op"] = to_string(op.id);
    if (has(in, "k")) op.k = real_of(in.at("k"), "k");
    echo["k"] = static_cast<double>(op.k);
    if (has(in, "op_e")) op.e = ratvec_of(in.at("op_e"), "op_e"), echo["op_e"] = rats_json(op.e);
    if (has(in, "op_E")) op.E = vectors_of(in.at("op_E"), "op_E"), echo["op_E"] = rats_json(op.E);
    if (has(in, "du")) {
        auto d = in.at("du");
        if (d == "real_part") op.du = CasimirDu::real_part;
        else if (d == "holomorphic") op.du = CasimirDu::holomorphic;
        else bad("du", "expected 'real_part' or 'holomorphic'");
        echo["du"] = d;
    }
    op.validate();
    StencilConfig sc;
    sc.func_eps = std::max(eps, std::numeric_limits<real>::epsilon());
    if (has(in, "step")) sc.h = real_of(in.at("step"), "step"), echo["step"] = static_cast<double>(sc.h);
    if (has(in, "stencil_order")) sc.order = static_cast<int>(int_of(in.at("stencil_order"), "stencil_order"));
    echo["stencil_order"] = sc.order;
    sc.validate();

    if (sub == "apply") {
        Point p = point_of(in, L->rank());
        echo.update(point_json(p));
        auto res = apply_operator(op, phi, p, sc);
        json r{{"schema", "op-apply/1"}, {"input", echo}, {"value", complex_json(res.value)}, {"err", static_cast<double>(res.err)},
               {"scale", static_cast<double>(res.scale)}, {"h", static_cast<double>(res.h)}, {"phi_abs", static_cast<double>(res.phi_abs)}};
        emit(r, cfg, out);
        return 0;
    }
    std::vector<Point> pts;
    if (has(in, "points")) {
        auto& a = in.at("points");
        if (!a.is_array() || a.empty()) bad("points", "expected a non-empty array of {tau, z}");
        for (std::size_t i = 0; i < a.size(); ++i) pts.push_back(point_of(a[i], L->rank(), "points[" + std::to_string(i) + "]."));
    } else {
        pts.push_back(point_of(in, L->rank()));
    }
    json pj = json::array();
    for (auto& p : pts) pj.push_back(point_json(p));
    echo["points"] = pj;
    auto rep = check_annihilation(op, phi, pts, sc);
    json r = generate_report({rep});
    r["input"] = echo;
    if (cfg.format == "json") out << r.dump(2) << "\n";
    else out << render_text({rep});
    return exit_code({rep});
}

inline int cmd_verify(const std::vector<std::string>& ids_in, const json& in, const CliConfig& cfg, std::ostream& out) {
    std::vector<std::string> ids = ids_in;
    if (ids.empty() && has(in, "suites")) {
        if (!in.at("suites").is_array()) bad("suites", "expected an array of suite ids");
        for (auto& s : in.at("suites")) ids.push_back(s.get<std::string>());
    }
    if (ids.empty()) bad("suite", "missing (a suite id or 'all')");
    if (ids.size() == 1 && ids[0] == "all") ids = suite_ids();
    json params = has(in, "params") ? in.at("params") : json::object();
    if (!params.is_object()) bad("params", "expected a JSON object");
    for (const char* k : {"copies", "order"})
        if (has(in, k)) params[k] = in.at(k);
    real tol = has(in, "tol") ? real_of(in.at("tol"), "tol") : 0;
    if (tol < 0) bad("tol", "must be non-negative");
    auto reports = run_suites(ids, params, tol);
    if (cfg.format == "json") {
        json r = generate_report(reports);
        r["input"] = {{"suites", ids}, {"params", params}, {"tol", static_cast<double>(tol)}};
        out << r.dump(2) << "\n";
    } else {
        out << render_text(reports);
    }
    return exit_code(reports);
}

// ------------------------------------------------------------ dispatch

inline json read_json_source(const std::string& src) {
    json j;
    try {
        if (src == "-") j = json::parse(std::cin);
        else {
            std::ifstream f(src);
            if (!f) bad("from-json", "cannot open '" + src + "'");
            j = json::parse(f);
        }
    } catch (const json::exception& e) {
        bad("from-json", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) bad("from-json", "expected a JSON object");
    if (j.contains("input") && j["input"].is_object()) j = j["input"];
    return j;
}

inline json flag_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return text;
    }
}

inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Indefinite theta series, mu-functions and Jacobi-group operators"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    std::string eps_s, format, cache_dir, from_json;
    bool as_json = false, no_cache = false;
    std::map<std::string, std::string> fields;  // field -> raw flag text
    std::vector<std::string> positional;

    auto common = [&](CLI::App* c, bool with_cache) {
        c->add_option("--eps", eps_s, "Target accuracy in (0, 1e-3]");
        c->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "text"}));
        c->add_flag("--json", as_json, "Same as --format json");
        c->add_option("--from-json", from_json, "Input JSON file, or - for stdin");
        if (with_cache) {
            c->add_option("--cache-dir", cache_dir, "Cache directory (overrides MJF_CACHE_DIR)");
            c->add_flag("--no-cache", no_cache, "Bypass the cache");
        }
    };
    auto field = [&](CLI::App* c, const std::string& flag, const std::string& help) {
        std::string name = flag;
        for (auto& ch : name)
            if (ch == '-') ch = '_';
        c->add_option_function<std::string>("--" + flag, [&fields, name](const std::string& v) { fields[name] = v; }, help);
    };
    auto theta_fields = [&](CLI::App* c) {
        field(c, "gram", "Matrix, e.g. [[3,4],[4,3]]");
        field(c, "mode", "paper-L or gram");
        field(c, "E", "Frame E, e.g. [[-3,4]]");
        field(c, "Ep", "Frame E'");
        field(c, "shift", "Shift of the summation lattice");
        field(c, "kernel", "completed or sgn_limit");
    };
    auto point_fields = [&](CLI::App* c) {
        field(c, "tau", "tau as [re, im]");
        field(c, "z", "z as [[re, im], ...]");
    };

    auto* lat = app.add_subcommand("lattice", "Lattice invariants")->require_subcommand(1);
    auto* lat_an = lat->add_subcommand("analyze", "Rank, determinant, signature, discriminant group");
    common(lat_an, false);
    field(lat_an, "gram", "Matrix");
    lat_an->add_option_function<std::string>("--inline", [&](const std::string& v) { fields["gram"] = v; }, "Matrix, e.g. [[3,4],[4,3]]");
    field(lat_an, "mode", "paper-L or gram");

    auto* th = app.add_subcommand("theta", "Indefinite theta series")->require_subcommand(1);
    auto* th_eval = th->add_subcommand("eval", "Value at (tau, z)");
    auto* th_comp = th->add_subcommand("components", "One value per discriminant element");
    auto* th_q = th->add_subcommand("qexp", "Exact q-expansion of the holomorphic part at a torsion point");
    for (auto* c : {th_eval, th_comp, th_q}) {
        common(c, true);
        theta_fields(c);
    }
    point_fields(th_eval);
    point_fields(th_comp);
    field(th_q, "torsion", "{\"alpha\": [...], \"beta\": [...]}");
    field(th_q, "order", "Truncation order, e.g. 10 or 21/2");

    auto* mu = app.add_subcommand("mu", "mu-function family")->require_subcommand(1);
    auto* mu_eval = mu->add_subcommand("eval", "two_var, mu_m, hat_ml or hat_Ll");
    auto* mu_res = mu->add_subcommand("residual", "Splitting residual at (tau, u, v)");
    for (auto* c : {mu_eval, mu_res}) {
        common(c, false);
        for (const char* f : {"tau", "u", "v"}) field(c, f, "");
    }
    for (const char* f : {"kind", "m", "l", "z", "z1", "z2", "gram", "mode", "E"}) field(mu_eval, f, "");

    auto* opc = app.add_subcommand("op", "Differential operators")->require_subcommand(1);
    auto* op_apply = opc->add_subcommand("apply", "Operator value at one point");
    auto* op_check = opc->add_subcommand("check", "Annihilation check over points with an h-sweep");
    for (auto* c : {op_apply, op_check}) {
        common(c, false);
        theta_fields(c);
        point_fields(c);
        for (const char* f : {"op", "k", "op-e", "op-E", "du", "target", "m", "l", "step", "stencil-order"}) field(c, f, "");
    }
    field(op_check, "points", "[{\"tau\": .., \"z\": [..]}, ...]");

    auto* ver = app.add_subcommand("verify", "Verification suites");
    common(ver, false);
    ver->add_option("suite", positional, "Suite ids, or 'all'");
    for (const char* f : {"copies", "order", "params", "tol"}) field(ver, f, "");

    auto* cache = app.add_subcommand("cache", "Coefficient cache")->require_subcommand(1);
    auto* c_clear = cache->add_subcommand("clear", "Remove cache entries");
    auto* c_stats = cache->add_subcommand("stats", "Entry count and size");
    for (auto* c : {c_clear, c_stats}) {
        c->add_option("--cache-dir", cache_dir, "Cache directory");
        c->add_option("--format", format)->check(CLI::IsMember({"json", "text"}));
        c->add_flag("--json", as_json);
    }

    std::vector<std::string> argv_s{"mjf"};
    argv_s.insert(argv_s.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_s) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        CliConfig cfg;
        cfg.format = ver->parsed() ? "text" : "json";
        if (!format.empty()) cfg.format = format;
        if (as_json) cfg.format = "json";
        resolve_cache_dir(cfg, cache_dir);
        if (no_cache) cfg.cache_enabled = false;
        if (!eps_s.empty()) cfg.eps = eps_of(json{{"eps", eps_s}}, cfg.eps);
        Cache cch(cfg, err);

        json in = from_json.empty() ? json::object() : read_json_source(from_json);
        for (auto& [k, v] : fields) in[k] = flag_value(v);
        if (!eps_s.empty()) in["eps"] = eps_s;

        if (lat_an->parsed()) return cmd_lattice_analyze(in, cfg, out);
        if (th_eval->parsed()) return cmd_theta("eval", in, cfg, cch, out, err);
        if (th_comp->parsed()) return cmd_theta("components", in, cfg, cch, out, err);
        if (th_q->parsed()) return cmd_theta("qexp", in, cfg, cch, out, err);
        if (mu_eval->parsed()) return cmd_mu("eval", in, cfg, out);
        if (mu_res->parsed()) return cmd_mu("residual", in, cfg, out);
        if (op_apply->parsed()) return cmd_op("apply", in, cfg, out);
        if (op_check->parsed()) return cmd_op("check", in, cfg, out);
        if (ver->parsed()) return cmd_verify(positional, in, cfg, out);
        if (c_clear->parsed() || c_stats->parsed()) {
            if (cfg.cache_dir.empty()) bad("cache-dir", "no cache directory (set --cache-dir, MJF_CACHE_DIR or HOME)");
            emit(c_clear->parsed() ? cch.clear() : cch.stats(), cfg, out);
            return 0;
        }
        err << "error: no command\n";
        return 2;
    } catch (const usage_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const input_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        err << "error: malformed input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace mjf::cli
