#pragma once
// Truncated Puiseux series in q with optional monomial zeta exponents.
// Sum of c * q^n * zeta^r over a finite support, plus O(q^order).

#include "mjf/cyclo.hpp"
#include "mjf/specfun.hpp"

#include <json.hpp>

#include <optional>

namespace mjf {

struct Monomial {
    Rat n;                       // q-exponent
    std::vector<long long> r;    // zeta-exponents, empty for pure q-series
    friend bool operator<(const Monomial& a, const Monomial& b) {
        if (a.n != b.n) return a.n < b.n;
        return a.r < b.r;
    }
    friend bool operator==(const Monomial& a, const Monomial& b) { return a.n == b.n && a.r == b.r; }
};

namespace detail {
template <class C>
inline bool coef_zero(const C& c) {
    if constexpr (std::is_same_v<C, Cyclo>) return c.is_zero();
    else return c == C(0);
}
template <class R, class C>
inline std::complex<R> coef_complex(const C& c) {
    if constexpr (std::is_same_v<C, Cyclo>) return c.template to_complex<R>();
    else return std::complex<R>(c);
}
}  // namespace detail

/// Coef is Cyclo (exact mode) or std::complex<R>.
/// order == nullopt means the series is an exact finite sum.
template <class Coef>
class QSeries {
public:
    using Terms = std::map<Monomial, Coef>;

    QSeries() = default;
    explicit QSeries(std::size_t nz, std::optional<Rat> order = std::nullopt) : nz_(nz), order_(order) {}

    static QSeries constant(const Coef& c, std::optional<Rat> order = std::nullopt, std::size_t nz = 0) {
        QSeries s(nz, order);
        s.add_term(Rat(0), std::vector<long long>(nz, 0), c);
        return s;
    }
    static QSeries monomial(const Rat& n, const Coef& c, std::optional<Rat> order = std::nullopt) {
        QSeries s(0, order);
        s.add_term(n, {}, c);
        return s;
    }

    std::size_t nz() const { return nz_; }
    const std::optional<Rat>& order() const { return order_; }
    const Terms& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    /// Adds c q^n zeta^r; silently drops terms at or beyond the order.
    void add_term(const Rat& n, std::vector<long long> r, const Coef& c) {
        if (r.size() != nz_) throw input_error("zeta exponent has wrong length");
        if (order_ && n >= *order_) return;
        if (detail::coef_zero(c)) return;
        Monomial m{n, std::move(r)};
        auto it = terms_.find(m);
        if (it == terms_.end()) {
            terms_.emplace(std::move(m), c);
            return;
        }
        it->second = it->second + c;
        if (detail::coef_zero(it->second)) terms_.erase(it);
    }
    void add_term(const Rat& n, const Coef& c) { add_term(n, std::vector<long long>(nz_, 0), c); }

    /// Lowest exponent present; the order for an empty truncated series.
    std::optional<Rat> valuation() const {
        if (!terms_.empty()) return terms_.begin()->first.n;
        return order_;
    }

    /// lcm of the exponent denominators.
    Int denom() const {
        Int d = 1;
        for (auto& [m, c] : terms_) d = boost::multiprecision::lcm(d, denominator(m.n));
        if (order_) d = boost::multiprecision::lcm(d, denominator(*order_));
        return d;
    }

    /// Coefficient of q^n zeta^r; throws past the truncation order.
    Coef coefficient(const Rat& n, const std::vector<long long>& r = {}) const {
        if (order_ && n >= *order_) throw std::out_of_range("beyond truncation");
        std::vector<long long> rr = r.empty() ? std::vector<long long>(nz_, 0) : r;
        auto it = terms_.find(Monomial{n, rr});
        return it == terms_.end() ? Coef(0) : it->second;
    }

    QSeries truncated(const Rat& ord) const {
        std::optional<Rat> o = order_ && *order_ < ord ? order_ : std::optional<Rat>(ord);
        QSeries s(nz_, o);
        for (auto& [m, c] : terms_) s.add_term(m.n, m.r, c);
        return s;
    }

    /// Multiplies by q^a.
    QSeries shifted(const Rat& a) const {
        QSeries s(nz_, order_ ? std::optional<Rat>(*order_ + a) : std::nullopt);
        for (auto& [m, c] : terms_) s.add_term(m.n + a, m.r, c);
        return s;
    }

    /// q -> q^k for positive rational k.
    QSeries dilated(const Rat& k) const {
        if (k <= 0) throw input_error("dilation must be positive");
        QSeries s(nz_, order_ ? std::optional<Rat>(*order_ * k) : std::nullopt);
        for (auto& [m, c] : terms_) s.add_term(m.n * k, m.r, c);
        return s;
    }

    friend QSeries operator+(const QSeries& a, const QSeries& b) {
        check_compat(a, b);
        QSeries s(a.nz_, min_order(a.order_, b.order_));
        for (auto& [m, c] : a.terms_) s.add_term(m.n, m.r, c);
        for (auto& [m, c] : b.terms_) s.add_term(m.n, m.r, c);
        return s;
    }
    friend QSeries operator-(const QSeries& a) {
        QSeries s(a.nz_, a.order_);
        for (auto& [m, c] : a.terms_) s.add_term(m.n, m.r, Coef(0) - c);
        return s;
    }
    friend QSeries operator-(const QSeries& a, const QSeries& b) { return a + (-b); }
    friend QSeries operator*(const Coef& k, const QSeries& a) {
        QSeries s(a.nz_, a.order_);
        for (auto& [m, c] : a.terms_) s.add_term(m.n, m.r, k * c);
        return s;
    }
    friend QSeries operator*(const QSeries& a, const QSeries& b) {
        check_compat(a, b);
        std::optional<Rat> o;
        auto va = a.valuation(), vb = b.valuation();
        if (a.order_ && vb) o = *a.order_ + *vb;
        if (b.order_ && va) o = min_order(o, *b.order_ + *va);
        QSeries s(a.nz_, o);
        for (auto& [ma, ca] : a.terms_)
            for (auto& [mb, cb] : b.terms_) {
                Rat n = ma.n + mb.n;
                if (o && n >= *o) break;  // b's terms are sorted by exponent
                std::vector<long long> r(a.nz_);
                for (std::size_t i = 0; i < a.nz_; ++i) r[i] = ma.r[i] + mb.r[i];
                s.add_term(n, std::move(r), ca * cb);
            }
        return s;
    }

    /// Coefficientwise equality of the stored supports and orders.
    friend bool operator==(const QSeries& a, const QSeries& b) {
        if (a.nz_ != b.nz_ || a.order_ != b.order_ || a.terms_.size() != b.terms_.size()) return false;
        auto it = b.terms_.begin();
        for (auto& [m, c] : a.terms_) {
            if (!(m == it->first) || !detail::coef_zero(c - it->second)) return false;
            ++it;
        }
        return true;
    }

    template <class R = real>
    QSeries<std::complex<R>> to_complex() const {
        QSeries<std::complex<R>> s(nz_, order_);
        for (auto& [m, c] : terms_) s.add_term(m.n, m.r, detail::coef_complex<R>(c));
        return s;
    }

    /// Value at (tau, z). The tail is an estimate: the last retained unit shell
    /// of exponents, carried to the order and continued geometrically.
    template <class R = real>
    Certified<std::complex<R>, R> eval(std::complex<R> tau, const std::vector<std::complex<R>>& z = {}) const {
        if (tau.imag() <= 0) throw std::domain_error("Im tau must be positive");
        if (!z.empty() && z.size() != nz_) throw input_error("wrong number of elliptic variables");
        std::complex<R> s = 0;
        R shell = 0;
        Rat top = terms_.empty() ? Rat(0) : terms_.rbegin()->first.n;
        for (auto& [m, c] : terms_) {
            std::complex<R> ph = tau * std::complex<R>(static_cast<R>(to_ld(m.n)));
            for (std::size_t i = 0; i < nz_ && !z.empty(); ++i) ph += z[i] * std::complex<R>(R(m.r[i]));
            std::complex<R> t = detail::coef_complex<R>(c) * e_of<R>(ph);
            s += t;
            if (top - m.n < 1) shell += std::abs(t);
        }
        R tail = 0;
        if (order_ && !terms_.empty()) {
            R qabs = std::exp(-2 * pi_v<R>() * tau.imag());
            R gap = static_cast<R>(to_ld(*order_ - top));
            tail = shell * std::pow(qabs, gap) / (1 - qabs);
        }
        return {s, tail, tail};
    }

private:
    static std::optional<Rat> min_order(const std::optional<Rat>& a, const std::optional<Rat>& b) {
        if (!a) return b;
        if (!b) return a;
        return *a < *b ? a : b;
    }
    static void check_compat(const QSeries& a, const QSeries& b) {
        if (a.nz_ != b.nz_) throw input_error("variable mismatch between series");
    }

    std::size_t nz_ = 0;
    std::optional<Rat> order_;
    Terms terms_;
};

using ExactSeries = QSeries<Cyclo>;
using ComplexSeries = QSeries<std::complex<real>>;

enum class CombineOp { add, mul, scale };

template <class Coef>
QSeries<Coef> series_combine(const QSeries<Coef>& a, const QSeries<Coef>& b, CombineOp op) {
    switch (op) {
        case CombineOp::add: return a + b;
        case CombineOp::mul: return a * b;
        case CombineOp::scale: {
            // b must be a constant
            for (auto& [m, c] : b.terms())
                if (m.n != 0) throw input_error("scale expects a constant series");
            return b.coefficient(Rat(0)) * a;
        }
    }
    throw std::logic_error("unknown combine op");
}

/// prod_{n>=1} (1 - q^n) + O(q^order).
inline ExactSeries euler_product(const Rat& order) {
    ExactSeries s = ExactSeries::constant(Cyclo(1), order);
    for (long long n = 1; Rat(n) < order; ++n) {
        ExactSeries f = ExactSeries::constant(Cyclo(1), order);
        f.add_term(Rat(n), Cyclo(-1));
        s = s * f;
    }
    return s;
}

// ---- JSON: {"denom":d,"terms":{"numerator":"coef"},"order":numerator} ----
// zeta exponents, when present, go in "zeta":{"numerator":[[r...],...]} parallel lists.

inline nlohmann::json to_json(const ExactSeries& s) {
    Int d = s.denom();
    nlohmann::json terms = nlohmann::json::object(), zeta = nlohmann::json::object();
    for (auto& [m, c] : s.terms()) {
        std::string key = to_string(Rat(m.n * Rat(d)));
        if (s.nz()) {
            // several zeta monomials may share an exponent
            terms[key].push_back(c.str());
            zeta[key].push_back(m.r);
        } else {
            terms[key] = c.str();
        }
    }
    nlohmann::json j{{"denom", d.convert_to<long long>()}, {"terms", terms}};
    if (s.order()) j["order"] = numerator(Rat(*s.order() * Rat(d))).convert_to<long long>();
    else j["order"] = nullptr;
    if (s.nz()) {
        j["zeta"] = zeta;
        j["nz"] = s.nz();
    }
    return j;
}

inline ExactSeries series_from_json(const nlohmann::json& j) {
    if (!j.contains("denom") || !j.contains("terms")) throw input_error("series JSON needs denom and terms");
    auto rat_field = [](const nlohmann::json& v) {
        return v.is_string() ? parse_rat(v.get<std::string>()) : Rat(v.get<long long>());
    };
    Rat d = rat_field(j["denom"]);
    if (d <= 0 || !is_integral(d)) throw input_error("denom must be a positive integer");
    std::size_t nz = j.value("nz", std::size_t(0));
    std::optional<Rat> ord;
    if (j.contains("order") && !j["order"].is_null()) ord = rat_field(j["order"]) / d;
    ExactSeries s(nz, ord);
    for (auto& [k, v] : j["terms"].items()) {
        Rat n = parse_rat(k) / d;
        if (ord && n >= *ord) throw input_error("term beyond order");
        if (nz) {
            auto& zs = j.at("zeta").at(k);
            for (std::size_t i = 0; i < v.size(); ++i)
                s.add_term(n, zs.at(i).get<std::vector<long long>>(), Cyclo::parse(v.at(i).get<std::string>()));
        } else {
            s.add_term(n, Cyclo::parse(v.get<std::string>()));
        }
    }
    return s;
}

}  // namespace mjf
