#pragma once
// Exact elements of the cyclotomic field Q(w), w = e(1/M).
// Stored reduced modulo the M-th cyclotomic polynomial, so two elements over the same M
// are equal iff their coefficient vectors are.

#include "mjf/rational.hpp"

#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>

namespace mjf {

namespace detail {

using IntPoly = std::vector<Int>;  // low degree first

/// Exact quotient a / b for monic b dividing a.
inline IntPoly poly_divexact(IntPoly a, const IntPoly& b) {
    std::size_t db = b.size() - 1;
    IntPoly q(a.size() - db, Int(0));
    for (std::size_t i = a.size(); i-- > db;) {
        Int c = a[i];
        q[i - db] = c;
        for (std::size_t j = 0; j <= db; ++j) a[i - db + j] -= c * b[j];
    }
    return q;
}

inline IntPoly cyclotomic_poly(int m) {
    static std::mutex mu;
    static std::map<int, IntPoly> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(m);
        if (it != cache.end()) return it->second;
    }
    IntPoly p(m + 1, Int(0));
    p[0] = -1;
    p[m] = 1;
    for (int d = 1; d < m; ++d)
        if (m % d == 0) p = poly_divexact(p, cyclotomic_poly(d));
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(m, p);
    return p;
}

}  // namespace detail

class Cyclo {
public:
    Cyclo() : m_(1), c_{Rat(0)} {}
    Cyclo(const Rat& r) : m_(1), c_{r} {}  // NOLINT implicit on purpose
    Cyclo(long long r) : Cyclo(Rat(r)) {}  // NOLINT

    /// e(a/b) exactly.
    static Cyclo root(long long a, long long b) {
        if (b <= 0) throw input_error("root of unity needs positive order");
        long long g = std::gcd(a < 0 ? -a : a, b);
        if (g == 0) g = b;
        long long m = b / g, k = ((a / g) % m + m) % m;
        std::vector<Rat> raw(static_cast<std::size_t>(m), Rat(0));
        raw[static_cast<std::size_t>(k)] = 1;
        return Cyclo(static_cast<int>(m), std::move(raw));
    }
    static Cyclo root(const Rat& x) {
        return root(static_cast<long long>(numerator(x)), static_cast<long long>(denominator(x)));
    }

    int order() const { return m_; }
    const std::vector<Rat>& coeffs() const { return c_; }
    bool is_zero() const {
        for (auto& x : c_)
            if (x != 0) return false;
        return true;
    }
    bool is_rational() const {
        for (std::size_t i = 1; i < c_.size(); ++i)
            if (c_[i] != 0) return false;
        return true;
    }
    Rat rational_part() const { return c_.empty() ? Rat(0) : c_[0]; }

    /// Same element over Q(e(1/m)); m must be a multiple of order().
    Cyclo lift(int m) const {
        if (m % m_) throw std::logic_error("cyclotomic lift to non-multiple");
        if (m == m_) return *this;
        std::vector<Rat> raw(static_cast<std::size_t>(m), Rat(0));
        int step = m / m_;
        for (std::size_t i = 0; i < c_.size(); ++i) raw[i * step] = c_[i];
        return Cyclo(m, std::move(raw));
    }

    friend Cyclo operator+(const Cyclo& a, const Cyclo& b) {
        int m = std::lcm(a.m_, b.m_);
        Cyclo x = a.lift(m), y = b.lift(m);
        for (std::size_t i = 0; i < x.c_.size(); ++i) x.c_[i] += y.c_[i];
        return x;
    }
    friend Cyclo operator-(const Cyclo& a) {
        Cyclo x = a;
        for (auto& c : x.c_) c = -c;
        return x;
    }
    friend Cyclo operator-(const Cyclo& a, const Cyclo& b) { return a + (-b); }
    friend Cyclo operator*(const Cyclo& a, const Cyclo& b) {
        int m = std::lcm(a.m_, b.m_);
        Cyclo x = a.lift(m), y = b.lift(m);
        std::vector<Rat> raw(x.c_.size() + y.c_.size(), Rat(0));
        for (std::size_t i = 0; i < x.c_.size(); ++i) {
            if (x.c_[i] == 0) continue;
            for (std::size_t j = 0; j < y.c_.size(); ++j) raw[i + j] += x.c_[i] * y.c_[j];
        }
        return Cyclo(m, std::move(raw));
    }
    Cyclo& operator+=(const Cyclo& o) { return *this = *this + o; }
    Cyclo& operator-=(const Cyclo& o) { return *this = *this - o; }
    Cyclo& operator*=(const Cyclo& o) { return *this = *this * o; }

    friend bool operator==(const Cyclo& a, const Cyclo& b) { return (a - b).is_zero(); }

    template <class R = long double>
    std::complex<R> to_complex() const {
        std::complex<R> s = 0;
        const R tau = 2 * std::numbers::pi_v<R>;
        for (std::size_t i = 0; i < c_.size(); ++i) {
            if (c_[i] == 0) continue;
            R ang = tau * R(i) / R(m_);
            R v = static_cast<R>(numerator(c_[i]).template convert_to<long double>()) /
                  static_cast<R>(denominator(c_[i]).template convert_to<long double>());
            s += std::polar(v, ang);
        }
        return s;
    }

    /// "3/2", or a polynomial in w = e(1/M) such as "1/2*w^0-w^3|12".
    std::string str() const {
        if (is_rational()) return to_string(rational_part());
        std::string out;
        for (std::size_t i = 0; i < c_.size(); ++i) {
            if (c_[i] == 0) continue;
            std::string s = to_string(c_[i]);
            if (!out.empty() && s[0] != '-') out += "+";
            out += s + "*w^" + std::to_string(i);
        }
        return out + "|" + std::to_string(m_);
    }
    static Cyclo parse(const std::string& s) {
        auto bar = s.find('|');
        if (bar == std::string::npos) return Cyclo(parse_rat(s));
        int m = std::stoi(s.substr(bar + 1));
        if (m <= 0) throw input_error("bad cyclotomic order in '" + s + "'");
        std::vector<Rat> raw(static_cast<std::size_t>(m), Rat(0));
        std::string body = s.substr(0, bar);
        std::size_t pos = 0;
        while (pos < body.size()) {
            std::size_t next = body.find_first_of("+-", pos + 1);
            std::string term = body.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
            if (!term.empty() && term[0] == '+') term.erase(0, 1);
            auto star = term.find("*w^");
            if (star == std::string::npos) throw input_error("bad cyclotomic term '" + term + "'");
            int k = std::stoi(term.substr(star + 3));
            if (k < 0 || k >= m) throw input_error("bad cyclotomic power in '" + s + "'");
            raw[static_cast<std::size_t>(k)] += parse_rat(term.substr(0, star));
            pos = next == std::string::npos ? body.size() : next;
        }
        return Cyclo(m, std::move(raw));
    }

private:
    Cyclo(int m, std::vector<Rat> raw) : m_(m) {
        auto phi = detail::cyclotomic_poly(m);
        std::size_t deg = phi.size() - 1;
        for (std::size_t i = raw.size(); i-- > deg;) {
            if (raw[i] == 0) continue;
            Rat c = raw[i];
            for (std::size_t j = 0; j <= deg; ++j) raw[i - deg + j] -= c * Rat(phi[j]);
        }
        raw.resize(deg, Rat(0));
        c_ = std::move(raw);
    }

    int m_;
    std::vector<Rat> c_;
};

}  // namespace mjf
