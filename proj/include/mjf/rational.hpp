#pragma once
// Exact rational scalars, vectors and dense matrices.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mjf {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;
using RatVec = std::vector<Rat>;
using RatMat = std::vector<RatVec>;  // row-major, rows of equal length

/// Raised for malformed input; the message names the offending field.
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Rat make_rat(long long p, long long q = 1) { return Rat(Int(p), Int(q)); }

/// Accepts "p", "p/q", "-p/q" (no decimals).
inline Rat parse_rat(const std::string& s) {
    if (s.empty()) throw input_error("empty rational");
    auto slash = s.find('/');
    auto check = [&](const std::string& t) {
        std::size_t i = (t.size() && (t[0] == '-' || t[0] == '+')) ? 1 : 0;
        if (i == t.size()) throw input_error("bad rational '" + s + "'");
        for (; i < t.size(); ++i)
            if (t[i] < '0' || t[i] > '9') throw input_error("bad rational '" + s + "'");
    };
    if (slash == std::string::npos) {
        check(s);
        return Rat(Int(s));
    }
    std::string a = s.substr(0, slash), b = s.substr(slash + 1);
    check(a);
    check(b);
    Int den(b);
    if (den == 0) throw input_error("zero denominator in '" + s + "'");
    return Rat(Int(a), den);
}

inline std::string to_string(const Rat& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

inline Rat floor_rat(const Rat& r) {
    Int n = numerator(r), d = denominator(r);
    Int q = n / d;
    if (n < 0 && q * d != n) q -= 1;
    return Rat(q);
}
inline Rat frac(const Rat& r) { return r - floor_rat(r); }
inline bool is_integral(const Rat& r) { return denominator(r) == 1; }
inline int sgn(const Rat& r) { return r > 0 ? 1 : (r < 0 ? -1 : 0); }

inline long double to_ld(const Rat& r) {
    return static_cast<long double>(numerator(r).convert_to<long double>() /
                                    denominator(r).convert_to<long double>());
}
inline std::vector<long double> to_ld(const RatVec& v) {
    std::vector<long double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = to_ld(v[i]);
    return out;
}

inline RatMat identity(std::size_t n) {
    RatMat m(n, RatVec(n, Rat(0)));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
    return m;
}

inline RatVec matvec(const RatMat& m, const RatVec& x) {
    RatVec out(m.size(), Rat(0));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) out[i] += m[i][j] * x[j];
    return out;
}

inline RatMat matmul(const RatMat& a, const RatMat& b) {
    std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
    RatMat c(n, RatVec(m, Rat(0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < k; ++l) {
            if (a[i][l] == 0) continue;
            for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
        }
    return c;
}

inline RatMat transpose(const RatMat& a) {
    if (a.empty()) return {};
    RatMat t(a[0].size(), RatVec(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
    return t;
}

inline Rat dot(const RatVec& a, const RatVec& b) {
    Rat s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline RatVec add(RatVec a, const RatVec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}
inline RatVec sub(RatVec a, const RatVec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}
inline RatVec scale(RatVec a, const Rat& s) {
    for (auto& x : a) x *= s;
    return a;
}

/// Determinant by fraction-exact elimination.
inline Rat det(RatMat a) {
    std::size_t n = a.size();
    Rat d = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && a[p][c] == 0) ++p;
        if (p == n) return Rat(0);
        if (p != c) {
            std::swap(a[p], a[c]);
            d = -d;
        }
        d *= a[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            if (a[r][c] == 0) continue;
            Rat f = a[r][c] / a[c][c];
            for (std::size_t j = c; j < n; ++j) a[r][j] -= f * a[c][j];
        }
    }
    return d;
}

/// Reduced row echelon form in place; returns pivot columns.
inline std::vector<std::size_t> rref(RatMat& a) {
    std::vector<std::size_t> piv;
    if (a.empty()) return piv;
    std::size_t rows = a.size(), cols = a[0].size(), r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t p = r;
        while (p < rows && a[p][c] == 0) ++p;
        if (p == rows) continue;
        std::swap(a[p], a[r]);
        Rat inv = 1 / a[r][c];
        for (auto& x : a[r]) x *= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || a[i][c] == 0) continue;
            Rat f = a[i][c];
            for (std::size_t j = 0; j < cols; ++j) a[i][j] -= f * a[r][j];
        }
        piv.push_back(c);
        ++r;
    }
    return piv;
}

inline std::size_t rank_of(RatMat a) { return rref(a).size(); }

/// Basis of {x : a x = 0}, one vector per free column.
inline std::vector<RatVec> nullspace(RatMat a, std::size_t cols) {
    if (a.empty()) {
        std::vector<RatVec> basis;
        for (std::size_t i = 0; i < cols; ++i) {
            RatVec e(cols, Rat(0));
            e[i] = 1;
            basis.push_back(e);
        }
        return basis;
    }
    auto piv = rref(a);
    std::vector<bool> is_piv(cols, false);
    for (auto p : piv) is_piv[p] = true;
    std::vector<RatVec> basis;
    for (std::size_t f = 0; f < cols; ++f) {
        if (is_piv[f]) continue;
        RatVec x(cols, Rat(0));
        x[f] = 1;
        for (std::size_t i = 0; i < piv.size(); ++i) x[piv[i]] = -a[i][f];
        basis.push_back(x);
    }
    return basis;
}

inline RatMat inverse(const RatMat& a) {
    std::size_t n = a.size();
    RatMat aug(n, RatVec(2 * n, Rat(0)));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug[i][j] = a[i][j];
        aug[i][n + i] = 1;
    }
    auto piv = rref(aug);
    if (piv.size() < n || piv[n - 1] != n - 1) throw std::domain_error("singular matrix");
    RatMat inv(n, RatVec(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) inv[i][j] = aug[i][n + j];
    return inv;
}

inline bool is_symmetric(const RatMat& a) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != a.size()) return false;
        for (std::size_t j = 0; j < i; ++j)
            if (a[i][j] != a[j][i]) return false;
    }
    return true;
}

inline Int lcm_den(const RatVec& v) {
    Int l = 1;
    for (const auto& x : v) l = boost::multiprecision::lcm(l, denominator(x));
    return l;
}

}  // namespace mjf
