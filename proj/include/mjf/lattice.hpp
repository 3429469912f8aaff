#pragma once
// Lattices with a rational Gram matrix, discriminant groups, the Weil
// representation, frames and compatible pairs.
//
// The engine form is Q(x) = x^T G x / 2 and B(x,y) = x^T G y.  A matrix given
// in paper-L mode is the matrix L of the form L[x] = x^T L x, so it is stored
// as G = 2L; Q then equals L[x] and B equals 2 x^T L y.

#include "mjf/rational.hpp"

#include <array>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace mjf {

enum class FormMode { paper_L, gram };

inline std::string to_string(FormMode m) { return m == FormMode::paper_L ? "paper-L" : "gram"; }
inline FormMode parse_mode(const std::string& s) {
    if (s == "paper-L" || s == "paper_L" || s == "L") return FormMode::paper_L;
    if (s == "gram") return FormMode::gram;
    throw input_error("mode: expected 'paper-L' or 'gram', got '" + s + "'");
}

struct Signature {
    int pos = 0, neg = 0, zero = 0;
    bool operator==(const Signature&) const = default;
};

namespace detail {

// Congruence diagonalization S -> P^T S P over Q.  Only the signs of the
// resulting diagonal are used.
inline Signature rational_signature(RatMat a) {
    std::size_t n = a.size();
    Signature s;
    for (std::size_t k = 0; k < n; ++k) {
        if (a[k][k] == 0) {
            std::size_t j = k + 1;
            while (j < n && a[j][j] == 0) ++j;
            if (j < n) {
                std::swap(a[k], a[j]);
                for (auto& row : a) std::swap(row[k], row[j]);
            } else {
                j = k + 1;
                while (j < n && a[k][j] == 0) ++j;
                if (j == n) {
                    ++s.zero;  // row k is zero on the remaining block
                    continue;
                }
                // x_k <- x_k + x_j makes the pivot 2 a_kj (a_jj = 0 here)
                for (std::size_t c = 0; c < n; ++c) a[k][c] += a[j][c];
                for (std::size_t r = 0; r < n; ++r) a[r][k] += a[r][j];
            }
        }
        Rat p = a[k][k];
        (p > 0 ? s.pos : s.neg) += 1;
        // Schur complement on the trailing block
        for (std::size_t r = k + 1; r < n; ++r)
            for (std::size_t c = k + 1; c < n; ++c) a[r][c] -= a[r][k] * a[k][c] / p;
        for (std::size_t c = k + 1; c < n; ++c) a[k][c] = a[c][k] = 0;
    }
    return s;
}

using IntMat = std::vector<std::vector<Int>>;

struct Smith {
    IntMat U, D, V;  // U * A * V = D, U and V unimodular
};

// Smith normal form with transforms, naive pivoting; matrices here are tiny.
inline Smith smith_normal_form(const IntMat& A) {
    std::size_t n = A.size(), m = n ? A[0].size() : 0;
    Smith s;
    s.D = A;
    s.U.assign(n, std::vector<Int>(n, 0));
    s.V.assign(m, std::vector<Int>(m, 0));
    for (std::size_t i = 0; i < n; ++i) s.U[i][i] = 1;
    for (std::size_t i = 0; i < m; ++i) s.V[i][i] = 1;
    auto& D = s.D;
    auto swap_rows = [&](std::size_t a, std::size_t b) {
        std::swap(D[a], D[b]);
        std::swap(s.U[a], s.U[b]);
    };
    auto swap_cols = [&](std::size_t a, std::size_t b) {
        for (auto& r : D) std::swap(r[a], r[b]);
        for (auto& r : s.V) std::swap(r[a], r[b]);
    };
    auto add_row = [&](std::size_t dst, std::size_t src, const Int& f) {  // row dst -= f row src
        for (std::size_t c = 0; c < m; ++c) D[dst][c] -= f * D[src][c];
        for (std::size_t c = 0; c < n; ++c) s.U[dst][c] -= f * s.U[src][c];
    };
    auto add_col = [&](std::size_t dst, std::size_t src, const Int& f) {
        for (std::size_t r = 0; r < n; ++r) D[r][dst] -= f * D[r][src];
        for (std::size_t r = 0; r < m; ++r) s.V[r][dst] -= f * s.V[r][src];
    };
    std::size_t t = 0;
    while (t < n && t < m) {
        // smallest nonzero entry in the trailing block becomes the pivot
        bool found = false;
        std::size_t pi = t, pj = t;
        for (std::size_t i = t; i < n; ++i)
            for (std::size_t j = t; j < m; ++j)
                if (D[i][j] != 0 && (!found || abs(D[i][j]) < abs(D[pi][pj]))) {
                    pi = i, pj = j, found = true;
                }
        if (!found) break;
        swap_rows(t, pi);
        swap_cols(t, pj);
        bool clean = true;
        for (std::size_t i = t + 1; i < n; ++i) {
            Int f = D[i][t] / D[t][t];
            add_row(i, t, f);
            if (D[i][t] != 0) clean = false;
        }
        for (std::size_t j = t + 1; j < m; ++j) {
            Int f = D[t][j] / D[t][t];
            add_col(j, t, f);
            if (D[t][j] != 0) clean = false;
        }
        if (!clean) continue;
        // divisibility: pivot must divide the rest of the block
        bool divides = true;
        for (std::size_t i = t + 1; i < n && divides; ++i)
            for (std::size_t j = t + 1; j < m; ++j)
                if (D[i][j] % D[t][t] != 0) {
                    for (std::size_t c = 0; c < m; ++c) D[t][c] += D[i][c];
                    for (std::size_t c = 0; c < n; ++c) s.U[t][c] += s.U[i][c];
                    divides = false;
                    break;
                }
        if (!divides) continue;
        if (D[t][t] < 0) {
            for (std::size_t c = 0; c < m; ++c) D[t][c] = -D[t][c];
            for (std::size_t c = 0; c < n; ++c) s.U[t][c] = -s.U[t][c];
        }
        ++t;
    }
    return s;
}

}  // namespace detail

class Lattice {
public:
    Lattice(RatMat input, FormMode mode) : input_(std::move(input)), mode_(mode) {
        if (input_.empty()) throw input_error("gram: empty matrix");
        if (!is_symmetric(input_)) throw input_error("gram: matrix is not symmetric");
        n_ = input_.size();
        G_ = input_;
        if (mode_ == FormMode::paper_L)
            for (auto& r : G_)
                for (auto& x : r) x *= 2;
        det_ = mjf::det(input_);
        sig_ = detail::rational_signature(G_);
        auto ker = nullspace(G_, n_);
        // pi_nd = I - K (K^T K)^{-1} K^T, euclidean projection away from the radical
        proj_ = identity(n_);
        if (!ker.empty()) {
            RatMat K = transpose(ker);  // n x d
            RatMat KtK = matmul(ker, K);
            RatMat P = matmul(matmul(K, inverse(KtK)), ker);
            for (std::size_t i = 0; i < n_; ++i)
                for (std::size_t j = 0; j < n_; ++j) proj_[i][j] -= P[i][j];
        }
        radical_ = std::move(ker);
    }

    static Lattice from_ints(std::initializer_list<std::initializer_list<long long>> rows, FormMode mode) {
        RatMat m;
        for (auto& r : rows) {
            RatVec v;
            for (auto x : r) v.push_back(Rat(x));
            m.push_back(v);
        }
        return Lattice(m, mode);
    }

    std::size_t rank() const { return n_; }
    FormMode mode() const { return mode_; }
    const RatMat& input() const { return input_; }
    const RatMat& gram() const { return G_; }
    /// Determinant of the matrix exactly as given (so paper-L reports det L).
    const Rat& det() const { return det_; }
    const Signature& signature() const { return sig_; }
    const RatMat& nd_projector() const { return proj_; }
    const std::vector<RatVec>& radical() const { return radical_; }
    bool degenerate() const { return sig_.zero > 0; }

    Rat Q(const RatVec& x) const {
        check_dim(x);
        return dot(x, matvec(G_, x)) / 2;
    }
    Rat B(const RatVec& x, const RatVec& y) const {
        check_dim(x);
        check_dim(y);
        return dot(x, matvec(G_, y));
    }
    RatVec Gx(const RatVec& x) const { return matvec(G_, x); }

    /// Integral Gram matrix whose diagonal is even.
    bool is_even() const {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j)
                if (!is_integral(G_[i][j])) return false;
            if (!is_integral(G_[i][i] / 2)) return false;
        }
        return true;
    }
    bool is_integral_gram() const {
        for (auto& r : G_)
            for (auto& x : r)
                if (!is_integral(x)) return false;
        return true;
    }

    void check_dim(const RatVec& x) const {
        if (x.size() != n_)
            throw input_error("dimension mismatch: vector of length " + std::to_string(x.size()) +
                              " for lattice of rank " + std::to_string(n_));
    }

    /// Direct sum, same mode required.
    friend Lattice direct_sum(const Lattice& a, const Lattice& b) {
        if (a.mode_ != b.mode_) throw input_error("direct_sum: mode mismatch");
        std::size_t n = a.n_ + b.n_;
        RatMat m(n, RatVec(n, Rat(0)));
        for (std::size_t i = 0; i < a.n_; ++i)
            for (std::size_t j = 0; j < a.n_; ++j) m[i][j] = a.input_[i][j];
        for (std::size_t i = 0; i < b.n_; ++i)
            for (std::size_t j = 0; j < b.n_; ++j) m[a.n_ + i][a.n_ + j] = b.input_[i][j];
        return Lattice(m, a.mode_);
    }

private:
    RatMat input_, G_, proj_;
    std::vector<RatVec> radical_;
    FormMode mode_;
    std::size_t n_ = 0;
    Rat det_;
    Signature sig_;
};

inline Rat evaluate_form(const Lattice& L, const RatVec& x, const std::optional<RatVec>& y = std::nullopt) {
    return y ? L.B(x, *y) : L.Q(x);
}

// ---------------------------------------------------------------- disc(L)

/// Coset of L in its dual, kept with coordinates reduced into [0,1).
struct DiscElement {
    RatVec rep;
    bool operator==(const DiscElement& o) const { return rep == o.rep; }
    bool operator<(const DiscElement& o) const { return rep < o.rep; }
};

inline DiscElement reduce_disc(RatVec v) {
    for (auto& x : v) x = frac(x);
    return {std::move(v)};
}

struct DiscriminantGroup {
    std::vector<DiscElement> elements;  // elements[0] is the zero coset
    std::vector<Int> invariants;        // nontrivial elementary divisors
    std::vector<RatVec> generators;

    std::size_t order() const { return elements.size(); }
    std::size_t index_of(const RatVec& v) const {
        auto d = reduce_disc(v);
        auto it = std::lower_bound(sorted_.begin(), sorted_.end(), std::make_pair(d, std::size_t(0)),
                                   [](auto& a, auto& b) { return a.first < b.first; });
        if (it == sorted_.end() || !(it->first == d)) throw std::out_of_range("not a discriminant element");
        return it->second;
    }
    std::size_t neg_index(std::size_t i) const { return index_of(scale(elements[i].rep, Rat(-1))); }

    void build_index() {
        sorted_.clear();
        for (std::size_t i = 0; i < elements.size(); ++i) sorted_.push_back({elements[i], i});
        std::sort(sorted_.begin(), sorted_.end(), [](auto& a, auto& b) { return a.first < b.first; });
    }

private:
    std::vector<std::pair<DiscElement, std::size_t>> sorted_;
};

/// Cosets via the Smith form U G V = D: the dual is V D^{-1} Z^N.
inline DiscriminantGroup discriminant_group(const Lattice& L) {
    if (L.degenerate()) throw std::domain_error("discriminant undefined: degenerate lattice");
    if (!L.is_integral_gram()) throw std::domain_error("discriminant undefined: Gram matrix not integral");
    std::size_t n = L.rank();
    detail::IntMat A(n, std::vector<Int>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) A[i][j] = numerator(L.gram()[i][j]);
    auto s = detail::smith_normal_form(A);
    DiscriminantGroup g;
    std::vector<std::pair<Int, RatVec>> gens;
    for (std::size_t i = 0; i < n; ++i) {
        Int d = s.D[i][i];
        if (d == 1) continue;
        RatVec col(n);
        for (std::size_t r = 0; r < n; ++r) col[r] = Rat(s.V[r][i], d);
        gens.push_back({d, reduce_disc(col).rep});
    }
    for (auto& [d, v] : gens) {
        g.invariants.push_back(d);
        g.generators.push_back(v);
    }
    g.elements.push_back(reduce_disc(RatVec(n, Rat(0))));
    for (auto& [d, v] : gens) {
        std::vector<DiscElement> next;
        long long dd = d.convert_to<long long>();
        for (const auto& e : g.elements)
            for (long long k = 0; k < dd; ++k) next.push_back(reduce_disc(add(e.rep, scale(v, Rat(k)))));
        g.elements = std::move(next);
    }
    g.build_index();
    return g;
}

// ------------------------------------------------------------ Weil rep

using cplx = std::complex<long double>;
using CMat = std::vector<std::vector<cplx>>;

/// e(x) = exp(2 pi i x) with the argument reduced mod 1 exactly first.
inline cplx e_rat(const Rat& x) {
    long double t = to_ld(frac(x));
    return std::polar(1.0L, 2 * std::numbers::pi_v<long double> * t);
}

enum class WeilGen { T, S };

/// sigma = e((dV- - dV+)/8); divisor sqrt|disc L|.
inline cplx weil_sigma(const Lattice& L) {
    return e_rat(Rat(L.signature().neg - L.signature().pos, 8));
}

inline CMat weil_representation(const Lattice& L, const DiscriminantGroup& D, WeilGen gen) {
    if (L.degenerate()) throw std::domain_error("Weil representation: degenerate lattice");
    if (!L.is_even()) throw std::domain_error("Weil representation: lattice is not even");
    std::size_t m = D.order();
    CMat M(m, std::vector<cplx>(m, cplx(0)));
    if (gen == WeilGen::T) {
        for (std::size_t i = 0; i < m; ++i) M[i][i] = e_rat(L.Q(D.elements[i].rep));
        return M;
    }
    cplx pref = weil_sigma(L) / std::sqrt(static_cast<long double>(m));
    // column j is the image of b_{lambda_j}
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            M[i][j] = pref * e_rat(-L.B(D.elements[i].rep, D.elements[j].rep));
    return M;
}

inline CMat weil_representation(const Lattice& L, WeilGen gen) {
    return weil_representation(L, discriminant_group(L), gen);
}

inline CMat cmat_mul(const CMat& a, const CMat& b) {
    std::size_t n = a.size(), m = b[0].size(), k = b.size();
    CMat c(n, std::vector<cplx>(m, cplx(0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < k; ++l)
            for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
    return c;
}

// --------------------------------------------------------------- frames

enum class VecClass { positive, negative, isotropic };

struct Frame {
    std::vector<RatVec> vectors;
    std::vector<VecClass> classes;
};

inline Frame make_frame(const Lattice& L, std::vector<RatVec> vecs) {
    Frame f;
    for (auto& v : vecs) {
        L.check_dim(v);
        Rat q = L.Q(v);
        f.classes.push_back(q > 0 ? VecClass::positive : (q < 0 ? VecClass::negative : VecClass::isotropic));
    }
    f.vectors = std::move(vecs);
    return f;
}

inline bool linearly_independent(const std::vector<RatVec>& vs) {
    if (vs.empty()) return true;
    return rank_of(vs) == vs.size();
}

/// Per-condition outcome of the compatibility check.
struct PairValidation {
    bool lengths_match = false;        // |E| = |E'| = dV-
    bool independent = false;          // each frame linearly independent
    bool nonpositive = false;          // Q <= 0 on all frame vectors
    bool orthogonal_within = false;    // B(e_i, e_j) = 0 inside each frame, i != j
    bool spans_signature_11 = false;   // span(e_i, e'_i) has signature (1,1)
    bool spans_orthogonal = false;     // span(e_i,e'_i) perp span(e_j,e'_j)
    bool complement_positive = false;  // E-perp / radical positive definite, same for E'
    bool same_cone = false;            // B(e_i, e'_i) < 0, needed for convergence
    bool valid() const {
        return lengths_match && independent && nonpositive && orthogonal_within && spans_signature_11 &&
               spans_orthogonal && complement_positive;
    }
    bool convergent() const { return valid() && same_cone; }
    std::vector<std::pair<std::string, bool>> items() const {
        return {{"lengths_match", lengths_match},
                {"independent", independent},
                {"nonpositive", nonpositive},
                {"orthogonal_within", orthogonal_within},
                {"spans_signature_11", spans_signature_11},
                {"spans_orthogonal", spans_orthogonal},
                {"complement_positive", complement_positive},
                {"same_cone", same_cone}};
    }
};

struct CompatiblePair {
    Frame E, Ep;
    PairValidation validation;
};

namespace detail {

inline RatMat gram_of(const Lattice& L, const std::vector<RatVec>& vs) {
    RatMat g(vs.size(), RatVec(vs.size()));
    for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t j = 0; j < vs.size(); ++j) g[i][j] = L.B(vs[i], vs[j]);
    return g;
}

// Signature of the form restricted to the B-orthogonal complement of vs.
inline Signature complement_signature(const Lattice& L, const std::vector<RatVec>& vs) {
    RatMat rows;
    for (auto& v : vs) rows.push_back(L.Gx(v));
    auto basis = nullspace(rows, L.rank());
    if (basis.empty()) return {};
    return rational_signature(gram_of(L, basis));
}

}  // namespace detail

inline CompatiblePair validate_compatible_pair(const Lattice& L, const Frame& E, const Frame& Ep) {
    CompatiblePair cp{E, Ep, {}};
    auto& r = cp.validation;
    std::size_t k = E.vectors.size();
    r.lengths_match = (k == Ep.vectors.size()) && (static_cast<int>(k) == L.signature().neg);
    r.independent = linearly_independent(E.vectors) && linearly_independent(Ep.vectors);
    r.nonpositive = true;
    for (auto* f : {&E, &Ep})
        for (auto c : f->classes)
            if (c == VecClass::positive) r.nonpositive = false;
    r.orthogonal_within = true;
    for (auto* f : {&E, &Ep})
        for (std::size_t i = 0; i < f->vectors.size(); ++i)
            for (std::size_t j = i + 1; j < f->vectors.size(); ++j)
                if (L.B(f->vectors[i], f->vectors[j]) != 0) r.orthogonal_within = false;
    std::size_t kk = std::min(k, Ep.vectors.size());
    r.spans_signature_11 = kk == k;
    r.same_cone = kk == k;
    for (std::size_t i = 0; i < kk; ++i) {
        auto g = detail::gram_of(L, {E.vectors[i], Ep.vectors[i]});
        if (detail::rational_signature(g) != Signature{1, 1, 0}) r.spans_signature_11 = false;
        if (L.B(E.vectors[i], Ep.vectors[i]) >= 0) r.same_cone = false;
    }
    r.spans_orthogonal = true;
    for (std::size_t i = 0; i < kk; ++i)
        for (std::size_t j = 0; j < kk; ++j) {
            if (i == j) continue;
            for (auto* a : {&E.vectors[i], &Ep.vectors[i]})
                for (auto* b : {&E.vectors[j], &Ep.vectors[j]})
                    if (L.B(*a, *b) != 0) r.spans_orthogonal = false;
        }
    r.complement_positive = true;
    for (auto* f : {&E, &Ep}) {
        auto s = detail::complement_signature(L, f->vectors);
        if (s.neg != 0) r.complement_positive = false;
    }
    return cp;
}

inline CompatiblePair validate_compatible_pair(const Lattice& L, const std::vector<RatVec>& E,
                                               const std::vector<RatVec>& Ep) {
    return validate_compatible_pair(L, make_frame(L, E), make_frame(L, Ep));
}

struct NormalizedFrames {
    Frame E, Ep;
    int sign = 1;
};

/// Swap e_i <-> e'_i when e_i is isotropic and e'_i negative.
inline NormalizedFrames normalize_frames(const Lattice& L, const Frame& E, const Frame& Ep) {
    auto cp = validate_compatible_pair(L, E, Ep);
    if (!cp.validation.valid()) throw std::invalid_argument("normalize_frames: invalid compatible pair");
    NormalizedFrames out{E, Ep, 1};
    for (std::size_t i = 0; i < E.vectors.size(); ++i) {
        if (E.classes[i] == VecClass::isotropic && Ep.classes[i] == VecClass::negative) {
            std::swap(out.E.vectors[i], out.Ep.vectors[i]);
            std::swap(out.E.classes[i], out.Ep.classes[i]);
            out.sign = -out.sign;
        }
    }
    return out;
}

struct ReplacementOptions {
    int max_denominator = 4;
    int max_height = 6;  // bound on integer coefficients in the complement basis
};

/// Negative vector orthogonal to every frame vector except e_i and e'_i,
/// pairing nontrivially with both.  Candidates are ordered by
/// (denominator, euclidean norm, coordinates).
inline RatVec find_replacement_vector(const Lattice& L, const Frame& E, const Frame& Ep, std::size_t i,
                                      ReplacementOptions opt = {}) {
    if (i >= E.vectors.size()) throw std::out_of_range("find_replacement_vector: index out of range");
    auto cp = validate_compatible_pair(L, E, Ep);
    if (!cp.validation.valid()) throw std::invalid_argument("find_replacement_vector: invalid compatible pair");
    if (L.signature().neg == 0) throw std::domain_error("no replacement within bound: lattice has no negative vectors");
    RatMat rows;
    for (std::size_t j = 0; j < E.vectors.size(); ++j) {
        if (j == i) continue;
        rows.push_back(L.Gx(E.vectors[j]));
        rows.push_back(L.Gx(Ep.vectors[j]));
    }
    auto basis = nullspace(rows, L.rank());
    std::size_t d = basis.size();
    struct Cand {
        int den;
        Rat norm;
        RatVec v;
    };
    std::vector<Cand> found;
    for (int den = 1; den <= opt.max_denominator && found.empty(); ++den) {
        std::vector<int> c(d, -opt.max_height);
        while (true) {
            RatVec v(L.rank(), Rat(0));
            bool nonzero = false;
            for (std::size_t t = 0; t < d; ++t)
                if (c[t] != 0) {
                    nonzero = true;
                    v = add(v, scale(basis[t], Rat(c[t], den)));
                }
            bool reduced = true;  // skip vectors already seen with a smaller denominator
            if (den > 1) {
                Int g = 0;
                for (int x : c) g = boost::multiprecision::gcd(g, Int(x));
                if (boost::multiprecision::gcd(g, Int(den)) != 1) reduced = false;
            }
            if (nonzero && reduced && L.Q(v) < 0 && L.B(v, E.vectors[i]) != 0 && L.B(v, Ep.vectors[i]) != 0) {
                auto E2 = E.vectors;
                E2[i] = v;
                auto cp2 = validate_compatible_pair(L, make_frame(L, E2), Ep);
                if (cp2.validation.valid() && (!cp.validation.same_cone || cp2.validation.same_cone))
                    found.push_back({den, dot(v, v), v});
            }
            std::size_t t = 0;
            while (t < d && ++c[t] > opt.max_height) c[t++] = -opt.max_height;
            if (t == d) break;
        }
    }
    if (found.empty()) throw std::domain_error("no replacement within bound");
    std::sort(found.begin(), found.end(), [](const Cand& a, const Cand& b) {
        if (a.den != b.den) return a.den < b.den;
        if (a.norm != b.norm) return a.norm < b.norm;
        return a.v < b.v;
    });
    return found.front().v;
}

}  // namespace mjf
