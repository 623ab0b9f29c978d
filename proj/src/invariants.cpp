#include "falsetheta/invariants.hpp"

#include "falsetheta/errors.hpp"
#include "falsetheta/jacobi_ct.hpp"
#include "falsetheta/lattice.hpp"
#include "falsetheta/special.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ft {

namespace {

using Matrix = std::vector<std::vector<Rational>>;

Rational det_rational(Matrix m) {
    const std::size_t n = m.size();
    Rational det(1);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && m[piv][col] == 0) ++piv;
        if (piv == n) return Rational(0);
        if (piv != col) {
            std::swap(m[piv], m[col]);
            det = -det;
        }
        det *= m[col][col];
        for (std::size_t row = col + 1; row < n; ++row) {
            if (m[row][col] == 0) continue;
            Rational f = m[row][col] / m[col][col];
            for (std::size_t k = col; k < n; ++k) m[row][k] -= f * m[col][k];
        }
    }
    return det;
}

Matrix to_rational(const std::vector<std::vector<long>>& m) {
    Matrix out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (long v : m[i]) out[i].emplace_back(v);
    return out;
}

Matrix leading_block(const Matrix& m, std::size_t k) {
    Matrix out(k);
    for (std::size_t i = 0; i < k; ++i)
        out[i] = Matrix::value_type(m[i].begin(), m[i].begin() + static_cast<long>(k));
    return out;
}

// Gauss-Jordan inverse with partial pivoting; the callers only pass
// invertible matrices.
Matrix inverse_rational(Matrix m) {
    const std::size_t n = m.size();
    Matrix inv(n, Matrix::value_type(n, Rational(0)));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && m[piv][col] == 0) ++piv;
        if (piv == n) throw std::logic_error("inverse of a singular matrix requested");
        std::swap(m[piv], m[col]);
        std::swap(inv[piv], inv[col]);
        Rational p = m[col][col];
        for (std::size_t k = 0; k < n; ++k) {
            m[col][k] /= p;
            inv[col][k] /= p;
        }
        for (std::size_t row = 0; row < n; ++row) {
            if (row == col || m[row][col] == 0) continue;
            Rational f = m[row][col];
            for (std::size_t k = 0; k < n; ++k) {
                m[row][k] -= f * m[col][k];
                inv[row][k] -= f * inv[col][k];
            }
        }
    }
    return inv;
}

Rational binomial(unsigned long n, unsigned long k) {
    Integer b;
    mpz_bin_uiui(b.get_mpz_t(), n, k);
    return Rational(b);
}

// Everything both block pipelines share: the validated matrix data, the
// exact inverse, the class offset h = M^{-1} a / 2, and the exponent window.
struct BlockSetup {
    std::size_t n = 0;
    LinkingMatrix lm;
    std::vector<int> deg;
    std::vector<long> avec;
    Matrix minv;
    std::vector<Rational> h;
    Rational p0;
    Rational budget;
};

BlockSetup block_setup(const PlumbingGraph& g, const std::vector<long>& a, const Rational& N) {
    BlockSetup s;
    s.n = g.size();
    s.lm = linking_matrix(g);
    if (!s.lm.positive_definite)
        throw NotPositiveDefinite("block series needs a positive definite linking matrix");
    if (!s.lm.unimodular)
        throw NotUnimodular("only unimodular linking matrices carry a single class; refusing " +
                            to_string(s.lm.det));
    std::vector<long> delta = g.shift_vector();
    if (a.size() != s.n)
        throw ClassVectorMismatch("class vector length does not match the vertex count");
    for (std::size_t j = 0; j < s.n; ++j)
        if ((a[j] - delta[j]) % 2 != 0)
            throw ClassVectorMismatch("class vector component " + std::to_string(j) +
                                      " is not congruent to the degree parity");
    s.deg = g.degrees();
    s.avec = a;
    s.minv = inverse_rational(to_rational(s.lm.m));
    s.h.assign(s.n, Rational(0));
    long tr = 0;
    for (std::size_t j = 0; j < s.n; ++j) {
        tr += s.lm.m[j][j];
        for (std::size_t k = 0; k < s.n; ++k) s.h[j] += s.minv[j][k] * a[k];
        s.h[j] /= 2;
    }
    s.p0 = Rational(-3 * static_cast<long>(s.n) + tr, 4);
    s.p0.canonicalize();
    s.budget = N - s.p0;
    return s;
}

// LDL^T factors of the linking matrix (unit lower L), so the exponent splits
// into a sum of weighted squares that can be enumerated coordinate by
// coordinate with exact pruning.
struct LdlFactors {
    Matrix l;
    std::vector<Rational> d;
};

LdlFactors ldl_decompose(const Matrix& m) {
    const std::size_t n = m.size();
    LdlFactors f;
    f.l.assign(n, Matrix::value_type(n, Rational(0)));
    f.d.assign(n, Rational(0));
    for (std::size_t j = 0; j < n; ++j) {
        f.l[j][j] = 1;
        Rational dj = m[j][j];
        for (std::size_t k = 0; k < j; ++k) dj -= f.l[j][k] * f.l[j][k] * f.d[k];
        if (sgn(dj) <= 0) throw std::logic_error("ldl pivot of a definite matrix vanished");
        f.d[j] = dj;
        for (std::size_t i = j + 1; i < n; ++i) {
            Rational v = m[i][j];
            for (std::size_t k = 0; k < j; ++k) v -= f.l[i][k] * f.l[j][k] * f.d[k];
            f.l[i][j] = v / dj;
        }
    }
    return f;
}

// walks the shifted lattice inside the exponent ellipsoid, innermost
// coordinate last; ranges come from a slack double estimate and every
// accepted point is re-checked exactly
void enumerate_lattice(const BlockSetup& s, const LdlFactors& f, std::vector<long>& nvec,
                       std::size_t level, const Rational& acc, SeriesBuilder& out) {
    if (sgn(acc - s.budget) >= 0) return;
    if (level == static_cast<std::size_t>(-1)) {
        // exponent accepted; pair with the principal-value coefficients
        Rational coeff(1);
        for (std::size_t j = 0; j < s.n && coeff != 0; ++j) {
            long lj = s.avec[j];
            for (std::size_t k = 0; k < s.n; ++k) lj += 2 * s.lm.m[j][k] * nvec[k];
            coeff *= pv_coefficient(s.deg[j], -lj);
        }
        if (coeff != 0) out.add(s.p0 + acc, coeff);
        return;
    }
    Rational shift = s.h[level];
    for (std::size_t i = level + 1; i < s.n; ++i)
        shift += f.l[i][level] * (Rational(nvec[i]) + s.h[i]);
    double r = std::sqrt(std::max(0.0, to_double((s.budget - acc) / f.d[level])));
    double c = -to_double(shift);
    long lo = static_cast<long>(std::floor(c - r - 1.0));
    long hi = static_cast<long>(std::ceil(c + r + 1.0));
    for (long v = lo; v <= hi; ++v) {
        nvec[level] = v;
        Rational y = Rational(v) + shift;
        enumerate_lattice(s, f, nvec, level - 1, acc + f.d[level] * y * y, out);
    }
    nvec[level] = 0;
}

// loop-reordered oracle: runs over the finite Laurent supports of the vertex
// factors and keeps the tuples that land in the shifted lattice
void enumerate_support(const BlockSetup& s, const std::vector<std::vector<long>>& supports,
                       std::vector<long>& xvec, std::size_t level, const Rational& coeff,
                       SeriesBuilder& out) {
    if (level == s.n) {
        std::vector<Rational> u(s.n, Rational(0));
        for (std::size_t j = 0; j < s.n; ++j) {
            for (std::size_t k = 0; k < s.n; ++k) u[j] += s.minv[j][k] * (-xvec[k] - s.avec[k]);
            if (!is_integer(u[j]) || num_long(u[j]) % 2 != 0) return;
        }
        Rational e(0);
        for (std::size_t j = 0; j < s.n; ++j) {
            Rational row(0);
            for (std::size_t k = 0; k < s.n; ++k) row += s.minv[j][k] * xvec[k];
            e += row * xvec[j];
        }
        e /= 4;
        if (sgn(e - s.budget) < 0) out.add(s.p0 + e, coeff);
        return;
    }
    for (long x : supports[level]) {
        xvec[level] = x;
        enumerate_support(s, supports, xvec, level + 1,
                          coeff * pv_coefficient(s.deg[level], x), out);
    }
}

FalseThetaSpec full_lattice_part(const FsqeSpec& spec, const std::pair<Rational, Rational>& alpha,
                                 bool crossed) {
    FalseThetaSpec fts;
    fts.a = spec.sigma1;
    fts.b = spec.sigma2;
    fts.c = spec.sigma3;
    fts.scale = spec.K;
    fts.alpha1 = alpha.first;
    fts.alpha2 = alpha.second;
    if (crossed)
        fts.sign_pairs = {{LinForm{1, 0}, LinForm{0, 1}}};
    else
        fts.sign_pairs = {{LinForm{1, 0}, LinForm{1, 0}}};
    return fts;
}

Rational eval_trunc_exponent(Complex tau) {
    if (!(tau.imag() > 0))
        throw NonconvergentEvaluation("series evaluation needs tau in the upper half-plane");
    long e = static_cast<long>(std::ceil(6.0 / tau.imag())) + 8;
    return Rational(e);
}

} // namespace

std::vector<int> PlumbingGraph::degrees() const {
    std::vector<int> deg(size(), 0);
    for (const auto& [u, v] : edges) {
        if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= size() ||
            static_cast<std::size_t>(v) >= size())
            throw NotATree("edge endpoint out of range");
        ++deg[static_cast<std::size_t>(u)];
        ++deg[static_cast<std::size_t>(v)];
    }
    return deg;
}

std::vector<long> PlumbingGraph::shift_vector() const {
    std::vector<long> delta;
    for (int d : degrees()) delta.push_back(d % 2);
    return delta;
}

PlumbingGraph relabeled(const PlumbingGraph& g, const std::vector<int>& perm) {
    const std::size_t n = g.size();
    if (perm.size() != n) throw MalformedParams("relabeling permutation has the wrong length");
    std::vector<bool> seen(n, false);
    for (int p : perm) {
        if (p < 0 || static_cast<std::size_t>(p) >= n || seen[static_cast<std::size_t>(p)])
            throw MalformedParams("relabeling is not a permutation");
        seen[static_cast<std::size_t>(p)] = true;
    }
    PlumbingGraph out;
    out.weights.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) out.weights[static_cast<std::size_t>(perm[i])] = g.weights[i];
    for (const auto& [u, v] : g.edges)
        out.edges.emplace_back(perm[static_cast<std::size_t>(u)],
                               perm[static_cast<std::size_t>(v)]);
    return out;
}

LinkingMatrix linking_matrix(const PlumbingGraph& g) {
    const std::size_t n = g.size();
    if (n == 0) throw NotATree("empty plumbing graph");
    if (g.edges.size() != n - 1)
        throw NotATree("a tree on " + std::to_string(n) + " vertices has " + std::to_string(n - 1) +
                       " edges, got " + std::to_string(g.edges.size()));
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto root = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    LinkingMatrix out;
    out.m.assign(n, std::vector<long>(n, 0));
    for (std::size_t j = 0; j < n; ++j) out.m[j][j] = g.weights[j];
    for (const auto& [u, v] : g.edges) {
        if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n)
            throw NotATree("edge endpoint out of range");
        if (u == v) throw NotATree("self-loop on vertex " + std::to_string(u));
        auto su = static_cast<std::size_t>(u), sv = static_cast<std::size_t>(v);
        if (out.m[su][sv] != 0) throw NotATree("duplicate edge");
        if (root(su) == root(sv)) throw NotATree("edge set contains a cycle");
        parent[root(su)] = root(sv);
        out.m[su][sv] = out.m[sv][su] = -1;
    }
    // n-1 edges and no cycle force connectivity, so the tree check is done
    Matrix rm = to_rational(out.m);
    out.positive_definite = true;
    for (std::size_t k = 1; k <= n; ++k)
        if (sgn(det_rational(leading_block(rm, k))) <= 0) {
            out.positive_definite = false;
            break;
        }
    out.det = det_rational(rm);
    out.unimodular = out.det == 1 || out.det == -1;
    return out;
}

Rational pv_coefficient(int deg, long x) {
    long p = 2 - deg;
    if (p >= 0) {
        // plain polynomial; exponents p, p-2, ..., -p
        if (x > p || x < -p || (p - x) % 2 != 0) return Rational(0);
        unsigned long i = static_cast<unsigned long>((p - x) / 2);
        Rational b = binomial(static_cast<unsigned long>(p), i);
        return (i % 2 == 0) ? b : -b;
    }
    // averaged inside/outside geometric expansions of (w - 1/w)^{-dt}
    long dt = -p;
    long ax = std::labs(x);
    if (ax < dt || (ax - dt) % 2 != 0) return Rational(0);
    unsigned long j = static_cast<unsigned long>((ax - dt) / 2);
    Rational half = binomial(static_cast<unsigned long>(dt) - 1 + j, j) / 2;
    if (x < 0) return half;
    return (dt % 2 != 0) ? -half : half;
}

QExpansion zhat_series(const PlumbingGraph& g, const std::vector<long>& a, const Rational& N) {
    BlockSetup s = block_setup(g, a, N);
    SeriesBuilder out{N};
    if (sgn(s.budget) > 0) {
        LdlFactors f = ldl_decompose(to_rational(s.lm.m));
        std::vector<long> nvec(s.n, 0);
        enumerate_lattice(s, f, nvec, s.n - 1, Rational(0), out);
    }
    return out.build();
}

QExpansion zhat_series(const PlumbingGraph& g, const Rational& N) {
    return zhat_series(g, g.shift_vector(), N);
}

QExpansion zhat_series_by_support(const PlumbingGraph& g, const std::vector<long>& a,
                                  const Rational& N) {
    BlockSetup s = block_setup(g, a, N);
    SeriesBuilder out{N};
    if (sgn(s.budget) > 0) {
        double b4 = 4.0 * to_double(s.budget);
        std::vector<std::vector<long>> supports(s.n);
        for (std::size_t j = 0; j < s.n; ++j) {
            long xmax = static_cast<long>(std::floor(std::sqrt(b4 * s.lm.m[j][j]))) + 1;
            for (long x = -xmax; x <= xmax; ++x)
                if (pv_coefficient(s.deg[j], x) != 0) supports[j].push_back(x);
        }
        std::vector<long> xvec(s.n, 0);
        enumerate_support(s, supports, xvec, 0, Rational(1), out);
    }
    return out.build();
}

QExpansion zhat_series_by_support(const PlumbingGraph& g, const Rational& N) {
    return zhat_series_by_support(g, g.shift_vector(), N);
}

long fsqe_minimal_scale(const FsqeSpec& spec) {
    long k = 1;
    for (const auto& [a1, a2] : spec.alphas) k = std::lcm(k, std::lcm(den_long(a1), den_long(a2)));
    return k;
}

FsqeSeriesResult fsqe_series_detailed(const FsqeSpec& spec, const Rational& N) {
    FsqeSeriesResult res;
    if (spec.alphas.empty() && spec.eps.empty()) {
        // the empty sum; nothing to symmetrize
        res.series = SeriesBuilder{N}.build();
        res.symmetrized = res.series;
        return res;
    }
    validate_fsqe(spec);
    res.minimal_scale = fsqe_minimal_scale(spec);
    res.scale_is_minimal = res.minimal_scale == spec.K;

    QExpansion direct = QExpansion::zero(1, QExpansion::kInfTrunc);
    QExpansion sym = direct;
    for (std::size_t i = 0; i < spec.alphas.size(); ++i) {
        const auto& [a1, a2] = spec.alphas[i];
        Rational K(spec.K);
        Rational l1 = 2 * K * (spec.sigma1 * a1 + spec.sigma2 * a2);
        Rational l2 = 2 * K * (spec.sigma2 * a1 + spec.sigma3 * a2);
        Rational e0 = K * (spec.sigma1 * a1 * a1 + 2 * spec.sigma2 * a1 * a2 +
                           spec.sigma3 * a2 * a2);
        QExpansion quad = quadrant_sum(K * spec.sigma1, 2 * K * spec.sigma2, K * spec.sigma3,
                                       l1, l2, e0, {}, std::nullopt, N);
        direct = add(direct, quad.scaled(Rational(spec.eps[i])));

        QExpansion square = false_theta_sum(full_lattice_part(spec, spec.alphas[i], false), N);
        QExpansion cross = false_theta_sum(full_lattice_part(spec, spec.alphas[i], true), N);
        sym = add(sym, add(square, cross).scaled(Rational(spec.eps[i])));
    }
    res.series = direct;
    res.symmetrized = sym.scaled(Rational(1, 4));
    if (!agree(res.series, res.symmetrized))
        throw std::logic_error("quadrant sum and symmetrized rewrite disagree at exponent " +
                               to_string(*first_mismatch(res.series, res.symmetrized)));
    return res;
}

QExpansion fsqe_series(const FsqeSpec& spec, const Rational& N) {
    return fsqe_series_detailed(spec, N).series;
}

QExpansion fsqe_difference_series(const FsqeSpec& spec, const Rational& shift,
                                  const Rational& scale, const Rational& N) {
    FsqeSpec crossed = spec;
    crossed.sigma2 = -crossed.sigma2;
    Rational inner = N - shift;
    QExpansion d = sub(fsqe_series(spec, inner), fsqe_series(crossed, inner));
    return d.scaled(scale).shifted(shift);
}

FsqeIntegralReport fsqe_integral_report(const FsqeSpec& spec, Complex tau,
                                        const QuadratureConfig& cfg) {
    QExpansion series = fsqe_series(spec, eval_trunc_exponent(tau));
    auto ev = series.eval(tau);
    CompletionResult comp = completion_detailed(CompletionKind::fsqe_kind(spec), tau,
                                                std::nullopt, cfg);
    FsqeIntegralReport rep;
    rep.series_value = ev.value;
    rep.series_tail = ev.tail_bound;
    rep.integral_value = comp.value;
    rep.integral_tail = comp.tail_remainder;
    rep.abs_difference = std::abs(ev.value - comp.value);
    return rep;
}

TwoVariableIdentityReport theta_combination_identity(long N) {
    if (N < 1) throw MalformedParams("identity order must be positive");
    using Key = std::pair<Rational, Rational>;
    auto accumulate = [](std::map<Key, Rational>& into, const QExpansion& f, const QExpansion& g,
                         const Rational& c) {
        for (const auto& [i1, c1] : f.raw_coeffs())
            for (const auto& [i2, c2] : g.raw_coeffs()) {
                Key k{Rational(i1, f.denom()), Rational(i2, g.denom())};
                k.first.canonicalize();
                k.second.canonicalize();
                Rational v = c * c1 * c2;
                auto it = into.find(k);
                if (it == into.end())
                    into.emplace(k, v);
                else if ((it->second += v) == 0)
                    into.erase(it);
            }
    };
    std::map<Key, Rational> lhs, rhs;
    for (long j = 0; j <= 3; ++j) {
        QExpansion a = theta_unary_series({Rational(2), j, 1}, Rational(N)).substituted_power(3);
        QExpansion b = theta_unary_series({Rational(2), j + 2, 1}, Rational(N));
        accumulate(lhs, a, b, Rational(j % 2 == 0 ? 1 : -1));
    }
    QExpansion e3 = eta3_theta_series(N);
    accumulate(rhs, e3.substituted_power(3), e3, Rational(1, 8));
    TwoVariableIdentityReport rep;
    rep.match = lhs == rhs;
    if (!rep.match) {
        for (const auto& [k, v] : lhs) {
            auto it = rhs.find(k);
            if (it == rhs.end() || it->second != v) {
                rep.first_mismatch = k;
                break;
            }
        }
        if (!rep.first_mismatch && !rhs.empty()) {
            for (const auto& [k, v] : rhs)
                if (lhs.find(k) == lhs.end()) {
                    rep.first_mismatch = k;
                    break;
                }
        }
    }
    return rep;
}

FkIdentityReport fk_identity_suite(long k, long N, Complex tau, const QuadratureConfig& cfg) {
    if (k < 1) throw MalformedParams("the index family starts at k = 1");
    if (N < 1) throw MalformedParams("series order must be positive");
    FkIdentityReport rep;
    QExpansion via_ct = tk_coefficient(k, {0, 0}, Rational(N));
    QExpansion direct = fk_series(k, Rational(N));
    rep.series_match = agree(via_ct, direct);
    rep.series_mismatch = first_mismatch(via_ct, direct);
    if (k == 1) rep.theta_identity = theta_combination_identity(N);
    QExpansion fine = fk_series(k, eval_trunc_exponent(tau));
    auto ev = fine.eval(tau);
    CompletionResult comp = completion_detailed(CompletionKind::fk(k), tau, std::nullopt, cfg);
    rep.integral_residual = std::abs(ev.value - comp.value);
    rep.integral_tail = ev.tail_bound + comp.tail_remainder;
    return rep;
}

} // namespace ft
