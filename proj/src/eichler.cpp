#include "falsetheta/eichler.hpp"

#include "falsetheta/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

namespace ft {

namespace {

constexpr long double kPiL = 3.14159265358979323846264338327950288L;

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes on (0,1), cached per node count.

struct GlRule {
    std::vector<long double> x, w;
};

GlRule compute_gl(int n) {
    GlRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    for (int i = 0; i < n; ++i) {
        long double t = std::cos(kPiL * (i + 0.75L) / (n + 0.5L));
        long double dp = 1;
        for (int iter = 0; iter < 100; ++iter) {
            long double p0 = 1, p1 = t;
            for (int k = 2; k <= n; ++k) {
                long double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1);
            long double step = p1 / dp;
            t -= step;
            if (std::fabs(step) < 1e-19L) break;
        }
        rule.x[i] = (1 + t) / 2;
        rule.w[i] = 1 / ((1 - t * t) * dp * dp);
    }
    return rule;
}

const GlRule& gl_rule(int n) {
    static std::mutex mu;
    static std::map<int, GlRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gl(n)).first;
    return it->second;
}

// Node grid for one integration layer after the square substitution y = s^2
// that removes the inverse square-root endpoint singularity.
template <typename R>
struct SqGrid {
    std::vector<R> y, wgt;
};

template <typename R>
SqGrid<R> make_grid(int nodes, int panels) {
    const GlRule& rule = gl_rule(nodes);
    SqGrid<R> g;
    g.y.reserve(static_cast<size_t>(nodes) * panels);
    g.wgt.reserve(static_cast<size_t>(nodes) * panels);
    for (int p = 0; p < panels; ++p) {
        for (int i = 0; i < nodes; ++i) {
            R s = (R(p) + R(rule.x[i])) / R(panels);
            R ws = R(rule.w[i]) / R(panels);
            g.y.push_back(s * s);
            g.wgt.push_back(R(2) * s * ws);
        }
    }
    return g;
}

bool extended_mode() {
    const char* v = std::getenv("FT_EICHLER_EXTENDED");
    return v != nullptr && *v != '\0' && !(v[0] == '0' && v[1] == '\0');
}

double frac_dist(double x) {
    double f = x - std::floor(x);
    return std::min(f, 1.0 - f);
}

// ---------------------------------------------------------------------------
// Direct numeric evaluation of the series families in the upper half-plane.

template <typename R>
struct Num {
    using C = std::complex<R>;

    static R pi() { return R(kPiL); }
    static C iu() { return C(0, 1); }

    // e^{2 pi i t}
    static C e2pi(const C& t) { return std::exp(C(0, 2) * pi() * t); }

    static void require_upper(const C& w, const char* who) {
        if (!(w.imag() > R(0)))
            throw NonconvergentEvaluation(std::string(who) +
                                          ": argument must lie in the upper half-plane");
    }

    // lattice radius so discarded terms exp(-2 pi c j^2 im) stay below ~1e-20
    static long gauss_range(R c, R im, const char* who) {
        double need = std::sqrt(46.0 / (2.0 * static_cast<double>(kPiL) *
                                        static_cast<double>(c) * static_cast<double>(im)));
        if (!(need < 2e6))
            throw NonconvergentEvaluation(std::string(who) + ": series truncation diverges");
        return static_cast<long>(std::ceil(need)) + 2;
    }

    static C unary_theta(const UnaryThetaSpec& spec, const C& w) {
        require_upper(w, "unary theta");
        long den = den_long(spec.m);
        if (den != 1 && den != 2)
            throw MalformedParams("unary theta modulus must be integer or half-integer");
        R md = R(to_double(spec.m));
        if (!(md > R(0))) throw MalformedParams("unary theta modulus must be positive");
        R off = R(spec.r) / (R(2) * md) + (den == 2 ? R(0.5) : R(0));
        long base = std::lround(static_cast<double>(off));
        R frac = off - R(base);
        long N = gauss_range(md, w.imag(), "unary theta");
        C s(0, 0);
        for (long j = -N; j <= N; ++j) {
            R n = frac + R(j);
            R weight = 1;
            for (int d = 0; d < spec.deriv; ++d) weight *= n;
            if (den == 2 && ((j + base) & 1L)) weight = -weight;
            if (weight == R(0)) continue;
            s += weight * std::exp(C(0, 2) * pi() * md * n * n * w);
        }
        return s;
    }

    static C jacobi(const C& z, const C& tau) {
        require_upper(tau, "jacobi theta");
        R half_t = tau.imag() / R(2);
        R b = std::abs(z.imag());
        double xr = (static_cast<double>(b) +
                     std::sqrt(static_cast<double>(b * b) + 32.0 * static_cast<double>(half_t))) /
                    (2.0 * static_cast<double>(half_t));
        if (!(xr < 2e6)) throw NonconvergentEvaluation("jacobi theta: truncation diverges");
        long M = static_cast<long>(std::ceil(xr)) + 3;
        C s(0, 0);
        for (long m = -M; m <= M; ++m) {
            R n = R(m) + R(0.5);
            C term = std::exp(C(0, 2) * pi() * (tau * n * n / R(2) + z * n));
            if (m & 1L) term = -term;
            s += term;
        }
        return iu() * s;
    }

    static C eta(const C& tau) {
        require_upper(tau, "eta");
        long N = gauss_range(R(3) / R(2), tau.imag(), "eta");
        C s(0, 0);
        for (long n = -N; n <= N; ++n) {
            R e = R(6 * n - 1);
            e = e * e / R(24);
            C term = std::exp(C(0, 2) * pi() * e * tau);
            if (n & 1L) term = -term;
            s += term;
        }
        return s;
    }

    // eta^3 through the weight-3/2 unary theta, one exponential per lattice point
    static C eta3(const C& tau) { return R(4) * unary_theta({rat(2), 1, 1}, tau); }

    static C e2(const C& tau) {
        require_upper(tau, "E2");
        C q = e2pi(tau);
        long N = static_cast<long>(std::ceil(46.0 / (2.0 * static_cast<double>(kPiL) *
                                                     static_cast<double>(tau.imag())))) +
                 10;
        C s(0, 0), qn(1, 0);
        for (long n = 1; n <= N; ++n) {
            qn *= q;
            s += R(n) * qn / (C(1, 0) - qn);
        }
        return C(1, 0) - R(24) * s;
    }

    static C theta_kind(const ThetaKind& kind, R scale, const C& w) {
        C arg = scale * w;
        switch (kind.tag) {
            case ThetaKind::Tag::Eta: return eta(arg);
            case ThetaKind::Tag::Eta3: return eta3(arg);
            case ThetaKind::Tag::Unary: return unary_theta(kind.unary, arg);
            case ThetaKind::Tag::Torsion: {
                if (kind.l1 < 0 || kind.l1 > 1 || kind.l2 < 0 || kind.l2 > 1 ||
                    (kind.l1 == 0 && kind.l2 == 0))
                    throw InvalidTorsionPoint("torsion theta needs (l1,l2) in {0,1}^2, not (0,0)");
                C zz = (R(kind.l1) * arg + R(kind.l2)) / R(2);
                return jacobi(zz, arg);
            }
        }
        throw MalformedParams("unknown theta kind");
    }
};

// ---------------------------------------------------------------------------
// Integration paths.  base(y) = i*(at(y)-tau) is computed in a form that is
// stable near y = 0 and lands on the correct side of the square-root cut for
// vertical rays (negative real axis approached from above).

template <typename R>
struct PathT {
    using C = std::complex<R>;
    enum class Shape { Vertical, Arc, Segment };
    Shape shape = Shape::Vertical;
    C tau;
    R height = 0;
    C delta;
    R center = 0, radius = 0, th0 = 0, dth = 0;

    static PathT vertical(const C& tau, R h) {
        if (!(h > R(0))) throw MalformedParams("tail height must be positive");
        PathT p;
        p.shape = Shape::Vertical;
        p.tau = tau;
        p.height = h;
        return p;
    }

    static PathT segment(const C& tau, const C& w) {
        if (std::abs(w - tau) == R(0)) throw MalformedParams("path endpoints coincide");
        PathT p;
        p.shape = Shape::Segment;
        p.tau = tau;
        p.delta = w - tau;
        return p;
    }

    static PathT geodesic(const C& tau, const C& w) {
        R dx = w.real() - tau.real();
        R span = R(1) + std::abs(w) + std::abs(tau);
        if (std::abs(dx) <= R(1e-13) * span) return segment(tau, C(tau.real(), w.imag()));
        PathT p;
        p.shape = Shape::Arc;
        p.tau = tau;
        p.center = (std::norm(w) - std::norm(tau)) / (R(2) * dx);
        C c0(p.center, 0);
        p.radius = std::abs(tau - c0);
        p.th0 = std::arg(tau - c0);
        p.dth = std::arg(w - c0) - p.th0;
        return p;
    }

    C at(R y) const {
        switch (shape) {
            case Shape::Vertical: return tau + C(0, height * y);
            case Shape::Segment: return tau + delta * y;
            case Shape::Arc: {
                R th = th0 + dth * y;
                return C(center, 0) + radius * C(std::cos(th), std::sin(th));
            }
        }
        return tau;
    }

    C deriv(R y) const {
        switch (shape) {
            case Shape::Vertical: return C(0, height);
            case Shape::Segment: return delta;
            case Shape::Arc: {
                R th = th0 + dth * y;
                return C(0, 1) * (radius * dth) * C(std::cos(th), std::sin(th));
            }
        }
        return C(0, 0);
    }

    C base(R y) const {
        switch (shape) {
            case Shape::Vertical: return C(-height * y, R(0));
            case Shape::Segment: return C(0, 1) * delta * y;
            case Shape::Arc: {
                R half = dth * y / R(2);
                R f = R(-2) * radius * std::sin(half);
                R mu = th0 + half;
                return C(f * std::cos(mu), f * std::sin(mu));
            }
        }
        return C(0, 0);
    }
};

template <typename R>
int chi_value(const PathT<R>& path, R y, const char* who) {
    using C = std::complex<R>;
    C p = path.at(y), b = path.base(y);
    C v = std::sqrt(b / (p * path.tau)) * std::sqrt(p) * std::sqrt(path.tau) / std::sqrt(b);
    if (std::abs(v - C(1, 0)) < R(1e-5)) return 1;
    if (std::abs(v + C(1, 0)) < R(1e-5)) return -1;
    throw BranchCrossing(std::string(who) + ": square-root tracking sign left {-1,+1}");
}

// ---------------------------------------------------------------------------
// Iterated integral engines.  The integrand is a sum of separable terms
// coeff * f(w1) * g(w2); both layers run over the same path with the inner
// endpoint tied to the outer node.

template <typename R>
struct TermT {
    std::function<std::complex<R>(const std::complex<R>&)> f, g;
    std::complex<R> coeff;
};

template <typename R>
struct IterResult {
    std::complex<R> value{};
    int chi = 1;
    R top = 0; // |outer integrand| at the node nearest the far endpoint
};

// sum_t coeff_t int_tau^end f_t(w1) (i(w1-tau))^{-1/2} int_tau^{w1} g_t(w2) (i(w2-tau))^{-1/2}
template <typename R>
IterResult<R> iterated_plain(const std::vector<TermT<R>>& terms, const PathT<R>& path,
                             const SqGrid<R>& grid, const char* who) {
    using C = std::complex<R>;
    const size_t G = grid.y.size(), T = terms.size();
    IterResult<R> out;
    out.chi = chi_value(path, R(1), who);
    C sum(0, 0);
    R ymax = -1;
    std::vector<C> inner(T);
    for (size_t a = 0; a < G; ++a) {
        R y1 = grid.y[a];
        if (chi_value(path, y1, who) != out.chi)
            throw BranchCrossing(std::string(who) + ": branch sign changed along the path");
        C w1 = path.at(y1);
        C kh1 = C(1, 0) / std::sqrt(path.base(y1));
        std::fill(inner.begin(), inner.end(), C(0, 0));
        for (size_t b = 0; b < G; ++b) {
            R y2 = y1 * grid.y[b];
            if (chi_value(path, y2, who) != out.chi)
                throw BranchCrossing(std::string(who) + ": branch sign changed along the path");
            C w2 = path.at(y2);
            C fac = grid.wgt[b] * (C(1, 0) / std::sqrt(path.base(y2))) * path.deriv(y2) * y1;
            for (size_t t = 0; t < T; ++t) inner[t] += fac * terms[t].g(w2);
        }
        C bracket(0, 0);
        for (size_t t = 0; t < T; ++t) bracket += terms[t].coeff * terms[t].f(w1) * inner[t];
        C contrib = kh1 * path.deriv(y1) * bracket;
        sum += grid.wgt[a] * contrib;
        if (y1 > ymax) {
            ymax = y1;
            out.top = std::abs(contrib);
        }
    }
    out.value = sum;
    return out;
}

// Same shape but with the inner kernel (i(w2-tau))^{-3/2}, regularized by
// subtracting g(tau) and integrating the subtracted kernel exactly:
//   reg int_tau^{w1} g k_{3/2} = int_tau^{w1} (g - g(tau)) k_{3/2}
//                                + 2i g(tau) (i(w1-tau))^{-1/2}.
// The leftover (i(w1-tau))^{-1} singularity of the outer integrand cancels
// in the sum over terms because sum_t coeff_t f_t(tau) g_t(tau) = 0 for the
// families routed here; the quadrature sees only the analytic remainder.
template <typename R>
IterResult<R> iterated_regularized(const std::vector<TermT<R>>& terms, const PathT<R>& path,
                                   const SqGrid<R>& grid, const char* who) {
    using C = std::complex<R>;
    const size_t G = grid.y.size(), T = terms.size();
    IterResult<R> out;
    out.chi = chi_value(path, R(1), who);
    std::vector<C> gtau(T);
    for (size_t t = 0; t < T; ++t) gtau[t] = terms[t].g(path.tau);
    C sum(0, 0);
    R ymax = -1;
    std::vector<C> inner(T);
    for (size_t a = 0; a < G; ++a) {
        R y1 = grid.y[a];
        if (chi_value(path, y1, who) != out.chi)
            throw BranchCrossing(std::string(who) + ": branch sign changed along the path");
        C w1 = path.at(y1);
        C kh1 = C(1, 0) / std::sqrt(path.base(y1));
        std::fill(inner.begin(), inner.end(), C(0, 0));
        for (size_t b = 0; b < G; ++b) {
            R y2 = y1 * grid.y[b];
            if (chi_value(path, y2, who) != out.chi)
                throw BranchCrossing(std::string(who) + ": branch sign changed along the path");
            C w2 = path.at(y2);
            C kh = C(1, 0) / std::sqrt(path.base(y2));
            C fac = grid.wgt[b] * kh * kh * kh * path.deriv(y2) * y1;
            for (size_t t = 0; t < T; ++t) inner[t] += fac * (terms[t].g(w2) - gtau[t]);
        }
        C bracket(0, 0);
        for (size_t t = 0; t < T; ++t)
            bracket += terms[t].coeff * terms[t].f(w1) * (inner[t] + C(0, 2) * gtau[t] * kh1);
        C contrib = kh1 * path.deriv(y1) * bracket;
        sum += grid.wgt[a] * contrib;
        if (y1 > ymax) {
            ymax = y1;
            out.top = std::abs(contrib);
        }
    }
    out.value = sum;
    return out;
}

void check_config(const QuadratureConfig& cfg) {
    if (cfg.nodes <= 0 || cfg.panels <= 0 || cfg.tolerance <= 0 || cfg.tail < 0)
        throw MalformedParams("quadrature config entries must be positive");
}

double auto_tail(double mu, const QuadratureConfig& cfg) {
    if (cfg.tail > 0) return cfg.tail;
    double t = std::log(100.0 / cfg.tolerance) / (2.0 * static_cast<double>(kPiL) * mu);
    return std::min(400.0, std::max(4.0, t));
}

} // namespace

void validate_fsqe(const FsqeSpec& spec) {
    if (spec.sigma1 < 1 || spec.sigma3 < 1 ||
        spec.sigma1 * spec.sigma3 - spec.sigma2 * spec.sigma2 <= 0)
        throw NotPositiveDefinite("fsqe quadratic form must be positive definite");
    if (spec.K < 1) throw MalformedParams("fsqe scale K must be a positive integer");
    if (spec.alphas.empty() || spec.alphas.size() != spec.eps.size())
        throw MalformedParams("fsqe offset and sign lists must be nonempty and equal length");
    for (int e : spec.eps)
        if (e != 1 && e != -1) throw MalformedParams("fsqe signs must be +-1");
    for (const auto& [a1, a2] : spec.alphas) {
        Rational k1 = a1 * spec.K, k2 = a2 * spec.K;
        if (!is_integer(k1) || !is_integer(k2) || sgn(k1) <= 0 || sgn(k2) <= 0)
            throw MalformedParams("fsqe offsets must have positive integer K*alpha");
    }
    // The summation-by-parts argument behind the integral representation needs
    // the shift set closed under both reflections, with matching signs.
    auto find = [&](const Rational& x, const Rational& y) {
        for (size_t i = 0; i < spec.alphas.size(); ++i)
            if (spec.alphas[i].first == x && spec.alphas[i].second == y) return int(i);
        return -1;
    };
    for (size_t i = 0; i < spec.alphas.size(); ++i) {
        const auto& [a1, a2] = spec.alphas[i];
        int j = find(1 - a1, 1 - a2);
        int k = find(1 - a1, a2);
        if (j < 0 || k < 0)
            throw ClosureViolation("fsqe shift set is not closed under its reflections");
        if (spec.eps[size_t(j)] != spec.eps[i] || spec.eps[size_t(k)] != spec.eps[i])
            throw ClosureViolation("fsqe sign map is not constant on reflection orbits");
    }
}

namespace {

// ---------------------------------------------------------------------------
// Completion assembly.

template <typename R>
CompletionResult completion_impl(const CompletionKind& kind, Complex tau_in,
                                 std::optional<Complex> w_in, const QuadratureConfig& cfg,
                                 PathStyle style) {
    using C = std::complex<R>;
    using N = Num<R>;
    check_config(cfg);
    if (!(tau_in.imag() > 0))
        throw NonconvergentEvaluation("completion: tau must lie in the upper half-plane");
    C tau(R(tau_in.real()), R(tau_in.imag()));

    std::vector<TermT<R>> terms;
    bool regularized = false;
    C outer_scale(1, 0);
    C addend(0, 0);
    double mu = std::numeric_limits<double>::infinity();

    auto push_unary = [&](const UnaryThetaSpec& sf, const Rational& fscale,
                          const UnaryThetaSpec& sg, const C& coeff) {
        TermT<R> t;
        R fs = R(to_double(fscale));
        t.f = [sf, fs](const C& w) { return N::unary_theta(sf, fs * w); };
        t.g = [sg](const C& w) { return N::unary_theta(sg, w); };
        t.coeff = coeff;
        terms.push_back(std::move(t));
    };

    switch (kind.tag) {
        case CompletionKind::Tag::Psi: {
            regularized = true;
            push_unary({rat(3), 1, 1}, rat(1), {rat(1), 1, 0}, C(1, 0));
            push_unary({rat(3), 2, 1}, rat(1), {rat(1), 0, 0}, C(-1, 0));
            outer_scale = C(std::sqrt(R(3)) / (R(2) * N::pi()), 0);
            mu = 1.0 / 12;
            break;
        }
        case CompletionKind::Tag::Phi: {
            regularized = true;
            C lam = -N::iu() * N::pi() / R(6) * N::e2(tau);
            auto push_corr = [&](const UnaryThetaSpec& sf, const UnaryThetaSpec& sg,
                                 const C& coeff) {
                TermT<R> t;
                t.f = [sf](const C& w) { return N::unary_theta(sf, w); };
                t.g = [sg, lam, tau](const C& w) {
                    return N::unary_theta(sg, w) * (C(1, 0) + lam * (w - tau));
                };
                t.coeff = coeff;
                terms.push_back(std::move(t));
            };
            push_corr({rat(3), 1, 1}, {rat(3), 2, 1}, C(4, 0));
            push_corr({rat(3), 2, 1}, {rat(3), 1, 1}, C(-4, 0));
            push_corr({rat(3, 2), 1, 1}, {rat(3, 2), 0, 1}, C(1, 0));
            push_corr({rat(3, 2), 0, 1}, {rat(3, 2), 1, 1}, C(-1, 0));
            outer_scale = C(1, 0) / N::pi();
            mu = 1.0 / 24;
            break;
        }
        case CompletionKind::Tag::Fk: {
            long k = kind.k;
            if (k < 1) throw MalformedParams("fk index must be a positive integer");
            R fs = R(2 * k + 1);
            TermT<R> etat;
            etat.f = [fs](const C& w) { return N::eta3(fs * w); };
            etat.g = [](const C& w) { return N::eta3(w); };
            etat.coeff = C(1, 0);
            terms.push_back(std::move(etat));
            mu = (2.0 * k + 1) / 8.0;
            for (long j = 0; j <= 2 * k + 1; ++j) {
                if (j % (2 * (k + 1)) == 0) continue;          // outer factor vanishes
                if ((j + k + 1) % (2 * (k + 1)) == 0) continue; // inner factor vanishes
                C coeff(R((j % 2 == 0) ? 2 * (k + 1) : -2 * (k + 1)), 0);
                push_unary({rat(k + 1), j, 1}, rat(2 * k + 1), {rat(k + 1), j + k + 1, 1}, coeff);
                double dj = frac_dist(static_cast<double>(j) / (2.0 * (k + 1)));
                mu = std::min(mu, (2.0 * k + 1) * (k + 1) * dj * dj);
            }
            outer_scale = C(std::sqrt(R(2 * k + 1)) / R(2), 0);
            break;
        }
        case CompletionKind::Tag::Fsqe: {
            const FsqeSpec& spec = kind.fsqe;
            validate_fsqe(spec);
            long D = spec.sigma1 * spec.sigma3 - spec.sigma2 * spec.sigma2;
            R sqd = std::sqrt(R(D));
            auto add_family = [&](bool first) {
                long s_out = first ? spec.sigma3 : spec.sigma1;
                for (size_t idx = 0; idx < spec.alphas.size(); ++idx) {
                    Rational a1 = first ? spec.alphas[idx].first : spec.alphas[idx].second;
                    Rational a2 = first ? spec.alphas[idx].second : spec.alphas[idx].first;
                    for (long r = 0; r < s_out; ++r) {
                        Rational ar = a1 + r;
                        Rational off1 = ar / rat(s_out);
                        Rational off2 = (ar * spec.sigma2 + a2 * s_out) / rat(s_out);
                        if (is_integer(off1) || is_integer(off2)) continue;
                        long m1 = spec.K * D * s_out;
                        long r1 = num_long(ar * (2 * spec.K * D));
                        long m2 = spec.K * s_out;
                        long r2 = num_long((ar * spec.sigma2 + a2 * s_out) * (2 * spec.K));
                        C coeff(R(spec.eps[idx]) * R(spec.K * s_out) * sqd / R(2), 0);
                        push_unary({rat(m1), r1, 1}, rat(1), {rat(m2), r2, 1}, coeff);
                        double d1 = frac_dist(to_double(off1));
                        mu = std::min(mu, static_cast<double>(m1) * d1 * d1);
                    }
                }
            };
            add_family(true);
            add_family(false);
            C corr(0, 0);
            for (size_t idx = 0; idx < spec.alphas.size(); ++idx) {
                for (long r = 0; r < spec.sigma3; ++r) {
                    Rational ar = spec.alphas[idx].first + r;
                    UnaryThetaSpec t1{rat(spec.K * D * spec.sigma3),
                                      num_long(ar * (2 * spec.K * D)), 0};
                    UnaryThetaSpec t2{rat(spec.K * spec.sigma3),
                                      num_long((ar * spec.sigma2 +
                                                spec.alphas[idx].second * spec.sigma3) *
                                               (2 * spec.K)),
                                      0};
                    corr += R(spec.eps[idx]) * N::unary_theta(t1, tau) * N::unary_theta(t2, tau);
                }
            }
            addend = (C(1, 0) - C(2, 0) / N::pi() * std::atan(R(spec.sigma2) / sqd)) * corr / R(4);
            if (terms.empty()) mu = 1.0;
            break;
        }
    }

    PathT<R> path = PathT<R>::vertical(tau, R(1));
    if (w_in) {
        if (!(w_in->imag() > 0))
            throw NonconvergentEvaluation("completion: w must lie in the upper half-plane");
        C w(R(w_in->real()), R(w_in->imag()));
        path = (style == PathStyle::Straight) ? PathT<R>::segment(tau, w)
                                              : PathT<R>::geodesic(tau, w);
    } else {
        path = PathT<R>::vertical(tau, R(auto_tail(mu, cfg)));
    }

    CompletionResult res;
    if (terms.empty()) {
        res.chi = chi_value(path, R(1), "completion");
        res.value = Complex(static_cast<double>(addend.real()), static_cast<double>(addend.imag()));
        res.tail_remainder = 0;
        return res;
    }

    SqGrid<R> grid = make_grid<R>(cfg.nodes, cfg.panels);
    IterResult<R> it = regularized ? iterated_regularized(terms, path, grid, "completion")
                                   : iterated_plain(terms, path, grid, "completion");
    C total = outer_scale * it.value + addend;
    res.value = Complex(static_cast<double>(total.real()), static_cast<double>(total.imag()));
    res.chi = it.chi;
    res.tail_remainder =
        w_in ? 0.0
             : static_cast<double>(std::abs(outer_scale)) * static_cast<double>(it.top) /
                   (2.0 * static_cast<double>(kPiL) * mu);
    return res;
}

// single iterated integral of a e^{pi i a^2 w1} against b e^{pi i b^2 w2}
template <typename R>
std::complex<R> signed_pair_integral(double a, double b, const std::complex<R>& tau,
                                     const QuadratureConfig& cfg) {
    using C = std::complex<R>;
    if (a == 0.0 || b == 0.0) return C(0, 0);
    TermT<R> t;
    t.f = [a](const C& w) { return R(a) * std::exp(C(0, 1) * Num<R>::pi() * R(a * a) * w); };
    t.g = [b](const C& w) { return R(b) * std::exp(C(0, 1) * Num<R>::pi() * R(b * b) * w); };
    t.coeff = C(1, 0);
    std::vector<TermT<R>> terms{std::move(t)};
    PathT<R> path = PathT<R>::vertical(tau, R(auto_tail(a * a / 2.0, cfg)));
    SqGrid<R> grid = make_grid<R>(cfg.nodes, cfg.panels);
    return iterated_plain(terms, path, grid, "sign lemma").value;
}

template <typename R>
double sign_lemma_impl(double l1, double l2, double kappa, Complex tau_in,
                       const QuadratureConfig& cfg) {
    using C = std::complex<R>;
    check_config(cfg);
    if (!(tau_in.imag() > 0))
        throw NonconvergentEvaluation("sign lemma: tau must lie in the upper half-plane");
    C tau(R(tau_in.real()), R(tau_in.imag()));
    auto sgnd = [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); };
    C qpow = std::exp(C(0, 1) * Num<R>::pi() * R(l1 * l1 + l2 * l2) * tau);
    C lhs = R(sgnd(l1) * sgnd(l2 + kappa * l1)) * qpow;
    double s = std::sqrt(1.0 + kappa * kappa);
    double m1 = (l2 + kappa * l1) / s, m2 = (l1 - kappa * l2) / s;
    C rhs = signed_pair_integral<R>(l1, l2, tau, cfg) +
            signed_pair_integral<R>(m1, m2, tau, cfg) +
            R(2.0 / static_cast<double>(kPiL) * std::atan(kappa)) * qpow;
    return static_cast<double>(std::abs(lhs - rhs));
}

// one-dimensional weighted theta over Z + beta used by the rank-two check
template <typename R>
std::complex<R> offset_theta1(double beta, double qc, const std::complex<R>& w) {
    using C = std::complex<R>;
    double im = static_cast<double>(w.imag());
    double xr = std::sqrt(46.0 / (static_cast<double>(kPiL) * qc * im));
    long lo = static_cast<long>(std::floor(-xr - beta)) - 1;
    long hi = static_cast<long>(std::ceil(xr - beta)) + 1;
    C s(0, 0);
    for (long m = lo; m <= hi; ++m) {
        R x = R(beta) + R(m);
        s += x * std::exp(C(0, 1) * Num<R>::pi() * R(qc) * x * x * w);
    }
    return s;
}

template <typename R>
double rank_two_impl(long a, long b, long c, const Rational& alpha1, const Rational& alpha2,
                     Complex tau_in, const QuadratureConfig& cfg) {
    using C = std::complex<R>;
    check_config(cfg);
    long delta = a * c - b * b;
    if (a <= 0 || c <= 0 || delta <= 0)
        throw NotPositiveDefinite("rank-two form must be positive definite");
    if (!(tau_in.imag() > 0))
        throw NonconvergentEvaluation("rank-two check: tau must lie in the upper half-plane");
    C tau(R(tau_in.real()), R(tau_in.imag()));
    const double pid = static_cast<double>(kPiL);
    double imt = tau_in.imag();
    double A1 = to_double(alpha1), A2 = to_double(alpha2);

    // series side, truncated by the smallest eigenvalue of the Gram matrix
    double lam_min = ((a + c) - std::sqrt(static_cast<double>((a - c) * (a - c) + 4 * b * b))) / 2.0;
    long Rn = static_cast<long>(std::ceil(std::sqrt(46.0 / (pid * lam_min * imt)) +
                                          std::fabs(A1) + std::fabs(A2))) +
              2;
    auto sgnd = [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); };
    C series(0, 0), theta(0, 0);
    for (long j1 = -Rn; j1 <= Rn; ++j1) {
        for (long j2 = -Rn; j2 <= Rn; ++j2) {
            double n1 = A1 + j1, n2 = A2 + j2;
            C qq = std::exp(C(0, 1) * Num<R>::pi() * tau *
                            R(a * n1 * n1 + 2.0 * b * n1 * n2 + c * n2 * n2));
            theta += qq;
            double sg = sgnd(n1) * sgnd(n2);
            if (sg != 0.0) series += R(sg) * qq;
        }
    }
    double arct = 2.0 / pid * std::atan(static_cast<double>(b) / std::sqrt(static_cast<double>(delta)));
    bool alpha_integral = is_integer(alpha1) && is_integer(alpha2);
    C lhs = series - (alpha_integral ? C(R(arct), 0) : C(0, 0));

    // integral side: decompose the two partner theta kernels over the first
    // summation index; each slice is separable in (w1, w2)
    std::vector<TermT<R>> terms;
    double mu = std::numeric_limits<double>::infinity();
    auto add_slices = [&](double qa_out, double qc_in, double off_out, double off_in_base,
                          double ratio) {
        long lim = static_cast<long>(
                       std::ceil(std::sqrt(46.0 / (pid * qa_out * imt)) + std::fabs(off_out))) +
                   1;
        for (long j = -lim; j <= lim; ++j) {
            double n1 = off_out + j;
            if (n1 == 0.0) continue;
            double beta = off_in_base + ratio * n1;
            TermT<R> t;
            t.f = [n1, qa_out](const C& w) {
                return R(n1) * std::exp(C(0, 1) * Num<R>::pi() * R(qa_out) * R(n1) * R(n1) * w);
            };
            t.g = [beta, qc_in](const C& w) { return offset_theta1<R>(beta, qc_in, w); };
            t.coeff = C(1, 0);
            terms.push_back(std::move(t));
            mu = std::min(mu, qa_out * n1 * n1 / 2.0);
        }
    };
    double dc = static_cast<double>(delta) / c, da = static_cast<double>(delta) / a;
    add_slices(dc, static_cast<double>(c), A1, A2, static_cast<double>(b) / c);
    add_slices(da, static_cast<double>(a), A2, A1, static_cast<double>(b) / a);
    if (terms.empty()) mu = 1.0;

    PathT<R> path = PathT<R>::vertical(tau, R(auto_tail(mu, cfg)));
    SqGrid<R> grid = make_grid<R>(cfg.nodes, cfg.panels);
    C integral = terms.empty() ? C(0, 0)
                               : iterated_plain(terms, path, grid, "rank-two check").value;
    C rhs = std::sqrt(R(static_cast<double>(delta))) * integral - R(arct) * theta;
    return static_cast<double>(std::abs(lhs - rhs));
}

int cocycle_sign(const ModularMatrix& m1, const ModularMatrix& m2, Complex tau0) {
    Complex t2 = m2.apply(tau0);
    Complex v = std::sqrt(m1.automorphy(t2)) * std::sqrt(m2.automorphy(tau0)) /
                std::sqrt(m1.times(m2).automorphy(tau0));
    if (std::abs(v - 1.0) < 1e-6) return 1;
    if (std::abs(v + 1.0) < 1e-6) return -1;
    throw NonconvergentEvaluation("eta multiplier: cocycle sign did not snap to +-1");
}

} // namespace

// ---------------------------------------------------------------------------
// Public surface.

Complex ModularMatrix::apply(Complex tau) const {
    return (Complex(static_cast<double>(a)) * tau + Complex(static_cast<double>(b))) /
           (Complex(static_cast<double>(c)) * tau + Complex(static_cast<double>(d)));
}

Complex ModularMatrix::automorphy(Complex tau) const {
    return Complex(static_cast<double>(c)) * tau + Complex(static_cast<double>(d));
}

ModularMatrix ModularMatrix::times(const ModularMatrix& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
}

ThetaKind ThetaKind::eta3() {
    ThetaKind k;
    k.tag = Tag::Eta3;
    return k;
}

ThetaKind ThetaKind::unary_theta(const UnaryThetaSpec& spec) {
    ThetaKind k;
    k.tag = Tag::Unary;
    k.unary = spec;
    return k;
}

ThetaKind ThetaKind::torsion(int l1, int l2) {
    if (l1 < 0 || l1 > 1 || l2 < 0 || l2 > 1 || (l1 == 0 && l2 == 0))
        throw InvalidTorsionPoint("torsion theta needs (l1,l2) in {0,1}^2, not (0,0)");
    ThetaKind k;
    k.tag = Tag::Torsion;
    k.l1 = l1;
    k.l2 = l2;
    return k;
}

Complex theta_numeric(const ThetaKind& kind, const Rational& scale, Complex w) {
    if (sgn(scale) <= 0) throw MalformedParams("theta argument scale must be positive");
    if (extended_mode()) {
        auto v = Num<long double>::theta_kind(kind, static_cast<long double>(to_double(scale)),
                                              std::complex<long double>(w.real(), w.imag()));
        return Complex(static_cast<double>(v.real()), static_cast<double>(v.imag()));
    }
    return Num<double>::theta_kind(kind, to_double(scale), w);
}

Complex jacobi_theta_numeric(Complex z, Complex tau) { return Num<double>::jacobi(z, tau); }

Complex eta_numeric(Complex tau) { return Num<double>::eta(tau); }

Complex e2_numeric(Complex tau) { return Num<double>::e2(tau); }

GeodesicPath GeodesicPath::vertical_ray(Complex tau, double height) {
    if (!(tau.imag() > 0)) throw MalformedParams("path base point must lie in the upper half-plane");
    if (!(height > 0)) throw MalformedParams("tail height must be positive");
    GeodesicPath p;
    p.shape_ = Shape::Vertical;
    p.tau_ = tau;
    p.height_ = height;
    return p;
}

GeodesicPath GeodesicPath::to_point(Complex tau, Complex w) {
    if (!(tau.imag() > 0) || !(w.imag() > 0))
        throw MalformedParams("path endpoints must lie in the upper half-plane");
    PathT<double> impl = PathT<double>::geodesic(tau, w);
    GeodesicPath p;
    p.tau_ = tau;
    if (impl.shape == PathT<double>::Shape::Segment) {
        p.shape_ = Shape::Segment;
        p.delta_ = impl.delta;
    } else {
        p.shape_ = Shape::Arc;
        p.center_ = impl.center;
        p.radius_ = impl.radius;
        p.th0_ = impl.th0;
        p.th1_ = impl.th0 + impl.dth;
    }
    return p;
}

GeodesicPath GeodesicPath::straight(Complex tau, Complex w) {
    if (!(tau.imag() > 0) || !(w.imag() > 0))
        throw MalformedParams("path endpoints must lie in the upper half-plane");
    GeodesicPath p;
    p.shape_ = Shape::Segment;
    p.tau_ = tau;
    p.delta_ = w - tau;
    return p;
}

namespace {

// shape code: 0 vertical, 1 segment, 2 arc
PathT<double> unpack(int shape, Complex tau, double height, Complex delta, double center,
                     double radius, double th0, double th1) {
    PathT<double> p;
    p.tau = tau;
    if (shape == 0) {
        p.shape = PathT<double>::Shape::Vertical;
        p.height = height;
    } else if (shape == 1) {
        p.shape = PathT<double>::Shape::Segment;
        p.delta = delta;
    } else {
        p.shape = PathT<double>::Shape::Arc;
        p.center = center;
        p.radius = radius;
        p.th0 = th0;
        p.dth = th1 - th0;
    }
    return p;
}

} // namespace

Complex GeodesicPath::endpoint() const { return at(1.0); }

Complex GeodesicPath::at(double y) const {
    return unpack(shape_code(), tau_, height_, delta_, center_, radius_, th0_, th1_).at(y);
}

Complex GeodesicPath::derivative(double y) const {
    return unpack(shape_code(), tau_, height_, delta_, center_, radius_, th0_, th1_).deriv(y);
}

Complex GeodesicPath::branch_base(double y) const {
    return unpack(shape_code(), tau_, height_, delta_, center_, radius_, th0_, th1_).base(y);
}

int GeodesicPath::chi(double y) const {
    return chi_value(unpack(shape_code(), tau_, height_, delta_, center_, radius_, th0_, th1_), y,
                     "path");
}

Complex regularized_inner(const std::function<Complex(Complex)>& f, Complex tau, Complex w1,
                          const QuadratureConfig& cfg) {
    check_config(cfg);
    if (!(tau.imag() > 0) || !(w1.imag() > 0))
        throw NonconvergentEvaluation("regularized integral endpoints must lie in the upper half-plane");
    PathT<double> path = PathT<double>::geodesic(tau, w1);
    SqGrid<double> grid = make_grid<double>(cfg.nodes, cfg.panels);
    int chi0 = chi_value(path, 1.0, "regularized integral");
    Complex ftau = f(tau);
    Complex acc(0, 0);
    for (size_t b = 0; b < grid.y.size(); ++b) {
        double y = grid.y[b];
        if (chi_value(path, y, "regularized integral") != chi0)
            throw BranchCrossing("regularized integral: branch sign changed along the path");
        Complex kh = 1.0 / std::sqrt(path.base(y));
        acc += grid.wgt[b] * kh * kh * kh * path.deriv(y) * (f(path.at(y)) - ftau);
    }
    acc += Complex(0, 2) * ftau / std::sqrt(path.base(1.0));
    return acc;
}

CompletionKind CompletionKind::psi() { return {}; }

CompletionKind CompletionKind::phi() {
    CompletionKind k;
    k.tag = Tag::Phi;
    return k;
}

CompletionKind CompletionKind::fk(long k) {
    if (k < 1) throw MalformedParams("fk index must be a positive integer");
    CompletionKind c;
    c.tag = Tag::Fk;
    c.k = k;
    return c;
}

CompletionKind CompletionKind::fsqe_kind(FsqeSpec spec) {
    validate_fsqe(spec);
    CompletionKind c;
    c.tag = Tag::Fsqe;
    c.fsqe = std::move(spec);
    return c;
}

CompletionResult completion_detailed(const CompletionKind& kind, Complex tau,
                                     std::optional<Complex> w, const QuadratureConfig& cfg,
                                     PathStyle style) {
    if (extended_mode()) return completion_impl<long double>(kind, tau, w, cfg, style);
    return completion_impl<double>(kind, tau, w, cfg, style);
}

Complex completion(const CompletionKind& kind, Complex tau, std::optional<Complex> w,
                   const QuadratureConfig& cfg, PathStyle style) {
    return completion_detailed(kind, tau, w, cfg, style).value;
}

double sign_lemma_residual(double l1, double l2, double kappa, Complex tau,
                           const QuadratureConfig& cfg) {
    if (extended_mode()) return sign_lemma_impl<long double>(l1, l2, kappa, tau, cfg);
    return sign_lemma_impl<double>(l1, l2, kappa, tau, cfg);
}

double rank_two_sign_residual(long a, long b, long c, const Rational& alpha1,
                              const Rational& alpha2, Complex tau, const QuadratureConfig& cfg) {
    if (extended_mode()) return rank_two_impl<long double>(a, b, c, alpha1, alpha2, tau, cfg);
    return rank_two_impl<double>(a, b, c, alpha1, alpha2, tau, cfg);
}

EtaMultiplierState eta_multiplier(const ModularMatrix& m_in) {
    if (m_in.det() != 1) throw MalformedParams("eta multiplier needs a determinant-one matrix");
    // peel into T-powers and S from the left; |c| at least halves each round
    std::vector<std::pair<char, long>> gens;
    ModularMatrix m = m_in;
    while (m.c != 0) {
        long n = std::lround(static_cast<double>(m.a) / static_cast<double>(m.c));
        if (n != 0) gens.push_back({'T', n});
        long a2 = m.a - n * m.c, b2 = m.b - n * m.d;
        m = ModularMatrix{m.c, m.d, -a2, -b2};
        gens.push_back({'S', 0});
    }
    long tb = (m.a == 1) ? m.b : -m.b;
    if (tb != 0) gens.push_back({'T', tb});
    if (m.a == -1) {
        gens.push_back({'S', 0});
        gens.push_back({'S', 0});
    }

    const Complex tau0(0.3, 2.0);
    ModularMatrix acc = ModularMatrix::identity();
    long phase = 0;
    bool started = false;
    std::ostringstream word;
    for (const auto& [tag, n] : gens) {
        ModularMatrix g = (tag == 'T') ? ModularMatrix::t_power(n) : ModularMatrix::s();
        long gphase = (tag == 'T') ? n : -3;
        if (started) word << ' ';
        if (tag == 'T') {
            word << "T";
            if (n != 1) word << '^' << n;
        } else {
            word << 'S';
        }
        if (!started) {
            acc = g;
            phase = gphase;
            started = true;
            continue;
        }
        if (cocycle_sign(acc, g, tau0) < 0) phase += 12;
        phase += gphase;
        acc = acc.times(g);
    }
    if (!started) word << 'I';
    phase = ((phase % 24) + 24) % 24;

    EtaMultiplierState state;
    state.matrix = m_in;
    state.phase_twelfths = static_cast<int>(phase);
    state.value = std::exp(Complex(0, static_cast<double>(kPiL) * phase / 12.0));
    state.word = word.str();

    // numeric self-check at the base point
    Complex left = Num<double>::eta(m_in.apply(tau0));
    Complex right = state.value * std::sqrt(m_in.automorphy(tau0)) * Num<double>::eta(tau0);
    if (std::abs(left - right) > 1e-8)
        throw NonconvergentEvaluation("eta multiplier self-check failed");
    return state;
}

double modular_residual(CompletionFamily kind, const ModularMatrix& m, Complex tau, Complex w,
                        const QuadratureConfig& cfg) {
    if (m.det() != 1) throw MalformedParams("modular residual needs a determinant-one matrix");
    if (!(tau.imag() > 0) || !(w.imag() > 0))
        throw NonconvergentEvaluation("modular residual points must lie in the upper half-plane");
    CompletionKind ck =
        (kind == CompletionFamily::Psi) ? CompletionKind::psi() : CompletionKind::phi();
    int weight_mult = (kind == CompletionFamily::Psi) ? 8 : 10;
    int jpow = (kind == CompletionFamily::Psi) ? 2 : 3;

    Complex left = completion(ck, m.apply(tau), m.apply(w), cfg);
    EtaMultiplierState nu = eta_multiplier(m);
    long ph = ((static_cast<long>(nu.phase_twelfths) * weight_mult) % 24 + 24) % 24;
    Complex mult = std::exp(Complex(0, static_cast<double>(kPiL) * ph / 12.0));
    Complex j = m.automorphy(tau);
    for (int i = 0; i < jpow; ++i) mult *= j;
    Complex right = mult * completion(ck, tau, w, cfg);
    return std::abs(left - right);
}

// ---------------------------------------------------------------------------
// Pointwise residuals of the theta-quotient expansions.

namespace {

struct LemmaEnv {
    Complex z, tau;
    double rd;
    Complex eta3v, eta9v;
    long terms;

    Complex e(const Complex& x) const {
        return std::exp(Complex(0, 2) * Complex(static_cast<double>(kPiL)) * x);
    }
    Complex qp(double expo) const { return e(tau * expo); } // q^expo
    Complex zeta_r() const { return e(rd * z); }

    Complex theta(const Complex& x) const {
        Complex v = Num<double>::jacobi(x, tau);
        if (std::abs(v) < 1e-10)
            throw PolePoint("lemma residual: theta factor vanishes at the evaluation point");
        return v;
    }
    Complex invden(const Complex& d) const {
        if (std::abs(d) < 1e-8)
            throw PolePoint("lemma residual: expansion denominator vanishes");
        return 1.0 / d;
    }
};

Rational require_r(const LemmaPoint& pt, bool half, const char* who) {
    long den = den_long(pt.r);
    if (half ? den != 2 : den != 1)
        throw MalformedParams(std::string(who) +
                              (half ? ": r must be a half-odd integer" : ": r must be an integer"));
    return pt.r;
}

Complex lemma_two_theta(const LemmaEnv& env, const Complex& w) {
    Complex s1(0, 0), s2(0, 0);
    for (long n = -env.terms; n <= env.terms; ++n) {
        Complex num = env.e(env.tau * static_cast<double>(n) * (n - env.rd));
        s1 += num * env.e(-static_cast<double>(n) * w) *
              env.invden(1.0 - env.e(env.z + env.tau * static_cast<double>(n)));
        s2 += num * env.e(static_cast<double>(n) * w) *
              env.invden(1.0 - env.e(env.z + w + env.tau * static_cast<double>(n)));
    }
    Complex i(0, 1);
    return i / (env.eta3v * env.theta(w)) * s1 -
           i * env.e(-env.rd * w) / (env.eta3v * env.theta(w)) * s2;
}

Complex lemma_triple_theta(const LemmaEnv& env, const Complex& w1, const Complex& w2) {
    Complex s1(0, 0), s2(0, 0), s3(0, 0);
    for (long n = -env.terms; n <= env.terms; ++n) {
        double nd = static_cast<double>(n);
        Complex num = env.e(env.tau * (1.5 * nd * nd - env.rd * nd));
        if (n & 1L) num = -num;
        s1 += num * env.e(-nd * (w1 + w2)) * env.invden(1.0 - env.e(env.z + env.tau * nd));
        s2 += num * env.e(-nd * (w2 - 2.0 * w1)) *
              env.invden(1.0 - env.e(env.z + w1 + env.tau * nd));
        s3 += num * env.e(-nd * (w1 - 2.0 * w2)) *
              env.invden(1.0 - env.e(env.z + w2 + env.tau * nd));
    }
    Complex i(0, 1);
    return i / (env.eta3v * env.theta(w1) * env.theta(w2)) * s1 +
           i * env.e(-env.rd * w1) / (env.eta3v * env.theta(w1) * env.theta(w1 - w2)) * s2 +
           i * env.e(-env.rd * w2) / (env.eta3v * env.theta(w2) * env.theta(w2 - w1)) * s3;
}

Complex lemma_triple_theta_double(const LemmaEnv& env, const Complex& w1, const Complex& w2,
                                  long rl) {
    Complex i(0, 1);
    Complex t1(0, 0), t2(0, 0);
    for (long n = -env.terms; n <= env.terms; ++n) {
        double nd = static_cast<double>(n);
        Complex num = env.e(env.tau * (3.0 * nd * nd - env.rd * nd));
        t1 += num * env.e(nd * (5.0 * w1 - w2)) *
              env.invden(1.0 - env.e(env.z + w1 + env.tau * nd));
        t2 += num * env.e(nd * (5.0 * w2 - w1)) *
              env.invden(1.0 - env.e(env.z + w2 + env.tau * nd));
    }
    Complex total = i * env.e(-env.rd * w1) /
                        (env.eta3v * env.theta(2.0 * w1) * env.theta(w1 - w2)) * t1 +
                    i * env.e(-env.rd * w2) /
                        (env.eta3v * env.theta(2.0 * w2) * env.theta(w2 - w1)) * t2;
    for (int l1 = 0; l1 <= 1; ++l1) {
        for (int l2 = 0; l2 <= 1; ++l2) {
            double sign = ((l1 + l2 + rl * l2) % 2 != 0) ? -1.0 : 1.0;
            Complex shift = (Complex(static_cast<double>(l1)) * env.tau +
                             Complex(static_cast<double>(l2))) /
                            2.0;
            Complex pre = sign * env.qp(l1 * (l1 + env.rd) / 2.0) /
                          (env.theta(w1 + shift) * env.theta(w2 + shift));
            Complex inner(0, 0);
            for (long n = -env.terms; n <= env.terms; ++n) {
                double nd = static_cast<double>(n);
                Complex num = env.e(env.tau * (3.0 * nd * nd - (3.0 * l1 + env.rd) * nd)) *
                              env.e(-nd * (w1 + w2));
                Complex den = 1.0 - (l2 ? -1.0 : 1.0) *
                                        env.e(env.z + env.tau * (nd - l1 / 2.0));
                inner += num * env.invden(den);
            }
            total += i / (2.0 * env.eta3v) * pre * inner;
        }
    }
    return total;
}

Complex lemma_cube_inverse(const LemmaEnv& env, const Complex& e2v) {
    Complex s(0, 0);
    for (long n = -env.terms; n <= env.terms; ++n) {
        double nd = static_cast<double>(n);
        Complex num = env.e(env.tau * (1.5 * nd * nd - env.rd * nd));
        if (n & 1L) num = -num;
        Complex u = env.invden(1.0 - env.e(env.z + env.tau * nd));
        double c1 = 3.0 * nd - env.rd - 1.0;
        Complex block = (4.0 * c1 * c1 - e2v) / 8.0 * u +
                        (6.0 * nd - 2.0 * env.rd - 3.0) / 2.0 * u * u + u * u * u;
        s += num * block;
    }
    return -Complex(0, 1) / env.eta9v * s;
}

Complex lemma_square_double_inverse(const LemmaEnv& env, const Complex& e2v, long rl) {
    Complex s(0, 0);
    Complex eta6 = env.eta3v * env.eta3v;
    for (long n = -env.terms; n <= env.terms; ++n) {
        double nd = static_cast<double>(n);
        Complex num = env.e(env.tau * (3.0 * nd * nd - env.rd * nd));
        Complex u = env.invden(1.0 - env.e(env.z + env.tau * nd));
        double c1 = 6.0 * nd - env.rd - 1.0;
        Complex block = (2.0 * c1 * c1 - e2v) / 8.0 * u +
                        (12.0 * nd - 2.0 * env.rd - 3.0) / 4.0 * u * u + 0.5 * u * u * u;
        for (int l1 = 0; l1 <= 1; ++l1) {
            for (int l2 = 0; l2 <= 1; ++l2) {
                if (l1 == 0 && l2 == 0) continue;
                double sign = ((l1 + l2 + rl * l2) % 2 != 0) ? -1.0 : 1.0;
                Complex shift = (Complex(static_cast<double>(l1)) * env.tau +
                                 Complex(static_cast<double>(l2))) /
                                2.0;
                Complex th = env.theta(shift);
                Complex den = 1.0 - (l2 ? -1.0 : 1.0) *
                                        env.e(env.z + env.tau * (nd + l1 / 2.0));
                block -= eta6 / 2.0 / (th * th) * sign *
                         env.qp(l1 * (l1 - env.rd) / 2.0 + 3.0 * l1 * nd) * env.invden(den);
            }
        }
        s += num * block;
    }
    return -Complex(0, 1) / env.eta9v * s;
}

} // namespace

double lemma_residual(LemmaId id, const LemmaPoint& pt, long terms) {
    if (terms < 4) throw MalformedParams("lemma residual needs at least four expansion terms");
    if (!(pt.tau.imag() > 0))
        throw NonconvergentEvaluation("lemma residual: tau must lie in the upper half-plane");
    LemmaEnv env;
    env.z = pt.z;
    env.tau = pt.tau;
    env.terms = terms;
    Complex eta_v = Num<double>::eta(pt.tau);
    env.eta3v = eta_v * eta_v * eta_v;
    env.eta9v = env.eta3v * env.eta3v * env.eta3v;

    Complex lhs, rhs;
    switch (id) {
        case LemmaId::TwoTheta: {
            env.rd = to_double(require_r(pt, false, "two-theta expansion"));
            if (!pt.w1) throw MalformedParams("two-theta expansion needs w1");
            lhs = env.zeta_r() / (env.theta(pt.z) * env.theta(pt.z + *pt.w1));
            rhs = lemma_two_theta(env, *pt.w1);
            break;
        }
        case LemmaId::TripleTheta: {
            env.rd = to_double(require_r(pt, true, "triple-theta expansion"));
            if (!pt.w1 || !pt.w2) throw MalformedParams("triple-theta expansion needs w1 and w2");
            lhs = env.zeta_r() /
                  (env.theta(pt.z) * env.theta(pt.z + *pt.w1) * env.theta(pt.z + *pt.w2));
            rhs = lemma_triple_theta(env, *pt.w1, *pt.w2);
            break;
        }
        case LemmaId::TripleThetaDouble: {
            Rational r = require_r(pt, false, "double-argument triple-theta expansion");
            env.rd = to_double(r);
            if (!pt.w1 || !pt.w2)
                throw MalformedParams("double-argument triple-theta expansion needs w1 and w2");
            lhs = env.zeta_r() / (env.theta(2.0 * pt.z) * env.theta(pt.z + *pt.w1) *
                                  env.theta(pt.z + *pt.w2));
            rhs = lemma_triple_theta_double(env, *pt.w1, *pt.w2, num_long(r));
            break;
        }
        case LemmaId::CubeInverse: {
            env.rd = to_double(require_r(pt, true, "cubed-theta expansion"));
            Complex th = env.theta(pt.z);
            lhs = env.zeta_r() / (th * th * th);
            rhs = lemma_cube_inverse(env, Num<double>::e2(pt.tau));
            break;
        }
        case LemmaId::SquareDoubleInverse: {
            Rational r = require_r(pt, false, "squared-theta double-argument expansion");
            env.rd = to_double(r);
            Complex th = env.theta(pt.z);
            lhs = env.zeta_r() / (th * th * env.theta(2.0 * pt.z));
            rhs = lemma_square_double_inverse(env, Num<double>::e2(pt.tau), num_long(r));
            break;
        }
    }
    double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    return std::abs(lhs - rhs) / scale;
}

} // namespace ft
