#include "falsetheta/lattice.hpp"
#include "falsetheta/special.hpp"
#include "falsetheta/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ft {

namespace {

// safe underestimate of the smallest eigenvalue of [[a,b],[b,c]]
double lambda_min(const Rational& a, const Rational& b, const Rational& c) {
    double ad = to_double(a), bd = to_double(b), cd = to_double(c);
    double tr = ad + cd;
    double det = ad * cd - bd * bd;
    double disc = std::sqrt(std::max(tr * tr - 4.0 * det, 0.0));
    return 0.999 * (tr - disc) / 2.0;
}

Rational eval_weight(const std::map<std::pair<int, int>, Rational>& weight,
                     const Rational& n1, const Rational& n2) {
    if (weight.empty()) return Rational(1);
    Rational s(0);
    for (const auto& [ij, w] : weight) {
        Rational t = w;
        for (int u = 0; u < ij.first; ++u) t *= n1;
        for (int u = 0; u < ij.second; ++u) t *= n2;
        s += t;
    }
    return s;
}

} // namespace

QExpansion false_theta_sum(const FalseThetaSpec& spec, const Rational& trunc_exponent) {
    Rational a = spec.a * spec.scale, b = spec.b * spec.scale, c = spec.c * spec.scale;
    if (spec.convention == FalseThetaSpec::Convention::Half) {
        a /= 2;
        b /= 2;
        c /= 2;
    }
    if (sgn(a) <= 0 || sgn(a * c - b * b) <= 0)
        throw MalformedParams("false theta sum needs a positive definite form");
    Rational budget = trunc_exponent - spec.prefactor;
    SeriesBuilder out{trunc_exponent};
    if (sgn(budget) <= 0) return out.build();

    double lam = lambda_min(a, b, c);
    double R = std::sqrt(to_double(budget) / lam) +
               std::max(std::abs(to_double(spec.alpha1)), std::abs(to_double(spec.alpha2))) + 2.0;
    long Ri = static_cast<long>(R) + 1;
    for (long j1 = -Ri; j1 <= Ri; ++j1) {
        Rational n1 = Rational(j1) + spec.alpha1;
        for (long j2 = -Ri; j2 <= Ri; ++j2) {
            Rational n2 = Rational(j2) + spec.alpha2;
            Rational e = a * n1 * n1 + 2 * b * n1 * n2 + c * n2 * n2;
            if (e >= budget) continue;
            int s = 1;
            for (const auto& [f, g] : spec.sign_pairs) {
                s *= sgn(f.u * n1 + f.v * n2) * sgn(g.u * n1 + g.v * n2);
                if (s == 0) break;
            }
            if (s == 0) continue;
            Rational w = eval_weight(spec.weight, n1, n2);
            if (w == 0) continue;
            if (spec.parity) {
                long p = spec.parity->first * j1 + spec.parity->second * j2;
                if (p % 2 != 0) w = -w;
            }
            out.add(e + spec.prefactor, s > 0 ? w : -w);
        }
    }
    return out.build();
}

QExpansion one_dim_false_sum(const OneDimFalseSpec& spec, const Rational& trunc_exponent) {
    if (sgn(spec.m) <= 0) throw MalformedParams("rank one false theta needs m > 0");
    SeriesBuilder out{trunc_exponent};
    if (sgn(trunc_exponent) <= 0) return out.build();
    double R = std::sqrt(to_double(trunc_exponent) / to_double(spec.m)) +
               std::abs(to_double(spec.shift)) + 2.0;
    long Ri = static_cast<long>(R) + 1;
    for (long j = -Ri; j <= Ri; ++j) {
        Rational n = Rational(j) + spec.shift;
        Rational e = spec.m * n * n;
        if (e >= trunc_exponent) continue;
        Rational w(1);
        for (int t = 0; t < spec.weight_pow; ++t) w *= n;
        if (spec.use_sign) {
            int s = sgn(n + spec.sign_shift);
            if (s == 0) continue;
            if (s < 0) w = -w;
        }
        if (spec.alternating && (j % 2 != 0)) w = -w;
        out.add(e, w);
    }
    return out.build();
}

QExpansion quadrant_sum(const Rational& qa, const Rational& qb, const Rational& qc,
                        const Rational& l1, const Rational& l2, const Rational& e0,
                        const std::map<std::pair<int, int>, Rational>& weight,
                        std::optional<std::pair<long, long>> parity,
                        const Rational& trunc_exponent) {
    if (sgn(qa) <= 0 || sgn(4 * qa * qc - qb * qb) <= 0)
        throw MalformedParams("quadrant sum needs a positive definite quadratic part");
    SeriesBuilder out{trunc_exponent};
    Rational budget = trunc_exponent - e0;
    // complete the square: e(n) = (n+g)^T A (n+g) - g^T A g with A g = l/2,
    // so the admissible region is the ellipse |n_i + g_i| <= sqrt(B' (A^-1)_ii).
    // A negative budget does not shortcut anything: with a negative linear
    // part the quadrant minimum of e sits away from the origin, below e0.
    Rational det4r = qa * qc - qb * qb / 4;
    Rational g1r = (qc * l1 / 2 - qb * l2 / 4) / det4r;
    Rational g2r = (qa * l2 / 2 - qb * l1 / 4) / det4r;
    Rational bpr = budget + (l1 * g1r + l2 * g2r) / 2;
    if (sgn(bpr) <= 0) return out.build();
    double ad = to_double(qa), bd = to_double(qb) / 2.0, cd = to_double(qc);
    double det4 = ad * cd - bd * bd;
    double g1 = to_double(g1r);
    double g2 = to_double(g2r);
    double bp = to_double(bpr);
    double r1 = std::sqrt(std::max(0.0, bp * cd / det4));
    double r2 = std::sqrt(std::max(0.0, bp * ad / det4));
    long lo1 = std::max(0L, static_cast<long>(std::floor(-g1 - r1 - 1.0)));
    long hi1 = static_cast<long>(std::ceil(-g1 + r1 + 1.0));
    long lo2 = std::max(0L, static_cast<long>(std::floor(-g2 - r2 - 1.0)));
    long hi2 = static_cast<long>(std::ceil(-g2 + r2 + 1.0));
    for (long n1 = lo1; n1 <= hi1; ++n1) {
        for (long n2 = lo2; n2 <= hi2; ++n2) {
            Rational e = qa * n1 * n1 + qb * n1 * n2 + qc * n2 * n2 + l1 * n1 + l2 * n2;
            if (e >= budget) continue;
            Rational w = eval_weight(weight, Rational(n1), Rational(n2));
            if (w == 0) continue;
            if (parity) {
                long p = parity->first * n1 + parity->second * n2;
                if (p % 2 != 0) w = -w;
            }
            out.add(e + e0, w);
        }
    }
    return out.build();
}

QExpansion g0_series(long N) {
    OneDimFalseSpec whole{Rational(1), Rational(0), Rational(0), true, false, 1};
    OneDimFalseSpec halves{Rational(1), Rational(1, 2), Rational(0), true, false, 1};
    QExpansion out = add(QExpansion::one().truncated_to(Rational(N)),
                         one_dim_false_sum(whole, Rational(N)).scaled(3));
    QExpansion h = one_dim_false_sum(halves, Rational(N) + Rational(1, 4)).shifted(Rational(-1, 4));
    return add(out, h.scaled(-6));
}

QExpansion psi_double_series(const Rational& trunc_exponent) {
    FalseThetaSpec s;
    s.a = 1;
    s.b = Rational(1, 2);
    s.c = 1;
    s.alpha1 = Rational(1, 3);
    s.alpha2 = Rational(1, 3);
    s.sign_pairs = {{LinForm{1, 0}, LinForm{0, 1}}};
    s.weight[{1, 0}] = 1;
    return false_theta_sum(s, trunc_exponent);
}

QExpansion phi_double_part(int which, const Rational& trunc_exponent) {
    FalseThetaSpec s;
    s.a = Rational(3, 2);
    s.b = Rational(3, 2);
    s.c = 3;
    s.alpha1 = Rational(1, 3);
    s.alpha2 = Rational(1, 6);
    s.parity = {{1, 0}};
    if (which == 1) {
        // (sgn(n2) + sgn(n1+n2)) sgn(n1) ((n1+2n2)^2 - E2/18): the quadratic
        // weight part here, the E2 part is assembled by the caller
        std::map<std::pair<int, int>, Rational> w;
        w[{2, 0}] = 1;
        w[{1, 1}] = 4;
        w[{0, 2}] = 4;
        FalseThetaSpec t = s;
        t.weight = w;
        t.sign_pairs = {{LinForm{1, 0}, LinForm{0, 1}}};
        QExpansion x = false_theta_sum(t, trunc_exponent);
        t.sign_pairs = {{LinForm{1, 0}, LinForm{1, 1}}};
        return add(x, false_theta_sum(t, trunc_exponent));
    }
    if (which == 2) {
        std::map<std::pair<int, int>, Rational> w;
        w[{2, 0}] = 1;
        w[{1, 1}] = 2;
        FalseThetaSpec t = s;
        t.weight = w;
        t.sign_pairs = {{LinForm{1, 1}, LinForm{0, 1}}};
        return false_theta_sum(t, trunc_exponent);
    }
    throw MalformedParams("phi_double_part takes 1 or 2");
}

namespace {

// plain lattice sums entering the E2 * theta correction inside Phi1
QExpansion phi_plain_sum(const Rational& trunc_exponent) {
    FalseThetaSpec s;
    s.a = Rational(3, 2);
    s.b = Rational(3, 2);
    s.c = 3;
    s.alpha1 = Rational(1, 3);
    s.alpha2 = Rational(1, 6);
    s.parity = {{1, 0}};
    s.sign_pairs = {{LinForm{1, 0}, LinForm{0, 1}}};
    QExpansion x = false_theta_sum(s, trunc_exponent);
    s.sign_pairs = {{LinForm{1, 0}, LinForm{1, 1}}};
    return add(x, false_theta_sum(s, trunc_exponent));
}

} // namespace

QExpansion phi_double_series(const Rational& trunc_exponent) {
    QExpansion quad = phi_double_part(1, trunc_exponent);
    QExpansion plain = phi_plain_sum(trunc_exponent);
    long n2 = to_long(Integer(floor_rat(trunc_exponent - plain.lead_exponent()))) + 2;
    QExpansion corr = mul(e2_series(std::max<long>(n2, 1)), plain).scaled(Rational(-1, 18));
    return add(add(quad, corr), phi_double_part(2, trunc_exponent));
}

QExpansion lambda_series(int a1, int a2, const Rational& trunc_exponent) {
    if ((a1 != 0 && a1 != 1) || (a2 != 0 && a2 != 1) || (a1 == 0 && a2 == 0))
        throw MalformedParams("lambda takes (a1,a2) in {0,1}^2 minus the origin");
    FalseThetaSpec s;
    s.a = Rational(3, 2);
    s.b = Rational(3, 2);
    s.c = 3;
    s.alpha1 = Rational(1, 3);
    s.alpha2 = Rational(a1, 2) + Rational(1, 6);
    s.sign_pairs = {{LinForm{1, 0}, LinForm{1, 2}}};
    if ((a2 + 1) % 2 != 0) s.parity = {{1, 0}};
    return false_theta_sum(s, trunc_exponent);
}

QExpansion rogers_series(const Rational& trunc_exponent) {
    OneDimFalseSpec s{Rational(2), Rational(1, 4), Rational(0), true, false, 0};
    return one_dim_false_sum(s, trunc_exponent);
}

QExpansion phi_r_series(long r, const Rational& trunc_exponent) {
    OneDimFalseSpec s{Rational(3), rat(r, 6), Rational(0), true, false, 0};
    return one_dim_false_sum(s, trunc_exponent);
}

QExpansion omega_r_series(long r, const Rational& trunc_exponent) {
    OneDimFalseSpec s{Rational(3, 2), rat(r, 3) + Rational(1, 2), Rational(0), true, true, 0};
    return one_dim_false_sum(s, trunc_exponent);
}

QExpansion f0_series(long N) {
    const Rational T = Rational(N) + 1;
    const Rational half(1, 2);

    QExpansion e2 = e2_series(to_long(Integer(floor_rat(T))) + 1);
    QExpansion head = add(e2, QExpansion::one().truncated_to(T).scaled(2)).scaled(Rational(1, 4));

    QExpansion qt01 = eta6_over_torsion_sq(0, 1, T);
    QExpansion qt10 = eta6_over_torsion_sq(1, 0, T + 1);
    QExpansion qt11 = eta6_over_torsion_sq(1, 1, T + 1);

    QExpansion om1 = serre_derivative(omega_r_series(1, T + Rational(1, 24)), half)
                         .shifted(Rational(-1, 24)).scaled(6);
    QExpansion om0 = serre_derivative(omega_r_series(0, T + Rational(3, 8)), half)
                         .shifted(Rational(-3, 8)).scaled(-6);

    QExpansion p1 = phi_r_series(1, T + Rational(1, 12) + 1);
    QExpansion block1 = serre_derivative(p1, half).scaled(6);
    block1 = add(block1, mul(qt01, p1).scaled(-1));
    block1 = add(block1, mul(qt10, p1).shifted(-half));
    block1 = add(block1, mul(qt11, p1).shifted(-half).scaled(-1));
    block1 = block1.shifted(Rational(-1, 12));

    QExpansion p2 = phi_r_series(2, T + Rational(1, 3) + 1);
    QExpansion block2 = serre_derivative(p2, half).scaled(6);
    block2 = add(block2, mul(qt01, p2));
    block2 = add(block2, mul(qt10, p2));
    block2 = add(block2, mul(qt11, p2));
    block2 = block2.shifted(Rational(-1, 3)).scaled(-1);

    QExpansion out = add(head, qt01);
    out = add(out, om1);
    out = add(out, om0);
    out = add(out, block1);
    out = add(out, block2);
    return out.truncated_to(Rational(N));
}

QExpansion fk_series(long k, const Rational& trunc_exponent) {
    if (k < 1) throw MalformedParams("fk needs k >= 1");
    FalseThetaSpec s;
    s.a = Rational(1, 2);
    s.b = Rational(1, 2);
    s.c = Rational(k + 1);
    s.alpha1 = 0;
    s.alpha2 = Rational(1, 2);
    s.sign_pairs = {{LinForm{1, 0}, LinForm{0, 1}}};
    s.parity = {{1, 0}};
    return false_theta_sum(s, trunc_exponent).scaled(Rational(1, 2));
}

QExpansion a2_character_series(long N) {
    QExpansion invqq6 = pochhammer_qq(N + 2).pow(6).inverted();
    QExpansion g0 = g0_series(N + 1);
    QExpansion psi = psi_double_series(Rational(N) + 2).shifted(Rational(-1, 3)).scaled(9);
    return mul(add(g0, psi), invqq6).truncated_to(Rational(N)).normalized();
}

QExpansion b2_character_series(long N) {
    QExpansion invqq8 = pochhammer_qq(N + 3).pow(8).inverted();
    QExpansion f0 = f0_series(N + 1);
    QExpansion phi = phi_double_series(Rational(N) + 2).scaled(Rational(9, 2));

    Rational tlam = Rational(N) + 2;
    QExpansion t01 = mul(lambda_series(0, 1, tlam), eta6_over_torsion_sq(0, 1, tlam));
    QExpansion t10 = mul(lambda_series(1, 0, tlam), eta6_over_torsion_sq(1, 0, tlam)).shifted(Rational(-1, 4));
    QExpansion t11 = mul(lambda_series(1, 1, tlam), eta6_over_torsion_sq(1, 1, tlam)).shifted(Rational(-1, 4)).scaled(-1);

    QExpansion tail = add(add(phi, t01), add(t10, t11)).shifted(Rational(-5, 12));
    return mul(add(f0, tail), invqq8).truncated_to(Rational(N)).normalized();
}

BuiltinSeries builtin_series(const std::string& name, const std::vector<Rational>& params, long N) {
    auto want = [&](std::size_t k, const char* sig) {
        if (params.size() != k) throw MalformedParams(std::string("series '") + name + "' expects params " + sig);
    };
    auto as_long = [](const Rational& r) {
        if (!is_integer(r)) throw MalformedParams("integer parameter expected");
        return to_long(Integer(r.get_num()));
    };
    BuiltinSeries out;
    out.phase = "1";
    Rational T(N);
    if (name == "eta") {
        want(0, "()");
        out.series = eta_series(N);
    } else if (name == "eta3") {
        want(0, "()");
        out.series = eta3_theta_series(N);
    } else if (name == "e2") {
        want(0, "()");
        out.series = e2_series(N);
    } else if (name == "qq") {
        want(0, "()");
        out.series = pochhammer_qq(N);
    } else if (name == "theta") {
        want(3, "(m, r, deriv)");
        UnaryThetaSpec s{params[0], as_long(params[1]), static_cast<int>(as_long(params[2]))};
        out.series = theta_unary_series(s, T);
    } else if (name == "torsion") {
        want(2, "(l1, l2)");
        TorsionTheta t = theta_torsion_series(static_cast<int>(as_long(params[0])),
                                              static_cast<int>(as_long(params[1])), T);
        out.series = t.series;
        if (t.times_minus_i) out.phase = "-i";
    } else if (name == "rogers") {
        want(0, "()");
        out.series = rogers_series(T);
    } else if (name == "phi") {
        want(1, "(r)");
        out.series = phi_r_series(as_long(params[0]), T);
    } else if (name == "omega") {
        want(1, "(r)");
        out.series = omega_r_series(as_long(params[0]), T);
    } else if (name == "g0") {
        want(0, "()");
        out.series = g0_series(N);
    } else if (name == "psiA") {
        want(0, "()");
        out.series = psi_double_series(T);
    } else if (name == "phiB") {
        want(0, "()");
        out.series = phi_double_series(T);
    } else if (name == "lambda") {
        want(2, "(a1, a2)");
        out.series = lambda_series(static_cast<int>(as_long(params[0])),
                                   static_cast<int>(as_long(params[1])), T);
    } else if (name == "f0") {
        want(0, "()");
        out.series = f0_series(N);
    } else if (name == "fk") {
        want(1, "(k)");
        out.series = fk_series(as_long(params[0]), T);
    } else if (name == "a2char") {
        want(0, "()");
        out.series = a2_character_series(N);
    } else if (name == "b2char") {
        want(0, "()");
        out.series = b2_character_series(N);
    } else {
        std::string all;
        for (const auto& s : builtin_names()) {
            if (!all.empty()) all += ", ";
            all += s;
        }
        throw UnknownSeries("unknown series '" + name + "'; available: " + all);
    }
    return out;
}

std::vector<std::string> builtin_names() {
    return {"eta", "eta3", "e2", "qq",   "theta", "torsion", "rogers", "phi",    "omega",
            "g0",  "psiA", "phiB", "lambda", "f0",    "fk",      "a2char", "b2char"};
}

} // namespace ft
