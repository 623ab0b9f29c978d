#include "falsetheta/special.hpp"
#include "falsetheta/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ft {

QExpansion pochhammer_qq(long N) {
    // sum_{k in Z} (-1)^k q^{k(3k-1)/2}
    QExpansion out(1, N);
    for (long k = 0;; ++k) {
        long e1 = k * (3 * k - 1) / 2; // k
        long e2 = k * (3 * k + 1) / 2; // -k
        if (e1 >= N && e2 >= N) break;
        Rational c = (k % 2 == 0) ? 1 : -1;
        if (e1 < N) out.set_coeff_index(e1, c);
        if (k > 0 && e2 < N) out.set_coeff_index(e2, c);
    }
    return out;
}

QExpansion eta_series(long N) {
    Rational sh(1, 24);
    return pochhammer_qq(N).shifted(sh).truncated_to(Rational(N));
}

QExpansion eta_power_series(unsigned p, long N) {
    if (p == 0) return QExpansion::one();
    QExpansion qq = pochhammer_qq(N).pow(p);
    return qq.shifted(rat(p, 24)).truncated_to(Rational(N));
}

QExpansion eta3_theta_series(long N) {
    // sum_{m >= 0} (-1)^m (2m+1) q^{(2m+1)^2/8}
    SeriesBuilder b{Rational(N)};
    for (long m = 0;; ++m) {
        Rational e((2 * m + 1) * (2 * m + 1), 8);
        if (e >= Rational(N)) break;
        b.add(e, Rational((m % 2 == 0) ? (2 * m + 1) : -(2 * m + 1)));
    }
    return b.build();
}

QExpansion e2_series(long N) {
    QExpansion out(1, N);
    if (N > 0) out.set_coeff_index(0, 1);
    std::vector<long> sigma(static_cast<size_t>(std::max<long>(N, 1)), 0);
    for (long d = 1; d < N; ++d)
        for (long n = d; n < N; n += d) sigma[static_cast<size_t>(n)] += d;
    for (long n = 1; n < N; ++n) out.set_coeff_index(n, Rational(-24) * Rational(sigma[static_cast<size_t>(n)]));
    return out;
}

QExpansion serre_derivative(const QExpansion& f, const Rational& k) {
    QExpansion df = f.q_derivative();
    // E2 enters through a product whose truncation is limited by f itself;
    // compute it past f's window so the product keeps f's truncation.
    Rational span = f.trunc_exponent() - f.lead_exponent();
    long n2 = to_long(Integer(floor_rat(span))) + 2;
    QExpansion e2 = e2_series(n2);
    QExpansion corr = mul(e2, f).scaled(-k / 12);
    return add(df, corr);
}

QExpansion theta_unary_series(const UnaryThetaSpec& spec, const Rational& trunc_exponent) {
    Rational two_m = spec.m * 2;
    if (!is_integer(two_m) || sgn(spec.m) <= 0)
        throw MalformedParams("unary theta needs 2m a positive integer");
    bool half = !is_integer(spec.m);
    Rational shift = Rational(spec.r) / two_m;
    if (half) shift += Rational(1, 2);
    if (sgn(trunc_exponent) <= 0) return QExpansion(1, 0).truncated_to(trunc_exponent);

    double bound = std::sqrt(to_double(trunc_exponent) / to_double(spec.m)) + std::abs(to_double(shift)) + 2.0;
    long B = static_cast<long>(bound) + 1;
    SeriesBuilder b(trunc_exponent);
    for (long j = -B; j <= B; ++j) {
        Rational n = Rational(j) + shift;
        Rational e = spec.m * n * n;
        if (e >= trunc_exponent) continue;
        Rational c = 1;
        for (int t = 0; t < spec.deriv; ++t) c *= n;
        if (half && (j % 2 != 0)) c = -c;
        b.add(e, c);
    }
    return b.build();
}

TorsionTheta theta_torsion_series(int l1, int l2, const Rational& trunc_exponent) {
    if (l1 < 0 || l1 > 1 || l2 < 0 || l2 > 1 || (l1 == 0 && l2 == 0))
        throw InvalidTorsionPoint("torsion point must be (l1,l2) in {0,1}^2, not (0,0)");
    // theta((l1 tau + l2)/2; tau) = sum_{n in Z+1/2} e^{pi i n (1+l2)} q^{n^2/2 + n l1/2}
    //   l2 = 1: phases all -1 (real series)
    //   l2 = 0, l1 = 1: e^{pi i n} = i(-1)^m for n = m + 1/2, so the value is
    //   (-i) * (real series) once the sign is pulled out.
    TorsionTheta out;
    out.times_minus_i = (l1 == 1 && l2 == 0);
    SeriesBuilder b(trunc_exponent);
    double tb = std::max(to_double(trunc_exponent), 1.0);
    long B = static_cast<long>(std::sqrt(2.0 * tb)) + 4;
    for (long m = -B; m <= B; ++m) {
        Rational n = Rational(2 * m + 1, 2);
        Rational e = n * n / 2 + n * rat(l1, 2);
        if (e >= trunc_exponent) continue;
        Rational c;
        if (l2 == 1) {
            c = -1;
        } else {
            // value = i (-1)^m q^e = (-i) * ( -(-1)^m q^e )
            c = (m % 2 == 0) ? -1 : 1;
        }
        b.add(e, c);
    }
    out.series = b.build();
    return out;
}

QExpansion eta6_over_torsion_sq(int l1, int l2, const Rational& trunc_exponent) {
    TorsionTheta t = theta_torsion_series(l1, l2, trunc_exponent + 2);
    QExpansion sq = mul(t.series, t.series);
    QExpansion inv = sq.inverted_to(trunc_exponent + 1);
    long n_eta = to_long(Integer(floor_rat(trunc_exponent - inv.lead_exponent()))) + 2;
    QExpansion out = mul(eta_power_series(6, std::max<long>(n_eta, 1)), inv);
    // theta^2 = (series)^2 for the real phases and -(series)^2 at (1,0)
    // where the value carries the factor -i.
    if (t.times_minus_i) out = -out;
    return out.truncated_to(trunc_exponent);
}

} // namespace ft
