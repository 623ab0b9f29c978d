#pragma once

#include "falsetheta/qexpansion.hpp"

namespace ft {

// (q;q)_infinity by the pentagonal number theorem, exact below exponent N.
QExpansion pochhammer_qq(long N);

// eta = q^{1/24} (q;q)_inf, known below exponent N.
QExpansion eta_series(long N);

// eta^p via the pentagonal product, p >= 1.
QExpansion eta_power_series(unsigned p, long N);

// eta^3 written as the weight-3/2 unary theta sum (independent of the
// product route; the two agree, which is one of the exact checks).
QExpansion eta3_theta_series(long N);

// E2 = 1 - 24 sum sigma_1(n) q^n.
QExpansion e2_series(long N);

// Ramanujan-Serre derivative of weight k: q d/dq - (k/12) E2 * f.
QExpansion serre_derivative(const QExpansion& f, const Rational& k);

// Unary theta with modulus m (2m a positive integer), residue r, and
// derivative order deriv (the n^deriv weight of the z-derivative at 0):
//   integer m:      sum over n in Z + r/(2m)            of n^deriv q^{m n^2}
//   half-integer m: sum over n in Z + r/(2m) + 1/2 of (-1)^{n - r/(2m) - 1/2}
//                   n^deriv q^{m n^2}
struct UnaryThetaSpec {
    Rational m;
    long r = 0;
    int deriv = 0;
};
QExpansion theta_unary_series(const UnaryThetaSpec& spec, const Rational& trunc_exponent);

// Jacobi theta restricted to the half-period z = (l1 tau + l2)/2 with
// (l1,l2) in {0,1}^2, (0,0) excluded (that is the zero of theta).  The
// value is phase * series with the phase recorded separately so the series
// itself stays rational: phase = -i when (l1,l2) = (1,0), otherwise 1.
struct TorsionTheta {
    QExpansion series;
    bool times_minus_i = false;
};
TorsionTheta theta_torsion_series(int l1, int l2, const Rational& trunc_exponent);

// eta^6 / theta((l1 tau + l2)/2; tau)^2 as an exact expansion; the squared
// phase (-1 for (1,0)) is folded in.
QExpansion eta6_over_torsion_sq(int l1, int l2, const Rational& trunc_exponent);

} // namespace ft
