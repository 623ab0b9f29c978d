#pragma once

#include "falsetheta/qexpansion.hpp"

#include <map>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

namespace ft {

// Bounding box of z-exponent indices, used as the per-q-order completeness
// certificate of a LaurentBlock.
struct ZWindow {
    bool empty = true;
    long e1lo = 0, e1hi = 0, e2lo = 0, e2hi = 0;

    void absorb(long e1, long e2);
    void absorb(const ZWindow& other);
    ZWindow plus(const ZWindow& other) const; // Minkowski sum of boxes
    bool contains(long e1, long e2) const;
    bool contains(const ZWindow& other) const;
};

// Finite Laurent polynomial in two elliptic variables zeta1, zeta2 with
// QExpansion coefficients.  Exponents of zeta_i live on the lattice
// (1/zden_i) Z and are keyed by the integer index e_i (true exponent
// e_i / zden_i).  Every coefficient shares the block's q denominator and
// truncation and has no negative q powers.  window(u) is a box guaranteed to
// contain every index whose coefficient is nonzero at q order u / qden;
// indices never stored are identically zero below the truncation.
class LaurentBlock {
public:
    LaurentBlock(long zden1, long zden2, long qden, const Rational& trunc_exponent);

    long zden1() const { return zden1_; }
    long zden2() const { return zden2_; }
    long qden() const { return qden_; }
    const Rational& trunc_exponent() const { return trunc_; }
    long trunc_index() const { return trunc_index_; }

    // c * zeta1^{e1/zden1} zeta2^{e2/zden2} q^{qexp}; extends the certificate
    // at every order, as appropriate for explicitly listed polynomials.
    void add_monomial(long e1, long e2, const Rational& qexp, const Rational& c);
    // adds a whole q-series at one z index; the series is truncated to the
    // block window and must not have negative exponents.
    void add_series(long e1, long e2, const QExpansion& c);
    // widens the certificate at q orders >= uidx to include (e1, e2).
    void widen_window(long uidx, long e1, long e2);

    QExpansion coeff(long e1, long e2) const; // zero series when absent
    QExpansion constant_term() const { return coeff(0, 0); }
    const std::map<std::pair<long, long>, QExpansion>& terms() const { return terms_; }
    ZWindow window(long uidx) const;

    LaurentBlock mul(const LaurentBlock& other) const;
    LaurentBlock mul_scalar(const QExpansion& s) const; // s must have lead >= 0
    LaurentBlock shifted_z(long d1, long d2) const;

    // coefficient-wise equality below the common truncation; certificates may
    // differ.
    bool same_terms(const LaurentBlock& other) const;
    // throws ClosureViolation if a stored nonzero coefficient escapes its
    // certified window.
    void check_certificate() const;

private:
    long zden1_, zden2_, qden_;
    Rational trunc_;
    long trunc_index_;
    std::map<std::pair<long, long>, QExpansion> terms_;
    std::vector<ZWindow> zbounds_;
};

// terms given as (e1, e2, q exponent, coefficient)
LaurentBlock make_poly(long zden1, long zden2, long qden, const Rational& trunc_exponent,
                       const std::vector<std::tuple<long, long, Rational, Rational>>& tms);

// 1 / (zeta^e q^b; q)_inf = sum_{m >= 0} (zeta^e q^b)^m / (q; q)_m, valid when
// |zeta^e q^b| < 1.  e is an index pair on the given lattices; b > 0 must lie
// on the q lattice.  extra_terms appends provably dead summands beyond the
// truncation cutoff; it must never change a coefficient.
LaurentBlock inv_pochhammer(std::pair<long, long> e, const Rational& b,
                            const Rational& trunc_exponent, long zden1 = 1, long zden2 = 1,
                            long qden = 1, long extra_terms = 0);

// (zeta^e q^b; q)_count = prod_{j=0}^{count-1} (1 - zeta^e q^{b+j}), b >= 0
LaurentBlock finite_pochhammer(std::pair<long, long> e, const Rational& b, long count,
                               const Rational& trunc_exponent, long zden1 = 1, long zden2 = 1,
                               long qden = 1);

// multiplies all factors and extracts the zeta^{(0,0)} coefficient
QExpansion product_ct(const std::vector<LaurentBlock>& factors);

// Coefficient of zeta^{target} in B / prod_d (1 - zeta^d) with every factor
// expanded geometrically in nonnegative powers of its own monomial (the
// |zeta^d| < 1 regime).  Each direction is an index pair with nonnegative
// entries, not both zero; termination comes from the finite support of B.
QExpansion folded_coeff(const LaurentBlock& B, const std::vector<std::pair<long, long>>& dirs,
                        std::pair<long, long> target);

// Constant terms of the two root-system products of reciprocal Pochhammer
// factors, one per positive root direction and its inverse; these are the
// normalized characters.  Coefficients are exact below q^N.
QExpansion a2_ct_series(long N);
QExpansion b2_ct_series(long N);

// Exact product form of the reciprocal theta products i eta^9 / (th th th)
// and eta^12 / (th th th th) with their zero factors (1 - zeta^a) cleared:
// a monomial prefactor times (q;q)^p times reciprocal Pochhammers.  Dividing
// back by the cleared factors via folded_coeff yields genuine Laurent
// coefficients, which is the brute-force oracle for the closed forms below.
LaurentBlock a2_numerator_block(long N);
std::vector<std::pair<long, long>> a2_fold_dirs();
LaurentBlock b2_numerator_block(long N); // zden2 = 2, half-integer zeta2 powers
std::vector<std::pair<long, long>> b2_fold_dirs();

// Laurent coefficient of zeta1^{-r1} zeta2^{-r2}, i.e. the constant term of
// the reciprocal theta product against zeta^r.
QExpansion a2_fourier_coefficient(const LaurentBlock& numerator, long r1, long r2);
QExpansion b2_fourier_coefficient(const LaurentBlock& numerator, long r1, const Rational& r2);

// Closed-form evaluation of the same coefficients as explicit sums over N_0^2:
// two terms for the three-theta product, ten for the four-theta one (the last
// six carry half-period theta quotient prefactors).  r2 must be a half
// integer.
QExpansion coeff_D(std::pair<long, long> r, long N);
QExpansion coeff_C(long r1, const Rational& r2, long N);
QExpansion coeff_C_term(int which, long r1, const Rational& r2, long N); // which in 1..6
QExpansion coeff_C_torsion(int which, int l1, int l2, long r1, const Rational& r2,
                           long N); // which in {7, 8}, (l1, l2) != (0, 0)

// Signed shift vectors assembling the character constant term from the
// Fourier coefficients of the reciprocal theta product.
struct SignedShift {
    long r1;
    Rational r2;
    int sign;
};
enum class RootSystem { A2, B2 };
const std::vector<SignedShift>& character_shift_table(RootSystem which);

// Compares three independent routes to the character: the multi-factor
// product constant term, the eta-quotient assembly from the named series, and
// the signed sum of closed-form Fourier coefficients.
struct DecompositionReport {
    QExpansion product_route;
    QExpansion assembled_route;
    QExpansion fourier_route;
    bool all_equal = false;
    std::optional<Rational> first_mismatch;
};
DecompositionReport verify_decomposition(RootSystem which, long N);

// average of two half-shifted signs; vanishes when they disagree
inline int sign_average(long m, long n) {
    int sm = m >= 0 ? 1 : -1;
    int sn = n >= 0 ? 1 : -1;
    return (sm + sn) / 2;
}

// Fourier coefficient of the normalized three-theta quotient with rescaled
// arguments: an eta-quotient prefactor times a rho-weighted alternating
// double sum.  r = (0,0) recovers the symmetric double false theta F_k.
QExpansion tk_coefficient(long k, std::pair<long, long> r, const Rational& trunc_exponent);

} // namespace ft
