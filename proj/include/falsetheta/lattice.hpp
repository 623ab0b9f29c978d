#pragma once

#include "falsetheta/qexpansion.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ft {

// u*n1 + v*n2
struct LinForm {
    Rational u, v;
};

// Rank-two false theta sum
//   q^{prefactor} * sum_{n in Z^2 + alpha} parity(n) * weight(n)
//                   * prod_i sgn(s_i(n)) sgn(t_i(n)) * q^{scale * Q(n)}
// with Q(n) = a n1^2 + 2 b n1 n2 + c n2^2 under the Full convention and half
// of that under Half.  sgn(0) = 0 kills boundary terms.  parity is
// (-1)^{p1 j1 + p2 j2} for the integer offsets j = n - alpha.
struct FalseThetaSpec {
    enum class Convention { Full, Half };
    Convention convention = Convention::Full;
    Rational a, b, c;
    Rational scale = Rational(1);
    Rational alpha1, alpha2;
    std::vector<std::pair<LinForm, LinForm>> sign_pairs;
    std::map<std::pair<int, int>, Rational> weight; // empty means weight 1
    std::optional<std::pair<long, long>> parity;
    Rational prefactor; // overall q^{prefactor}
};

QExpansion false_theta_sum(const FalseThetaSpec& spec, const Rational& trunc_exponent);

// Rank-one false theta sum
//   sum_{n in Z + shift} alt(n) * sgn(n + sign_shift)^{use_sign} * n^{weight_pow} q^{m n^2}
// with alt(n) = (-1)^{n - shift} when alternating is set.
struct OneDimFalseSpec {
    Rational m;
    Rational shift;
    Rational sign_shift;
    bool use_sign = true;
    bool alternating = false;
    int weight_pow = 0;
};
QExpansion one_dim_false_sum(const OneDimFalseSpec& spec, const Rational& trunc_exponent);

// sum over n in N_0^2 of weight(n) * parity(n) * q^{qa n1^2 + qb n1 n2 + qc n2^2 + l1 n1 + l2 n2 + e0}
// for a positive definite quadratic part; shared by the coefficient formulas
// and the plumbing series.
QExpansion quadrant_sum(const Rational& qa, const Rational& qb, const Rational& qc,
                        const Rational& l1, const Rational& l2, const Rational& e0,
                        const std::map<std::pair<int, int>, Rational>& weight,
                        std::optional<std::pair<long, long>> parity,
                        const Rational& trunc_exponent);

// Named building blocks of the rank-two characters.
QExpansion g0_series(long N);
QExpansion psi_double_series(const Rational& trunc_exponent); // A2 companion
QExpansion phi_double_series(const Rational& trunc_exponent); // B2 companion, both halves
QExpansion phi_double_part(int which, const Rational& trunc_exponent); // 1 or 2
QExpansion lambda_series(int a1, int a2, const Rational& trunc_exponent);
QExpansion f0_series(long N);
QExpansion fk_series(long k, const Rational& trunc_exponent);
QExpansion rogers_series(const Rational& trunc_exponent);
QExpansion phi_r_series(long r, const Rational& trunc_exponent);   // sum_{Z+r/6} sgn(n) q^{3 n^2}
QExpansion omega_r_series(long r, const Rational& trunc_exponent); // alternating, modulus 3/2

// Characters through their decomposition into the pieces above.
QExpansion a2_character_series(long N);
QExpansion b2_character_series(long N);

// Registry used by the command line tool.
struct BuiltinSeries {
    QExpansion series;
    std::string phase; // "1" except for torsion(1,0) where it is "-i"
};
BuiltinSeries builtin_series(const std::string& name, const std::vector<Rational>& params, long N);
std::vector<std::string> builtin_names();

} // namespace ft
