#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <numeric>
#include <string>

#include "falsetheta/errors.hpp"

namespace ft {

using Rational = mpq_class;
using Integer = mpz_class;

inline Rational rat(long num, long den = 1) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

// Parses "p/q" or "p". Throws MalformedParams on garbage or zero denominator.
inline Rational parse_rational(const std::string& s) {
    if (s.empty()) throw MalformedParams("empty rational literal");
    try {
        Rational r(s);
        if (r.get_den() == 0) throw MalformedParams("zero denominator: " + s);
        r.canonicalize();
        return r;
    } catch (const MalformedParams&) {
        throw;
    } catch (const std::invalid_argument&) {
        throw MalformedParams("bad rational literal: " + s);
    }
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

inline long to_long(const Integer& z) {
    if (!z.fits_slong_p()) throw MalformedParams("integer out of machine range: " + z.get_str());
    return z.get_si();
}

// Numerator/denominator as machine longs; denominators in this codebase stay small.
inline long num_long(const Rational& r) { return to_long(r.get_num()); }
inline long den_long(const Rational& r) { return to_long(r.get_den()); }

inline long lcm_long(long a, long b) { return std::lcm(a, b); }

inline int sgn(const Rational& r) { return mpq_sgn(r.get_mpq_t()); }

inline Rational floor_rat(const Rational& r) {
    Integer q;
    mpz_fdiv_q(q.get_mpz_t(), r.get_num().get_mpz_t(), r.get_den().get_mpz_t());
    return Rational(q);
}

inline bool is_integer(const Rational& r) { return r.get_den() == 1; }

inline double to_double(const Rational& r) { return r.get_d(); }

} // namespace ft
