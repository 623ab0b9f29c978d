#pragma once

#include <complex>
#include <map>
#include <optional>
#include <vector>

#include "falsetheta/rational.hpp"

namespace ft {

// Truncated q-series with exact rational coefficients supported on the
// exponent lattice (1/denom) * Z.  All exponents strictly below
// trunc_exponent() are exactly known; everything at or above it is unknown,
// not zero.  Series whose trunc index reaches kInfTrunc are exact objects
// (finite q-polynomials such as cyclotomic factors or monomial prefactors);
// saturating arithmetic keeps that property through products.
//
// Canonical form: stored coefficients are nonzero and lie in
// [lead_index, trunc_index); the zero series has an empty map and
// lead_index == trunc_index by convention.
class QExpansion {
  public:
    static constexpr long kInfTrunc = 1L << 60;

    QExpansion() : denom_(1), trunc_(0) {}
    QExpansion(long denom, long trunc_index);

    static QExpansion zero(long denom, long trunc_index) { return QExpansion(denom, trunc_index); }
    // q^e with coefficient c, exact (infinite truncation).
    static QExpansion monomial(const Rational& e, const Rational& c);
    static QExpansion one() { return monomial(Rational(0), Rational(1)); }

    long denom() const { return denom_; }
    long trunc_index() const { return trunc_; }
    bool is_exact() const { return trunc_ >= kInfTrunc; }
    Rational trunc_exponent() const;
    long lead_index() const { return coeffs_.empty() ? trunc_ : coeffs_.begin()->first; }
    Rational lead_exponent() const;
    bool is_zero() const { return coeffs_.empty(); }
    std::size_t term_count() const { return coeffs_.size(); }
    const std::map<long, Rational>& raw_coeffs() const { return coeffs_; }

    // Coefficient of q^e; throws std::out_of_range when e is at or beyond the
    // truncation window (the value there is unknown, not zero).
    Rational coeff(const Rational& e) const;
    bool knows(const Rational& e) const;

    void set_coeff_index(long n, const Rational& c);

    QExpansion rescaled(long new_denom) const;
    // Smallest common lattice for two series.
    static long merged_denom(const QExpansion& a, const QExpansion& b);

    QExpansion operator-() const;
    QExpansion scaled(const Rational& c) const;
    // Multiply by q^e.
    QExpansion shifted(const Rational& e) const;
    QExpansion truncated_to(const Rational& e) const;

    friend QExpansion add(const QExpansion& a, const QExpansion& b);
    friend QExpansion sub(const QExpansion& a, const QExpansion& b);
    friend QExpansion mul(const QExpansion& a, const QExpansion& b);

    QExpansion pow(unsigned long k) const;

    // Multiplicative inverse.  The result is known below
    // trunc_exponent() - 2*lead_exponent() per the product truncation rule;
    // inputs that are exact polynomials need invert_to with an explicit
    // target window instead.
    QExpansion inverted() const;
    QExpansion inverted_to(const Rational& target_exponent) const;

    // q -> q^m for rational m > 0.
    QExpansion substituted_power(const Rational& m) const;
    // q d/dq.
    QExpansion q_derivative() const;

    struct EvalResult {
        std::complex<double> value;
        double tail_bound;
    };
    struct CoeffGrowth {
        double amplitude;
        double power;
    };
    // Evaluate at q = exp(2*pi*i*tau), Im tau > 0.  The tail bound assumes
    // |c(x)| <= amplitude * (1+|x|)^power for exponents x at or beyond the
    // truncation; when no growth bound is supplied a heuristic one is taken
    // from the stored coefficients (amplitude = 2*max|c|, power = 2).
    EvalResult eval(std::complex<double> tau, std::optional<CoeffGrowth> growth = std::nullopt) const;

    // Reduce denom_ by the gcd of all stored indices and the truncation.
    QExpansion normalized() const;

    // Mathematical identity: same lattice content and same truncation window.
    friend bool operator==(const QExpansion& a, const QExpansion& b);

    // Coefficient-wise comparison on the common known window.
    friend bool agree(const QExpansion& a, const QExpansion& b);
    friend std::optional<Rational> first_mismatch(const QExpansion& a, const QExpansion& b);

    std::string str(const char* var = "q") const;

  private:
    long denom_;
    long trunc_;
    std::map<long, Rational> coeffs_;

    static long sat_add(long a, long b);
    void prune_();
};

QExpansion operator+(const QExpansion& a, const QExpansion& b);
QExpansion operator-(const QExpansion& a, const QExpansion& b);
QExpansion operator*(const QExpansion& a, const QExpansion& b);

// Accumulates exact (exponent, coefficient) pairs on an arbitrary rational
// lattice and assembles the canonical QExpansion once the common denominator
// is known.  Terms at or beyond the truncation exponent are discarded.
class SeriesBuilder {
  public:
    explicit SeriesBuilder(const Rational& trunc_exponent) : trunc_(trunc_exponent) {}
    void add(const Rational& exponent, const Rational& coeff);
    QExpansion build() const;
    const Rational& trunc_exponent() const { return trunc_; }

  private:
    Rational trunc_;
    std::map<Rational, Rational> terms_;
};

} // namespace ft
