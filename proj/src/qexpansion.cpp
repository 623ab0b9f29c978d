#include "falsetheta/qexpansion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "falsetheta/errors.hpp"

namespace ft {

QExpansion::QExpansion(long denom, long trunc_index) : denom_(denom), trunc_(trunc_index) {
    if (denom <= 0) throw IncompatibleLattices("denominator must be positive");
}

QExpansion QExpansion::monomial(const Rational& e, const Rational& c) {
    QExpansion r(den_long(e), kInfTrunc);
    if (c != 0) r.coeffs_[num_long(e)] = c;
    return r;
}

Rational QExpansion::trunc_exponent() const { return rat(trunc_, denom_); }

Rational QExpansion::lead_exponent() const { return rat(lead_index(), denom_); }

long QExpansion::sat_add(long a, long b) {
    if (a >= kInfTrunc || b >= kInfTrunc) return kInfTrunc;
    long s = a + b;
    return s >= kInfTrunc ? kInfTrunc : s;
}

void QExpansion::prune_() {
    for (auto it = coeffs_.begin(); it != coeffs_.end();) {
        if (it->second == 0 || it->first >= trunc_)
            it = coeffs_.erase(it);
        else
            ++it;
    }
}

Rational QExpansion::coeff(const Rational& e) const {
    if (!knows(e)) throw std::out_of_range("coefficient at q^(" + to_string(e) + ") is beyond the truncation window");
    Rational scaled = e * denom_;
    if (!is_integer(scaled)) return Rational(0);
    auto it = coeffs_.find(num_long(scaled));
    return it == coeffs_.end() ? Rational(0) : it->second;
}

bool QExpansion::knows(const Rational& e) const {
    if (is_exact()) return true;
    return e * denom_ < trunc_;
}

void QExpansion::set_coeff_index(long n, const Rational& c) {
    if (n >= trunc_) throw std::out_of_range("index beyond truncation");
    if (c == 0)
        coeffs_.erase(n);
    else
        coeffs_[n] = c;
}

QExpansion QExpansion::rescaled(long new_denom) const {
    if (new_denom == denom_) return *this;
    if (new_denom % denom_ != 0) throw IncompatibleLattices("rescale target is not a lattice refinement");
    long f = new_denom / denom_;
    QExpansion r(new_denom, is_exact() ? kInfTrunc : trunc_ * f);
    for (const auto& [n, c] : coeffs_) r.coeffs_[n * f] = c;
    return r;
}

long QExpansion::merged_denom(const QExpansion& a, const QExpansion& b) {
    return lcm_long(a.denom_, b.denom_);
}

QExpansion QExpansion::operator-() const {
    QExpansion r(*this);
    for (auto& [n, c] : r.coeffs_) c = -c;
    return r;
}

QExpansion QExpansion::scaled(const Rational& c) const {
    QExpansion r(denom_, trunc_);
    if (c == 0) return r;
    r.coeffs_ = coeffs_;
    for (auto& [n, v] : r.coeffs_) v *= c;
    return r;
}

QExpansion QExpansion::shifted(const Rational& e) const {
    long d = lcm_long(denom_, den_long(e));
    QExpansion a = rescaled(d);
    long off = num_long(e) * (d / den_long(e));
    QExpansion r(d, sat_add(a.trunc_, off));
    for (const auto& [n, c] : a.coeffs_) r.coeffs_[n + off] = c;
    return r;
}

QExpansion QExpansion::truncated_to(const Rational& e) const {
    long d = lcm_long(denom_, den_long(e));
    QExpansion a = rescaled(d);
    long cut = num_long(e) * (d / den_long(e));
    a.trunc_ = std::min(a.trunc_, cut);
    a.prune_();
    return a;
}

QExpansion add(const QExpansion& a, const QExpansion& b) {
    long d = QExpansion::merged_denom(a, b);
    QExpansion x = a.rescaled(d), y = b.rescaled(d);
    QExpansion r(d, std::min(x.trunc_, y.trunc_));
    r.coeffs_ = std::move(x.coeffs_);
    for (const auto& [n, c] : y.coeffs_) {
        auto [it, fresh] = r.coeffs_.try_emplace(n, c);
        if (!fresh) it->second += c;
    }
    r.prune_();
    return r;
}

QExpansion sub(const QExpansion& a, const QExpansion& b) { return add(a, -b); }

QExpansion mul(const QExpansion& a, const QExpansion& b) {
    long d = QExpansion::merged_denom(a, b);
    QExpansion x = a.rescaled(d), y = b.rescaled(d);
    long t = std::min(QExpansion::sat_add(x.trunc_, y.lead_index()),
                      QExpansion::sat_add(y.trunc_, x.lead_index()));
    QExpansion r(d, t);
    for (const auto& [na, ca] : x.coeffs_) {
        for (const auto& [nb, cb] : y.coeffs_) {
            long n = na + nb;
            if (n >= t) break; // y.coeffs_ ascending, later nb only larger
            auto [it, fresh] = r.coeffs_.try_emplace(n, 0);
            it->second += ca * cb;
            if (fresh && it->second == 0) r.coeffs_.erase(it);
        }
    }
    r.prune_();
    return r;
}

QExpansion operator+(const QExpansion& a, const QExpansion& b) { return add(a, b); }
QExpansion operator-(const QExpansion& a, const QExpansion& b) { return sub(a, b); }
QExpansion operator*(const QExpansion& a, const QExpansion& b) { return mul(a, b); }

QExpansion QExpansion::pow(unsigned long k) const {
    QExpansion acc = QExpansion::one();
    QExpansion base = *this;
    while (k) {
        if (k & 1) acc = mul(acc, base);
        k >>= 1;
        if (k) base = mul(base, base);
    }
    return acc;
}

QExpansion QExpansion::inverted() const {
    if (coeffs_.empty()) throw ZeroLeadingCoefficient("cannot invert a series with no known nonzero term");
    if (is_exact())
        throw ZeroLeadingCoefficient("inverse of an exact polynomial needs an explicit window; use inverted_to");
    long L = lead_index();
    const Rational& aL = coeffs_.begin()->second;
    // b has lead -L and is known below trunc - 2L.
    long tb = trunc_ - 2 * L;
    QExpansion b(denom_, tb);
    if (-L >= tb) return b; // degenerate window, nothing computable
    std::vector<Rational> bv(static_cast<std::size_t>(tb + L), Rational(0));
    // bv[k] holds coefficient of index -L + k.
    bv[0] = 1 / aL;
    for (long k = 1; k < tb + L; ++k) {
        Rational s(0);
        for (const auto& [n, c] : coeffs_) {
            long j = n - L;
            if (j == 0) continue;
            if (j > k) break;
            s += c * bv[static_cast<std::size_t>(k - j)];
        }
        if (s != 0) bv[static_cast<std::size_t>(k)] = -s / aL;
    }
    for (long k = 0; k < tb + L; ++k)
        if (bv[static_cast<std::size_t>(k)] != 0) b.coeffs_[-L + k] = bv[static_cast<std::size_t>(k)];
    return b;
}

QExpansion QExpansion::inverted_to(const Rational& target_exponent) const {
    if (coeffs_.empty()) throw ZeroLeadingCoefficient("cannot invert a series with no known nonzero term");
    Rational needed = target_exponent + 2 * lead_exponent();
    QExpansion a = *this;
    if (a.is_exact() || a.trunc_exponent() > needed) a = a.truncated_to(needed);
    return a.inverted();
}

QExpansion QExpansion::substituted_power(const Rational& m) const {
    if (sgn(m) <= 0) throw MalformedParams("substitute_power needs m > 0");
    long p = num_long(m), q = den_long(m);
    QExpansion r(denom_ * q, is_exact() ? kInfTrunc : trunc_ * p);
    for (const auto& [n, c] : coeffs_) r.coeffs_[n * p] = c;
    return r;
}

QExpansion QExpansion::q_derivative() const {
    QExpansion r(denom_, trunc_);
    for (const auto& [n, c] : coeffs_)
        if (n != 0) r.coeffs_[n] = c * rat(n, denom_);
    return r;
}

QExpansion::EvalResult QExpansion::eval(std::complex<double> tau, std::optional<CoeffGrowth> growth) const {
    if (tau.imag() <= 0) throw NonconvergentEvaluation("evaluation requires Im(tau) > 0");
    const double two_pi = 6.283185307179586476925286766559;
    std::complex<double> value(0.0, 0.0);
    double cmax = 0.0;
    for (const auto& [n, c] : coeffs_) {
        double x = static_cast<double>(n) / static_cast<double>(denom_);
        double cd = std::abs(to_double(c));
        cmax = std::max(cmax, cd);
        value += to_double(c) * std::exp(std::complex<double>(0.0, two_pi * x) * tau);
    }
    double tail = 0.0;
    if (!is_exact()) {
        CoeffGrowth g = growth.value_or(CoeffGrowth{2.0 * std::max(cmax, 1.0), 2.0});
        double T = static_cast<double>(trunc_) / static_cast<double>(denom_);
        double step = 1.0 / static_cast<double>(denom_);
        double r = std::exp(-two_pi * tau.imag() * step);
        double x = T;
        double px = std::exp(-two_pi * tau.imag() * T);
        for (int k = 0; k < 4000 && px > 0; ++k) {
            tail += g.amplitude * std::pow(1.0 + std::abs(x), g.power) * px;
            x += step;
            px *= r;
        }
        // Remainder: (1+x+k*step)^p <= (1+x)^p * exp(p*k*step/(1+x)), leaving
        // a geometric series with ratio r * exp(p*step/(1+x)).
        double rr = r * std::exp(std::abs(g.power) * step / (1.0 + std::abs(x)));
        if (rr < 1.0)
            tail += g.amplitude * std::pow(1.0 + std::abs(x), g.power) * px / (1.0 - rr);
        else
            tail = std::numeric_limits<double>::infinity();
    }
    return EvalResult{value, tail};
}

QExpansion QExpansion::normalized() const {
    long g = is_exact() ? 0 : std::gcd(denom_, trunc_);
    if (is_exact()) g = denom_;
    for (const auto& [n, c] : coeffs_) {
        g = std::gcd(g, std::abs(n));
        if (g == 1) break;
    }
    if (g <= 1 || denom_ % g != 0) return *this;
    QExpansion r(denom_ / g, is_exact() ? kInfTrunc : trunc_ / g);
    for (const auto& [n, c] : coeffs_) r.coeffs_[n / g] = c;
    return r;
}

bool operator==(const QExpansion& a, const QExpansion& b) {
    long d = QExpansion::merged_denom(a, b);
    QExpansion x = a.rescaled(d), y = b.rescaled(d);
    return x.trunc_ == y.trunc_ && x.coeffs_ == y.coeffs_;
}

bool agree(const QExpansion& a, const QExpansion& b) { return !first_mismatch(a, b).has_value(); }

std::optional<Rational> first_mismatch(const QExpansion& a, const QExpansion& b) {
    long d = QExpansion::merged_denom(a, b);
    QExpansion x = a.rescaled(d), y = b.rescaled(d);
    long t = std::min(x.trunc_, y.trunc_);
    auto ix = x.coeffs_.begin(), iy = y.coeffs_.begin();
    while (true) {
        long nx = (ix == x.coeffs_.end()) ? t : std::min(ix->first, t);
        long ny = (iy == y.coeffs_.end()) ? t : std::min(iy->first, t);
        long n = std::min(nx, ny);
        if (n >= t) return std::nullopt;
        Rational cx = (ix != x.coeffs_.end() && ix->first == n) ? ix->second : Rational(0);
        Rational cy = (iy != y.coeffs_.end() && iy->first == n) ? iy->second : Rational(0);
        if (cx != cy) return rat(n, d);
        if (ix != x.coeffs_.end() && ix->first == n) ++ix;
        if (iy != y.coeffs_.end() && iy->first == n) ++iy;
    }
}

std::string QExpansion::str(const char* var) const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [n, c] : coeffs_) {
        Rational e = rat(n, denom_);
        if (first) {
            if (c < 0) os << "-";
            first = false;
        } else {
            os << (c < 0 ? " - " : " + ");
        }
        Rational ac = abs(c);
        if (e == 0) {
            os << to_string(ac);
        } else {
            if (ac != 1) os << to_string(ac) << "*";
            os << var;
            if (e != 1) {
                if (is_integer(e))
                    os << "^" << to_string(e);
                else
                    os << "^(" << to_string(e) << ")";
            }
        }
    }
    if (first) os << "0";
    if (!is_exact()) {
        Rational t = trunc_exponent();
        os << " + O(" << var;
        if (is_integer(t))
            os << "^" << to_string(t);
        else
            os << "^(" << to_string(t) << ")";
        os << ")";
    }
    return os.str();
}

void SeriesBuilder::add(const Rational& exponent, const Rational& coeff) {
    if (coeff == 0 || exponent >= trunc_) return;
    auto [it, fresh] = terms_.try_emplace(exponent, coeff);
    if (!fresh) {
        it->second += coeff;
        if (it->second == 0) terms_.erase(it);
    }
}

QExpansion SeriesBuilder::build() const {
    long d = den_long(trunc_);
    for (const auto& [e, c] : terms_) d = lcm_long(d, den_long(e));
    QExpansion r(d, num_long(trunc_) * (d / den_long(trunc_)));
    for (const auto& [e, c] : terms_) r.set_coeff_index(num_long(e) * (d / den_long(e)), c);
    return r;
}

} // namespace ft
