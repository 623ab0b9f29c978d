#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "falsetheta/qexpansion.hpp"
#include "falsetheta/special.hpp"
#include "falsetheta/errors.hpp"

#include <complex>
#include <random>
#include <vector>

using namespace ft;

namespace {

// partitions into unrestricted parts, plain DP, kept independent of the
// series code on purpose
std::vector<long> partition_oracle(long n) {
    std::vector<long> p(static_cast<size_t>(n) + 1, 0);
    p[0] = 1;
    for (long k = 1; k <= n; ++k)
        for (long m = k; m <= n; ++m) p[static_cast<size_t>(m)] += p[static_cast<size_t>(m - k)];
    return p;
}

} // namespace

TEST_CASE("monomial arithmetic on a refined lattice") {
    QExpansion a = QExpansion::monomial(Rational(1, 24), 1);
    QExpansion b = QExpansion::monomial(Rational(25, 24), -1);
    QExpansion s = add(a, b);
    CHECK(s.coeff(Rational(1, 24)) == 1);
    CHECK(s.coeff(Rational(25, 24)) == -1);
    CHECK(add(s, QExpansion::monomial(Rational(25, 24), 1)) == a);
}

TEST_CASE("product truncation window follows the min rule") {
    QExpansion a(1, 3); // 1 + q + O(q^3)
    a.set_coeff_index(0, 1);
    a.set_coeff_index(1, 1);
    QExpansion b = QExpansion::monomial(Rational(2), 1); // exact q^2
    QExpansion ab = mul(a, b);
    CHECK(ab.trunc_exponent() == Rational(5));
    CHECK(ab.coeff(Rational(2)) == 1);
    CHECK(ab.coeff(Rational(3)) == 1);
    CHECK(ab.coeff(Rational(4)) == 0);

    QExpansion c(1, 4);
    c.set_coeff_index(0, 1);
    c.set_coeff_index(1, 1); // 1 + q + O(q^4)
    QExpansion d(1, 4);
    d.set_coeff_index(0, 1);
    d.set_coeff_index(1, -1); // 1 - q + O(q^4)
    QExpansion cd = mul(c, d); // 1 - q^2 + O(q^4)
    CHECK(cd.trunc_exponent() == Rational(4));
    CHECK(cd.coeff(Rational(0)) == 1);
    CHECK(cd.coeff(Rational(1)) == 0);
    CHECK(cd.coeff(Rational(2)) == -1);
    CHECK(cd.coeff(Rational(3)) == 0);
}

TEST_CASE("series inverse of the pentagonal product generates partitions") {
    const long N = 40;
    QExpansion qq = pochhammer_qq(N + 1);
    QExpansion inv = qq.inverted();
    auto p = partition_oracle(N);
    for (long n = 0; n <= N; ++n) CHECK(inv.coeff(Rational(n)) == Rational(p[static_cast<size_t>(n)]));
    QExpansion prod = mul(qq, inv);
    CHECK(prod.coeff(Rational(0)) == 1);
    for (long n = 1; n < 20; ++n) CHECK(prod.coeff(Rational(n)) == 0);
}

TEST_CASE("inverse of a shifted series with negative lead") {
    // f = q^{-2/3} (3 - 5 q + 7 q^2 + ...) ; f * f^{-1} must be 1 on the window
    std::mt19937 rng(20240817u);
    QExpansion f(3, 40);
    f.set_coeff_index(-2, 3);
    for (long n = -1; n < 40; ++n) {
        long v = static_cast<long>(rng() % 19) - 9;
        f.set_coeff_index(n, rat(v, 1 + static_cast<long>(rng() % 4)));
    }
    QExpansion g = f.inverted();
    QExpansion one = mul(f, g);
    CHECK(one.lead_exponent() == Rational(0));
    CHECK(one.coeff(Rational(0)) == 1);
    for (long n = 1; n < 30; ++n) CHECK(one.coeff(rat(n, 3)) == 0);
    CHECK(g.trunc_exponent() == Rational(44, 3)); // 40/3 - 2*(-2/3)
}

TEST_CASE("inverted_to reaches a requested exponent") {
    auto p = partition_oracle(24);
    QExpansion inv = pochhammer_qq(60).inverted_to(Rational(25));
    CHECK(inv.trunc_exponent() == Rational(25));
    for (long n = 0; n < 25; ++n) CHECK(inv.coeff(Rational(n)) == Rational(p[static_cast<size_t>(n)]));
    // the window can never exceed what the input certifies
    QExpansion starved = pochhammer_qq(8).inverted_to(Rational(25));
    CHECK(starved.trunc_exponent() == Rational(8));
}

TEST_CASE("inversion rejects a zero leading term") {
    QExpansion z = QExpansion::zero(2, 12);
    CHECK_THROWS_AS((void)z.inverted(), ZeroLeadingCoefficient);
}

TEST_CASE("power substitution and q-derivative") {
    QExpansion inv = pochhammer_qq(12).inverted();
    QExpansion cubed = inv.substituted_power(3);
    auto p = partition_oracle(11);
    CHECK(cubed.trunc_exponent() == Rational(36));
    for (long n = 0; n < 12; ++n) {
        CHECK(cubed.coeff(Rational(3 * n)) == Rational(p[static_cast<size_t>(n)]));
        if (n % 3 != 0) CHECK(cubed.coeff(Rational(n)) == 0);
    }

    SeriesBuilder sq(Rational(50));
    for (long n = 1; n * n < 50; ++n) sq.add(Rational(n * n), 1);
    QExpansion theta = sq.build();
    QExpansion dtheta = theta.q_derivative();
    for (long n = 1; n * n < 50; ++n) CHECK(dtheta.coeff(Rational(n * n)) == Rational(n * n));
    CHECK(dtheta.coeff(Rational(2)) == 0);
}

TEST_CASE("scaling, shifting, negation") {
    QExpansion f = pochhammer_qq(10);
    QExpansion g = f.shifted(Rational(1, 24)).scaled(Rational(-2, 7));
    CHECK(g.lead_exponent() == Rational(1, 24));
    CHECK(g.coeff(Rational(1, 24)) == Rational(-2, 7));
    QExpansion h = (-g).scaled(Rational(-7, 2)).shifted(Rational(-1, 24));
    CHECK(h == f.scaled(-1));
}

TEST_CASE("pow expands binomials") {
    QExpansion f = add(QExpansion::one(), QExpansion::monomial(Rational(1), 1)); // 1 + q exact
    QExpansion f4 = f.pow(4);
    CHECK(f4.is_exact());
    long binom[5] = {1, 4, 6, 4, 1};
    for (long n = 0; n <= 4; ++n) CHECK(f4.coeff(Rational(n)) == Rational(binom[n]));
}

TEST_CASE("agreement helpers locate the first discrepancy") {
    QExpansion a = pochhammer_qq(20);
    QExpansion b = a;
    CHECK(agree(a, b));
    CHECK(!first_mismatch(a, b).has_value());
    b.set_coeff_index(7, Rational(9));
    auto mm = first_mismatch(a, b);
    REQUIRE(mm.has_value());
    CHECK(*mm == Rational(7));
}

TEST_CASE("equality is lattice independent") {
    QExpansion a(1, 5);
    a.set_coeff_index(0, 1);
    a.set_coeff_index(1, 1);
    QExpansion b(2, 10);
    b.set_coeff_index(0, 1);
    b.set_coeff_index(2, 1);
    CHECK(a == b);
    b.set_coeff_index(3, Rational(1, 2)); // q^{3/2} now present
    CHECK(a != b);
}

TEST_CASE("evaluation matches the closed value of eta at i") {
    QExpansion eta = eta_series(30);
    std::complex<double> tau(0.0, 1.0);
    auto r = eta.eval(tau, QExpansion::CoeffGrowth{1.0, 0.0});
    // Gamma(1/4) / (2 pi^{3/4})
    const double ref = 0.7682254223260566;
    CHECK(std::abs(r.value - std::complex<double>(ref, 0.0)) < 1e-12);
    CHECK(r.tail_bound < 1e-12);
}

TEST_CASE("evaluation tail bound is honest for a geometric series") {
    const long N = 25;
    QExpansion f(1, N);
    for (long n = 0; n < N; ++n) f.set_coeff_index(n, 1);
    std::complex<double> tau(0.3, 0.25);
    std::complex<double> q = std::exp(std::complex<double>(0, 2 * 3.14159265358979323846) * tau);
    auto r = f.eval(tau, QExpansion::CoeffGrowth{1.0, 0.0});
    CHECK(std::abs(r.value - (1.0 - std::pow(q, N)) / (1.0 - q)) < 1e-13);
    double actual_tail = std::abs(std::pow(q, N) / (1.0 - q));
    double sharp_bound = std::pow(std::abs(q), N) / (1.0 - std::abs(q));
    CHECK(r.tail_bound >= actual_tail * 0.999);
    CHECK(r.tail_bound <= sharp_bound * 1.001);
}

TEST_CASE("builder merges lattices and folds duplicates") {
    SeriesBuilder b(Rational(3));
    b.add(Rational(1, 2), Rational(1));
    b.add(Rational(1, 3), Rational(2));
    b.add(Rational(1, 2), Rational(4));
    b.add(Rational(7, 2), Rational(99)); // beyond trunc, dropped
    QExpansion f = b.build();
    CHECK(f.denom() == 6);
    CHECK(f.coeff(Rational(1, 2)) == 5);
    CHECK(f.coeff(Rational(1, 3)) == 2);
    CHECK(f.trunc_exponent() == Rational(3));
}

TEST_CASE("coefficient access outside the window throws") {
    QExpansion f = pochhammer_qq(5);
    CHECK_THROWS_AS((void)f.coeff(Rational(5)), std::out_of_range);
    CHECK(f.knows(Rational(9, 2)));
    CHECK(!f.knows(Rational(5)));
    CHECK(f.coeff(Rational(1, 2)) == 0); // off lattice but inside the window
}

TEST_CASE("rational parsing") {
    CHECK(parse_rational("-3/4") == Rational(-3, 4));
    CHECK(parse_rational("17") == Rational(17));
    CHECK_THROWS_AS(parse_rational("3/0"), MalformedParams);
    CHECK_THROWS_AS(parse_rational("x"), MalformedParams);
}

TEST_CASE("printing is stable") {
    QExpansion f(2, 5);
    f.set_coeff_index(-1, Rational(-1, 2));
    f.set_coeff_index(2, 3);
    std::string s = f.str();
    CHECK(s.find("q^(-1/2)") != std::string::npos);
    CHECK(s.find("O(q^(5/2))") != std::string::npos);
}
