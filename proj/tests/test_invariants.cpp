#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "falsetheta/invariants.hpp"
#include "falsetheta/jacobi_ct.hpp"
#include "falsetheta/errors.hpp"

#include <complex>
#include <vector>

using namespace ft;

namespace {

using C = std::complex<double>;

PlumbingGraph star_1237() {
    return {{1, 2, 3, 7}, {{0, 1}, {0, 2}, {0, 3}}};
}

PlumbingGraph hgraph_123723() {
    return {{1, 2, 3, 7, 2, 3}, {{0, 1}, {0, 2}, {0, 3}, {3, 4}, {3, 5}}};
}

QExpansion from_terms(const std::vector<std::pair<Rational, Rational>>& tms,
                      const Rational& trunc) {
    SeriesBuilder b{trunc};
    for (const auto& [e, c] : tms) b.add(e, c);
    return b.build();
}

// orbit of the two reflections through alpha, all signs equal
void push_orbit(FsqeSpec& spec, const Rational& a1, const Rational& a2, int eps) {
    auto have = [&](const Rational& x, const Rational& y) {
        for (const auto& [u, v] : spec.alphas)
            if (u == x && v == y) return true;
        return false;
    };
    for (auto [x, y] : {std::pair{a1, a2}, {1 - a1, 1 - a2}, {1 - a1, a2}, {a1, 1 - a2}})
        if (!have(x, y)) {
            spec.alphas.emplace_back(x, y);
            spec.eps.push_back(eps);
        }
}

// the worked decomposition data for the H-graph above: scale 24, shifts on
// the 24ths lattice split into a plus group (both coordinates from the same
// residue family) and a minus group (mixed families)
FsqeSpec hgraph_difference_spec() {
    FsqeSpec spec;
    spec.sigma1 = 37;
    spec.sigma2 = 6;
    spec.sigma3 = 1;
    spec.K = 24;
    const long fam_a[] = {1, 11, 13, 23};
    const long fam_b[] = {5, 7, 17, 19};
    for (long x : fam_a)
        for (long y : fam_a) {
            spec.alphas.emplace_back(rat(x, 24), rat(y, 24));
            spec.eps.push_back(1);
        }
    for (long x : fam_b)
        for (long y : fam_b) {
            spec.alphas.emplace_back(rat(x, 24), rat(y, 24));
            spec.eps.push_back(1);
        }
    for (long x : fam_a)
        for (long y : fam_b) {
            spec.alphas.emplace_back(rat(x, 24), rat(y, 24));
            spec.eps.push_back(-1);
            spec.alphas.emplace_back(rat(y, 24), rat(x, 24));
            spec.eps.push_back(-1);
        }
    return spec;
}

} // namespace

TEST_CASE("linking matrices carry exact definiteness and determinant flags") {
    LinkingMatrix single = linking_matrix({{2}, {}});
    CHECK(single.det == 2);
    CHECK(single.positive_definite);
    CHECK_FALSE(single.unimodular);

    LinkingMatrix flat = linking_matrix({{1, 1}, {{0, 1}}});
    CHECK(flat.det == 0);
    CHECK_FALSE(flat.positive_definite);

    PlumbingGraph h = hgraph_123723();
    CHECK(h.degrees() == std::vector<int>{3, 1, 1, 3, 1, 1});
    CHECK(h.shift_vector() == std::vector<long>{1, 1, 1, 1, 1, 1});
    LinkingMatrix hm = linking_matrix(h);
    CHECK(hm.det == 1);
    CHECK(hm.positive_definite);
    CHECK(hm.unimodular);
    CHECK(hm.m[0][3] == -1);
    CHECK(hm.m[0][4] == 0);

    LinkingMatrix star = linking_matrix(star_1237());
    CHECK(star.det == 1);
    CHECK(star.positive_definite);
}

TEST_CASE("malformed graphs are rejected as non-trees") {
    CHECK_THROWS_AS(linking_matrix({{}, {}}), NotATree);
    CHECK_THROWS_AS(linking_matrix({{1, 1}, {}}), NotATree);                    // disconnected
    CHECK_THROWS_AS(linking_matrix({{1, 1, 1}, {{0, 1}, {1, 2}, {2, 0}}}), NotATree); // cycle
    CHECK_THROWS_AS(linking_matrix({{1, 1}, {{0, 0}}}), NotATree);              // self-loop
    CHECK_THROWS_AS(linking_matrix({{1, 1, 1}, {{0, 1}, {0, 1}}}), NotATree);   // duplicate
    CHECK_THROWS_AS(linking_matrix({{1, 1}, {{0, 5}}}), NotATree);              // range
}

TEST_CASE("principal-value expansion coefficients") {
    // squared factor of an isolated vertex
    CHECK(pv_coefficient(0, 2) == 1);
    CHECK(pv_coefficient(0, 0) == -2);
    CHECK(pv_coefficient(0, -2) == 1);
    CHECK(pv_coefficient(0, 1) == 0);
    CHECK(pv_coefficient(0, 4) == 0);
    // leaf
    CHECK(pv_coefficient(1, 1) == 1);
    CHECK(pv_coefficient(1, -1) == -1);
    CHECK(pv_coefficient(1, 3) == 0);
    // degree two contributes only the constant term
    CHECK(pv_coefficient(2, 0) == 1);
    CHECK(pv_coefficient(2, 2) == 0);
    // first negative power: the averaged expansions give half signs
    CHECK(pv_coefficient(3, -1) == rat(1, 2));
    CHECK(pv_coefficient(3, -7) == rat(1, 2));
    CHECK(pv_coefficient(3, 1) == rat(-1, 2));
    CHECK(pv_coefficient(3, 5) == rat(-1, 2));
    CHECK(pv_coefficient(3, 0) == 0);
    CHECK(pv_coefficient(3, 2) == 0);
    // second negative power grows binomially and is even in sign
    CHECK(pv_coefficient(4, -2) == rat(1, 2));
    CHECK(pv_coefficient(4, -4) == 1);
    CHECK(pv_coefficient(4, -6) == rat(3, 2));
    CHECK(pv_coefficient(4, 4) == 1);
    CHECK(pv_coefficient(4, 0) == 0);
}

TEST_CASE("block series of the unknot plumbing is an exact two-term polynomial") {
    PlumbingGraph g{{1}, {}};
    QExpansion z = zhat_series(g, rat(30));
    QExpansion expect = from_terms({{rat(-1, 2), rat(-2)}, {rat(1, 2), rat(2)}}, rat(30));
    CHECK(agree(z, expect));
    CHECK(z.term_count() == 2);
    CHECK(agree(zhat_series_by_support(g, rat(30)), expect));
}

TEST_CASE("both block pipelines agree and match the frozen star prefix") {
    PlumbingGraph g = star_1237();
    QExpansion a = zhat_series(g, rat(21));
    QExpansion b = zhat_series_by_support(g, rat(21));
    CHECK(agree(a, b));
    CHECK(a.trunc_exponent() == b.trunc_exponent());
    // sparse unit-coefficient pattern of this Seifert block series
    QExpansion expect = from_terms({{rat(1, 2), rat(1)},
                                    {rat(3, 2), rat(-1)},
                                    {rat(11, 2), rat(-1)},
                                    {rat(21, 2), rat(1)},
                                    {rat(23, 2), rat(-1)},
                                    {rat(37, 2), rat(1)}},
                                   rat(21));
    CHECK(agree(a, expect));
    CHECK(a.normalized().denom() <= 4);
    CHECK(4 % a.normalized().denom() == 0);
}

TEST_CASE("both block pipelines agree on the H-graph and pin its prefix") {
    PlumbingGraph g = hgraph_123723();
    QExpansion a = zhat_series(g, rat(12));
    QExpansion b = zhat_series_by_support(g, rat(12));
    CHECK(agree(a, b));
    CHECK(a.coeff(rat(1, 2)) == 1);
    CHECK(a.coeff(rat(3, 2)) == -2);
    CHECK(a.coeff(rat(5, 2)) == 0);
    CHECK(a.coeff(rat(7, 2)) == 2);
    CHECK(a.coeff(rat(9, 2)) == 1);
    CHECK(a.coeff(rat(11, 2)) == 1);
    CHECK(a.coeff(rat(13, 2)) == -2);
    CHECK(a.coeff(rat(15, 2)) == -1);
    CHECK(a.coeff(rat(17, 2)) == -2);
    CHECK(a.coeff(rat(19, 2)) == -2);
    CHECK(a.coeff(rat(21, 2)) == 1);
}

TEST_CASE("block series is invariant under vertex relabeling") {
    PlumbingGraph g = star_1237();
    PlumbingGraph p = relabeled(g, {2, 0, 3, 1});
    CHECK(agree(zhat_series(g, rat(15)), zhat_series(p, rat(15))));

    PlumbingGraph h = hgraph_123723();
    PlumbingGraph hp = relabeled(h, {5, 3, 1, 0, 2, 4});
    CHECK(agree(zhat_series(h, rat(9)), zhat_series(hp, rat(9))));

    CHECK_THROWS_AS(relabeled(g, {0, 1, 2}), MalformedParams);
    CHECK_THROWS_AS(relabeled(g, {0, 1, 2, 2}), MalformedParams);
}

TEST_CASE("degree-two vertices contribute a trivial factor") {
    // path with a middle vertex of degree two; its Laurent factor is the
    // constant 1, so only tuples with a vanishing middle component survive
    PlumbingGraph g{{2, 2, 1}, {{0, 1}, {1, 2}}};
    QExpansion a = zhat_series(g, rat(16));
    QExpansion b = zhat_series_by_support(g, rat(16));
    CHECK(agree(a, b));
    QExpansion expect = from_terms({{rat(-1, 2), rat(-2)}, {rat(1, 2), rat(2)}}, rat(16));
    CHECK(agree(a, expect));
}

TEST_CASE("class vectors are validated and equivalent representatives match") {
    PlumbingGraph g = star_1237();
    CHECK_THROWS_AS(zhat_series(g, {1, 1, 1}, rat(5)), ClassVectorMismatch);
    CHECK_THROWS_AS(zhat_series(g, {0, 1, 1, 1}, rat(5)), ClassVectorMismatch);
    // delta + 2 M e_0 names the same class, hence the same series
    QExpansion base = zhat_series(g, rat(13));
    CHECK(agree(base, zhat_series(g, {3, -1, -1, -1}, rat(13))));
    CHECK(agree(base, zhat_series_by_support(g, {3, -1, -1, -1}, rat(13))));
}

TEST_CASE("non-unimodular and indefinite plumbings are rejected") {
    CHECK_THROWS_AS(zhat_series({{2}, {}}, rat(5)), NotUnimodular);
    CHECK_THROWS_AS(zhat_series({{1, 1}, {{0, 1}}}, rat(5)), NotPositiveDefinite);
    CHECK_THROWS_AS(zhat_series({{-1}, {}}, rat(5)), NotPositiveDefinite);
    CHECK_THROWS_AS(zhat_series_by_support({{2}, {}}, rat(5)), NotUnimodular);
}

TEST_CASE("quadrant series of the self-symmetric shift reproduces the direct sum") {
    FsqeSpec spec;
    spec.sigma1 = 1;
    spec.sigma2 = 0;
    spec.sigma3 = 1;
    spec.K = 2;
    spec.alphas = {{rat(1, 2), rat(1, 2)}};
    spec.eps = {1};
    FsqeSeriesResult res = fsqe_series_detailed(spec, rat(20));
    QExpansion expect = from_terms({{rat(1), rat(1)},
                                    {rat(5), rat(2)},
                                    {rat(9), rat(1)},
                                    {rat(13), rat(2)},
                                    {rat(17), rat(2)}},
                                   rat(20));
    CHECK(agree(res.series, expect));
    CHECK(agree(res.symmetrized, expect));
    CHECK(res.minimal_scale == 2);
    CHECK(res.scale_is_minimal);
}

TEST_CASE("quadrant series validation and scale bookkeeping") {
    FsqeSpec empty;
    empty.alphas = {};
    empty.eps = {};
    CHECK(fsqe_series(empty, rat(10)).is_zero());

    FsqeSpec spec;
    spec.sigma1 = 1;
    spec.sigma2 = 0;
    spec.sigma3 = 2;
    spec.K = 3;
    push_orbit(spec, rat(1, 3), rat(1, 3), 1);
    CHECK(spec.alphas.size() == 4);
    CHECK(fsqe_minimal_scale(spec) == 3);
    CHECK(fsqe_series_detailed(spec, rat(12)).scale_is_minimal);

    FsqeSpec wide = spec;
    wide.K = 6;
    FsqeSeriesResult res = fsqe_series_detailed(wide, rat(12));
    CHECK_FALSE(res.scale_is_minimal);
    CHECK(res.minimal_scale == 3);

    FsqeSpec broken = spec;
    broken.alphas.pop_back();
    broken.eps.pop_back();
    CHECK_THROWS_AS(fsqe_series(broken, rat(12)), ClosureViolation);
    broken = spec;
    broken.eps[1] = -1;
    CHECK_THROWS_AS(fsqe_series(broken, rat(12)), ClosureViolation);
    broken = spec;
    broken.sigma2 = 3; // sigma1 sigma3 - sigma2^2 < 0
    CHECK_THROWS_AS(fsqe_series(broken, rat(12)), NotPositiveDefinite);
}

TEST_CASE("the H-graph block series is a difference of two quadrant families") {
    FsqeSpec spec = hgraph_difference_spec();
    CHECK(spec.alphas.size() == 64);
    CHECK(fsqe_minimal_scale(spec) == 24);
    QExpansion diff = fsqe_difference_series(spec, rat(5, 12), rat(1, 2), rat(21));
    QExpansion z = zhat_series(hgraph_123723(), rat(21));
    CHECK(agree(z, diff));
    CHECK_FALSE(first_mismatch(z, diff).has_value());
}

TEST_CASE("quadrant series match their integral representation numerically") {
    QuadratureConfig cfg;
    C tau(0, 2);

    FsqeSpec diag;
    diag.sigma1 = 2;
    diag.sigma2 = 0;
    diag.sigma3 = 3;
    diag.K = 2;
    diag.alphas = {{rat(1, 2), rat(1, 2)}};
    diag.eps = {1};
    FsqeIntegralReport rep = fsqe_integral_report(diag, tau, cfg);
    CHECK(rep.abs_difference < 1e-6);

    FsqeSpec skew = diag;
    skew.sigma2 = 1;
    rep = fsqe_integral_report(skew, tau, cfg);
    CHECK(rep.abs_difference < 1e-6);

    // away from the imaginary axis
    rep = fsqe_integral_report(skew, C(0.3, 1.4), cfg);
    CHECK(rep.abs_difference < 1e-6);
}

TEST_CASE("two-variable theta combination collapses to the eta cubes") {
    TwoVariableIdentityReport rep = theta_combination_identity(10);
    CHECK(rep.match);
    CHECK_FALSE(rep.first_mismatch.has_value());
}

TEST_CASE("index-family identities hold exactly and numerically") {
    QuadratureConfig cfg;
    for (long k : {1L, 2L, 3L}) {
        FkIdentityReport rep = fk_identity_suite(k, 12, C(0, 2), cfg);
        CHECK(rep.series_match);
        CHECK_FALSE(rep.series_mismatch.has_value());
        CHECK(rep.integral_residual < 1e-6);
        if (k == 1) {
            REQUIRE(rep.theta_identity.has_value());
            CHECK(rep.theta_identity->match);
        } else {
            CHECK_FALSE(rep.theta_identity.has_value());
        }
    }
    CHECK_THROWS_AS(fk_identity_suite(0, 10, C(0, 2), cfg), MalformedParams);
}

TEST_CASE("half-shifted sign averages take the documented values") {
    for (long m = -3; m <= 3; ++m)
        for (long n = -3; n <= 3; ++n) {
            int r = sign_average(m, n);
            CHECK(r >= -1);
            CHECK(r <= 1);
            CHECK(((m >= 0 && n >= 0) == (r == 1)));
            CHECK(((m < 0 && n < 0) == (r == -1)));
        }
}
