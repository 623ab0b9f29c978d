#pragma once

#include "falsetheta/eichler.hpp"
#include "falsetheta/qexpansion.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace ft {

// Weighted tree describing a plumbed 3-manifold.  Vertices are indexed
// 0..n-1; edges are unordered pairs of distinct indices.
struct PlumbingGraph {
    std::vector<long> weights;
    std::vector<std::pair<int, int>> edges;

    std::size_t size() const { return weights.size(); }
    std::vector<int> degrees() const;
    // delta_j = deg(v_j) mod 2, the distinguished spin-c representative
    std::vector<long> shift_vector() const;
};

PlumbingGraph relabeled(const PlumbingGraph& g, const std::vector<int>& perm);

// Symmetric integer matrix with vertex weights on the diagonal and -1 for
// each edge; definiteness decided exactly through leading principal minors.
struct LinkingMatrix {
    std::vector<std::vector<long>> m;
    bool positive_definite = false;
    bool unimodular = false;
    Rational det;
};

LinkingMatrix linking_matrix(const PlumbingGraph& g); // throws NotATree

// Principal-value Laurent coefficient of (w - 1/w)^{2 - deg} on the unit
// circle: nonnegative powers expand as polynomials, negative powers as the
// average of the |w| > 1 and |w| < 1 geometric expansions.
Rational pv_coefficient(int deg, long x);

// Exact homological-block series below exponent N: the lattice theta sum of
// the class a paired with the principal-value expansion above, carrying the
// global prefactor q^{(-3n + tr M)/4}.  Only unimodular positive-definite
// trees are accepted; omitting a uses the shift vector.
QExpansion zhat_series(const PlumbingGraph& g, const std::vector<long>& a, const Rational& N);
QExpansion zhat_series(const PlumbingGraph& g, const Rational& N);

// Independent re-derivation with the loops reordered: enumerates the finite
// Laurent supports of the vertex factors and keeps the exponent tuples that
// land in the shifted lattice, instead of walking the lattice and reading
// coefficients off.  Used as the cross-check oracle for zhat_series.
QExpansion zhat_series_by_support(const PlumbingGraph& g, const std::vector<long>& a,
                                  const Rational& N);
QExpansion zhat_series_by_support(const PlumbingGraph& g, const Rational& N);

// F_{S,Q,eps}: sum_{alpha in S} eps(alpha) sum_{n in N_0^2} q^{K Q(n+alpha)}
// with Q = sigma1 x^2 + 2 sigma2 x y + sigma3 y^2.  Validation (definiteness,
// closure of S under both reflections, sign constancy on orbits, integrality
// of K*alpha) is shared with the completion machinery.  The builder also
// assembles the symmetrized full-lattice rewrite
//   (1/4) sum_alpha eps(alpha) sum_{Z^2+alpha} sgn(n1)(sgn(n1)+sgn(n2)) q^{K Q(n)}
// and insists on exact agreement; a discrepancy would be an internal fault
// and raises std::logic_error.
struct FsqeSeriesResult {
    QExpansion series;
    QExpansion symmetrized;
    long minimal_scale = 1; // least K' with K'S integral
    bool scale_is_minimal = true;
};
FsqeSeriesResult fsqe_series_detailed(const FsqeSpec& spec, const Rational& N);
QExpansion fsqe_series(const FsqeSpec& spec, const Rational& N);

// least K with K * alpha integral for every shift in S
long fsqe_minimal_scale(const FsqeSpec& spec);

// q^{shift} * scale * (F_{S,Q,eps} - F_{S,Q',eps}) where Q' is Q with the
// cross coefficient negated.  This is the shape in which the block series of
// the plumbing data files decompose; see data/hgraph_difference.json.
QExpansion fsqe_difference_series(const FsqeSpec& spec, const Rational& shift,
                                  const Rational& scale, const Rational& N);

// Numeric confrontation of the exact series with its double-integral
// representation (two iterated-integral families over residues mod sigma3
// and mod sigma1 plus the arctan-weighted theta product), both at tau.
struct FsqeIntegralReport {
    Complex series_value;
    double series_tail = 0;
    Complex integral_value;
    double integral_tail = 0;
    double abs_difference = 0;
};
FsqeIntegralReport fsqe_integral_report(const FsqeSpec& spec, Complex tau,
                                        const QuadratureConfig& cfg = {});

// Exact two-variable outer-product check of the weight-3/2 combination
//   sum_{j=0}^{3} (-1)^j theta'_{2,j}(3 w1) theta'_{2,j+2}(w2)
//     = (1/8) eta(3 w1)^3 eta(w2)^3
// to order N in each variable.
struct TwoVariableIdentityReport {
    bool match = false;
    std::optional<std::pair<Rational, Rational>> first_mismatch;
};
TwoVariableIdentityReport theta_combination_identity(long N);

// Bundled checks tying the Schur-index series together: (i) the reciprocal
// theta-quotient Fourier coefficient at r = (0,0) against the direct double
// false theta sum, exact to order N; (ii) for k = 1 the two-variable theta
// combination identity above; (iii) the numeric residual of the series
// against its double-integral representation at tau.
struct FkIdentityReport {
    bool series_match = false;
    std::optional<Rational> series_mismatch;
    std::optional<TwoVariableIdentityReport> theta_identity; // k == 1 only
    double integral_residual = 0;
    double integral_tail = 0;
};
FkIdentityReport fk_identity_suite(long k, long N, Complex tau, const QuadratureConfig& cfg = {});

} // namespace ft
