#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "falsetheta/qexpansion.hpp"
#include "falsetheta/rational.hpp"
#include "falsetheta/special.hpp"

namespace ft {

using Complex = std::complex<double>;

struct ModularMatrix {
    long a = 1, b = 0, c = 0, d = 1;

    long det() const { return a * d - b * c; }
    Complex apply(Complex tau) const;
    Complex automorphy(Complex tau) const; // c tau + d

    static ModularMatrix identity() { return {1, 0, 0, 1}; }
    static ModularMatrix t_power(long n) { return {1, n, 0, 1}; }
    static ModularMatrix s() { return {0, -1, 1, 0}; }
    ModularMatrix times(const ModularMatrix& o) const;
};

struct QuadratureConfig {
    int nodes = 48;          // Gauss-Legendre nodes per panel
    int panels = 6;          // panels per integration layer
    double tail = 0.0;       // vertical tail height; 0 picks it from the decay rate
    double tolerance = 1e-9; // target for tail remainders and truncations
};

// Hyperbolic geodesic from tau to a finite endpoint, the vertical ray toward
// i*infinity truncated at a given height, or (for the path-deformation check)
// the straight segment between the endpoints.  at(0) = tau.
class GeodesicPath {
  public:
    static GeodesicPath vertical_ray(Complex tau, double height);
    static GeodesicPath to_point(Complex tau, Complex w);
    static GeodesicPath straight(Complex tau, Complex w);

    Complex tau() const { return tau_; }
    Complex endpoint() const;
    Complex at(double y) const;
    Complex derivative(double y) const;
    // i*(at(y) - tau), computed in a cancellation-free form near y = 0
    Complex branch_base(double y) const;
    // the +-1 square-root bookkeeping sign of at(y) relative to tau
    int chi(double y) const;

  private:
    GeodesicPath() = default;
    enum class Shape { Vertical, Arc, Segment } shape_ = Shape::Vertical;
    int shape_code() const { return shape_ == Shape::Vertical ? 0 : (shape_ == Shape::Segment ? 1 : 2); }
    Complex tau_;
    double height_ = 0;           // Vertical
    Complex delta_;               // Segment: endpoint - tau
    double center_ = 0, radius_ = 0, th0_ = 0, th1_ = 0; // Arc
};

// series families evaluated directly in the upper half-plane
struct ThetaKind {
    enum class Tag { Eta, Eta3, Unary, Torsion } tag = Tag::Eta;
    UnaryThetaSpec unary;
    int l1 = 0, l2 = 0;

    static ThetaKind eta() { return {}; }
    static ThetaKind eta3();
    static ThetaKind unary_theta(const UnaryThetaSpec& spec);
    static ThetaKind torsion(int l1, int l2);
};

Complex theta_numeric(const ThetaKind& kind, const Rational& scale, Complex w);
Complex jacobi_theta_numeric(Complex z, Complex tau);
Complex eta_numeric(Complex tau);
Complex e2_numeric(Complex tau);

// regularized integral of f(w2)*(i(w2-tau))^{-3/2} from tau to w1, taken along
// the geodesic between them; the endpoint singularity is removed analytically
// by subtracting f(tau) and integrating the subtracted kernel in closed form
Complex regularized_inner(const std::function<Complex(Complex)>& f, Complex tau, Complex w1,
                          const QuadratureConfig& cfg = {});

// positive-definite double-sum family sum_{alpha} eps(alpha)
// sum_{n >= 0} q^{K Q(n + alpha)} with Q = s1 n1^2 + 2 s2 n1 n2 + s3 n2^2
struct FsqeSpec {
    long sigma1 = 1, sigma2 = 0, sigma3 = 1;
    long K = 1;
    std::vector<std::pair<Rational, Rational>> alphas;
    std::vector<int> eps;
};

// Shared validation: definiteness of Q (NotPositiveDefinite), shape and sign
// checks (MalformedParams), closure of the shift set under both reflections
// with sign constancy on orbits (ClosureViolation).
void validate_fsqe(const FsqeSpec& spec);

struct CompletionKind {
    enum class Tag { Psi, Phi, Fk, Fsqe } tag = Tag::Psi;
    long k = 1;
    FsqeSpec fsqe;

    static CompletionKind psi();
    static CompletionKind phi();
    static CompletionKind fk(long k);
    static CompletionKind fsqe_kind(FsqeSpec spec);
};

enum class PathStyle { Geodesic, Straight };

struct CompletionResult {
    Complex value;
    double tail_remainder = 0; // heuristic bound on the discarded vertical tail
    int chi = 1;               // the constant branch sign along the path
};

// double Eichler-type integral for the requested family; w empty means the
// vertical limit toward tau + i*infinity (truncated per cfg.tail / decay)
CompletionResult completion_detailed(const CompletionKind& kind, Complex tau,
                                     std::optional<Complex> w, const QuadratureConfig& cfg = {},
                                     PathStyle style = PathStyle::Geodesic);
Complex completion(const CompletionKind& kind, Complex tau, std::optional<Complex> w,
                   const QuadratureConfig& cfg = {}, PathStyle style = PathStyle::Geodesic);

// |closed form - (two iterated integrals + arctan correction)| for the
// product-of-signs identity at one point
double sign_lemma_residual(double l1, double l2, double kappa, Complex tau,
                           const QuadratureConfig& cfg = {});

// residual of the rank-two identity: signed lattice sum against the iterated
// integral of the two partner theta kernels minus the arctan-weighted theta
double rank_two_sign_residual(long a, long b, long c, const Rational& alpha1,
                              const Rational& alpha2, Complex tau,
                              const QuadratureConfig& cfg = {});

struct EtaMultiplierState {
    ModularMatrix matrix;
    Complex value;        // exp(pi i phase_twelfths / 12)
    int phase_twelfths;   // reduced mod 24
    std::string word;     // generator decomposition, e.g. "T^3 S T^-1"
};
EtaMultiplierState eta_multiplier(const ModularMatrix& m);

enum class CompletionFamily { Psi, Phi };

double modular_residual(CompletionFamily kind, const ModularMatrix& m, Complex tau, Complex w,
                        const QuadratureConfig& cfg = {});

// pointwise numeric residuals of the theta-quotient expansions
enum class LemmaId {
    TwoTheta,           // zeta^r / (theta(z) theta(z+w))
    TripleTheta,        // zeta^r / (theta(z) theta(z+w1) theta(z+w2))
    TripleThetaDouble,  // zeta^r / (theta(2z) theta(z+w1) theta(z+w2))
    CubeInverse,        // zeta^r / theta(z)^3
    SquareDoubleInverse // zeta^r / (theta(z)^2 theta(2z))
};

struct LemmaPoint {
    Complex z;
    std::optional<Complex> w1;
    std::optional<Complex> w2;
    Complex tau;
    Rational r;
};

double lemma_residual(LemmaId id, const LemmaPoint& pt, long terms = 24);

} // namespace ft
