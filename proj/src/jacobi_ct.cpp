#include "falsetheta/jacobi_ct.hpp"

#include "falsetheta/errors.hpp"
#include "falsetheta/lattice.hpp"
#include "falsetheta/special.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <tuple>

namespace ft {

void ZWindow::absorb(long e1, long e2) {
    if (empty) {
        e1lo = e1hi = e1;
        e2lo = e2hi = e2;
        empty = false;
        return;
    }
    e1lo = std::min(e1lo, e1);
    e1hi = std::max(e1hi, e1);
    e2lo = std::min(e2lo, e2);
    e2hi = std::max(e2hi, e2);
}

void ZWindow::absorb(const ZWindow& other) {
    if (other.empty)
        return;
    absorb(other.e1lo, other.e2lo);
    absorb(other.e1hi, other.e2hi);
}

ZWindow ZWindow::plus(const ZWindow& other) const {
    if (empty || other.empty)
        return ZWindow{};
    return ZWindow{false, e1lo + other.e1lo, e1hi + other.e1hi, e2lo + other.e2lo,
                   e2hi + other.e2hi};
}

bool ZWindow::contains(long e1, long e2) const {
    return !empty && e1lo <= e1 && e1 <= e1hi && e2lo <= e2 && e2 <= e2hi;
}

bool ZWindow::contains(const ZWindow& other) const {
    if (other.empty)
        return true;
    return contains(other.e1lo, other.e2lo) && contains(other.e1hi, other.e2hi);
}

namespace {

long exponent_index(const Rational& e, long qden, const char* what) {
    Rational scaled = e * qden;
    if (!is_integer(scaled))
        throw IncompatibleLattices(std::string(what) + " does not lie on the q lattice");
    return num_long(scaled);
}

} // namespace

LaurentBlock::LaurentBlock(long zden1, long zden2, long qden, const Rational& trunc_exponent)
    : zden1_(zden1), zden2_(zden2), qden_(qden), trunc_(trunc_exponent) {
    if (zden1 < 1 || zden2 < 1 || qden < 1)
        throw MalformedParams("block lattice denominators must be positive");
    if (sgn(trunc_) <= 0)
        throw MalformedParams("block truncation must be positive");
    trunc_index_ = exponent_index(trunc_, qden_, "block truncation");
    zbounds_.assign(static_cast<std::size_t>(trunc_index_), ZWindow{});
}

void LaurentBlock::widen_window(long uidx, long e1, long e2) {
    for (long u = std::max(uidx, 0L); u < trunc_index_; ++u)
        zbounds_[static_cast<std::size_t>(u)].absorb(e1, e2);
}

void LaurentBlock::add_monomial(long e1, long e2, const Rational& qexp, const Rational& c) {
    if (sgn(qexp) < 0)
        throw IncompatibleLattices("block coefficients cannot carry negative q powers");
    long uidx = exponent_index(qexp, qden_, "monomial exponent");
    if (uidx >= trunc_index_)
        return; // invisible below the truncation
    auto key = std::make_pair(e1, e2);
    auto it = terms_.find(key);
    QExpansion base =
        it == terms_.end() ? QExpansion::zero(qden_, trunc_index_) : it->second;
    QExpansion summed = add(base, QExpansion::monomial(qexp, c));
    if (summed.is_zero())
        terms_.erase(key);
    else
        terms_[key] = summed;
    widen_window(uidx, e1, e2);
}

void LaurentBlock::add_series(long e1, long e2, const QExpansion& c) {
    if (!c.is_zero() && sgn(c.lead_exponent()) < 0)
        throw IncompatibleLattices("block coefficients cannot carry negative q powers");
    if (!c.is_exact() && c.trunc_exponent() < trunc_)
        throw IncompatibleLattices("coefficient window is narrower than the block");
    if (qden_ % QExpansion::merged_denom(c, QExpansion::zero(qden_, 0)) != 0)
        throw IncompatibleLattices("coefficient lattice does not divide the block lattice");
    QExpansion t = c.truncated_to(trunc_).rescaled(qden_);
    if (t.is_zero())
        return;
    auto key = std::make_pair(e1, e2);
    auto it = terms_.find(key);
    QExpansion summed = it == terms_.end() ? t : add(it->second, t);
    if (summed.is_zero())
        terms_.erase(key);
    else
        terms_[key] = summed;
    widen_window(t.lead_index(), e1, e2);
}

QExpansion LaurentBlock::coeff(long e1, long e2) const {
    auto it = terms_.find(std::make_pair(e1, e2));
    if (it == terms_.end())
        return QExpansion::zero(qden_, trunc_index_);
    return it->second;
}

ZWindow LaurentBlock::window(long uidx) const {
    return zbounds_.at(static_cast<std::size_t>(uidx));
}

LaurentBlock LaurentBlock::mul(const LaurentBlock& other) const {
    if (zden1_ != other.zden1_ || zden2_ != other.zden2_ || qden_ != other.qden_)
        throw IncompatibleLattices("block product needs matching z and q lattices");
    LaurentBlock out(zden1_, zden2_, qden_, std::min(trunc_, other.trunc_));
    for (const auto& [ka, ca] : terms_) {
        for (const auto& [kb, cb] : other.terms_) {
            if (ca.lead_index() + cb.lead_index() >= out.trunc_index_)
                continue;
            auto key = std::make_pair(ka.first + kb.first, ka.second + kb.second);
            QExpansion prod = (ca * cb).truncated_to(out.trunc_);
            if (prod.is_zero())
                continue;
            auto it = out.terms_.find(key);
            QExpansion summed = it == out.terms_.end() ? prod : add(it->second, prod);
            if (summed.is_zero())
                out.terms_.erase(key);
            else
                out.terms_[key] = summed;
        }
    }
    for (long u = 0; u < out.trunc_index_; ++u) {
        ZWindow w;
        for (long u1 = 0; u1 <= u; ++u1) {
            long c1 = std::min(u1, trunc_index_ - 1);
            long c2 = std::min(u - u1, other.trunc_index_ - 1);
            w.absorb(window(c1).plus(other.window(c2)));
        }
        out.zbounds_[static_cast<std::size_t>(u)] = w;
    }
    return out;
}

LaurentBlock LaurentBlock::mul_scalar(const QExpansion& s) const {
    if (s.is_zero())
        return LaurentBlock(zden1_, zden2_, qden_, trunc_);
    if (sgn(s.lead_exponent()) < 0)
        throw IncompatibleLattices("scalar factor cannot carry negative q powers");
    if (!s.is_exact() && s.trunc_exponent() < trunc_)
        throw IncompatibleLattices("scalar window is narrower than the block");
    if (qden_ % s.denom() != 0)
        throw IncompatibleLattices("scalar lattice does not divide the block lattice");
    LaurentBlock out(zden1_, zden2_, qden_, trunc_);
    for (const auto& [key, c] : terms_) {
        QExpansion prod = (c * s).truncated_to(trunc_);
        if (!prod.is_zero())
            out.terms_[key] = prod;
    }
    long lead = s.rescaled(qden_).lead_index();
    ZWindow running;
    for (long u = 0; u < trunc_index_; ++u) {
        long src = u - lead;
        if (src >= 0)
            running.absorb(window(src));
        out.zbounds_[static_cast<std::size_t>(u)] = running;
    }
    return out;
}

LaurentBlock LaurentBlock::shifted_z(long d1, long d2) const {
    LaurentBlock out(zden1_, zden2_, qden_, trunc_);
    for (const auto& [key, c] : terms_)
        out.terms_[std::make_pair(key.first + d1, key.second + d2)] = c;
    for (long u = 0; u < trunc_index_; ++u) {
        ZWindow w = window(u);
        if (!w.empty) {
            w.e1lo += d1;
            w.e1hi += d1;
            w.e2lo += d2;
            w.e2hi += d2;
        }
        out.zbounds_[static_cast<std::size_t>(u)] = w;
    }
    return out;
}

bool LaurentBlock::same_terms(const LaurentBlock& other) const {
    if (zden1_ != other.zden1_ || zden2_ != other.zden2_ || qden_ != other.qden_ ||
        trunc_ != other.trunc_)
        return false;
    auto check = [](const LaurentBlock& a, const LaurentBlock& b) {
        for (const auto& [key, c] : a.terms_)
            if (!(c == b.coeff(key.first, key.second)))
                return false;
        return true;
    };
    return check(*this, other) && check(other, *this);
}

void LaurentBlock::check_certificate() const {
    for (const auto& [key, c] : terms_) {
        for (const auto& [u, value] : c.raw_coeffs()) {
            if (sgn(value) == 0 || u >= trunc_index_)
                continue;
            if (!window(u).contains(key.first, key.second))
                throw std::logic_error("stored coefficient escapes its certified z window");
        }
    }
}

LaurentBlock make_poly(long zden1, long zden2, long qden, const Rational& trunc_exponent,
                       const std::vector<std::tuple<long, long, Rational, Rational>>& tms) {
    LaurentBlock out(zden1, zden2, qden, trunc_exponent);
    for (const auto& [e1, e2, qe, c] : tms)
        out.add_monomial(e1, e2, qe, c);
    return out;
}

LaurentBlock inv_pochhammer(std::pair<long, long> e, const Rational& b,
                            const Rational& trunc_exponent, long zden1, long zden2, long qden,
                            long extra_terms) {
    if (sgn(b) <= 0)
        throw NonpositiveOffset("reciprocal Pochhammer factor needs a positive q offset");
    LaurentBlock out(zden1, zden2, qden, trunc_exponent);
    long bidx = exponent_index(b, qden, "Pochhammer offset");
    long mmax = (out.trunc_index() - 1) / bidx + extra_terms;

    // geometric inverses (1 - q^j)^{-1} accumulate into 1/(q;q)_m
    QExpansion inv_m = QExpansion::one();
    for (long m = 0; m <= mmax; ++m) {
        if (m > 0) {
            SeriesBuilder g{trunc_exponent};
            for (long t = 0; Rational(t) * m < trunc_exponent; ++t)
                g.add(Rational(t * m), Rational(1));
            inv_m = mul(inv_m, g.build());
        }
        out.add_series(m * e.first, m * e.second, inv_m.shifted(b * m));
    }
    return out;
}

LaurentBlock finite_pochhammer(std::pair<long, long> e, const Rational& b, long count,
                               const Rational& trunc_exponent, long zden1, long zden2,
                               long qden) {
    if (sgn(b) < 0)
        throw NonpositiveOffset("Pochhammer factor needs a nonnegative q offset");
    LaurentBlock acc = make_poly(zden1, zden2, qden, trunc_exponent,
                                 {{0, 0, Rational(0), Rational(1)}});
    for (long j = 0; j < count; ++j) {
        Rational qe = b + j;
        if (qe >= trunc_exponent)
            break; // remaining factors are 1 + O(q^trunc)
        acc = acc.mul(make_poly(zden1, zden2, qden, trunc_exponent,
                                {{0, 0, Rational(0), Rational(1)}, {e.first, e.second, qe, Rational(-1)}}));
    }
    return acc;
}

QExpansion product_ct(const std::vector<LaurentBlock>& factors) {
    if (factors.empty())
        throw MalformedParams("constant term of an empty product");
    LaurentBlock acc = factors.front();
    for (std::size_t i = 1; i < factors.size(); ++i)
        acc = acc.mul(factors[i]);
    return acc.constant_term();
}

namespace {

struct FoldState {
    const LaurentBlock* block;
    const std::vector<std::pair<long, long>>* dirs;
    long min1, min2;
    std::map<std::tuple<std::size_t, long, long>, QExpansion> memo;

    QExpansion eval(std::size_t level, long w1, long w2) {
        if (w1 < min1 || w2 < min2)
            return QExpansion::zero(block->qden(), block->trunc_index());
        if (level == 0)
            return block->coeff(w1, w2);
        auto key = std::make_tuple(level, w1, w2);
        auto it = memo.find(key);
        if (it != memo.end())
            return it->second;
        const auto& d = (*dirs)[level - 1];
        QExpansion r = add(eval(level - 1, w1, w2), eval(level, w1 - d.first, w2 - d.second));
        memo.emplace(key, r);
        return r;
    }
};

} // namespace

QExpansion folded_coeff(const LaurentBlock& B, const std::vector<std::pair<long, long>>& dirs,
                        std::pair<long, long> target) {
    for (const auto& d : dirs)
        if (d.first < 0 || d.second < 0 || (d.first == 0 && d.second == 0))
            throw MalformedParams("fold directions must be nonnegative and nonzero");
    if (B.terms().empty())
        return QExpansion::zero(B.qden(), B.trunc_index());
    long min1 = B.terms().begin()->first.first, min2 = B.terms().begin()->first.second;
    for (const auto& [key, c] : B.terms()) {
        min1 = std::min(min1, key.first);
        min2 = std::min(min2, key.second);
    }
    FoldState st{&B, &dirs, min1, min2, {}};
    return st.eval(dirs.size(), target.first, target.second);
}

namespace {

// product of reciprocal Pochhammer factors (zeta^d q; q)^{-1} over the given
// directions and their negatives, paired to keep intermediate supports small
LaurentBlock root_product_block(const std::vector<std::pair<long, long>>& dirs, long zden2,
                                long N) {
    Rational T{N};
    LaurentBlock acc = inv_pochhammer(dirs[0], Rational(1), T, 1, zden2)
                           .mul(inv_pochhammer({-dirs[0].first, -dirs[0].second}, Rational(1),
                                               T, 1, zden2));
    for (std::size_t i = 1; i < dirs.size(); ++i) {
        LaurentBlock pr = inv_pochhammer(dirs[i], Rational(1), T, 1, zden2)
                              .mul(inv_pochhammer({-dirs[i].first, -dirs[i].second},
                                                  Rational(1), T, 1, zden2));
        acc = acc.mul(pr);
    }
    return acc;
}

} // namespace

std::vector<std::pair<long, long>> a2_fold_dirs() { return {{1, 0}, {0, 1}, {1, 1}}; }
std::vector<std::pair<long, long>> b2_fold_dirs() { return {{1, 0}, {0, 2}, {1, 2}, {2, 2}}; }

QExpansion a2_ct_series(long N) {
    return root_product_block(a2_fold_dirs(), 1, N).constant_term();
}

QExpansion b2_ct_series(long N) {
    return root_product_block(b2_fold_dirs(), 2, N).constant_term();
}

LaurentBlock a2_numerator_block(long N) {
    QExpansion qq6 = pochhammer_qq(N).pow(6);
    return root_product_block(a2_fold_dirs(), 1, N).mul_scalar(qq6).shifted_z(1, 1);
}

LaurentBlock b2_numerator_block(long N) {
    QExpansion qq8 = pochhammer_qq(N).pow(8);
    return root_product_block(b2_fold_dirs(), 2, N).mul_scalar(qq8).shifted_z(2, 3);
}

QExpansion a2_fourier_coefficient(const LaurentBlock& numerator, long r1, long r2) {
    return folded_coeff(numerator, a2_fold_dirs(), {-r1, -r2});
}

QExpansion b2_fourier_coefficient(const LaurentBlock& numerator, long r1, const Rational& r2) {
    Rational doubled = r2 * 2;
    if (!is_integer(doubled) || num_long(doubled) % 2 == 0)
        throw MalformedParams("second Fourier index must be a half integer");
    return folded_coeff(numerator, b2_fold_dirs(), {-r1, -num_long(doubled)});
}

QExpansion coeff_D(std::pair<long, long> r, long N) {
    Rational T{N};
    const auto [r1, r2] = r;
    std::map<std::pair<int, int>, Rational> w1{
        {{1, 0}, Rational(1)}, {{0, 1}, Rational(2)}, {{0, 0}, Rational(-r1)}};
    QExpansion d1 = quadrant_sum(Rational(1), Rational(1), Rational(1), Rational(-r2),
                                 Rational(-r1), Rational(0), w1, std::nullopt, T);
    std::map<std::pair<int, int>, Rational> w2{
        {{1, 0}, Rational(1)}, {{0, 1}, Rational(-2)}, {{0, 0}, Rational(r1 - r2)}};
    QExpansion d2 = quadrant_sum(Rational(1), Rational(-1), Rational(1), Rational(-r2),
                                 Rational(r2 - r1), Rational(0), w2, std::nullopt, T);
    return add(d1, d2);
}

namespace {

// (A n1 + B n2 + C)^2 * s as a monomial weight map
std::map<std::pair<int, int>, Rational> squared_form(const Rational& A, const Rational& B,
                                                     const Rational& C, const Rational& s) {
    std::map<std::pair<int, int>, Rational> w;
    auto put = [&](int p1, int p2, const Rational& v) {
        if (sgn(v) != 0)
            w[{p1, p2}] = v;
    };
    put(2, 0, A * A * s);
    put(0, 2, B * B * s);
    put(0, 0, C * C * s);
    put(1, 1, A * B * s * 2);
    put(1, 0, A * C * s * 2);
    put(0, 1, B * C * s * 2);
    return w;
}

void require_half_integer(const Rational& r2) {
    Rational doubled = r2 * 2;
    if (!is_integer(doubled) || num_long(doubled) % 2 == 0)
        throw MalformedParams("second index must be a half integer");
}

// |2 r2| as a machine integer, used to widen working truncations
long abs_twice(const Rational& r2) {
    Rational doubled = r2 * 2;
    return std::labs(num_long(doubled));
}

} // namespace

QExpansion coeff_C_term(int which, long r1, const Rational& r2, long N) {
    require_half_integer(r2);
    Rational T{N};
    const Rational th{3, 2};
    switch (which) {
    case 1:
        return quadrant_sum(th, Rational(3), Rational(3), -r2, Rational(-r1), Rational(0),
                            squared_form(Rational(3), Rational(6), Rational(-r1), rat(1, 4)),
                            std::make_pair(1L, 0L), T);
    case 2:
        return quadrant_sum(th, Rational(-3), Rational(3), -r2, r2 * 2 - r1, Rational(0),
                            squared_form(Rational(-3), Rational(6), r2 * 2 - r1, rat(1, 4)),
                            std::make_pair(1L, 0L), T);
    case 3:
        return quadrant_sum(th, Rational(0), th, -r2, r2 - r1, Rational(0),
                            squared_form(Rational(0), Rational(3), r2 - r1, rat(-1, 2)),
                            std::make_pair(1L, 1L), T);
    case 4:
    case 5:
    case 6: {
        long pad = 2 + std::labs(r1) + abs_twice(r2);
        Rational Tm = T + pad;
        QExpansion base;
        Rational scale = rat(-1, 8);
        if (which == 4)
            base = quadrant_sum(th, Rational(3), Rational(3), -r2, Rational(-r1), Rational(0),
                                {}, std::make_pair(1L, 0L), Tm);
        else if (which == 5)
            base = quadrant_sum(th, Rational(-3), Rational(3), -r2, r2 * 2 - r1, Rational(0),
                                {}, std::make_pair(1L, 0L), Tm);
        else {
            base = quadrant_sum(th, Rational(0), th, -r2, r2 - r1, Rational(0), {},
                                std::make_pair(1L, 1L), Tm);
            scale = rat(1, 8);
        }
        return mul(base, e2_series(N + pad)).scaled(scale).truncated_to(T);
    }
    default:
        throw MalformedParams("coefficient term index must lie in 1..6");
    }
}

QExpansion coeff_C_torsion(int which, int l1, int l2, long r1, const Rational& r2, long N) {
    require_half_integer(r2);
    if (l1 < 0 || l1 > 1 || l2 < 0 || l2 > 1 || (l1 == 0 && l2 == 0))
        throw MalformedParams("torsion label must be a nonzero element of {0,1}^2");
    Rational T{N};
    Rational Tm = T + 6 + std::labs(r1) + abs_twice(r2);
    const Rational th{3, 2};
    QExpansion quot = eta6_over_torsion_sq(l1, l2, Tm);
    QExpansion sum;
    Rational shift;
    long par;
    if (which == 7) {
        par = l1 + (r1 + 1) * l2;
        shift = rat(l1 * (l1 - r1), 2);
        sum = quadrant_sum(th, Rational(3), Rational(3), rat(3 * l1, 2) - r2,
                           Rational(3 * l1 - r1), Rational(0), {},
                           std::make_pair((l2 + 1L) % 2, 0L), Tm);
    } else if (which == 8) {
        par = l1 + r1 * l2;
        shift = rat(l1 * (l1 - r1), 2) + r2 * l1;
        sum = quadrant_sum(th, Rational(-3), Rational(3), -(rat(3 * l1, 2) + r2),
                           Rational(3 * l1) + r2 * 2 - r1, Rational(0), {},
                           std::make_pair((1L + l2) % 2, 0L), Tm);
    } else {
        throw MalformedParams("torsion term index must be 7 or 8");
    }
    Rational scale = ((par % 2 + 2) % 2 == 0) ? rat(-1, 2) : rat(1, 2);
    return mul(quot, sum).shifted(shift).scaled(scale).truncated_to(T);
}

QExpansion coeff_C(long r1, const Rational& r2, long N) {
    QExpansion total = QExpansion::zero(1, QExpansion::kInfTrunc);
    for (int which = 1; which <= 6; ++which)
        total = add(total, coeff_C_term(which, r1, r2, N));
    for (int l1 = 0; l1 <= 1; ++l1)
        for (int l2 = 0; l2 <= 1; ++l2) {
            if (l1 == 0 && l2 == 0)
                continue;
            total = add(total, coeff_C_torsion(7, l1, l2, r1, r2, N));
            total = add(total, coeff_C_torsion(8, l1, l2, r1, r2, N));
        }
    return total;
}

const std::vector<SignedShift>& character_shift_table(RootSystem which) {
    static const std::vector<SignedShift> a2{
        {1, Rational(0), 1},  {0, Rational(1), 1},  {-1, Rational(-1), 1},
        {-1, Rational(0), -1}, {0, Rational(-1), -1}, {1, Rational(1), -1}};
    static const std::vector<SignedShift> b2{
        {-2, rat(-3, 2), 1}, {-1, rat(1, 2), 1},  {1, rat(-1, 2), 1},  {2, rat(3, 2), 1},
        {-1, rat(-3, 2), -1}, {-2, rat(-1, 2), -1}, {1, rat(3, 2), -1}, {2, rat(1, 2), -1}};
    return which == RootSystem::A2 ? a2 : b2;
}

DecompositionReport verify_decomposition(RootSystem which, long N) {
    DecompositionReport rep;
    Rational T{N};
    if (which == RootSystem::A2) {
        rep.product_route = a2_ct_series(N);
        rep.assembled_route = a2_character_series(N);
        QExpansion s = QExpansion::zero(1, QExpansion::kInfTrunc);
        for (const auto& t : character_shift_table(RootSystem::A2)) {
            QExpansion d = coeff_D({t.r1, num_long(t.r2)}, N + 2);
            s = add(s, t.sign > 0 ? d : -d);
        }
        QExpansion inv6 = pochhammer_qq(N + 2).pow(6).inverted();
        rep.fourier_route = mul(s, inv6).truncated_to(T).normalized();
    } else {
        rep.product_route = b2_ct_series(N);
        rep.assembled_route = b2_character_series(N);
        QExpansion s = QExpansion::zero(1, QExpansion::kInfTrunc);
        for (const auto& t : character_shift_table(RootSystem::B2)) {
            QExpansion c = coeff_C(t.r1, t.r2, N + 2);
            s = add(s, t.sign > 0 ? c : -c);
        }
        QExpansion inv8 = pochhammer_qq(N + 2).pow(8).inverted();
        rep.fourier_route = mul(s, inv8).truncated_to(T).normalized();
    }
    rep.all_equal = rep.product_route == rep.assembled_route &&
                    rep.product_route == rep.fourier_route;
    if (!rep.all_equal) {
        std::optional<Rational> fm;
        auto note = [&](const std::optional<Rational>& m) {
            if (m && (!fm || *m < *fm))
                fm = m;
        };
        note(first_mismatch(rep.product_route, rep.assembled_route));
        note(first_mismatch(rep.product_route, rep.fourier_route));
        note(first_mismatch(rep.assembled_route, rep.fourier_route));
        rep.first_mismatch = fm;
    }
    return rep;
}

QExpansion tk_coefficient(long k, std::pair<long, long> r, const Rational& trunc_exponent) {
    if (k < 1)
        throw MalformedParams("the index k must be a positive integer");
    const auto [r1, r2] = r;
    Rational pre = rat((k + 1) * (2 * r2 + 1), 4);

    // exponent = pre + n1(n1+1)/2 + n1(n2+r1) + (k+1)n2^2 + (k+1)(r2+1)n2;
    // complete the square in the positive definite quadratic part to bound
    // the enumeration rectangle
    double a11 = 1.0, a12 = 1.0, a22 = 2.0 * (k + 1); // matrix of 2Q
    double tr = a11 + a22, det = a11 * a22 - a12 * a12;
    double lambda = 0.5 * (tr - std::sqrt(tr * tr - 4 * det)) / 2.0 * 0.999;
    double L1 = 0.5 + r1, L2 = (k + 1.0) * (r2 + 1.0);
    double c1 = (a22 * L1 - a12 * L2) / det, c2 = (a11 * L2 - a12 * L1) / det;
    double budget = to_double(trunc_exponent - pre) + std::abs(L1 * c1 + L2 * c2) + 4.0;
    if (budget < 1.0)
        budget = 1.0;
    double R = std::sqrt(budget / lambda);
    long R1 = static_cast<long>(R + std::abs(c1)) + 3;
    long R2 = static_cast<long>(R + std::abs(c2)) + 3;

    SeriesBuilder b{trunc_exponent};
    for (long n1 = -R1; n1 <= R1; ++n1) {
        for (long n2 = -R2; n2 <= R2; ++n2) {
            int w = sign_average(n1, n2 + r1) * sign_average(n2 + r2, n2);
            if (w == 0)
                continue;
            if (n1 % 2 != 0)
                w = -w;
            Rational e = pre + rat(n1 * (n1 + 1), 2) + Rational(n1 * (n2 + r1)) +
                         Rational((k + 1) * n2 * n2) + Rational((k + 1) * (r2 + 1) * n2);
            if (e < trunc_exponent)
                b.add(e, Rational(w));
        }
    }
    return b.build();
}

} // namespace ft
