#pragma once

// Closed-form singular differentials and their primitives on P^1.
//
//   simple pair (i, j), j >= 2:  ((t - p_{i,j})^{-1} - (t - p_{i,1})^{-1}) dt
//       exp(xi)(p) = (p - p_{i,j})(p0 - p_{i,1}) / ((p - p_{i,1})(p0 - p_{i,j}))
//   higher order (i, j, h):     (t - p_{i,j})^{-1-n} dt,  n = n_{i,j,h}
//       zeta(p) = ((p0 - p_{i,j})^{-n} - (p - p_{i,j})^{-n}) / n
//
// Every value is produced as a projective pair (num, den) so the point at
// infinity and the poles go through the same formula path.

#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "chart.hpp"
#include "curve_spec.hpp"
#include "error.hpp"

namespace gtheta {

struct FormIndex {
    enum class Kind { simple_pair, higher_order };
    Kind kind = Kind::simple_pair;
    int i = 0;      // singular point
    int j = 0;      // preimage (0-based; simple pairs have j >= 1)
    int h = 0;      // higher-order generator (higher_order only)
    int order = 0;  // n_{i,j,h} (higher_order only)
    int flat = 0;   // position among forms of the same kind
    int preimage_flat = 0;   // flat index of p_{i,j} in curve_points()
    int reference_flat = 0;  // flat index of p_{i,1} (simple pairs)

    bool is_pair() const { return kind == Kind::simple_pair; }
};

struct FormTable {
    std::vector<FormIndex> pairs;   // M entries, the exp(xi) coordinates
    std::vector<FormIndex> higher;  // N entries, the zeta coordinates
};

/// All preimage points in document order (singular point major).
inline std::vector<ProjPoint> curve_points(const CurveSpec& curve) {
    std::vector<ProjPoint> pts;
    for (const auto& sp : curve.singular_points)
        for (const auto& p : sp.preimages) pts.push_back(p);
    return pts;
}

inline FormTable enumerate_forms(const CurveSpec& curve) {
    FormTable t;
    int flat_point = 0;
    for (int i = 0; i < static_cast<int>(curve.singular_points.size()); ++i) {
        const auto& sp = curve.singular_points[i];
        int ref = flat_point;
        for (int j = 0; j < static_cast<int>(sp.preimages.size()); ++j, ++flat_point) {
            if (j >= 1) {
                FormIndex f;
                f.kind = FormIndex::Kind::simple_pair;
                f.i = i;
                f.j = j;
                f.flat = static_cast<int>(t.pairs.size());
                f.preimage_flat = flat_point;
                f.reference_flat = ref;
                t.pairs.push_back(f);
            }
            for (int h = 0; h < static_cast<int>(sp.higher_orders[j].size()); ++h) {
                FormIndex f;
                f.kind = FormIndex::Kind::higher_order;
                f.i = i;
                f.j = j;
                f.h = h;
                f.order = sp.higher_orders[j][h];
                f.flat = static_cast<int>(t.higher.size());
                f.preimage_flat = flat_point;
                f.reference_flat = flat_point;
                t.higher.push_back(f);
            }
        }
    }
    return t;
}

/// Value num/den with den == 0 meaning infinity.
struct ProjValue {
    cplx num{1.0};
    cplx den{1.0};

    bool is_infinite() const { return den == cplx{}; }
    bool is_zero() const { return num == cplx{}; }
    cplx value() const { return num / den; }
    cplx reciprocal() const { return den / num; }
};

namespace detail {

inline const ProjPoint& preimage(const CurveSpec& c, const FormIndex& f, bool reference) {
    return c.singular_points[f.i].preimages[reference ? 0 : f.j];
}

inline void require_rational(const CurveSpec& curve) {
    if (curve.base_genus != 0) throw ValidationError("P^1 kernel requires base_genus = 0");
}

} // namespace detail

inline ProjValue exp_xi_projective(const CurveSpec& curve, const FormIndex& idx, const ProjPoint& p) {
    const ProjPoint& pj = detail::preimage(curve, idx, false);
    const ProjPoint& p1 = detail::preimage(curve, idx, true);
    const ProjPoint& p0 = curve.base_point;
    if (p == pj) return {cplx{0.0}, cplx{1.0}};
    if (p == p1) return {cplx{1.0}, cplx{0.0}};
    if (p == p0) return {cplx{1.0}, cplx{1.0}};
    // At most one of p, p0, p_{i,1}, p_{i,j} is infinite here; its two factors cancel.
    cplx num{1.0}, den{1.0};
    if (!p.infinite && !pj.infinite) num *= p.value - pj.value;
    if (!p0.infinite && !p1.infinite) num *= p0.value - p1.value;
    if (!p.infinite && !p1.infinite) den *= p.value - p1.value;
    if (!p0.infinite && !pj.infinite) den *= p0.value - pj.value;
    return {num, den};
}

inline ProjValue zeta_projective(const CurveSpec& curve, const FormIndex& idx, const ProjPoint& p) {
    const ProjPoint& q = detail::preimage(curve, idx, false);
    const ProjPoint& p0 = curve.base_point;
    const double n = idx.order;
    if (p == q) return {cplx{1.0}, cplx{0.0}};
    if (p == p0) return {cplx{0.0}, cplx{1.0}};
    if (q.infinite) {
        // p0 and p are finite: zeta = (p0^n - p^n) / n
        return {std::pow(p0.value, idx.order) - std::pow(p.value, idx.order), cplx{n}};
    }
    cplx c = p0.infinite ? cplx{} : std::pow(p0.value - q.value, -idx.order);
    if (p.infinite) return {c, cplx{n}};
    cplx w = std::pow(p.value - q.value, idx.order);
    return {c * w - 1.0, n * w};
}

/// exp of the integral of the simple-pair form from p0 to p.
inline cplx exp_xi(const CurveSpec& curve, const FormIndex& idx, const ProjPoint& p) {
    detail::require_rational(curve);
    ProjValue v = exp_xi_projective(curve, idx, p);
    if (v.is_infinite() || v.is_zero())
        throw PoleError("exp_xi evaluated at a pole of the form; switch chart",
                        v.is_zero() ? idx.preimage_flat : idx.reference_flat);
    return v.value();
}

inline cplx exp_xi(const CurveSpec& curve, const FormIndex& idx, cplx p) {
    return exp_xi(curve, idx, ProjPoint::finite(p));
}

/// Integral of the higher-order form from p0 to p.
inline cplx zeta(const CurveSpec& curve, const FormIndex& idx, const ProjPoint& p) {
    detail::require_rational(curve);
    ProjValue v = zeta_projective(curve, idx, p);
    if (v.is_infinite())
        throw PoleError("zeta evaluated at its pole; use the chart at infinity", idx.preimage_flat);
    return v.value();
}

inline cplx zeta(const CurveSpec& curve, const FormIndex& idx, cplx p) {
    return zeta(curve, idx, ProjPoint::finite(p));
}

/// Coefficient function of the differential at a finite point t.
inline cplx form_value(const CurveSpec& curve, const FormIndex& idx, cplx t) {
    if (idx.is_pair()) {
        const ProjPoint& pj = detail::preimage(curve, idx, false);
        const ProjPoint& p1 = detail::preimage(curve, idx, true);
        cplx v{};
        if (!pj.infinite) {
            if (t == pj.value) throw PoleError("form_value at p_{i,j}", idx.preimage_flat);
            v += 1.0 / (t - pj.value);
        }
        if (!p1.infinite) {
            if (t == p1.value) throw PoleError("form_value at p_{i,1}", idx.reference_flat);
            v -= 1.0 / (t - p1.value);
        }
        return v;
    }
    const ProjPoint& q = detail::preimage(curve, idx, false);
    if (q.infinite) return -std::pow(t, idx.order - 1);  // w^{-1-n} dw with w = 1/t
    if (t == q.value) throw PoleError("form_value at its pole", idx.preimage_flat);
    return std::pow(t - q.value, -1 - idx.order);
}

namespace detail {

inline void place_in_chart(ProjValue v, bool at_infinity, cplx& out, const char* what) {
    if (at_infinity) {
        if (v.is_zero()) throw ChartError(std::string(what) + " vanishes; it cannot be placed in the chart at infinity");
        out = v.reciprocal();
    } else {
        if (v.is_infinite()) throw ChartError(std::string(what) + " is infinite but the chart uses U0");
        out = v.value();
    }
}

} // namespace detail

/// Abel map into the compactified generalized Jacobian. Without `chart`, only
/// coordinates that are exactly infinite are moved to U1.
inline AbelPoint abel_map_p1(const CurveSpec& curve, const ProjPoint& p,
                             std::optional<ChartIndex> chart = std::nullopt) {
    detail::require_rational(curve);
    FormTable forms = enumerate_forms(curve);
    const int M = static_cast<int>(forms.pairs.size());
    const int N = static_cast<int>(forms.higher.size());
    std::vector<ProjValue> xs, zs;
    ChartIndex minimal;
    for (int k = 0; k < M; ++k) {
        xs.push_back(exp_xi_projective(curve, forms.pairs[k], p));
        minimal.set_xi(k, xs.back().is_infinite());
    }
    for (int k = 0; k < N; ++k) {
        zs.push_back(zeta_projective(curve, forms.higher[k], p));
        minimal.set_zeta(k, zs.back().is_infinite());
    }
    AbelPoint ap;
    ap.chart = chart.value_or(minimal);
    ap.exp_xi.resize(M);
    ap.zeta.resize(N);
    for (int k = 0; k < M; ++k) detail::place_in_chart(xs[k], ap.chart.xi_inf(k), ap.exp_xi[k], "exp(xi)");
    for (int k = 0; k < N; ++k) detail::place_in_chart(zs[k], ap.chart.zeta_inf(k), ap.zeta[k], "zeta");
    return ap;
}

inline AbelPoint abel_map_p1(const CurveSpec& curve, cplx p, std::optional<ChartIndex> chart = std::nullopt) {
    return abel_map_p1(curve, ProjPoint::finite(p), chart);
}

/// Chart that keeps every stored representative of modulus at most one.
inline ChartIndex preferred_chart(const AbelPoint& ap) {
    ChartIndex c;
    for (int k = 0; k < static_cast<int>(ap.exp_xi.size()); ++k)
        c.set_xi(k, std::abs(ap.exp_xi_value(k)) > 1.0);
    for (int k = 0; k < static_cast<int>(ap.zeta.size()); ++k)
        c.set_zeta(k, std::abs(ap.zeta_value(k)) > 1.0);
    return c;
}

} // namespace gtheta
