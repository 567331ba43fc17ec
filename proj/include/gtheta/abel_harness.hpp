#pragma once

// Zeros of translated pulled-back theta sections, the residue shift functionals
// M/N/P/Q, and the generalized Abel theorem check: the Abel-map sum over the
// zeros minus the shift functionals must not depend on the shift.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chart.hpp"
#include "contour.hpp"
#include "curve_spec.hpp"
#include "gen_theta.hpp"
#include "p1_kernel.hpp"
#include "periods.hpp"
#include "polyroots.hpp"
#include "theta_core.hpp"

namespace gtheta {

struct Zero {
    ProjPoint point;  // on P^1, or a lift u in the fundamental parallelogram on the torus
    int multiplicity = 1;
};

struct ZeroSet {
    std::vector<Zero> zeros;
    int total_count = 0;      // sum of multiplicities
    int expected_count = 0;   // section_degree
    int smooth_analogy_count = 0;  // g_arith, the count a smooth curve of that genus would give
};

struct ShiftFunctionals {
    // Summand tables, rows indexed by the shift coordinate, columns by the Abel slot.
    CMatrix M;  // a_{k} -> xi slot
    CMatrix N;  // b_{k} -> xi slot
    CMatrix P;  // a_{k} -> zeta slot
    CMatrix Q;  // b_{k} -> zeta slot
    std::vector<cplx> delta_xi;    // delta(f_{i,j})
    std::vector<cplx> delta_zeta;  // delta(f_{i,j,h})
    std::vector<cplx> lambda_part;
};

struct RiemannConstant {
    std::vector<cplx> kappa;  // xi slots (additive, mod 2 pi i), zeta slots, z slots
};

struct ContourParams {
    int nodes = 256;
    double radius_fraction = 0.25;
    int max_shrink = 6;
};

namespace detail {

inline double wrap_angle(double x) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    x = std::fmod(x + std::numbers::pi, two_pi);
    if (x < 0) x += two_pi;
    return x - std::numbers::pi;
}

inline cplx wrap_log(cplx v) { return {v.real(), wrap_angle(v.imag())}; }

/// Log along a circle: Log(G(center)) continued through Log(G(t) / G(center)).
/// Returns false when G / G(center) leaves the right half-plane (winding risk).
inline bool continuous_log_ok(const ComplexFunction& G, cplx center_value, cplx center, double radius, int nodes) {
    for (int k = 0; k < 2 * nodes; ++k) {
        double theta = 2.0 * std::numbers::pi * (k + 0.5) / (2 * nodes);
        cplx ratio = G(center + std::polar(radius, theta)) / center_value;
        if (!(ratio.real() > 0.0)) return false;
    }
    return true;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Rational desingularization

/// Translated pulled-back section on P^1 as explicit data.
class RationalSection {
public:
    RationalSection(const CurveSpec& curve, const ShiftParams& shift)
        : curve_(curve), forms_(enumerate_forms(curve)), shift_(shift), points_(curve_points(curve)) {
        if (curve.base_genus != 0) throw ValidationError("rational section requires base_genus = 0");
        shift.validate(M(), N(), 0);
    }

    int M() const { return static_cast<int>(forms_.pairs.size()); }
    int N() const { return static_cast<int>(forms_.higher.size()); }
    const FormTable& forms() const { return forms_; }
    const CurveSpec& curve() const { return curve_; }
    const std::vector<ProjPoint>& points() const { return points_; }
    const ShiftParams& shift() const { return shift_; }

    ProjValue coordinate(int k, const ProjPoint& p) const {
        return k < M() ? exp_xi_projective(curve_, forms_.pairs[k], p)
                       : zeta_projective(curve_, forms_.higher[k - M()], p);
    }
    const FormIndex& form(int k) const { return k < M() ? forms_.pairs[k] : forms_.higher[k - M()]; }

    /// Factor of coordinate k at p, in U1 when `at_infinity`.
    cplx factor(int k, const ProjPoint& p, bool at_infinity) const {
        ProjValue v = coordinate(k, p);
        if (k < M()) {
            cplx rep = at_infinity ? v.reciprocal() : v.value();
            return xi_factor(rep, at_infinity, shift_.a[k]);
        }
        cplx rep = at_infinity ? v.reciprocal() : v.value();
        return zeta_factor(rep, at_infinity, shift_.b[k - M()]);
    }

    /// Numerator polynomial of the factor of coordinate k in the U0 chart.
    Poly factor_polynomial(int k) const {
        const FormIndex& f = form(k);
        const ProjPoint& p0 = curve_.base_point;
        const auto& sp = curve_.singular_points[f.i];
        if (k < M()) {
            const ProjPoint& pj = sp.preimages[f.j];
            const ProjPoint& p1 = sp.preimages[0];
            Poly num{1.0}, den{1.0};
            if (!pj.infinite) num = poly_multiply(num, {-pj.value, 1.0});
            if (!p0.infinite && !p1.infinite) num = poly_multiply(num, {p0.value - p1.value});
            if (!p1.infinite) den = poly_multiply(den, {-p1.value, 1.0});
            if (!p0.infinite && !pj.infinite) den = poly_multiply(den, {p0.value - pj.value});
            std::size_t len = std::max(num.size(), den.size());
            Poly out(len);
            for (std::size_t c = 0; c < num.size(); ++c) out[c] += num[c] / shift_.a[k];
            for (std::size_t c = 0; c < den.size(); ++c) out[c] -= den[c];
            return out;
        }
        const ProjPoint& q = sp.preimages[f.j];
        const int n = f.order;
        const cplx b = shift_.b[k - M()];
        Poly out(n + 1);
        if (q.infinite) {
            // p0^n - z^n - b n
            out[0] = std::pow(p0.value, n) - b * static_cast<double>(n);
            out[n] = -1.0;
            return out;
        }
        cplx c = p0.infinite ? cplx{} : std::pow(p0.value - q.value, -n);
        // (c - b n)(z - q)^n - 1
        cplx lead = c - b * static_cast<double>(n);
        double binom = 1.0;
        for (int e = 0; e <= n; ++e) {
            out[e] = lead * binom * std::pow(-q.value, n - e);
            binom = binom * (n - e) / (e + 1);
        }
        out[0] -= 1.0;
        return out;
    }

    Poly numerator_polynomial() const {
        Poly p{1.0};
        for (int k = 0; k < M() + N(); ++k) p = poly_multiply(p, factor_polynomial(k));
        return p;
    }

    /// d log of the U0 section at a finite t.
    cplx dlog(cplx t) const {
        cplx acc{};
        ProjPoint pt = ProjPoint::finite(t);
        for (int k = 0; k < M(); ++k) {
            ProjValue e = coordinate(k, pt);
            cplx w = form_value(curve_, forms_.pairs[k], t);
            // (E/a) w / (E/a - 1), written to stay finite where E = infinity
            acc += w * e.num / (e.num - shift_.a[k] * e.den);
        }
        for (int k = 0; k < N(); ++k) {
            ProjValue z = coordinate(M() + k, pt);
            cplx w = form_value(curve_, forms_.higher[k], t);
            acc += w * z.den / (z.num - shift_.b[k] * z.den);
        }
        return acc;
    }

    bool coordinate_infinite_at(int k, const ProjPoint& p) const { return coordinate(k, p).is_infinite(); }

private:
    CurveSpec curve_;
    FormTable forms_;
    ShiftParams shift_;
    std::vector<ProjPoint> points_;
};

namespace detail {

inline double projective_distance_scale(const ProjPoint& p, const std::vector<ProjPoint>& others) {
    // distance to the nearest other point, in the chart centred at p (w = 1/t at infinity)
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : others) {
        if (o == p) continue;
        if (p.infinite) {
            if (o.infinite) continue;
            if (o.value != cplx{}) best = std::min(best, 1.0 / std::abs(o.value));
        } else if (!o.infinite) {
            best = std::min(best, std::abs(o.value - p.value));
        }
    }
    if (!std::isfinite(best)) best = 1.0;
    return best;
}

inline bool near_point(const ProjPoint& a, const ProjPoint& b, double tol) {
    if (a.infinite || b.infinite) return a.infinite && b.infinite;
    return std::abs(a.value - b.value) < tol * (1.0 + std::abs(b.value));
}

} // namespace detail

inline ZeroSet find_zeros_rational(const CurveSpec& curve, const ShiftParams& shift, double cluster_tol = 1e-8) {
    RationalSection sec(curve, shift);
    GenusReport gr = genus_accounting(curve);
    Poly poly = sec.numerator_polynomial();
    PolyRoots pr = find_polynomial_roots(poly);
    ZeroSet zs;
    zs.expected_count = gr.section_degree;
    zs.smooth_analogy_count = gr.g_arith;
    for (const auto& c : cluster_roots(pr.roots, cluster_tol))
        zs.zeros.push_back({ProjPoint::finite(c.point), c.multiplicity});
    if (pr.at_infinity > 0) zs.zeros.push_back({ProjPoint::at_infinity(), pr.at_infinity});

    std::vector<ProjPoint> forbidden = sec.points();
    forbidden.push_back(curve.base_point);
    for (const auto& z : zs.zeros)
        for (const auto& p : forbidden)
            if (detail::near_point(z.point, p, 1e-8))
                throw DegenerateShiftError("a zero of the translated section collides with " +
                                           std::string(p == curve.base_point ? "the base point " : "the preimage ") +
                                           detail::point_str(p));
    for (const auto& z : zs.zeros) zs.total_count += z.multiplicity;
    return zs;
}

/// Res_p(log G omega) by trapezoid quadrature, with the log continued from G(p).
inline cplx log_residue(const ComplexFunction& G, cplx G_center, const ComplexFunction& omega, const ProjPoint& p,
                        double radius, const ContourParams& cp) {
    if (G_center == cplx{}) throw DegenerateShiftError("log argument vanishes at a preimage");
    cplx log_center = std::log(G_center);
    for (int attempt = 0; attempt <= cp.max_shrink; ++attempt, radius *= 0.5) {
        auto integrand = [&](cplx t) { return (log_center + std::log(G(t) / G_center)) * omega(t); };
        try {
            if (p.infinite) {
                auto Gw = [&](cplx w) { return G(1.0 / w); };
                if (!detail::continuous_log_ok(Gw, G_center, {}, radius, cp.nodes)) continue;
                return contour_residue_at_infinity(integrand, radius, cp.nodes);
            }
            if (!detail::continuous_log_ok(G, G_center, p.value, radius, cp.nodes)) continue;
            return contour_residue(integrand, p.value, radius, cp.nodes);
        } catch (const AccuracyError&) {
            // a zero of G just outside the circle; retry closer in
        }
    }
    throw DegenerateShiftError("log branch winds around zero on every contour radius tried");
}

namespace detail {

/// Poles of the form with index k (0..M+N-1): simple-pair forms have two.
inline std::vector<ProjPoint> form_poles(const CurveSpec& curve, const FormIndex& f) {
    const auto& sp = curve.singular_points[f.i];
    if (f.is_pair()) return {sp.preimages[f.j], sp.preimages[0]};
    return {sp.preimages[f.j]};
}

} // namespace detail

inline ShiftFunctionals shift_functionals_rational(const CurveSpec& curve, const ShiftParams& shift,
                                                   const ContourParams& cp = {}) {
    RationalSection sec(curve, shift);
    const int M = sec.M(), N = sec.N();
    ShiftFunctionals sf;
    sf.M = CMatrix::Zero(M, M);
    sf.N = CMatrix::Zero(N, M);
    sf.P = CMatrix::Zero(M, N);
    sf.Q = CMatrix::Zero(N, N);
    sf.delta_xi.assign(M, cplx{});
    sf.delta_zeta.assign(N, cplx{});

    for (int slot = 0; slot < M + N; ++slot) {
        const FormIndex& f = sec.form(slot);
        auto omega = [&](cplx t) { return form_value(curve, f, t); };
        for (const ProjPoint& p : detail::form_poles(curve, f)) {
            double radius = cp.radius_fraction * detail::projective_distance_scale(p, sec.points());
            for (int k = 0; k < M + N; ++k) {
                bool inf = sec.coordinate_infinite_at(k, p);
                auto G = [&](cplx t) { return sec.factor(k, ProjPoint::finite(t), inf); };
                cplx Gc = sec.factor(k, p, inf);
                cplx r = log_residue(G, Gc, omega, p, radius, cp);
                if (slot < M && k < M) sf.M(k, slot) += r;
                else if (slot < M) sf.N(k - M, slot) += r;
                else if (k < M) sf.P(k, slot - M) += r;
                else sf.Q(k - M, slot - M) += r;
            }
        }
    }
    for (int l = 0; l < M; ++l) sf.delta_xi[l] = sf.M.col(l).sum() + sf.N.col(l).sum();
    for (int l = 0; l < N; ++l) sf.delta_zeta[l] = sf.P.col(l).sum() + sf.Q.col(l).sum();
    return sf;
}

/// Sum over all C (preimage) and D (zero) contours of zeta_l dlog f for every zeta slot,
/// plus the argument-principle total of dlog f. Every entry vanishes when the zero set
/// and the residue bookkeeping agree.
inline std::vector<cplx> contour_sum_check(const CurveSpec& curve, const ShiftParams& shift, const ZeroSet& zs,
                                           const ContourParams& cp = {}) {
    RationalSection sec(curve, shift);
    std::vector<ProjPoint> centers = sec.points();
    for (const auto& z : zs.zeros) centers.push_back(z.point);

    auto residue_at = [&](const ProjPoint& p, const ComplexFunction& phi) {
        double radius = cp.radius_fraction * detail::projective_distance_scale(p, centers);
        if (p.infinite) return contour_residue_at_infinity(phi, radius, cp.nodes);
        return contour_residue(phi, p.value, radius, cp.nodes);
    };
    std::vector<cplx> sums;
    for (int l = 0; l < sec.N(); ++l) {
        auto phi = [&](cplx t) {
            return sec.coordinate(sec.M() + l, ProjPoint::finite(t)).value() * sec.dlog(t);
        };
        cplx s{};
        for (const auto& p : centers) s += residue_at(p, phi);
        sums.push_back(s);
    }
    auto dl = [&](cplx t) { return sec.dlog(t); };
    cplx total{};
    bool infinity_seen = false;
    for (const auto& p : centers) {
        total += residue_at(p, dl);
        infinity_seen = infinity_seen || p.infinite;
    }
    if (!infinity_seen) total += residue_at(ProjPoint::at_infinity(), dl);
    sums.push_back(total);
    return sums;
}

// ---------------------------------------------------------------------------
// Genus one

/// Translated pulled-back section on the torus and its entire local representative
///     h(u) = s_chart(u) prod_{k in U1} num_k(u) prod_{k in U0} den_k(u).
class TorusSection {
public:
    TorusSection(const TorusCurve& tc, const PeriodData& pd, const ShiftParams& shift, TruncationPolicy pol = {})
        : tc_(tc), pd_(pd), shift_(shift), pol_(pol) {
        shift.validate(tc.M(), tc.N(), 1);
    }

    const TorusCurve& curve() const { return tc_; }
    const PeriodData& periods() const { return pd_; }
    const ShiftParams& shift() const { return shift_; }
    int M() const { return tc_.M(); }
    int N() const { return tc_.N(); }

    std::vector<ProjValue> coordinates(cplx u) const {
        std::vector<ProjValue> out;
        for (const auto& f : tc_.forms.pairs) out.push_back(torus_primitive_projective(tc_, f, u, pol_));
        for (const auto& f : tc_.forms.higher) out.push_back(torus_primitive_projective(tc_, f, u, pol_));
        return out;
    }

    /// Section value in `chart` at u (coordinates given projectively).
    cplx section(cplx u, const std::vector<ProjValue>& coords, const ChartIndex& chart) const {
        std::vector<cplx> ex(M()), ze(N());
        for (int k = 0; k < M(); ++k)
            ex[k] = chart.xi_inf(k) ? coords[k].reciprocal() : coords[k].value();
        for (int k = 0; k < N(); ++k)
            ze[k] = chart.zeta_inf(k) ? coords[M() + k].reciprocal() : coords[M() + k].value();
        CVector z(1);
        z(0) = u - tc_.base_point();
        return gen_theta_general(ex, ze, z, pd_, shift_, chart, pol_).value;
    }

    static ChartIndex chart_for(const std::vector<ProjValue>& coords, int M) {
        ChartIndex c;
        for (int k = 0; k < static_cast<int>(coords.size()); ++k) {
            bool inf = std::abs(coords[k].num) > std::abs(coords[k].den);
            if (k < M) c.set_xi(k, inf);
            else c.set_zeta(k - M, inf);
        }
        return c;
    }

    cplx representative(cplx u) const {
        auto coords = coordinates(u);
        ChartIndex chart = chart_for(coords, M());
        cplx v = section(u, coords, chart);
        for (int k = 0; k < static_cast<int>(coords.size()); ++k) {
            bool inf = k < M() ? chart.xi_inf(k) : chart.zeta_inf(k - M());
            v *= inf ? coords[k].num : coords[k].den;
        }
        return v;
    }

    /// Section in the chart natural at u: coordinates infinite at u go to U1.
    cplx section_in_local_chart(cplx u, const ChartIndex& chart) const { return section(u, coordinates(u), chart); }

    const TruncationPolicy& policy() const { return pol_; }

private:
    const TorusCurve& tc_;
    const PeriodData& pd_;
    ShiftParams shift_;
    TruncationPolicy pol_;
};

struct ArgumentPrincipleParams {
    int grid = 16;
    int max_retries = 5;
    double min_cell = 1e-7;  // in fundamental-domain coordinates
};

namespace detail {

class WindingCounter {
public:
    WindingCounter(const TorusSection& sec, cplx origin, cplx tau) : sec_(sec), origin_(origin), tau_(tau) {}

    cplx map(double s, double t) const { return origin_ + s + t * tau_; }

    /// Phase change of h along the segment (s0, t0) -> (s1, t1), adaptively sampled.
    double phase_change(double s0, double t0, double s1, double t1, cplx h0, cplx h1, int depth = 0) const {
        cplx ratio = h1 / h0;
        double d = std::arg(ratio);
        double len = std::max(std::abs(s1 - s0), std::abs(t1 - t0));
        bool smooth = std::abs(d) < std::numbers::pi / 6 && std::abs(std::log(std::abs(ratio))) < 1.0;
        if ((smooth && len <= 1.0 / 32) || depth > 24) {
            if (depth > 24) suspicious_ = true;
            return d;
        }
        double sm = 0.5 * (s0 + s1), tm = 0.5 * (t0 + t1);
        cplx hm = value(sm, tm);
        return phase_change(s0, t0, sm, tm, h0, hm, depth + 1) + phase_change(sm, tm, s1, t1, hm, h1, depth + 1);
    }

    cplx value(double s, double t) const {
        cplx v = sec_.representative(map(s, t));
        if (!(std::abs(v) > 1e-280) || !std::isfinite(std::abs(v))) suspicious_ = true;
        return v;
    }

    /// Winding number of h around the cell [s0, s1] x [t0, t1]; NaN when unreliable.
    double winding(double s0, double s1, double t0, double t1) const {
        suspicious_ = false;
        cplx a = value(s0, t0), b = value(s1, t0), c = value(s1, t1), d = value(s0, t1);
        double total = phase_change(s0, t0, s1, t0, a, b) + phase_change(s1, t0, s1, t1, b, c) +
                       phase_change(s1, t1, s0, t1, c, d) + phase_change(s0, t1, s0, t0, d, a);
        double w = total / (2.0 * std::numbers::pi);
        if (suspicious_ || std::abs(w - std::round(w)) > 0.05) return std::nan("");
        return std::round(w);
    }

private:
    const TorusSection& sec_;
    cplx origin_;
    cplx tau_;
    mutable bool suspicious_ = false;
};

struct Cell {
    double s0, s1, t0, t1;
    int winding;
};

} // namespace detail

/// Zeros of the pulled-back section on the fundamental parallelogram, by the
/// argument principle on a grid, quadtree refinement and Newton polishing.
inline ZeroSet find_zeros_torus(const TorusCurve& tc, const PeriodData& pd, const ShiftParams& shift,
                                const ArgumentPrincipleParams& ap = {}, const TruncationPolicy& pol = {}) {
    TorusSection sec(tc, pd, shift, pol);
    GenusReport gr = genus_accounting(tc.curve);
    const cplx tau = tc.tau;
    std::mt19937_64 jitter_rng(0x5eed);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);

    for (int attempt = 0; attempt <= ap.max_retries; ++attempt) {
        cplx origin = attempt == 0 ? cplx{-0.0173, 0.0} - 0.0131 * tau
                                   : cplx{jitter(jitter_rng), 0.0} + jitter(jitter_rng) * tau;
        detail::WindingCounter wc(sec, origin, tau);
        double total = wc.winding(0.0, 1.0, 0.0, 1.0);
        if (std::isnan(total)) continue;

        bool failed = false;
        std::vector<detail::Cell> pending;
        double h = 1.0 / ap.grid;
        int found = 0;
        for (int a = 0; a < ap.grid && !failed; ++a)
            for (int b = 0; b < ap.grid && !failed; ++b) {
                double w = wc.winding(a * h, (a + 1) * h, b * h, (b + 1) * h);
                if (std::isnan(w) || w < 0) failed = true;
                else if (w > 0) {
                    pending.push_back({a * h, (a + 1) * h, b * h, (b + 1) * h, static_cast<int>(w)});
                    found += static_cast<int>(w);
                }
            }
        if (failed || found != static_cast<int>(total)) continue;

        ZeroSet zs;
        zs.expected_count = gr.section_degree;
        zs.smooth_analogy_count = gr.g_arith;
        while (!pending.empty() && !failed) {
            detail::Cell c = pending.back();
            pending.pop_back();
            double size = std::max(c.s1 - c.s0, c.t1 - c.t0);
            if (c.winding == 1) {
                // Newton on h from the cell centre; accept when it stays inside the cell.
                cplx u = wc.map(0.5 * (c.s0 + c.s1), 0.5 * (c.t0 + c.t1));
                bool ok = false;
                for (int it = 0; it < 60; ++it) {
                    double du = 1e-6 * std::max(size, 1e-4);
                    cplx hv = sec.representative(u);
                    cplx d = (sec.representative(u + du) - sec.representative(u - du)) / (2.0 * du);
                    if (d == cplx{}) break;
                    cplx step = hv / d;
                    u -= step;
                    if (std::abs(step) < 1e-14 * (1.0 + std::abs(u))) {
                        ok = true;
                        break;
                    }
                }
                // back to (s, t) coordinates of the cell
                double t = (u - origin).imag() / tau.imag();
                double s = (u - origin - t * tau).real();
                double pad = 1e-9;
                if (ok && s >= c.s0 - pad && s <= c.s1 + pad && t >= c.t0 - pad && t <= c.t1 + pad) {
                    zs.zeros.push_back({ProjPoint::finite(u), 1});
                    continue;
                }
            }
            if (size < ap.min_cell) {
                cplx u = wc.map(0.5 * (c.s0 + c.s1), 0.5 * (c.t0 + c.t1));
                zs.zeros.push_back({ProjPoint::finite(u), c.winding});
                continue;
            }
            double sm = 0.5 * (c.s0 + c.s1), tm = 0.5 * (c.t0 + c.t1);
            detail::Cell kids[4] = {{c.s0, sm, c.t0, tm, 0}, {sm, c.s1, c.t0, tm, 0},
                                    {c.s0, sm, tm, c.t1, 0}, {sm, c.s1, tm, c.t1, 0}};
            int sum = 0;
            for (auto& k : kids) {
                double w = wc.winding(k.s0, k.s1, k.t0, k.t1);
                if (std::isnan(w) || w < 0) {
                    failed = true;
                    break;
                }
                k.winding = static_cast<int>(w);
                sum += k.winding;
            }
            if (failed || sum != c.winding) {
                failed = true;
                break;
            }
            for (const auto& k : kids)
                if (k.winding > 0) pending.push_back(k);
        }
        if (failed) continue;
        for (const auto& z : zs.zeros) zs.total_count += z.multiplicity;
        std::sort(zs.zeros.begin(), zs.zeros.end(), [](const Zero& x, const Zero& y) {
            return x.point.value.real() < y.point.value.real() ||
                   (x.point.value.real() == y.point.value.real() && x.point.value.imag() < y.point.value.imag());
        });
        for (const auto& z : zs.zeros)
            for (const auto& p : curve_points(tc.curve))
                if (detail::torus_distance(z.point.value, p.value, tau) < 1e-8)
                    throw DegenerateShiftError("a zero of the translated section collides with a preimage");
        return zs;
    }
    throw GeometryError("argument-principle zero count failed after grid jitter retries");
}

inline ShiftFunctionals shift_functionals_torus(const TorusCurve& tc, const PeriodData& pd, const ShiftParams& shift,
                                                const ContourParams& cp = {}, const TruncationPolicy& pol = {}) {
    TorusSection sec(tc, pd, shift, pol);
    const int M = tc.M(), N = tc.N();
    ShiftFunctionals sf;
    sf.delta_xi.assign(M, cplx{});
    sf.delta_zeta.assign(N, cplx{});
    sf.lambda_part = shift.lambda;
    std::vector<ProjPoint> pts = curve_points(tc.curve);

    auto slot_residue = [&](const FormIndex& f) {
        cplx total{};
        std::vector<cplx> poles;
        poles.push_back(tc.point(f, false));
        if (f.is_pair()) poles.push_back(tc.point(f, true));
        for (cplx p : poles) {
            double dist = std::numeric_limits<double>::infinity();
            for (const auto& o : pts) {
                double d = detail::torus_distance(o.value, p, tc.tau);
                if (d > 1e-12) dist = std::min(dist, d);
            }
            dist = std::min(dist, 0.5 * std::min(1.0, tc.tau.imag()));
            double radius = cp.radius_fraction * dist;
            // chart at p: coordinates infinite at p are trivialized at infinity
            auto coords_p = sec.coordinates(p);
            ChartIndex chart;
            for (int k = 0; k < M + N; ++k) {
                bool inf = coords_p[k].is_infinite();
                if (k < M) chart.set_xi(k, inf);
                else chart.set_zeta(k - M, inf);
            }
            auto G = [&](cplx u) { return sec.section(u, sec.coordinates(u), chart); };
            auto omega = [&](cplx u) { return torus_form_value(tc, f, u, pol); };
            total += log_residue(G, G(p), omega, ProjPoint::finite(p), radius, cp);
        }
        return total;
    };
    for (int k = 0; k < M; ++k) sf.delta_xi[k] = slot_residue(tc.forms.pairs[k]);
    for (int k = 0; k < N; ++k) sf.delta_zeta[k] = slot_residue(tc.forms.higher[k]);
    return sf;
}

// ---------------------------------------------------------------------------
// Theorem check

struct ShiftVerification {
    ShiftParams shift;
    ZeroSet zeros;
    ShiftFunctionals functionals;
    std::vector<cplx> abel_sum;       // xi slots as sums of principal logs, then zeta, then z
    std::vector<cplx> exp_xi_product; // products of exp(xi) over the zeros
    std::vector<cplx> D;              // abel_sum - functionals
    std::vector<cplx> D_explicit;     // torus node/cusp: closed-form correction subtracted
    std::vector<cplx> contour_sums;   // rational: C + D contour totals
    double deviation = 0.0;           // from the first shift, modulo the period lattice
    double deviation_explicit = 0.0;
};

struct VerificationReport {
    std::vector<ShiftVerification> shifts;
    RiemannConstant kappa;
    double max_deviation = 0.0;
    double max_deviation_explicit = 0.0;
    double max_contour_sum = 0.0;
    int M = 0, N = 0, g = 0;
    int expected_zero_count = 0;
    int smooth_analogy_zero_count = 0;
    bool counts_ok = true;
};

namespace detail {

/// Distance between two D vectors modulo 2 pi i in xi slots and the period lattice.
inline double lattice_deviation(const std::vector<cplx>& D, const std::vector<cplx>& ref, int M, int N, int g,
                                const PeriodData* pd) {
    std::vector<cplx> diff(D.size());
    for (std::size_t k = 0; k < D.size(); ++k) diff[k] = D[k] - ref[k];
    if (g == 1 && pd) {
        cplx tau = pd->Z(0, 0);
        cplx& dz = diff[M + N];
        double kt = std::round(dz.imag() / tau.imag());
        for (int j = 0; j < M; ++j) diff[j] -= kt * pd->Y(0, j);
        for (int i = 0; i < N; ++i) diff[M + i] -= kt * pd->W(0, i);
        dz -= kt * tau;
        dz -= std::round(dz.real());
    }
    double worst = 0.0;
    for (int k = 0; k < static_cast<int>(diff.size()); ++k) {
        cplx v = k < M ? wrap_log(diff[k]) : diff[k];
        worst = std::max(worst, std::abs(v));
    }
    return worst;
}

} // namespace detail

/// Node correction log(a theta~(z(p2) - lambda) / theta~(z(p1) + nu - lambda)).
inline cplx node_correction(const TorusCurve& tc, const PeriodData& pd, const ShiftParams& shift,
                            const TruncationPolicy& pol = {}) {
    const auto& f = tc.forms.pairs.at(0);
    CVector z2(1), z1(1);
    z2(0) = tc.point(f, false) - tc.base_point() - shift.lambda[0];
    z1(0) = tc.point(f, true) - tc.base_point() + pd.nu(0, 0) - shift.lambda[0];
    return std::log(shift.a[0]) + std::log(riemann_theta(z2, pd.Z, pol)) - std::log(riemann_theta(z1, pd.Z, pol));
}

/// Cusp correction C(lambda) = (-d/dp theta~(z(q) - lambda) + D theta~(z(q) - lambda)) / theta~(z(q) - lambda).
inline cplx cusp_correction(const TorusCurve& tc, const PeriodData& pd, const ShiftParams& shift,
                            const TruncationPolicy& pol = {}) {
    const auto& f = tc.forms.higher.at(0);
    CVector zq(1);
    zq(0) = tc.point(f, false) - tc.base_point() - shift.lambda[0];
    CMatrix rows(2, 1);
    rows(0, 0) = kTwoPiI;       // d/dz: the derivative along the curve, du = dz
    rows(1, 0) = pd.W(0, 0);    // D
    auto v = theta_D_batch({MultiIndexSet(0, 2), MultiIndexSet(1, 2), MultiIndexSet(2, 2)}, zq, pd.Z, rows, pol);
    return (-v[1].value + v[2].value) / v[0].value;
}

inline ShiftVerification verify_single_shift(const CurveSpec& curve, const PeriodData* pd, const ShiftParams& shift,
                                             const ContourParams& cp = {}, const ArgumentPrincipleParams& app = {},
                                             const TruncationPolicy& pol = {}) {
    ShiftVerification sv;
    sv.shift = shift;
    GenusReport gr = genus_accounting(curve);
    const int M = gr.M, N = gr.N, g = gr.g_tilde;
    sv.abel_sum.assign(M + N + g, cplx{});
    sv.exp_xi_product.assign(M, cplx{1.0});

    if (g == 0) {
        sv.zeros = find_zeros_rational(curve, shift);
        sv.functionals = shift_functionals_rational(curve, shift, cp);
        RationalSection sec(curve, shift);
        for (const auto& z : sv.zeros.zeros) {
            for (int k = 0; k < M + N; ++k) {
                cplx v = sec.coordinate(k, z.point).value();
                if (k < M) {
                    sv.abel_sum[k] += static_cast<double>(z.multiplicity) * std::log(v);
                    sv.exp_xi_product[k] *= std::pow(v, z.multiplicity);
                } else {
                    sv.abel_sum[k] += static_cast<double>(z.multiplicity) * v;
                }
            }
        }
        sv.contour_sums = contour_sum_check(curve, shift, sv.zeros, cp);
    } else if (g == 1) {
        if (!pd) throw ValidationError("genus-one verification needs period data");
        TorusCurve tc(curve);
        sv.zeros = find_zeros_torus(tc, *pd, shift, app, pol);
        sv.functionals = shift_functionals_torus(tc, *pd, shift, cp, pol);
        for (const auto& z : sv.zeros.zeros) {
            cplx u = z.point.value;
            AbelPoint ab = abel_map_torus(tc, u, std::nullopt, pol);
            double m = z.multiplicity;
            for (int k = 0; k < M; ++k) {
                sv.abel_sum[k] += m * std::log(ab.exp_xi[k]);
                sv.exp_xi_product[k] *= std::pow(ab.exp_xi[k], z.multiplicity);
            }
            for (int k = 0; k < N; ++k) sv.abel_sum[M + k] += m * ab.zeta[k];
            sv.abel_sum[M + N] += m * ab.z[0];
        }
    } else {
        throw ValidationError("zero finding is only available for base_genus 0 or 1");
    }

    sv.D = sv.abel_sum;
    for (int k = 0; k < M; ++k) sv.D[k] = detail::wrap_log(sv.D[k] - sv.functionals.delta_xi[k]);
    for (int k = 0; k < N; ++k) sv.D[M + k] -= sv.functionals.delta_zeta[k];
    for (int k = 0; k < g; ++k) sv.D[M + N + k] -= shift.lambda[k];

    if (g == 1) {
        TorusCurve tc(curve);
        sv.D_explicit = sv.abel_sum;
        if (M == 1 && N == 0) sv.D_explicit[0] = detail::wrap_log(sv.D_explicit[0] - node_correction(tc, *pd, shift, pol));
        if (M == 0 && N == 1) sv.D_explicit[0] -= shift.b[0] + cusp_correction(tc, *pd, shift, pol);
        sv.D_explicit[M + N] -= shift.lambda[0];
    }
    return sv;
}

inline VerificationReport verify_abel_theorem(const CurveSpec& curve, const PeriodData* pd,
                                              const std::vector<ShiftParams>& shifts, const ContourParams& cp = {},
                                              const ArgumentPrincipleParams& app = {},
                                              const TruncationPolicy& pol = {}) {
    if (shifts.size() < 2) throw ValidationError("verification needs at least two shifts");
    VerificationReport rep;
    GenusReport gr = genus_accounting(curve);
    rep.M = gr.M;
    rep.N = gr.N;
    rep.g = gr.g_tilde;
    rep.expected_zero_count = gr.section_degree;
    rep.smooth_analogy_zero_count = gr.g_arith;
    for (const auto& s : shifts) rep.shifts.push_back(verify_single_shift(curve, pd, s, cp, app, pol));
    rep.kappa.kappa = rep.shifts.front().D;
    const auto& ref = rep.shifts.front();
    for (auto& sv : rep.shifts) {
        sv.deviation = detail::lattice_deviation(sv.D, ref.D, rep.M, rep.N, rep.g, pd);
        rep.max_deviation = std::max(rep.max_deviation, sv.deviation);
        if (!sv.D_explicit.empty()) {
            sv.deviation_explicit = detail::lattice_deviation(sv.D_explicit, ref.D_explicit, rep.M, rep.N, rep.g, pd);
            rep.max_deviation_explicit = std::max(rep.max_deviation_explicit, sv.deviation_explicit);
        }
        for (const auto& c : sv.contour_sums) rep.max_contour_sum = std::max(rep.max_contour_sum, std::abs(c));
        if (sv.zeros.total_count != sv.zeros.expected_count) rep.counts_ok = false;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Seeded shifts

/// log a uniform in the unit disk, b uniform in the unit disk, lambda uniform in the disk of radius 0.3.
inline std::vector<ShiftParams> random_shifts(int M, int N, int g, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto disk = [&](double radius) {
        double r = radius * std::sqrt(unit(rng));
        double th = 2.0 * std::numbers::pi * unit(rng);
        return std::polar(r, th);
    };
    std::vector<ShiftParams> out;
    for (int c = 0; c < count; ++c) {
        ShiftParams s;
        for (int k = 0; k < M; ++k) s.a.push_back(std::exp(disk(1.0)));
        for (int k = 0; k < N; ++k) s.b.push_back(disk(1.0));
        for (int k = 0; k < g; ++k) s.lambda.push_back(disk(0.3));
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace gtheta
