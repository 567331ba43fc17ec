#pragma once

// Period data (Y, W, Z, nu) of the singular differentials, and the genus-one
// construction of singular primitives from the odd theta function
//
//     theta1(u) = exp(pi i tau / 4 + pi i (u + 1/2)) theta(u + 1/2 + tau/2 | tau),
//
// which vanishes on the lattice Z + tau Z, with theta1(u + 1) = -theta1(u) and
// theta1(u + tau) = -exp(-pi i tau - 2 pi i u) theta1(u).

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chart.hpp"
#include "curve_spec.hpp"
#include "p1_kernel.hpp"
#include "theta_core.hpp"

namespace gtheta {

struct PeriodData {
    RiemannMatrix Z;
    CMatrix Y;   // g x M
    CMatrix W;   // g x N
    CMatrix nu;  // g x M

    Eigen::Index genus() const { return Z.genus(); }
    Eigen::Index M() const { return Y.cols(); }
    Eigen::Index N() const { return W.cols(); }
    /// Row i is the B-period vector of the i-th higher-order form (input layout for D_I).
    CMatrix W_rows() const { return W.transpose(); }
};

struct PeriodReport {
    double symmetry_residual = 0.0;
    double lambda_min = 0.0;
    double reciprocity_residual = 0.0;  // max |Y - 2 pi i nu|
};

/// Checks the Riemann-matrix invariants and Y = 2 pi i nu column by column.
inline PeriodReport validate_periods(const PeriodData& pd, double tol = 1e-10) {
    PeriodReport r;
    const CMatrix& Z = pd.Z.matrix();
    r.symmetry_residual = (Z - Z.transpose()).cwiseAbs().maxCoeff();
    if (Z.size() == 0) r.symmetry_residual = 0.0;
    if (r.symmetry_residual > 1e-12) throw ValidationError("Z is not symmetric");
    r.lambda_min = pd.Z.genus() > 0 ? pd.Z.lambda_min() : 0.0;
    if (pd.Z.genus() > 0 && !(r.lambda_min > 0.0)) throw ValidationError("Im Z is not positive definite");
    if (pd.Y.rows() != pd.Z.genus() || pd.nu.rows() != pd.Z.genus() || pd.W.rows() != pd.Z.genus())
        throw ValidationError("period matrices must have genus rows");
    if (pd.Y.cols() != pd.nu.cols()) throw ValidationError("Y and nu must have the same number of columns");
    for (Eigen::Index c = 0; c < pd.Y.cols(); ++c) {
        for (Eigen::Index a = 0; a < pd.Y.rows(); ++a) {
            double res = std::abs(pd.Y(a, c) - kTwoPiI * pd.nu(a, c));
            r.reciprocity_residual = std::max(r.reciprocity_residual, res);
            if (res > tol)
                throw ValidationError("reciprocity Y = 2 pi i nu fails at row " + std::to_string(a) + ", column " +
                                      std::to_string(c) + " (residual " + std::to_string(res) + ")");
        }
    }
    return r;
}

namespace detail {

inline CMatrix parse_cmatrix(const nlohmann::json& j, const std::string& field, Eigen::Index rows_hint = -1) {
    if (!j.is_array()) throw ParseError("field '" + field + "': expected row-major matrix of [re, im]");
    Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    if (rows_hint >= 0 && rows != rows_hint)
        throw ParseError("field '" + field + "': expected " + std::to_string(rows_hint) + " rows");
    Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
    CMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols)
            throw ParseError("field '" + field + "': ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = parse_complex(j[r][c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
    return m;
}

inline nlohmann::json cmatrix_json(const CMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

} // namespace detail

inline PeriodData period_data_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParseError("period data must be an object");
    for (const char* f : {"Z", "Y", "W", "nu"})
        if (!doc.contains(f)) throw ParseError(std::string("field '") + f + "': required");
    CMatrix Z = detail::parse_cmatrix(doc["Z"], "Z");
    PeriodData pd;
    pd.Z = RiemannMatrix(Z);
    pd.Y = detail::parse_cmatrix(doc["Y"], "Y", Z.rows());
    pd.W = detail::parse_cmatrix(doc["W"], "W", Z.rows());
    pd.nu = detail::parse_cmatrix(doc["nu"], "nu", Z.rows());
    validate_periods(pd);
    return pd;
}

inline nlohmann::json period_data_to_json(const PeriodData& pd) {
    return {{"Z", detail::cmatrix_json(pd.Z.matrix())},
            {"Y", detail::cmatrix_json(pd.Y)},
            {"W", detail::cmatrix_json(pd.W)},
            {"nu", detail::cmatrix_json(pd.nu)}};
}

// ---------------------------------------------------------------------------
// Genus one

/// Odd theta function and its derivatives up to `order` at u.
inline std::vector<cplx> theta1_derivatives(cplx u, cplx tau, int order, const TruncationPolicy& pol = {}) {
    RiemannMatrix Z = RiemannMatrix::genus_one(tau);
    CMatrix W_rows = CMatrix::Constant(std::max(order, 1), 1, kTwoPiI);  // D = d/dz
    std::vector<MultiIndexSet> sets;
    for (int k = 0; k <= order; ++k) sets.emplace_back(k == 0 ? 0ULL : (1ULL << k) - 1, order);
    CVector arg(1);
    arg(0) = u + 0.5 + 0.5 * tau;
    auto derivs = theta_D_batch(sets, arg, Z, W_rows, pol);
    const cplx pi_i(0.0, kPi);
    cplx e = std::exp(pi_i * tau / 4.0 + pi_i * (u + 0.5));
    std::vector<cplx> out(order + 1);
    for (int k = 0; k <= order; ++k) {
        cplx acc{};
        double binom = 1.0;
        for (int j = 0; j <= k; ++j) {
            acc += binom * std::pow(pi_i, k - j) * derivs[j].value;
            binom = binom * (k - j) / (j + 1);
        }
        out[k] = e * acc;
    }
    return out;
}

inline cplx theta1(cplx u, cplx tau, const TruncationPolicy& pol = {}) {
    return theta1_derivatives(u, tau, 0, pol)[0];
}

/// L(u) = theta1'(u) / theta1(u) and its derivatives up to `order`.
inline std::vector<cplx> theta1_log_derivatives(cplx u, cplx tau, int order, const TruncationPolicy& pol = {}) {
    auto th = theta1_derivatives(u, tau, order + 1, pol);
    std::vector<cplx> L(order + 1);
    // theta^{(k+1)} = sum_{j=0}^{k} C(k, j) L^{(j)} theta^{(k-j)}
    for (int k = 0; k <= order; ++k) {
        cplx acc = th[k + 1];
        double binom = 1.0;
        for (int j = 0; j < k; ++j) {
            acc -= binom * L[j] * th[k - j];
            binom = binom * (k - j) / (j + 1);
        }
        L[k] = acc / th[0];
    }
    return L;
}

/// Genus-one desingularization: points already reduced to the fundamental domain.
struct TorusCurve {
    CurveSpec curve;
    cplx tau;
    FormTable forms;

    explicit TorusCurve(const CurveSpec& c) : curve(normalize_curve(c)), forms(enumerate_forms(c)) {
        if (c.base_genus != 1 || !c.tau) throw ValidationError("TorusCurve requires base_genus = 1 and tau");
        validate_curve(curve);
        tau = *curve.tau;
    }

    cplx base_point() const { return curve.base_point.value; }
    cplx point(const FormIndex& f, bool reference) const {
        return curve.singular_points[f.i].preimages[reference ? 0 : f.j].value;
    }
    int M() const { return static_cast<int>(forms.pairs.size()); }
    int N() const { return static_cast<int>(forms.higher.size()); }
};

namespace detail {

inline constexpr double kTorusPoleTol = 1e-13;

inline double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

/// Normalization c with c L^{(n-1)}(u) having polar part -(1/n) u^{-n}.
inline double higher_primitive_scale(int n) { return (n % 2 ? -1.0 : 1.0) / factorial(n); }

} // namespace detail

/// exp(xi) of a simple pair (projective) or zeta of a higher-order form (projective) at u.
inline ProjValue torus_primitive_projective(const TorusCurve& tc, const FormIndex& idx, cplx u,
                                            const TruncationPolicy& pol = {}) {
    const cplx p0 = tc.base_point();
    if (idx.is_pair()) {
        cplx pj = tc.point(idx, false), p1 = tc.point(idx, true);
        if (detail::torus_distance(u, pj, tc.tau) < detail::kTorusPoleTol) return {cplx{}, cplx{1.0}};
        if (detail::torus_distance(u, p1, tc.tau) < detail::kTorusPoleTol) return {cplx{1.0}, cplx{}};
        return {theta1(u - pj, tc.tau, pol) * theta1(p0 - p1, tc.tau, pol),
                theta1(u - p1, tc.tau, pol) * theta1(p0 - pj, tc.tau, pol)};
    }
    cplx q = tc.point(idx, false);
    const int n = idx.order;
    if (detail::torus_distance(u, q, tc.tau) < detail::kTorusPoleTol) return {cplx{1.0}, cplx{}};
    double c = detail::higher_primitive_scale(n);
    cplx at_base = c * theta1_log_derivatives(p0 - q, tc.tau, n - 1, pol)[n - 1];
    cplx th = theta1(u - q, tc.tau, pol);
    cplx thn = std::pow(th, n);
    cplx Lu = theta1_log_derivatives(u - q, tc.tau, n - 1, pol)[n - 1];
    return {c * Lu * thn - at_base * thn, thn};
}

/// Primitive value: exp(xi)(u) for simple pairs, zeta(u) for higher-order forms.
inline cplx torus_primitives(const TorusCurve& tc, const FormIndex& idx, cplx u, const TruncationPolicy& pol = {}) {
    ProjValue v = torus_primitive_projective(tc, idx, u, pol);
    if (v.is_infinite() || (idx.is_pair() && v.is_zero()))
        throw PoleError("torus primitive evaluated at a pole; switch to the chart at infinity",
                        v.is_zero() ? idx.preimage_flat : idx.reference_flat);
    return v.value();
}

/// Coefficient of the singular differential (with respect to du) at u.
inline cplx torus_form_value(const TorusCurve& tc, const FormIndex& idx, cplx u, const TruncationPolicy& pol = {}) {
    if (idx.is_pair()) {
        cplx pj = tc.point(idx, false), p1 = tc.point(idx, true);
        if (detail::torus_distance(u, pj, tc.tau) < detail::kTorusPoleTol)
            throw PoleError("form at p_{i,j}", idx.preimage_flat);
        if (detail::torus_distance(u, p1, tc.tau) < detail::kTorusPoleTol)
            throw PoleError("form at p_{i,1}", idx.reference_flat);
        return theta1_log_derivatives(u - pj, tc.tau, 0, pol)[0] - theta1_log_derivatives(u - p1, tc.tau, 0, pol)[0];
    }
    cplx q = tc.point(idx, false);
    if (detail::torus_distance(u, q, tc.tau) < detail::kTorusPoleTol) throw PoleError("form at its pole", idx.preimage_flat);
    const int n = idx.order;
    return detail::higher_primitive_scale(n) * theta1_log_derivatives(u - q, tc.tau, n, pol)[n];
}

/// Abel map of the torus curve at a lift u of a point.
inline AbelPoint abel_map_torus(const TorusCurve& tc, cplx u, std::optional<ChartIndex> chart = std::nullopt,
                                const TruncationPolicy& pol = {}) {
    std::vector<ProjValue> xs, zs;
    ChartIndex minimal;
    for (int k = 0; k < tc.M(); ++k) {
        xs.push_back(torus_primitive_projective(tc, tc.forms.pairs[k], u, pol));
        minimal.set_xi(k, xs.back().is_infinite());
    }
    for (int k = 0; k < tc.N(); ++k) {
        zs.push_back(torus_primitive_projective(tc, tc.forms.higher[k], u, pol));
        minimal.set_zeta(k, zs.back().is_infinite());
    }
    AbelPoint ap;
    ap.chart = chart.value_or(minimal);
    ap.exp_xi.resize(tc.M());
    ap.zeta.resize(tc.N());
    for (int k = 0; k < tc.M(); ++k) detail::place_in_chart(xs[k], ap.chart.xi_inf(k), ap.exp_xi[k], "exp(xi)");
    for (int k = 0; k < tc.N(); ++k) detail::place_in_chart(zs[k], ap.chart.zeta_inf(k), ap.zeta[k], "zeta");
    ap.z = {u - tc.base_point()};
    return ap;
}

/// Period data of a genus-one curve: Z = [tau], nu = p_{i,j} - p_{i,1}, Y = 2 pi i nu,
/// W = 2 pi i for order-one poles and 0 otherwise.
inline PeriodData build_period_data(const TorusCurve& tc) {
    PeriodData pd;
    pd.Z = RiemannMatrix::genus_one(tc.tau);
    pd.nu.resize(1, tc.M());
    pd.Y.resize(1, tc.M());
    pd.W.resize(1, tc.N());
    for (int k = 0; k < tc.M(); ++k) {
        const auto& f = tc.forms.pairs[k];
        pd.nu(0, k) = tc.point(f, false) - tc.point(f, true);
        pd.Y(0, k) = kTwoPiI * pd.nu(0, k);
    }
    for (int k = 0; k < tc.N(); ++k) pd.W(0, k) = tc.forms.higher[k].order == 1 ? kTwoPiI : cplx{};
    return pd;
}

} // namespace gtheta
