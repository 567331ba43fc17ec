#pragma once

// Generalized theta functions on the compactified generalized Jacobian.
//
// Rational desingularization: the translated product section
//     prod_j (a_j^{-1} exp(xi_j) - 1) prod_i (zeta_i - b_i)
// General case:
//     theta(exp xi, zeta, z) = sum_{J, I} prod_{j in J} exp(xi_j) zeta^I D_{I^c} theta~(z + sum_{j in J} nu_j)
// translated by (a, b, lambda). In the chart at infinity for a coordinate, the
// section is divided by that coordinate, so every factor stays finite.

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "chart.hpp"
#include "curve_spec.hpp"
#include "p1_kernel.hpp"
#include "periods.hpp"
#include "theta_core.hpp"

namespace gtheta {

struct ShiftParams {
    std::vector<cplx> a;       // M nonzero multipliers
    std::vector<cplx> b;       // N additive shifts
    std::vector<cplx> lambda;  // g~ shift on J(X~)

    static ShiftParams identity(int M, int N, int g) {
        return {std::vector<cplx>(M, cplx{1.0}), std::vector<cplx>(N), std::vector<cplx>(g)};
    }

    void validate(int M, int N, int g) const {
        if (static_cast<int>(a.size()) != M || static_cast<int>(b.size()) != N ||
            static_cast<int>(lambda.size()) != g)
            throw ValidationError("shift dimensions do not match (M, N, g) = (" + std::to_string(M) + ", " +
                                  std::to_string(N) + ", " + std::to_string(g) + ")");
        for (std::size_t k = 0; k < a.size(); ++k)
            if (a[k] == cplx{}) throw ValidationError("shift a[" + std::to_string(k) + "] must be nonzero");
    }
};

inline std::size_t max_general_terms_log2 = 16;  // cap on M + N

namespace detail {

/// Representative of coordinate value x (given as the stored entry `stored`, which is
/// a reciprocal when `stored_inf`) in the target trivialization.
inline cplx convert_rep(cplx stored, bool stored_inf, bool target_inf, const char* what) {
    if (stored_inf == target_inf) return stored;
    if (stored == cplx{}) {
        if (stored_inf) throw ChartError(std::string(what) + " is infinite but the chart uses U0");
        throw ChartError(std::string(what) + " vanishes and has no representative at infinity");
    }
    return 1.0 / stored;
}

inline AbelPoint to_chart(const AbelPoint& ap, const ChartIndex& chart) {
    AbelPoint out = ap;
    out.chart = chart;
    for (std::size_t k = 0; k < ap.exp_xi.size(); ++k)
        out.exp_xi[k] = convert_rep(ap.exp_xi[k], ap.chart.xi_inf(k), chart.xi_inf(k), "exp(xi)");
    for (std::size_t k = 0; k < ap.zeta.size(); ++k)
        out.zeta[k] = convert_rep(ap.zeta[k], ap.chart.zeta_inf(k), chart.zeta_inf(k), "zeta");
    return out;
}

} // namespace detail

/// Factor of the translated product section for one exp(xi) coordinate.
inline cplx xi_factor(cplx rep, bool at_infinity, cplx a) {
    return at_infinity ? 1.0 / a - rep : rep / a - 1.0;
}

/// Factor of the translated product section for one zeta coordinate.
inline cplx zeta_factor(cplx rep, bool at_infinity, cplx b) { return at_infinity ? 1.0 - b * rep : rep - b; }

inline ThetaValue gen_theta_rational(const CurveSpec& curve, const AbelPoint& ap, const ShiftParams& shift,
                                     const ChartIndex& chart) {
    if (curve.base_genus != 0) throw ValidationError("gen_theta_rational requires base_genus = 0");
    const int M = static_cast<int>(ap.exp_xi.size());
    const int N = static_cast<int>(ap.zeta.size());
    shift.validate(M, N, 0);
    AbelPoint c = detail::to_chart(ap, chart);
    cplx v{1.0};
    for (int k = 0; k < M; ++k) v *= xi_factor(c.exp_xi[k], chart.xi_inf(k), shift.a[k]);
    for (int k = 0; k < N; ++k) v *= zeta_factor(c.zeta[k], chart.zeta_inf(k), shift.b[k]);
    return {v, chart};
}

/// Re-expresses a section value at `ap` in another chart.
inline ThetaValue change_chart(const ThetaValue& tv, const AbelPoint& ap, const ChartIndex& target) {
    cplx v = tv.value;
    for (std::size_t k = 0; k < ap.exp_xi.size(); ++k) {
        bool from = tv.chart.xi_inf(k), to = target.xi_inf(k);
        if (from == to) continue;
        // coordinate value x: moving to U1 divides by x, moving back multiplies
        cplx x_inv = detail::convert_rep(ap.exp_xi[k], ap.chart.xi_inf(k), true, "exp(xi)");
        v *= to ? x_inv : 1.0 / x_inv;
    }
    for (std::size_t k = 0; k < ap.zeta.size(); ++k) {
        bool from = tv.chart.zeta_inf(k), to = target.zeta_inf(k);
        if (from == to) continue;
        cplx x_inv = detail::convert_rep(ap.zeta[k], ap.chart.zeta_inf(k), true, "zeta");
        v *= to ? x_inv : 1.0 / x_inv;
    }
    return {v, target};
}

namespace detail {

inline CVector to_cvector(const std::vector<cplx>& v) {
    CVector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) out(static_cast<Eigen::Index>(k)) = v[k];
    return out;
}

} // namespace detail

/// Translated general theta. `exp_xi` and `zeta` hold chart representatives:
/// entries flagged in `chart` are exp(-xi_j) and 1/zeta_i.
inline ThetaValue gen_theta_general(const std::vector<cplx>& exp_xi, const std::vector<cplx>& zeta, const CVector& z,
                                    const PeriodData& pd, const ShiftParams& shift, const ChartIndex& chart,
                                    const TruncationPolicy& pol = {}) {
    const int M = static_cast<int>(exp_xi.size());
    const int N = static_cast<int>(zeta.size());
    const int g = static_cast<int>(pd.genus());
    if (M != pd.M() || N != pd.N()) throw ValidationError("period data does not match the coordinate counts");
    if (static_cast<std::size_t>(M + N) > max_general_terms_log2)
        throw SizeError("2^(M+N) terms exceed the configured cap (M + N <= " +
                        std::to_string(max_general_terms_log2) + ")");
    shift.validate(M, N, g);

    // Weights of coordinate k when it is in / out of the subset.
    std::vector<cplx> xin(M), xout(M), zin(N), zout(N);
    for (int j = 0; j < M; ++j) {
        if (chart.xi_inf(j)) {
            xin[j] = 1.0 / shift.a[j];
            xout[j] = exp_xi[j];
        } else {
            xin[j] = exp_xi[j] / shift.a[j];
            xout[j] = 1.0;
        }
    }
    for (int i = 0; i < N; ++i) {
        if (chart.zeta_inf(i)) {
            zin[i] = 1.0 - shift.b[i] * zeta[i];
            zout[i] = zeta[i];
        } else {
            zin[i] = zeta[i] - shift.b[i];
            zout[i] = 1.0;
        }
    }

    const std::uint64_t nI = 1ULL << N;
    std::vector<MultiIndexSet> complements;
    std::vector<cplx> iweight(nI);
    for (std::uint64_t I = 0; I < nI; ++I) {
        complements.emplace_back(~I & (nI - 1), N);
        cplx w{1.0};
        for (int i = 0; i < N; ++i) w *= ((I >> i) & 1U) ? zin[i] : zout[i];
        iweight[I] = w;
    }

    const CMatrix W_rows = pd.W_rows();
    CVector arg = z - detail::to_cvector(shift.lambda);
    cplx total{};
    // Gray-code walk over J: consecutive subsets differ by one nu_j.
    std::uint64_t J = 0;
    const std::uint64_t nJ = 1ULL << M;
    for (std::uint64_t step = 0; step < nJ; ++step) {
        if (step > 0) {
            std::uint64_t gray = step ^ (step >> 1);
            std::uint64_t flipped = gray ^ J;
            int j = std::countr_zero(flipped);
            if (gray & flipped) arg += pd.nu.col(j);
            else arg -= pd.nu.col(j);
            J = gray;
        }
        cplx jw{1.0};
        for (int j = 0; j < M; ++j) jw *= ((J >> j) & 1U) ? xin[j] : xout[j];
        auto derivs = theta_D_batch(complements, arg, pd.Z, W_rows, pol);
        cplx inner{};
        for (std::uint64_t I = 0; I < nI; ++I) inner += iweight[I] * derivs[I].value;
        total += jw * inner;
    }
    return {total, chart};
}

inline ThetaValue gen_theta_general(const AbelPoint& ap, const PeriodData& pd, const ShiftParams& shift,
                                    const ChartIndex& chart, const TruncationPolicy& pol = {}) {
    AbelPoint c = detail::to_chart(ap, chart);
    return gen_theta_general(c.exp_xi, c.zeta, detail::to_cvector(c.z), pd, shift, chart, pol);
}

/// Clebsch node theta a^{-1} exp(xi) theta~(z - lambda + nu) + theta~(z - lambda).
inline cplx gen_theta_node(cplx xi, const CVector& z, const PeriodData& pd, const ShiftParams& shift,
                           const TruncationPolicy& pol = {}) {
    if (pd.M() != 1 || pd.N() != 0) throw ValidationError("node theta requires M = 1, N = 0");
    shift.validate(1, 0, static_cast<int>(pd.genus()));
    CVector arg = z - detail::to_cvector(shift.lambda);
    CVector shifted = arg + pd.nu.col(0);
    return std::exp(xi) / shift.a[0] * riemann_theta(shifted, pd.Z, pol) + riemann_theta(arg, pd.Z, pol);
}

/// Cusp theta D theta~(z - lambda) + theta~(z - lambda)(zeta - b).
inline cplx gen_theta_cusp(cplx zeta, const CVector& z, const PeriodData& pd, const ShiftParams& shift,
                           const TruncationPolicy& pol = {}) {
    if (pd.M() != 0 || pd.N() != 1) throw ValidationError("cusp theta requires M = 0, N = 1");
    shift.validate(0, 1, static_cast<int>(pd.genus()));
    CVector arg = z - detail::to_cvector(shift.lambda);
    auto v = theta_D_batch({MultiIndexSet(1, 1), MultiIndexSet(0, 1)}, arg, pd.Z, pd.W_rows(), pol);
    return v[0].value + v[1].value * (zeta - shift.b[0]);
}

// ---------------------------------------------------------------------------
// Quasi-periodicity residuals

/// F_I(z + Z_alpha) against the expansion over J in I^c, with F_I = D_{I^c} theta~.
inline double check_lemma3(const MultiIndexSet& I, int alpha, const CVector& z, const RiemannMatrix& Z,
                           const CMatrix& W_rows, const TruncationPolicy& pol = {}) {
    MultiIndexSet Ic = I.complement();
    cplx lhs = theta_D(Ic, z + Z.matrix().col(alpha), Z, W_rows, pol);
    cplx rhs{};
    for (const auto& J : Ic.subsets()) {
        MultiIndexSet rest = Ic.relative_complement(J);
        double sign = rest.size() % 2 ? -1.0 : 1.0;
        rhs += sign * w_product(rest, W_rows, alpha) * theta_D(J, z, Z, W_rows, pol);
    }
    rhs *= periodicity_factor(z, Z, alpha);
    return relative_residual(lhs, rhs);
}

/// theta(exp(xi + Y_alpha), zeta + W_alpha, z + Z_alpha) = theta(exp xi, zeta, z) R_alpha(z - lambda), U0 chart.
inline double check_general_quasiperiodicity(const std::vector<cplx>& exp_xi, const std::vector<cplx>& zeta,
                                             const CVector& z, const PeriodData& pd, const ShiftParams& shift,
                                             int alpha, const TruncationPolicy& pol = {}) {
    ChartIndex u0;
    std::vector<cplx> ex2 = exp_xi, ze2 = zeta;
    for (std::size_t j = 0; j < ex2.size(); ++j) ex2[j] *= std::exp(pd.Y(alpha, static_cast<Eigen::Index>(j)));
    for (std::size_t i = 0; i < ze2.size(); ++i) ze2[i] += pd.W(alpha, static_cast<Eigen::Index>(i));
    cplx lhs = gen_theta_general(ex2, ze2, z + pd.Z.matrix().col(alpha), pd, shift, u0, pol).value;
    cplx base = gen_theta_general(exp_xi, zeta, z, pd, shift, u0, pol).value;
    cplx rhs = base * periodicity_factor(z - detail::to_cvector(shift.lambda), pd.Z, alpha);
    return relative_residual(lhs, rhs);
}

inline double check_node_bshift(cplx xi, const CVector& z, const PeriodData& pd, const ShiftParams& shift, int alpha,
                                const TruncationPolicy& pol = {}) {
    cplx lhs = gen_theta_node(xi + pd.Y(alpha, 0), z + pd.Z.matrix().col(alpha), pd, shift, pol);
    cplx rhs = gen_theta_node(xi, z, pd, shift, pol) *
               std::exp(-kTwoPiI * (z(alpha) - shift.lambda[alpha]) - cplx(0.0, kPi) * pd.Z(alpha, alpha));
    return relative_residual(lhs, rhs);
}

inline double check_cusp_bshift(cplx zeta, const CVector& z, const PeriodData& pd, const ShiftParams& shift, int alpha,
                                const TruncationPolicy& pol = {}) {
    cplx lhs = gen_theta_cusp(zeta + pd.W(alpha, 0), z + pd.Z.matrix().col(alpha), pd, shift, pol);
    cplx rhs = gen_theta_cusp(zeta, z, pd, shift, pol) *
               std::exp(-kTwoPiI * (z(alpha) - shift.lambda[alpha]) - cplx(0.0, kPi) * pd.Z(alpha, alpha));
    return relative_residual(lhs, rhs);
}

} // namespace gtheta
