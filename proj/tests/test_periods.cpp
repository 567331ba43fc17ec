#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace gtheta;
using gtheta::testing::load_curve;
using gtheta::testing::load_periods;
using gtheta::testing::path_integral;
using gtheta::testing::segment_integral;

namespace {

const cplx kTau(0.2, 1.1);

// -2 sum_{n >= 0} (-1)^n q^{(n+1/2)^2} sin((2n+1) pi u), q = exp(pi i tau)
cplx theta1_series(cplx u, cplx tau) {
    cplx acc{};
    for (int n = 0; n < 40; ++n) {
        double e = (n + 0.5) * (n + 0.5);
        acc += (n % 2 ? -1.0 : 1.0) * std::exp(cplx(0, kPi) * tau * e) * std::sin((2.0 * n + 1.0) * kPi * u);
    }
    return -2.0 * acc;
}

cplx cauchy_nth(const std::function<cplx(cplx)>& f, cplx c, int n, double r = 0.05, int nodes = 64) {
    cplx acc{};
    for (int k = 0; k < nodes; ++k) {
        cplx e = std::polar(1.0, 2.0 * kPi * (k + 0.5) / nodes);
        acc += f(c + r * e) / std::pow(r * e, n);
    }
    return acc * detail::factorial(n) / static_cast<double>(nodes);
}

cplx circle_residue(const std::function<cplx(cplx)>& f, cplx c, double r, int n = 400) {
    cplx acc{};
    for (int k = 0; k < n; ++k) {
        cplx e = std::polar(1.0, 2.0 * kPi * k / n);
        acc += f(c + r * e) * r * e;
    }
    return acc / static_cast<double>(n);
}

cplx wrap_2pi_i(cplx v) { return {v.real(), detail::wrap_angle(v.imag())}; }

} // namespace

TEST(PeriodFile, GenusTwoLoads) {
    PeriodData pd = load_periods("genus2_periods.json");
    EXPECT_EQ(pd.genus(), 2);
    EXPECT_EQ(pd.M(), 1);
    EXPECT_EQ(pd.N(), 1);
    PeriodReport r = validate_periods(pd);
    EXPECT_LT(r.reciprocity_residual, 1e-14);
    EXPECT_GT(r.lambda_min, 0.0);
    PeriodData back = period_data_from_json(period_data_to_json(pd));
    EXPECT_EQ(back.Y, pd.Y);
}

TEST(PeriodFile, ReciprocityViolationReported) {
    auto doc = nlohmann::json::parse(gtheta::testing::read_fixture("genus2_periods.json"));
    doc["Y"][1][0][0] = 0.5;
    try {
        period_data_from_json(doc);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("row 1, column 0"), std::string::npos) << e.what();
    }
}

TEST(Theta1, SeriesAndSymmetries) {
    for (cplx u : {cplx(0.13, 0.21), cplx(-0.4, 0.6), cplx(0.77, -0.35)}) {
        cplx v = theta1(u, kTau);
        EXPECT_LT(std::abs(v - theta1_series(u, kTau)), 1e-12 * std::max(1.0, std::abs(v)));
        EXPECT_LT(std::abs(theta1(-u, kTau) + v), 1e-13);
        EXPECT_LT(std::abs(theta1(u + 1.0, kTau) + v), 1e-12);
        cplx f = -std::exp(-cplx(0, kPi) * kTau - kTwoPiI * u);
        EXPECT_LT(std::abs(theta1(u + kTau, kTau) - f * v), 1e-11 * std::abs(f * v));
    }
    EXPECT_LT(std::abs(theta1(0.0, kTau)), 1e-15);
}

TEST(Theta1, DerivativesAndLogDerivatives) {
    cplx u(0.31, 0.27);
    auto d = theta1_derivatives(u, kTau, 3);
    auto th = [&](cplx x) { return theta1(x, kTau); };
    for (int k = 1; k <= 3; ++k) EXPECT_LT(std::abs(d[k] - cauchy_nth(th, u, k)), 1e-10 * std::abs(d[k]) + 1e-10);
    auto L = theta1_log_derivatives(u, kTau, 2);
    EXPECT_LT(std::abs(L[0] - d[1] / d[0]), 1e-13 * std::abs(L[0]));
    auto Lf = [&](cplx x) { return theta1_log_derivatives(x, kTau, 0)[0]; };
    EXPECT_LT(std::abs(L[1] - cauchy_nth(Lf, u, 1)), 1e-10 * std::abs(L[1]));
    EXPECT_LT(std::abs(L[2] - cauchy_nth(Lf, u, 2)), 1e-9 * std::abs(L[2]));
}

TEST(TorusForms, Residues) {
    TorusCurve node(load_curve("torus_node.json"));
    const auto& f = node.forms.pairs[0];
    auto w = [&](cplx u) { return torus_form_value(node, f, u); };
    EXPECT_LT(std::abs(circle_residue(w, node.point(f, false), 0.05) - 1.0), 1e-12);
    EXPECT_LT(std::abs(circle_residue(w, node.point(f, true), 0.05) + 1.0), 1e-12);

    auto c = parse_curve_spec(R"({"base_genus":1,"tau":[0.2,1.1],"base_point":[0.1,0.1],
        "singular_points":[{"preimages":[[0.5,0.5]],"higher_orders":[[1,2]]}]})");
    TorusCurve cusp(c);
    for (const auto& h : cusp.forms.higher) {
        cplx q = cusp.point(h, false);
        auto wf = [&](cplx u) { return torus_form_value(cusp, h, u); };
        auto wn = [&](cplx u) { return std::pow(u - q, h.order) * torus_form_value(cusp, h, u); };
        EXPECT_LT(std::abs(circle_residue(wf, q, 0.05)), 1e-11) << h.order;
        EXPECT_LT(std::abs(circle_residue(wn, q, 0.05) - 1.0), 1e-11) << h.order;
    }
}

TEST(TorusPrimitives, PathIntegralsFromBase) {
    auto c = parse_curve_spec(R"({"base_genus":1,"tau":[0.2,1.1],"base_point":[0.1,0.1],
        "singular_points":[{"preimages":[[0.5,0.5],[0.8,0.2]],"higher_orders":[[1,2],[]]}]})");
    TorusCurve tc(c);
    cplx p0 = tc.base_point();
    for (cplx u : {cplx(0.35, 0.9), cplx(0.9, 0.7)}) {
        std::vector<cplx> path{p0, cplx(0.3, 0.05), u};
        for (const auto& h : tc.forms.higher) {
            cplx integral = path_integral([&](cplx x) { return torus_form_value(tc, h, x); }, path);
            EXPECT_LT(std::abs(integral - torus_primitives(tc, h, u)), 1e-10) << h.order;
        }
        const auto& f = tc.forms.pairs[0];
        cplx integral = path_integral([&](cplx x) { return torus_form_value(tc, f, x); }, path);
        cplx E = torus_primitives(tc, f, u);
        EXPECT_LT(std::abs(std::exp(integral) - E), 1e-10 * std::abs(E));
    }
}

TEST(TorusPrimitives, QuasiPeriodicity) {
    TorusCurve tc(load_curve("torus_node.json"));
    PeriodData pd = build_period_data(tc);
    const auto& f = tc.forms.pairs[0];
    cplx u(0.41, 0.12);
    cplx E = torus_primitives(tc, f, u);
    EXPECT_LT(std::abs(torus_primitives(tc, f, u + 1.0) - E), 1e-12 * std::abs(E));
    EXPECT_LT(std::abs(torus_primitives(tc, f, u + tc.tau) - E * std::exp(pd.Y(0, 0))), 1e-11 * std::abs(E));

    TorusCurve cusp(load_curve("torus_cusp.json"));
    PeriodData pc = build_period_data(cusp);
    const auto& h = cusp.forms.higher[0];
    cplx z = torus_primitives(cusp, h, u);
    EXPECT_LT(std::abs(torus_primitives(cusp, h, u + 1.0) - z), 1e-11);
    EXPECT_LT(std::abs(torus_primitives(cusp, h, u + cusp.tau) - z - pc.W(0, 0)), 1e-11);
}

TEST(TorusPeriods, ReciprocityExactByConstruction) {
    TorusCurve tc(load_curve("torus_node.json"));
    PeriodData pd = build_period_data(tc);
    EXPECT_EQ(validate_periods(pd).reciprocity_residual, 0.0);
    EXPECT_EQ(pd.Y(0, 0), kTwoPiI * pd.nu(0, 0));
}

TEST(TorusPeriods, IntegratedBPeriods) {
    auto c = parse_curve_spec(R"({"base_genus":1,"tau":[0.2,1.1],"base_point":[0.1,0.1],
        "singular_points":[{"preimages":[[0.5,0.5],[0.8,0.2]],"higher_orders":[[1,2],[]]}]})");
    TorusCurve tc(c);
    PeriodData pd = build_period_data(tc);
    cplx start(0.05, 0.02);  // the segment start -> start + tau misses every pole
    for (int k = 0; k < tc.M(); ++k) {
        const auto& f = tc.forms.pairs[k];
        cplx b = segment_integral([&](cplx x) { return torus_form_value(tc, f, x); }, start, start + tc.tau, 128);
        cplx a = segment_integral([&](cplx x) { return torus_form_value(tc, f, x); }, start, start + 1.0, 128);
        EXPECT_LT(std::abs(wrap_2pi_i(b - pd.Y(0, k))), 1e-8);
        EXPECT_LT(std::abs(wrap_2pi_i(a)), 1e-8);
    }
    for (int k = 0; k < tc.N(); ++k) {
        const auto& h = tc.forms.higher[k];
        cplx b = segment_integral([&](cplx x) { return torus_form_value(tc, h, x); }, start, start + tc.tau, 128);
        cplx a = segment_integral([&](cplx x) { return torus_form_value(tc, h, x); }, start, start + 1.0, 128);
        EXPECT_LT(std::abs(b - pd.W(0, k)), 1e-8) << h.order;
        EXPECT_LT(std::abs(a), 1e-8) << h.order;
    }
    EXPECT_EQ(pd.W(0, 1), cplx{});
}

TEST(TorusAbelMap, ChartsAndPoles) {
    TorusCurve tc(load_curve("torus_node.json"));
    const auto& f = tc.forms.pairs[0];
    AbelPoint at_ref = abel_map_torus(tc, tc.point(f, true));
    EXPECT_TRUE(at_ref.chart.xi_inf(0));
    EXPECT_EQ(at_ref.exp_xi[0], cplx{});
    EXPECT_THROW(abel_map_torus(tc, tc.point(f, true), ChartIndex{}), ChartError);
    EXPECT_THROW(torus_primitives(tc, f, tc.point(f, true)), PoleError);
    AbelPoint base = abel_map_torus(tc, tc.base_point());
    EXPECT_LT(std::abs(base.exp_xi[0] - 1.0), 1e-14);
    EXPECT_EQ(base.z[0], cplx{});
}
