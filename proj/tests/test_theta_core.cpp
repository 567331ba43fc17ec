#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace gtheta;

namespace {

RiemannMatrix genus2() {
    CMatrix Z(2, 2);
    Z << cplx(0.1, 1.2), cplx(0.2, 0.15), cplx(0.2, 0.15), cplx(-0.15, 0.9);
    return RiemannMatrix(Z);
}

RiemannMatrix genus3() {
    CMatrix Z(3, 3);
    Z << cplx(0.3, 1.5), cplx(0.1, 0.2), cplx(-0.2, 0.1),
         cplx(0.1, 0.2), cplx(-0.1, 1.1), cplx(0.05, -0.1),
         cplx(-0.2, 0.1), cplx(0.05, -0.1), cplx(0.4, 1.3);
    return RiemannMatrix(Z);
}

// Plain box sum with no argument reduction.
cplx brute_theta(const CVector& z, const CMatrix& Z, int R) {
    const int g = static_cast<int>(z.size());
    std::vector<int> n(g, -R);
    cplx acc{};
    while (true) {
        CVector nd(g);
        for (int a = 0; a < g; ++a) nd(a) = static_cast<double>(n[a]);
        acc += std::exp(cplx(0, kPi) * (nd.transpose() * Z * nd)(0, 0) + kTwoPiI * (nd.transpose() * z)(0, 0));
        int a = 0;
        while (a < g && n[a] == R) n[a++] = -R;
        if (a == g) break;
        ++n[a];
    }
    return acc;
}

// Jacobi triple product for theta(z | tau).
cplx triple_product(cplx z, cplx tau) {
    cplx q = std::exp(cplx(0, kPi) * tau);
    cplx w = std::exp(kTwoPiI * z);
    cplx acc{1.0};
    for (int m = 1; m < 200; ++m) {
        cplx q2m = std::pow(q, 2 * m), q2m1 = std::pow(q, 2 * m - 1);
        acc *= (1.0 - q2m) * (1.0 + q2m1 * w) * (1.0 + q2m1 / w);
    }
    return acc;
}

// d/dt at t = 0 by Cauchy's formula on a circle: spectrally accurate.
cplx cauchy_derivative(const std::function<cplx(cplx)>& f, double r = 0.05, int n = 48) {
    cplx acc{};
    for (int k = 0; k < n; ++k) {
        cplx e = std::polar(1.0, 2.0 * kPi * (k + 0.5) / n);
        acc += f(r * e) / (r * e);
    }
    return acc / static_cast<double>(n);
}

CVector vec(std::initializer_list<cplx> xs) {
    CVector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (cplx x : xs) v(i++) = x;
    return v;
}

} // namespace

TEST(RiemannMatrix, RejectsInvalid) {
    CMatrix asym(2, 2);
    asym << cplx(0, 1), cplx(0.1, 0), cplx(0.2, 0), cplx(0, 1);
    EXPECT_THROW(RiemannMatrix{asym}, ValidationError);
    CMatrix indef(2, 2);
    indef << cplx(0, 1), cplx(0, 2), cplx(0, 2), cplx(0, 1);
    EXPECT_THROW(RiemannMatrix{indef}, ValidationError);
}

TEST(MultiIndexSetOps, Basics) {
    auto I = MultiIndexSet::from({0, 2, 3}, 5);
    EXPECT_EQ(I.size(), 3);
    EXPECT_EQ(I.complement(), MultiIndexSet::from({1, 4}, 5));
    EXPECT_EQ(I.subsets().size(), 8u);
    EXPECT_EQ(I.relative_complement(MultiIndexSet::from({2}, 5)), MultiIndexSet::from({0, 3}, 5));
    EXPECT_TRUE(I.includes(MultiIndexSet::from({0, 3}, 5)));
    EXPECT_FALSE(I.includes(MultiIndexSet::from({1}, 5)));
}

TEST(RiemannTheta, GenusOneTripleProduct) {
    for (cplx tau : {cplx(0.2, 1.1), cplx(-0.4, 0.7), cplx(0.0, 2.5)})
        for (cplx z : {cplx(0.13, 0.07), cplx(-0.4, 0.9), cplx(2.7, -1.6)}) {
            cplx ref = triple_product(z, tau);
            cplx v = riemann_theta(vec({z}), RiemannMatrix::genus_one(tau));
            EXPECT_LT(std::abs(v - ref), 1e-11 * std::max(1.0, std::abs(ref))) << tau << " " << z;
        }
}

TEST(RiemannTheta, BruteForceGenusTwoAndThree) {
    auto Z2 = genus2();
    auto Z3 = genus3();
    for (auto z : {vec({cplx(0.1, 0.2), cplx(-0.3, 0.05)}), vec({cplx(0.45, -0.3), cplx(0.2, 0.4)})})
        EXPECT_LT(relative_residual(riemann_theta(z, Z2), brute_theta(z, Z2.matrix(), 12)), 1e-13);
    auto z3 = vec({cplx(0.1, 0.1), cplx(-0.2, 0.15), cplx(0.3, -0.05)});
    EXPECT_LT(relative_residual(riemann_theta(z3, Z3), brute_theta(z3, Z3.matrix(), 9)), 1e-13);
}

TEST(RiemannTheta, Periodicity) {
    auto Z = genus2();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto z = vec({cplx(u(rng), u(rng)), cplx(u(rng), u(rng))});
        cplx base = riemann_theta(z, Z);
        for (int a = 0; a < 2; ++a) {
            CVector za = z;
            za(a) += 1.0;
            EXPECT_LT(relative_residual(riemann_theta(za, Z), base), 1e-12);
            CVector zb = z + Z.matrix().col(a);
            EXPECT_LT(relative_residual(riemann_theta(zb, Z), base * periodicity_factor(z, Z, a)), 1e-12);
        }
    }
}

TEST(RiemannTheta, LargeImaginaryArgument) {
    // far from the fundamental cell: reduction must keep the quasi-periodicity exact
    auto Z = RiemannMatrix::genus_one(cplx(0.2, 1.1));
    cplx z(0.3, 0.2);
    cplx far = z + 5.0 * cplx(0.2, 1.1) + 3.0;
    cplx factor{1.0};
    for (int k = 0; k < 5; ++k) factor *= periodicity_factor(vec({z + static_cast<double>(k) * cplx(0.2, 1.1)}), Z, 0);
    EXPECT_LT(relative_residual(riemann_theta(vec({far}), Z), riemann_theta(vec({z}), Z) * factor), 1e-11);
}

TEST(ThetaD, MatchesDirectionalDerivatives) {
    auto Z = genus2();
    CMatrix Wr(3, 2);
    Wr << cplx(0.8, -0.3), cplx(-0.25, 0.6), cplx(0.4, 0.1), cplx(0.3, -0.2), kTwoPiI, cplx{};
    auto z = vec({cplx(0.12, 0.08), cplx(-0.2, 0.11)});
    auto along = [&](int i) {
        CVector v = Wr.row(i).transpose() / kTwoPiI;
        return v;
    };
    for (int i = 0; i < 3; ++i) {
        CVector v = along(i);
        cplx fd = cauchy_derivative([&](cplx t) { return riemann_theta(z + t * v, Z); });
        cplx d = theta_D(MultiIndexSet::from({i}, 3), z, Z, Wr);
        EXPECT_LT(relative_residual(d, fd), 1e-11) << i;
    }
    // mixed second derivative by nested Cauchy formulas
    CVector v0 = along(0), v1 = along(1);
    cplx fd2 = cauchy_derivative([&](cplx s) {
        return cauchy_derivative([&](cplx t) { return riemann_theta(z + s * v0 + t * v1, Z); });
    });
    EXPECT_LT(relative_residual(theta_D(MultiIndexSet::from({0, 1}, 3), z, Z, Wr), fd2), 1e-10);
    // the index with W = 2 pi i e_0 is d/dz_0
    cplx dz0 = cauchy_derivative([&](cplx t) { return riemann_theta(z + t * vec({1.0, 0.0}), Z); });
    EXPECT_LT(relative_residual(theta_D(MultiIndexSet::from({2}, 3), z, Z, Wr), dz0), 1e-11);
}

TEST(ThetaD, GenusZeroConvention) {
    RiemannMatrix Z0{CMatrix(0, 0)};
    CMatrix Wr(2, 0);
    EXPECT_EQ(theta_D(MultiIndexSet{0, 2}, CVector(0), Z0, Wr), cplx(1.0));
    EXPECT_EQ(theta_D(MultiIndexSet::from({1}, 2), CVector(0), Z0, Wr), cplx{});
}

TEST(Truncation, ErrorBoundIsHonest) {
    auto Z = genus2();
    auto z = vec({cplx(0.3, 0.2), cplx(-0.1, -0.3)});
    TruncationPolicy loose{1e-5, 64}, tight{1e-15, 64};
    ThetaResult a = riemann_theta_ex(z, Z, loose);
    ThetaResult b = riemann_theta_ex(z, Z, tight);
    EXPECT_LE(a.error_bound, 1e-5 * std::max(1.0, std::abs(a.value)) * 10);
    EXPECT_LE(std::abs(a.value - b.value), a.error_bound + b.error_bound);
    EXPECT_LT(a.radius, b.radius + 1);
}

TEST(Truncation, PrecisionErrorPastMaxRadius) {
    auto Z = RiemannMatrix::genus_one(cplx(0.0, 0.05));
    TruncationPolicy pol{1e-14, 2};
    try {
        riemann_theta(vec({cplx(0.1, 0.0)}), Z, pol);
        FAIL() << "expected PrecisionError";
    } catch (const PrecisionError& e) {
        EXPECT_GT(e.achievable_epsilon(), 1e-14);
    }
}

TEST(Truncation, Deterministic) {
    auto Z = genus3();
    auto z = vec({cplx(0.1, 0.1), cplx(-0.2, 0.15), cplx(0.3, -0.05)});
    cplx a = riemann_theta(z, Z), b = riemann_theta(z, Z);
    EXPECT_EQ(a, b);
}

TEST(Lemma2, GenusOneAndTwo) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    auto Z2 = genus2();
    CMatrix Wr(3, 2);
    Wr << cplx(0.8, -0.3), cplx(-0.25, 0.6), cplx(0.4, 0.1), cplx(0.3, -0.2), cplx(-0.6, 0.2), cplx(0.1, 0.7);
    for (int trial = 0; trial < 10; ++trial) {
        auto z = vec({cplx(u(rng), u(rng)), cplx(u(rng), u(rng))});
        for (std::uint64_t mask = 0; mask < 8; ++mask)
            for (int a = 0; a < 2; ++a) EXPECT_LT(check_lemma2(MultiIndexSet(mask, 3), a, z, Z2, Wr), 1e-10);
    }
    auto Z1 = RiemannMatrix::genus_one(cplx(0.2, 1.1));
    CMatrix W1(2, 1);
    W1 << kTwoPiI, cplx(0.3, -1.2);
    for (std::uint64_t mask = 0; mask < 4; ++mask)
        EXPECT_LT(check_lemma2(MultiIndexSet(mask, 2), 0, vec({cplx(0.21, -0.17)}), Z1, W1), 1e-10);
}
