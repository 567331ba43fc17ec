#pragma once

// Roots of complex polynomials: companion-matrix eigenvalues, an Aberth-Ehrlich
// polishing pass, and clustering into roots with multiplicity.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace gtheta {

using Poly = std::vector<std::complex<double>>;  // ascending coefficients

inline Poly poly_multiply(const Poly& p, const Poly& q) {
    if (p.empty() || q.empty()) return {};
    Poly r(p.size() + q.size() - 1);
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
    return r;
}

inline std::complex<double> poly_eval(const Poly& p, std::complex<double> x) {
    std::complex<double> acc{};
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
    return acc;
}

inline std::complex<double> poly_eval_derivative(const Poly& p, std::complex<double> x) {
    std::complex<double> acc{};
    for (std::size_t k = p.size(); k-- > 1;) acc = acc * x + static_cast<double>(k) * p[k];
    return acc;
}

struct PolyRoots {
    std::vector<std::complex<double>> roots;  // finite roots, with repetition
    int degree = 0;                           // nominal degree (size - 1)
    int at_infinity = 0;                      // degree drop
};

/// Leading coefficients below rel_tol * norm count as zero (roots at infinity).
inline PolyRoots find_polynomial_roots(const Poly& p, double rel_tol = 1e-12, int aberth_passes = 1) {
    PolyRoots out;
    out.degree = p.empty() ? 0 : static_cast<int>(p.size()) - 1;
    double norm = 0.0;
    for (const auto& c : p) norm = std::max(norm, std::abs(c));
    int d = out.degree;
    while (d > 0 && std::abs(p[d]) < rel_tol * norm) --d;
    out.at_infinity = out.degree - d;
    if (d <= 0) return out;

    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(d, d);
    for (int k = 1; k < d; ++k) C(k, k - 1) = 1.0;
    for (int k = 0; k < d; ++k) C(k, d - 1) = -p[k] / p[d];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    for (int k = 0; k < d; ++k) out.roots.push_back(es.eigenvalues()(k));

    Poly trimmed(p.begin(), p.begin() + d + 1);
    for (int pass = 0; pass < aberth_passes; ++pass) {
        auto next = out.roots;
        for (int k = 0; k < d; ++k) {
            auto z = out.roots[k];
            auto val = poly_eval(trimmed, z);
            auto der = poly_eval_derivative(trimmed, z);
            if (der == std::complex<double>{}) continue;
            auto w = val / der;
            std::complex<double> s{};
            bool clash = false;
            for (int j = 0; j < d; ++j) {
                if (j == k) continue;
                if (out.roots[j] == z) { clash = true; break; }
                s += 1.0 / (z - out.roots[j]);
            }
            if (clash) continue;
            auto candidate = z - w / (1.0 - w * s);
            if (std::abs(poly_eval(trimmed, candidate)) < std::abs(val)) next[k] = candidate;
        }
        out.roots = next;
    }
    return out;
}

struct ClusteredRoot {
    std::complex<double> point;
    int multiplicity = 1;
};

/// Groups roots closer than `tol` (relative to 1 + |root|) and replaces each group by its mean.
inline std::vector<ClusteredRoot> cluster_roots(const std::vector<std::complex<double>>& roots, double tol = 1e-8) {
    std::vector<int> group(roots.size(), -1);
    std::vector<ClusteredRoot> out;
    for (std::size_t k = 0; k < roots.size(); ++k) {
        if (group[k] >= 0) continue;
        group[k] = static_cast<int>(out.size());
        std::complex<double> sum = roots[k];
        int count = 1;
        for (std::size_t j = k + 1; j < roots.size(); ++j) {
            if (group[j] >= 0) continue;
            if (std::abs(roots[j] - roots[k]) < tol * (1.0 + std::abs(roots[k]))) {
                group[j] = group[k];
                sum += roots[j];
                ++count;
            }
        }
        out.push_back({sum / static_cast<double>(count), count});
    }
    return out;
}

} // namespace gtheta
