#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include "error.hpp"

namespace gtheta {

using ComplexFunction = std::function<std::complex<double>(std::complex<double>)>;

namespace detail {

inline std::complex<double> trapezoid_circle(const ComplexFunction& f, std::complex<double> center, double radius,
                                             int nodes, double* magnitude) {
    std::complex<double> acc{};
    double mag = 0.0;
    for (int k = 0; k < nodes; ++k) {
        double theta = 2.0 * std::numbers::pi * (k + 0.5) / nodes;
        std::complex<double> offset = std::polar(radius, theta);
        std::complex<double> v = f(center + offset) * offset;
        acc += v;
        mag += std::abs(v);
    }
    if (magnitude) *magnitude = mag / nodes;
    return acc / static_cast<double>(nodes);
}

} // namespace detail

/// (1 / 2 pi i) times the integral of f over the circle |t - center| = radius, by the
/// trapezoid rule. The rule is re-run with twice the nodes; a relative change above
/// 1e-9 raises AccuracyError.
inline std::complex<double> contour_residue(const ComplexFunction& f, std::complex<double> center, double radius,
                                            int nodes = 256) {
    double mag = 0.0;
    auto coarse = detail::trapezoid_circle(f, center, radius, nodes, nullptr);
    auto fine = detail::trapezoid_circle(f, center, radius, 2 * nodes, &mag);
    double scale = std::max(std::abs(fine), mag);
    if (!(std::abs(fine - coarse) <= 1e-9 * scale))
        throw AccuracyError("contour quadrature did not converge under node doubling");
    return fine;
}

/// Residue at infinity of f(t) dt, via the chart w = 1/t on a circle of radius `w_radius`.
inline std::complex<double> contour_residue_at_infinity(const ComplexFunction& f, double w_radius, int nodes = 256) {
    return contour_residue([&](std::complex<double> w) { return -f(1.0 / w) / (w * w); }, {}, w_radius, nodes);
}

} // namespace gtheta
