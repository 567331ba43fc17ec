#pragma once

// Riemann theta series
//
//     theta(z | Z) = sum_{n in Z^g} exp(pi i n^T Z n + 2 pi i n^T z)
//
// with the derivative operators D_I = prod_{i in I} sum_mu (W_{i,mu} / 2 pi i) d/dz_mu
// applied term by term, and a certified truncation of the lattice sum.

#include <cmath>
#include <complex>
#include <bit>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace gtheta {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline const cplx kTwoPiI{0.0, 2.0 * std::numbers::pi};

/// Symmetric g x g matrix with positive-definite imaginary part.
class RiemannMatrix {
public:
    RiemannMatrix() = default;

    explicit RiemannMatrix(CMatrix Z) : Z_(std::move(Z)) {
        if (Z_.rows() != Z_.cols()) throw ValidationError("Riemann matrix must be square");
        const auto g = Z_.rows();
        for (Eigen::Index a = 0; a < g; ++a)
            for (Eigen::Index b = 0; b < a; ++b)
                if (std::abs(Z_(a, b) - Z_(b, a)) > 1e-12)
                    throw ValidationError("Riemann matrix not symmetric at (" + std::to_string(a) + ", " +
                                          std::to_string(b) + ")");
        im_ = 0.5 * (Z_.imag() + Z_.imag().transpose());
        if (g > 0) {
            Eigen::SelfAdjointEigenSolver<RMatrix> es(im_);
            lambda_min_ = es.eigenvalues().minCoeff();
            if (!(lambda_min_ > 0.0))
                throw ValidationError("imaginary part of the Riemann matrix is not positive definite "
                                      "(smallest eigenvalue " + std::to_string(lambda_min_) + ")");
            im_inv_ = im_.inverse();
        }
    }

    static RiemannMatrix genus_one(cplx tau) {
        CMatrix Z(1, 1);
        Z(0, 0) = tau;
        return RiemannMatrix(Z);
    }

    Eigen::Index genus() const { return Z_.rows(); }
    const CMatrix& matrix() const { return Z_; }
    cplx operator()(Eigen::Index a, Eigen::Index b) const { return Z_(a, b); }
    const RMatrix& imag_part() const { return im_; }
    const RMatrix& imag_inverse() const { return im_inv_; }
    double lambda_min() const { return lambda_min_; }

private:
    CMatrix Z_;
    RMatrix im_;
    RMatrix im_inv_;
    double lambda_min_ = 1.0;
};

/// Subset I of {0, ..., N-1}.
class MultiIndexSet {
public:
    MultiIndexSet() = default;
    MultiIndexSet(std::uint64_t mask, int universe) : mask_(mask), n_(universe) {}

    static MultiIndexSet from(std::initializer_list<int> items, int universe) {
        std::uint64_t m = 0;
        for (int i : items) m |= 1ULL << i;
        return {m, universe};
    }

    std::uint64_t mask() const { return mask_; }
    int universe() const { return n_; }
    int size() const { return std::popcount(mask_); }
    bool contains(int i) const { return (mask_ >> i) & 1U; }
    bool empty() const { return mask_ == 0; }

    MultiIndexSet complement() const {
        std::uint64_t full = n_ >= 64 ? ~0ULL : (1ULL << n_) - 1;
        return {full & ~mask_, n_};
    }
    /// I \ J for J a subset of I.
    MultiIndexSet relative_complement(const MultiIndexSet& J) const { return {mask_ & ~J.mask(), n_}; }
    bool includes(const MultiIndexSet& J) const { return (J.mask() & ~mask_) == 0; }

    std::vector<int> elements() const {
        std::vector<int> out;
        for (int i = 0; i < 64; ++i)
            if (contains(i)) out.push_back(i);
        return out;
    }

    /// Every J contained in I, including the empty set and I itself.
    std::vector<MultiIndexSet> subsets() const {
        std::vector<MultiIndexSet> out;
        std::uint64_t s = mask_;
        while (true) {
            out.push_back({s, n_});
            if (s == 0) break;
            s = (s - 1) & mask_;
        }
        return out;
    }

    friend bool operator==(const MultiIndexSet&, const MultiIndexSet&) = default;

private:
    std::uint64_t mask_ = 0;
    int n_ = 0;
};

struct TruncationPolicy {
    double epsilon = 1e-12;
    int max_radius = 64;
};

struct ThetaResult {
    cplx value;
    double error_bound = 0.0;  // bound on the discarded tail, in the units of `value`
    int radius = 0;            // lattice shells summed
};

namespace detail {

struct ReducedArgument {
    CVector z;            // reduced argument, Im part within half a period of the lattice
    Eigen::VectorXi m;    // B-period shift removed from z
    cplx log_factor;      // theta(z) = exp(log_factor) * theta-sum at the reduced argument
    RVector center;       // c = (Im Z)^{-1} Im z_reduced
};

inline ReducedArgument reduce_argument(const CVector& z, const RiemannMatrix& Z) {
    const auto g = Z.genus();
    ReducedArgument r;
    RVector c = Z.imag_inverse() * z.imag();
    r.m.resize(g);
    for (Eigen::Index a = 0; a < g; ++a) r.m(a) = static_cast<int>(std::lround(c(a)));
    CVector md = r.m.cast<double>().cast<cplx>();
    CVector zr = z - Z.matrix() * md;
    r.log_factor = cplx(0.0, -kPi) * (md.transpose() * Z.matrix() * md)(0, 0) -
                   kTwoPiI * (md.transpose() * zr)(0, 0);
    for (Eigen::Index a = 0; a < g; ++a) zr(a) -= std::round(zr(a).real());
    r.z = zr;
    r.center = Z.imag_inverse() * zr.imag();
    return r;
}

/// Certified bound on the tail beyond cube shell K for weights of degree `degree`
/// with per-factor slope `slope` and offset `offset`.
inline double tail_bound(int K, int g, double lambda_min, double center_energy, int degree, double slope,
                         double offset) {
    double total = 0.0;
    for (int s = K + 1;; ++s) {
        double r = s - 0.5;
        double count = std::pow(2.0 * s + 1.0, g) - std::pow(2.0 * s - 1.0, g);
        double weight = degree == 0 ? 1.0 : std::pow(slope * (s + offset), degree);
        double term = count * weight * std::exp(-kPi * lambda_min * r * r + kPi * center_energy);
        total += term;
        if (term < 1e-30 * total || term < 1e-300) break;
        if (s > K + 10000) break;
    }
    return total;
}

} // namespace detail

/// D_I theta(z) for every set in `sets`, evaluated in one lattice pass.
/// Rows of `W_rows` are the B-period vectors W_i, one per index i.
inline std::vector<ThetaResult> theta_D_batch(const std::vector<MultiIndexSet>& sets, const CVector& z,
                                              const RiemannMatrix& Z, const CMatrix& W_rows,
                                              const TruncationPolicy& pol = {}) {
    const int g = static_cast<int>(Z.genus());
    std::vector<ThetaResult> out(sets.size());
    if (z.size() != g) throw ValidationError("theta argument has the wrong dimension");
    int max_degree = 0;
    for (const auto& I : sets) {
        for (int i : I.elements())
            if (i >= W_rows.rows()) throw ValidationError("D_I references a missing W row");
        max_degree = std::max(max_degree, I.size());
    }
    if (g == 0) {
        for (std::size_t s = 0; s < sets.size(); ++s) out[s].value = sets[s].empty() ? cplx{1.0} : cplx{};
        return out;
    }

    auto red = detail::reduce_argument(z, Z);
    double center_energy = red.center.dot(Z.imag_part() * red.center);
    double slope = 0.0;
    for (Eigen::Index i = 0; i < W_rows.rows(); ++i) slope = std::max(slope, W_rows.row(i).cwiseAbs().sum());
    double offset = red.m.cwiseAbs().maxCoeff() + 1.0;

    int K = 0;
    double tail = 0.0;
    for (;; ++K) {
        tail = detail::tail_bound(K, g, Z.lambda_min(), center_energy, max_degree, slope, offset);
        if (tail < pol.epsilon) break;
        if (K >= pol.max_radius)
            throw PrecisionError("theta truncation radius exceeds max_radius " + std::to_string(pol.max_radius),
                                 tail);
    }

    std::vector<cplx> sums(sets.size(), cplx{});
    std::vector<int> k(g);
    CVector kd(g);
    const CMatrix& Zm = Z.matrix();
    std::vector<cplx> lin(W_rows.rows());
    for (int s = 0; s <= K; ++s) {
        // odometer over the cube [-s, s]^g, keeping the shell max|k| == s
        std::fill(k.begin(), k.end(), -s);
        while (true) {
            int linf = 0;
            for (int a = 0; a < g; ++a) linf = std::max(linf, std::abs(k[a]));
            if (linf == s) {
                for (int a = 0; a < g; ++a) kd(a) = static_cast<double>(k[a]);
                cplx expo = cplx(0.0, kPi) * (kd.transpose() * Zm * kd)(0, 0) + kTwoPiI * (kd.transpose() * red.z)(0, 0);
                cplx term = std::exp(expo);
                for (Eigen::Index i = 0; i < W_rows.rows(); ++i) {
                    cplx acc{};
                    for (int a = 0; a < g; ++a) acc += W_rows(i, a) * static_cast<double>(k[a] - red.m(a));
                    lin[i] = acc;
                }
                for (std::size_t q = 0; q < sets.size(); ++q) {
                    cplx w{1.0};
                    std::uint64_t mask = sets[q].mask();
                    for (int i = 0; mask; ++i, mask >>= 1)
                        if (mask & 1U) w *= lin[i];
                    sums[q] += w * term;
                }
            }
            int a = 0;
            while (a < g && k[a] == s) k[a++] = -s;
            if (a == g) break;
            ++k[a];
        }
    }
    cplx factor = std::exp(red.log_factor);
    for (std::size_t q = 0; q < sets.size(); ++q) {
        out[q].value = factor * sums[q];
        out[q].error_bound = tail * std::abs(factor);
        out[q].radius = K;
    }
    return out;
}

inline ThetaResult theta_D_ex(const MultiIndexSet& I, const CVector& z, const RiemannMatrix& Z,
                              const CMatrix& W_rows, const TruncationPolicy& pol = {}) {
    return theta_D_batch({I}, z, Z, W_rows, pol).front();
}

inline cplx theta_D(const MultiIndexSet& I, const CVector& z, const RiemannMatrix& Z, const CMatrix& W_rows,
                    const TruncationPolicy& pol = {}) {
    return theta_D_ex(I, z, Z, W_rows, pol).value;
}

inline ThetaResult riemann_theta_ex(const CVector& z, const RiemannMatrix& Z, const TruncationPolicy& pol = {}) {
    return theta_D_ex(MultiIndexSet{}, z, Z, CMatrix(0, Z.genus()), pol);
}

inline cplx riemann_theta(const CVector& z, const RiemannMatrix& Z, const TruncationPolicy& pol = {}) {
    return riemann_theta_ex(z, Z, pol).value;
}

/// R_alpha with theta(z + Z e_alpha) = theta(z) R_alpha.
inline cplx periodicity_factor(const CVector& z, const RiemannMatrix& Z, int alpha) {
    if (alpha < 0 || alpha >= Z.genus()) throw ValidationError("cycle index out of range");
    return std::exp(-kTwoPiI * z(alpha) - cplx(0.0, kPi) * Z(alpha, alpha));
}

/// prod_{k in K} W_{k, alpha}
inline cplx w_product(const MultiIndexSet& K, const CMatrix& W_rows, int alpha) {
    cplx p{1.0};
    for (int k : K.elements()) p *= W_rows(k, alpha);
    return p;
}

inline double relative_residual(cplx lhs, cplx rhs) {
    return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1.0);
}

/// Residual of D_I(theta(z + Z_alpha)) = [sum_{J in I} (-1)^{|I\J|} W_{I\J, alpha} D_J theta(z)] R_alpha.
inline double check_lemma2(const MultiIndexSet& I, int alpha, const CVector& z, const RiemannMatrix& Z,
                           const CMatrix& W_rows, const TruncationPolicy& pol = {}) {
    CVector shifted = z + Z.matrix().col(alpha);
    cplx lhs = theta_D(I, shifted, Z, W_rows, pol);
    auto subsets = I.subsets();
    auto values = theta_D_batch(subsets, z, Z, W_rows, pol);
    cplx rhs{};
    for (std::size_t q = 0; q < subsets.size(); ++q) {
        MultiIndexSet rest = I.relative_complement(subsets[q]);
        double sign = rest.size() % 2 ? -1.0 : 1.0;
        rhs += sign * w_product(rest, W_rows, alpha) * values[q].value;
    }
    rhs *= periodicity_factor(z, Z, alpha);
    return relative_residual(lhs, rhs);
}

} // namespace gtheta
