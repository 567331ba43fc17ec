#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"

namespace gtheta {

/// Which compactified coordinates are trivialized at infinity (U1) rather than at
/// finite values (U0). Bit k of `xi_at_infinity` refers to the k-th exp(xi) coordinate.
struct ChartIndex {
    std::uint64_t xi_at_infinity = 0;
    std::uint64_t zeta_at_infinity = 0;

    bool xi_inf(int k) const { return (xi_at_infinity >> k) & 1U; }
    bool zeta_inf(int k) const { return (zeta_at_infinity >> k) & 1U; }
    void set_xi(int k, bool on) { on ? xi_at_infinity |= (1ULL << k) : xi_at_infinity &= ~(1ULL << k); }
    void set_zeta(int k, bool on) { on ? zeta_at_infinity |= (1ULL << k) : zeta_at_infinity &= ~(1ULL << k); }

    /// True when every coordinate at infinity in `other` is also at infinity here.
    bool covers(const ChartIndex& other) const {
        return (other.xi_at_infinity & ~xi_at_infinity) == 0 &&
               (other.zeta_at_infinity & ~zeta_at_infinity) == 0;
    }

    static ChartIndex all_infinite(int M, int N) {
        ChartIndex c;
        c.xi_at_infinity = M >= 64 ? ~0ULL : (1ULL << M) - 1;
        c.zeta_at_infinity = N >= 64 ? ~0ULL : (1ULL << N) - 1;
        return c;
    }

    friend bool operator==(const ChartIndex&, const ChartIndex&) = default;
};

/// Parses "xi:0,2;zeta:1" (0-based indices), "all", or "" (the U0 chart).
inline ChartIndex parse_chart(const std::string& spec, int M, int N) {
    ChartIndex c;
    if (spec.empty() || spec == "u0") return c;
    if (spec == "all") return ChartIndex::all_infinite(M, N);
    std::size_t pos = 0;
    while (pos < spec.size()) {
        std::size_t end = spec.find(';', pos);
        std::string part = spec.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        pos = end == std::string::npos ? spec.size() : end + 1;
        auto colon = part.find(':');
        if (colon == std::string::npos) throw ParseError("chart spec: expected 'xi:...' or 'zeta:...'");
        std::string kind = part.substr(0, colon);
        std::string list = part.substr(colon + 1);
        std::size_t p = 0;
        while (p < list.size()) {
            std::size_t comma = list.find(',', p);
            std::string item = list.substr(p, comma == std::string::npos ? std::string::npos : comma - p);
            p = comma == std::string::npos ? list.size() : comma + 1;
            if (item.empty()) continue;
            int k = 0;
            try {
                k = std::stoi(item);
            } catch (const std::exception&) {
                throw ParseError("chart spec: bad index '" + item + "'");
            }
            if (kind == "xi") {
                if (k < 0 || k >= M) throw ParseError("chart spec: xi index out of range");
                c.set_xi(k, true);
            } else if (kind == "zeta") {
                if (k < 0 || k >= N) throw ParseError("chart spec: zeta index out of range");
                c.set_zeta(k, true);
            } else {
                throw ParseError("chart spec: unknown coordinate kind '" + kind + "'");
            }
        }
    }
    return c;
}

/// Abel-map value at a point. Coordinates flagged in `chart` hold the reciprocal
/// (exp(-xi) or 1/zeta), so every stored entry is finite.
struct AbelPoint {
    std::vector<std::complex<double>> exp_xi;
    std::vector<std::complex<double>> zeta;
    std::vector<std::complex<double>> z;
    ChartIndex chart;

    /// Value of the k-th exp(xi) coordinate on P^1 (may be infinite).
    std::complex<double> exp_xi_value(int k) const {
        return chart.xi_inf(k) ? 1.0 / exp_xi[k] : exp_xi[k];
    }
    std::complex<double> zeta_value(int k) const { return chart.zeta_inf(k) ? 1.0 / zeta[k] : zeta[k]; }
};

/// Section value together with the chart it is trivialized in.
struct ThetaValue {
    std::complex<double> value;
    ChartIndex chart;
};

} // namespace gtheta
