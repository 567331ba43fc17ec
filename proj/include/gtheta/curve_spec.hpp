#pragma once

// Singular-curve descriptions given by desingularization data: the preimages
// p_{i,j} of each singular point, the pole orders n_{i,j,h} of the higher-order
// generators, and the Abel base point p0.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace gtheta {

using cplx = std::complex<double>;

/// A point of P^1 (or of the torus, where `infinite` is never set).
struct ProjPoint {
    cplx value{};
    bool infinite = false;

    static ProjPoint at_infinity() { return {cplx{}, true}; }
    static ProjPoint finite(cplx v) { return {v, false}; }

    friend bool operator==(const ProjPoint& a, const ProjPoint& b) {
        if (a.infinite || b.infinite) return a.infinite == b.infinite;
        return a.value == b.value;
    }
};

struct SingularPoint {
    /// preimages[0] is the distinguished reference preimage p_{i,1}.
    std::vector<ProjPoint> preimages;
    /// higher_orders[j] lists the n_{i,j,h} attached to preimages[j], strictly increasing.
    std::vector<std::vector<int>> higher_orders;
};

struct CurveSpec {
    int base_genus = 0;
    std::vector<SingularPoint> singular_points;
    ProjPoint base_point;
    /// Modulus of the desingularization when base_genus == 1.
    std::optional<cplx> tau;
};

struct GenusReport {
    int g_tilde = 0;
    int M = 0;  // C* directions, sum_i (j_i - 1)
    int N = 0;  // C directions, sum of h_{i,j}
    int g_arith = 0;
    int section_degree = 0;  // g_tilde + M + sum n_{i,j,h}
};

inline GenusReport genus_accounting(const CurveSpec& curve) {
    GenusReport r;
    r.g_tilde = curve.base_genus;
    int order_sum = 0;
    for (const auto& sp : curve.singular_points) {
        r.M += static_cast<int>(sp.preimages.size()) - 1;
        for (const auto& orders : sp.higher_orders) {
            r.N += static_cast<int>(orders.size());
            for (int n : orders) order_sum += n;
        }
    }
    r.g_arith = r.g_tilde + r.M + r.N;
    r.section_degree = r.g_tilde + r.M + order_sum;
    return r;
}

namespace detail {

inline std::string point_str(const ProjPoint& p) {
    if (p.infinite) return "inf";
    std::ostringstream os;
    os << "(" << p.value.real() << ", " << p.value.imag() << ")";
    return os.str();
}

/// Reduces u into the fundamental domain {s + t tau : s, t in [0, 1)}.
inline cplx reduce_to_fundamental_domain(cplx u, cplx tau) {
    double t = u.imag() / tau.imag();
    t -= std::floor(t);
    cplx rest = u - t * tau;
    double s = rest.real() - std::floor(rest.real());
    return s + t * tau;
}

/// Distance between u and v modulo Z + tau Z.
inline double torus_distance(cplx u, cplx v, cplx tau) {
    cplx d = reduce_to_fundamental_domain(u - v, tau);
    double best = std::abs(d);
    for (int m = -1; m <= 1; ++m)
        for (int k = -1; k <= 1; ++k)
            best = std::min(best, std::abs(d + static_cast<double>(m) + static_cast<double>(k) * tau));
    return best;
}

inline cplx parse_complex(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError("field '" + field + "': expected complex scalar [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline ProjPoint parse_point(const nlohmann::json& j, const std::string& field) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return ProjPoint::at_infinity();
        throw ParseError("field '" + field + "': only the string \"inf\" is accepted");
    }
    return ProjPoint::finite(parse_complex(j, field));
}

inline nlohmann::json point_json(const ProjPoint& p) {
    if (p.infinite) return "inf";
    return nlohmann::json::array({p.value.real(), p.value.imag()});
}

constexpr double kCoincidenceTol = 1e-12;

inline bool coincide(const ProjPoint& a, const ProjPoint& b, const std::optional<cplx>& tau) {
    if (a.infinite || b.infinite) return a.infinite && b.infinite;
    double scale = 1.0 + std::max(std::abs(a.value), std::abs(b.value));
    if (tau) return torus_distance(a.value, b.value, *tau) < kCoincidenceTol * scale;
    return std::abs(a.value - b.value) < kCoincidenceTol * scale;
}

} // namespace detail

/// Checks every CurveSpec invariant; throws ValidationError naming the clash.
inline void validate_curve(const CurveSpec& curve) {
    if (curve.base_genus < 0) throw ValidationError("base_genus must be non-negative");
    if (curve.base_genus == 1) {
        if (!curve.tau) throw ValidationError("tau is required when base_genus = 1");
        if (!(curve.tau->imag() > 0)) throw ValidationError("tau must have positive imaginary part");
    } else if (curve.tau) {
        throw ValidationError("tau is only meaningful when base_genus = 1");
    }
    if (curve.base_genus != 0 && curve.base_point.infinite)
        throw ValidationError("the point at infinity is only available when base_genus = 0");

    std::optional<cplx> tau = curve.base_genus == 1 ? curve.tau : std::nullopt;
    std::vector<std::pair<ProjPoint, std::string>> seen;
    int infinities = curve.base_point.infinite ? 1 : 0;
    for (std::size_t i = 0; i < curve.singular_points.size(); ++i) {
        const auto& sp = curve.singular_points[i];
        if (sp.preimages.empty())
            throw ValidationError("singular_points[" + std::to_string(i) + "]: needs at least one preimage");
        if (sp.higher_orders.size() != sp.preimages.size())
            throw ValidationError("singular_points[" + std::to_string(i) +
                                  "]: higher_orders must have one list per preimage");
        bool any_higher = false;
        for (std::size_t j = 0; j < sp.preimages.size(); ++j) {
            const auto& p = sp.preimages[j];
            std::string name = "p[" + std::to_string(i) + "][" + std::to_string(j) + "]";
            if (p.infinite) {
                if (curve.base_genus != 0)
                    throw ValidationError(name + ": \"inf\" only allowed when base_genus = 0");
                ++infinities;
            }
            if (detail::coincide(p, curve.base_point, tau))
                throw ValidationError("duplicated point: " + name + " " + detail::point_str(p) +
                                      " coincides with the base point");
            for (const auto& [q, qname] : seen)
                if (detail::coincide(p, q, tau))
                    throw ValidationError("duplicated preimage points: " + name + " and " + qname +
                                          " at " + detail::point_str(p));
            seen.emplace_back(p, name);

            const auto& orders = sp.higher_orders[j];
            for (std::size_t h = 0; h < orders.size(); ++h) {
                if (orders[h] < 1)
                    throw ValidationError(name + ": higher orders must be positive integers");
                if (h > 0 && orders[h] <= orders[h - 1])
                    throw ValidationError(name + ": higher orders must be strictly increasing");
                any_higher = true;
            }
        }
        if (sp.preimages.size() == 1 && !any_higher)
            throw ValidationError("singular_points[" + std::to_string(i) +
                                  "]: a single preimage needs a higher-order generator");
    }
    if (infinities > 1) throw ValidationError("at most one point (preimage or base point) may be \"inf\"");
}

/// Puts torus points into the fundamental domain; identity for base_genus != 1.
inline CurveSpec normalize_curve(CurveSpec curve) {
    if (curve.base_genus != 1 || !curve.tau) return curve;
    auto fix = [&](ProjPoint& p) { p.value = detail::reduce_to_fundamental_domain(p.value, *curve.tau); };
    fix(curve.base_point);
    for (auto& sp : curve.singular_points)
        for (auto& p : sp.preimages) fix(p);
    return curve;
}

inline CurveSpec curve_from_json(const nlohmann::json& doc) {
    using nlohmann::json;
    if (!doc.is_object()) throw ParseError("curve document must be an object");
    CurveSpec curve;
    if (!doc.contains("base_genus") || !doc["base_genus"].is_number_integer())
        throw ParseError("field 'base_genus': required non-negative integer");
    curve.base_genus = doc["base_genus"].get<int>();
    if (!doc.contains("base_point")) throw ParseError("field 'base_point': required");
    curve.base_point = detail::parse_point(doc["base_point"], "base_point");
    if (doc.contains("tau")) curve.tau = detail::parse_complex(doc["tau"], "tau");

    if (!doc.contains("singular_points") || !doc["singular_points"].is_array())
        throw ParseError("field 'singular_points': required list");
    const auto& list = doc["singular_points"];
    for (std::size_t i = 0; i < list.size(); ++i) {
        std::string prefix = "singular_points[" + std::to_string(i) + "]";
        const auto& e = list[i];
        if (!e.is_object() || !e.contains("preimages") || !e["preimages"].is_array())
            throw ParseError("field '" + prefix + ".preimages': required list");
        SingularPoint sp;
        for (std::size_t j = 0; j < e["preimages"].size(); ++j)
            sp.preimages.push_back(
                detail::parse_point(e["preimages"][j], prefix + ".preimages[" + std::to_string(j) + "]"));
        if (e.contains("higher_orders")) {
            const auto& ho = e["higher_orders"];
            if (!ho.is_array()) throw ParseError("field '" + prefix + ".higher_orders': expected list of lists");
            for (std::size_t j = 0; j < ho.size(); ++j) {
                if (!ho[j].is_array())
                    throw ParseError("field '" + prefix + ".higher_orders[" + std::to_string(j) +
                                     "]': expected list of integers");
                std::vector<int> orders;
                for (const auto& n : ho[j]) {
                    if (!n.is_number_integer())
                        throw ParseError("field '" + prefix + ".higher_orders[" + std::to_string(j) +
                                         "]': expected integers");
                    orders.push_back(n.get<int>());
                }
                sp.higher_orders.push_back(std::move(orders));
            }
        } else {
            sp.higher_orders.assign(sp.preimages.size(), {});
        }
        curve.singular_points.push_back(std::move(sp));
    }
    validate_curve(curve);
    return normalize_curve(std::move(curve));
}

inline CurveSpec parse_curve_spec(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed document: ") + e.what());
    }
    return curve_from_json(doc);
}

inline nlohmann::json curve_to_json(const CurveSpec& curve) {
    using nlohmann::json;
    json doc;
    doc["base_genus"] = curve.base_genus;
    doc["base_point"] = detail::point_json(curve.base_point);
    if (curve.tau) doc["tau"] = json::array({curve.tau->real(), curve.tau->imag()});
    json list = json::array();
    for (const auto& sp : curve.singular_points) {
        json e;
        e["preimages"] = json::array();
        for (const auto& p : sp.preimages) e["preimages"].push_back(detail::point_json(p));
        e["higher_orders"] = sp.higher_orders;
        list.push_back(e);
    }
    doc["singular_points"] = list;
    return doc;
}

inline std::string serialize_curve_spec(const CurveSpec& curve) { return curve_to_json(curve).dump(2); }

inline bool operator==(const SingularPoint& a, const SingularPoint& b) {
    return a.preimages == b.preimages && a.higher_orders == b.higher_orders;
}

inline bool operator==(const CurveSpec& a, const CurveSpec& b) {
    return a.base_genus == b.base_genus && a.base_point == b.base_point && a.tau == b.tau &&
           a.singular_points == b.singular_points;
}

} // namespace gtheta
