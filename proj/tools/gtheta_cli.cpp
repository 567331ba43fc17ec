// gtheta_cli: curve ingestion, theta evaluation, zero finding and Abel-theorem campaigns.
//
// Errors are written to stderr as {"error": <category>, "message": ...} with a
// category-specific exit status.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <gtheta/gtheta.hpp>

using namespace gtheta;
using nlohmann::json;

namespace {

struct RunConfig {
    std::string command;
    std::string input_path;
    std::string output_path;
    std::string csv_path;
    int shifts = 10;
    std::uint64_t seed = 1;
    double eps = 1e-12;
    std::string chart;
    std::string point;
    std::string shift_json;
    std::string abel_json;
    std::string path;
    int steps = 8;
};

int exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::parse: return 2;
        case ErrorCategory::validation: return 3;
        case ErrorCategory::degenerate_shift: return 4;
        case ErrorCategory::precision: return 5;
        case ErrorCategory::geometry: return 6;
        case ErrorCategory::pole: return 7;
        case ErrorCategory::chart: return 8;
        case ErrorCategory::size: return 9;
        case ErrorCategory::accuracy: return 10;
    }
    return 1;
}

json cj(cplx v) { return json::array({v.real(), v.imag()}); }

json cvec(const std::vector<cplx>& v) {
    json out = json::array();
    for (cplx x : v) out.push_back(cj(x));
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open input file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed " + what + ": " + e.what());
    }
}

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Loaded {
    CurveSpec curve;
    GenusReport genus;
    std::optional<TorusCurve> torus;
    std::optional<PeriodData> periods;
};

Loaded load(const RunConfig& cfg) {
    json doc = parse_json(read_file(cfg.input_path), "curve document");
    Loaded l;
    l.curve = curve_from_json(doc);
    l.genus = genus_accounting(l.curve);
    if (l.genus.g_tilde == 1) {
        l.torus.emplace(l.curve);
        l.periods = build_period_data(*l.torus);
    } else if (l.genus.g_tilde >= 2) {
        if (!doc.contains("period_data"))
            throw ValidationError("base_genus >= 2 needs an inline 'period_data' object");
        l.periods = period_data_from_json(doc["period_data"]);
        if (l.periods->genus() != l.genus.g_tilde || l.periods->M() != l.genus.M || l.periods->N() != l.genus.N)
            throw ValidationError("period_data dimensions do not match the curve");
    }
    return l;
}

ProjPoint parse_point_arg(const std::string& s) {
    if (s == "inf") return ProjPoint::at_infinity();
    return ProjPoint::finite(detail::parse_complex(parse_json(s, "point"), "point"));
}

std::vector<cplx> complex_list(const json& j, const std::string& field) {
    std::vector<cplx> out;
    if (!j.is_array()) throw ParseError("field '" + field + "': expected list of [re, im]");
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(detail::parse_complex(j[k], field));
    return out;
}

ShiftParams parse_shift(const json& j) {
    if (!j.is_object()) throw ParseError("shift must be an object with fields a, b, lambda");
    ShiftParams s;
    if (j.contains("a")) s.a = complex_list(j["a"], "a");
    if (j.contains("b")) s.b = complex_list(j["b"], "b");
    if (j.contains("lambda")) s.lambda = complex_list(j["lambda"], "lambda");
    return s;
}

json shift_json(const ShiftParams& s) { return {{"a", cvec(s.a)}, {"b", cvec(s.b)}, {"lambda", cvec(s.lambda)}}; }

std::vector<ShiftParams> shifts_for(const RunConfig& cfg, const GenusReport& gr) {
    if (!cfg.shift_json.empty()) {
        json j = parse_json(cfg.shift_json, "shift");
        std::vector<ShiftParams> out;
        if (j.is_array())
            for (const auto& e : j) out.push_back(parse_shift(e));
        else
            out.push_back(parse_shift(j));
        for (const auto& s : out) s.validate(gr.M, gr.N, gr.g_tilde);
        return out;
    }
    if (cfg.shifts < 1) throw ValidationError("--shifts must be positive");
    return random_shifts(gr.M, gr.N, gr.g_tilde, cfg.shifts, cfg.seed);
}

json abel_point_json(const AbelPoint& ap) {
    return {{"exp_xi", cvec(ap.exp_xi)},
            {"zeta", cvec(ap.zeta)},
            {"z", cvec(ap.z)},
            {"chart", {{"xi_at_infinity", ap.chart.xi_at_infinity}, {"zeta_at_infinity", ap.chart.zeta_at_infinity}}}};
}

AbelPoint abel_at(const Loaded& l, const ProjPoint& p, std::optional<ChartIndex> chart, const TruncationPolicy& pol) {
    if (l.genus.g_tilde == 0) return abel_map_p1(l.curve, p, chart);
    if (l.genus.g_tilde == 1) {
        if (p.infinite) throw ValidationError("\"inf\" is not a point of the torus");
        return abel_map_torus(*l.torus, p.value, chart, pol);
    }
    throw ValidationError("abel map for base_genus >= 2 is not available; pass --abel with explicit coordinates");
}

json header(const RunConfig& cfg) {
    return {{"command", cfg.command}, {"input", cfg.input_path}, {"seed", cfg.seed}, {"eps", cfg.eps}};
}

json genus_json(const GenusReport& gr) {
    return {{"g_tilde", gr.g_tilde},
            {"M", gr.M},
            {"N", gr.N},
            {"g_arith", gr.g_arith},
            {"section_degree", gr.section_degree}};
}

json cmd_validate(const RunConfig& cfg) {
    Loaded l = load(cfg);
    json out = header(cfg);
    out["genus"] = genus_json(l.genus);
    out["curve"] = curve_to_json(l.curve);
    if (l.periods) {
        PeriodReport r = validate_periods(*l.periods);
        out["period_data"] = period_data_to_json(*l.periods);
        out["period_report"] = {{"symmetry_residual", r.symmetry_residual},
                                {"lambda_min", r.lambda_min},
                                {"reciprocity_residual", r.reciprocity_residual}};
    }
    return out;
}

json cmd_theta_eval(const RunConfig& cfg, const TruncationPolicy& pol) {
    Loaded l = load(cfg);
    const GenusReport& gr = l.genus;
    ShiftParams shift = cfg.shift_json.empty() ? ShiftParams::identity(gr.M, gr.N, gr.g_tilde) : shifts_for(cfg, gr).front();
    ChartIndex chart = parse_chart(cfg.chart, gr.M, gr.N);
    AbelPoint ap;
    if (!cfg.abel_json.empty()) {
        json j = parse_json(cfg.abel_json, "abel point");
        ap.exp_xi = complex_list(j.value("exp_xi", json::array()), "exp_xi");
        ap.zeta = complex_list(j.value("zeta", json::array()), "zeta");
        ap.z = complex_list(j.value("z", json::array()), "z");
        ap.chart = chart;
    } else {
        if (cfg.point.empty()) throw ValidationError("theta-eval needs --point or --abel");
        ap = abel_at(l, parse_point_arg(cfg.point), std::nullopt, pol);
    }
    ThetaValue tv = gr.g_tilde == 0 ? gen_theta_rational(l.curve, ap, shift, chart)
                                    : gen_theta_general(ap, *l.periods, shift, chart, pol);
    json out = header(cfg);
    out["shift"] = shift_json(shift);
    out["abel_point"] = abel_point_json(ap);
    out["value"] = cj(tv.value);
    out["chart"] = {{"xi_at_infinity", tv.chart.xi_at_infinity}, {"zeta_at_infinity", tv.chart.zeta_at_infinity}};
    return out;
}

json cmd_abel_map(const RunConfig& cfg, const TruncationPolicy& pol) {
    Loaded l = load(cfg);
    if (cfg.path.empty()) throw ValidationError("abel-map needs --path 'x0,y0;x1,y1;...'");
    if (cfg.steps < 1) throw ValidationError("--steps must be positive");
    std::vector<cplx> vertices;
    std::string spec = cfg.path;
    std::replace(spec.begin(), spec.end(), ';', ' ');
    std::stringstream ss(spec);
    std::string item;
    while (ss >> item) {
        double re = 0, im = 0;
        if (std::sscanf(item.c_str(), "%lf,%lf", &re, &im) != 2) throw ParseError("bad path vertex '" + item + "'");
        vertices.emplace_back(re, im);
    }
    if (vertices.empty()) throw ParseError("empty path");
    std::optional<ChartIndex> chart;
    if (!cfg.chart.empty()) chart = parse_chart(cfg.chart, l.genus.M, l.genus.N);
    json rows = json::array();
    auto emit = [&](cplx p) {
        json r = abel_point_json(abel_at(l, ProjPoint::finite(p), chart, pol));
        r["point"] = cj(p);
        rows.push_back(r);
    };
    emit(vertices.front());
    for (std::size_t k = 0; k + 1 < vertices.size(); ++k)
        for (int s = 1; s <= cfg.steps; ++s)
            emit(vertices[k] + (vertices[k + 1] - vertices[k]) * (static_cast<double>(s) / cfg.steps));
    json out = header(cfg);
    out["rows"] = rows;
    return out;
}

json zero_set_json(const ZeroSet& zs) {
    json zeros = json::array();
    for (const auto& z : zs.zeros) zeros.push_back({{"point", detail::point_json(z.point)}, {"multiplicity", z.multiplicity}});
    return {{"zeros", zeros},
            {"total_count", zs.total_count},
            {"expected_count", zs.expected_count},
            {"smooth_analogy_count", zs.smooth_analogy_count}};
}

json cmd_zeros(const RunConfig& cfg, const TruncationPolicy& pol) {
    Loaded l = load(cfg);
    ShiftParams shift = shifts_for(cfg, l.genus).front();
    json out = header(cfg);
    out["shift"] = shift_json(shift);
    if (l.genus.g_tilde == 0) out["zero_set"] = zero_set_json(find_zeros_rational(l.curve, shift));
    else if (l.genus.g_tilde == 1) out["zero_set"] = zero_set_json(find_zeros_torus(*l.torus, *l.periods, shift, {}, pol));
    else throw ValidationError("zero finding is only available for base_genus 0 or 1");
    return out;
}

void write_verify_csv(const std::string& path, const VerificationReport& rep) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write CSV '" + path + "'");
    out << "shift,zero_count,expected_count";
    auto cols = [&](const char* stem, std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) out << "," << stem << k << "_re," << stem << k << "_im";
    };
    const auto& s0 = rep.shifts.front();
    cols("a", s0.shift.a.size());
    cols("b", s0.shift.b.size());
    cols("lambda", s0.shift.lambda.size());
    cols("D", s0.D.size());
    out << ",deviation,deviation_explicit,contour_sum\n";
    for (std::size_t r = 0; r < rep.shifts.size(); ++r) {
        const auto& s = rep.shifts[r];
        out << r << "," << s.zeros.total_count << "," << s.zeros.expected_count;
        auto vals = [&](const std::vector<cplx>& v) {
            for (cplx x : v) out << "," << csv_number(x.real()) << "," << csv_number(x.imag());
        };
        vals(s.shift.a);
        vals(s.shift.b);
        vals(s.shift.lambda);
        vals(s.D);
        double contour = 0.0;
        for (cplx c : s.contour_sums) contour = std::max(contour, std::abs(c));
        out << "," << csv_number(s.deviation) << "," << csv_number(s.deviation_explicit) << ","
            << csv_number(contour) << "\n";
    }
}

json cmd_verify(const RunConfig& cfg, const TruncationPolicy& pol) {
    Loaded l = load(cfg);
    auto shifts = shifts_for(cfg, l.genus);
    VerificationReport rep =
        verify_abel_theorem(l.curve, l.periods ? &*l.periods : nullptr, shifts, {}, {}, pol);
    json out = header(cfg);
    out["genus"] = genus_json(l.genus);
    out["kappa"] = cvec(rep.kappa.kappa);
    out["max_deviation"] = rep.max_deviation;
    out["max_deviation_explicit"] = rep.max_deviation_explicit;
    out["max_contour_sum"] = rep.max_contour_sum;
    out["counts_ok"] = rep.counts_ok;
    out["expected_zero_count"] = rep.expected_zero_count;
    out["smooth_analogy_zero_count"] = rep.smooth_analogy_zero_count;
    json rows = json::array();
    for (const auto& s : rep.shifts) {
        rows.push_back({{"shift", shift_json(s.shift)},
                        {"zero_set", zero_set_json(s.zeros)},
                        {"abel_sum", cvec(s.abel_sum)},
                        {"delta_xi", cvec(s.functionals.delta_xi)},
                        {"delta_zeta", cvec(s.functionals.delta_zeta)},
                        {"D", cvec(s.D)},
                        {"deviation", s.deviation}});
    }
    out["shifts"] = rows;
    std::string csv = cfg.csv_path;
    if (csv.empty() && !cfg.output_path.empty()) csv = cfg.output_path + ".csv";
    if (!csv.empty()) {
        write_verify_csv(csv, rep);
        out["csv"] = csv;
    }
    return out;
}

json cmd_lemmas(const RunConfig& cfg, const TruncationPolicy& pol) {
    Loaded l = load(cfg);
    if (!l.periods) throw ValidationError("lemmas need base_genus >= 1");
    const PeriodData& pd = *l.periods;
    const int g = static_cast<int>(pd.genus());
    // D indices: the B-periods W_i of the curve followed by d/dz_a
    CMatrix Wr(pd.N() + g, g);
    Wr << pd.W_rows(), kTwoPiI * CMatrix::Identity(g, g);
    const int n = static_cast<int>(Wr.rows());
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    CVector z(g);
    for (int a = 0; a < g; ++a) z(a) = cplx(u(rng), u(rng));
    ShiftParams shift = cfg.shift_json.empty() ? random_shifts(l.genus.M, l.genus.N, g, 1, cfg.seed).front()
                                               : shifts_for(cfg, l.genus).front();
    std::vector<cplx> ex(pd.M()), ze(pd.N());
    for (auto& x : ex) x = std::exp(cplx(u(rng), u(rng)));
    for (auto& x : ze) x = cplx(u(rng), u(rng));

    json rows = json::array();
    double worst = 0.0;
    auto add = [&](const std::string& name, std::uint64_t mask, int alpha, double r) {
        rows.push_back({{"identity", name}, {"set", mask}, {"alpha", alpha}, {"residual", r}});
        worst = std::max(worst, r);
    };
    const std::uint64_t sets = std::min<std::uint64_t>(1ULL << n, 1ULL << 6);
    for (int a = 0; a < g; ++a) {
        for (std::uint64_t mask = 0; mask < sets; ++mask) {
            MultiIndexSet I(mask, n);
            if (I.size() <= 3) add("lemma2", mask, a, check_lemma2(I, a, z, pd.Z, Wr, pol));
            add("lemma3", mask, a, check_lemma3(I, a, z, pd.Z, Wr, pol));
        }
        add("lemma4", 0, a, check_general_quasiperiodicity(ex, ze, z, pd, shift, a, pol));
        if (pd.M() == 1 && pd.N() == 0) add("node_bshift", 0, a, check_node_bshift(std::log(ex[0]), z, pd, shift, a, pol));
        if (pd.M() == 0 && pd.N() == 1) add("cusp_bshift", 0, a, check_cusp_bshift(ze[0], z, pd, shift, a, pol));
    }
    json out = header(cfg);
    out["rows"] = rows;
    out["max_residual"] = worst;
    if (!cfg.csv_path.empty()) {
        std::ofstream csv(cfg.csv_path);
        csv << "identity,set,alpha,residual\n";
        for (const auto& r : rows)
            csv << r["identity"].get<std::string>() << "," << r["set"].get<std::uint64_t>() << ","
                << r["alpha"].get<int>() << "," << csv_number(r["residual"].get<double>()) << "\n";
    }
    return out;
}

json run(const RunConfig& cfg) {
    TruncationPolicy pol;
    pol.epsilon = cfg.eps;
    if (cfg.command == "validate") return cmd_validate(cfg);
    if (cfg.command == "theta-eval") return cmd_theta_eval(cfg, pol);
    if (cfg.command == "abel-map") return cmd_abel_map(cfg, pol);
    if (cfg.command == "zeros") return cmd_zeros(cfg, pol);
    if (cfg.command == "verify") return cmd_verify(cfg, pol);
    if (cfg.command == "lemmas") return cmd_lemmas(cfg, pol);
    throw ValidationError("unknown command '" + cfg.command + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalized theta functions on singular curves"};
    RunConfig cfg;
    app.add_option("--command", cfg.command, "validate | theta-eval | abel-map | zeros | verify | lemmas")->required();
    app.add_option("--input", cfg.input_path, "curve document (JSON)")->required();
    app.add_option("--output", cfg.output_path, "report path (default: stdout)");
    app.add_option("--csv", cfg.csv_path, "CSV path (verify, lemmas)");
    app.add_option("--shifts", cfg.shifts, "number of seeded random shifts");
    app.add_option("--seed", cfg.seed, "seed for random shifts");
    app.add_option("--eps", cfg.eps, "theta truncation tolerance");
    app.add_option("--chart", cfg.chart, "chart: '', 'all' or 'xi:0,2;zeta:1'");
    app.add_option("--point", cfg.point, "curve point as [re, im] or inf");
    app.add_option("--shift", cfg.shift_json, "explicit shift(s) as JSON {a, b, lambda} or a list of them");
    app.add_option("--abel", cfg.abel_json, "explicit Abel coordinates {exp_xi, zeta, z}");
    app.add_option("--path", cfg.path, "abel-map polyline 'x0,y0;x1,y1;...' (';' or spaces)");
    app.add_option("--steps", cfg.steps, "abel-map samples per segment");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << json{{"error", "parse"}, {"message", e.what()}}.dump() << "\n";
        return exit_code(ErrorCategory::parse);
    }
    try {
        json out = run(cfg);
        std::string text = out.dump(2) + "\n";
        if (cfg.output_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream f(cfg.output_path);
            if (!f) throw ValidationError("cannot write output '" + cfg.output_path + "'");
            f << text;
        }
    } catch (const Error& e) {
        std::cerr << json{{"error", std::string(category_name(e.category()))}, {"message", e.what()}}.dump() << "\n";
        return exit_code(e.category());
    }
    return 0;
}
