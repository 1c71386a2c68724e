#pragma once

// JSON and CSV plumbing for run configurations and orbit records. Floats are
// written with 17 significant digits so every value round-trips exactly.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hillorb/averaging.hpp"
#include "hillorb/errors.hpp"
#include "hillorb/shooting.hpp"

namespace hillorb {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v)
{
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    // keep it a JSON float so readers do not narrow it to an integer
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

namespace detail {

inline void dump_compact(const Json& j, std::string& out)
{
    switch (j.type()) {
    case Json::value_t::object: {
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ',';
            first = false;
            out += Json(it.key()).dump();
            out += ':';
            dump_compact(it.value(), out);
        }
        out += '}';
        break;
    }
    case Json::value_t::array: {
        out += '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out += ',';
            dump_compact(j[i], out);
        }
        out += ']';
        break;
    }
    case Json::value_t::number_float: out += format_double(j.get<double>()); break;
    default: out += j.dump();
    }
}

} // namespace detail

/// One-line JSON with %.17g floats and non-finite values as null.
inline std::string dump_json(const Json& j)
{
    std::string out;
    detail::dump_compact(j, out);
    return out;
}

/// Raised for malformed or out-of-range configuration input.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Small typed accessors ------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

inline double get_number(const Json& j, const char* key, double fallback, const std::string& where)
{
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

inline int get_int(const Json& j, const char* key, int fallback, const std::string& where)
{
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<int>();
}

inline long get_long(const Json& j, const char* key, long fallback, const std::string& where)
{
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<long>();
}

inline bool get_bool(const Json& j, const char* key, bool fallback, const std::string& where)
{
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
    return j.at(key).get<bool>();
}

inline std::string get_string(const Json& j, const char* key, const std::string& fallback, const std::string& where)
{
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return j.at(key).get<std::string>();
}

inline std::vector<double> get_numbers(const Json& j, const char* key, const std::string& where)
{
    std::vector<double> out;
    if (!j.contains(key)) return out;
    const Json& v = j.at(key);
    if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array of numbers");
    for (const Json& x : v) {
        if (!x.is_number()) throw ConfigError(where + "." + key + ": expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline Json vec3_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

inline Vec3 vec3_from(const Json& j, const char* key, const std::string& where)
{
    const auto v = get_numbers(j, key, where);
    if (v.size() != 3) throw ConfigError(where + "." + key + ": expected 3 components");
    return {v[0], v[1], v[2]};
}

inline void require_positive(double v, const std::string& what)
{
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be positive and finite");
}

} // namespace detail

// Element records ---------------------------------------------------------------

inline Json to_json(const CartesianState& s) { return {{"xi", detail::vec3_json(s.xi)}, {"eta", detail::vec3_json(s.eta)}}; }

inline Json to_json(const OrbitalElements& el)
{
    return {{"a", el.a}, {"e", el.e}, {"inc", el.inc}, {"Omega", el.Omega}, {"omega", el.omega}, {"M", el.M}};
}

inline Json to_json(const DelaunayElements& d)
{
    return {{"L", d.L},   {"G", d.G}, {"H", d.H},
            {"ell", d.ell}, {"g", d.g}, {"h", d.h},
            {"circular", d.circular}, {"equatorial", d.equatorial}};
}

inline Json to_json(const PoincareDelaunay& z)
{
    return {{"Q1", z.Q1}, {"Q2", z.Q2}, {"Q3", z.Q3}, {"P1", z.P1}, {"P2", z.P2}, {"P3", z.P3}};
}

inline CartesianState cartesian_from_json(const Json& j)
{
    detail::reject_unknown_keys(j, {"xi", "eta"}, "cartesian");
    return {detail::vec3_from(j, "xi", "cartesian"), detail::vec3_from(j, "eta", "cartesian")};
}

inline OrbitalElements orbital_from_json(const Json& j)
{
    const std::string w = "orbital";
    detail::reject_unknown_keys(j, {"a", "e", "inc", "Omega", "omega", "M"}, w);
    OrbitalElements el;
    el.a = detail::get_number(j, "a", el.a, w);
    el.e = detail::get_number(j, "e", el.e, w);
    el.inc = detail::get_number(j, "inc", el.inc, w);
    el.Omega = detail::get_number(j, "Omega", el.Omega, w);
    el.omega = detail::get_number(j, "omega", el.omega, w);
    el.M = detail::get_number(j, "M", el.M, w);
    return el;
}

inline DelaunayElements delaunay_from_json(const Json& j)
{
    const std::string w = "delaunay";
    detail::reject_unknown_keys(j, {"L", "G", "H", "ell", "g", "h", "circular", "equatorial"}, w);
    DelaunayElements d;
    d.L = detail::get_number(j, "L", d.L, w);
    d.G = detail::get_number(j, "G", d.G, w);
    d.H = detail::get_number(j, "H", d.H, w);
    d.ell = detail::get_number(j, "ell", d.ell, w);
    d.g = detail::get_number(j, "g", d.g, w);
    d.h = detail::get_number(j, "h", d.h, w);
    d.circular = detail::get_bool(j, "circular", false, w);
    d.equatorial = detail::get_bool(j, "equatorial", false, w);
    return d;
}

inline PoincareDelaunay poincare_from_json(const Json& j)
{
    const std::string w = "poincare";
    detail::reject_unknown_keys(j, {"Q1", "Q2", "Q3", "P1", "P2", "P3"}, w);
    PoincareDelaunay z;
    z.Q1 = detail::get_number(j, "Q1", 0.0, w);
    z.Q2 = detail::get_number(j, "Q2", 0.0, w);
    z.Q3 = detail::get_number(j, "Q3", 0.0, w);
    z.P1 = detail::get_number(j, "P1", 0.0, w);
    z.P2 = detail::get_number(j, "P2", 0.0, w);
    z.P3 = detail::get_number(j, "P3", 0.0, w);
    return z;
}

// Run configuration -----------------------------------------------------------

struct FamilySpec {
    FamilyParameter parameter = FamilyParameter::J2;
    std::vector<double> values;
};

struct RunConfig {
    HillParams params;
    SymmetryConfig config;
    double L_star = 1.0;
    TruncationSpec truncation;
    ShootingSettings settings;
    FamilySpec family;
    std::string out; // empty: standard output
};

/// Defaults: eps~ = 1e-3, J~2 = 0.01, a_e = 0.5, i = j = k = 0, m = 1, L* = 1.
inline RunConfig default_run_config()
{
    RunConfig rc;
    rc.params = HillParams::from_epsilon_tilde(1e-3);
    rc.params.a_e = 0.5;
    rc.params.b_e = 0.5;
    rc.params.j_tilde = {0.01, 0.0};
    rc.params.n_zonal = 2;
    return rc;
}

inline const char* family_parameter_name(FamilyParameter p) { return p == FamilyParameter::J2 ? "j2" : "epsilon_tilde"; }

inline Json params_to_json(const HillParams& p)
{
    return {{"epsilon", p.epsilon},   {"epsilon_tilde", p.epsilon_tilde()}, {"a_e", p.a_e},
            {"b_e", p.b_e},           {"j_tilde", p.j_tilde},               {"n_zonal", p.n_zonal},
            {"mu", p.mu},             {"perturbations", p.perturbations}};
}

/// `epsilon` wins over `epsilon_tilde` when both are present, so records
/// written by params_to_json reload bit for bit.
inline HillParams params_from_json(const Json& j, HillParams p)
{
    const std::string w = "params";
    detail::reject_unknown_keys(j, {"epsilon", "epsilon_tilde", "a_e", "b_e", "j_tilde", "n_zonal", "mu", "perturbations"},
                                w);
    if (j.contains("epsilon"))
        p.epsilon = detail::get_number(j, "epsilon", p.epsilon, w);
    else if (j.contains("epsilon_tilde")) {
        const double et = detail::get_number(j, "epsilon_tilde", 0.0, w);
        detail::require_positive(et, "params.epsilon_tilde");
        p.epsilon = std::cbrt(et);
    }
    p.a_e = detail::get_number(j, "a_e", p.a_e, w);
    p.b_e = detail::get_number(j, "b_e", p.b_e, w);
    if (j.contains("j_tilde")) p.j_tilde = detail::get_numbers(j, "j_tilde", w);
    p.n_zonal = detail::get_int(j, "n_zonal", p.n_zonal, w);
    p.mu = detail::get_number(j, "mu", p.mu, w);
    p.perturbations = detail::get_bool(j, "perturbations", p.perturbations, w);
    detail::require_positive(p.epsilon, "params.epsilon");
    if (!(p.a_e > 0.0 && p.b_e > 0.0 && p.b_e <= p.a_e)) throw ConfigError("params: need 0 < b_e <= a_e");
    try {
        p.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return p;
}

inline Json config_to_json(const SymmetryConfig& c) { return {{"i", c.i}, {"j", c.j}, {"k", c.k}, {"m", c.m}}; }

inline SymmetryConfig symmetry_from_json(const Json& j)
{
    const std::string w = "config";
    detail::reject_unknown_keys(j, {"i", "j", "k", "m"}, w);
    SymmetryConfig c;
    c.i = detail::get_int(j, "i", c.i, w);
    c.j = detail::get_int(j, "j", c.j, w);
    c.k = detail::get_int(j, "k", c.k, w);
    c.m = detail::get_int(j, "m", c.m, w);
    try {
        c.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

inline Json settings_to_json(const ShootingSettings& s)
{
    return {{"tol_integrate", s.tol_integrate},
            {"tol_newton", s.tol_newton},
            {"precision", s.precision == Precision::Extended ? "extended" : "double"},
            {"max_iterations", s.max_iterations},
            {"p3_fraction", s.p3_fraction},
            {"split", s.split == ActionSplit::IntoP1 ? "P1" : "P3"},
            {"polish_steps", s.polish_steps}};
}

inline ShootingSettings settings_from_json(const Json& j, ShootingSettings s)
{
    const std::string w = "settings";
    detail::reject_unknown_keys(
        j, {"tol_integrate", "tol_newton", "precision", "max_iterations", "p3_fraction", "split", "polish_steps"}, w);
    s.tol_integrate = detail::get_number(j, "tol_integrate", s.tol_integrate, w);
    s.tol_newton = detail::get_number(j, "tol_newton", s.tol_newton, w);
    const std::string prec = detail::get_string(j, "precision", s.precision == Precision::Extended ? "extended" : "double", w);
    if (prec == "extended")
        s.precision = Precision::Extended;
    else if (prec == "double")
        s.precision = Precision::Double;
    else
        throw ConfigError("settings.precision: expected 'double' or 'extended'");
    s.max_iterations = detail::get_int(j, "max_iterations", s.max_iterations, w);
    s.p3_fraction = detail::get_number(j, "p3_fraction", s.p3_fraction, w);
    const std::string split = detail::get_string(j, "split", s.split == ActionSplit::IntoP1 ? "P1" : "P3", w);
    if (split == "P1")
        s.split = ActionSplit::IntoP1;
    else if (split == "P3")
        s.split = ActionSplit::IntoP3;
    else
        throw ConfigError("settings.split: expected 'P1' or 'P3'");
    s.polish_steps = detail::get_int(j, "polish_steps", s.polish_steps, w);
    detail::require_positive(s.tol_integrate, "settings.tol_integrate");
    detail::require_positive(s.tol_newton, "settings.tol_newton");
    if (s.max_iterations < 1) throw ConfigError("settings.max_iterations must be at least 1");
    if (s.polish_steps < 0) throw ConfigError("settings.polish_steps must be non-negative");
    if (!(s.p3_fraction > 0.0 && s.p3_fraction <= 1.0)) throw ConfigError("settings.p3_fraction must lie in (0, 1]");
    return s;
}

inline Json run_config_to_json(const RunConfig& rc)
{
    return {{"params", params_to_json(rc.params)},
            {"config", config_to_json(rc.config)},
            {"L_star", rc.L_star},
            {"truncation", {{"K_max", rc.truncation.K_max}, {"e_order", rc.truncation.e_order}}},
            {"settings", settings_to_json(rc.settings)},
            {"family", {{"parameter", family_parameter_name(rc.family.parameter)}, {"values", rc.family.values}}},
            {"out", rc.out}};
}

/// Validates the whole document before anything is computed. Missing keys
/// keep their defaults; unknown keys are errors.
inline RunConfig run_config_from_json(const Json& j)
{
    detail::reject_unknown_keys(j, {"params", "config", "L_star", "truncation", "settings", "family", "out"}, "run config");
    RunConfig rc = default_run_config();
    if (j.contains("params")) rc.params = params_from_json(j.at("params"), rc.params);
    if (j.contains("config")) rc.config = symmetry_from_json(j.at("config"));
    rc.L_star = detail::get_number(j, "L_star", rc.L_star, "run config");
    detail::require_positive(rc.L_star, "L_star");
    if (j.contains("truncation")) {
        const Json& t = j.at("truncation");
        detail::reject_unknown_keys(t, {"K_max", "e_order"}, "truncation");
        rc.truncation.K_max = detail::get_int(t, "K_max", rc.truncation.K_max, "truncation");
        rc.truncation.e_order = detail::get_int(t, "e_order", rc.truncation.e_order, "truncation");
    }
    try {
        rc.truncation.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (j.contains("settings")) rc.settings = settings_from_json(j.at("settings"), rc.settings);
    if (j.contains("family")) {
        const Json& f = j.at("family");
        detail::reject_unknown_keys(f, {"parameter", "values"}, "family");
        const std::string which = detail::get_string(f, "parameter", "j2", "family");
        if (which == "j2")
            rc.family.parameter = FamilyParameter::J2;
        else if (which == "epsilon_tilde")
            rc.family.parameter = FamilyParameter::EpsilonTilde;
        else
            throw ConfigError("family.parameter: expected 'j2' or 'epsilon_tilde'");
        rc.family.values = detail::get_numbers(f, "values", "family");
    }
    rc.out = detail::get_string(j, "out", rc.out, "run config");
    return rc;
}

inline Json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

// Orbit records ---------------------------------------------------------------

inline Json record_to_json(const OrbitRecord& r, const std::string& failure = {})
{
    Json j{{"config", config_to_json(r.config)},
           {"lift", {{"q", r.lift.q}, {"k_eff", r.lift.k_eff}, {"m_eff", r.lift.m_eff}, {"L_star", r.lift.L_star}}},
           {"params", params_to_json(r.params)},
           {"settings", settings_to_json(r.settings)},
           {"L_star", r.L_star},
           {"X", {{"dT", r.X.dT}, {"dP2", r.X.dP2}, {"dL", r.X.dL}}},
           {"quarter_period", r.quarter_period},
           {"residual", r.residual},
           {"residual_norm", r.residual_norm},
           {"iterations", r.iterations},
           {"polish_iterations", r.polish_iterations},
           {"converged", r.converged},
           {"closure_norm", r.closure_norm},
           {"energy_drift", r.energy_drift},
           {"initial_state", {{"poincare_delaunay", to_json(r.initial_pd)}, {"cartesian", to_json(r.initial_cartesian)}}}};
    if (!failure.empty()) j["failure"] = failure;
    return j;
}

inline OrbitRecord record_from_json(const Json& j)
{
    const std::string w = "record";
    detail::reject_unknown_keys(j,
                                {"config", "lift", "params", "settings", "L_star", "X", "quarter_period", "residual",
                                 "residual_norm", "iterations", "polish_iterations", "converged", "closure_norm",
                                 "energy_drift", "initial_state", "failure"},
                                w);
    for (const char* key : {"config", "lift", "params", "settings", "X", "initial_state"})
        if (!j.contains(key)) throw ConfigError(std::string("record: missing '") + key + "'");
    OrbitRecord r;
    r.config = symmetry_from_json(j.at("config"));
    const Json& lift = j.at("lift");
    detail::reject_unknown_keys(lift, {"q", "k_eff", "m_eff", "L_star"}, "record.lift");
    r.lift.q = detail::get_long(lift, "q", 0, "record.lift");
    r.lift.k_eff = detail::get_long(lift, "k_eff", r.config.k, "record.lift");
    r.lift.m_eff = detail::get_long(lift, "m_eff", r.config.m, "record.lift");
    r.lift.L_star = detail::get_number(lift, "L_star", 0.0, "record.lift");
    if (r.lift.k_eff != r.config.k + 2 * r.lift.q || r.lift.m_eff != r.config.m + 2 * r.lift.q)
        throw ConfigError("record.lift: lifted integers do not match config and q");
    r.params = params_from_json(j.at("params"), HillParams{});
    r.settings = settings_from_json(j.at("settings"), ShootingSettings{});
    r.L_star = detail::get_number(j, "L_star", r.lift.L_star, w);
    detail::require_positive(r.L_star, "record.L_star");
    const Json& X = j.at("X");
    detail::reject_unknown_keys(X, {"dT", "dP2", "dL"}, "record.X");
    r.X = {detail::get_number(X, "dT", 0.0, "record.X"), detail::get_number(X, "dP2", 0.0, "record.X"),
           detail::get_number(X, "dL", 0.0, "record.X")};
    r.quarter_period = detail::get_number(j, "quarter_period", r.config.T0_star() + r.X.dT, w);
    const auto res = detail::get_numbers(j, "residual", w);
    if (res.size() == 3) r.residual = {res[0], res[1], res[2]};
    r.residual_norm = detail::get_number(j, "residual_norm", 0.0, w);
    r.iterations = detail::get_int(j, "iterations", 0, w);
    r.polish_iterations = detail::get_int(j, "polish_iterations", 0, w);
    r.converged = detail::get_bool(j, "converged", false, w);
    r.closure_norm = detail::get_number(j, "closure_norm", std::numeric_limits<double>::quiet_NaN(), w);
    r.energy_drift = detail::get_number(j, "energy_drift", std::numeric_limits<double>::quiet_NaN(), w);
    const Json& init = j.at("initial_state");
    detail::reject_unknown_keys(init, {"poincare_delaunay", "cartesian"}, "record.initial_state");
    if (!init.contains("poincare_delaunay") || !init.contains("cartesian"))
        throw ConfigError("record.initial_state: both representations are required");
    r.initial_pd = poincare_from_json(init.at("poincare_delaunay"));
    r.initial_cartesian = cartesian_from_json(init.at("cartesian"));
    return r;
}

/// The problem a record was solved on, rebuilt from its stored parameters.
inline ShootingProblem problem_from_record(const OrbitRecord& r)
{
    ShootingProblem pb;
    pb.config = r.config;
    pb.lift = r.lift;
    pb.params = r.params;
    pb.settings = r.settings;
    return pb;
}

inline Json report_to_json(const SymmetryReport& rep)
{
    return {{"closure", rep.closure},
            {"plane_a_residual", rep.plane_a_residual},
            {"plane_b_residual", rep.plane_b_residual},
            {"mirror_residual", rep.mirror_residual},
            {"energy_drift", rep.energy_drift}};
}

// CSV -----------------------------------------------------------------------------

class CsvWriter {
public:
    CsvWriter(std::ostream& os, std::vector<std::string> header) : os_(os), columns_(header.size())
    {
        row_strings(header);
    }

    template <class... Cells>
    void row(const Cells&... cells)
    {
        if (sizeof...(cells) != columns_) throw std::logic_error("CsvWriter: column count mismatch");
        std::vector<std::string> out;
        (out.push_back(cell(cells)), ...);
        row_strings(out);
    }

private:
    static std::string cell(double v) { return format_double(v) == "null" ? "nan" : format_double(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }

    void row_strings(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << '\n';
        os_.flush();
    }

    std::ostream& os_;
    std::size_t columns_;
};

} // namespace hillorb
