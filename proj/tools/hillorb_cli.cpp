// hillorb: conversions, Hansen tables, averaging checks, orbit solving,
// family continuation and verification from the command line.
//
// Exit codes: 0 success, 2 solver non-convergence, 3 invalid input or
// config, 4 integration or numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hillorb/averaging.hpp"
#include "hillorb/elements.hpp"
#include "hillorb/hansen.hpp"
#include "hillorb/record_io.hpp"
#include "hillorb/shooting.hpp"

using namespace hillorb;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNoConvergence = 2;
constexpr int kExitBadInput = 3;
constexpr int kExitIntegration = 4;

// Sinks -------------------------------------------------------------------------

/// --out path or standard output. Files are truncated once and then written
/// record by record.
class Sink {
public:
    explicit Sink(const std::string& path)
    {
        if (path.empty() || path == "-") return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::out | std::ios::trunc);
        if (!*file_) throw ConfigError("cannot open '" + path + "' for writing");
    }
    std::ostream& os() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

void write_line(Sink& sink, const Json& j)
{
    sink.os() << dump_json(j) << '\n';
    sink.os().flush();
}

Json read_json_input(const std::string& path)
{
    if (!path.empty() && path != "-") return read_json_file(path);
    try {
        return Json::parse(std::cin);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("standard input: ") + e.what());
    }
}

/// Every record in a file holding one JSON document or one record per line.
std::vector<Json> read_records(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::vector<Json> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::parse_error& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (out.empty()) throw ConfigError("'" + path + "' holds no records");
    return out;
}

// Shared overrides ---------------------------------------------------------------

struct Overrides {
    std::string config_path;
    std::string out;
    std::optional<double> tol_integrate, tol_newton;
    std::optional<int> kmax, e_order;
};

void add_common(CLI::App* cmd, Overrides& o, bool solver_flags, bool truncation_flags)
{
    cmd->add_option("--config", o.config_path, "run configuration (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output path (default: standard output)");
    if (solver_flags) {
        cmd->add_option("--tol-integrate", o.tol_integrate, "integrator tolerance");
        cmd->add_option("--tol-newton", o.tol_newton, "Newton residual tolerance");
    }
    if (truncation_flags) {
        cmd->add_option("--kmax", o.kmax, "Hansen half-width K_max");
        cmd->add_option("--e-order", o.e_order, "retained eccentricity order");
    }
}

RunConfig load_config(const Overrides& o)
{
    RunConfig rc = o.config_path.empty() ? default_run_config() : run_config_from_json(read_json_file(o.config_path));
    if (o.tol_integrate) rc.settings.tol_integrate = *o.tol_integrate;
    if (o.tol_newton) rc.settings.tol_newton = *o.tol_newton;
    if (o.e_order) {
        rc.truncation.e_order = *o.e_order;
        if (!o.kmax) rc.truncation.K_max = std::max(rc.truncation.K_max, *o.e_order + 2);
    }
    if (o.kmax) rc.truncation.K_max = *o.kmax;
    if (!o.out.empty()) rc.out = o.out;
    // re-validate the merged document
    return run_config_from_json(run_config_to_json(rc));
}

// convert -------------------------------------------------------------------------

struct ConvertArgs {
    std::string in;
    std::string out;
    std::string to = "all";
};

int cmd_convert(const ConvertArgs& a)
{
    const Json doc = read_json_input(a.in);
    detail::reject_unknown_keys(doc, {"cartesian", "orbital", "delaunay", "poincare"}, "convert input");
    if (doc.size() != 1) throw ConfigError("convert input: give exactly one of cartesian, orbital, delaunay, poincare");

    CartesianState s;
    const std::string from = doc.begin().key();
    const Json& body = doc.begin().value();
    if (from == "cartesian")
        s = cartesian_from_json(body);
    else if (from == "orbital")
        s = orbital_to_cartesian(orbital_from_json(body));
    else if (from == "delaunay")
        s = orbital_to_cartesian(orbital_from_delaunay(delaunay_from_json(body)));
    else
        s = cartesian_from_poincare(poincare_from_json(body));

    const OrbitalElements el = cartesian_to_orbital(s);
    const DelaunayElements d = delaunay_from_orbital(el);
    const PoincareDelaunay z = poincare_from_cartesian(s);

    Json out = Json::object();
    if (a.to == "all" || a.to == "cartesian") out["cartesian"] = to_json(s);
    if (a.to == "all" || a.to == "orbital") out["orbital"] = to_json(el);
    if (a.to == "all" || a.to == "delaunay") out["delaunay"] = to_json(d);
    if (a.to == "all" || a.to == "poincare") out["poincare"] = to_json(z);
    Sink sink(a.out);
    write_line(sink, out);
    return kExitOk;
}

// hansen ---------------------------------------------------------------------------

struct HansenArgs {
    int n = 2, m = 0;
    std::optional<int> k_lo, k_hi;
    std::vector<double> e{0.0};
    std::string out;
};

int cmd_hansen(const HansenArgs& a)
{
    const int lo = a.k_lo.value_or(a.m), hi = a.k_hi.value_or(a.m);
    if (hi < lo) throw ConfigError("hansen: --k-hi must not be below --k-lo");
    for (double e : a.e)
        if (!(e >= 0.0 && e < 1.0)) throw ConfigError("hansen: eccentricity must lie in [0, 1)");
    Sink sink(a.out);
    CsvWriter csv(sink.os(), {"n", "m", "k", "e", "value"});
    for (double e : a.e) {
        const auto row = hansen_row(a.n, a.m, lo, hi, e);
        for (int k = lo; k <= hi; ++k) csv.row(a.n, a.m, k, e, row[static_cast<std::size_t>(k - lo)]);
    }
    return kExitOk;
}

// average-check ------------------------------------------------------------------

struct AverageArgs {
    Overrides o;
    std::vector<double> e{0.0, 0.05, 0.1};
    int points = 8;
    std::uint64_t seed = 1;
    int nodes = 128;
};

/// Uniform [0, 1) from the top 53 bits, identical on every platform.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int cmd_average_check(const AverageArgs& a)
{
    const RunConfig rc = load_config(a.o);
    if (a.points < 1) throw ConfigError("average-check: --points must be at least 1");
    if (a.nodes < 8) throw ConfigError("average-check: --nodes must be at least 8");
    for (double e : a.e)
        if (!(e >= 0.0 && e < 1.0)) throw ConfigError("average-check: eccentricity must lie in [0, 1)");

    Sink sink(rc.out);
    CsvWriter csv(sink.os(), {"point", "quantity", "e", "closed_form", "quadrature", "difference"});
    std::mt19937_64 rng(a.seed);
    HansenCache cache;
    int id = 0;
    for (double e : a.e) {
        for (int n = 0; n < a.points; ++n, ++id) {
            DelaunayElements d;
            d.L = 0.8 + 0.4 * unit(rng);
            d.G = d.L * std::sqrt((1.0 - e) * (1.0 + e));
            d.H = d.G * std::cos(0.05 + 2.9 * unit(rng));
            d.ell = kTwoPi * unit(rng);
            d.g = kTwoPi * unit(rng);
            d.h = kTwoPi * unit(rng);
            const PoincareDelaunay z = poincare_from_delaunay(d);
            auto F = [&](const PoincareDelaunay& x) { return F1_elements(x, rc.params, rc.truncation, &cache); };

            const double bar = F1_bar(z, rc.params, rc.truncation, &cache);
            const double bar_q = average_over_Q1(z, F, a.nodes);
            csv.row(id, "F1_bar", e, bar, bar_q, bar - bar_q);

            const double dbar = F1_doublebar(z, rc.params);
            const double dbar_q = average_over_Q3(
                z, [&](const PoincareDelaunay& y) { return average_over_Q1(y, F, a.nodes); }, a.nodes);
            csv.row(id, "F1_doublebar", e, dbar, dbar_q, dbar - dbar_q);
        }
    }
    return kExitOk;
}

// find-orbit, family, verify ------------------------------------------------------

int cmd_find_orbit(const Overrides& o)
{
    const RunConfig rc = load_config(o);
    const ShootingProblem pb = make_problem(rc.config, rc.L_star, rc.params, rc.settings);
    Sink sink(rc.out);
    try {
        OrbitRecord rec = solve_orbit(pb);
        attach_verification(rec);
        write_line(sink, record_to_json(rec));
        return kExitOk;
    } catch (const NoConvergence& err) {
        std::cerr << "find-orbit: " << err.what() << '\n';
        const PsiEvaluation ev = evaluate_psi(err.last_iterate, pb);
        const OrbitRecord rec = detail::make_record(pb, err.last_iterate, ev, err.iterations, 0, false);
        write_line(sink, record_to_json(rec, err.what()));
        return kExitNoConvergence;
    }
}

struct FamilyArgs {
    Overrides o;
    std::string parameter;
    std::vector<double> values;
    std::string csv;
};

int cmd_family(const FamilyArgs& a)
{
    RunConfig rc = load_config(a.o);
    if (!a.parameter.empty()) {
        if (a.parameter == "j2")
            rc.family.parameter = FamilyParameter::J2;
        else if (a.parameter == "epsilon_tilde")
            rc.family.parameter = FamilyParameter::EpsilonTilde;
        else
            throw ConfigError("family: --param must be 'j2' or 'epsilon_tilde'");
    }
    if (!a.values.empty()) rc.family.values = a.values;

    Sink sink(rc.out);
    std::optional<Sink> csv_sink;
    std::optional<CsvWriter> csv;
    if (!a.csv.empty()) {
        csv_sink.emplace(a.csv);
        csv.emplace(csv_sink->os(), std::vector<std::string>{"parameter", "value", "dT", "dP2", "dL", "iterations",
                                                             "residual_norm", "closure_norm", "energy_drift"});
    }
    const char* name = family_parameter_name(rc.family.parameter);
    auto emit = [&](const std::vector<OrbitRecord>& recs) {
        for (const OrbitRecord& r : recs) {
            write_line(sink, record_to_json(r));
            if (csv) {
                const double v = rc.family.parameter == FamilyParameter::J2 ? r.params.j_tilde_n(1) : r.params.epsilon_tilde();
                csv->row(name, v, r.X.dT, r.X.dP2, r.X.dL, r.iterations, r.residual_norm, r.closure_norm, r.energy_drift);
            }
        }
    };
    try {
        emit(continue_family(rc.family.parameter, rc.family.values, rc.config, rc.L_star, rc.params, rc.settings, true));
        return kExitOk;
    } catch (const PartialFamilyError& err) {
        emit(err.completed);
        std::cerr << "family: " << err.what() << " (stopped at " << format_double(err.failed_at) << ")\n";
        return kExitNoConvergence;
    }
}

struct VerifyArgs {
    std::string record;
    std::string out;
    std::optional<double> tol_integrate;
};

int cmd_verify(const VerifyArgs& a)
{
    const std::vector<Json> docs = read_records(a.record);
    std::vector<OrbitRecord> records;
    for (const Json& d : docs) records.push_back(record_from_json(d));

    Sink sink(a.out);
    for (std::size_t n = 0; n < records.size(); ++n) {
        OrbitRecord rec = records[n];
        if (a.tol_integrate) {
            detail::require_positive(*a.tol_integrate, "--tol-integrate");
            rec.settings.tol_integrate = *a.tol_integrate;
        }
        const ShootingProblem pb = problem_from_record(rec);
        const PsiEvaluation ev = evaluate_psi(rec.X, pb);
        double drift = 0.0;
        for (int i = 0; i < 3; ++i) drift = std::max(drift, std::abs(ev.psi[i] - rec.residual[i]));
        const SymmetryReport rep = verify_double_symmetry(rec);
        const bool ok = rec.converged && ev.norm() <= rec.settings.tol_newton && rep.closure <= 1e-8
            && rep.plane_a_residual <= 1e-8 && rep.plane_b_residual <= 1e-8 && rep.energy_drift <= 1e-9 && drift <= 1e-12;
        Json j{{"record", static_cast<int>(n)},
               {"converged", rec.converged},
               {"residual", ev.psi},
               {"residual_norm", ev.norm()},
               {"recompute_drift", drift},
               {"report", report_to_json(rep)},
               {"within_bounds", ok}};
        write_line(sink, j);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Doubly-symmetric periodic orbits of the spatial Hill problem with an oblate primary"};
    app.require_subcommand(1);

    ConvertArgs conv;
    auto* c_convert = app.add_subcommand("convert", "convert a state between Cartesian and element forms");
    c_convert->add_option("--in", conv.in, "input JSON (default: standard input)");
    c_convert->add_option("--out", conv.out, "output path");
    c_convert->add_option("--to", conv.to, "representation to print")
        ->check(CLI::IsMember({"all", "cartesian", "orbital", "delaunay", "poincare"}));

    HansenArgs han;
    auto* c_hansen = app.add_subcommand("hansen", "tabulate Hansen coefficients as CSV");
    c_hansen->add_option("--n", han.n, "power of r/a")->required();
    c_hansen->add_option("--m", han.m, "multiple of the true anomaly")->required();
    c_hansen->add_option("--k-lo", han.k_lo, "lowest mean-anomaly index (default m)");
    c_hansen->add_option("--k-hi", han.k_hi, "highest mean-anomaly index (default m)");
    c_hansen->add_option("--e", han.e, "eccentricities")->delimiter(',');
    c_hansen->add_option("--out", han.out, "output path");

    AverageArgs avg;
    auto* c_avg = app.add_subcommand("average-check", "closed-form averages against quadrature, as CSV");
    add_common(c_avg, avg.o, false, true);
    c_avg->add_option("--e", avg.e, "eccentricities")->delimiter(',');
    c_avg->add_option("--points", avg.points, "points per eccentricity");
    c_avg->add_option("--seed", avg.seed, "sampling seed");
    c_avg->add_option("--nodes", avg.nodes, "trapezoid nodes per angle");

    Overrides find;
    auto* c_find = app.add_subcommand("find-orbit", "solve for one doubly-symmetric orbit");
    add_common(c_find, find, true, true);

    FamilyArgs fam;
    auto* c_family = app.add_subcommand("family", "continue a family in J2 or eps~");
    add_common(c_family, fam.o, true, true);
    c_family->add_option("--param", fam.parameter, "j2 or epsilon_tilde");
    c_family->add_option("--values", fam.values, "parameter values")->delimiter(',');
    c_family->add_option("--csv", fam.csv, "summary CSV path");

    VerifyArgs ver;
    auto* c_verify = app.add_subcommand("verify", "re-check stored orbit records");
    c_verify->add_option("--record", ver.record, "record file (JSON, one record per line)")->required();
    c_verify->add_option("--out", ver.out, "output path");
    c_verify->add_option("--tol-integrate", ver.tol_integrate, "integrator tolerance override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitBadInput;
    }

    try {
        if (c_convert->parsed()) return cmd_convert(conv);
        if (c_hansen->parsed()) return cmd_hansen(han);
        if (c_avg->parsed()) return cmd_average_check(avg);
        if (c_find->parsed()) return cmd_find_orbit(find);
        if (c_family->parsed()) return cmd_family(fam);
        if (c_verify->parsed()) return cmd_verify(ver);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const NoConvergence& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNoConvergence;
    } catch (const IntegrationFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIntegration;
    } catch (const NumericalFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIntegration;
    }
    return kExitBadInput;
}
