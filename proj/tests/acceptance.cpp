// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hillorb/averaging.hpp"
#include "hillorb/elements.hpp"
#include "hillorb/hansen.hpp"
#include "hillorb/integrate.hpp"
#include "hillorb/model.hpp"
#include "hillorb/shooting.hpp"

#include "support.hpp"

using namespace hillorb;
using hillorb::testing::uniform;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

HillParams default_params(double eps_tilde = 1e-3, double j2 = 0.01)
{
    HillParams p = HillParams::from_epsilon_tilde(eps_tilde);
    p.a_e = 0.5;
    p.b_e = 0.5;
    p.j_tilde = {j2, 0.0};
    p.n_zonal = 2;
    return p;
}

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// 1 ----------------------------------------------------------------------------

Outcome element_round_trips()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240101);
    double worst = 0.0;
    auto chain = [&](const OrbitalElements& el) {
        const CartesianState s0 = orbital_to_cartesian(el);
        const double scale = testing::state_scale(s0);
        const OrbitalElements el1 = cartesian_to_orbital(s0);
        const DelaunayElements d = delaunay_from_orbital(el1);
        const PoincareDelaunay p = poincare_from_delaunay(d);
        // back through every representation
        const CartesianState s_pd = cartesian_from_poincare(p);
        const CartesianState s_del = orbital_to_cartesian(orbital_from_delaunay(delaunay_from_poincare(p)));
        const PoincareDelaunay p_direct = poincare_from_cartesian(s0);
        worst = std::max({worst, testing::max_abs(s_pd, s0) / scale, testing::max_abs(s_del, s0) / scale,
                          testing::pd_distance(p_direct, p) / std::max(1.0, p.L())});
    };
    for (int n = 0; n < 1000; ++n) chain(testing::random_orbital(rng, 0.8));
    // the e = 0 end of the sampled range, exactly
    const OrbitalElements base{1.3, 0.0, 0.7, 0.4, 1.1, 2.0};
    chain(base);

    // e -> 0: PD outputs stay finite and converge to the circular point.
    // Below ~1e-8 the gap sits at rounding level, so only growth above that floor counts.
    const PoincareDelaunay p0 = poincare_from_cartesian(orbital_to_cartesian(base));
    double prev_gap = std::numeric_limits<double>::infinity();
    bool monotone = true, finite = true;
    for (int k = 1; k <= 12; ++k) {
        OrbitalElements el = base;
        el.e = std::pow(10.0, -k);
        const PoincareDelaunay p = poincare_from_cartesian(orbital_to_cartesian(el));
        for (double v : {p.Q1, p.Q2, p.Q3, p.P1, p.P2, p.P3}) finite = finite && std::isfinite(v);
        // |P2|, |Q2| ~ e sqrt(L): compare the actions and the smooth angle sum
        const double gap = std::max({std::abs(p.P1 - p0.P1), std::abs(p.P3 - p0.P3), std::hypot(p.P2, p.Q2),
                                     std::abs(std::remainder(p.Q1 - p0.Q1, kTwoPi))});
        monotone = monotone && (gap < prev_gap || gap <= 1e-15);
        prev_gap = gap;
    }
    const double dt = seconds_since(t0);
    const bool pass = worst <= 1e-10 && monotone && finite && prev_gap <= 1e-10 && dt < 1.0;
    return {pass, fmt("worst relative error %.3e (tol 1e-10); e=1e-k sequence monotone=%d, final gap %.2e; %.3f s (limit 1 s)",
                      worst, int(monotone), prev_gap, dt)};
}

// 2 ----------------------------------------------------------------------------

Outcome hansen_closed_forms()
{
    const auto t0 = Clock::now();
    double worst_closed = 0.0, worst_delta = 0.0;
    for (int n = 1; n <= 10; ++n) {
        const double e = 0.05 * n;
        worst_closed = std::max(worst_closed, std::abs(hansen_quadrature({2, 0, 0, e}) - *hansen_closed_form(2, 0, 0, e)));
        worst_closed = std::max(worst_closed, std::abs(hansen_quadrature({-3, 0, 0, e}) - *hansen_closed_form(-3, 0, 0, e)));
    }
    for (const auto& [n, m] : kF1HansenPairs) {
        const auto row = hansen_row(n, m, -8, 8, 0.0);
        for (int k = -8; k <= 8; ++k)
            worst_delta = std::max(worst_delta, std::abs(row[static_cast<std::size_t>(k + 8)] - (k == m ? 1.0 : 0.0)));
    }
    const double dt = seconds_since(t0);
    return {worst_closed <= 1e-12 && worst_delta <= 1e-13 && dt < 1.0,
            fmt("closed forms max |diff| %.3e (tol 1e-12); delta property max |diff| %.3e (tol 1e-13); %.3f s (limit 1 s)",
                worst_closed, worst_delta, dt)};
}

// 3 ----------------------------------------------------------------------------

Outcome series_vs_cartesian()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(7);
    const HillParams hp = default_params();
    const TruncationSpec trunc{8, 3};
    HansenCache cache;
    double worst = 0.0;
    for (int n = 0; n < 200; ++n) {
        const PoincareDelaunay z = testing::random_poincare(rng, 0.1);
        const double series = F1_elements(z, hp, trunc, &cache);
        const double exact = F1_cartesian(cartesian_from_poincare(z).xi, hp);
        worst = std::max(worst, std::abs(series - exact) / (1.0 + std::abs(exact)));
    }
    const double dt = seconds_since(t0);
    return {worst <= 1e-6 && dt < 5.0,
            fmt("max |F1_elements - F1_cartesian|/(1+|F1|) %.3e (tol 1e-6); %.2f s (limit 5 s)", worst, dt)};
}

// 4 ----------------------------------------------------------------------------

Outcome averaging_chain()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(11);
    const HillParams hp = default_params();
    const TruncationSpec trunc;
    HansenCache cache;
    auto F = [&](const PoincareDelaunay& x) { return F1_elements(x, hp, trunc, &cache); };
    double worst_bar = 0.0, worst_dbar = 0.0;
    for (int n = 0; n < 10; ++n) {
        PoincareDelaunay z = testing::random_poincare(rng, 0.1);
        worst_bar = std::max(worst_bar, std::abs(F1_bar(z, hp, trunc, &cache) - average_over_Q1(z, F)));
    }
    for (int n = 0; n < 4; ++n) {
        // exactly e = 0.1
        DelaunayElements d;
        d.L = uniform(rng, 0.8, 1.2);
        d.G = d.L * std::sqrt(0.99);
        d.H = d.G * std::cos(uniform(rng, 0.05, 2.95));
        d.ell = uniform(rng, 0, kTwoPi);
        d.g = uniform(rng, 0, kTwoPi);
        d.h = uniform(rng, 0, kTwoPi);
        const PoincareDelaunay z = poincare_from_delaunay(d);
        const double quad = average_over_Q3(z, [&](const PoincareDelaunay& y) { return average_over_Q1(y, F); });
        worst_dbar = std::max(worst_dbar, std::abs(F1_doublebar(z, hp) - quad));
    }
    const double dt = seconds_since(t0);
    return {worst_bar <= 1e-8 && worst_dbar <= 5e-4 && dt < 10.0,
            fmt("F1_bar vs Q1 quadrature %.3e (tol 1e-8); F1_doublebar vs double quadrature at e=0.1 %.3e (tol 5e-4); %.2f s "
                "(limit 10 s)",
                worst_bar, worst_dbar, dt)};
}

// 5 ----------------------------------------------------------------------------

Outcome homological_identity()
{
    std::mt19937_64 rng(5);
    const HillParams hp = default_params();
    const TruncationSpec trunc;
    HansenCache cache;
    double worst = 0.0;
    for (int n = 0; n < 50; ++n) {
        const PoincareDelaunay z = testing::random_poincare(rng, 0.1);
        const double L = z.L();
        const double h = 1e-5;
        auto W = [&](PoincareDelaunay x) { return W2_eval(x, hp, trunc, &cache); };
        PoincareDelaunay a = z, b = z;
        a.Q1 += h;
        b.Q1 -= h;
        const double d1 = (W(a).W1 - W(b).W1) / (2 * h);
        a = z;
        b = z;
        a.Q3 += h;
        b.Q3 -= h;
        const double d3 = (W(a).W2 - W(b).W2) / (2 * h);
        const double F1 = F1_elements(z, hp, trunc, &cache);
        const double res = F1_doublebar(z, hp) - F1 - (d1 + d3) / (L * L * L);
        worst = std::max(worst, std::abs(res) / (1.0 + std::abs(F1)));
    }
    return {worst <= 1e-5, fmt("max normalized homological residual over 50 points %.3e (tol 1e-5)", worst)};
}

// 6 ----------------------------------------------------------------------------

Outcome energy_conservation()
{
    const auto t0 = Clock::now();
    const HillParams p = default_params();
    const ShootingProblem pb = make_problem(SymmetryConfig{}, 1.0, p);
    const PoincareDelaunay z0 = initial_state(pb, {});
    const FlowResult r = integrate_full(z0, 4.0 * pb.T0_star(), p, 1e-12);
    return {r.energy_drift <= 1e-9,
            fmt("relative drift of K over 4 T0* at tol 1e-12: %.3e (tol 1e-9); %zu steps, %.1f s", r.energy_drift, r.steps,
                seconds_since(t0))};
}

// 7 ----------------------------------------------------------------------------

Outcome jacobian_anchor()
{
    const auto t0 = Clock::now();
    HillParams p = default_params();
    p.perturbations = false;
    const SymmetryConfig cfg;
    const ShootingProblem pb = make_problem(cfg, 1.0, p);
    const Matrix3 J = psi_jacobian({}, pb);
    const Matrix3 C = psi_jacobian_closed_form({}, cfg, pb.L_star());
    const double worst = (J - C).cwiseAbs().maxCoeff();
    const double det_gap = std::abs(std::abs(J.determinant()) - 3.0 / pb.L_star());
    return {worst <= 1e-8 && det_gap <= 1e-8,
            fmt("max entry difference %.3e (tol 1e-8); ||det| - 3/L*| %.3e (tol 1e-8); %.1f s", worst, det_gap,
                seconds_since(t0))};
}

// 8 ----------------------------------------------------------------------------

Outcome existence_run()
{
    const auto t0 = Clock::now();
    const ShootingProblem pb = make_problem(SymmetryConfig{}, 1.0, default_params());
    try {
        OrbitRecord rec = solve_orbit(pb);
        const SymmetryReport rep = attach_verification(rec);
        const double dt = seconds_since(t0);
        const bool pass = rec.iterations <= 10 && rec.residual_norm <= 1e-10 && rep.closure <= 1e-8
            && rep.plane_a_residual <= 1e-8 && rep.plane_b_residual <= 1e-8 && dt < 60.0;
        return {pass, fmt("%d Newton iterations (limit 10), |Psi| %.3e (tol 1e-10), closure %.3e (tol 1e-8), plane residuals "
                          "t=0 %.3e t=T %.3e (tol 1e-8), %.1f s (limit 60 s)",
                          rec.iterations, rec.residual_norm, rep.closure, rep.plane_a_residual, rep.plane_b_residual, dt)};
    } catch (const std::exception& e) {
        return {false, std::string("solver error: ") + e.what()};
    }
}

// 9 ----------------------------------------------------------------------------

Outcome epsilon_scaling()
{
    const auto t0 = Clock::now();
    const std::vector<double> eps{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
    std::vector<double> xs, psis;
    std::string line;
    try {
        for (double et : eps) {
            const ShootingProblem pb = make_problem(SymmetryConfig{}, 1.0, default_params(et));
            psis.push_back(evaluate_psi({}, pb).norm());
            xs.push_back(solve_orbit(pb).X.norm());
            line += fmt(" [%.0e: |X| %.3e |Psi0| %.3e]", et, xs.back(), psis.back());
        }
    } catch (const std::exception& e) {
        return {false, std::string("solver error: ") + e.what() + line};
    }
    const double sx = loglog_slope(eps, xs), sp = loglog_slope(eps, psis);
    return {sx >= 0.9 && sp >= 0.9,
            fmt("slope |X| %.4f, slope |Psi(0)| %.4f (min 0.9); %.0f s;", sx, sp, seconds_since(t0)) + line};
}

// 10 ---------------------------------------------------------------------------

Outcome oblateness_family()
{
    const auto t0 = Clock::now();
    const std::vector<double> j2{0.0, 0.02, 0.04, 0.06, 0.08, 0.1};
    try {
        const auto recs = continue_family(FamilyParameter::J2, j2, SymmetryConfig{}, 1.0, default_params(), {}, false);
        bool ok = recs.size() == j2.size();
        int worst_it = 0;
        double worst_res = 0.0, worst_closure = 0.0, worst_plane = 0.0;
        for (const OrbitRecord& r : recs) {
            const SymmetryReport rep = verify_double_symmetry(r);
            worst_it = std::max(worst_it, r.iterations);
            worst_res = std::max(worst_res, r.residual_norm);
            worst_closure = std::max(worst_closure, rep.closure);
            worst_plane = std::max({worst_plane, rep.plane_a_residual, rep.plane_b_residual});
        }
        ok = ok && worst_it <= 10 && worst_res <= 1e-10 && worst_closure <= 1e-8 && worst_plane <= 1e-8;

        // the J2 = 0 member against the classical Hill problem with no zonal terms at all
        HillParams hill = default_params();
        hill.j_tilde.clear();
        hill.n_zonal = 0;
        const OrbitRecord classical = solve_orbit(make_problem(SymmetryConfig{}, 1.0, hill));
        const SymmetryReport rep0 = verify_double_symmetry(classical);
        const double gap = (Eigen::Vector3d(recs[0].X.dT, recs[0].X.dP2, recs[0].X.dL)
                            - Eigen::Vector3d(classical.X.dT, classical.X.dP2, classical.X.dL))
                               .cwiseAbs()
                               .maxCoeff();
        ok = ok && gap <= 1e-10 && rep0.closure <= 1e-8 && rep0.plane_b_residual <= 1e-8;
        return {ok, fmt("%zu/6 steps converged, max iterations %d (limit 10), max |Psi| %.2e, max closure %.3e, max plane "
                        "residual %.3e (tol 1e-8); J2=0 vs classical Hill |dX| %.2e, closure %.3e; %.0f s",
                        recs.size(), worst_it, worst_res, worst_closure, worst_plane, gap, rep0.closure,
                        seconds_since(t0))};
    } catch (const PartialFamilyError& e) {
        return {false, fmt("stopped at J2 = %g after %zu steps: %s", e.failed_at, e.completed.size(), e.what())};
    } catch (const std::exception& e) {
        return {false, std::string("error: ") + e.what()};
    }
}

// 11 ---------------------------------------------------------------------------

Outcome restricted_limit()
{
    std::mt19937_64 rng(3);
    const double a_e = 0.5;
    const std::vector<double> J{0.01, -0.001}; // physical J_2, J_4
    const std::vector<double> C{-J[0], -J[1]};
    struct PhaseState {
        Vec3 x, y;
    };
    auto sample = [&] {
        Vec3 x;
        double r;
        do {
            x = {uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5)};
            r = norm(x);
        } while (r < 0.6 || r > 1.5);
        return PhaseState{x, {uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)}};
    };
    const PhaseState ref = sample();
    std::vector<PhaseState> states;
    for (int n = 0; n < 20; ++n) states.push_back(sample());

    auto scaled_Ha = [&](const PhaseState& s, double mu) {
        const double c = std::cbrt(mu);
        const Vec3 x{c * s.x[0], c * s.x[1], c * s.x[2]}, y{c * s.y[0], c * s.y[1], c * s.y[2]};
        return eval_Ha(x, y, mu, c * a_e, J) / (c * c);
    };
    const std::vector<double> mus{1e-3, 1e-5, 1e-7};
    std::vector<std::vector<double>> diff(states.size());
    for (double mu : mus) {
        const double constant = scaled_Ha(ref, mu) - eval_Hb(ref.x, ref.y, a_e, C);
        for (std::size_t i = 0; i < states.size(); ++i)
            diff[i].push_back(std::abs(scaled_Ha(states[i], mu) - constant - eval_Hb(states[i].x, states[i].y, a_e, C)));
    }
    bool monotone = true;
    double worst_first = 0.0, worst_last = 0.0;
    for (const auto& d : diff) {
        monotone = monotone && d[1] < d[0] && d[2] < d[1];
        worst_first = std::max(worst_first, d[0]);
        worst_last = std::max(worst_last, d[2]);
    }
    return {monotone, fmt("pointwise differences decrease over mu = 1e-3, 1e-5, 1e-7 at all 20 states: %s; max diff %.3e -> "
                          "%.3e",
                          monotone ? "yes" : "no", worst_first, worst_last)};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"element round-trips", element_round_trips},
        {"Hansen closed forms", hansen_closed_forms},
        {"series vs Cartesian F1", series_vs_cartesian},
        {"averaging chain", averaging_chain},
        {"homological identity", homological_identity},
        {"energy conservation", energy_conservation},
        {"Jacobian anchor", jacobian_anchor},
        {"existence run", existence_run},
        {"O(eps~) scaling", epsilon_scaling},
        {"oblateness family", oblateness_family},
        {"mu -> 0 limit", restricted_limit},
    };
    int failed = 0;
    for (std::size_t n = 0; n < criteria.size(); ++n) {
        Outcome o;
        try {
            o = criteria[n].second();
        } catch (const std::exception& e) {
            o = {false, std::string("unexpected error: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", n + 1, criteria[n].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
