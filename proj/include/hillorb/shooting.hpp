#pragma once

// Doubly-symmetric near-circular periodic orbits: the approximate solution on
// the Lagrangian plane a, the plane-b residual Psi on the full flow, Newton
// shooting, symmetry verification and parameter continuation.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hillorb/elements.hpp"
#include "hillorb/errors.hpp"
#include "hillorb/integrate.hpp"
#include "hillorb/model.hpp"

namespace hillorb {

/// Integers selecting plane a {Q1 = i pi, Q2 = 0, Q3 = j pi} and plane b
/// {Q1 = (i+k) pi, Q2 = 0, Q3 = (j+m) pi + pi/2}; quarter period (m + 1/2 - k) pi.
struct SymmetryConfig {
    int i = 0, j = 0, k = 0, m = 1;

    double T0_star() const { return (m + 0.5 - k) * kPi; }

    void validate() const
    {
        if (!(m - k >= 0)) throw DomainError("SymmetryConfig: quarter period (m + 1/2 - k) pi must be positive");
    }
};

/// Plane-b integers shifted by 2q in both k and m. The planes are the same
/// sets modulo 2 pi and T0* is unchanged, but the resonant action becomes
/// ((m - k + 1/2) / ((m + 2q + 1/2) eps~))^(1/3).
struct ResonanceLift {
    long q = 0;
    long k_eff = 0, m_eff = 1;
    double L_star = 1.0;
};

/// Literal resonance relation: eps^-3 = ((m + 1/2) / (m + 1/2 - k)) L*^3.
inline double epsilon_from_resonance(double L_star, long k, long m)
{
    if (!(L_star > 0.0)) throw DomainError("epsilon_from_resonance: L* must be positive");
    const double num = m + 0.5 - k, den = m + 0.5;
    if (!(num > 0.0) || !(den > 0.0)) throw DomainError("epsilon_from_resonance: nonpositive radicand");
    return std::cbrt(num / den / (L_star * L_star * L_star));
}

inline double resonant_action(long k, long m, double eps_tilde)
{
    return std::cbrt((m - k + 0.5) / ((m + 0.5) * eps_tilde));
}

/// Picks the lift q whose resonant action is nearest to `L_nominal` at the given eps~.
inline ResonanceLift resolve_resonance(double L_nominal, const SymmetryConfig& cfg, double eps_tilde)
{
    cfg.validate();
    if (!(L_nominal > 0.0) || !(eps_tilde > 0.0)) throw DomainError("resolve_resonance: L* and eps~ must be positive");
    // m + 2q + 1/2 = (m - k + 1/2) / (eps~ L^3)
    const double target = (cfg.m - cfg.k + 0.5) / (eps_tilde * L_nominal * L_nominal * L_nominal);
    const double q_real = (target - cfg.m - 0.5) / 2.0;
    const long q_min = static_cast<long>(std::ceil((-cfg.m - 0.5) / 2.0)); // keeps m + 2q + 1/2 > 0
    if (!(std::abs(q_real) < 1e12)) throw DomainError("resolve_resonance: eps~ L*^3 outside the supported range");
    ResonanceLift best;
    double best_gap = std::numeric_limits<double>::infinity();
    for (long q = static_cast<long>(std::floor(q_real)) - 1; q <= static_cast<long>(std::ceil(q_real)) + 1; ++q) {
        if (q < q_min) continue;
        const long k = cfg.k + 2 * q, m = cfg.m + 2 * q;
        const double L = resonant_action(k, m, eps_tilde);
        if (const double gap = std::abs(L - L_nominal); gap < best_gap) {
            best_gap = gap;
            best = {q, k, m, L};
        }
    }
    return best;
}

struct Unknowns {
    double dT = 0.0;
    double dP2 = 0.0;
    double dL = 0.0;

    std::array<double, 3> as_array() const { return {dT, dP2, dL}; }
    static Unknowns from_array(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }
    double norm() const { return std::max({std::abs(dT), std::abs(dP2), std::abs(dL)}); }
};

/// Where a correction of L goes: P1 (default, keeps P3*) or P3.
enum class ActionSplit { IntoP1, IntoP3 };

struct ShootingSettings {
    double tol_integrate = 1e-15;
    Precision precision = Precision::Extended;
    double tol_newton = 1e-10;
    int max_iterations = 25;
    double p3_fraction = 0.2; // P3* = p3_fraction * L*
    ActionSplit split = ActionSplit::IntoP1;
    int polish_steps = 3; // extra Newton steps once below tol_newton, kept while they help
};

/// Everything fixed while solving for X.
struct ShootingProblem {
    SymmetryConfig config;
    ResonanceLift lift;
    HillParams params;
    ShootingSettings settings;

    double L_star() const { return lift.L_star; }
    double T0_star() const { return config.T0_star(); }
};

inline ShootingProblem make_problem(const SymmetryConfig& cfg, double L_nominal, const HillParams& params,
                                    const ShootingSettings& settings = {})
{
    params.validate();
    if (!(settings.tol_integrate > 0.0) || !(settings.tol_newton > 0.0))
        throw DomainError("make_problem: tolerances must be positive");
    if (!(settings.p3_fraction > 0.0 && settings.p3_fraction <= 1.0))
        throw DomainError("make_problem: P3 fraction must lie in (0, 1]");
    return {cfg, resolve_resonance(L_nominal, cfg, params.epsilon_tilde()), params, settings};
}

struct ApproxInitial {
    PoincareDelaunay Z0;
    double T0 = 0.0;
};

/// Z0* = (i pi, 0, j pi, P1*, 0, P3*) with P3* = fraction * L*, and T0*.
inline ApproxInitial approx_initial(double L_star, const SymmetryConfig& cfg, double p3_fraction = 0.2)
{
    cfg.validate();
    if (!(L_star > 0.0)) throw DomainError("approx_initial: L* must be positive");
    if (!(p3_fraction > 0.0 && p3_fraction <= 1.0)) throw DomainError("approx_initial: P3 fraction must lie in (0, 1]");
    PoincareDelaunay z;
    z.Q1 = cfg.i * kPi;
    z.Q3 = cfg.j * kPi;
    z.P3 = p3_fraction * L_star;
    z.P1 = L_star - z.P3;
    return {z, cfg.T0_star()};
}

inline PoincareDelaunay initial_state(const ShootingProblem& pb, const Unknowns& X)
{
    PoincareDelaunay z = approx_initial(pb.L_star(), pb.config, pb.settings.p3_fraction).Z0;
    z.P2 += X.dP2;
    if (pb.settings.split == ActionSplit::IntoP1)
        z.P1 += X.dL;
    else
        z.P3 += X.dL;
    return z;
}

/// Cartesian image of a plane-a state with the conversion's rounding residue
/// in (xi2, xi3, eta1) removed.
inline CartesianState initial_cartesian(const PoincareDelaunay& z)
{
    CartesianState s = cartesian_from_poincare(z);
    s.xi[1] = 0.0;
    s.xi[2] = 0.0;
    s.eta[0] = 0.0;
    return s;
}

namespace detail {

/// wrapped + 2 pi turns - (N + 1/2) pi without forming the large multiples of pi.
inline double offset_from_half_odd_pi(double wrapped, long turns, long N)
{
    const long A = (N >= 0) ? N / 2 : -((-N + 1) / 2);
    const long b = N - 2 * A;
    return (wrapped - (b + 0.5) * kPi) + kTwoPi * static_cast<double>(turns - A);
}

} // namespace detail

struct PsiEvaluation {
    std::array<double, 3> psi{};
    FlowResult flow;
    double T = 0.0;

    double norm() const { return std::max({std::abs(psi[0]), std::abs(psi[1]), std::abs(psi[2])}); }
};

/// Plane-b residual after integrating the full flow for T = T0* + dT:
///   Psi1 = Q3 - Q1 - (j - i) pi - T0*
///   Psi2 = Q2
///   Psi3 = (Q3 - j pi) / ((m + 1/2) pi) - 1
/// with (k, m) the lifted integers.
inline PsiEvaluation evaluate_psi(const Unknowns& X, const ShootingProblem& pb)
{
    const double T = pb.T0_star() + X.dT;
    if (!(T > 0.0)) throw DomainError("residual_psi: T = T0* + dT must be positive");
    const PoincareDelaunay z0 = initial_state(pb, X);
    PsiEvaluation out;
    out.T = T;

    out.flow = integrate_full(z0, T, pb.params, pb.settings.tol_integrate, {}, pb.settings.precision);

    const auto& w = out.flow.end_wrapped;
    const auto& c = pb.config;
    const long m_eff = pb.lift.m_eff;
    // Q3 - Q1 - (j - i) pi - (m - k + 1/2) pi
    out.psi[0] = detail::offset_from_half_odd_pi(w.Q3 - w.Q1, out.flow.turns_Q3 - out.flow.turns_Q1,
                                                 static_cast<long>(c.j - c.i + c.m - c.k));
    out.psi[1] = w.Q2;
    out.psi[2] = detail::offset_from_half_odd_pi(w.Q3, out.flow.turns_Q3, static_cast<long>(c.j) + m_eff)
        / ((m_eff + 0.5) * kPi);
    return out;
}

inline std::array<double, 3> residual_psi(const Unknowns& X, const ShootingProblem& pb)
{
    return evaluate_psi(X, pb).psi;
}

using Matrix3 = Eigen::Matrix3d;

/// Central-difference Jacobian of Psi with step max(1e-7, 1e-4 |X|). Each
/// column is divided by the perturbation actually realised in T, P2 or the
/// corrected action after rounding, not by the nominal 2h.
inline Matrix3 psi_jacobian(const Unknowns& X, const ShootingProblem& pb)
{
    const double h = std::max(1e-7, 1e-4 * X.norm());
    const ApproxInitial base = approx_initial(pb.L_star(), pb.config, pb.settings.p3_fraction);
    const double action_base = pb.settings.split == ActionSplit::IntoP1 ? base.Z0.P1 : base.Z0.P3;
    const std::array<double, 3> offset{base.T0, 0.0, action_base};
    Matrix3 J;
    for (int col = 0; col < 3; ++col) {
        auto plus = X.as_array(), minus = X.as_array();
        plus[col] += h;
        minus[col] -= h;
        const double realised = (offset[col] + plus[col]) - (offset[col] + minus[col]);
        const auto fp = residual_psi(Unknowns::from_array(plus), pb);
        const auto fm = residual_psi(Unknowns::from_array(minus), pb);
        for (int row = 0; row < 3; ++row) J(row, col) = (fp[row] - fm[row]) / realised;
    }
    return J;
}

/// Closed-form Jacobian of Psi at eps~ = 0 (lower triangular).
inline Matrix3 psi_jacobian_closed_form(const Unknowns& X, const SymmetryConfig& cfg, double L_star)
{
    const double T0 = cfg.T0_star();
    const double sign = ((cfg.m - cfg.k) % 2 == 0) ? 1.0 : -1.0;
    const double rho = 1.0 + X.dL / L_star;
    Matrix3 J = Matrix3::Zero();
    J(0, 0) = 1.0;
    J(1, 0) = -sign * std::sin(X.dT) * X.dP2;
    J(1, 1) = sign * std::cos(X.dT);
    J(2, 0) = 1.0 / (T0 * rho * rho * rho);
    J(2, 2) = -3.0 * (1.0 + X.dT / T0) / (rho * rho * rho * rho * L_star);
    return J;
}

class NoConvergence : public std::runtime_error {
public:
    NoConvergence(const std::string& what, Unknowns last, double residual, int iterations)
        : std::runtime_error(what), last_iterate(last), residual_norm(residual), iterations(iterations)
    {
    }
    Unknowns last_iterate;
    double residual_norm;
    int iterations;
};

struct OrbitRecord {
    SymmetryConfig config;
    ResonanceLift lift;
    HillParams params;
    ShootingSettings settings;
    double L_star = 0.0;
    Unknowns X;
    double quarter_period = 0.0;
    std::array<double, 3> residual{};
    double residual_norm = 0.0;
    int iterations = 0;      // Newton steps to reach tol_newton
    int polish_iterations = 0;
    bool converged = false;
    double closure_norm = std::numeric_limits<double>::quiet_NaN();
    double energy_drift = std::numeric_limits<double>::quiet_NaN();
    PoincareDelaunay initial_pd;
    CartesianState initial_cartesian;
};

namespace detail {

struct NewtonOutcome {
    Unknowns X;
    PsiEvaluation eval;
    int iterations = 0;
    int polish = 0;
};

inline Unknowns newton_step(const Unknowns& X, const std::array<double, 3>& r, const ShootingProblem& pb, double res_norm,
                            int it)
{
    const Matrix3 J = psi_jacobian(X, pb);
    const double scale = J.norm();
    if (!(std::abs(J.determinant()) > 1e-12 * scale * scale * scale))
        throw NoConvergence("solve_orbit: singular Jacobian", X, res_norm, it);
    const Eigen::Vector3d d = J.fullPivLu().solve(-Eigen::Vector3d(r[0], r[1], r[2]));
    return {d[0], d[1], d[2]};
}

inline Unknowns add_scaled(const Unknowns& X, const Unknowns& d, double lambda)
{
    return {X.dT + lambda * d.dT, X.dP2 + lambda * d.dP2, X.dL + lambda * d.dL};
}

inline NewtonOutcome newton_solve(const ShootingProblem& pb, Unknowns X)
{
    const auto& st = pb.settings;
    PsiEvaluation ev = evaluate_psi(X, pb);
    int it = 0;
    while (ev.norm() > st.tol_newton) {
        if (it >= st.max_iterations)
            throw NoConvergence("solve_orbit: iteration cap reached", X, ev.norm(), it);
        const Unknowns d = newton_step(X, ev.psi, pb, ev.norm(), it);
        ++it;
        // Armijo backtracking on |Psi|^2 with the Newton slope -2 |Psi|^2.
        const double f0 = ev.psi[0] * ev.psi[0] + ev.psi[1] * ev.psi[1] + ev.psi[2] * ev.psi[2];
        bool accepted = false;
        for (double lambda = 1.0; lambda >= 1.0 / 64.0; lambda *= 0.5) {
            const Unknowns trial = add_scaled(X, d, lambda);
            try {
                PsiEvaluation te = evaluate_psi(trial, pb);
                const double f1 = te.psi[0] * te.psi[0] + te.psi[1] * te.psi[1] + te.psi[2] * te.psi[2];
                if (f1 <= (1.0 - 2e-4 * lambda) * f0) {
                    X = trial;
                    ev = std::move(te);
                    accepted = true;
                    break;
                }
            } catch (const IntegrationFailure&) {
            } catch (const DomainError&) {
            }
        }
        if (!accepted) throw NoConvergence("solve_orbit: no residual decrease along the Newton direction", X, ev.norm(), it);
    }

    int polish = 0;
    for (; polish < st.polish_steps; ++polish) {
        const Unknowns d = newton_step(X, ev.psi, pb, ev.norm(), it);
        PsiEvaluation te = evaluate_psi(add_scaled(X, d, 1.0), pb);
        if (!(te.norm() < 0.5 * ev.norm())) break;
        X = add_scaled(X, d, 1.0);
        ev = std::move(te);
    }
    return {X, std::move(ev), it, polish};
}

inline OrbitRecord make_record(const ShootingProblem& pb, const Unknowns& X, const PsiEvaluation& ev, int it, int polish,
                               bool converged)
{
    OrbitRecord rec;
    rec.config = pb.config;
    rec.lift = pb.lift;
    rec.params = pb.params;
    rec.settings = pb.settings;
    rec.L_star = pb.L_star();
    rec.X = X;
    rec.quarter_period = pb.T0_star() + X.dT;
    rec.residual = ev.psi;
    rec.residual_norm = ev.norm();
    rec.iterations = it;
    rec.polish_iterations = polish;
    rec.converged = converged;
    rec.energy_drift = ev.flow.energy_drift;
    rec.initial_pd = initial_state(pb, X);
    rec.initial_cartesian = initial_cartesian(rec.initial_pd);
    return rec;
}

} // namespace detail

/// Damped Newton on Psi from X0 (default 0). The closure norm is left unset;
/// verify_double_symmetry fills it.
inline OrbitRecord solve_orbit(const ShootingProblem& pb, const Unknowns& X0 = {})
{
    const auto out = detail::newton_solve(pb, X0);
    return detail::make_record(pb, out.X, out.eval, out.iterations, out.polish, true);
}

inline OrbitRecord solve_orbit(const SymmetryConfig& cfg, double L_nominal, const HillParams& params,
                               const ShootingSettings& settings = {}, const Unknowns& X0 = {})
{
    return solve_orbit(make_problem(cfg, L_nominal, params, settings), X0);
}

// Lagrangian planes ---------------------------------------------------------

namespace detail {

/// Distance of `angle` from the nearest point of target + 2 pi Z.
inline double angle_gap(double angle, double target) { return std::abs(std::remainder(angle - target, kTwoPi)); }

} // namespace detail

inline bool on_plane_a(const PoincareDelaunay& z, const SymmetryConfig& cfg, double tol)
{
    return detail::angle_gap(z.Q1, cfg.i * kPi) <= tol && std::abs(z.Q2) <= tol
        && detail::angle_gap(z.Q3, cfg.j * kPi) <= tol;
}

inline bool on_plane_b(const PoincareDelaunay& z, const SymmetryConfig& cfg, double tol)
{
    return detail::angle_gap(z.Q1, (cfg.i + cfg.k) * kPi) <= tol && std::abs(z.Q2) <= tol
        && detail::angle_gap(z.Q3, (cfg.j + cfg.m + 0.5) * kPi) <= tol;
}

/// Max of |xi2|, |xi3|, |eta1|: distance from {(x1, 0, 0, 0, y2, y3)}.
inline double plane_L1_residual(const CartesianState& s)
{
    return std::max({std::abs(s.xi[1]), std::abs(s.xi[2]), std::abs(s.eta[0])});
}

/// Max of |xi2|, |eta1|, |eta3|: distance from {(x1, 0, x3, 0, y2, 0)}.
inline double plane_L2_residual(const CartesianState& s)
{
    return std::max({std::abs(s.xi[1]), std::abs(s.eta[0]), std::abs(s.eta[2])});
}

inline bool on_plane_L1(const CartesianState& s, double tol) { return plane_L1_residual(s) <= tol; }
inline bool on_plane_L2(const CartesianState& s, double tol) { return plane_L2_residual(s) <= tol; }

// Verification ----------------------------------------------------------------

struct SymmetryReport {
    double closure = 0.0;          // max-abs |Z(4T) - Z(0)| in Cartesian components
    double plane_a_residual = 0.0; // L1 residual at t = 0
    double plane_b_residual = 0.0; // L2 residual at t = T
    double mirror_residual = 0.0;  // |Z(-T) - R1 Z(T)|
    double energy_drift = 0.0;     // over [0, 4T]
};

inline double max_abs_diff(const State6& a, const State6& b)
{
    double d = 0.0;
    for (int i = 0; i < 6; ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

inline SymmetryReport verify_double_symmetry(const OrbitRecord& rec)
{
    const auto& st = rec.settings;
    const HillParams& p = rec.params;
    const State6 z0 = to_state6(rec.initial_cartesian);
    const double T = rec.quarter_period;
    SymmetryReport rep;
    rep.plane_a_residual = plane_L1_residual(rec.initial_cartesian);

    const double K0 = generator_K(rec.initial_cartesian, p);
    double drift = 0.0;
    auto track = [&](double, const State6& x) {
        drift = std::max(drift, std::abs(generator_K(from_state6(x), p) - K0) / std::abs(K0));
    };
    const State6 zT = integrate_cartesian(z0, T, p, st.tol_integrate, {}, nullptr, st.precision);
    rep.plane_b_residual = plane_L2_residual(from_state6(zT));
    const State6 z4 = integrate_cartesian(z0, 4.0 * T, p, st.tol_integrate, track, nullptr, st.precision);
    rep.closure = max_abs_diff(z4, z0);
    rep.energy_drift = drift;
    const State6 zmT = integrate_cartesian(z0, -T, p, st.tol_integrate, {}, nullptr, st.precision);
    rep.mirror_residual = max_abs_diff(zmT, reflect_R1(zT));
    return rep;
}

/// Fills closure_norm and energy_drift of a record from a full verification.
inline SymmetryReport attach_verification(OrbitRecord& rec)
{
    const SymmetryReport rep = verify_double_symmetry(rec);
    rec.closure_norm = rep.closure;
    rec.energy_drift = rep.energy_drift;
    return rep;
}

// Continuation ------------------------------------------------------------------

enum class FamilyParameter { EpsilonTilde, J2 };

class PartialFamilyError : public std::runtime_error {
public:
    PartialFamilyError(const std::string& what, std::vector<OrbitRecord> done, double failed_value)
        : std::runtime_error(what), completed(std::move(done)), failed_at(failed_value)
    {
    }
    std::vector<OrbitRecord> completed;
    double failed_at;
};

/// Solves along `values` of the chosen parameter, warm-starting each Newton
/// run from the previous X. With verify set, every record also gets its
/// closure and energy drift.
inline std::vector<OrbitRecord> continue_family(FamilyParameter which, const std::vector<double>& values,
                                                const SymmetryConfig& cfg, double L_nominal, HillParams params,
                                                const ShootingSettings& settings = {}, bool verify = false)
{
    std::vector<OrbitRecord> out;
    for (std::size_t n = 1; n < values.size(); ++n) {
        const double step = values[n] - values[n - 1];
        const double first = values[1] - values[0];
        if (step == 0.0 || (step > 0.0) != (first > 0.0))
            throw DomainError("continue_family: parameter values must be strictly monotone");
    }
    Unknowns warm{};
    for (const double v : values) {
        if (which == FamilyParameter::EpsilonTilde) {
            if (!(v > 0.0)) throw DomainError("continue_family: eps~ must be positive");
            params.epsilon = std::cbrt(v);
        } else {
            if (params.j_tilde.empty()) params.j_tilde.resize(1);
            params.j_tilde[0] = v;
            params.n_zonal = std::max(params.n_zonal, 1);
        }
        try {
            OrbitRecord rec = solve_orbit(make_problem(cfg, L_nominal, params, settings), warm);
            if (verify) attach_verification(rec);
            warm = rec.X;
            out.push_back(std::move(rec));
        } catch (const NoConvergence& err) {
            throw PartialFamilyError(std::string("continue_family: ") + err.what(), std::move(out), v);
        } catch (const IntegrationFailure& err) {
            throw PartialFamilyError(std::string("continue_family: ") + err.what(), std::move(out), v);
        }
    }
    return out;
}

// Diagnostics ------------------------------------------------------------------

/// max over accepted steps of |Z(t) - Z0(t)| / eps~ in Poincare-Delaunay
/// components (Q1, Q3 unwrapped), Z0 being the closed-form approximate flow.
inline double first_order_deviation(const PoincareDelaunay& z0, double T, const HillParams& p,
                                    const ShootingSettings& st = {})
{
    const double et = p.epsilon_tilde();
    double q1 = z0.Q1, q3 = z0.Q3, worst = 0.0;
    auto obs = [&](double t, const State6& x) {
        PoincareDelaunay w = poincare_from_cartesian(from_state6(x));
        q1 = detail::unwrap_near(w.Q1, q1);
        q3 = detail::unwrap_near(w.Q3, q3);
        w.Q1 = q1;
        w.Q3 = q3;
        const PoincareDelaunay a = approximate_flow(z0, t, et);
        worst = std::max({worst, std::abs(w.Q1 - a.Q1), std::abs(w.Q2 - a.Q2), std::abs(w.Q3 - a.Q3),
                          std::abs(w.P1 - a.P1), std::abs(w.P2 - a.P2), std::abs(w.P3 - a.P3)});
    };
    integrate_cartesian(to_state6(cartesian_from_poincare(z0)), T, p, st.tol_integrate, obs, nullptr, st.precision);
    return worst / et;
}

} // namespace hillorb
