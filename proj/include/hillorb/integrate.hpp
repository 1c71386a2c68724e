#pragma once

// Numerical propagation of the full Cartesian flow with winding-aware
// Poincare-Delaunay bookkeeping.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

#include "hillorb/dop853.hpp"
#include "hillorb/elements.hpp"
#include "hillorb/errors.hpp"
#include "hillorb/model.hpp"

namespace hillorb {

/// Arithmetic used inside the propagator. Extended runs the stepper in long
/// double; inputs and outputs stay double either way.
enum class Precision { Double, Extended };

struct FlowResult {
    PoincareDelaunay end;      // Q1, Q3 unwrapped from the starting values
    PoincareDelaunay end_wrapped; // angles in (-pi, pi]
    long turns_Q1 = 0;         // end.Q1 = end_wrapped.Q1 + 2 pi turns_Q1, up to rounding
    long turns_Q3 = 0;
    CartesianState end_state;
    double energy_drift = 0.0; // max |K(t) - K(0)| / |K(0)| over accepted steps
    std::size_t steps = 0;
};

/// Called after every accepted step with (t, state).
using StepObserver = std::function<void(double, const State6&)>;

namespace detail {

/// Unwraps angle `wrapped` onto the branch closest to `reference`.
inline double unwrap_near(double wrapped, double reference)
{
    return reference + std::remainder(wrapped - reference, kTwoPi);
}

inline double kepler_period(const State6& z, const HillParams& p)
{
    const CartesianState s = from_state6(z);
    const double inv_a = 2.0 / norm(s.xi) - dot(s.eta, s.eta);
    if (!(inv_a > 0.0)) return 1.0;
    const double a = 1.0 / inv_a;
    return kTwoPi * a * std::sqrt(a) * p.epsilon_tilde();
}

} // namespace detail

namespace detail {

template <class S>
std::array<S, 6> integrate_in(std::array<S, 6> y, double T, const HillParams& p, const Dop853Options& opt,
                              const StepObserver& observer, std::size_t* steps_out)
{
    auto rhs = [&p](const std::array<S, 6>& x, std::array<S, 6>& dx) { dx = vector_field_t<S>(x, p); };
    auto obs = [&observer](S t, const std::array<S, 6>& x) {
        if (!observer) return;
        State6 out;
        for (int i = 0; i < 6; ++i) out[i] = double(x[i]);
        observer(double(t), out);
    };
    std::size_t steps = 0;
    try {
        steps = dop853_integrate(y, S(T), rhs, obs, opt);
    } catch (const SingularityError& err) {
        throw IntegrationFailure(std::string("integrate: ") + err.what());
    }
    if (steps_out) *steps_out = steps;
    return y;
}

template <class S>
State6 to_double(const std::array<S, 6>& y)
{
    State6 out;
    for (int i = 0; i < 6; ++i) out[i] = double(y[i]);
    return out;
}

template <class S>
State6 integrate_checked(const std::array<S, 6>& y0, double T, const HillParams& p, double tol,
                         const StepObserver& observer, std::size_t* steps_out)
{
    if (!(tol > 0.0)) throw DomainError("integrate: tolerance must be positive");
    if (!std::isfinite(T)) throw DomainError("integrate: non-finite end time");
    const State6 z = to_double(y0);
    for (double v : z)
        if (!std::isfinite(v)) throw DomainError("integrate: non-finite initial state");
    if (observer) observer(0.0, z);
    if (steps_out) *steps_out = 0;
    if (T == 0.0) return z;

    Dop853Options opt;
    opt.rtol = tol;
    opt.atol = tol;
    opt.max_step = kepler_period(z, p) / 8.0;
    opt.first_step = opt.max_step / 8.0;
    return to_double(integrate_in<S>(y0, T, p, opt, observer, steps_out));
}

} // namespace detail

/// Integrates the Cartesian vector field from t = 0 to t = T (T may be negative)
/// with the adaptive 8(5,3) Dormand-Prince pair at absolute and relative
/// tolerance `tol`. The observer sees t = 0 and every accepted step.
inline State6 integrate_cartesian(const State6& z, double T, const HillParams& p, double tol,
                                  const StepObserver& observer = {}, std::size_t* steps_out = nullptr,
                                  Precision precision = Precision::Double)
{
    if (precision == Precision::Extended) {
        std::array<long double, 6> y;
        for (int i = 0; i < 6; ++i) y[i] = z[i];
        return detail::integrate_checked(y, T, p, tol, observer, steps_out);
    }
    return detail::integrate_checked(z, T, p, tol, observer, steps_out);
}

/// Propagates a Poincare-Delaunay state for time T on the full flow and returns
/// the end point with Q1, Q3 continued from z0 without 2pi jumps. The initial
/// Cartesian state is formed in the propagator's precision.
inline FlowResult integrate_full(const PoincareDelaunay& z0, double T, const HillParams& p, double tol,
                                 const StepObserver& observer = {}, Precision precision = Precision::Double)
{
    const CartesianState s0 = cartesian_from_poincare(z0);
    const double K0 = generator_K(s0, p);

    double q1 = z0.Q1, q3 = z0.Q3;
    double drift = 0.0;
    auto track = [&](double t, const State6& x) {
        const CartesianState s = from_state6(x);
        const PoincareDelaunay w = poincare_from_cartesian(s);
        q1 = detail::unwrap_near(w.Q1, q1);
        q3 = detail::unwrap_near(w.Q3, q3);
        drift = std::max(drift, std::abs(generator_K(s, p) - K0) / std::abs(K0));
        if (observer) observer(t, x);
    };

    FlowResult out;
    const State6 end = precision == Precision::Extended
        ? detail::integrate_checked(detail::cartesian_from_poincare_t<long double>(z0), T, p, tol, track, &out.steps)
        : detail::integrate_checked(to_state6(s0), T, p, tol, track, &out.steps);
    out.end_state = from_state6(end);
    out.end_wrapped = poincare_from_cartesian(out.end_state);
    out.end = out.end_wrapped;
    out.end.Q1 = detail::unwrap_near(out.end.Q1, q1);
    out.end.Q3 = detail::unwrap_near(out.end.Q3, q3);
    out.turns_Q1 = std::lround((out.end.Q1 - out.end_wrapped.Q1) / kTwoPi);
    out.turns_Q3 = std::lround((out.end.Q3 - out.end_wrapped.Q3) / kTwoPi);
    out.energy_drift = drift;
    return out;
}

/// Closed-form flow of the integrable part eps~^-1 F01 + F02 in Poincare-Delaunay
/// variables.
inline PoincareDelaunay approximate_flow(const PoincareDelaunay& z, double t, double eps_tilde)
{
    const double L = z.L();
    const double n = 1.0 / (eps_tilde * L * L * L);
    PoincareDelaunay out = z;
    out.Q1 = z.Q1 + (n - 1.0) * t;
    out.Q3 = z.Q3 + n * t;
    const double c = std::cos(t), s = std::sin(t);
    out.Q2 = z.Q2 * c + z.P2 * s;
    out.P2 = z.P2 * c - z.Q2 * s;
    return out;
}

} // namespace hillorb
