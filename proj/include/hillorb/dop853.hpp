#pragma once

// Adaptive explicit Runge-Kutta 8(5,3) of Dormand and Prince, generic in the
// scalar type so the same stepper runs in double or long double.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "hillorb/dop853_tableau.hpp"
#include "hillorb/errors.hpp"

namespace hillorb {

struct Dop853Options {
    double rtol = 1e-12;
    double atol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double first_step = 0.0; // 0 picks max_step / 8 (or |T| / 100)
    std::size_t max_steps = 50'000'000;
};

/// Integrates y' = f(y) from t = 0 to t = T (either sign). `f(y, dy)` fills dy;
/// `observer(t, y)` runs after every accepted step. Returns the accepted-step count.
template <class S, std::size_t N, class Rhs, class Observer>
std::size_t dop853_integrate(std::array<S, N>& y, S T, const Rhs& f, const Observer& observer,
                             const Dop853Options& opt)
{
    namespace tb = dop853_tableau;
    using State = std::array<S, N>;
    constexpr int ns = tb::kStages;
    constexpr S safety = S(0.9), min_factor = S(0.2), max_factor = S(10);

    if (T == S(0)) return 0;
    const S dir = T > S(0) ? S(1) : S(-1);
    const S rtol = S(opt.rtol), atol = S(opt.atol);
    const S max_step = std::isfinite(opt.max_step) ? S(opt.max_step) : std::abs(T);

    S h_abs = opt.first_step > 0.0 ? S(opt.first_step) : std::min(max_step / S(8), std::abs(T) / S(100));
    h_abs = std::min(h_abs, max_step);

    std::array<State, ns> K{};
    f(y, K[0]);
    S t = 0;
    std::size_t steps = 0;
    bool last_rejected = false;

    while (dir * (T - t) > S(0)) {
        if (steps >= opt.max_steps) throw IntegrationFailure("dop853: step budget exhausted");
        const S min_step = S(10) * std::abs(std::nextafter(t, dir * std::numeric_limits<S>::infinity()) - t);
        h_abs = std::clamp(h_abs, min_step, max_step);

        State y_new{};
        S h{}, t_new{};
        S err_norm{};
        for (;;) {
            if (h_abs < min_step) throw IntegrationFailure("dop853: step size collapsed at t = " + std::to_string(double(t)));
            h = dir * h_abs;
            t_new = t + h;
            if (dir * (t_new - T) > S(0)) {
                t_new = T;
                h = T - t;
                h_abs = std::abs(h);
            }

            for (int s = 1; s < ns; ++s) {
                State tmp = y;
                for (int j = 0; j < s; ++j) {
                    const S a = S(tb::a[s][j]);
                    if (a == S(0)) continue;
                    for (std::size_t i = 0; i < N; ++i) tmp[i] += h * a * K[j][i];
                }
                f(tmp, K[s]);
            }
            for (std::size_t i = 0; i < N; ++i) {
                S acc = 0;
                for (int j = 0; j < ns; ++j) acc += S(tb::a[ns][j]) * K[j][i];
                y_new[i] = y[i] + h * acc;
            }

            S e5 = 0, e3 = 0;
            for (std::size_t i = 0; i < N; ++i) {
                const S scale = atol + rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
                S d5 = 0, d3 = 0;
                for (int j = 0; j < ns; ++j) {
                    d5 += S(tb::e5[j]) * K[j][i];
                    d3 += (S(tb::a[ns][j]) - S(tb::bhh[j])) * K[j][i];
                }
                e5 += (d5 / scale) * (d5 / scale);
                e3 += (d3 / scale) * (d3 / scale);
            }
            if (e5 == S(0) && e3 == S(0))
                err_norm = 0;
            else
                err_norm = h_abs * e5 / std::sqrt((e5 + S(0.01) * e3) * S(N));

            if (!std::isfinite(double(err_norm))) {
                h_abs *= min_factor;
                last_rejected = true;
                continue;
            }
            if (err_norm < S(1)) {
                S factor = err_norm == S(0) ? max_factor
                                            : std::min(max_factor, safety * std::pow(err_norm, S(-1) / S(8)));
                if (last_rejected) factor = std::min(S(1), factor);
                h_abs *= factor;
                last_rejected = false;
                break;
            }
            h_abs *= std::max(min_factor, safety * std::pow(err_norm, S(-1) / S(8)));
            last_rejected = true;
        }

        for (const S v : y_new)
            if (!std::isfinite(double(v))) throw IntegrationFailure("dop853: non-finite state at t = " + std::to_string(double(t_new)));
        y = y_new;
        t = t_new;
        ++steps;
        f(y, K[0]);
        observer(t, y);
    }
    return steps;
}

} // namespace hillorb
