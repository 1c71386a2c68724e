#pragma once

// Sampling helpers shared by the unit tests and the acceptance binary.

#include <cmath>
#include <cstdint>
#include <random>

#include "hillorb/elements.hpp"

namespace hillorb::testing {

/// Uniform [0, 1) from the top 53 bits of the engine; platform independent.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }

/// Elliptic elements with a in [0.5, 2], e in [0, e_max], inc in [0, inc_max].
inline OrbitalElements random_orbital(std::mt19937_64& rng, double e_max, double inc_max = kPi - 0.1)
{
    OrbitalElements el;
    el.a = uniform(rng, 0.5, 2.0);
    el.e = uniform(rng, 0.0, e_max);
    el.inc = uniform(rng, 0.0, inc_max);
    el.Omega = uniform(rng, 0.0, kTwoPi);
    el.omega = uniform(rng, 0.0, kTwoPi);
    el.M = uniform(rng, 0.0, kTwoPi);
    return el;
}

/// Poincare-Delaunay point with L in [0.8, 1.2], e in [0, e_max] and
/// inclination in [0.05, 2.95], away from the poles of the inclination chart.
inline PoincareDelaunay random_poincare(std::mt19937_64& rng, double e_max)
{
    DelaunayElements d;
    d.L = uniform(rng, 0.8, 1.2);
    const double e = uniform(rng, 0.0, e_max);
    d.G = d.L * std::sqrt((1.0 - e) * (1.0 + e));
    d.H = d.G * std::cos(uniform(rng, 0.05, 2.95));
    d.ell = uniform(rng, 0.0, kTwoPi);
    d.g = uniform(rng, 0.0, kTwoPi);
    d.h = uniform(rng, 0.0, kTwoPi);
    return poincare_from_delaunay(d);
}

inline double max_abs(const CartesianState& a, const CartesianState& b)
{
    double d = 0.0;
    for (int i = 0; i < 3; ++i) d = std::max({d, std::abs(a.xi[i] - b.xi[i]), std::abs(a.eta[i] - b.eta[i])});
    return d;
}

inline double state_scale(const CartesianState& s)
{
    double m = 0.0;
    for (int i = 0; i < 3; ++i) m = std::max({m, std::abs(s.xi[i]), std::abs(s.eta[i])});
    return m;
}

/// Difference of two Poincare-Delaunay points, angles compared modulo 2 pi.
inline double pd_distance(const PoincareDelaunay& a, const PoincareDelaunay& b)
{
    auto ang = [](double x, double y) { return std::abs(std::remainder(x - y, kTwoPi)); };
    return std::max({ang(a.Q1, b.Q1), std::abs(a.Q2 - b.Q2), ang(a.Q3, b.Q3), std::abs(a.P1 - b.P1),
                     std::abs(a.P2 - b.P2), std::abs(a.P3 - b.P3)});
}

} // namespace hillorb::testing
