#pragma once

// Kepler-problem element sets for the unit-gravitational-parameter two-body
// part of the scaled Hill Hamiltonian, and the maps between them:
//
//   CartesianState <-> OrbitalElements <-> DelaunayElements <-> PoincareDelaunay
//
// plus direct Cartesian <-> Poincare-Delaunay maps built on equinoctial
// quantities, which stay regular at zero eccentricity.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "hillorb/errors.hpp"

namespace hillorb {

using Vec3 = std::array<double, 3>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Wraps an angle to [0, 2pi). Display only; propagation keeps angles unwrapped.
inline double wrap_two_pi(double angle)
{
    double w = std::fmod(angle, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    return w;
}

/// Rotating-frame position xi and conjugate momentum eta.
struct CartesianState {
    Vec3 xi{};
    Vec3 eta{};
};

struct OrbitalElements {
    double a = 1.0;     // semiaxis
    double e = 0.0;     // eccentricity
    double inc = 0.0;   // inclination [0, pi]
    double Omega = 0.0; // node longitude
    double omega = 0.0; // argument of pericenter
    double M = 0.0;     // mean anomaly
};

struct DelaunayElements {
    double L = 1.0, G = 1.0, H = 1.0;
    double ell = 0.0, g = 0.0, h = 0.0;
    // Set when g (circular) or h (equatorial) is undefined and was fixed to 0.
    bool circular = false;
    bool equatorial = false;
};

struct PoincareDelaunay {
    double Q1 = 0.0, Q2 = 0.0, Q3 = 0.0;
    double P1 = 0.0, P2 = 0.0, P3 = 0.0;

    double L() const { return P1 + P3; }
    /// (P2^2 + Q2^2)/2, which equals L - G.
    double s() const { return 0.5 * (P2 * P2 + Q2 * Q2); }
};

/// Eccentricity below which the pericenter is treated as undefined.
inline constexpr double kCircularTol = 1e-14;

inline double kepler_energy(const CartesianState& s) { return 0.5 * dot(s.eta, s.eta) - 1.0 / norm(s.xi); }

inline Vec3 angular_momentum(const CartesianState& s) { return cross(s.xi, s.eta); }

/// Solves E - e sin E = M. Newton from M + e sin M, bisection fallback.
/// E(M + 2pi) = E(M) + 2pi holds because M is reduced before the solve.
inline double solve_kepler(double M, double e)
{
    if (!std::isfinite(M) || !(e >= 0.0)) throw DomainError("solve_kepler: non-finite anomaly or negative eccentricity");
    if (!(e < 1.0)) throw NumericalFailure("solve_kepler: no elliptic root for e >= 1");

    const double turns = std::round(M / kTwoPi);
    const double m = M - turns * kTwoPi;
    auto residual = [&](double E) { return E - e * std::sin(E) - m; };

    double E = m + e * std::sin(m);
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
        const double f = residual(E);
        const double step = f / (1.0 - e * std::cos(E));
        E -= step;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(E))) {
            converged = true;
            break;
        }
    }
    if (!converged || std::abs(residual(E)) > 1e-14) {
        // |E - m| <= e brackets the root and the residual is monotone.
        double lo = m - e - 1e-12, hi = m + e + 1e-12;
        for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            (residual(mid) < 0.0 ? lo : hi) = mid;
        }
        E = std::abs(residual(lo)) < std::abs(residual(hi)) ? lo : hi;
        if (std::abs(residual(E)) > 1e-13) throw NumericalFailure("solve_kepler: iteration cap reached");
    }
    return E + turns * kTwoPi;
}

inline CartesianState orbital_to_cartesian(const OrbitalElements& el)
{
    if (!(el.a > 0.0)) throw DomainError("orbital_to_cartesian: semiaxis must be positive");
    if (!(el.e >= 0.0 && el.e < 1.0)) throw DomainError("orbital_to_cartesian: eccentricity outside [0, 1)");

    const double E = solve_kepler(el.M, el.e);
    const double cE = std::cos(E), sE = std::sin(E);
    const double root = std::sqrt((1.0 - el.e) * (1.0 + el.e));
    const double n = 1.0 / (el.a * std::sqrt(el.a));
    const double denom = 1.0 - el.e * cE;

    const double px = el.a * (cE - el.e), py = el.a * root * sE;
    const double vx = -el.a * n * sE / denom, vy = el.a * n * root * cE / denom;

    const double cO = std::cos(el.Omega), sO = std::sin(el.Omega);
    const double cw = std::cos(el.omega), sw = std::sin(el.omega);
    const double ci = std::cos(el.inc), si = std::sin(el.inc);

    const Vec3 r1{cO * cw - sO * ci * sw, -cO * sw - sO * ci * cw, 0.0};
    const Vec3 r2{sO * cw + cO * ci * sw, -sO * sw + cO * ci * cw, 0.0};
    const Vec3 r3{si * sw, si * cw, 0.0};

    CartesianState s;
    s.xi = {r1[0] * px + r1[1] * py, r2[0] * px + r2[1] * py, r3[0] * px + r3[1] * py};
    s.eta = {r1[0] * vx + r1[1] * vy, r2[0] * vx + r2[1] * vy, r3[0] * vx + r3[1] * vy};
    return s;
}

inline OrbitalElements cartesian_to_orbital(const CartesianState& s)
{
    const double r = norm(s.xi);
    if (!(r > 0.0)) throw DomainError("cartesian_to_orbital: zero radius");
    const double energy = kepler_energy(s);
    if (!(energy < 0.0)) throw DomainError("cartesian_to_orbital: state is not bound");
    const Vec3 hv = angular_momentum(s);
    const double G = norm(hv);
    if (!(G > 1e-14 * r * norm(s.eta))) throw DomainError("cartesian_to_orbital: rectilinear state");

    OrbitalElements el;
    el.a = -0.5 / energy;

    const Vec3 ev = [&] {
        const Vec3 vxh = cross(s.eta, hv);
        return Vec3{vxh[0] - s.xi[0] / r, vxh[1] - s.xi[1] / r, vxh[2] - s.xi[2] / r};
    }();
    el.e = norm(ev);
    if (!(el.e < 1.0)) throw DomainError("cartesian_to_orbital: eccentricity >= 1");
    el.inc = std::atan2(std::hypot(hv[0], hv[1]), hv[2]);

    const Vec3 hhat{hv[0] / G, hv[1] / G, hv[2] / G};
    Vec3 node{-hv[1], hv[0], 0.0};
    const double nn = norm(node);
    if (nn > 1e-14 * G) {
        node = {node[0] / nn, node[1] / nn, 0.0};
        el.Omega = wrap_two_pi(std::atan2(node[1], node[0]));
    } else {
        node = {1.0, 0.0, 0.0};
        el.Omega = 0.0;
    }
    const Vec3 qhat = cross(hhat, node);

    const double u = std::atan2(dot(s.xi, qhat), dot(s.xi, node));
    el.omega = el.e > kCircularTol ? std::atan2(dot(ev, qhat), dot(ev, node)) : 0.0;
    const double f = u - el.omega;
    const double E = std::atan2(std::sqrt((1.0 - el.e) * (1.0 + el.e)) * std::sin(f), el.e + std::cos(f));
    el.M = wrap_two_pi(E - el.e * std::sin(E));
    el.omega = wrap_two_pi(el.omega);
    return el;
}

inline DelaunayElements delaunay_from_orbital(const OrbitalElements& el)
{
    if (!(el.a > 0.0) || !(el.e >= 0.0 && el.e < 1.0)) throw DomainError("delaunay_from_orbital: invalid elements");
    DelaunayElements d;
    d.L = std::sqrt(el.a);
    d.G = d.L * std::sqrt((1.0 - el.e) * (1.0 + el.e));
    d.H = d.G * std::cos(el.inc);
    d.circular = el.e < kCircularTol;
    d.equatorial = std::sin(el.inc) < 1e-14;
    d.ell = el.M;
    d.g = el.omega;
    d.h = el.Omega;
    if (d.equatorial) {
        d.g += d.h;
        d.h = 0.0;
    }
    if (d.circular) {
        d.ell += d.g;
        d.g = 0.0;
    }
    return d;
}

inline OrbitalElements orbital_from_delaunay(const DelaunayElements& d)
{
    if (!(d.L > 0.0) || !(d.G > 0.0) || d.G > d.L * (1.0 + 1e-15) || std::abs(d.H) > d.G * (1.0 + 1e-15))
        throw DomainError("orbital_from_delaunay: requires L >= G >= |H|, G > 0");
    OrbitalElements el;
    el.a = d.L * d.L;
    el.e = std::sqrt(std::max(0.0, (d.L - d.G) * (d.L + d.G))) / d.L;
    el.inc = std::acos(std::clamp(d.H / d.G, -1.0, 1.0));
    el.Omega = d.h;
    el.omega = d.g;
    el.M = d.ell;
    return el;
}

inline PoincareDelaunay poincare_from_delaunay(const DelaunayElements& d)
{
    double diff = d.L - d.G;
    if (diff < 0.0) {
        if (diff < -1e-14 * d.L) throw DomainError("poincare_from_delaunay: L < G");
        diff = 0.0;
    }
    const double rho = std::sqrt(2.0 * diff);
    const double varpi = d.g + d.h;
    PoincareDelaunay p;
    p.Q1 = d.ell + d.g + d.h;
    p.Q2 = -rho * std::sin(varpi);
    p.Q3 = d.ell + d.g;
    p.P1 = d.L - d.G + d.H;
    p.P2 = rho * std::cos(varpi);
    p.P3 = d.G - d.H;
    return p;
}

inline DelaunayElements delaunay_from_poincare(const PoincareDelaunay& p)
{
    const double s = p.s();
    DelaunayElements d;
    d.L = p.L();
    d.G = d.L - s;
    d.H = p.P1 - s;
    if (!(d.G > 0.0)) throw DomainError("delaunay_from_poincare: (P2^2+Q2^2)/2 must be below P1+P3");
    const double varpi = s > 0.0 ? std::atan2(-p.Q2, p.P2) : 0.0;
    d.circular = s == 0.0;
    d.equatorial = p.P3 == 0.0;
    d.h = p.Q1 - p.Q3;
    d.g = varpi - d.h;
    d.ell = p.Q1 - varpi;
    return d;
}

struct EccentricityInclination {
    double e = 0.0;
    double cos_i = 1.0; // H/G
};

/// e and H/G straight from the Poincare-Delaunay momenta.
inline EccentricityInclination e_cosi_from_poincare(const PoincareDelaunay& p)
{
    const double L = p.L();
    const double s = p.s();
    if (!(L > 0.0)) throw DomainError("e_cosi_from_poincare: P1 + P3 must be positive");
    if (!(s < L)) throw DomainError("e_cosi_from_poincare: (P2^2+Q2^2)/2 must be below P1+P3");
    // e^2 = 1 - (1 - s/L)^2 written without cancellation.
    const double e2 = s * (2.0 * L - s) / (L * L);
    if (e2 < 0.0) throw DomainError("e_cosi_from_poincare: negative radicand");
    return {std::sqrt(e2), (p.P1 - s) / (L - s)};
}

namespace detail {

template <class S>
struct EquinoctialFrame {
    std::array<S, 3> f, g;
};

template <class S>
EquinoctialFrame<S> equinoctial_frame(S p, S q)
{
    const S d = S(1) + p * p + q * q;
    return {{(S(1) - p * p + q * q) / d, S(2) * p * q / d, S(-2) * p / d},
            {S(2) * p * q / d, (S(1) + p * p - q * q) / d, S(2) * q / d}};
}

/// Solves F - k sin F + h cos F = lambda for the eccentric longitude F.
template <class S>
S solve_eccentric_longitude(S lambda, S k, S h)
{
    const S eps = std::numeric_limits<S>::epsilon();
    auto residual = [&](S F) { return F - k * std::sin(F) + h * std::cos(F) - lambda; };
    S F = lambda;
    for (int it = 0; it < 50; ++it) {
        const S r = residual(F);
        if (r == S(0)) return F;
        const S step = r / (S(1) - k * std::cos(F) - h * std::sin(F));
        F -= step;
        if (std::abs(step) <= S(5) * eps * (S(1) + std::abs(F))) return F;
    }
    const S e = std::hypot(k, h);
    S lo = lambda - e - S(1e-12), hi = lambda + e + S(1e-12);
    for (int it = 0; it < 200; ++it) {
        const S mid = (lo + hi) / S(2);
        if (mid == lo || mid == hi) break;
        (residual(mid) < S(0) ? lo : hi) = mid;
    }
    F = (lo + hi) / S(2);
    if (std::abs(residual(F)) > S(1e-12) * (S(1) + std::abs(lambda)))
        throw NumericalFailure("solve_eccentric_longitude: no convergence");
    return F;
}

/// Poincare-Delaunay -> (xi, eta) carried out in the scalar S.
template <class S>
std::array<S, 6> cartesian_from_poincare_t(const PoincareDelaunay& z)
{
    const S P1 = z.P1, P2 = z.P2, P3 = z.P3, Q2 = z.Q2;
    const S L = P1 + P3;
    const S s = (P2 * P2 + Q2 * Q2) / S(2);
    if (!(L > S(0)) || !(s < L)) throw DomainError("cartesian_from_poincare: requires 0 <= (P2^2+Q2^2)/2 < P1+P3");
    const S G = L - s;
    const S H = P1 - s;
    if (P3 < S(0) || !(G + H > S(0))) throw DomainError("cartesian_from_poincare: requires 0 <= P3 < 2G");

    const S a = L * L;
    const S root = G / L; // sqrt(1 - e^2)
    const S c = std::sqrt(S(2) * L / (S(1) + root));
    const S k = P2 / c;   // e cos(g+h)
    const S hh = -Q2 / c; // e sin(g+h)
    const S beta = S(1) / (S(1) + root);

    const S Omega = S(z.Q1) - S(z.Q3);
    const S t = std::sqrt(P3 / (G + H)); // tan(i/2)
    const auto fr = equinoctial_frame<S>(t * std::sin(Omega), t * std::cos(Omega));

    const S F = solve_eccentric_longitude<S>(S(z.Q1), k, hh);
    const S cF = std::cos(F), sF = std::sin(F);
    const S X = a * ((S(1) - hh * hh * beta) * cF + hh * k * beta * sF - k);
    const S Y = a * (hh * k * beta * cF + (S(1) - k * k * beta) * sF - hh);
    const S r = a * (S(1) - k * cF - hh * sF);
    const S scale = a * a / (L * L * L * r);
    const S Xd = scale * (hh * k * beta * cF - (S(1) - hh * hh * beta) * sF);
    const S Yd = scale * ((S(1) - k * k * beta) * cF - hh * k * beta * sF);

    std::array<S, 6> out;
    for (int i = 0; i < 3; ++i) {
        out[i] = X * fr.f[i] + Y * fr.g[i];
        out[3 + i] = Xd * fr.f[i] + Yd * fr.g[i];
    }
    return out;
}

} // namespace detail

/// Poincare-Delaunay -> Cartesian without passing through g or ell separately,
/// so it is smooth through e = 0. States with Q1 = i*pi, Q2 = 0, Q3 = j*pi map
/// onto {xi2 = xi3 = eta1 = 0} up to the rounding of sin((i - j) pi).
inline CartesianState cartesian_from_poincare(const PoincareDelaunay& z)
{
    const auto v = detail::cartesian_from_poincare_t<double>(z);
    return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

/// Cartesian -> Poincare-Delaunay, regular at e = 0. Angles come back in
/// (-pi, pi]; callers that track winding unwrap them.
inline PoincareDelaunay poincare_from_cartesian(const CartesianState& s)
{
    const double r = norm(s.xi);
    if (!(r > 0.0)) throw DomainError("poincare_from_cartesian: zero radius");
    const double inv_a = 2.0 / r - dot(s.eta, s.eta);
    if (!(inv_a > 0.0)) throw DomainError("poincare_from_cartesian: state is not bound");
    const Vec3 hv = angular_momentum(s);
    const double G = norm(hv);
    if (!(G > 0.0)) throw DomainError("poincare_from_cartesian: rectilinear state");
    const double a = 1.0 / inv_a;
    const double L = std::sqrt(a);
    if (!(hv[2] > -G * (1.0 - 1e-12))) throw DomainError("poincare_from_cartesian: retrograde equatorial orbit");

    const double p = hv[0] / (G + hv[2]);
    const double q = -hv[1] / (G + hv[2]);
    const auto fr = detail::equinoctial_frame<double>(p, q);

    const Vec3 vxh = cross(s.eta, hv);
    const Vec3 ev{vxh[0] - s.xi[0] / r, vxh[1] - s.xi[1] / r, vxh[2] - s.xi[2] / r};
    const double k = dot(ev, fr.f);
    const double hh = dot(ev, fr.g);
    const double root = G / L;
    if (!(root > 0.0) || root > 1.0 + 1e-12) throw DomainError("poincare_from_cartesian: inconsistent state");
    const double beta = 1.0 / (1.0 + root);

    const double X = dot(s.xi, fr.f), Y = dot(s.xi, fr.g);
    const double cF = k + ((1.0 - k * k * beta) * X - hh * k * beta * Y) / (a * root);
    const double sF = hh + ((1.0 - hh * hh * beta) * Y - hh * k * beta * X) / (a * root);
    const double F = std::atan2(sF, cF);
    const double lambda = F - k * std::sin(F) + hh * std::cos(F);
    const double Omega = (p == 0.0 && q == 0.0) ? 0.0 : std::atan2(p, q);

    const double e2 = k * k + hh * hh;
    const double c = std::sqrt(2.0 * L * beta);
    PoincareDelaunay z;
    z.Q1 = lambda;
    z.Q3 = lambda - Omega;
    z.Q2 = -c * hh;
    z.P2 = c * k;
    z.P1 = L * e2 * beta + hv[2];
    z.P3 = (hv[0] * hv[0] + hv[1] * hv[1]) / (G + hv[2]);
    return z;
}

inline DelaunayElements delaunay_from_cartesian(const CartesianState& s)
{
    return delaunay_from_orbital(cartesian_to_orbital(s));
}

} // namespace hillorb
