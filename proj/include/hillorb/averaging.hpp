#pragma once

// Element form of the first-order perturbation F1, its averages over Q1 and
// then Q3, the doubly averaged Hamiltonian, the two generating functions and
// the first-order Lie change of variables.
//
// Angles: Q1 = lambda (mean longitude), Q3 = ell + g, phi = g + h recovered as
// atan2(-Q2, P2). Every series carries the a^2 (r^2 terms) and a^-3 (r^-3
// terms) factors explicitly, with a = L^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>

#include "hillorb/elements.hpp"
#include "hillorb/errors.hpp"
#include "hillorb/hansen.hpp"
#include "hillorb/model.hpp"

namespace hillorb {

struct InclinationCoeffs {
    double I1 = 0.0, I2 = 0.0, I3 = 0.0, I4 = 0.0, I5 = 0.0;
};

inline InclinationCoeffs inclination_coeffs(double G, double H)
{
    if (!(G > 0.0)) throw DomainError("inclination_coeffs: G must be positive");
    if (std::abs(H) > G * (1.0 + 1e-14)) throw DomainError("inclination_coeffs: |H| must not exceed G");
    const double c = H / G;
    return {0.375 * c * c - 0.125, 0.1875 * (1.0 - c) * (1.0 - c), 0.1875 * (1.0 + c) * (1.0 + c),
            0.375 * (1.0 - c * c), 0.25 - 0.75 * c * c};
}

struct TruncationSpec {
    int K_max = 8;   // half-width |k - m| <= K_max of every Hansen sum
    int e_order = 3; // retained eccentricity order

    void validate() const
    {
        if (e_order < 0) throw DomainError("TruncationSpec: e_order must be non-negative");
        if (K_max < e_order + 2) throw DomainError("TruncationSpec: K_max must be at least e_order + 2");
    }

    static TruncationSpec from_e_order(int e_order) { return {e_order + 2, e_order}; }
};

namespace detail {

struct ElementView {
    double L, a, e, cos_i, phi, Q1, Q3;
    InclinationCoeffs I;
};

inline ElementView element_view(const PoincareDelaunay& p)
{
    const auto ec = e_cosi_from_poincare(p);
    const double L = p.L();
    const double s = p.s();
    ElementView v;
    v.L = L;
    v.a = L * L;
    v.e = ec.e;
    v.cos_i = std::clamp(ec.cos_i, -1.0, 1.0);
    v.phi = s > 0.0 ? std::atan2(-p.Q2, p.P2) : 0.0;
    v.Q1 = p.Q1;
    v.Q3 = p.Q3;
    v.I = inclination_coeffs(1.0, v.cos_i);
    return v;
}

/// Sum of c * cos(a1 Q1 + a3 Q3 + ap phi).
struct CosineSum {
    const ElementView& v;
    double value = 0.0;
    void add(double c, int a1, int a3, int ap)
    {
        if (c != 0.0) value += c * std::cos(a1 * v.Q1 + a3 * v.Q3 + ap * v.phi);
    }
};

/// Sum of c * sin(a1 Q1 + a3 Q3 + ap phi) with exact Q1 and Q3 derivatives.
struct SineSum {
    const ElementView& v;
    double value = 0.0, dQ1 = 0.0, dQ3 = 0.0;
    void add(double c, int a1, int a3, int ap)
    {
        if (c == 0.0) return;
        const double arg = a1 * v.Q1 + a3 * v.Q3 + ap * v.phi;
        value += c * std::sin(arg);
        const double cc = c * std::cos(arg);
        dQ1 += a1 * cc;
        dQ3 += a3 * cc;
    }
};

/// Visits every harmonic of the truncated F1 series as (coefficient, a1, a3, ap).
template <class Visitor>
void for_each_F1_harmonic(const ElementView& v, const HillParams& params, const HansenTable& X, Visitor&& visit)
{
    const int K = X.k_max();
    const double A2 = v.a * v.a;
    const double Jf = params.j_tilde_n(1) * params.a_e * params.a_e / (v.a * v.a * v.a);
    const auto& I = v.I;
    for (int k = -K; k <= K; ++k) {
        const double x20 = X(2, 0, k);
        visit(A2 * I.I1 * x20, k, 0, -k);
        // cos(k Q1 - k phi) cos 2(Q1 - Q3) split into its two harmonics
        visit(0.5 * A2 * I.I4 * x20, k + 2, -2, -k);
        visit(0.5 * A2 * I.I4 * x20, k - 2, 2, -k);
        visit(Jf * I.I5 * X(-3, 0, k), k, 0, -k);
    }
    for (int k = 2 - K; k <= 2 + K; ++k) {
        const double x22 = X(2, 2, k);
        visit(A2 * I.I2 * x22, k - 4, 4, 2 - k);
        visit(A2 * I.I3 * x22, k, 0, 2 - k);
        visit(A2 * I.I4 * x22, k - 2, 2, 2 - k);
        // -(3/4) sin^2 i = -2 I4
        visit(-2.0 * Jf * I.I4 * X(-3, 2, k), k - 2, 2, 2 - k);
    }
}

inline const HansenTable& table_for(const ElementView& v, const TruncationSpec& trunc, HansenCache* cache,
                                    std::optional<HansenTable>& local)
{
    if (cache) return cache->get(v.e, trunc.K_max);
    local.emplace(v.e, trunc.K_max);
    return *local;
}

} // namespace detail

/// F1 from its Hansen series, truncated at |k - m| <= K_max.
inline double F1_elements(const PoincareDelaunay& p, const HillParams& params, const TruncationSpec& trunc,
                          HansenCache* cache = nullptr)
{
    trunc.validate();
    const auto v = detail::element_view(p);
    std::optional<HansenTable> local;
    const HansenTable& X = detail::table_for(v, trunc, cache, local);
    detail::CosineSum sum{v};
    detail::for_each_F1_harmonic(v, params, X, [&](double c, int a1, int a3, int ap) { sum.add(c, a1, a3, ap); });
    return sum.value;
}

/// Average of F1 over Q1 with Q3, phi and the momenta held fixed.
inline double F1_bar(const PoincareDelaunay& p, const HillParams& params, const TruncationSpec& trunc,
                     HansenCache* cache = nullptr)
{
    trunc.validate();
    const auto v = detail::element_view(p);
    std::optional<HansenTable> local;
    const HansenTable& X = detail::table_for(v, trunc, cache, local);
    const auto& I = v.I;
    const double A2 = v.a * v.a;
    const double Jf = params.j_tilde_n(1) * params.a_e * params.a_e / (v.a * v.a * v.a);
    const double q3 = v.Q3, phi = v.phi;
    return A2 * (I.I1 * X(2, 0, 0) + I.I2 * X(2, 2, 4) * std::cos(4.0 * q3 - 2.0 * phi)
                 + I.I3 * X(2, 2, 0) * std::cos(2.0 * phi) + I.I4 * X(2, 2, 2) * std::cos(2.0 * q3)
                 + 0.5 * I.I4 * (X(2, 0, -2) + X(2, 0, 2)) * std::cos(2.0 * q3 - 2.0 * phi))
        + Jf * (-2.0 * I.I4 * X(-3, 2, 2) * std::cos(2.0 * q3) + I.I5 * X(-3, 0, 0));
}

/// Average of F1_bar over Q3 with phi held fixed, from closed-form Hansen coefficients.
inline double F1_doublebar(const PoincareDelaunay& p, const HillParams& params)
{
    const auto v = detail::element_view(p);
    const double e2 = v.e * v.e;
    const double b = (1.0 - v.e) * (1.0 + v.e);
    const double Jf = params.j_tilde_n(1) * params.a_e * params.a_e / (v.a * v.a * v.a);
    return v.a * v.a * ((1.0 + 1.5 * e2) * v.I.I1 + 2.5 * e2 * v.I.I3 * std::cos(2.0 * v.phi))
        + Jf * v.I.I5 / (b * std::sqrt(b));
}

/// -eps~ H_d = F01 + eps~ F02 + eps~^2 F1_doublebar (the O(eps~^4) remainder dropped).
inline double doubly_averaged_hamiltonian(const PoincareDelaunay& p, const HillParams& params)
{
    const double L = p.L();
    if (!(L > 0.0)) throw DomainError("doubly_averaged_hamiltonian: P1 + P3 must be positive");
    const double et = params.epsilon_tilde();
    const double F01 = 0.5 / (L * L);
    const double F02 = p.P1 - p.s();
    return F01 + et * F02 + et * et * F1_doublebar(p, params);
}

struct GeneratorValues {
    double W1 = 0.0, W2 = 0.0;
    // Exact angle derivatives of the truncated series.
    double dW1_dQ1 = 0.0, dW1_dQ3 = 0.0, dW2_dQ3 = 0.0;

    double total() const { return W1 + W2; }
};

/// The generating functions W2^(1) (kills the Q1 dependence) and W2^(2)
/// (kills the remaining Q3 dependence), truncated like F1_elements.
inline GeneratorValues W2_eval(const PoincareDelaunay& p, const HillParams& params, const TruncationSpec& trunc,
                               HansenCache* cache = nullptr)
{
    trunc.validate();
    const auto v = detail::element_view(p);
    std::optional<HansenTable> local;
    const HansenTable& X = detail::table_for(v, trunc, cache, local);
    const double L3 = v.L * v.L * v.L;

    // -L^-3 W1 = sum over harmonics with a1 != 0 of c / a1 * sin(...)
    detail::SineSum s1{v};
    detail::for_each_F1_harmonic(v, params, X, [&](double c, int a1, int a3, int ap) {
        if (a1 != 0) s1.add(c / a1, a1, a3, ap);
    });

    const auto& I = v.I;
    const double A2 = v.a * v.a;
    const double Jf = params.j_tilde_n(1) * params.a_e * params.a_e / (v.a * v.a * v.a);
    detail::SineSum s2{v};
    s2.add(0.25 * A2 * I.I2 * X(2, 2, 4), 0, 4, -2);
    s2.add(0.5 * A2 * I.I4 * X(2, 2, 2), 0, 2, 0);
    s2.add(0.25 * A2 * I.I4 * (X(2, 0, -2) + X(2, 0, 2)), 0, 2, -2);
    s2.add(-Jf * I.I4 * X(-3, 2, 2), 0, 2, 0);

    GeneratorValues g;
    g.W1 = -L3 * s1.value;
    g.dW1_dQ1 = -L3 * s1.dQ1;
    g.dW1_dQ3 = -L3 * s1.dQ3;
    g.W2 = -L3 * s2.value;
    g.dW2_dQ3 = -L3 * s2.dQ3;
    return g;
}

enum class LieDirection { Forward, Inverse };

namespace detail {

inline double& component(PoincareDelaunay& z, int i)
{
    switch (i) {
    case 0: return z.Q1;
    case 1: return z.Q2;
    case 2: return z.Q3;
    case 3: return z.P1;
    case 4: return z.P2;
    default: return z.P3;
    }
}

} // namespace detail

/// Symplectic gradient pieces of W2 at z: d/dP_i (by central differences of
/// step 1e-6 * scale) and d/dQ_i (exact in Q1, Q3; central differences in Q2).
struct GeneratorGradient {
    std::array<double, 3> dQ{}; // dW2/dQ1, dQ2, dQ3
    std::array<double, 3> dP{}; // dW2/dP1, dP2, dP3
};

inline GeneratorGradient W2_gradient(const PoincareDelaunay& z, const HillParams& params, const TruncationSpec& trunc,
                                     HansenCache* cache = nullptr)
{
    const GeneratorValues g0 = W2_eval(z, params, trunc, cache);
    GeneratorGradient out;
    out.dQ[0] = g0.dW1_dQ1;
    out.dQ[2] = g0.dW1_dQ3 + g0.dW2_dQ3;

    const double scale = std::max(1.0, z.L());
    const double h = 1e-6 * scale;
    auto central = [&](int idx) {
        PoincareDelaunay plus = z, minus = z;
        detail::component(plus, idx) += h;
        detail::component(minus, idx) -= h;
        return (W2_eval(plus, params, trunc, cache).total() - W2_eval(minus, params, trunc, cache).total()) / (2.0 * h);
    };
    out.dQ[1] = central(1);
    for (int i = 0; i < 3; ++i) out.dP[i] = central(3 + i);
    return out;
}

/// First-order Lie change of variables z -> z +/- eps~^2 {z, W2}, with
/// {Q_i, W} = dW/dP_i and {P_i, W} = -dW/dQ_i.
inline PoincareDelaunay lie_first_order(const PoincareDelaunay& z, const HillParams& params, LieDirection direction,
                                        const TruncationSpec& trunc = {}, HansenCache* cache = nullptr)
{
    const double et = params.epsilon_tilde();
    if (et == 0.0) return z;
    const double sign = direction == LieDirection::Forward ? 1.0 : -1.0;
    const double w = sign * et * et;
    const GeneratorGradient grad = W2_gradient(z, params, trunc, cache);
    PoincareDelaunay out = z;
    out.Q1 += w * grad.dP[0];
    out.Q2 += w * grad.dP[1];
    out.Q3 += w * grad.dP[2];
    out.P1 -= w * grad.dQ[0];
    out.P2 -= w * grad.dQ[1];
    out.P3 -= w * grad.dQ[2];
    if (!(out.s() < out.L()) || !(out.L() > 0.0)) throw DomainError("lie_first_order: mapped state left the elliptic domain");
    return out;
}

/// (1/2pi) int F(Q1) dQ1 by the periodic trapezoid rule on `nodes` points.
inline double average_over_Q1(const PoincareDelaunay& p, const std::function<double(const PoincareDelaunay&)>& F,
                              int nodes = 128)
{
    double acc = 0.0;
    for (int j = 0; j < nodes; ++j) {
        PoincareDelaunay q = p;
        q.Q1 = kTwoPi * j / nodes;
        acc += F(q);
    }
    return acc / nodes;
}

/// Average over Q3. phi depends on Q2 and P2 only, so g + h stays fixed.
inline double average_over_Q3(const PoincareDelaunay& p, const std::function<double(const PoincareDelaunay&)>& F,
                              int nodes = 128)
{
    double acc = 0.0;
    for (int j = 0; j < nodes; ++j) {
        PoincareDelaunay q = p;
        q.Q3 = kTwoPi * j / nodes;
        acc += F(q);
    }
    return acc / nodes;
}

} // namespace hillorb
