#pragma once

// Hamiltonians of the Hill lunar problem with an oblate secondary:
//
//   H_a  restricted three-body form near the secondary (limit checks only)
//   H_b  Hill limit in Hill units
//   H_c  epsilon-scaled form, split as
//        -H_c = eps^-3 F01 + F02 + eps^3 F1 + eps^9 FR
//
// and the equations of motion of H_c in Cartesian variables.

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "hillorb/elements.hpp"
#include "hillorb/errors.hpp"
#include "hillorb/legendre.hpp"

namespace hillorb {

struct HillParams {
    double epsilon = 0.1;
    double a_e = 0.5;
    double b_e = 0.5;
    /// Scaled zonal coefficients J~_{2n}, n = 1..; index 0 holds J~_2.
    std::vector<double> j_tilde{0.01, 0.0};
    int n_zonal = 2;
    /// Mass ratio; only used by the restricted-problem limit check.
    double mu = 0.0;
    /// When false, the flow keeps only eps^-3 F01 + F02 (the integrable part).
    bool perturbations = true;

    double epsilon_tilde() const { return epsilon * epsilon * epsilon; }

    double j_tilde_n(int n) const
    {
        return (n >= 1 && n <= n_zonal && static_cast<std::size_t>(n) <= j_tilde.size()) ? j_tilde[n - 1] : 0.0;
    }

    static HillParams from_epsilon_tilde(double eps_tilde)
    {
        HillParams p;
        p.epsilon = std::cbrt(eps_tilde);
        return p;
    }

    void validate() const
    {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("HillParams: epsilon must be positive");
        if (!(a_e >= 0.0) || !(b_e >= 0.0)) throw DomainError("HillParams: radii must be non-negative");
        if (n_zonal < 0) throw DomainError("HillParams: n_zonal must be non-negative");
        for (double j : j_tilde)
            if (!std::isfinite(j)) throw DomainError("HillParams: non-finite zonal coefficient");
    }
};

/// Components of -H_c at one state.
struct SplitValues {
    double F01 = 0.0, F02 = 0.0, F1 = 0.0, FR = 0.0;
};

using State6 = std::array<double, 6>;

inline State6 to_state6(const CartesianState& s)
{
    return {s.xi[0], s.xi[1], s.xi[2], s.eta[0], s.eta[1], s.eta[2]};
}

inline CartesianState from_state6(const State6& z) { return {{z[0], z[1], z[2]}, {z[3], z[4], z[5]}}; }

// Maclaurin spheroid -----------------------------------------------------

/// J_2n of a homogeneous Maclaurin spheroid, explicit product form.
inline double maclaurin_j2n(double a_e, double b_e, int n)
{
    if (!(a_e > 0.0) || !(b_e > 0.0)) throw DomainError("maclaurin_j2n: radii must be positive");
    if (b_e > a_e) throw DomainError("maclaurin_j2n: prolate bodies are not modelled");
    if (n < 1) throw DomainError("maclaurin_j2n: n must be >= 1");
    const double flat = 1.0 - (b_e * b_e) / (a_e * a_e);
    double v = (n % 2 == 1) ? 1.0 : -1.0;
    for (int k = 1; k <= n; ++k) v *= flat * (2.0 * k - 1.0) / (2.0 * k + 3.0);
    return v;
}

/// Squared angular velocity of the primaries' relative circular motion (G = 1).
inline double omega_e_squared(double m1, double m2, double r, double a_e, double b_e, int N)
{
    if (!(r > a_e)) throw DomainError("omega_e_squared: zonal series diverges for r <= a_e");
    if (N < 1) throw DomainError("omega_e_squared: N must be >= 1");
    double sum = 0.0;
    for (int n = 1; n <= N; ++n) {
        const double ratio = std::pow(a_e, 2 * n) / std::pow(r, 2 * n + 2);
        sum += (2.0 * n + 1.0) * ratio * maclaurin_j2n(a_e, b_e, n) * legendre_at_zero(2 * n);
    }
    return (m1 + m2) * (1.0 - sum);
}

/// J~_2n for a Maclaurin body of shape (a_e, b_e): C_2n = -J_2n rescaled by eps^-6n.
inline std::vector<double> j_tilde_from_maclaurin(double a_e, double b_e, double epsilon, int N)
{
    std::vector<double> out;
    for (int n = 1; n <= N; ++n) out.push_back(-maclaurin_j2n(a_e, b_e, n) / std::pow(epsilon, 6 * n));
    return out;
}

// Zonal building blocks ---------------------------------------------------

namespace detail {

/// a^l r^-(l+1) P_l(x3/r) and its gradient.
template <class S>
S zonal_term(int l, S a, const std::array<S, 3>& x, std::array<S, 3>* grad)
{
    const S r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const S r = std::sqrt(r2);
    const S u = x[2] / r;
    const auto [P, dP] = legendre_with_derivative(l, u);
    const S scale = std::pow(a, l) / std::pow(r, l + 1);
    if (grad) {
        for (int i = 0; i < 3; ++i) {
            const S du = ((i == 2 ? S(1) : S(0)) - u * x[i] / r) / r;
            (*grad)[i] = scale * (-S(l + 1) * x[i] / r2 * P + dP * du);
        }
    }
    return scale * P;
}

inline void require_nonzero(const Vec3& x, const char* who)
{
    if (!(dot(x, x) > 0.0)) throw SingularityError(std::string(who) + ": r = 0");
}

} // namespace detail

/// F1 = r^2 P2(xi1/r) + J~_2 a_e^2 r^-3 P2(xi3/r).
inline double F1_cartesian(const Vec3& xi, const HillParams& p, Vec3* grad = nullptr)
{
    detail::require_nonzero(xi, "F1_cartesian");
    // r^2 P2(xi1/r) = xi1^2 - (xi2^2 + xi3^2)/2
    double v = xi[0] * xi[0] - 0.5 * (xi[1] * xi[1] + xi[2] * xi[2]);
    if (grad) *grad = {2.0 * xi[0], -xi[1], -xi[2]};
    const double j2 = p.j_tilde_n(1);
    if (j2 != 0.0) {
        Vec3 g{};
        v += j2 * detail::zonal_term(2, p.a_e, xi, grad ? &g : nullptr);
        if (grad)
            for (int i = 0; i < 3; ++i) (*grad)[i] += j2 * g[i];
    }
    return v;
}

/// FR = sum_{n>=2} eps^(6n-12) J~_2n a_e^2n r^-(2n+1) P_2n(xi3/r).
inline double FR_cartesian(const Vec3& xi, const HillParams& p, Vec3* grad = nullptr)
{
    detail::require_nonzero(xi, "FR_cartesian");
    double v = 0.0;
    if (grad) *grad = {0.0, 0.0, 0.0};
    for (int n = 2; n <= p.n_zonal; ++n) {
        const double j = p.j_tilde_n(n);
        if (j == 0.0) continue;
        const double c = std::pow(p.epsilon, 6 * n - 12) * j;
        Vec3 g{};
        v += c * detail::zonal_term(2 * n, p.a_e, xi, grad ? &g : nullptr);
        if (grad)
            for (int i = 0; i < 3; ++i) (*grad)[i] += c * g[i];
    }
    return v;
}

/// H_c evaluated term by term from its defining expression.
inline double eval_Hc(const CartesianState& s, const HillParams& p)
{
    detail::require_nonzero(s.xi, "eval_Hc");
    const double eps = p.epsilon;
    const double r = norm(s.xi);
    double zonal = 0.0;
    for (int n = 1; n <= p.n_zonal; ++n) {
        const double j = p.j_tilde_n(n);
        if (j == 0.0) continue;
        zonal += std::pow(p.a_e / r, 2 * n) * std::pow(eps, 6 * n) * j * legendre(2 * n, s.xi[2] / r);
    }
    const double quad = s.xi[0] * s.xi[0] - 0.5 * (s.xi[1] * s.xi[1] + s.xi[2] * s.xi[2]);
    return std::pow(eps, -3) * (0.5 * dot(s.eta, s.eta) - 1.0 / r) - (s.xi[0] * s.eta[1] - s.xi[1] * s.eta[0])
        - eps * eps * eps * quad - std::pow(eps, -3) / r * zonal;
}

inline SplitValues eval_Hc_split(const CartesianState& s, const HillParams& p)
{
    detail::require_nonzero(s.xi, "eval_Hc_split");
    SplitValues v;
    v.F01 = 1.0 / norm(s.xi) - 0.5 * dot(s.eta, s.eta);
    v.F02 = s.xi[0] * s.eta[1] - s.xi[1] * s.eta[0];
    v.F1 = F1_cartesian(s.xi, p);
    v.FR = FR_cartesian(s.xi, p);
    return v;
}

/// K = -H_c restricted to the terms the flow includes.
inline double generator_K(const CartesianState& s, const HillParams& p)
{
    const SplitValues v = eval_Hc_split(s, p);
    const double e3 = p.epsilon_tilde();
    double K = v.F01 / e3 + v.F02;
    if (p.perturbations) K += e3 * v.F1 + e3 * e3 * e3 * v.FR;
    return K;
}

template <class S>
using State6T = std::array<S, 6>;

/// Hamilton's equations of H_c = -K: dxi/dt = -dK/deta, deta/dt = dK/dxi.
/// Generic in the scalar so the propagator can run in extended precision.
template <class S>
State6T<S> vector_field_t(const State6T<S>& z, const HillParams& p)
{
    const std::array<S, 3> xi{z[0], z[1], z[2]};
    const S r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    if (!(r2 > S(0))) throw SingularityError("vector_field: r = 0");
    const S eps = S(p.epsilon);
    const S e3 = eps * eps * eps;
    const S inv_e3 = S(1) / e3;
    const S inv_r3 = S(1) / (r2 * std::sqrt(r2));

    State6T<S> dz{};
    dz[0] = inv_e3 * z[3] + z[1];
    dz[1] = inv_e3 * z[4] - z[0];
    dz[2] = inv_e3 * z[5];
    dz[3] = -inv_e3 * z[0] * inv_r3 + z[4];
    dz[4] = -inv_e3 * z[1] * inv_r3 - z[3];
    dz[5] = -inv_e3 * z[2] * inv_r3;
    if (p.perturbations) {
        // grad of r^2 P2(xi1/r)
        std::array<S, 3> g{S(2) * xi[0], -xi[1], -xi[2]};
        const S ae = S(p.a_e);
        std::array<S, 3> gz{};
        if (const S j2 = S(p.j_tilde_n(1)); j2 != S(0)) {
            detail::zonal_term<S>(2, ae, xi, &gz);
            for (int i = 0; i < 3; ++i) g[i] += j2 * gz[i];
        }
        const S e6 = e3 * e3;
        for (int n = 2; n <= p.n_zonal; ++n) {
            const S j = S(p.j_tilde_n(n));
            if (j == S(0)) continue;
            // eps^9 * eps^(6n-12) relative to the eps^3 F1 prefactor is eps^(6n-6)
            const S c = std::pow(e6, n - 1) * j;
            detail::zonal_term<S>(2 * n, ae, xi, &gz);
            for (int i = 0; i < 3; ++i) g[i] += c * gz[i];
        }
        for (int i = 0; i < 3; ++i) dz[3 + i] += e3 * g[i];
    }
    return dz;
}

inline State6 vector_field(const State6& z, const HillParams& p) { return vector_field_t<double>(z, p); }

inline CartesianState vector_field(const CartesianState& s, const HillParams& p)
{
    return from_state6(vector_field(to_state6(s), p));
}

// Anti-symplectic reflections (time reversal is implied) ---------------------

inline State6 reflect_R1(const State6& z) { return {z[0], -z[1], -z[2], -z[3], z[4], z[5]}; }
inline State6 reflect_R2(const State6& z) { return {z[0], -z[1], z[2], -z[3], z[4], -z[5]}; }

// Hill and restricted-problem Hamiltonians -------------------------------

/// H_b in Hill units with oblateness coefficients C_2n (C_2n = -J_2n).
inline double eval_Hb(const Vec3& x, const Vec3& y, double a_e, std::span<const double> c2n)
{
    detail::require_nonzero(x, "eval_Hb");
    const double r = norm(x);
    double U = 0.0;
    for (std::size_t n = 1; n <= c2n.size(); ++n)
        U += std::pow(a_e / r, 2.0 * n) * c2n[n - 1] * legendre(2 * static_cast<int>(n), x[2] / r);
    U /= r;
    return 0.5 * dot(y, y) - (x[0] * y[1] - x[1] * y[0]) - 1.0 / r - r * r * legendre(2, x[0] / r) - U;
}

/// H_b with coefficients taken from scaled parameters: a_e -> eps^2 a_e, C_2n = eps^6n J~_2n.
inline double eval_Hb(const Vec3& x, const Vec3& y, const HillParams& p)
{
    std::vector<double> c;
    for (int n = 1; n <= p.n_zonal; ++n) c.push_back(std::pow(p.epsilon, 6 * n) * p.j_tilde_n(n));
    return eval_Hb(x, y, p.epsilon * p.epsilon * p.a_e, c);
}

/// Closed form of U1 = (1 - mu)/sqrt(1 + r^2 - 2 x1).
inline double U1_closed(const Vec3& x, double mu)
{
    const double d2 = 1.0 + dot(x, x) - 2.0 * x[0];
    if (!(d2 > 0.0)) throw SingularityError("U1: collision with the larger primary");
    return (1.0 - mu) / std::sqrt(d2);
}

/// Partial sum (1 - mu) sum_{n=0}^{N} P_n(x1/r) r^n.
inline double U1_series(const Vec3& x, double mu, int N)
{
    const double r = norm(x);
    if (r == 0.0) return 1.0 - mu;
    double s = 0.0, rn = 1.0;
    for (int n = 0; n <= N; ++n, rn *= r) s += legendre(n, x[0] / r) * rn;
    return (1.0 - mu) * s;
}

/// H_a near the secondary, physical zonal coefficients J_2n.
inline double eval_Ha(const Vec3& x, const Vec3& y, double mu, double a_e, std::span<const double> j2n)
{
    if (!(mu > 0.0 && mu < 1.0)) throw DomainError("eval_Ha: mu must lie in (0, 1)");
    detail::require_nonzero(x, "eval_Ha");
    const double r = norm(x);
    double zonal = 0.0;
    for (std::size_t n = 1; n <= j2n.size(); ++n)
        zonal += std::pow(a_e / r, 2.0 * n) * j2n[n - 1] * legendre(2 * static_cast<int>(n), x[2] / r);
    const double U2 = mu / r - mu / r * zonal;
    const double y2s = y[1] - 1.0 + mu;
    return 0.5 * (y[0] * y[0] + y2s * y2s + y[2] * y[2]) - ((x[0] - 1.0 + mu) * y2s - x[1] * y[0])
        - U1_closed(x, mu) - U2;
}

} // namespace hillorb
