#include <gtest/gtest.h>

#include <random>

#include "hillorb/elements.hpp"
#include "hillorb/errors.hpp"

#include "support.hpp"

using namespace hillorb;
namespace ht = hillorb::testing;

TEST(SolveKepler, SymmetryForcedRoots)
{
    EXPECT_EQ(solve_kepler(0.0, 0.3), 0.0);
    EXPECT_NEAR(solve_kepler(kPi, 0.7), kPi, 1e-15);
}

TEST(SolveKepler, ReferenceValue)
{
    // independent fixed-point iteration E = M + e sin E
    double E = 1.0;
    for (int i = 0; i < 200; ++i) E = 1.0 + 0.1 * std::sin(E);
    EXPECT_NEAR(solve_kepler(1.0, 0.1), E, 1e-14);
    EXPECT_NEAR(solve_kepler(1.0, 0.1), 1.08860, 5e-6);
}

TEST(SolveKepler, ResidualOverGrid)
{
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j <= 18; ++j) {
            const double M = kTwoPi * i / 64.0, e = 0.05 * j;
            const double E = solve_kepler(M, e);
            EXPECT_LE(std::abs(E - e * std::sin(E) - M), 1e-14) << M << " " << e;
        }
}

TEST(SolveKepler, ContinuousAcrossTurns)
{
    for (double M : {0.3, 2.0, -1.2})
        EXPECT_NEAR(solve_kepler(M + kTwoPi, 0.4), solve_kepler(M, 0.4) + kTwoPi, 1e-13);
}

TEST(SolveKepler, RejectsUnboundEccentricity)
{
    EXPECT_THROW(solve_kepler(1.0, 1.0), NumericalFailure);
    EXPECT_THROW(solve_kepler(std::nan(""), 0.1), DomainError);
}

TEST(OrbitalToCartesian, CircularEquatorialAtEpoch)
{
    const CartesianState s = orbital_to_cartesian({1.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    EXPECT_NEAR(s.xi[0], 1.0, 1e-15);
    EXPECT_NEAR(s.xi[1], 0.0, 1e-15);
    EXPECT_NEAR(s.eta[1], 1.0, 1e-15);
    EXPECT_NEAR(s.eta[0], 0.0, 1e-15);
}

TEST(OrbitalToCartesian, PolarQuarterTurn)
{
    const CartesianState s = orbital_to_cartesian({1.0, 0.0, kPi / 2, 0.0, 0.0, kPi / 2});
    EXPECT_NEAR(s.xi[0], 0.0, 1e-15);
    EXPECT_NEAR(s.xi[2], 1.0, 1e-15);
    EXPECT_NEAR(s.eta[0], -1.0, 1e-15);
    EXPECT_NEAR(s.eta[2], 0.0, 1e-15);
}

TEST(OrbitalToCartesian, EnergyAndAngularMomentum)
{
    const OrbitalElements el{1.0, 0.1, 0.3, 0.2, 0.4, 0.5};
    const CartesianState s = orbital_to_cartesian(el);
    const Vec3 h = angular_momentum(s);
    EXPECT_NEAR(norm(h), std::sqrt(0.99), 1e-14);
    EXPECT_NEAR(h[2], std::sqrt(0.99) * std::cos(0.3), 1e-14);
    EXPECT_NEAR(kepler_energy(s), -0.5, 1e-14);
}

TEST(OrbitalToCartesian, RejectsInvalidElements)
{
    EXPECT_THROW(orbital_to_cartesian({1.0, 1.0, 0, 0, 0, 0}), DomainError);
    EXPECT_THROW(orbital_to_cartesian({-1.0, 0.1, 0, 0, 0, 0}), DomainError);
}

TEST(CartesianToOrbital, VisVivaSample)
{
    const OrbitalElements el = cartesian_to_orbital({{1, 0, 0}, {0, 1.1, 0}});
    EXPECT_NEAR(el.a, 1.0 / (2.0 - 1.21), 1e-13);
    EXPECT_NEAR(el.e, 0.21, 1e-13);
    EXPECT_NEAR(el.inc, 0.0, 1e-15);
}

TEST(CartesianToOrbital, CircularEquatorial)
{
    const OrbitalElements el = cartesian_to_orbital({{1, 0, 0}, {0, 1, 0}});
    EXPECT_NEAR(el.a, 1.0, 1e-15);
    EXPECT_NEAR(el.e, 0.0, 1e-15);
    EXPECT_NEAR(el.inc, 0.0, 1e-15);
}

TEST(CartesianToOrbital, RejectsUnboundAndRectilinear)
{
    EXPECT_THROW(cartesian_to_orbital({{1, 0, 0}, {0, 1.5, 0}}), DomainError);
    EXPECT_THROW(cartesian_to_orbital({{1, 0, 0}, {0.5, 0, 0}}), DomainError);
    EXPECT_THROW(cartesian_to_orbital({{0, 0, 0}, {0, 1, 0}}), DomainError);
}

TEST(Delaunay, DirectFormulas)
{
    DelaunayElements d = delaunay_from_orbital({4.0, 0.0, 0.0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(d.L, 2.0);
    EXPECT_DOUBLE_EQ(d.G, 2.0);
    EXPECT_DOUBLE_EQ(d.H, 2.0);
    EXPECT_TRUE(d.circular);
    EXPECT_TRUE(d.equatorial);

    d = delaunay_from_orbital({1.0, 0.6, kPi / 3, 0.1, 0.2, 0.3});
    EXPECT_NEAR(d.L, 1.0, 1e-15);
    EXPECT_NEAR(d.G, 0.8, 1e-15);
    EXPECT_NEAR(d.H, 0.4, 1e-15);
    EXPECT_DOUBLE_EQ(d.h, 0.1);
    EXPECT_DOUBLE_EQ(d.g, 0.2);
    EXPECT_DOUBLE_EQ(d.ell, 0.3);
    EXPECT_FALSE(d.circular);
}

TEST(Delaunay, RoundTripRecoversShape)
{
    std::mt19937_64 rng(1);
    for (int n = 0; n < 200; ++n) {
        const OrbitalElements el = ht::random_orbital(rng, 0.8);
        const OrbitalElements back = orbital_from_delaunay(delaunay_from_orbital(el));
        EXPECT_NEAR(back.a, el.a, 1e-12 * el.a);
        EXPECT_NEAR(back.e, el.e, 1e-12);
        EXPECT_NEAR(back.inc, el.inc, 1e-12);
    }
}

TEST(Poincare, DirectFormulas)
{
    PoincareDelaunay p = poincare_from_delaunay({1, 1, 1, 0, 0, 0, false, false});
    EXPECT_EQ(p.Q1, 0.0);
    EXPECT_EQ(p.Q2, 0.0);
    EXPECT_EQ(p.P1, 1.0);
    EXPECT_EQ(p.P2, 0.0);
    EXPECT_EQ(p.P3, 0.0);

    p = poincare_from_delaunay({1.0, 0.8, 0.4, 0, 0, 0, false, false});
    EXPECT_NEAR(p.P1, 0.6, 1e-15);
    EXPECT_NEAR(p.P2, std::sqrt(0.4), 1e-15);
    EXPECT_NEAR(p.P3, 0.4, 1e-15);
    EXPECT_EQ(p.Q2, 0.0);
}

TEST(Poincare, InvariantsAndRoundTrip)
{
    std::mt19937_64 rng(2);
    for (int n = 0; n < 300; ++n) {
        const DelaunayElements d = delaunay_from_orbital(ht::random_orbital(rng, 0.8));
        const PoincareDelaunay p = poincare_from_delaunay(d);
        EXPECT_NEAR(p.L(), d.L, 1e-14);
        EXPECT_NEAR(p.P2 * p.P2 + p.Q2 * p.Q2, 2.0 * (d.L - d.G), 1e-13);
        const DelaunayElements back = delaunay_from_poincare(p);
        EXPECT_NEAR(back.L, d.L, 1e-12);
        EXPECT_NEAR(back.G, d.G, 1e-12);
        EXPECT_NEAR(back.H, d.H, 1e-12);
        if (!d.circular && !d.equatorial) {
            EXPECT_NEAR(std::remainder(back.g - d.g, kTwoPi), 0.0, 1e-9);
            EXPECT_NEAR(std::remainder(back.h - d.h, kTwoPi), 0.0, 1e-12);
            EXPECT_NEAR(std::remainder(back.ell - d.ell, kTwoPi), 0.0, 1e-9);
        }
    }
}

TEST(Poincare, RejectsNegativeRadicand)
{
    EXPECT_THROW(poincare_from_delaunay({1.0, 1.1, 0.5, 0, 0, 0, false, false}), DomainError);
    PoincareDelaunay p;
    p.P1 = 0.5;
    p.P2 = 2.0;
    EXPECT_THROW(delaunay_from_poincare(p), DomainError);
}

TEST(EccentricityInclination, Samples)
{
    PoincareDelaunay p;
    p.P1 = 0.6;
    p.P3 = 0.4;
    EXPECT_EQ(e_cosi_from_poincare(p).e, 0.0);
    p.P2 = std::sqrt(0.4);
    const auto ei = e_cosi_from_poincare(p);
    EXPECT_NEAR(ei.e, 0.6, 1e-15);
    EXPECT_NEAR(ei.cos_i, 0.5, 1e-15);
}

TEST(EccentricityInclination, MatchesInverseChain)
{
    std::mt19937_64 rng(3);
    for (int n = 0; n < 200; ++n) {
        const OrbitalElements el = ht::random_orbital(rng, 0.8);
        const auto ei = e_cosi_from_poincare(poincare_from_delaunay(delaunay_from_orbital(el)));
        EXPECT_NEAR(ei.e, el.e, 1e-12);
        EXPECT_NEAR(ei.cos_i, std::cos(el.inc), 1e-12);
    }
}

TEST(Conversions, PreserveEnergyAndAngularMomentum)
{
    std::mt19937_64 rng(4);
    for (int n = 0; n < 200; ++n) {
        const CartesianState s = orbital_to_cartesian(ht::random_orbital(rng, 0.8));
        const CartesianState t = cartesian_from_poincare(poincare_from_cartesian(s));
        EXPECT_NEAR(kepler_energy(t), kepler_energy(s), 1e-12);
        const Vec3 a = angular_momentum(s), b = angular_momentum(t);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
    }
}

TEST(Conversions, FullChainIdentity)
{
    std::mt19937_64 rng(5);
    for (int n = 0; n < 300; ++n) {
        const CartesianState s = orbital_to_cartesian(ht::random_orbital(rng, 0.8));
        const PoincareDelaunay p = poincare_from_delaunay(delaunay_from_orbital(cartesian_to_orbital(s)));
        const CartesianState back = cartesian_from_poincare(p);
        EXPECT_LE(ht::max_abs(back, s) / ht::state_scale(s), 1e-10);
        EXPECT_LE(ht::pd_distance(poincare_from_cartesian(s), p), 1e-10);
    }
}

TEST(Conversions, RegularAsEccentricityVanishes)
{
    OrbitalElements el{1.1, 0.0, 0.9, 0.3, 0.2, 1.7};
    const PoincareDelaunay p0 = poincare_from_cartesian(orbital_to_cartesian(el));
    double prev = 1.0;
    for (int k = 1; k <= 12; ++k) {
        el.e = std::pow(10.0, -k);
        const PoincareDelaunay p = poincare_from_cartesian(orbital_to_cartesian(el));
        const double gap = ht::pd_distance(p, p0);
        EXPECT_TRUE(std::isfinite(gap));
        EXPECT_LT(gap, prev) << k;
        prev = gap;
    }
    EXPECT_LT(prev, 1e-10);
}

TEST(Conversions, PlaneAImageIsOnL1)
{
    // Q1 = i pi, Q2 = 0, Q3 = j pi lands on {xi2 = xi3 = eta1 = 0}
    for (int i : {0, 1, 2})
        for (int j : {0, 1, -1}) {
            PoincareDelaunay z;
            z.Q1 = i * kPi;
            z.Q3 = j * kPi;
            z.P1 = 0.8;
            z.P3 = 0.2;
            const CartesianState s = cartesian_from_poincare(z);
            EXPECT_NEAR(s.xi[1], 0.0, 1e-15);
            EXPECT_NEAR(s.xi[2], 0.0, 1e-15);
            EXPECT_NEAR(s.eta[0], 0.0, 1e-15);
        }
}

TEST(Conversions, ExtendedPrecisionMapAgrees)
{
    std::mt19937_64 rng(6);
    for (int n = 0; n < 50; ++n) {
        const PoincareDelaunay p = ht::random_poincare(rng, 0.5);
        const auto ld = detail::cartesian_from_poincare_t<long double>(p);
        const CartesianState s = cartesian_from_poincare(p);
        for (int i = 0; i < 3; ++i) {
            EXPECT_NEAR(double(ld[i]), s.xi[i], 1e-14);
            EXPECT_NEAR(double(ld[3 + i]), s.eta[i], 1e-14);
        }
    }
}
