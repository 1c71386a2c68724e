#pragma once

// Hansen coefficients X_k^{n,m}(e): the Fourier coefficients in mean anomaly of
// (r/a)^n exp(i m f). Evaluated by the periodic trapezoid rule in M, which is
// spectrally accurate for e < 1.

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <tuple>
#include <vector>

#include "hillorb/elements.hpp"
#include "hillorb/errors.hpp"

namespace hillorb {

struct HansenQuery {
    int n = 0;
    int m = 0;
    int k = 0;
    double e = 0.0;
};

inline constexpr int kHansenDefaultNodes = 256;
inline constexpr int kHansenMaxNodes = 4096;
inline constexpr double kHansenCauchyTol = 1e-13;

namespace detail {

struct AnomalySample {
    double M, rho, f; // mean anomaly, r/a, true anomaly
};

inline std::vector<AnomalySample> anomaly_grid(double e, int nodes)
{
    std::vector<AnomalySample> out(static_cast<std::size_t>(nodes));
    const double root = std::sqrt((1.0 - e) * (1.0 + e));
    for (int j = 0; j < nodes; ++j) {
        const double M = kTwoPi * j / nodes;
        const double E = solve_kepler(M, e);
        const double cE = std::cos(E), sE = std::sin(E);
        out[static_cast<std::size_t>(j)] = {M, 1.0 - e * cE, std::atan2(root * sE, cE - e)};
    }
    return out;
}

/// Trapezoid estimate of X_k^{n,m} for every k in [k_lo, k_hi] on one grid.
inline std::vector<double> hansen_row_on_grid(int n, int m, int k_lo, int k_hi, const std::vector<AnomalySample>& grid)
{
    std::vector<double> out(static_cast<std::size_t>(k_hi - k_lo + 1), 0.0);
    for (const auto& s : grid) {
        const double w = std::pow(s.rho, n);
        for (int k = k_lo; k <= k_hi; ++k) out[static_cast<std::size_t>(k - k_lo)] += w * std::cos(m * s.f - k * s.M);
    }
    for (double& v : out) v /= static_cast<double>(grid.size());
    return out;
}

inline void check_eccentricity(double e, const char* who)
{
    if (!(e >= 0.0 && e < 1.0)) throw DomainError(std::string(who) + ": eccentricity must lie in [0, 1)");
}

} // namespace detail

/// X_k^{n,m}(e) for k in [k_lo, k_hi], doubling the node count from `nodes`
/// until successive estimates differ by less than 1e-13 (cap 4096 nodes).
inline std::vector<double> hansen_row(int n, int m, int k_lo, int k_hi, double e, int nodes = kHansenDefaultNodes)
{
    detail::check_eccentricity(e, "hansen_row");
    if (nodes < 64 || nodes % 2 != 0) throw DomainError("hansen_row: nodes must be even and >= 64");
    if (k_hi < k_lo) return {};
    // Enough nodes to resolve the highest requested harmonic.
    while (nodes < 4 * (std::max(std::abs(k_lo), std::abs(k_hi)) + std::abs(m) + 1)) nodes *= 2;

    std::vector<double> prev = detail::hansen_row_on_grid(n, m, k_lo, k_hi, detail::anomaly_grid(e, nodes));
    while (nodes < kHansenMaxNodes) {
        nodes *= 2;
        std::vector<double> next = detail::hansen_row_on_grid(n, m, k_lo, k_hi, detail::anomaly_grid(e, nodes));
        double diff = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) diff = std::max(diff, std::abs(next[i] - prev[i]));
        prev = std::move(next);
        if (diff < kHansenCauchyTol) break;
    }
    return prev;
}

/// (1/2pi) int_0^2pi (r/a)^n cos(m f - k M) dM by the periodic trapezoid rule.
inline double hansen_quadrature(const HansenQuery& q, int nodes = kHansenDefaultNodes)
{
    return hansen_row(q.n, q.m, q.k, q.k, q.e, nodes).front();
}

/// Closed forms for the coefficients that survive double averaging.
inline std::optional<double> hansen_closed_form(int n, int m, int k, double e)
{
    detail::check_eccentricity(e, "hansen_closed_form");
    if (m != 0 || k != 0) return std::nullopt;
    if (n == 2) return 1.0 + 1.5 * e * e;
    if (n == -3) {
        const double b = (1.0 - e) * (1.0 + e);
        return 1.0 / (b * std::sqrt(b));
    }
    return std::nullopt;
}

/// (n, m) pairs that enter the element series of F1.
inline constexpr std::array<std::pair<int, int>, 4> kF1HansenPairs{{{2, 0}, {2, 2}, {-3, 0}, {-3, 2}}};

/// Smallest K with |X_k^{n,m}(e)| < tol for every |k - m| > K over the F1 pairs.
/// The scan runs up to K = 200; the tail beyond the scan is bounded by the
/// geometric decay rate fitted from the last few coefficients.
inline int choose_kmax(double e, double tol)
{
    detail::check_eccentricity(e, "choose_kmax");
    if (!(tol > 0.0)) throw DomainError("choose_kmax: tol must be positive");
    if (e == 0.0) return 0;
    constexpr int kScan = 200;
    int K = 0;
    for (const auto& [n, m] : kF1HansenPairs) {
        const std::vector<double> row = hansen_row(n, m, m - kScan, m + kScan, e);
        auto at = [&](int k) { return std::abs(row[static_cast<std::size_t>(k - (m - kScan))]); };
        int last_big = -1;
        for (int d = 0; d <= kScan; ++d)
            if (at(m + d) >= tol || at(m - d) >= tol) last_big = d;
        if (last_big >= kScan - 2) throw NumericalFailure("choose_kmax: tolerance not reached within the scan cap");
        K = std::max(K, last_big);
    }
    return K;
}

/// Hansen coefficients at one eccentricity for the F1 pairs, |k - m| <= K_max.
class HansenTable {
public:
    HansenTable(double e, int k_max) : e_(e), k_max_(k_max)
    {
        detail::check_eccentricity(e, "HansenTable");
        if (k_max < 0) throw DomainError("HansenTable: K_max must be non-negative");
        for (const auto& [n, m] : kF1HansenPairs) rows_[{n, m}] = hansen_row(n, m, m - k_max, m + k_max, e);
    }

    double e() const { return e_; }
    int k_max() const { return k_max_; }

    /// X_k^{n,m}; zero outside the stored half-width.
    double operator()(int n, int m, int k) const
    {
        const auto it = rows_.find({n, m});
        if (it == rows_.end()) throw DomainError("HansenTable: (n, m) pair not tabulated");
        const int idx = k - (m - k_max_);
        if (idx < 0 || idx > 2 * k_max_) return 0.0;
        return it->second[static_cast<std::size_t>(idx)];
    }

private:
    double e_;
    int k_max_;
    std::map<std::pair<int, int>, std::vector<double>> rows_;
};

/// Per-run memo of tables keyed on (e, K_max). Safe for concurrent use.
class HansenCache {
public:
    const HansenTable& get(double e, int k_max)
    {
        std::lock_guard lock(mutex_);
        auto it = tables_.find({e, k_max});
        if (it == tables_.end()) it = tables_.emplace(std::make_pair(e, k_max), HansenTable(e, k_max)).first;
        return it->second;
    }

    std::size_t size() const
    {
        std::lock_guard lock(mutex_);
        return tables_.size();
    }

private:
    mutable std::mutex mutex_;
    std::map<std::pair<double, int>, HansenTable> tables_;
};

} // namespace hillorb
