#pragma once

#include <utility>

namespace hillorb {

/// P_l(x) and P_l'(x) by the three-term recurrence.
template <class S>
std::pair<S, S> legendre_with_derivative(int l, S x)
{
    if (l == 0) return {S(1), S(0)};
    S p_prev = 1, p = x;
    S d_prev = 0, d = 1; // P'_{n-2}, P'_{n-1}
    for (int n = 2; n <= l; ++n) {
        const S p_next = (S(2 * n - 1) * x * p - S(n - 1) * p_prev) / S(n);
        // P'_n = P'_{n-2} + (2n - 1) P_{n-1}
        const S d_next = d_prev + S(2 * n - 1) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    return {p, d};
}

template <class S>
S legendre(int l, S x)
{
    return legendre_with_derivative(l, x).first;
}

/// P_l(0): zero for odd l, (-1)^(l/2) (l-1)!!/l!! for even l.
inline double legendre_at_zero(int l)
{
    if (l % 2 != 0) return 0.0;
    double v = 1.0;
    for (int k = 1; k <= l / 2; ++k) v *= -(2.0 * k - 1.0) / (2.0 * k);
    return v;
}

} // namespace hillorb
