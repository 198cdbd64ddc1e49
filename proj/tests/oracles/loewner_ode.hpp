#pragma once

// Classical RK4 integration of dg/dt = coth((g - xi)/2) with constant xi,
// in long double, as an oracle independent of the closed-form maps.

#include <complex>

namespace oracle {

inline std::complex<double> loewner_flow(std::complex<double> z, double xi, double t, int n_steps = 20000)
{
    using C = std::complex<long double>;
    auto v = [xi](C g) {
        const C u = (g - static_cast<long double>(xi)) / 2.0L;
        return std::cosh(u) / std::sinh(u);
    };
    C g(z.real(), z.imag());
    const long double h = static_cast<long double>(t) / n_steps;
    for (int k = 0; k < n_steps; ++k) {
        const C k1 = v(g);
        const C k2 = v(g + 0.5L * h * k1);
        const C k3 = v(g + 0.5L * h * k2);
        const C k4 = v(g + h * k3);
        g += h / 6.0L * (k1 + 2.0L * k2 + 2.0L * k3 + k4);
    }
    return {static_cast<double>(g.real()), static_cast<double>(g.imag())};
}

} // namespace oracle
