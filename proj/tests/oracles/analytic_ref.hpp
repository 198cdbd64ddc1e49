#pragma once

// Reference values computed with Boost.Math, independent of the library's
// quadrature and branch handling.

#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

/// 2 sqrt(pi) Gamma(2/kappa) / Gamma(2/kappa + 1/2) in 50-digit arithmetic.
inline double I_closed_form(double kappa)
{
    using R = boost::multiprecision::cpp_bin_float_50;
    const R a = R(2) / R(kappa);
    const R pi = boost::math::constants::pi<R>();
    const R v = 2 * sqrt(pi) * boost::math::tgamma(a) / boost::math::tgamma(a + R(0.5));
    return static_cast<double>(v);
}

/// int_0^inf sinh(y/2)^(-4/kappa) dy, kappa > 4.
inline double J_quadrature(double kappa)
{
    const double a = 4.0 / kappa;
    auto f = [a](double y) { return std::pow(std::sinh(0.5 * y), -a); };
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    return ts.integrate(f, 0.0, 1.0) + es.integrate(f, 1.0, std::numeric_limits<double>::infinity());
}

/// int_x^inf sinh(y/2)^(-4/kappa) dy, x > 0.
inline double sinh_tail(double kappa, double x)
{
    const double a = 4.0 / kappa;
    auto f = [a](double y) { return std::pow(std::sinh(0.5 * y), -a); };
    boost::math::quadrature::exp_sinh<double> es;
    return es.integrate(f, x, std::numeric_limits<double>::infinity());
}

/// int_{-inf}^{x} cosh(y/2)^(-4/kappa) dy.
inline double cosh_cumulative(double kappa, double x)
{
    const double a = 4.0 / kappa;
    auto f = [a](double y) { return std::pow(std::cosh(0.5 * y), -a); };
    boost::math::quadrature::exp_sinh<double> es;
    return es.integrate([&](double t) { return f(x - t); }, 0.0, std::numeric_limits<double>::infinity());
}

/// (sinh z/2)^(-4/kappa) by the principal complex power, with the argument
/// moved into [0, pi] by hand.
inline std::complex<double> integrand_direct(std::complex<double> z, double kappa)
{
    std::complex<double> s = std::sinh(z / 2.0);
    double arg = std::arg(s);
    if (arg < 0.0) {
        arg += 2.0 * std::numbers::pi;
    }
    if (arg > std::numbers::pi) {
        arg = std::numbers::pi; // only reached through -0 imaginary parts on the negative axis
    }
    return std::polar(std::pow(std::abs(s), -4.0 / kappa), -4.0 * arg / kappa);
}

/// Complex integral of integrand_direct along the segment [a, b] (no endpoint singularity).
inline std::complex<double> segment_integral(std::complex<double> a, std::complex<double> b, double kappa)
{
    auto part = [&](bool imag) {
        auto g = [&](double s) {
            const std::complex<double> v = integrand_direct(a + s * (b - a), kappa) * (b - a);
            return imag ? v.imag() : v.real();
        };
        return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, 1.0, 15, 1e-14);
    };
    return {part(false), part(true)};
}

/// Integral from -inf + i h to x + i h of integrand_direct.
inline std::complex<double> horizontal_from_minus_infinity(double x, double h, double kappa)
{
    boost::math::quadrature::exp_sinh<double> es;
    auto part = [&](bool imag) {
        return es.integrate(
            [&](double t) {
                const auto v = integrand_direct({x - t, h}, kappa);
                return imag ? v.imag() : v.real();
            },
            0.0, std::numeric_limits<double>::infinity());
    };
    return {part(false), part(true)};
}

} // namespace oracle
