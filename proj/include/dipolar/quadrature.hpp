#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <queue>
#include <vector>

#include "dipolar/error.hpp"

namespace dipolar::quad {

/// Tolerances for adaptive integration.
struct Options
{
    double abs_tol = 1e-12;
    double rel_tol = 1e-13;
    int max_intervals = 4000;
};

template <typename V>
struct Result
{
    V value{};
    double error = 0.0;
    int intervals = 0;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
inline constexpr std::array<double, 8> kronrod_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_w = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_w = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename V>
double magnitude(const V& v)
{
    return std::abs(v);
}

template <typename V>
struct Segment
{
    double a, b;
    V value;
    double error;
    friend bool operator<(const Segment& l, const Segment& r) { return l.error < r.error; }
};

template <typename V, typename F>
Segment<V> kronrod15(F& f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double r = 0.5 * (b - a);
    const V fc = f(c);
    V k = fc * kronrod_w[7];
    V g = fc * gauss_w[3];
    for (int i = 0; i < 7; ++i) {
        const double dx = r * kronrod_x[i];
        const V s = f(c - dx) + f(c + dx);
        k += s * kronrod_w[i];
        if (i % 2 == 1) {
            g += s * gauss_w[i / 2];
        }
    }
    k *= r;
    g *= r;
    return {a, b, k, magnitude(k - g)};
}

} // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over [a, b].
///
/// V may be double or std::complex<double>. Interval bisection continues on
/// the segment with the largest error estimate until the summed estimate is
/// below max(abs_tol, rel_tol * |I|). Integrable endpoint singularities are
/// tolerated since nodes never touch the endpoints, but converge slowly;
/// callers remove them by substitution.
template <typename V, typename F>
    requires std::invocable<F&, double>
Result<V> integrate(F&& f, double a, double b, const Options& opt = {})
{
    using Seg = detail::Segment<V>;
    if (!(std::isfinite(a) && std::isfinite(b))) {
        throw DomainError("integrate: non-finite bounds");
    }
    if (a == b) {
        return {};
    }
    std::priority_queue<Seg> heap;
    Seg first = detail::kronrod15<V>(f, a, b);
    V total = first.value;
    double err = first.error;
    heap.push(first);
    int n = 1;
    while (err > std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(total))
           && n < opt.max_intervals) {
        Seg worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= std::min(worst.a, worst.b) || mid >= std::max(worst.a, worst.b)) {
            heap.push(worst);
            break; // interval at machine resolution
        }
        Seg left = detail::kronrod15<V>(f, worst.a, mid);
        Seg right = detail::kronrod15<V>(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++n;
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    V sum{};
    double esum = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        esum += heap.top().error;
        heap.pop();
    }
    return {sum, esum, n};
}

/// Integral over [a, b] of an integrand behaving like |t - a|^(-alpha) at a,
/// 0 <= alpha < 1. Substitutes t = a + (b - a) s^q with q = 1/(1 - alpha),
/// which turns the power singularity into a bounded integrand.
template <typename V, typename F>
Result<V> integrate_endpoint_singular(F&& f, double a, double b, double alpha,
                                      const Options& opt = {})
{
    if (!(alpha >= 0.0 && alpha < 1.0)) {
        throw DomainError("integrate_endpoint_singular: exponent must lie in [0, 1)");
    }
    const double q = 1.0 / (1.0 - alpha);
    const double len = b - a;
    auto g = [&](double s) -> V {
        const double sq = std::pow(s, q);
        return f(a + len * sq) * (len * q * std::pow(s, q - 1.0));
    };
    return integrate<V>(g, 0.0, 1.0, opt);
}

} // namespace dipolar::quad
