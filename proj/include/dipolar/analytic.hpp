#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>

#include "dipolar/error.hpp"
#include "dipolar/quadrature.hpp"

/// Analytic visiting and excursion probabilities of dipolar SLE in the
/// strip of width pi.
///
/// Everything here is built on the branch-sensitive antiderivative
///
///     F(z) = int_{-inf}^{z} (sinh u/2)^(-4/kappa) du,   arg(sinh u/2) in [0, pi],
///
/// together with the normalisation integrals
///
///     I = int_R (cosh y/2)^(-4/kappa) dy,   J = int_0^inf (sinh y/2)^(-4/kappa) dy.
namespace dipolar {

using Complex = std::complex<double>;

struct QuadConfig
{
    double abs_tol = 1e-12;
    double rel_tol = 1e-14;
    /// Beyond |Re u| = tail_radius the integrand is replaced by its
    /// exponential asymptote and integrated in closed form.
    double tail_radius = 50.0;
    bool analytic_tails = true;
};

namespace detail {

inline constexpr double pi = std::numbers::pi;

inline void check_kappa(double kappa)
{
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        throw InvalidArgument("kappa must be a finite positive number");
    }
}

inline void check_in_strip(Complex z, const char* who)
{
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw DomainError(std::string(who) + ": non-finite point");
    }
    if (z.imag() < -1e-12 || z.imag() > pi + 1e-12) {
        throw DomainError(std::string(who) + ": point outside the closed strip");
    }
}

// log cosh(t), stable for large |t|.
inline double log_cosh(double t)
{
    const double a = std::abs(t);
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

// (cosh y/2)^(-alpha)
inline double cosh_power(double y, double alpha)
{
    return std::exp(-alpha * log_cosh(0.5 * y));
}

// (sinh y/2)^(-alpha) for y > 0
inline double sinh_power(double y, double alpha)
{
    const double t = 0.5 * y;
    // log sinh t = t + log(1 - e^{-2t}) - log 2
    const double ls = t + std::log(-std::expm1(-2.0 * t)) - std::numbers::ln2;
    return std::exp(-alpha * ls);
}

} // namespace detail

/// (sinh z/2)^(-4/kappa) on the closed strip with arg(sinh z/2) in [0, pi].
///
/// Evaluated as R^(-4/kappa) exp(-4 i theta / kappa) with
/// R = |sinh z/2| and theta = atan2(cosh(a/2) sin(b/2), sinh(a/2) cos(b/2)).
inline Complex integrand(Complex z, double kappa)
{
    detail::check_kappa(kappa);
    if (z == Complex(0.0, 0.0)) {
        throw DomainError("integrand: z = 0 is the branch point");
    }
    const double a = z.real();
    const double b = std::clamp(z.imag(), 0.0, detail::pi);
    const double re = std::sinh(0.5 * a) * std::cos(0.5 * b);
    const double im = std::cosh(0.5 * a) * std::sin(0.5 * b);
    const double theta = std::atan2(im, re);
    const double alpha = 4.0 / kappa;
    const double log_r = std::log(std::hypot(re, im));
    return std::polar(std::exp(-alpha * log_r), -alpha * theta);
}

/// Tolerance-controlled normalisation integral I(kappa).
inline double const_I(double kappa, const QuadConfig& cfg = {})
{
    detail::check_kappa(kappa);
    const double alpha = 4.0 / kappa;
    const double A = cfg.tail_radius;
    // I = 2 * int_{-inf}^0; the left half is computed exactly like the
    // cumulative integral used by p_up, so that p_up(0) = 1/2 exactly.
    auto f = [alpha](double y) { return detail::cosh_power(y, alpha); };
    const auto body = quad::integrate<double>(f, -A, 0.0, {cfg.abs_tol, cfg.rel_tol});
    // int_{-inf}^{-A} (cosh y/2)^(-alpha) ~ 2^alpha (2/alpha) e^{-alpha A/2}
    const double tail = std::exp(alpha * std::numbers::ln2 - 0.5 * alpha * A) * (2.0 / alpha);
    return 2.0 * (body.value + tail);
}

/// Normalisation integral J(kappa), defined for kappa > 4.
inline double const_J(double kappa, const QuadConfig& cfg = {})
{
    detail::check_kappa(kappa);
    if (kappa <= 4.0) {
        throw RegimeError("const_J: integral diverges at the origin for kappa <= 4");
    }
    const double alpha = 4.0 / kappa;
    const double A = cfg.tail_radius;
    auto f = [alpha](double y) { return detail::sinh_power(y, alpha); };
    const quad::Options opt{cfg.abs_tol, cfg.rel_tol};
    const auto near = quad::integrate_endpoint_singular<double>(f, 0.0, 1.0, alpha, opt);
    const auto mid = quad::integrate<double>(f, 1.0, A, opt);
    const double tail = std::exp(alpha * std::numbers::ln2 - 0.5 * alpha * A) * (2.0 / alpha);
    return near.value + mid.value + tail;
}

/// Central charge and boundary weights attached to dipolar SLE_kappa.
struct CftConstants
{
    double c;
    double h12;
    double h0half;
};

/// Exact rational number with 64-bit numerator and denominator.
struct Rational
{
    std::int64_t num = 0;
    std::int64_t den = 1;

    constexpr Rational() = default;
    constexpr Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d)
    {
        if (den == 0) {
            throw InvalidArgument("Rational: zero denominator");
        }
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    [[nodiscard]] constexpr double value() const
    {
        return static_cast<double>(num) / static_cast<double>(den);
    }

    friend constexpr Rational operator+(Rational a, Rational b)
    {
        return {a.num * b.den + b.num * a.den, a.den * b.den};
    }
    friend constexpr Rational operator-(Rational a, Rational b)
    {
        return {a.num * b.den - b.num * a.den, a.den * b.den};
    }
    friend constexpr Rational operator*(Rational a, Rational b)
    {
        return {a.num * b.num, a.den * b.den};
    }
    friend constexpr Rational operator/(Rational a, Rational b)
    {
        return {a.num * b.den, a.den * b.num};
    }
    friend constexpr bool operator==(Rational a, Rational b)
    {
        return a.num == b.num && a.den == b.den;
    }
};

/// Kac weight h_{r;s} = [(r kappa - 4 s)^2 - (kappa - 4)^2] / (16 kappa).
inline constexpr Rational h_rs(Rational r, Rational s, Rational kappa)
{
    const Rational a = r * kappa - Rational(4) * s;
    const Rational b = kappa - Rational(4);
    return (a * a - b * b) / (Rational(16) * kappa);
}

inline double h_rs(double r, double s, double kappa)
{
    detail::check_kappa(kappa);
    const double a = r * kappa - 4.0 * s;
    const double b = kappa - 4.0;
    return (a * a - b * b) / (16.0 * kappa);
}

struct RationalCftConstants
{
    Rational c;
    Rational h12;
    Rational h0half;
};

inline constexpr RationalCftConstants cft_constants(Rational kappa)
{
    if (kappa.num <= 0) {
        throw InvalidArgument("cft_constants: kappa must be positive");
    }
    const Rational c = (kappa - Rational(6)) * (Rational(8) - Rational(3) * kappa)
                       / (Rational(2) * kappa);
    const Rational h12 = (Rational(6) - kappa) / (Rational(2) * kappa);
    const Rational h0 = (Rational(6) - kappa) * (kappa - Rational(2)) / (Rational(16) * kappa);
    return {c, h12, h0};
}

/// Floating-point CFT constants. When kappa is the double nearest to a
/// fraction p/q with q <= 1000, the values are computed in exact rational
/// arithmetic and rounded once, so 10.0 / 3.0 yields c = 0.8 exactly.
inline CftConstants cft_constants(double kappa)
{
    detail::check_kappa(kappa);
    if (kappa < 1e3) {
        for (std::int64_t q = 1; q <= 1000; ++q) {
            const double p = std::round(kappa * static_cast<double>(q));
            const Rational r(static_cast<std::int64_t>(p), q);
            if (r.value() == kappa) {
                const auto e = cft_constants(r);
                return {e.c.value(), e.h12.value(), e.h0half.value()};
            }
        }
    }
    return {(kappa - 6.0) * (8.0 - 3.0 * kappa) / (2.0 * kappa), (6.0 - kappa) / (2.0 * kappa),
            (6.0 - kappa) * (kappa - 2.0) / (16.0 * kappa)};
}

/// Cached evaluator of the probability fields at fixed kappa.
///
/// I (all kappa) and J (kappa > 4) are computed once at construction. The
/// object is immutable afterwards and safe to share between threads.
class ProbField
{
  public:
    explicit ProbField(double kappa, QuadConfig cfg = {})
        : kappa_(kappa), alpha_(4.0 / kappa), cfg_(cfg)
    {
        detail::check_kappa(kappa);
        I_ = const_I(kappa, cfg_);
        if (kappa > 4.0) {
            J_ = const_J(kappa, cfg_);
        }
    }

    [[nodiscard]] double kappa() const noexcept { return kappa_; }
    [[nodiscard]] double I() const noexcept { return I_; }
    [[nodiscard]] double J() const
    {
        if (!J_) {
            throw RegimeError("J is only defined for kappa > 4");
        }
        return *J_;
    }
    [[nodiscard]] const QuadConfig& quad_config() const noexcept { return cfg_; }

    /// F(z), integrating from -inf along Im u = pi/2, then vertically to z.
    [[nodiscard]] Complex F(Complex z) const
    {
        detail::check_in_strip(z, "F");
        if (kappa_ <= 4.0 && std::abs(z) < kDivergenceCutoff) {
            throw DomainError("F: integral diverges at the origin for kappa <= 4");
        }
        const double x = z.real();
        const double b = std::clamp(z.imag(), 0.0, detail::pi);
        return horizontal(x) + vertical(x, b);
    }

    /// F(+inf) = e^{-2 i pi / kappa} I, evaluated as a limit of the contour.
    [[nodiscard]] Complex F_at_infinity() const
    {
        const double A = cfg_.tail_radius;
        return horizontal(A) + right_tail(A, std::numeric_limits<double>::infinity());
    }

    /// Probability that z ends strictly left of the trace (kappa >= 4).
    [[nodiscard]] double p_left(Complex z) const
    {
        detail::check_in_strip(z, "p_left");
        if (kappa_ < 4.0) {
            throw RegimeError("p_left: no closed form for kappa < 4 (field is not harmonic)");
        }
        if (kappa_ == 4.0) {
            if (z == Complex(0.0, 0.0)) {
                throw DomainError("p_left: discontinuous at the origin for kappa = 4");
            }
            // Im log tanh(z/4) with z/4 in the strip of width pi/4 lies in [0, pi].
            const Complex t = std::tanh(Complex(z.real(), std::clamp(z.imag(), 0.0, detail::pi)) / 4.0);
            return clamp01(std::arg(t) / detail::pi);
        }
        const double im_inf = -std::sin(2.0 * detail::pi / kappa_) * I_;
        return clamp01(1.0 - F(z).imag() / im_inf);
    }

    [[nodiscard]] double p_right(Complex z) const { return p_left(-std::conj(z)); }

    /// Probability that z is swallowed by the hull (kappa >= 4; zero at kappa = 4).
    [[nodiscard]] double p_in(Complex z) const
    {
        detail::check_in_strip(z, "p_in");
        if (kappa_ < 4.0) {
            throw RegimeError("p_in: no closed form for kappa < 4");
        }
        if (kappa_ == 4.0) {
            return 0.0;
        }
        const double phase = 2.0 * detail::pi / kappa_;
        const double denom = -std::sin(phase) * *J_;
        return clamp01((std::polar(1.0, phase) * F(z)).imag() / denom);
    }

    /// Probability that the trace hits the upper boundary right of i pi + x.
    [[nodiscard]] double p_up(double x) const
    {
        if (!std::isfinite(x)) {
            if (std::isnan(x)) {
                throw DomainError("p_up: NaN abscissa");
            }
            return x < 0 ? 1.0 : 0.0;
        }
        if (x <= 0.0) {
            return 1.0 - cumulative_cosh(x) / I_;
        }
        return cumulative_cosh(-x) / I_;
    }

    /// Density of the upper-boundary hitting point, -d p_up / dx.
    [[nodiscard]] double endpoint_density(double x) const
    {
        return detail::cosh_power(x, alpha_) / I_;
    }

  private:
    static constexpr double kDivergenceCutoff = 1e-8;

    static double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

    [[nodiscard]] quad::Options qopt() const { return {cfg_.abs_tol, cfg_.rel_tol}; }

    // int_{-inf}^{x} (cosh y/2)^(-alpha) dy for x <= 0
    [[nodiscard]] double cumulative_cosh(double x) const
    {
        const double A = cfg_.tail_radius;
        const double alpha = alpha_;
        auto tail_at = [alpha](double y) {
            return std::exp(alpha * std::numbers::ln2 + 0.5 * alpha * y) * (2.0 / alpha);
        };
        if (x <= -A) {
            return tail_at(x);
        }
        auto f = [alpha](double y) { return detail::cosh_power(y, alpha); };
        return tail_at(-A) + quad::integrate<double>(f, -A, x, qopt()).value;
    }

    // 2^alpha e^{(2u - 4 pi i)/kappa} integrated from -inf to u.
    [[nodiscard]] Complex left_tail(Complex u) const
    {
        const Complex e = std::exp((2.0 * u - Complex(0.0, 4.0 * detail::pi)) / kappa_);
        return std::exp(alpha_ * std::numbers::ln2) * (0.5 * kappa_) * e;
    }

    // 2^alpha e^{-2u/kappa} integrated along the reference line from x0 to x1.
    [[nodiscard]] Complex right_tail(double x0, double x1) const
    {
        const double H = kReferenceHeight;
        const Complex e0 = std::exp(-2.0 * Complex(x0, H) / kappa_);
        const Complex e1 = std::isinf(x1) ? Complex(0.0) : std::exp(-2.0 * Complex(x1, H) / kappa_);
        return std::exp(alpha_ * std::numbers::ln2) * (0.5 * kappa_) * (e0 - e1);
    }

    // Integral from -inf to x + i H along Im u = H.
    [[nodiscard]] Complex horizontal(double x) const
    {
        const double H = kReferenceHeight;
        const double A = cfg_.tail_radius;
        if (cfg_.analytic_tails && x <= -A) {
            return left_tail(Complex(x, H));
        }
        auto f = [this, H](double a) { return integrand(Complex(a, H), kappa_); };
        const double lo = cfg_.analytic_tails ? -A : -4.0 * A;
        Complex acc = cfg_.analytic_tails ? left_tail(Complex(lo, H)) : Complex(0.0);
        const double hi = cfg_.analytic_tails ? std::min(x, A) : x;
        acc += quad::integrate<Complex>(f, lo, hi, qopt()).value;
        if (cfg_.analytic_tails && x > A) {
            acc += right_tail(A, x);
        }
        return acc;
    }

    // Integral from x + i H to x + i b along the vertical line.
    [[nodiscard]] Complex vertical(double x, double b) const
    {
        const double H = kReferenceHeight;
        if (b == H) {
            return Complex(0.0);
        }
        auto g = [this, x](double y) { return integrand(Complex(x, y), kappa_); };
        const Complex i(0.0, 1.0);
        // Near the branch point the endpoint z carries a |u|^(-alpha) singularity.
        if (kappa_ > 4.0 && std::hypot(x, b) < 0.5) {
            // int_H^b g dy = -int_b^H g dy with the singular end at b.
            return -i * quad::integrate_endpoint_singular<Complex>(g, b, H, alpha_, qopt()).value;
        }
        return i * quad::integrate<Complex>(g, H, b, qopt()).value;
    }

    static constexpr double kReferenceHeight = detail::pi / 2.0;

    double kappa_;
    double alpha_;
    QuadConfig cfg_;
    double I_ = 0.0;
    std::optional<double> J_;
};

/// F(z) for a single evaluation. Prefer ProbField for repeated use.
inline Complex F(Complex z, double kappa, const QuadConfig& cfg = {})
{
    return ProbField(kappa, cfg).F(z);
}

inline double p_left(Complex z, double kappa) { return ProbField(kappa).p_left(z); }
inline double p_right(Complex z, double kappa) { return ProbField(kappa).p_right(z); }
inline double p_in(Complex z, double kappa)
{
    if (kappa == 4.0) {
        return 0.0;
    }
    if (kappa < 4.0) {
        detail::check_kappa(kappa);
        throw RegimeError("p_in: no closed form for kappa < 4");
    }
    return ProbField(kappa).p_in(z);
}
inline double p_up(double x, double kappa) { return ProbField(kappa).p_up(x); }
inline double endpoint_density(double x, double kappa)
{
    return ProbField(kappa).endpoint_density(x);
}

/// Which probability field a PDE certificate is evaluated on.
enum class FieldKind { Left, In };

struct PdeResidual
{
    /// |kappa dd̄P + (coth(z/2) + kappa/2 d) dP + c.c.| by central differences.
    double martingale;
    /// |Laplacian P| by central differences.
    double laplacian;
};

/// Finite-difference residuals of a real field P(z) at an interior point.
///
/// The martingale operator reduces, for real P, to
/// (kappa/4) Lap P + (kappa/4)(P_xx - P_yy) + Re[coth(z/2)] P_x + Im[coth(z/2)] P_y.
template <typename Field>
    requires std::invocable<const Field&, Complex>
PdeResidual pde_residual(const Field& field, Complex z, double kappa, double h_fd)
{
    detail::check_kappa(kappa);
    if (!(h_fd > 0.0)) {
        throw InvalidArgument("pde_residual: step must be positive");
    }
    if (z.imag() - h_fd < 0.0 || z.imag() + h_fd > detail::pi) {
        throw DomainError("pde_residual: stencil leaves the strip");
    }
    if (std::abs(z) < 10.0 * h_fd) {
        throw DomainError("pde_residual: stencil too close to the origin");
    }
    const Complex dx(h_fd, 0.0);
    const Complex dy(0.0, h_fd);
    const double p0 = field(z);
    const double pxp = field(z + dx);
    const double pxm = field(z - dx);
    const double pyp = field(z + dy);
    const double pym = field(z - dy);
    const double h2 = h_fd * h_fd;
    const double pxx = (pxp - 2.0 * p0 + pxm) / h2;
    const double pyy = (pyp - 2.0 * p0 + pym) / h2;
    const double px = (pxp - pxm) / (2.0 * h_fd);
    const double py = (pyp - pym) / (2.0 * h_fd);
    const Complex ct = 1.0 / std::tanh(z / 2.0);
    const double lap = pxx + pyy;
    const double mart = 0.25 * kappa * lap + 0.25 * kappa * (pxx - pyy) + ct.real() * px
                        + ct.imag() * py;
    return {std::abs(mart), std::abs(lap)};
}

inline PdeResidual pde_residual(const ProbField& pf, FieldKind kind, Complex z, double h_fd)
{
    if (pf.kappa() <= 4.0 && kind == FieldKind::In) {
        throw RegimeError("pde_residual: p_in requires kappa > 4");
    }
    if (kind == FieldKind::Left) {
        return pde_residual([&pf](Complex w) { return pf.p_left(w); }, z, pf.kappa(), h_fd);
    }
    return pde_residual([&pf](Complex w) { return pf.p_in(w); }, z, pf.kappa(), h_fd);
}

/// |(kappa/2) P'' + tanh(x/2) P'| for a real field, by central differences.
template <typename Field>
    requires std::invocable<const Field&, double>
double hitting_ode_residual(const Field& field, double kappa, double x, double h_fd = 1e-3)
{
    detail::check_kappa(kappa);
    const double pp = field(x + h_fd);
    const double p0 = field(x);
    const double pm = field(x - h_fd);
    const double d1 = (pp - pm) / (2.0 * h_fd);
    const double d2 = (pp - 2.0 * p0 + pm) / (h_fd * h_fd);
    return std::abs(0.5 * kappa * d2 + std::tanh(0.5 * x) * d1);
}

inline double hitting_ode_residual(double kappa, double x, double h_fd = 1e-3)
{
    const ProbField pf(kappa);
    return hitting_ode_residual([&pf](double y) { return pf.p_up(y); }, kappa, x, h_fd);
}

} // namespace dipolar
