#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include "dipolar/analytic.hpp"
#include "oracles/analytic_ref.hpp"

using dipolar::Complex;
using dipolar::ProbField;
using std::numbers::pi;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST(Integrand, RealOnPositiveAxis)
{
    const Complex v = dipolar::integrand({2.0, 0.0}, 6.0);
    EXPECT_NEAR(v.real(), std::pow(std::sinh(1.0), -4.0 / 6.0), 1e-15);
    EXPECT_EQ(v.imag(), 0.0);
}

TEST(Integrand, UpperBoundaryPhase)
{
    const Complex v = dipolar::integrand({0.0, pi}, 6.0);
    EXPECT_NEAR(std::abs(v - std::polar(1.0, -pi / 3.0)), 0.0, 1e-15);
    for (double x : {-3.0, -0.5, 1.0, 4.0}) {
        const Complex w = dipolar::integrand({x, pi}, 5.0);
        const Complex expect = std::polar(std::pow(std::cosh(0.5 * x), -0.8), -2.0 * pi / 5.0);
        EXPECT_LT(std::abs(w - expect), 1e-14);
    }
}

TEST(Integrand, NegativeAxisPhase)
{
    for (double kappa : {3.0, 6.0}) {
        const Complex w = dipolar::integrand({-1.5, 0.0}, kappa);
        const Complex expect = std::polar(std::pow(std::sinh(0.75), -4.0 / kappa), -4.0 * pi / kappa);
        EXPECT_LT(std::abs(w - expect), 1e-14);
    }
}

TEST(Integrand, MatchesDirectComplexPower)
{
    const Complex z(-3.0, pi / 2);
    EXPECT_LT(std::abs(dipolar::integrand(z, 6.0) - oracle::integrand_direct(z, 6.0)), 1e-12);
    for (double a : {-2.0, -0.3, 0.4, 2.5}) {
        for (double b : {0.2, 1.0, 2.0, 3.0}) {
            EXPECT_LT(std::abs(dipolar::integrand({a, b}, 5.0) - oracle::integrand_direct({a, b}, 5.0)), 1e-12);
        }
    }
}

TEST(Integrand, BranchPointRejected)
{
    EXPECT_THROW(dipolar::integrand({0.0, 0.0}, 6.0), dipolar::DomainError);
}

TEST(Integrand, ContinuousAlongPaths)
{
    // Along the real axis with a detour over the branch point; a wrong branch
    // shows up as a jump of order |integrand|.
    const int n = 10000;
    for (double kappa : {3.0, 6.0}) {
        Complex prev = dipolar::integrand({-5.0, 0.0}, kappa);
        double worst = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double s = static_cast<double>(k) / n;
            Complex z;
            if (s < 0.45) {
                z = {-5.0 + s / 0.45 * 4.0, 0.0};
            } else if (s < 0.55) {
                const double th = pi * (1.0 - (s - 0.45) / 0.1);
                z = {std::cos(th), std::sin(th)};
            } else {
                z = {1.0 + (s - 0.55) / 0.45 * 4.0, 0.0};
            }
            const Complex v = dipolar::integrand(z, kappa);
            worst = std::max(worst, std::abs(v - prev));
            prev = v;
        }
        EXPECT_LT(worst, 0.05) << "kappa " << kappa;
    }
}

TEST(Constants, IAtThreeFiveDigits)
{
    EXPECT_NEAR(dipolar::const_I(3.0), 5.17422, 1e-4);
}

TEST(Constants, IGammaClosedForm)
{
    for (double kappa : {3.0, 4.0, 6.0, 8.0}) {
        EXPECT_LT(rel(dipolar::const_I(kappa), oracle::I_closed_form(kappa)), 1e-9) << kappa;
    }
}

TEST(Constants, JIndependentQuadrature)
{
    for (double kappa : {4.5, 5.0, 6.0, 8.0}) {
        EXPECT_LT(rel(dipolar::const_J(kappa), oracle::J_quadrature(kappa)), 1e-8) << kappa;
    }
}

TEST(Constants, IOverJAtSix)
{
    EXPECT_NEAR(dipolar::const_I(6.0) / dipolar::const_J(6.0), 1.0, 1e-8);
}

TEST(Constants, JRegime)
{
    EXPECT_THROW(dipolar::const_J(4.0), dipolar::RegimeError);
    EXPECT_THROW(dipolar::const_I(0.0), dipolar::InvalidArgument);
}

TEST(ProbFieldTest, CachedConstantsRelation)
{
    for (double kappa : {4.5, 5.0, 6.0, 8.0}) {
        const ProbField f(kappa);
        EXPECT_GT(f.I(), 0.0);
        EXPECT_GT(f.J(), 0.0);
        EXPECT_LE(std::abs(f.I() - 2.0 * f.J() * std::cos(2.0 * pi / kappa)), 1e-8 * f.I());
    }
    EXPECT_THROW((void)ProbField(3.0).J(), dipolar::RegimeError);
}

TEST(FTest, AppendixIdentities)
{
    for (double kappa : {4.5, 5.0, 6.0, 8.0}) {
        const ProbField f(kappa);
        const Complex f0 = f.F({0.0, 0.0});
        const Complex e0 = std::polar(f.J(), -4.0 * pi / kappa);
        EXPECT_LT(std::abs(f0 - e0), 1e-8 * f.J()) << kappa;
        const Complex finf = f.F_at_infinity();
        EXPECT_LT(std::abs(finf - std::polar(f.I(), -2.0 * pi / kappa)), 1e-8 * f.I()) << kappa;
        EXPECT_LT(std::abs(finf - (e0 + f.J())), 1e-8 * f.I()) << kappa;
    }
}

TEST(FTest, FarRightApproachesInfinity)
{
    const ProbField f(6.0);
    const Complex far = f.F({60.0, 0.0});
    EXPECT_LT(std::abs(far - std::polar(f.I(), -pi / 3.0)), 1e-6);
}

TEST(FTest, ContourIndependence)
{
    const double kappa = 6.0;
    const ProbField f(kappa);
    const Complex z(1.0, pi / 2);
    const Complex two_leg = oracle::horizontal_from_minus_infinity(1.0, pi / 4, kappa)
                            + oracle::segment_integral({1.0, pi / 4}, z, kappa);
    EXPECT_LT(std::abs(f.F(z) - two_leg), 1e-8);
    const Complex same_height = oracle::horizontal_from_minus_infinity(1.0, pi / 2, kappa);
    EXPECT_LT(std::abs(f.F(z) - same_height), 1e-8);
}

TEST(FTest, DivergentAtOriginForSmallKappa)
{
    EXPECT_THROW((void)ProbField(3.0).F({0.0, 0.0}), dipolar::DomainError);
    EXPECT_NO_THROW((void)ProbField(3.0).F({0.5, 0.5}));
}

TEST(PLeft, PositiveAxisIsZero)
{
    const ProbField f(6.0);
    for (double x : {0.1, 1.0, 5.0}) {
        EXPECT_NEAR(f.p_left({x, 0.0}), 0.0, 1e-12);
    }
}

TEST(PLeft, KappaFourTopMidpoint)
{
    EXPECT_NEAR(dipolar::p_left({0.0, pi}, 4.0), 0.5, 1e-15);
}

TEST(PLeft, NegativeAxisBoundaryFormula)
{
    const double kappa = 6.0;
    const double expect = 1.0 - oracle::sinh_tail(kappa, 1.0) / oracle::J_quadrature(kappa);
    EXPECT_NEAR(dipolar::p_left({-1.0, 0.0}, kappa), expect, 1e-9);
}

TEST(PLeft, RegimeBelowFour)
{
    EXPECT_THROW(dipolar::p_left({0.0, 1.0}, 3.0), dipolar::RegimeError);
}

TEST(PLeft, UpperBoundaryEqualsPUp)
{
    for (double kappa : {4.5, 6.0, 8.0}) {
        const ProbField f(kappa);
        for (double x : {-3.0, -1.0, 0.0, 0.7, 2.5}) {
            EXPECT_NEAR(f.p_left({x, pi}), f.p_up(x), 1e-8) << kappa << " " << x;
        }
    }
}

TEST(PIn, UpperBoundaryIsZero)
{
    const ProbField f(6.0);
    for (double x : {-2.0, 0.0, 3.0}) {
        EXPECT_NEAR(f.p_in({x, pi}), 0.0, 1e-10);
    }
}

TEST(PIn, OriginIsOne)
{
    const ProbField f(6.0);
    // 1 - p_in vanishes like |x|^(8/kappa - 1).
    EXPECT_NEAR(f.p_in({1e-7, 0.0}), 1.0, 1e-2);
    EXPECT_NEAR(f.p_in({-1e-7, 0.0}), 1.0, 1e-2);
    const double ratio = (1.0 - f.p_in({1e-9, 0.0})) / (1.0 - f.p_in({1e-6, 0.0}));
    EXPECT_NEAR(ratio, 0.1, 0.01);
    EXPECT_GT(f.p_in({1e-4, 0.0}), f.p_in({1e-2, 0.0}));
}

TEST(PIn, KappaFourAndBelow)
{
    EXPECT_EQ(dipolar::p_in({0.3, 1.0}, 4.0), 0.0);
    EXPECT_THROW(dipolar::p_in({0.3, 1.0}, 3.0), dipolar::RegimeError);
}

TEST(PIn, ReferenceValues)
{
    // mpmath evaluation of the same integral representation, frozen.
    const ProbField f(6.0);
    EXPECT_NEAR(f.p_in({0.0, pi / 2}), 0.232540, 2e-6);
    EXPECT_NEAR(f.p_left({-1.0, pi / 2}), 0.536419, 2e-6);
    EXPECT_NEAR(f.p_right({-1.0, pi / 2}), 0.255728, 2e-6);
}

TEST(Partition, SumsToOne)
{
    for (double kappa : {4.5, 5.0, 6.0, 8.0}) {
        const ProbField f(kappa);
        for (double a : {-3.0, -1.0, -0.2, 0.0, 0.5, 2.0}) {
            for (double b : {0.0, 0.3, 1.5, 2.8, pi}) {
                if (a == 0.0 && b == 0.0) {
                    continue;
                }
                const Complex z(a, b);
                const double sum = f.p_left(z) + f.p_right(z) + f.p_in(z);
                EXPECT_NEAR(sum, 1.0, 1e-8) << kappa << " " << a << " " << b;
            }
        }
    }
}

TEST(Range, FieldsInUnitInterval)
{
    const ProbField f(5.0);
    for (int i = -20; i <= 20; ++i) {
        for (int j = 0; j <= 10; ++j) {
            const Complex z(0.3 * i + 0.01, pi * j / 10.0);
            for (double v : {f.p_left(z), f.p_right(z), f.p_in(z)}) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
    }
}

TEST(PUp, SymmetryAndLimits)
{
    for (double kappa : {1.0, 3.0, 6.0, 10.0}) {
        const ProbField f(kappa);
        EXPECT_EQ(f.p_up(0.0), 0.5);
        EXPECT_NEAR(f.p_up(-200.0), 1.0, 1e-12);
        EXPECT_NEAR(f.p_up(200.0), 0.0, 1e-12);
        EXPECT_EQ(f.p_up(-INFINITY), 1.0);
        EXPECT_EQ(f.p_up(INFINITY), 0.0);
        double prev = 1.0;
        for (int k = -60; k <= 60; ++k) {
            const double v = f.p_up(0.25 * k);
            EXPECT_LT(v, prev);
            prev = v;
        }
    }
}

TEST(PUp, CardyCrossingAtSix)
{
    // 1 - P_up(x) = I_eta(1/3, 1/3), eta = 1 / (1 + e^{-x}).
    const ProbField f(6.0);
    for (double x : {-4.0, -1.0, -0.2, 0.0, 0.5, 2.0, 5.0}) {
        const double eta = 1.0 / (1.0 + std::exp(-x));
        EXPECT_NEAR(1.0 - f.p_up(x), boost::math::ibeta(1.0 / 3.0, 1.0 / 3.0, eta), 1e-10) << x;
    }
}

TEST(PUp, IndependentQuadrature)
{
    for (double kappa : {3.0, 6.0}) {
        const ProbField f(kappa);
        for (double x : {-3.0, -0.5, 1.5}) {
            const double expect = 1.0 - oracle::cosh_cumulative(kappa, x) / oracle::I_closed_form(kappa);
            EXPECT_NEAR(f.p_up(x), expect, 1e-10);
        }
    }
}

TEST(PUp, KappaFourClosedForm)
{
    const ProbField f(4.0);
    for (int k = 0; k < 20; ++k) {
        const double x = -6.0 + 12.0 * k / 19.0;
        const double expect = 1.0 - (2.0 / pi) * std::atan(std::exp(0.5 * x));
        EXPECT_NEAR(f.p_left({x, pi}), expect, 1e-12) << x;
        EXPECT_NEAR(f.p_up(x), expect, 1e-10) << x;
    }
}

TEST(Density, Normalised)
{
    for (double kappa : {3.0, 6.0}) {
        const ProbField f(kappa);
        boost::math::quadrature::sinh_sinh<double> ss;
        const double total = ss.integrate([&](double x) { return f.endpoint_density(x); });
        EXPECT_NEAR(total, 1.0, 1e-8);
    }
}

TEST(Density, ValueAtZeroFiveDigits)
{
    EXPECT_NEAR(dipolar::endpoint_density(0.0, 3.0), 1.0 / 5.17422, 1e-6);
}

TEST(Density, DerivativeOfPUp)
{
    const ProbField f(6.0);
    const double h = 1e-4;
    for (int k = 0; k < 20; ++k) {
        const double x = -5.0 + 0.5 * k;
        const double fd = (f.p_up(x + h) - f.p_up(x - h)) / (2.0 * h);
        EXPECT_NEAR(fd, -f.endpoint_density(x), 1e-6) << x;
    }
}

namespace {

std::vector<Complex> interior_grid()
{
    std::vector<Complex> pts;
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 5; ++j) {
            pts.emplace_back(-2.7 + 0.6 * i, 0.5 + 0.5 * j);
        }
    }
    return pts;
}

} // namespace

TEST(Pde, LeftFieldSecondOrder)
{
    const ProbField f(6.0);
    double r1 = 0.0;
    double r2 = 0.0;
    for (const Complex z : interior_grid()) {
        r1 = std::max(r1, dipolar::pde_residual(f, dipolar::FieldKind::Left, z, 0.02).martingale);
        r2 = std::max(r2, dipolar::pde_residual(f, dipolar::FieldKind::Left, z, 0.01).martingale);
    }
    EXPECT_LT(r1, 1e-3);
    EXPECT_GT(r1 / r2, 3.0);
    EXPECT_LT(r1 / r2, 5.0);
}

TEST(Pde, InFieldHarmonic)
{
    const ProbField f(5.0);
    double r1 = 0.0;
    double r2 = 0.0;
    for (const Complex z : interior_grid()) {
        r1 = std::max(r1, dipolar::pde_residual(f, dipolar::FieldKind::In, z, 0.02).laplacian);
        r2 = std::max(r2, dipolar::pde_residual(f, dipolar::FieldKind::In, z, 0.01).laplacian);
    }
    EXPECT_GT(r1 / r2, 3.0);
    EXPECT_LT(r1 / r2, 5.0);
}

TEST(Pde, ConstantFieldExact)
{
    const auto r = dipolar::pde_residual([](Complex) { return 1.0; }, {0.3, 1.2}, 6.0, 1e-2);
    EXPECT_EQ(r.martingale, 0.0);
    EXPECT_EQ(r.laplacian, 0.0);
}

TEST(Pde, StencilOutsideStrip)
{
    const ProbField f(6.0);
    EXPECT_THROW(dipolar::pde_residual(f, dipolar::FieldKind::Left, {0.5, 0.005}, 0.01), dipolar::DomainError);
    EXPECT_THROW(dipolar::pde_residual(f, dipolar::FieldKind::Left, {0.05, 0.05}, 0.01), dipolar::DomainError);
}

TEST(Pde, KappaFourClosedForm)
{
    const ProbField f(4.0);
    double r1 = 0.0;
    double r2 = 0.0;
    for (const Complex z : interior_grid()) {
        r1 = std::max(r1, dipolar::pde_residual(f, dipolar::FieldKind::Left, z, 0.02).martingale);
        r2 = std::max(r2, dipolar::pde_residual(f, dipolar::FieldKind::Left, z, 0.01).martingale);
    }
    EXPECT_GT(r1 / r2, 3.0);
    EXPECT_LT(r1 / r2, 5.0);
}

TEST(HittingOde, Residuals)
{
    for (double x : {-2.0, 0.0, 2.0}) {
        EXPECT_LT(dipolar::hitting_ode_residual(3.0, x, 1e-3), 1e-6) << x;
    }
    EXPECT_LT(dipolar::hitting_ode_residual(6.0, 0.0, 1e-3), 1e-6);
}

TEST(HittingOde, AffineFunctions)
{
    const double a = 0.7;
    auto affine = [a](double x) { return a * x + 2.0; };
    for (double x : {-1.0, 0.5, 3.0}) {
        EXPECT_NEAR(dipolar::hitting_ode_residual(affine, 3.0, x, 1e-3), std::abs(a * std::tanh(0.5 * x)), 1e-9);
    }
    EXPECT_EQ(dipolar::hitting_ode_residual([](double) { return 2.0; }, 3.0, 1.0, 1e-3), 0.0);
}

TEST(Cft, KnownModels)
{
    const auto ising = dipolar::cft_constants(3.0);
    EXPECT_EQ(ising.c, 0.5);
    EXPECT_EQ(ising.h12, 0.5);
    EXPECT_EQ(ising.h0half, 1.0 / 16.0);
    const auto gff = dipolar::cft_constants(4.0);
    EXPECT_EQ(gff.c, 1.0);
    EXPECT_EQ(gff.h12, 0.25);
    EXPECT_EQ(gff.h0half, 1.0 / 16.0);
    const auto potts = dipolar::cft_constants(10.0 / 3.0);
    EXPECT_EQ(potts.c, 0.8);
    EXPECT_EQ(potts.h12, 0.4);
    EXPECT_EQ(potts.h0half, 1.0 / 15.0);
}

TEST(Cft, RationalArithmetic)
{
    using R = dipolar::Rational;
    const auto potts = dipolar::cft_constants(R(10, 3));
    EXPECT_EQ(potts.c, R(4, 5));
    EXPECT_EQ(potts.h12, R(2, 5));
    EXPECT_EQ(potts.h0half, R(1, 15));
    for (R k : {R(3), R(4), R(10, 3), R(6), R(8, 3)}) {
        const auto c = dipolar::cft_constants(k);
        EXPECT_EQ(dipolar::h_rs(R(1), R(2), k), c.h12);
        EXPECT_EQ(dipolar::h_rs(R(0), R(1, 2), k), c.h0half);
    }
}

TEST(Cft, KacFormulaDouble)
{
    for (double k : {2.5, 3.0, 5.5, 7.0}) {
        const auto c = dipolar::cft_constants(k);
        EXPECT_NEAR(dipolar::h_rs(1.0, 2.0, k), c.h12, 1e-15);
        EXPECT_NEAR(dipolar::h_rs(0.0, 0.5, k), c.h0half, 1e-15);
    }
}
