#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "dipolar/analytic.hpp"
#include "dipolar/error.hpp"
#include "dipolar/loewner.hpp"
#include "dipolar/parallel.hpp"

namespace dipolar::stats {

/// Right-continuous empirical distribution of a sample.
class EmpiricalCdf
{
  public:
    explicit EmpiricalCdf(std::vector<double> samples) : samples_(std::move(samples))
    {
        if (samples_.empty()) {
            throw InvalidArgument("empirical_cdf: empty sample");
        }
        for (double v : samples_) {
            if (std::isnan(v)) {
                throw InvalidArgument("empirical_cdf: NaN sample");
            }
        }
        std::sort(samples_.begin(), samples_.end());
    }

    [[nodiscard]] std::size_t n() const noexcept { return samples_.size(); }
    [[nodiscard]] std::span<const double> samples() const noexcept { return samples_; }

    /// Fraction of samples <= x.
    [[nodiscard]] double operator()(double x) const
    {
        const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
        return static_cast<double>(it - samples_.begin()) / static_cast<double>(n());
    }

    /// Fraction of samples < x.
    [[nodiscard]] double left_limit(double x) const
    {
        const auto it = std::lower_bound(samples_.begin(), samples_.end(), x);
        return static_cast<double>(it - samples_.begin()) / static_cast<double>(n());
    }

  private:
    std::vector<double> samples_;
};

inline EmpiricalCdf empirical_cdf(std::vector<double> samples)
{
    return EmpiricalCdf(std::move(samples));
}

/// Quantile of the Kolmogorov distribution, P(K <= x) = p.
inline double kolmogorov_quantile(double p)
{
    detail::require(p > 0.0 && p < 1.0, "kolmogorov_quantile: p must lie in (0, 1)");
    auto cdf = [](double x) {
        if (x <= 0.0) {
            return 0.0;
        }
        double s = 0.0;
        for (int k = 1; k <= 100; ++k) {
            const double term = std::exp(-2.0 * k * k * x * x);
            s += (k % 2 == 1 ? 1.0 : -1.0) * term;
            if (term < 1e-18) {
                break;
            }
        }
        return 1.0 - 2.0 * s;
    };
    double lo = 0.2;
    double hi = 4.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Large-n distribution-free critical value of the max-CDF distance.
inline double dk_critical(std::size_t n, double confidence = 0.99)
{
    detail::require(n >= 1, "dk_critical: n must be >= 1");
    return kolmogorov_quantile(confidence) / std::sqrt(static_cast<double>(n));
}

struct ComparisonReport
{
    double delta = 0.0;
    std::size_t n = 0;
    std::optional<int> L;
    double dk_critical = 0.0;
    /// Abscissa where the maximum is attained.
    double argmax = 0.0;
    /// Binomial standard error of the empirical CDF at argmax.
    double delta_error = 0.0;
    /// Extra tolerance added to dk_critical for the pass decision.
    double allowance = 0.0;
    bool pass = false;
};

/// sup |F_emp - F| over the sample, both one-sided values taken at each jump.
///
/// `theory` must be nondecreasing with values in [0, 1]; this is checked on
/// the sample points.
inline ComparisonReport max_cdf_distance(const EmpiricalCdf& emp, const std::function<double(double)>& theory,
                                         double allowance = 0.0, double confidence = 0.99)
{
    const auto xs = emp.samples();
    const auto n = static_cast<double>(emp.n());
    ComparisonReport rep;
    rep.n = emp.n();
    rep.dk_critical = dk_critical(emp.n(), confidence);
    rep.allowance = allowance;
    double prev_f = -1.0;
    std::size_t i = 0;
    while (i < xs.size()) {
        const double x = xs[i];
        std::size_t j = i;
        while (j < xs.size() && xs[j] == x) {
            ++j;
        }
        const double f = theory(x);
        if (!(f >= -1e-12 && f <= 1.0 + 1e-12)) {
            throw ContractError("max_cdf_distance: theory CDF outside [0, 1]");
        }
        if (f < prev_f - 1e-12) {
            throw ContractError("max_cdf_distance: theory CDF is not monotone");
        }
        prev_f = f;
        const double below = static_cast<double>(i) / n;
        const double at = static_cast<double>(j) / n;
        const double d = std::max(std::abs(at - f), std::abs(below - f));
        if (d > rep.delta) {
            rep.delta = d;
            rep.argmax = x;
            rep.delta_error = std::sqrt(std::max(f * (1.0 - f), 0.0) / n);
        }
        i = j;
    }
    rep.delta = std::min(rep.delta, 1.0);
    rep.pass = rep.delta < rep.dk_critical + allowance;
    return rep;
}

/// max |F1 - F2| between two empirical distributions.
inline double max_cdf_distance(const EmpiricalCdf& a, const EmpiricalCdf& b)
{
    std::vector<double> pts(a.samples().begin(), a.samples().end());
    pts.insert(pts.end(), b.samples().begin(), b.samples().end());
    double d = 0.0;
    for (double x : pts) {
        d = std::max(d, std::abs(a(x) - b(x)));
    }
    return d;
}

/// Density of x' = displacement / L predicted for the Ising interface,
/// (pi / I) cosh(pi x' / 2)^(-4/3) with I = I(3).
inline double ising_theory_density(double x_prime)
{
    static const ProbField field(3.0);
    return std::numbers::pi * field.endpoint_density(std::numbers::pi * x_prime);
}

/// Predicted CDF of the displacement x (lattice units) at height L.
inline std::function<double(double)> ising_theory_cdf(int L)
{
    detail::require(L >= 1, "ising_theory_cdf: L must be >= 1");
    auto field = std::make_shared<const ProbField>(3.0);
    const double scale = std::numbers::pi / static_cast<double>(L);
    return [field, scale](double x) { return 1.0 - field->p_up(scale * x); };
}

struct ScalingFit
{
    double exponent = 0.0;
    double intercept = 0.0;
    /// RMS residual of the fit in log space.
    double quality = 0.0;
    /// exponent < -0.1
    bool decaying = false;

    [[nodiscard]] bool within(double lo, double hi) const { return exponent >= lo && exponent <= hi; }
};

/// Least-squares fit of log delta = intercept + exponent log L.
inline ScalingFit scaling_fit(std::span<const double> sizes, std::span<const double> deltas)
{
    detail::require(sizes.size() == deltas.size(), "scaling_fit: size mismatch");
    detail::require(sizes.size() >= 3, "scaling_fit: at least 3 sizes required");
    const auto m = static_cast<double>(sizes.size());
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        detail::require(sizes[k] > 0.0, "scaling_fit: sizes must be > 0");
        detail::require(deltas[k] > 0.0, "scaling_fit: deltas must be > 0");
        const double x = std::log(sizes[k]);
        const double y = std::log(deltas[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = m * sxx - sx * sx;
    detail::require(den > 0.0, "scaling_fit: sizes must not all coincide");
    ScalingFit fit;
    fit.exponent = (m * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.exponent * sx) / m;
    double rss = 0.0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        const double r = std::log(deltas[k]) - fit.intercept - fit.exponent * std::log(sizes[k]);
        rss += r * r;
    }
    fit.quality = std::sqrt(rss / m);
    fit.decaying = fit.exponent < -0.1;
    return fit;
}

struct MartingaleReport
{
    std::vector<double> times;
    std::vector<double> means;
    std::vector<double> std_errors;
    /// Field value at the starting point.
    double reference = 0.0;
    /// Largest |m_a - m_b| / (se_a + se_b) over pairs of times; intervals
    /// m +- n_sigma se overlap when this is <= n_sigma.
    double max_pair_z = 0.0;
    /// Largest |m_a - reference| / se_a over times with se_a > 0.
    double max_reference_z = 0.0;
    /// Mean at t = 0 equals the reference bit for bit (when 0 is listed).
    bool exact_at_zero = true;
    bool pass = false;
};

/// Monte Carlo check that E[P(f_t(z))] does not depend on t.
///
/// P is p_left for bulk points and p_up for points on the upper boundary.
/// Swallowed points contribute 0, left escapes 1 and right escapes 0.
inline MartingaleReport martingale_constancy_test(double kappa, Point z, std::span<const double> times,
                                                  std::size_t n_traces, std::uint64_t seed,
                                                  SleParams params = {}, unsigned threads = 1,
                                                  double n_sigma = 3.0)
{
    detail::require(kappa > 4.0, "martingale_constancy_test: kappa must be > 4");
    detail::require(!times.empty() && std::is_sorted(times.begin(), times.end()) && times.front() >= 0.0,
                    "martingale_constancy_test: times must be nonnegative and increasing");
    detail::require(n_traces >= 2, "martingale_constancy_test: n_traces must be >= 2");
    params.kappa = kappa;
    params.t_max = std::max(times.back(), params.step);
    params.validate();
    const double top = std::numbers::pi * params.delta;
    const bool upper = std::abs(z.imag() - top) < 1e-12 * top;
    if (!upper && !(z.imag() > 0.0 && z.imag() < top)) {
        throw DomainError("martingale_constancy_test: z must be interior or on the upper boundary");
    }
    const ProbField field(kappa);
    auto value = [&](Point w) {
        const Point u = w / params.delta;
        return upper ? field.p_up(u.real()) : field.p_left(u);
    };
    const std::vector<double> ts(times.begin(), times.end());
    const std::size_t n_steps = params.steps_for_horizon();
    auto run = [&](std::size_t k) {
        RandomStream rng(StreamKey(seed, k));
        const auto path = sample_driving(params, n_steps, rng);
        const auto chain = MapChain::from_path(path, params.delta);
        std::vector<double> vals(ts.size());
        std::size_t next = 0;
        while (next < ts.size() && ts[next] <= 0.0) {
            vals[next++] = value(z);
        }
        if (next == ts.size()) {
            return vals;
        }
        const auto fates = evolve_point_at(z, chain, params, std::span(ts).subspan(next));
        for (const auto& f : fates) {
            switch (f.kind) {
            case Fate::Swallowed:
                vals[next] = 0.0;
                break;
            case Fate::Left:
                vals[next] = 1.0;
                break;
            case Fate::Right:
                vals[next] = 0.0;
                break;
            case Fate::Undecided:
                vals[next] = value(upper ? Point(f.image.real(), top) : f.image);
                break;
            }
            ++next;
        }
        return vals;
    };
    const auto per_trace = parallel_map(n_traces, threads, run);

    MartingaleReport rep;
    rep.times = ts;
    rep.reference = value(z);
    const auto n = static_cast<double>(n_traces);
    for (std::size_t a = 0; a < ts.size(); ++a) {
        // Accumulate deviations from the reference so that a sample of
        // identical values averages to that value exactly.
        double s = 0.0;
        for (const auto& v : per_trace) {
            s += v[a] - rep.reference;
        }
        const double mean = rep.reference + s / n;
        double ss = 0.0;
        for (const auto& v : per_trace) {
            ss += (v[a] - mean) * (v[a] - mean);
        }
        rep.means.push_back(mean);
        rep.std_errors.push_back(std::sqrt(ss / (n - 1.0) / n));
        if (ts[a] <= 0.0 && mean != rep.reference) {
            rep.exact_at_zero = false;
        }
    }
    for (std::size_t a = 0; a < ts.size(); ++a) {
        const double se = rep.std_errors[a];
        if (se > 0.0) {
            rep.max_reference_z = std::max(rep.max_reference_z, std::abs(rep.means[a] - rep.reference) / se);
        }
        for (std::size_t b = a + 1; b < ts.size(); ++b) {
            const double s2 = rep.std_errors[a] + rep.std_errors[b];
            const double d = std::abs(rep.means[a] - rep.means[b]);
            if (s2 > 0.0) {
                rep.max_pair_z = std::max(rep.max_pair_z, d / s2);
            } else if (d > 0.0) {
                rep.max_pair_z = INFINITY;
            }
        }
    }
    rep.pass = rep.exact_at_zero && rep.max_pair_z <= n_sigma && rep.max_reference_z <= n_sigma;
    return rep;
}

} // namespace dipolar::stats
