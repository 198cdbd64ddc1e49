#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "dipolar/error.hpp"
#include "dipolar/parallel.hpp"
#include "dipolar/random.hpp"

/// Discretised dipolar Loewner evolution in the strip 0 < Im z < pi * delta.
///
/// The driving function is piecewise constant over steps and every step is
/// applied with the exact constant-driving solution
///
///     cosh((g - xi)/2) = e^{t/2} cosh((z - xi)/2)        (delta = 1),
///
/// so each step is a conformal map removing a vertical slit of height
/// 2 arccos(e^{-h/2}) above xi. A general width is handled by the
/// dilatation z -> z/delta, t -> t/delta^2; all internals run at delta = 1.
namespace dipolar {

using Point = std::complex<double>;

struct SleParams
{
    double kappa = 6.0;
    double delta = 1.0;
    double step = 1e-3;
    double t_max = 25.0;
    double eps_tip = 1e-4;
    /// Tolerance on |Im cosh((z - xi)/2)| for membership of an elementary slit.
    double eps_swallow = 1e-9;
    /// |Re f_t(z)| beyond which a point is declared left or right.
    double escape_threshold = 20.0;
    std::uint64_t seed = 0;
    /// Maximal number of Brownian-bridge halvings of a step near the tip.
    int refine_depth = 12;
    /// A step is halved while the point lies within refine_radius * sqrt(kappa h)
    /// of the driving value, or the driving jumps across the point.
    double refine_radius = 4.0;
    /// A driving jump across Re f is a swallowing when Im f is below
    /// swallow_ratio * sqrt(kappa h) at the finest level.
    double swallow_ratio = 0.5;

    void validate() const
    {
        detail::require(kappa > 0.0 && std::isfinite(kappa), "SleParams: kappa must be > 0");
        detail::require(delta > 0.0 && std::isfinite(delta), "SleParams: delta must be > 0");
        detail::require(step > 0.0, "SleParams: step must be > 0");
        detail::require(t_max >= step, "SleParams: t_max must be >= step");
        detail::require(eps_tip > 0.0, "SleParams: eps_tip must be > 0");
        detail::require(eps_swallow > 0.0, "SleParams: eps_swallow must be > 0");
        detail::require(escape_threshold > 0.0, "SleParams: escape_threshold must be > 0");
        detail::require(refine_depth >= 0 && refine_depth <= 30,
                        "SleParams: refine_depth must lie in [0, 30]");
        detail::require(refine_radius > 0.0, "SleParams: refine_radius must be > 0");
        detail::require(swallow_ratio >= 0.0, "SleParams: swallow_ratio must be >= 0");
    }

    /// Number of steps needed to cover t_max.
    [[nodiscard]] std::size_t steps_for_horizon() const
    {
        return static_cast<std::size_t>(std::ceil(t_max / step - 1e-9));
    }
};

/// Sampled driving function xi_0 = 0, xi_1, ..., xi_n on a uniform grid.
///
/// values[k] is the driving value on [k h, (k+1) h). When the path was
/// sampled from a random stream, `bridge` identifies the stream used to
/// refine steps by Brownian-bridge interpolation.
struct DrivingPath
{
    double step = 0.0;
    double kappa = 0.0;
    std::vector<double> values;
    std::optional<StreamKey> bridge;

    [[nodiscard]] std::size_t steps() const noexcept
    {
        return values.empty() ? 0 : values.size() - 1;
    }
};

/// Brownian driving path of n_steps increments N(0, kappa h).
inline DrivingPath sample_driving(const SleParams& params, std::size_t n_steps, RandomStream& rng)
{
    params.validate();
    detail::require(n_steps >= 1, "sample_driving: n_steps must be >= 1");
    DrivingPath path;
    path.step = params.step;
    path.kappa = params.kappa;
    path.values.resize(n_steps + 1);
    path.values[0] = 0.0;
    const double sd = std::sqrt(params.kappa * params.step);
    for (std::size_t k = 0; k < n_steps; ++k) {
        path.values[k + 1] = path.values[k] + sd * rng.normal();
    }
    path.bridge = rng.key().substream(0x6272696467650000ULL);
    return path;
}

/// Ordered elementary slit maps realising g_T, stored in delta = 1 units.
class MapChain
{
  public:
    struct Step
    {
        double h;
        double xi;
    };

    MapChain() = default;

    /// Chain of a sampled path; the path is rescaled to delta = 1.
    static MapChain from_path(const DrivingPath& path, double delta = 1.0)
    {
        detail::require(delta > 0.0, "MapChain: delta must be > 0");
        detail::require(path.steps() >= 1, "MapChain: empty driving path");
        MapChain c;
        c.delta_ = delta;
        const double h = path.step / (delta * delta);
        c.steps_.reserve(path.steps());
        for (std::size_t k = 0; k < path.steps(); ++k) {
            c.steps_.push_back({h, path.values[k] / delta});
        }
        c.final_xi_ = path.values.back() / delta;
        c.bridge_ = path.bridge;
        c.kappa_ = path.kappa;
        return c;
    }

    /// Deterministic chain with constant driving xi.
    static MapChain constant(double xi, double step, std::size_t n_steps, double delta = 1.0)
    {
        detail::require(step > 0.0 && n_steps >= 1, "MapChain: invalid constant chain");
        DrivingPath p;
        p.step = step;
        p.values.assign(n_steps + 1, xi);
        return from_path(p, delta);
    }

    /// Chain from explicit (h_k, xi_k) pairs in user units.
    static MapChain from_steps(std::span<const Step> steps, double final_xi, double delta = 1.0)
    {
        detail::require(!steps.empty(), "MapChain: empty step list");
        MapChain c;
        c.delta_ = delta;
        for (const auto& s : steps) {
            detail::require(s.h > 0.0, "MapChain: step lengths must be > 0");
            c.steps_.push_back({s.h / (delta * delta), s.xi / delta});
        }
        c.final_xi_ = final_xi / delta;
        return c;
    }

    [[nodiscard]] std::span<const Step> steps() const noexcept { return steps_; }
    [[nodiscard]] std::size_t size() const noexcept { return steps_.size(); }
    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] const std::optional<StreamKey>& bridge() const noexcept { return bridge_; }
    [[nodiscard]] double bridge_kappa() const noexcept { return kappa_; }

    /// Driving value (normalised) at the end of step k.
    [[nodiscard]] double xi_after(std::size_t k) const noexcept
    {
        return k + 1 < steps_.size() ? steps_[k + 1].xi : final_xi_;
    }

    /// Total evolution time in normalised units.
    [[nodiscard]] double total_time() const noexcept
    {
        double t = 0.0;
        for (const auto& s : steps_) {
            t += s.h;
        }
        return t;
    }

    /// Chain driven by -xi (mirror image under z -> -conj(z)).
    [[nodiscard]] MapChain mirrored() const
    {
        MapChain c = *this;
        for (auto& s : c.steps_) {
            s.xi = -s.xi;
        }
        c.final_xi_ = -final_xi_;
        c.mirror_bridge_ = !mirror_bridge_;
        return c;
    }

    [[nodiscard]] bool bridge_mirrored() const noexcept { return mirror_bridge_; }

  private:
    std::vector<Step> steps_;
    double final_xi_ = 0.0;
    double delta_ = 1.0;
    std::optional<StreamKey> bridge_;
    double kappa_ = 0.0;
    bool mirror_bridge_ = false;
};

namespace detail {

inline constexpr double strip_pi = std::numbers::pi;

// Beyond this distance from the driving point a step is a pure translation
// by +-h up to e^{-60}.
inline constexpr double far_field = 60.0;

inline void check_finite(Point z, const char* who)
{
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw DomainError(std::string(who) + ": non-finite input");
    }
}

// Solve cosh(u) = c for u with sign(Re u) = side and Im u in [0, pi/2].
inline Point branch_acosh(Point c, double side)
{
    Point u = std::acosh(c); // principal: Re u >= 0
    if (side < 0.0) {
        u = -u;
    }
    return {u.real(), std::clamp(u.imag(), 0.0, strip_pi / 2.0)};
}

// One step of the delta = 1 flow: returns nullopt on the elementary slit.
inline std::optional<Point> forward(Point z, double xi, double h, double eps_swallow)
{
    const Point rel = z - xi;
    const double a = rel.real();
    if (std::abs(a) > far_field) {
        return Point(z.real() + std::copysign(h, a), z.imag());
    }
    const Point w = std::cosh(rel / 2.0);
    if (std::abs(w.imag()) <= eps_swallow && w.real() >= std::exp(-h / 2.0) && w.real() <= 1.0 + eps_swallow
        && std::abs(a) <= eps_swallow) {
        return std::nullopt;
    }
    const Point u = branch_acosh(w * std::exp(h / 2.0), a);
    return Point(xi + 2.0 * u.real(), std::clamp(2.0 * u.imag(), 0.0, strip_pi));
}

inline Point inverse(Point w, double xi, double h)
{
    const Point rel = w - xi;
    const double a = rel.real();
    if (std::abs(a) > far_field) {
        return Point(w.real() - std::copysign(h, a), w.imag());
    }
    const Point u = branch_acosh(std::cosh(rel / 2.0) * std::exp(-h / 2.0), a);
    return Point(xi + 2.0 * u.real(), std::clamp(2.0 * u.imag(), 0.0, strip_pi));
}

// Restriction to the upper boundary i pi + y.
inline double forward_top(double y, double xi, double h)
{
    const double u = y - xi;
    if (std::abs(u) > far_field) {
        return y + std::copysign(h, u);
    }
    return xi + 2.0 * std::asinh(std::exp(h / 2.0) * std::sinh(u / 2.0));
}

inline double inverse_top(double y, double xi, double h)
{
    const double u = y - xi;
    if (std::abs(u) > far_field) {
        return y - std::copysign(h, u);
    }
    return xi + 2.0 * std::asinh(std::exp(-h / 2.0) * std::sinh(u / 2.0));
}

} // namespace detail

/// Image of z under one constant-driving step (delta-scaled), or nullopt when
/// z lies on the elementary slit {xi + i y : 0 <= y <= 2 delta arccos(e^{-h/(2 delta^2)})}.
inline std::optional<Point> elementary_map(Point z, double xi, double h, double delta = 1.0,
                                           double eps_swallow = 1e-9)
{
    detail::check_finite(z, "elementary_map");
    if (!std::isfinite(xi) || !std::isfinite(h) || !std::isfinite(delta)) {
        throw DomainError("elementary_map: non-finite input");
    }
    const auto img = detail::forward(z / delta, xi / delta, h / (delta * delta), eps_swallow);
    if (!img) {
        return std::nullopt;
    }
    return *img * delta;
}

/// Preimage of w under one constant-driving step (delta-scaled).
inline Point elementary_inverse(Point w, double xi, double h, double delta = 1.0)
{
    detail::check_finite(w, "elementary_inverse");
    if (!std::isfinite(xi) || !std::isfinite(h) || !std::isfinite(delta)) {
        throw DomainError("elementary_inverse: non-finite input");
    }
    return detail::inverse(w / delta, xi / delta, h / (delta * delta)) * delta;
}

enum class Fate { Swallowed, Left, Right, Undecided };

/// Outcome of following a point through a map chain.
struct PointFate
{
    Fate kind = Fate::Undecided;
    /// Swallowing time (user units); meaningful for Fate::Swallowed only.
    double tau = 0.0;
    /// Last image f_t(z) = g_t(z) - xi_t (user units).
    Point image{};

    [[nodiscard]] bool swallowed() const noexcept { return kind == Fate::Swallowed; }
};

/// Step-by-step evolution of a single point through a chain.
///
/// Steps whose driving comes close to the point (or jumps across it) are
/// halved recursively, the midpoint driving value being drawn from the
/// Brownian bridge of the chain's stream. A halving is keyed by (step,
/// node), so every point of a given trace sees the same refined path.
class PointTracker
{
  public:
    PointTracker(Point z, const MapChain& chain, const SleParams& params)
        : chain_(&chain), params_(params)
    {
        params.validate();
        detail::check_finite(z, "evolve_point");
        const double d = chain.delta();
        g_ = z / d;
        if (g_.imag() < -1e-12 || g_.imag() > detail::strip_pi + 1e-12) {
            throw DomainError("evolve_point: point outside the closed strip");
        }
        g_.imag(std::clamp(g_.imag(), 0.0, detail::strip_pi));
        t_max_ = params.t_max / (d * d);
        kappa_ = chain.bridge() ? chain.bridge_kappa() : params.kappa;
        if (!chain.steps().empty()) {
            current_xi_ = chain.steps()[0].xi;
        }
        if (g_ == Point(current_xi_, 0.0)) {
            throw DomainError("evolve_point: the starting point of the trace has no fate");
        }
    }

    /// Apply the next step. Returns false once the fate is decided or the
    /// chain/horizon is exhausted.
    bool advance()
    {
        if (done()) {
            return false;
        }
        const auto& s = chain_->steps()[k_];
        const double wb = chain_->xi_after(k_);
        refine(s.xi, wb, s.h, t_, 0, 1);
        t_ += s.h;
        current_xi_ = wb;
        ++k_;
        if (kind_ == Fate::Undecided) {
            const double rel = g_.real() - current_xi_;
            if (std::abs(rel) > params_.escape_threshold) {
                kind_ = rel < 0.0 ? Fate::Left : Fate::Right;
            }
        }
        return !done();
    }

    [[nodiscard]] bool done() const noexcept
    {
        return kind_ != Fate::Undecided || k_ >= chain_->size() || t_ >= t_max_ * (1.0 - 1e-12) - 1e-12;
    }

    /// Current time in user units.
    [[nodiscard]] double time() const noexcept
    {
        const double d = chain_->delta();
        return t_ * d * d;
    }

    [[nodiscard]] PointFate fate() const
    {
        const double d = chain_->delta();
        return {kind_, tau_ * d * d, (g_ - current_xi_) * d};
    }

  private:
    void refine(double wa, double wb, double len, double t0, int depth, std::uint64_t node)
    {
        if (kind_ == Fate::Swallowed) {
            return;
        }
        const double scale = std::sqrt(kappa_ * len);
        const double x = g_.real();
        const bool can_refine = chain_->bridge().has_value() && depth < params_.refine_depth;
        if (can_refine) {
            const double r = params_.refine_radius * scale;
            const bool near = std::abs(g_ - wa) < r || std::abs(g_ - wb) < r
                              || (x - wa) * (x - wb) <= 0.0
                              || (have_prev_ && (x - wa) * (x - prev_xi_) <= 0.0);
            if (near) {
                const auto counter = (static_cast<std::uint64_t>(k_) << 32) | node;
                double z = chain_->bridge()->normal(counter);
                if (chain_->bridge_mirrored()) {
                    z = -z;
                }
                const double wm = 0.5 * (wa + wb) + 0.5 * scale * z;
                refine(wa, wm, 0.5 * len, t0, depth + 1, 2 * node);
                refine(wm, wb, 0.5 * len, t0 + 0.5 * len, depth + 1, 2 * node + 1);
                return;
            }
        }
        if (have_prev_ && (x - wa) * (x - prev_xi_) < 0.0
            && g_.imag() < params_.swallow_ratio * scale) {
            if (kappa_ > 4.0) {
                swallow(t0);
                return;
            }
            // For kappa <= 4 the gap never closes: the point is pushed ahead
            // of the driving instead of being jumped over.
            const double side = x < prev_xi_ ? -1.0 : 1.0;
            g_ = Point(wa + side * params_.swallow_ratio * scale, g_.imag());
        }
        const auto img = detail::forward(g_, wa, len, params_.eps_swallow);
        have_prev_ = true;
        prev_xi_ = wa;
        if (!img) {
            swallow(t0 + 0.5 * len);
            return;
        }
        g_ = *img;
    }

    void swallow(double t)
    {
        kind_ = Fate::Swallowed;
        tau_ = t;
        g_ = Point(prev_xi_, 0.0);
    }

    const MapChain* chain_;
    SleParams params_;
    Point g_;
    double t_ = 0.0;
    double t_max_ = 0.0;
    double kappa_ = 0.0;
    double tau_ = 0.0;
    double current_xi_ = 0.0;
    double prev_xi_ = 0.0;
    bool have_prev_ = false;
    std::size_t k_ = 0;
    Fate kind_ = Fate::Undecided;
};

/// Follow z through the chain until it is swallowed, escapes, or the
/// horizon (min of chain length and t_max) is reached.
inline PointFate evolve_point(Point z, const MapChain& chain, const SleParams& params)
{
    PointTracker tracker(z, chain, params);
    while (tracker.advance()) {
    }
    return tracker.fate();
}

/// Fate-so-far of z at each of the given (increasing) times.
inline std::vector<PointFate> evolve_point_at(Point z, const MapChain& chain, const SleParams& params,
                                              std::span<const double> times)
{
    detail::require(std::is_sorted(times.begin(), times.end()),
                    "evolve_point_at: times must be increasing");
    PointTracker tracker(z, chain, params);
    std::vector<PointFate> out;
    out.reserve(times.size());
    for (double t : times) {
        while (tracker.time() < t - 1e-12 && tracker.advance()) {
        }
        out.push_back(tracker.fate());
    }
    return out;
}

struct Trace
{
    std::vector<double> times;
    std::vector<Point> points;
};

/// Trace gamma(t_k) = g_{t_k}^{-1}(xi + i eps_tip) at every stride-th step.
///
/// xi is the driving value of the last applied step, so the point sits just
/// above the tip of the last elementary slit. Cost is quadratic in the
/// number of steps.
inline Trace trace(const MapChain& chain, const SleParams& params, std::size_t stride = 1)
{
    params.validate();
    detail::require(chain.size() >= 1, "trace: empty chain");
    detail::require(stride >= 1, "trace: stride must be >= 1");
    const double d = chain.delta();
    const double eps = params.eps_tip / d;
    const auto steps = chain.steps();
    const double horizon = params.t_max / (d * d);
    Trace tr;
    tr.times.push_back(0.0);
    tr.points.push_back(Point(steps[0].xi, eps) * d);
    double t = 0.0;
    for (std::size_t k = 1; k <= steps.size(); ++k) {
        t += steps[k - 1].h;
        if (t > horizon * (1.0 + 1e-12) + 1e-12) {
            break;
        }
        if (k % stride != 0 && k != steps.size()) {
            continue;
        }
        Point w(steps[k - 1].xi, eps);
        for (std::size_t j = k; j-- > 0;) {
            w = detail::inverse(w, steps[j].xi, steps[j].h);
        }
        tr.times.push_back(t * d * d);
        tr.points.push_back(w * d);
    }
    return tr;
}

/// Fate of the upper-boundary point i pi delta + x.
inline PointFate evolve_upper_point(double x, const MapChain& chain, const SleParams& params)
{
    const double d = chain.delta();
    const double horizon = params.t_max / (d * d);
    double y = x / d;
    double t = 0.0;
    double xi = chain.steps().empty() ? 0.0 : chain.steps()[0].xi;
    const auto steps = chain.steps();
    for (std::size_t k = 0; k < steps.size() && t < horizon * (1.0 - 1e-12) - 1e-12; ++k) {
        y = detail::forward_top(y, steps[k].xi, steps[k].h);
        t += steps[k].h;
        xi = chain.xi_after(k);
        const double rel = y - xi;
        if (std::abs(rel) > params.escape_threshold) {
            return {rel < 0.0 ? Fate::Left : Fate::Right, 0.0, Point(rel, detail::strip_pi) * d};
        }
    }
    return {Fate::Undecided, 0.0, Point(y - xi, detail::strip_pi) * d};
}

/// Preimage of i pi delta + xi_T under g_T, restricted to the upper boundary.
///
/// Upper-boundary points left of this value have images left of the driving
/// point at time T and vice versa, so it is the finite-horizon estimate of
/// the hitting point.
inline double upper_boundary_preimage(const MapChain& chain, const SleParams& params)
{
    const double d = chain.delta();
    const double horizon = params.t_max / (d * d);
    const auto steps = chain.steps();
    std::size_t n = 0;
    double t = 0.0;
    while (n < steps.size() && t < horizon * (1.0 - 1e-12) - 1e-12) {
        t += steps[n].h;
        ++n;
    }
    double y = chain.xi_after(n - 1);
    for (std::size_t j = n; j-- > 0;) {
        y = detail::inverse_top(y, steps[j].xi, steps[j].h);
    }
    return y * d;
}

/// Hitting point x* of the upper boundary, by bisection on the left/right
/// classification of upper-boundary points to absolute tolerance `tol`.
inline double endpoint_on_upper_boundary(const MapChain& chain, const SleParams& params,
                                         double tol = 1e-3)
{
    params.validate();
    detail::require(chain.size() >= 1, "endpoint_on_upper_boundary: empty chain");
    struct Probe
    {
        int side;
        bool decided;
    };
    auto classify = [&](double x) -> Probe {
        const auto f = evolve_upper_point(x, chain, params);
        switch (f.kind) {
        case Fate::Left:
            return {-1, true};
        case Fate::Right:
            return {+1, true};
        default:
            return {f.image.real() < 0.0 ? -1 : +1, false};
        }
    };
    // Probes stay within half the escape threshold of the guess, so that
    // a decided probe reflects the evolution and not its starting distance.
    const double guess = upper_boundary_preimage(chain, params);
    const double limit = 0.5 * params.escape_threshold * chain.delta();
    double half = std::min(std::max(4.0 * tol, 1e-2), limit);
    double lo = guess - half;
    double hi = guess + half;
    Probe plo = classify(lo);
    Probe phi = classify(hi);
    while ((plo.side > 0 || phi.side < 0 || !plo.decided || !phi.decided) && half < limit) {
        half = std::min(4.0 * half, limit);
        lo = guess - half;
        hi = guess + half;
        plo = classify(lo);
        phi = classify(hi);
    }
    if (!plo.decided && !phi.decided) {
        throw HorizonError("endpoint_on_upper_boundary: both bracket ends undecided; "
                           "horizon too short");
    }
    if (plo.side > 0 || phi.side < 0) {
        throw HorizonError("endpoint_on_upper_boundary: could not bracket the hitting point");
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (classify(mid).side < 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Hitting points of n traces, trace k driven by stream (params.seed, k).
/// With `mirrored` every driving increment is negated.
inline std::vector<double> sample_endpoints(const SleParams& params, std::size_t n, unsigned threads = 1,
                                            bool mirrored = false)
{
    params.validate();
    const std::size_t n_steps = params.steps_for_horizon();
    return parallel_map(n, threads, [&](std::size_t k) {
        RandomStream rng(StreamKey(params.seed, k));
        const auto chain = MapChain::from_path(sample_driving(params, n_steps, rng), params.delta);
        return endpoint_on_upper_boundary(mirrored ? chain.mirrored() : chain, params);
    });
}

struct FateTally
{
    std::size_t swallowed = 0;
    std::size_t left = 0;
    std::size_t right = 0;
    /// Undecided at the horizon, split by the sign of Re f_T(z).
    std::size_t undecided_left = 0;
    std::size_t undecided_right = 0;

    [[nodiscard]] std::size_t total() const noexcept
    {
        return swallowed + left + right + undecided_left + undecided_right;
    }
};

/// Fates of z over n traces, trace k driven by stream (params.seed, k).
inline FateTally sample_fates(Point z, const SleParams& params, std::size_t n, unsigned threads = 1)
{
    params.validate();
    const std::size_t n_steps = params.steps_for_horizon();
    const auto fates = parallel_map(n, threads, [&](std::size_t k) {
        RandomStream rng(StreamKey(params.seed, k));
        const auto chain = MapChain::from_path(sample_driving(params, n_steps, rng), params.delta);
        return evolve_point(z, chain, params);
    });
    FateTally tally;
    for (const auto& f : fates) {
        switch (f.kind) {
        case Fate::Swallowed:
            ++tally.swallowed;
            break;
        case Fate::Left:
            ++tally.left;
            break;
        case Fate::Right:
            ++tally.right;
            break;
        case Fate::Undecided:
            ++(f.image.real() < 0.0 ? tally.undecided_left : tally.undecided_right);
            break;
        }
    }
    return tally;
}

} // namespace dipolar
