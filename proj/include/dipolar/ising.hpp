#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dipolar/error.hpp"
#include "dipolar/parallel.hpp"
#include "dipolar/random.hpp"

/// Critical Ising model on a W x L strip (W = 3L) with a frozen row of
/// spins below row 0 (- on the left half, + on the right half), a free top
/// row and an antiperiodic seam joining column W-1 to column 0.
namespace dipolar::ising {

/// beta J at the critical point of the square lattice, log(1 + sqrt 2) / 2.
inline double critical_beta()
{
    return 0.5 * std::log1p(std::sqrt(2.0));
}

struct SpinLattice
{
    int height = 0;
    int width = 0;
    /// spins[y * width + x], y = 0 is the row above the frozen one.
    std::vector<std::int8_t> spins;
    std::vector<std::int8_t> frozen_row;
    int seam_sign = -1;
    double beta = critical_beta();

    /// Spin at column x in [0, width) and row y in [-1, height); y = -1 is frozen.
    [[nodiscard]] int spin(int x, int y) const
    {
        return y < 0 ? frozen_row[static_cast<std::size_t>(x)]
                     : spins[static_cast<std::size_t>(y) * static_cast<std::size_t>(width)
                             + static_cast<std::size_t>(x)];
    }

    void set(int x, int y, int s)
    {
        spins[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] =
            static_cast<std::int8_t>(s);
    }

    /// Spin on the unfolded strip: column X is any integer, and each pass
    /// through the seam flips the sign.
    [[nodiscard]] int unfolded_spin(long X, int y) const
    {
        const long w = width;
        long q = X / w;
        long r = X % w;
        if (r < 0) {
            r += w;
            --q;
        }
        const int s = spin(static_cast<int>(r), y);
        return (q % 2 == 0) ? s : seam_sign * s;
    }
};

/// Strip of height L with random free spins.
inline SpinLattice build_lattice(int L, RandomStream& rng)
{
    detail::require(L >= 2, "build_lattice: L must be >= 2");
    if ((3 * L) % 2 != 0) {
        throw InvalidArgument("build_lattice: width 3L must be even");
    }
    SpinLattice lat;
    lat.height = L;
    lat.width = 3 * L;
    lat.spins.resize(static_cast<std::size_t>(lat.width) * static_cast<std::size_t>(L));
    for (auto& s : lat.spins) {
        s = rng.coin() ? 1 : -1;
    }
    lat.frozen_row.resize(static_cast<std::size_t>(lat.width));
    for (int x = 0; x < lat.width; ++x) {
        lat.frozen_row[static_cast<std::size_t>(x)] = x < lat.width / 2 ? -1 : 1;
    }
    return lat;
}

/// Number of bonds, frozen-row bonds included.
inline std::size_t bond_count(const SpinLattice& lat)
{
    const auto W = static_cast<std::size_t>(lat.width);
    const auto L = static_cast<std::size_t>(lat.height);
    return W * L      // horizontal, seam included
           + W * (L - 1) // vertical between free rows
           + W;          // to the frozen row
}

/// H = -sum over bonds of eta_ij s_i s_j, with eta = -1 on the seam.
inline double energy(const SpinLattice& lat)
{
    const int W = lat.width;
    const int L = lat.height;
    long e = 0;
    for (int y = 0; y < L; ++y) {
        for (int x = 0; x < W; ++x) {
            const int s = lat.spin(x, y);
            const int eta = x == W - 1 ? lat.seam_sign : 1;
            e -= eta * s * lat.spin((x + 1) % W, y);
            e -= s * lat.spin(x, y - 1);
        }
    }
    return static_cast<double>(e);
}

namespace uf {

inline int find_root(std::vector<int>& parent, int i)
{
    while (parent[static_cast<std::size_t>(i)] != i) {
        auto& p = parent[static_cast<std::size_t>(i)];
        p = parent[static_cast<std::size_t>(p)];
        i = p;
    }
    return i;
}

inline void unite(std::vector<int>& parent, int a, int b)
{
    a = find_root(parent, a);
    b = find_root(parent, b);
    if (a == b) {
        return;
    }
    // The larger index is the frozen anchor, so anchors stay roots.
    if (a < b) {
        parent[static_cast<std::size_t>(a)] = b;
    } else {
        parent[static_cast<std::size_t>(b)] = a;
    }
}

} // namespace uf

/// One Swendsen-Wang update.
///
/// A bond with coupling sign eta is activated with probability
/// 1 - exp(-2 beta) when eta s_i s_j = +1. Frozen spins are merged into a
/// single anchor node whose clusters never flip; every other cluster flips
/// with probability 1/2.
inline void cluster_sweep(SpinLattice& lat, RandomStream& rng)
{
    const int W = lat.width;
    const int L = lat.height;
    const int n = W * L;
    const int anchor = n;
    const double p = -std::expm1(-2.0 * lat.beta);
    std::vector<int> parent(static_cast<std::size_t>(n) + 1);
    std::iota(parent.begin(), parent.end(), 0);
    auto idx = [W](int x, int y) { return y * W + x; };
    for (int y = 0; y < L; ++y) {
        for (int x = 0; x < W; ++x) {
            const int s = lat.spin(x, y);
            const int xr = (x + 1) % W;
            const int eta = x == W - 1 ? lat.seam_sign : 1;
            if (eta * s * lat.spin(xr, y) > 0 && rng.uniform() < p) {
                uf::unite(parent, idx(x, y), idx(xr, y));
            }
            const int below = y == 0 ? anchor : idx(x, y - 1);
            if (s * lat.spin(x, y - 1) > 0 && rng.uniform() < p) {
                uf::unite(parent, idx(x, y), below);
            }
        }
    }
    // 0 = undecided, 1 = keep, 2 = flip
    std::vector<std::uint8_t> action(static_cast<std::size_t>(n) + 1, 0);
    action[static_cast<std::size_t>(anchor)] = 1;
    for (int i = 0; i < n; ++i) {
        const int r = uf::find_root(parent, i);
        auto& a = action[static_cast<std::size_t>(r)];
        if (a == 0) {
            a = rng.coin() ? 2 : 1;
        }
        if (a == 2) {
            lat.spins[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(-lat.spins[static_cast<std::size_t>(i)]);
        }
    }
}

struct InterfaceSample
{
    /// Signed lateral displacement in lattice units, seam crossings counted.
    long displacement = 0;
    bool wrapped = false;
};

/// Follow the domain wall from the middle of the frozen row to the top.
///
/// The walk lives on the dual lattice in unfolded coordinates and keeps -
/// spins on its left and + spins on its right. At a plaquette with
/// alternating spins both turns are legal and one is chosen with a coin
/// flip; a dual edge is never traversed twice, so a revisit of a branching
/// plaquette takes the unused exit. Leaving through the frozen row (only
/// possible through the starting edge after an odd number of seam
/// crossings) marks the sample as wrapped.
inline InterfaceSample trace_interface(const SpinLattice& lat, RandomStream& rng)
{
    const int W = lat.width;
    const int L = lat.height;
    // Corner (i, j) sits at the lower-left of site (i, j); corners with
    // j = L lie on the top edge of the strip.
    const auto rows = static_cast<std::size_t>(L + 2);
    std::vector<std::uint8_t> used_h(static_cast<std::size_t>(W) * rows, 0);
    std::vector<std::uint8_t> used_v(static_cast<std::size_t>(W) * rows, 0);
    auto wrap = [W](long i) { return static_cast<std::size_t>(((i % W) + W) % W); };
    // Edge from corner (i, j) in direction (dx, dy).
    auto edge = [&](long i, int j, int dx, int dy) -> std::uint8_t& {
        if (dx != 0) {
            const long lo = dx > 0 ? i : i - 1;
            return used_h[static_cast<std::size_t>(j + 1) * static_cast<std::size_t>(W) + wrap(lo)];
        }
        const int lo = dy > 0 ? j : j - 1;
        return used_v[static_cast<std::size_t>(lo + 1) * static_cast<std::size_t>(W) + wrap(i)];
    };
    // Site on the unfolded lattice at doubled position (2i - 1 + u, 2j - 1 + v).
    auto site = [&](long i, int j, int u, int v) {
        return lat.unfolded_spin((2 * i - 1 + u) / 2, (2 * j - 1 + v) / 2);
    };

    const long start = W / 2;
    long i = start;
    int j = 0;
    int dx = 0;
    int dy = 1;
    const long budget = 100L * W * L;
    for (long steps = 0; steps < budget; ++steps) {
        if (j == L) {
            return {i - start, false};
        }
        const int nx = -dy; // left normal
        const int ny = dx;
        const int fl = site(i, j, dx + nx, dy + ny);
        const int fr = site(i, j, dx - nx, dy - ny);
#ifndef NDEBUG
        const int bl = site(i, j, -dx + nx, -dy + ny);
        const int br = site(i, j, -dx - nx, -dy - ny);
        if (bl != -1 || br != 1) {
            throw DomainError("trace_interface: walk lost the - | + orientation");
        }
#endif
        int ndx = 0;
        int ndy = 0;
        if (fl == -1 && fr == 1) {
            ndx = dx;
            ndy = dy;
        } else if (fl == 1 && fr == 1) {
            ndx = nx;
            ndy = ny;
        } else if (fl == -1 && fr == -1) {
            ndx = -nx;
            ndy = -ny;
        } else {
            const bool left_used = edge(i, j, nx, ny) != 0;
            const bool right_used = edge(i, j, -nx, -ny) != 0;
            bool go_left = false;
            if (left_used && right_used) {
                throw DomainError("trace_interface: both exits of a branching plaquette used");
            } else if (left_used) {
                go_left = false;
            } else if (right_used) {
                go_left = true;
            } else {
                go_left = rng.coin();
            }
            ndx = go_left ? nx : -nx;
            ndy = go_left ? ny : -ny;
        }
        if (j + ndy == -1) {
            // The only downward boundary wall is the start edge seen from the far side of the seam.
            return {0, true};
        }
        auto& e = edge(i, j, ndx, ndy);
        if (e != 0) {
            throw DomainError("trace_interface: dual edge traversed twice");
        }
        e = 1;
        i += ndx;
        j += ndy;
        dx = ndx;
        dy = ndy;
    }
    throw DomainError("trace_interface: step budget exceeded");
}

struct RunConfig
{
    int L = 16;
    long n_samples = 1000;
    long n_equilibration_sweeps = 0; ///< 0 selects 50 L
    long n_decorrelation_sweeps = 0; ///< 0 selects 2 L
    std::uint64_t seed = 0;
    int replicas = 1;
    unsigned threads = 1;

    [[nodiscard]] long equilibration() const { return n_equilibration_sweeps > 0 ? n_equilibration_sweeps : 50L * L; }
    [[nodiscard]] long decorrelation() const { return n_decorrelation_sweeps > 0 ? n_decorrelation_sweeps : 2L * L; }

    void validate() const
    {
        detail::require(L >= 2, "RunConfig: L must be >= 2");
        detail::require(n_samples >= 1, "RunConfig: n_samples must be >= 1");
        detail::require(n_equilibration_sweeps >= 0 && n_decorrelation_sweeps >= 0,
                        "RunConfig: sweep counts must be >= 1");
        detail::require(replicas >= 1, "RunConfig: replicas must be >= 1");
    }
};

struct RecordedSample
{
    int replica = 0;
    long sample_index = 0;
    InterfaceSample sample;
};

struct RunResult
{
    /// All traced interfaces, wrapped ones included, ordered by replica.
    std::vector<RecordedSample> samples;
    long wrapped = 0;
    /// Integrated autocorrelation time of the energy, in sweeps, averaged over replicas.
    double autocorrelation = 0.0;

    [[nodiscard]] double wrapped_rate() const
    {
        return samples.empty() ? 0.0 : static_cast<double>(wrapped) / static_cast<double>(samples.size());
    }

    /// Displacements of the non-wrapped samples.
    [[nodiscard]] std::vector<double> displacements() const
    {
        std::vector<double> out;
        out.reserve(samples.size());
        for (const auto& s : samples) {
            if (!s.sample.wrapped) {
                out.push_back(static_cast<double>(s.sample.displacement));
            }
        }
        return out;
    }
};

/// Integrated autocorrelation time with Sokal's self-consistent window (c = 6).
inline double integrated_autocorrelation(const std::vector<double>& x)
{
    const std::size_t n = x.size();
    if (n < 4) {
        return 0.5;
    }
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    auto acov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t k = 0; k + lag < n; ++k) {
            s += (x[k] - mean) * (x[k + lag] - mean);
        }
        return s / static_cast<double>(n - lag);
    };
    const double c0 = acov(0);
    if (c0 <= 0.0) {
        return 0.5;
    }
    double tau = 0.5;
    for (std::size_t lag = 1; lag < n / 2; ++lag) {
        tau += acov(lag) / c0;
        if (static_cast<double>(lag) >= 6.0 * tau) {
            break;
        }
    }
    return tau;
}

/// Equilibrate, then alternate decorrelation sweeps and interface traces
/// until n_samples non-wrapped interfaces are collected. Replica r runs on
/// stream (seed, r) and collects its share of the samples.
inline RunResult run_experiment(const RunConfig& cfg)
{
    cfg.validate();
    struct ReplicaOut
    {
        std::vector<RecordedSample> samples;
        long wrapped = 0;
        double tau = 0.0;
    };
    const auto R = static_cast<std::size_t>(cfg.replicas);
    auto run_replica = [&](std::size_t r) {
        const long quota = cfg.n_samples / cfg.replicas
                           + (static_cast<long>(r) < cfg.n_samples % cfg.replicas ? 1 : 0);
        RandomStream rng(StreamKey(cfg.seed, r));
        SpinLattice lat = build_lattice(cfg.L, rng);
        ReplicaOut out;
        std::vector<double> energies;
        const long eq = cfg.equilibration();
        for (long s = 0; s < eq; ++s) {
            cluster_sweep(lat, rng);
            if (2 * s >= eq) {
                energies.push_back(energy(lat));
            }
        }
        out.tau = integrated_autocorrelation(energies);
        long good = 0;
        long index = 0;
        while (good < quota) {
            for (long s = 0; s < cfg.decorrelation(); ++s) {
                cluster_sweep(lat, rng);
            }
            const InterfaceSample smp = trace_interface(lat, rng);
            out.samples.push_back({static_cast<int>(r), index++, smp});
            if (smp.wrapped) {
                ++out.wrapped;
            } else {
                ++good;
            }
        }
        return out;
    };
    auto parts = parallel_map(R, cfg.threads, run_replica);
    RunResult res;
    for (auto& p : parts) {
        res.samples.insert(res.samples.end(), p.samples.begin(), p.samples.end());
        res.wrapped += p.wrapped;
        res.autocorrelation += p.tau / static_cast<double>(R);
    }
    return res;
}

} // namespace dipolar::ising
