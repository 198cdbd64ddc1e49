#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace dipolar {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Key identifying one independent random stream.
///
/// Streams are addressed by (seed, stream id) and every draw by an explicit
/// counter, so any value of any stream can be regenerated without replaying
/// the stream. This is what makes parallel ensembles and bridge refinement
/// of driving paths reproducible.
class StreamKey
{
  public:
    constexpr StreamKey() = default;
    constexpr StreamKey(std::uint64_t seed, std::uint64_t stream_id) noexcept
        : key_(mix64(mix64(seed) ^ mix64(stream_id + 0x632be59bd9b4e019ULL)))
    {
    }

    /// Derived key for a named sub-stream (e.g. bridge refinement).
    [[nodiscard]] constexpr StreamKey substream(std::uint64_t tag) const noexcept
    {
        StreamKey k;
        k.key_ = mix64(key_ ^ mix64(tag ^ 0xd1b54a32d192ed03ULL));
        return k;
    }

    [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t counter) const noexcept
    {
        return mix64(key_ + counter * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform in the open interval (0, 1).
    [[nodiscard]] double uniform(std::uint64_t counter) const noexcept
    {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on counters 2c and 2c+1.
    [[nodiscard]] double normal(std::uint64_t counter) const noexcept
    {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    [[nodiscard]] constexpr std::uint64_t raw() const noexcept { return key_; }

    friend constexpr bool operator==(StreamKey, StreamKey) = default;

  private:
    std::uint64_t key_ = 0;
};

/// Sequential view of a stream. Satisfies UniformRandomBitGenerator.
class RandomStream
{
  public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
        : key_(seed, stream_id)
    {
    }
    explicit RandomStream(StreamKey key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept
    {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept { return key_.bits(counter_++); }

    double uniform() noexcept { return key_.uniform(counter_++); }
    /// Consumes two counters, so draws never share counters with uniform().
    double normal() noexcept
    {
        const double z = key_.normal(counter_ / 2 + (counter_ & 1));
        counter_ += 2 + (counter_ & 1);
        return z;
    }
    bool coin() noexcept { return (key_.bits(counter_++) >> 63) != 0; }

    [[nodiscard]] const StreamKey& key() const noexcept { return key_; }
    [[nodiscard]] std::uint64_t position() const noexcept { return counter_; }

  private:
    StreamKey key_;
    std::uint64_t counter_ = 0;
};

} // namespace dipolar
