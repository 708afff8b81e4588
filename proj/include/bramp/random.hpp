#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace bramp {

/// Seeded pseudo-random stream keyed by (seed, stream id).
///
/// The engine is std::mt19937_64, whose output the standard fixes exactly.
/// The uniform and normal transforms are written out here because the
/// std:: distributions are implementation-defined; together this makes the
/// draw sequence, and every episode built on it, bit-reproducible.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
        std::seed_seq seq{lo32(seed), hi32(seed), lo32(stream), hi32(stream)};
        engine_.seed(seq);
    }

    std::uint64_t next_u64() {
        ++counter_;
        return engine_();
    }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes two uniforms per draw.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Independent child stream; does not advance this stream.
    [[nodiscard]] RandomStream split(std::uint64_t id) const {
        RandomStream child(seed_, stream_);
        std::seed_seq seq{lo32(seed_), hi32(seed_), lo32(stream_), hi32(stream_), lo32(id), hi32(id), 0x5eedu};
        child.engine_.seed(seq);
        return child;
    }

    [[nodiscard]] std::uint64_t draws() const { return counter_; }

  private:
    static std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
    static std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::uint64_t counter_ = 0;
};

}  // namespace bramp
