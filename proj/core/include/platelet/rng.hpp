// Counter-based random number generation.
//
// Every random draw in the toolkit is a pure function of (master seed,
// stream tag, stream indices, counter). Streams never share state, so any
// unit of work (a particle, a substrate cell, an ABC candidate) can be
// evaluated serially or on a worker pool and produce identical numbers.
//
// Stream derivation chains the splitmix64 finalizer; draws advance a Weyl
// counter through the same finalizer.
#pragma once

#include <cmath>
#include <cstdint>

namespace platelet::rng {

inline constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z += kWeyl;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Stream tags. Kept distinct so independently-addressed streams cannot
// collide even when their numeric indices coincide.
enum class Tag : std::uint64_t {
    particle = 0x01,
    cell_deposit = 0x02,
    abc_candidate = 0x03,
    abc_proposal = 0x04,
    abc_accept = 0x05,
    cohort_subject = 0x06,
    pilot = 0x07,
    train = 0x08,
    generic = 0x09,
};

inline std::uint64_t derive_key(std::uint64_t master, Tag tag,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t k = mix64(master ^ (static_cast<std::uint64_t>(tag) << 56));
    k = mix64(k ^ (a * 0xD1B54A32D192ED03ull));
    k = mix64(k ^ (b * 0x8CB92BA72F3D8DD7ull));
    return k;
}

// cheap per-step sub-key for a pre-derived stream key (hot transport path)
inline std::uint64_t step_key(std::uint64_t base, std::uint64_t step) {
    return mix64(base + step * 0xD1B54A32D192ED03ull);
}

// A keyed counter stream: draw i is mix64(key + i*kWeyl), i.e. splitmix64
// started at `key` and advanced to position i.
class Stream {
public:
    Stream() = default;
    explicit Stream(std::uint64_t key) : key_(key) {}
    Stream(std::uint64_t master, Tag tag, std::uint64_t a = 0, std::uint64_t b = 0)
        : key_(derive_key(master, tag, a, b)) {}

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return ctr_; }
    void seek(std::uint64_t ctr) { ctr_ = ctr; }

    std::uint64_t next_u64() { return mix64(key_ + ctr_++ * kWeyl); }

    // uniform on [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform on (0, 1]; safe under log()
    double uniform_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // standard normal via Marsaglia polar (exact, trig-free)
    double normal() {
        for (;;) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0)
                return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    // point uniform on the unit circle, as (cos, sin) of a uniform angle
    void unit_circle(double& c, double& s) {
        for (;;) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double r2 = u * u + v * v;
            if (r2 > 0.0 && r2 < 1.0) {
                const double inv = 1.0 / std::sqrt(r2);
                c = u * inv;
                s = v * inv;
                return;
            }
        }
    }

    bool coin() { return (next_u64() >> 63) != 0; }

    // integer uniform on [0, n) by rejection
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = n * (~std::uint64_t{0} / n);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t ctr_ = 0;
};

}  // namespace platelet::rng
