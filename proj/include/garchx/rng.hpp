#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace garchx::rng {

using Engine = std::mt19937_64;

/// splitmix64 finalizer; used to turn structured stream ids into engine seeds.
constexpr std::uint64_t mix(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the stream addressed by (base, ids...). Pure function of its
/// arguments, so every worker derives the same stream for the same index.
inline std::uint64_t derive(std::uint64_t base, std::initializer_list<std::uint64_t> ids) noexcept {
    std::uint64_t s = mix(base);
    for (std::uint64_t id : ids) {
        s = mix(s ^ mix(id + 0x632be59bd9b4e019ULL));
    }
    return s;
}

// Stream tags keep independent uses of one user seed apart.
enum class Stream : std::uint64_t {
    Data = 1,
    Blocks = 2,
    Multipliers = 3,
    Kernel = 4,
    Gaussian = 5,
    Critical = 6,
    Retry = 7,
};

inline std::uint64_t derive(std::uint64_t base, Stream tag, std::uint64_t index) noexcept {
    return derive(base, {static_cast<std::uint64_t>(tag), index});
}

/// Standard normal source owning its engine.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
    double operator()() { return dist_(engine_); }
    Engine& engine() noexcept { return engine_; }

private:
    Engine engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace garchx::rng
