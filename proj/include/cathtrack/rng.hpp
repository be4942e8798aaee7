#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "cathtrack/types.hpp"

namespace cathtrack {

// Seedable generator with explicit substream derivation. All draws go through
// the helpers below (never std::uniform_* distributions) so that identical
// seeds give bit-identical sequences on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Derives an independent stream from a master seed and a key path, e.g.
    // substream(master, {design_index, config_index, purpose}).
    static Rng substream(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
        std::uint64_t h = splitmix64(master ^ 0x43a7de10f9c42bb5ull);
        for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x9e3779b97f4a7c15ull));
        return Rng(h);
    }

    std::uint64_t next() { return engine_(); }

    double uniform01() { return (next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform in {lo, ..., hi} inclusive, rejection-free enough for small ranges.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next() % span);
    }

    // Uniform over the closed disk of the given radius.
    Vec2 in_disk(double radius) {
        for (;;) {
            const double x = uniform(-1.0, 1.0);
            const double y = uniform(-1.0, 1.0);
            if (x * x + y * y <= 1.0) return {radius * x, radius * y};
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace cathtrack
