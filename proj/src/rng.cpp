#include "tnarch/rng.hpp"

#include <cmath>

namespace tnarch {
namespace rng {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t parent, std::uint64_t index) {
    return mix(parent ^ mix(index + 0x51ed270b0a1c2ef3ULL));
}

double uniform(std::uint64_t key, std::uint64_t counter) {
    // 53 high bits -> [0, 1)
    return static_cast<double>(mix(key ^ mix(counter)) >> 11) * 0x1.0p-53;
}

double standard_normal(std::uint64_t key) {
    // Polar method: needs only sqrt/log, no trig.
    for (std::uint64_t attempt = 0;; ++attempt) {
        const double u = 2.0 * uniform(key, 2 * attempt) - 1.0;
        const double v = 2.0 * uniform(key, 2 * attempt + 1) - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0)
            return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

std::uint64_t uniform_below(std::uint64_t key, std::uint64_t counter,
                            std::uint64_t bound) {
    // Rejection below the largest multiple of `bound`.
    const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
    std::uint64_t ctr = counter;
    for (;;) {
        const std::uint64_t r = mix(key ^ mix(ctr));
        if (r < limit) return r % bound;
        ctr += 0x9e3779b97f4a7c15ULL;
    }
}

} // namespace rng
} // namespace tnarch
