#pragma once

#include <cstdint>

namespace tnarch {

// Counter-based random streams: every variate is a pure function of a
// 64-bit key, so draws are reproducible regardless of evaluation order or
// thread scheduling. Keys are built by chaining derive() over the
// identifying coordinates (seed, layer, position, row, col, ...).
namespace rng {

// splitmix64 finalizer; decorrelates consecutive keys.
std::uint64_t mix(std::uint64_t x);

// Sub-key derivation: key for (parent, index).
std::uint64_t derive(std::uint64_t parent, std::uint64_t index);

// Uniform double in [0, 1) from (key, counter).
double uniform(std::uint64_t key, std::uint64_t counter);

// Standard normal variate from `key` via the Marsaglia polar method.
// Rejection draws advance an internal counter, so the variate depends on
// `key` alone.
double standard_normal(std::uint64_t key);

// Uniform integer in [0, bound) without modulo bias.
std::uint64_t uniform_below(std::uint64_t key, std::uint64_t counter,
                            std::uint64_t bound);

} // namespace rng
} // namespace tnarch
