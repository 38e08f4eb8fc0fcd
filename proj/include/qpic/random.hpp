#pragma once

#include <cstdint>
#include <random>

namespace qpic {

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Seed for the `index`-th independent stream under `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Seeded sampler on mt19937_64 and the <random> distributions. Draws are
// reproducible for a given seed and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform();  // [0, 1)
    double normal();

    std::int64_t poisson(double mean);
    std::int64_t binomial(std::int64_t trials, double p);

private:
    std::mt19937_64 engine_;
};

}  // namespace qpic
