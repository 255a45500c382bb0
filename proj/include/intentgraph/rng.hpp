#pragma once
// Self-contained RNG so every sampled artifact is byte-identical across
// platforms and standard libraries. std::shuffle and the std distributions
// are implementation-defined, which would break frozen fixtures.

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "intentgraph/util.hpp"

namespace ig {

// splitmix64; passes BigCrush and is trivial to reimplement in test oracles.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    // Independent stream for a named purpose under one master seed.
    Rng fork(std::string_view label) const {
        return Rng(state_ ^ fnv1a64(label, 0x9e3779b97f4a7c15ULL));
    }

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased integer in [0, bound) via rejection sampling.
    uint64_t next_below(uint64_t bound) {
        if (bound <= 1) return 0;
        uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (one value per call; pair not cached to
    // keep the state sequence position-independent).
    double next_gaussian() {
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = next_double();
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Reservoir-sample k elements of v, preserving first-seen order of the
    // kept elements' reservoir slots (classic algorithm R).
    template <typename T>
    std::vector<T> reservoir(const std::vector<T>& v, size_t k) {
        std::vector<T> out;
        out.reserve(k < v.size() ? k : v.size());
        for (size_t i = 0; i < v.size(); ++i) {
            if (out.size() < k) {
                out.push_back(v[i]);
            } else {
                size_t j = static_cast<size_t>(next_below(i + 1));
                if (j < k) out[j] = v[i];
            }
        }
        return out;
    }

private:
    uint64_t state_;
};

}  // namespace ig
