#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace seglab {

// splitmix64: the fixed PRNG for the whole project. Every randomized
// routine derives its own stream via derive_stream(seed, name) so results
// are identical across runs, platforms and any execution order.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1]; safe as a log argument
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t below(std::uint64_t n) { return next() % n; }

    // standard normal via Box-Muller (pair cached)
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    // uniform draw from the (K-1)-simplex (normalized exponentials)
    std::vector<double> simplex(std::size_t k) {
        std::vector<double> v(k);
        double sum = 0.0;
        for (auto& x : v) {
            x = -std::log(uniform_pos());
            sum += x;
        }
        for (auto& x : v) x /= sum;
        return v;
    }

  private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Stream derivation: seed XOR FNV-1a(name), passed once through splitmix64.
inline std::uint64_t derive_stream(std::uint64_t seed, std::string_view name) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return SplitMix64(seed ^ h).next();
}

} // namespace seglab
