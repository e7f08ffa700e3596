#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace migflow::rng {

// Counter-based substreams: each draw is a pure function of (key, counter),
// so parallel consumers produce identical values regardless of scheduling.
// std::normal_distribution is implementation-defined and cannot give the
// bitwise reproducibility the pipeline contract requires, hence the fixed
// splitmix64 + Box-Muller construction here.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2)));
}

inline std::uint64_t mix(std::uint64_t a, std::string_view s) {
    std::uint64_t h = a;
    for (char c : s) h = mix(h, static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return mix(h, s.size());
}

class Substream {
  public:
    explicit Substream(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

    /// Uniform in (0, 1).
    double next_unit() {
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (fixed algorithm for reproducibility).
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Bernoulli draw.
    bool next_bool(double p) { return next_unit() < p; }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    /// Poisson via inversion (rates used here are small).
    int next_poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        const double l = std::exp(-lambda);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= next_unit();
        } while (p > l);
        return k - 1;
    }

    /// Geometric on {1, 2, ...} with mean 1/p.
    int next_geometric(double p) {
        int k = 1;
        while (!next_bool(p)) ++k;
        return k;
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace migflow::rng
