#pragma once

#include "gridcert/types.hpp"

#include <cstdint>

namespace gridcert {

/// Small deterministic generator (splitmix64 core). Standard-library
/// distributions are implementation-defined, so uniform/normal draws are
/// produced by hand to keep trajectories reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// uniform in [0, 1)
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// standard normal via Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// uniform direction on the unit sphere in dim dimensions
    Vector unit_vector(int dim) {
        Vector v(dim);
        double n2 = 0.0;
        do {
            for (int i = 0; i < dim; ++i) v(i) = normal();
            n2 = v.squaredNorm();
        } while (n2 < 1e-300);
        return v / std::sqrt(n2);
    }

    /// decorrelated child seed for trial `index`
    static std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
        Rng mix(master ^ (0xa0761d6478bd642fULL + index * 0xe7037ed1a0b428dbULL));
        return mix.next_u64();
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace gridcert
