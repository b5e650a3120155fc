#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace takens {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Counter-based random stream keyed by (master seed, purpose, stream id).
///
/// Streams are independent of evaluation order and thread count: every draw
/// depends only on the key and the number of values already taken from this
/// stream. Distributions are implemented in-house so that output is identical
/// across standard libraries.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::string_view purpose, std::uint64_t stream_id) {
        state_ = master_seed;
        (void)splitmix64(state_);
        state_ ^= fnv1a(purpose);
        (void)splitmix64(state_);
        state_ ^= stream_id * 0x9e3779b97f4a7c15ULL;
        (void)splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Marsaglia polar rejection.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    Eigen::VectorXd normal_vector(int dim) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) v[i] = normal();
        return v;
    }

    /// Uniform on the sphere of the given radius.
    Eigen::VectorXd uniform_sphere(int dim, double radius = 1.0) {
        Eigen::VectorXd v = normal_vector(dim);
        double n = v.norm();
        while (n == 0.0) {
            v = normal_vector(dim);
            n = v.norm();
        }
        return v * (radius / n);
    }

    /// Uniform in the closed ball of the given radius.
    Eigen::VectorXd uniform_ball(int dim, double radius = 1.0) {
        Eigen::VectorXd v = uniform_sphere(dim, 1.0);
        const double r = std::pow(uniform(), 1.0 / static_cast<double>(dim));
        return v * (r * radius);
    }

    /// Uniform in an axis-aligned box.
    Eigen::VectorXd uniform_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
        Eigen::VectorXd v(lo.size());
        for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = uniform(lo[i], hi[i]);
        return v;
    }

private:
    std::uint64_t state_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Deterministic low-discrepancy points (Halton sequence) in the unit cube.
inline double halton(std::uint64_t index, std::uint64_t base) {
    double f = 1.0;
    double r = 0.0;
    for (std::uint64_t i = index + 1; i > 0; i /= base) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(i % base);
    }
    return r;
}

inline Eigen::VectorXd halton_point(std::uint64_t index, int dim) {
    static constexpr std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    Eigen::VectorXd p(dim);
    for (int i = 0; i < dim; ++i) p[i] = halton(index, primes[i % 8]);
    return p;
}

}  // namespace takens
