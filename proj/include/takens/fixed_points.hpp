#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

#include "takens/multiindex.hpp"
#include "takens/rng.hpp"
#include "takens/system.hpp"

namespace takens {

struct FixedPoint {
    Eigen::VectorXd point;
    Eigen::VectorXcd multipliers;  // eigenvalues of the Jacobian at the point
    bool hyperbolic = false;
};

struct FixedPointSet {
    std::vector<FixedPoint> points;
    double min_separation = std::numeric_limits<double>::infinity();
    double newton_tol = 0.0;

    bool all_hyperbolic() const {
        return std::all_of(points.begin(), points.end(),
                           [](const FixedPoint& f) { return f.hyperbolic; });
    }
};

struct FixedPointOptions {
    int n_seeds = 128;
    double newton_tol = 1e-12;
    double dedup_radius = 1e-6;
    int max_iterations = 60;
    double hyperbolicity_margin = 0.01;  // multiplier modulus must avoid [0.99, 1.01]
};

namespace detail {

/// Newton iteration for phi^period(x) = x. Returns the root on convergence.
inline std::optional<Eigen::VectorXd> newton_periodic(const System& system,
                                                      Eigen::VectorXd x, int period,
                                                      const FixedPointOptions& opt,
                                                      double divergence_radius) {
    const int d = system.dim();
    for (int it = 0; it < opt.max_iterations; ++it) {
        Eigen::VectorXd fx = x;
        Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(d, d);
        for (int k = 0; k < period; ++k) {
            jac = system.jacobian(fx) * jac;
            fx = system.map(fx);
            if (!fx.allFinite() || fx.norm() > divergence_radius) return std::nullopt;
        }
        const Eigen::VectorXd residual = fx - x;
        if (residual.norm() <= opt.newton_tol) return x;
        const Eigen::MatrixXd newton_jac = jac - Eigen::MatrixXd::Identity(d, d);
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(newton_jac);
        if (!lu.isInvertible()) return std::nullopt;
        x -= lu.solve(residual);
        if (!x.allFinite()) return std::nullopt;
    }
    return std::nullopt;
}

inline bool lexicographic_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

}  // namespace detail

/// Newton refinement of a single fixed point from a given guess.
inline Eigen::VectorXd refine_fixed_point(const System& system, const Eigen::VectorXd& guess,
                                          double tol = 1e-12, int max_iterations = 60) {
    FixedPointOptions opt;
    opt.newton_tol = tol;
    opt.max_iterations = max_iterations;
    auto root = detail::newton_periodic(system, guess, 1, opt,
                                        std::numeric_limits<double>::infinity());
    if (!root) throw std::runtime_error("refine_fixed_point: Newton did not converge");
    return *root;
}

/// Fixed points found by Newton from a deterministic low-discrepancy seed grid
/// over the region. Points are sorted by coordinates and deduplicated, so the
/// result does not depend on seed processing order.
inline FixedPointSet find_fixed_points(const System& system, const Ball& region,
                                       const FixedPointOptions& opt = {}) {
    if (!std::isfinite(region.radius)) {
        throw std::invalid_argument("find_fixed_points: region must be bounded");
    }
    if (opt.n_seeds < 1) throw std::invalid_argument("find_fixed_points: need at least one seed");
    const int d = system.dim();
    const double divergence_radius = region.center.norm() + 100.0 * (1.0 + region.radius);
    std::vector<Eigen::VectorXd> roots;
    for (int s = 0; s < opt.n_seeds; ++s) {
        const Eigen::VectorXd unit = 2.0 * halton_point(static_cast<std::uint64_t>(s), d).array() - 1.0;
        if (unit.norm() > 1.0) continue;
        const Eigen::VectorXd seed = region.center + region.radius * unit;
        auto root = detail::newton_periodic(system, seed, 1, opt, divergence_radius);
        if (root && region.contains(*root)) roots.push_back(*root);
    }
    std::sort(roots.begin(), roots.end(), detail::lexicographic_less);
    FixedPointSet set;
    set.newton_tol = opt.newton_tol;
    for (const auto& r : roots) {
        bool duplicate = false;
        for (const auto& kept : set.points) {
            if ((kept.point - r).norm() <= opt.dedup_radius) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) continue;
        FixedPoint fp;
        fp.point = r;
        const Eigen::EigenSolver<Eigen::MatrixXd> eig(system.jacobian(r));
        fp.multipliers = eig.eigenvalues();
        fp.hyperbolic = true;
        for (Eigen::Index i = 0; i < fp.multipliers.size(); ++i) {
            if (std::abs(std::abs(fp.multipliers[i]) - 1.0) < opt.hyperbolicity_margin) {
                fp.hyperbolic = false;
            }
        }
        set.points.push_back(std::move(fp));
    }
    for (std::size_t i = 0; i < set.points.size(); ++i) {
        for (std::size_t j = i + 1; j < set.points.size(); ++j) {
            set.min_separation = std::min(set.min_separation,
                                          (set.points[i].point - set.points[j].point).norm());
        }
    }
    return set;
}

struct PeriodicPoint {
    Eigen::VectorXd point;
    int period = 0;
};

/// Scan for non-fixed periodic points of period 2..max_period from the seed
/// grid. Reports what Newton finds; absence of reports is not a proof.
inline std::vector<PeriodicPoint> periodic_orbit_scan(const System& system, const Ball& region,
                                                      int max_period,
                                                      const FixedPointOptions& opt = {}) {
    const int d = system.dim();
    const double divergence_radius = region.center.norm() + 100.0 * (1.0 + region.radius);
    const FixedPointSet fixed = find_fixed_points(system, region, opt);
    std::vector<PeriodicPoint> found;
    for (int period = 2; period <= max_period; ++period) {
        for (int s = 0; s < opt.n_seeds; ++s) {
            const Eigen::VectorXd unit =
                2.0 * halton_point(static_cast<std::uint64_t>(s), d).array() - 1.0;
            if (unit.norm() > 1.0) continue;
            const Eigen::VectorXd seed = region.center + region.radius * unit;
            auto root = detail::newton_periodic(system, seed, period, opt, divergence_radius);
            if (!root || !region.contains(*root)) continue;
            bool is_fixed = false;
            for (const auto& fp : fixed.points) {
                if ((fp.point - *root).norm() <= 1e2 * opt.dedup_radius) is_fixed = true;
            }
            // A root of phi^p - id with a smaller true period shows up for
            // every multiple of that period; keep only fundamental periods.
            if (!is_fixed) {
                bool smaller_period = false;
                Eigen::VectorXd x = *root;
                for (int k = 1; k < period; ++k) {
                    x = system.map(x);
                    if ((x - *root).norm() <= 1e2 * opt.dedup_radius) {
                        smaller_period = true;
                        break;
                    }
                }
                if (!smaller_period) {
                    bool duplicate = false;
                    for (const auto& p : found) {
                        if (p.period == period && (p.point - *root).norm() <= opt.dedup_radius) {
                            duplicate = true;
                        }
                        // Another point on an already recorded orbit.
                        if (p.period == period && !duplicate) {
                            Eigen::VectorXd y = p.point;
                            for (int k = 1; k < period; ++k) {
                                y = system.map(y);
                                if ((y - *root).norm() <= 1e2 * opt.dedup_radius) duplicate = true;
                            }
                        }
                    }
                    if (!duplicate) found.push_back({*root, period});
                }
            }
        }
    }
    return found;
}

/// First-order location of the perturbed fixed point:
/// z0 + (I - psi(z0))^{-1} e_1 (p_a(z0)) (c_a).
inline Eigen::VectorXd track_fixed_point(const System& system, const Eigen::VectorXd& z0,
                                         const PolyBasis& basis, const Eigen::VectorXd& coeffs) {
    const int d = system.dim();
    const Eigen::MatrixXd shifted = Eigen::MatrixXd::Identity(d, d) - system.jacobian(z0);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(shifted);
    if (!lu.isInvertible()) {
        throw std::runtime_error("track_fixed_point: psi(z0) has an eigenvalue equal to 1");
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    rhs[0] = basis.weighted_value(z0, coeffs);
    return z0 + lu.solve(rhs);
}

}  // namespace takens
