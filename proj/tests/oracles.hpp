#pragma once

// Test-only oracles, independent of the library implementation paths they
// check.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracles {

/// Exhaustive enumeration of exponent tuples over dim variables with total
/// degree at most max_degree.
inline std::vector<std::vector<int>> enumerate_exponents(int dim, int max_degree) {
    std::vector<std::vector<int>> all;
    std::vector<int> current(static_cast<std::size_t>(dim), 0);
    std::function<void(int, int)> rec = [&](int pos, int budget) {
        if (pos == dim) {
            all.push_back(current);
            return;
        }
        for (int e = 0; e <= budget; ++e) {
            current[static_cast<std::size_t>(pos)] = e;
            rec(pos + 1, budget - e);
        }
        current[static_cast<std::size_t>(pos)] = 0;
    };
    rec(0, max_degree);
    return all;
}

/// Central finite-difference gradient of a scalar function.
inline Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

/// Central finite-difference Jacobian of a vector function.
inline Eigen::MatrixXd central_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double h) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd jac(f0.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        jac.col(i) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return jac;
}

/// Brute-force check that every point lies within eps of some center and that
/// all centers are cloud points (by index).
inline bool cover_is_valid(const Eigen::MatrixXd& points, const std::vector<Eigen::Index>& centers,
                           double eps) {
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const Eigen::Index c : centers) {
            if (c < 0 || c >= points.rows()) return false;
            best = std::min(best, (points.row(i) - points.row(c)).norm());
        }
        if (best > eps) return false;
    }
    return true;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// The two fixed points of the Henon map from the quadratic formula.
inline std::vector<Eigen::Vector2d> henon_fixed_points() {
    // 1.4 x^2 + 0.7 x - 1 = 0, y = 0.3 x.
    const double disc = std::sqrt(0.7 * 0.7 + 4.0 * 1.4);
    std::vector<Eigen::Vector2d> pts;
    for (const double sign : {+1.0, -1.0}) {
        const double x = (-0.7 + sign * disc) / 2.8;
        pts.emplace_back(x, 0.3 * x);
    }
    return pts;
}

}  // namespace oracles
