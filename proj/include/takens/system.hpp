#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "takens/rng.hpp"

namespace takens {

/// Closed ball in state space; the working regions K and K+ are balls.
struct Ball {
    Eigen::VectorXd center;
    double radius = std::numeric_limits<double>::infinity();

    bool contains(const Eigen::VectorXd& x) const {
        if (!std::isfinite(radius)) return true;
        return (x - center).norm() <= radius;
    }

    static Ball unbounded(int dim) {
        return Ball{Eigen::VectorXd::Zero(dim), std::numeric_limits<double>::infinity()};
    }
};

class OrbitEscapeError : public std::runtime_error {
public:
    OrbitEscapeError(int step, Eigen::VectorXd state)
        : std::runtime_error("orbit left the working region at step " + std::to_string(step)),
          step_(step),
          state_(std::move(state)) {}

    int step() const { return step_; }
    const Eigen::VectorXd& state() const { return state_; }

private:
    int step_;
    Eigen::VectorXd state_;
};

class NonFiniteStateError : public std::runtime_error {
public:
    explicit NonFiniteStateError(int step)
        : std::runtime_error("non-finite state at step " + std::to_string(step)), step_(step) {}

    int step() const { return step_; }

private:
    int step_;
};

/// A C^3 map of R^d with its Jacobian and (optionally analytic) second
/// derivative. The second derivative is reported as one Hessian per component:
/// tensor(i)(j, k) = d^2 phi_i / dx_j dx_k.
class System {
public:
    using MapFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
    using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
    using HessiansFn = std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)>;

    System(std::string name, int dim, MapFn map, JacobianFn jacobian, HessiansFn hessians = {})
        : name_(std::move(name)),
          dim_(dim),
          map_(std::move(map)),
          jacobian_(std::move(jacobian)),
          hessians_(std::move(hessians)) {
        if (dim_ < 1) throw std::invalid_argument("System: dimension must be at least 1");
    }

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    bool has_analytic_second_derivative() const { return static_cast<bool>(hessians_); }

    Eigen::VectorXd map(const Eigen::VectorXd& x) const { return map_(x); }
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const { return jacobian_(x); }

    std::vector<Eigen::MatrixXd> second_derivative(const Eigen::VectorXd& x) const {
        if (hessians_) return hessians_(x);
        return finite_difference_hessians(x);
    }

    /// Directional derivative of the Jacobian contracted twice:
    /// returns the matrix with entries sum_k d^2 phi_i/dx_j dx_k * u_k,
    /// applied to v, i.e. component i = u^T Hess(phi_i) v.
    Eigen::VectorXd second_derivative_bilinear(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                               const Eigen::VectorXd& v) const {
        const std::vector<Eigen::MatrixXd> hess = second_derivative(x);
        Eigen::VectorXd out(dim_);
        for (int i = 0; i < dim_; ++i) out[i] = u.dot(hess[static_cast<std::size_t>(i)] * v);
        return out;
    }

private:
    // Central differences of the Jacobian, step 1e-5 * (1 + |x|).
    std::vector<Eigen::MatrixXd> finite_difference_hessians(const Eigen::VectorXd& x) const {
        const double h = 1e-5 * (1.0 + x.norm());
        std::vector<Eigen::MatrixXd> hess(static_cast<std::size_t>(dim_),
                                          Eigen::MatrixXd::Zero(dim_, dim_));
        for (int k = 0; k < dim_; ++k) {
            Eigen::VectorXd xp = x;
            Eigen::VectorXd xm = x;
            xp[k] += h;
            xm[k] -= h;
            const Eigen::MatrixXd dj = (jacobian_(xp) - jacobian_(xm)) / (2.0 * h);
            for (int i = 0; i < dim_; ++i) {
                for (int j = 0; j < dim_; ++j) hess[static_cast<std::size_t>(i)](j, k) = dj(i, j);
            }
        }
        // Symmetrize: mixed partials commute for C^3 maps.
        for (auto& m : hess) m = 0.5 * (m + m.transpose()).eval();
        return hess;
    }

    std::string name_;
    int dim_;
    MapFn map_;
    JacobianFn jacobian_;
    HessiansFn hessians_;
};

namespace detail {

inline System make_henon() {
    auto map = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd y(2);
        y[0] = 1.0 - 1.4 * x[0] * x[0] + x[1];
        y[1] = 0.3 * x[0];
        return y;
    };
    auto jac = [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd j(2, 2);
        j << -2.8 * x[0], 1.0, 0.3, 0.0;
        return j;
    };
    auto hess = [](const Eigen::VectorXd&) {
        std::vector<Eigen::MatrixXd> h(2, Eigen::MatrixXd::Zero(2, 2));
        h[0](0, 0) = -2.8;
        return h;
    };
    return System("henon", 2, map, jac, hess);
}

inline System make_ikeda() {
    // x' = 1 + u (x cos t - y sin t), y' = u (x sin t + y cos t),
    // t = 0.4 - 6 / (1 + x^2 + y^2), u = 0.9.
    constexpr double u = 0.9;
    auto angle = [](const Eigen::VectorXd& x) { return 0.4 - 6.0 / (1.0 + x.squaredNorm()); };
    auto map = [angle](const Eigen::VectorXd& x) {
        const double t = angle(x);
        const double c = std::cos(t);
        const double s = std::sin(t);
        Eigen::VectorXd y(2);
        y[0] = 1.0 + u * (x[0] * c - x[1] * s);
        y[1] = u * (x[0] * s + x[1] * c);
        return y;
    };
    auto jac = [angle](const Eigen::VectorXd& x) {
        const double t = angle(x);
        const double c = std::cos(t);
        const double s = std::sin(t);
        const double q = 1.0 + x.squaredNorm();
        const double tx = 12.0 * x[0] / (q * q);
        const double ty = 12.0 * x[1] / (q * q);
        const double a = -x[0] * s - x[1] * c;  // d/dt of (x cos t - y sin t)
        const double b = x[0] * c - x[1] * s;   // d/dt of (x sin t + y cos t)
        Eigen::MatrixXd j(2, 2);
        j(0, 0) = u * (c + a * tx);
        j(0, 1) = u * (-s + a * ty);
        j(1, 0) = u * (s + b * tx);
        j(1, 1) = u * (c + b * ty);
        return j;
    };
    return System("ikeda", 2, map, jac);  // second derivative by finite differences
}

inline System make_linear_diag(double a, double b) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return System("linear_diag", 2, [m](const Eigen::VectorXd& x) { return (m * x).eval(); },
                  [m](const Eigen::VectorXd&) { return m; },
                  [](const Eigen::VectorXd&) {
                      return std::vector<Eigen::MatrixXd>(2, Eigen::MatrixXd::Zero(2, 2));
                  });
}

inline System make_rotation_scale(double theta, double scale) {
    Eigen::MatrixXd m(2, 2);
    m << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    m *= scale;
    return System("rotation_scale", 2, [m](const Eigen::VectorXd& x) { return (m * x).eval(); },
                  [m](const Eigen::VectorXd&) { return m; },
                  [](const Eigen::VectorXd&) {
                      return std::vector<Eigen::MatrixXd>(2, Eigen::MatrixXd::Zero(2, 2));
                  });
}

inline std::vector<double> parse_arguments(const std::string& name, std::size_t paren) {
    if (name.back() != ')') throw std::invalid_argument("builtin_system: missing ')' in " + name);
    std::vector<double> args;
    std::string body = name.substr(paren + 1, name.size() - paren - 2);
    std::size_t pos = 0;
    while (pos < body.size()) {
        std::size_t comma = body.find(',', pos);
        if (comma == std::string::npos) comma = body.size();
        args.push_back(std::stod(body.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return args;
}

}  // namespace detail

/// Named test systems: henon, ikeda, linear_diag(a,b), rotation_scale(theta,s).
inline System builtin_system(const std::string& name) {
    if (name == "henon") return detail::make_henon();
    if (name == "ikeda") return detail::make_ikeda();
    const std::size_t paren = name.find('(');
    if (paren != std::string::npos) {
        const std::string head = name.substr(0, paren);
        const std::vector<double> args = detail::parse_arguments(name, paren);
        if (head == "linear_diag" && args.size() == 2) {
            return detail::make_linear_diag(args[0], args[1]);
        }
        if (head == "rotation_scale" && args.size() == 2) {
            return detail::make_rotation_scale(args[0], args[1]);
        }
    }
    throw std::invalid_argument("builtin_system: unknown system '" + name + "'");
}

/// Orbit x_1, ..., x_n under the map, enforcing the working region.
inline std::vector<Eigen::VectorXd> iterate(const System& system, const Eigen::VectorXd& x1,
                                            int n, const Ball& bound) {
    if (n < 1) throw std::invalid_argument("iterate: orbit length must be at least 1");
    if (x1.size() != system.dim()) throw std::invalid_argument("iterate: state dimension mismatch");
    std::vector<Eigen::VectorXd> orbit;
    orbit.reserve(static_cast<std::size_t>(n));
    orbit.push_back(x1);
    if (!x1.allFinite()) throw NonFiniteStateError(1);
    if (!bound.contains(x1)) throw OrbitEscapeError(1, x1);
    for (int k = 1; k < n; ++k) {
        Eigen::VectorXd next = system.map(orbit.back());
        if (!next.allFinite()) throw NonFiniteStateError(k + 1);
        if (!bound.contains(next)) throw OrbitEscapeError(k + 1, next);
        orbit.push_back(std::move(next));
    }
    return orbit;
}

inline std::vector<Eigen::VectorXd> iterate(const System& system, const Eigen::VectorXd& x1, int n) {
    return iterate(system, x1, n, Ball::unbounded(system.dim()));
}

/// Tangent orbit v_1, ..., v_n with v_{k+1} = jacobian(x_k) v_k.
inline std::vector<Eigen::VectorXd> tangent_orbit(const System& system, const Eigen::VectorXd& x1,
                                                  const Eigen::VectorXd& v1, int n,
                                                  const Ball& bound) {
    if (std::abs(v1.norm() - 1.0) > 1e-12) {
        throw std::invalid_argument("tangent_orbit: v1 must be a unit vector");
    }
    const std::vector<Eigen::VectorXd> orbit = iterate(system, x1, n, bound);
    std::vector<Eigen::VectorXd> tangents;
    tangents.reserve(static_cast<std::size_t>(n));
    tangents.push_back(v1);
    for (int k = 1; k < n; ++k) {
        Eigen::VectorXd next = system.jacobian(orbit[static_cast<std::size_t>(k - 1)]) *
                               tangents.back();
        if (next.norm() == 0.0) {
            throw std::runtime_error("tangent_orbit: zero tangent (singular Jacobian on orbit)");
        }
        tangents.push_back(std::move(next));
    }
    return tangents;
}

inline std::vector<Eigen::VectorXd> tangent_orbit(const System& system, const Eigen::VectorXd& x1,
                                                  const Eigen::VectorXd& v1, int n) {
    return tangent_orbit(system, x1, v1, n, Ball::unbounded(system.dim()));
}

/// Spot-check of the analytic derivatives against central finite differences,
/// and of invertibility (det psi != 0) at sampled points.
struct DerivativeCheck {
    double max_jacobian_rel_err = 0.0;
    double max_hessian_rel_err = 0.0;
    double min_abs_det = std::numeric_limits<double>::infinity();
    bool jacobian_ok = false;
    bool hessian_ok = false;
    bool invertible_ok = false;

    bool ok() const { return jacobian_ok && hessian_ok && invertible_ok; }
};

inline DerivativeCheck validate_derivatives(const System& system, const Ball& region,
                                            int n_points, std::uint64_t seed) {
    RngStream rng(seed, "derivative-check", 0);
    DerivativeCheck check;
    const int d = system.dim();
    const double scale = std::isfinite(region.radius) ? region.radius : 1.0;
    const double hj = 1e-6 * scale;
    const double hh = std::cbrt(std::numeric_limits<double>::epsilon()) * scale;
    for (int p = 0; p < n_points; ++p) {
        const Eigen::VectorXd x = region.center + rng.uniform_ball(d, scale);
        const Eigen::MatrixXd jac = system.jacobian(x);
        Eigen::MatrixXd fd(d, d);
        for (int k = 0; k < d; ++k) {
            Eigen::VectorXd xp = x, xm = x;
            xp[k] += hj;
            xm[k] -= hj;
            fd.col(k) = (system.map(xp) - system.map(xm)) / (2.0 * hj);
        }
        const double jerr = (fd - jac).norm() / std::max(1.0, jac.norm());
        check.max_jacobian_rel_err = std::max(check.max_jacobian_rel_err, jerr);
        check.min_abs_det = std::min(check.min_abs_det, std::abs(jac.determinant()));

        const std::vector<Eigen::MatrixXd> hess = system.second_derivative(x);
        double scale_h = 1.0;
        for (const auto& m : hess) scale_h = std::max(scale_h, m.norm());
        for (int k = 0; k < d; ++k) {
            Eigen::VectorXd xp = x, xm = x;
            xp[k] += hh;
            xm[k] -= hh;
            const Eigen::MatrixXd dj = (system.jacobian(xp) - system.jacobian(xm)) / (2.0 * hh);
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    const double herr =
                        std::abs(dj(i, j) - hess[static_cast<std::size_t>(i)](j, k)) / scale_h;
                    check.max_hessian_rel_err = std::max(check.max_hessian_rel_err, herr);
                }
            }
        }
    }
    check.jacobian_ok = check.max_jacobian_rel_err <= 1e-5;
    check.hessian_ok = check.max_hessian_rel_err <= 1e-4;
    check.invertible_ok = check.min_abs_det > 0.0;
    return check;
}

}  // namespace takens
