#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "takens/multiindex.hpp"
#include "takens/perturbed.hpp"
#include "takens/structured.hpp"
#include "takens/system.hpp"
#include "takens/util.hpp"

namespace takens {

/// Delay-map configuration. The observation is fixed to the projection onto
/// the first coordinate.
struct DelayConfig {
    int D = 1;
};

/// The coefficient basis used by the perturbation machinery: degree 2D - 1.
inline PolyBasis default_delay_basis(int dim, const DelayConfig& config) {
    return PolyBasis(dim, 2 * config.D - 1);
}

/// F(x_1) = (pi_1 x_1, ..., pi_1 x_D).
inline Eigen::VectorXd delay_map(const System& system, const Eigen::VectorXd& x1,
                                 const DelayConfig& config, const Ball& bound) {
    const std::vector<Eigen::VectorXd> orbit = iterate(system, x1, config.D, bound);
    Eigen::VectorXd f(config.D);
    for (int k = 0; k < config.D; ++k) f[k] = orbit[static_cast<std::size_t>(k)][0];
    return f;
}

inline Eigen::VectorXd delay_map(const System& system, const Eigen::VectorXd& x1,
                                 const DelayConfig& config) {
    return delay_map(system, x1, config, Ball::unbounded(system.dim()));
}

/// G(x_1, y_1) = F(x_1) - F(y_1); antisymmetric in its arguments.
inline Eigen::VectorXd delay_difference(const System& system, const Eigen::VectorXd& x1,
                                        const Eigen::VectorXd& y1, const DelayConfig& config,
                                        const Ball& bound) {
    return delay_map(system, x1, config, bound) - delay_map(system, y1, config, bound);
}

inline Eigen::VectorXd delay_difference(const System& system, const Eigen::VectorXd& x1,
                                        const Eigen::VectorXd& y1, const DelayConfig& config) {
    return delay_difference(system, x1, y1, config, Ball::unbounded(system.dim()));
}

/// dF(x_1, v_1) = (pi_1 v_1, ..., pi_1 v_D) along the tangent orbit.
inline Eigen::VectorXd delay_tangent(const System& system, const Eigen::VectorXd& x1,
                                     const Eigen::VectorXd& v1, const DelayConfig& config,
                                     const Ball& bound) {
    const std::vector<Eigen::VectorXd> tangents = tangent_orbit(system, x1, v1, config.D, bound);
    Eigen::VectorXd f(config.D);
    for (int k = 0; k < config.D; ++k) f[k] = tangents[static_cast<std::size_t>(k)][0];
    return f;
}

inline Eigen::VectorXd delay_tangent(const System& system, const Eigen::VectorXd& x1,
                                     const Eigen::VectorXd& v1, const DelayConfig& config) {
    return delay_tangent(system, x1, v1, config, Ball::unbounded(system.dim()));
}

/// Jacobian of the delay map with respect to the initial condition: row k is
/// pi_1 of the k-step tangent propagator. Shape D x d; full column rank d at a
/// point means the delay map is immersive there.
inline Eigen::MatrixXd delay_jacobian(const System& system, const Eigen::VectorXd& x1,
                                      const DelayConfig& config, const Ball& bound) {
    const int d = system.dim();
    const std::vector<Eigen::VectorXd> orbit = iterate(system, x1, config.D, bound);
    Eigen::MatrixXd propagator = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd jac(config.D, d);
    jac.row(0) = propagator.row(0);
    for (int k = 1; k < config.D; ++k) {
        propagator = (system.jacobian(orbit[static_cast<std::size_t>(k - 1)]) * propagator).eval();
        jac.row(k) = propagator.row(0);
    }
    return jac;
}

inline Eigen::MatrixXd delay_jacobian(const System& system, const Eigen::VectorXd& x1,
                                      const DelayConfig& config) {
    return delay_jacobian(system, x1, config, Ball::unbounded(system.dim()));
}

/// Forward sensitivity state along an orbit.
///
/// S_j = d x~_j / d c at c = 0 (d x |basis|) and T_j = d w_j / d c at c = 0,
/// where x~ is the perturbed orbit and w the perturbed tangent orbit. The
/// recursions follow from differentiating phi_c and its Jacobian through the
/// orbit:
///   S_1 = 0,  S_{j+1} = psi(x_j) S_j + e_1 p(x_j),
///   T_1 = 0,  T_{j+1} = psi(x_j) T_j + M_j + e_1 (v_j^T grad p(x_j)),
/// where column a of M_j is the second derivative of phi at x_j contracted
/// with (S_j e_a, v_j).
struct SensitivityState {
    std::vector<Eigen::VectorXd> orbit;
    std::vector<Eigen::VectorXd> tangent;
    std::vector<Eigen::MatrixXd> state_blocks;    // S_j
    std::vector<Eigen::MatrixXd> tangent_blocks;  // T_j
};

inline SensitivityState propagate_sensitivities(const System& system, const PolyBasis& basis,
                                                const Eigen::VectorXd& x1, int length,
                                                const Ball& bound,
                                                const Eigen::VectorXd* v1 = nullptr) {
    if (basis.dim() != system.dim()) {
        throw std::invalid_argument("propagate_sensitivities: basis dimension mismatch");
    }
    const int d = system.dim();
    const Eigen::Index n_alpha = static_cast<Eigen::Index>(basis.size());
    SensitivityState st;
    st.orbit = iterate(system, x1, length, bound);
    const bool with_tangent = (v1 != nullptr);
    if (with_tangent) st.tangent = tangent_orbit(system, x1, *v1, length, bound);
    st.state_blocks.reserve(static_cast<std::size_t>(length));
    st.state_blocks.push_back(Eigen::MatrixXd::Zero(d, n_alpha));
    if (with_tangent) {
        st.tangent_blocks.reserve(static_cast<std::size_t>(length));
        st.tangent_blocks.push_back(Eigen::MatrixXd::Zero(d, n_alpha));
    }
    for (int j = 1; j < length; ++j) {
        const Eigen::VectorXd& xj = st.orbit[static_cast<std::size_t>(j - 1)];
        const Eigen::MatrixXd psi = system.jacobian(xj);
        const Eigen::RowVectorXd p_row = basis.monomials(xj);
        Eigen::MatrixXd s_next = psi * st.state_blocks.back();
        s_next.row(0) += p_row;
        if (with_tangent) {
            const Eigen::VectorXd& vj = st.tangent[static_cast<std::size_t>(j - 1)];
            const Eigen::MatrixXd grad = basis.monomial_gradients(xj);
            Eigen::MatrixXd t_next = psi * st.tangent_blocks.back();
            t_next.row(0) += vj.transpose() * grad;
            const std::vector<Eigen::MatrixXd> hess = system.second_derivative(xj);
            const Eigen::MatrixXd& s_prev = st.state_blocks.back();
            for (int i = 0; i < d; ++i) {
                // Row i of M_j: v_j^T Hess(phi_i) S_j, one entry per coefficient.
                t_next.row(i) +=
                    (hess[static_cast<std::size_t>(i)] * vj).transpose() * s_prev;
            }
            st.tangent_blocks.push_back(std::move(t_next));
        }
        st.state_blocks.push_back(std::move(s_next));
    }
    return st;
}

/// First-order response of the delay map to the coefficients: rows 2..D of
/// dF_c/dc at c = 0 (row 1 is identically zero). Shape (D-1) x |basis|.
inline StructuredMatrix sensitivity_V(const System& system, const PolyBasis& basis,
                                      const Eigen::VectorXd& x1, const DelayConfig& config,
                                      const Ball& bound) {
    const SensitivityState st = propagate_sensitivities(system, basis, x1, config.D, bound);
    StructuredMatrix out;
    out.kind = MatrixKind::compressed;
    out.entries.resize(config.D - 1, static_cast<Eigen::Index>(basis.size()));
    for (int j = 2; j <= config.D; ++j) {
        out.entries.row(j - 2) = st.state_blocks[static_cast<std::size_t>(j - 1)].row(0);
    }
    return out;
}

inline StructuredMatrix sensitivity_V(const System& system, const PolyBasis& basis,
                                      const Eigen::VectorXd& x1, const DelayConfig& config) {
    return sensitivity_V(system, basis, x1, config, Ball::unbounded(system.dim()));
}

/// The V recursion continued past D: nrows rows of first-order response along
/// an orbit of length nrows + 1 (used by the extended rank checks).
inline StructuredMatrix sensitivity_V_extended(const System& system, const PolyBasis& basis,
                                               const Eigen::VectorXd& x1, int nrows,
                                               const Ball& bound) {
    const SensitivityState st = propagate_sensitivities(system, basis, x1, nrows + 1, bound);
    StructuredMatrix out;
    out.kind = MatrixKind::compressed;
    out.entries.resize(nrows, static_cast<Eigen::Index>(basis.size()));
    for (int j = 0; j < nrows; ++j) {
        out.entries.row(j) = st.state_blocks[static_cast<std::size_t>(j + 1)].row(0);
    }
    return out;
}

inline StructuredMatrix sensitivity_V_extended(const System& system, const PolyBasis& basis,
                                               const Eigen::VectorXd& x1, int nrows) {
    return sensitivity_V_extended(system, basis, x1, nrows, Ball::unbounded(system.dim()));
}

/// First-order response of the tangent delay map: rows 2..D of d(dF_c)/dc at
/// c = 0. Shape (D-1) x |basis|.
inline StructuredMatrix sensitivity_H(const System& system, const PolyBasis& basis,
                                      const Eigen::VectorXd& x1, const Eigen::VectorXd& v1,
                                      const DelayConfig& config, const Ball& bound) {
    const SensitivityState st = propagate_sensitivities(system, basis, x1, config.D, bound, &v1);
    StructuredMatrix out;
    out.kind = MatrixKind::compressed;
    out.entries.resize(config.D - 1, static_cast<Eigen::Index>(basis.size()));
    for (int j = 2; j <= config.D; ++j) {
        out.entries.row(j - 2) = st.tangent_blocks[static_cast<std::size_t>(j - 1)].row(0);
    }
    return out;
}

inline StructuredMatrix sensitivity_H(const System& system, const PolyBasis& basis,
                                      const Eigen::VectorXd& x1, const Eigen::VectorXd& v1,
                                      const DelayConfig& config) {
    return sensitivity_H(system, basis, x1, v1, config, Ball::unbounded(system.dim()));
}

/// Log-log slope of the Taylor remainder of the delay map (or, with a tangent
/// vector, of the tangent delay map) along a coefficient direction.
struct RemainderFit {
    bool exactly_linear = false;
    double slope = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> scales;
    std::vector<double> remainders;
};

namespace detail {

inline RemainderFit fit_remainders(std::span<const double> t_ladder,
                                   std::span<const double> remainders, double linear_floor) {
    RemainderFit fit;
    fit.scales.assign(t_ladder.begin(), t_ladder.end());
    fit.remainders.assign(remainders.begin(), remainders.end());
    if (remainders[0] < linear_floor) {
        fit.exactly_linear = true;
        return fit;
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < remainders.size(); ++i) {
        lx.push_back(std::log(t_ladder[i]));
        ly.push_back(std::log(std::max(remainders[i], 1e-300)));
    }
    fit.slope = fit_line(lx, ly).slope;
    return fit;
}

inline void check_ladder(std::span<const double> t_ladder) {
    if (t_ladder.size() < 3) {
        throw std::invalid_argument("taylor_remainder_order: need at least three scales");
    }
    for (std::size_t i = 0; i < t_ladder.size(); ++i) {
        if (!(t_ladder[i] > 0.0)) {
            throw std::invalid_argument("taylor_remainder_order: scales must be positive");
        }
        if (i > 0 && !(t_ladder[i] < t_ladder[i - 1])) {
            throw std::invalid_argument("taylor_remainder_order: scales must decrease");
        }
    }
}

}  // namespace detail

inline RemainderFit taylor_remainder_order(const System& system, const PolyBasis& basis,
                                           const Eigen::VectorXd& x1, const DelayConfig& config,
                                           const Eigen::VectorXd& direction,
                                           std::span<const double> t_ladder, const Ball& bound) {
    detail::check_ladder(t_ladder);
    const Eigen::VectorXd f0 = delay_map(system, x1, config, bound);
    const StructuredMatrix v = sensitivity_V(system, basis, x1, config, bound);
    const Eigen::VectorXd unit_dir = direction / direction.norm();
    Eigen::VectorXd linear = Eigen::VectorXd::Zero(config.D);
    linear.tail(config.D - 1) = v.entries * unit_dir;
    std::vector<double> remainders;
    for (const double t : t_ladder) {
        const PerturbedSystem perturbed(system, basis, t * unit_dir, 2.0 * t + 1e-300);
        const Eigen::VectorXd ft = delay_map(perturbed.system(), x1, config, bound);
        remainders.push_back((ft - f0 - t * linear).norm());
    }
    const double floor =
        1e2 * std::numeric_limits<double>::epsilon() * std::max(1.0, f0.norm());
    return detail::fit_remainders(t_ladder, remainders, floor);
}

inline RemainderFit taylor_remainder_order_tangent(const System& system, const PolyBasis& basis,
                                                   const Eigen::VectorXd& x1,
                                                   const Eigen::VectorXd& v1,
                                                   const DelayConfig& config,
                                                   const Eigen::VectorXd& direction,
                                                   std::span<const double> t_ladder,
                                                   const Ball& bound) {
    detail::check_ladder(t_ladder);
    const Eigen::VectorXd df0 = delay_tangent(system, x1, v1, config, bound);
    const StructuredMatrix h = sensitivity_H(system, basis, x1, v1, config, bound);
    const Eigen::VectorXd unit_dir = direction / direction.norm();
    Eigen::VectorXd linear = Eigen::VectorXd::Zero(config.D);
    linear.tail(config.D - 1) = h.entries * unit_dir;
    std::vector<double> remainders;
    for (const double t : t_ladder) {
        const PerturbedSystem perturbed(system, basis, t * unit_dir, 2.0 * t + 1e-300);
        const Eigen::VectorXd dft = delay_tangent(perturbed.system(), x1, v1, config, bound);
        remainders.push_back((dft - df0 - t * linear).norm());
    }
    const double floor =
        1e2 * std::numeric_limits<double>::epsilon() * std::max(1.0, df0.norm());
    return detail::fit_remainders(t_ladder, remainders, floor);
}

}  // namespace takens
