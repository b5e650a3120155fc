#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <utility>

#include "takens/multiindex.hpp"
#include "takens/system.hpp"

namespace takens {

/// The polynomially perturbed map phi_c(x) = phi(x) + e_1 (p_a(x)) (c_a).
///
/// Only the first coordinate is perturbed. With c = 0 the perturbed map is the
/// base map itself, bit for bit.
class PerturbedSystem {
public:
    PerturbedSystem(System base, PolyBasis basis, Eigen::VectorXd coeffs, double radius_a0)
        : base_(std::make_shared<System>(std::move(base))),
          basis_(std::make_shared<PolyBasis>(std::move(basis))),
          coeffs_(std::move(coeffs)),
          radius_a0_(radius_a0),
          full_(build_full()) {
        if (basis_->dim() != base_->dim()) {
            throw std::invalid_argument("PerturbedSystem: basis dimension mismatch");
        }
        if (coeffs_.size() != static_cast<Eigen::Index>(basis_->size())) {
            throw std::invalid_argument("PerturbedSystem: coefficient length mismatch");
        }
        if (!(radius_a0_ > 0.0)) {
            throw std::invalid_argument("PerturbedSystem: radius_a0 must be positive");
        }
        if (coeffs_.norm() > radius_a0_ * (1.0 + 1e-12)) {
            throw std::invalid_argument("PerturbedSystem: coefficients exceed radius_a0");
        }
    }

    const System& base() const { return *base_; }
    const PolyBasis& basis() const { return *basis_; }
    const Eigen::VectorXd& coeffs() const { return coeffs_; }
    double radius_a0() const { return radius_a0_; }

    /// The perturbed dynamics as a System (analytic Jacobian and, when the
    /// base has one, analytic second derivative).
    const System& system() const { return full_; }

private:
    System build_full() {
        auto base = base_;
        auto basis = basis_;
        const Eigen::VectorXd c = coeffs_;
        const bool zero = (c.norm() == 0.0);
        auto map = [base, basis, c, zero](const Eigen::VectorXd& x) {
            Eigen::VectorXd y = base->map(x);
            if (!zero) y[0] += basis->weighted_value(x, c);
            return y;
        };
        auto jac = [base, basis, c, zero](const Eigen::VectorXd& x) {
            Eigen::MatrixXd j = base->jacobian(x);
            if (!zero) j.row(0) += basis->weighted_gradient(x, c).transpose();
            return j;
        };
        System::HessiansFn hess;
        if (base_->has_analytic_second_derivative()) {
            hess = [base, basis, c, zero](const Eigen::VectorXd& x) {
                std::vector<Eigen::MatrixXd> h = base->second_derivative(x);
                if (!zero) h[0] += basis->weighted_hessian(x, c);
                return h;
            };
        }
        return System(base_->name() + "+poly", base_->dim(), map, jac, hess);
    }

    std::shared_ptr<System> base_;
    std::shared_ptr<PolyBasis> basis_;
    Eigen::VectorXd coeffs_;
    double radius_a0_;
    System full_;
};

}  // namespace takens
