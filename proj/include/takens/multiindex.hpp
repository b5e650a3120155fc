#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "takens/util.hpp"

namespace takens {

/// A monomial exponent tuple over R^d.
struct MultiIndex {
    std::vector<int> exponents;

    int degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }
};

/// The graded-lexicographic basis of all monomials of total degree <= max_degree.
///
/// Ordering is degree-major; within a degree block, exponent tuples are listed
/// in decreasing lexicographic order ((2,0) before (1,1) before (0,2)). The
/// order is deterministic so coefficient vectors are reproducible across runs.
class PolyBasis {
public:
    PolyBasis(int dim, int max_degree) : dim_(dim), max_degree_(max_degree) {
        if (dim < 1) throw std::invalid_argument("PolyBasis: dimension must be at least 1");
        if (max_degree < 0) throw std::invalid_argument("PolyBasis: negative degree cap");
        std::vector<int> exps(static_cast<std::size_t>(dim), 0);
        for (int degree = 0; degree <= max_degree; ++degree) {
            append_degree_block(exps, 0, degree);
        }
        indices_.shrink_to_fit();
    }

    int dim() const { return dim_; }
    int max_degree() const { return max_degree_; }
    std::size_t size() const { return indices_.size(); }
    const MultiIndex& index(std::size_t k) const { return indices_[k]; }
    const std::vector<MultiIndex>& indices() const { return indices_; }

    static std::uint64_t cardinality(int dim, int max_degree) {
        return binomial(dim + max_degree, max_degree);
    }

    /// Row vector of all monomial values p_a(z), in basis order.
    Eigen::RowVectorXd monomials(const Eigen::VectorXd& z) const {
        Eigen::RowVectorXd out(static_cast<Eigen::Index>(size()));
        monomials_into(z, out);
        return out;
    }

    void monomials_into(const Eigen::VectorXd& z,
                        Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) const {
        check_point(z);
        const Eigen::MatrixXd pw = powers(z);
        for (std::size_t k = 0; k < indices_.size(); ++k) {
            double v = 1.0;
            const auto& e = indices_[k].exponents;
            for (int i = 0; i < dim_; ++i) v *= pw(i, e[static_cast<std::size_t>(i)]);
            out[static_cast<Eigen::Index>(k)] = v;
        }
    }

    /// Gradient matrix: entry (i, a) is d p_a / d z_i. Shape d x size().
    Eigen::MatrixXd monomial_gradients(const Eigen::VectorXd& z) const {
        check_point(z);
        const Eigen::MatrixXd pw = powers(z);
        Eigen::MatrixXd out(dim_, static_cast<Eigen::Index>(size()));
        for (std::size_t k = 0; k < indices_.size(); ++k) {
            const auto& e = indices_[k].exponents;
            for (int i = 0; i < dim_; ++i) {
                const int ei = e[static_cast<std::size_t>(i)];
                if (ei == 0) {
                    out(i, static_cast<Eigen::Index>(k)) = 0.0;
                    continue;
                }
                double v = static_cast<double>(ei) * pw(i, ei - 1);
                for (int j = 0; j < dim_; ++j) {
                    if (j != i) v *= pw(j, e[static_cast<std::size_t>(j)]);
                }
                out(i, static_cast<Eigen::Index>(k)) = v;
            }
        }
        return out;
    }

    /// Value of the combination sum_a coeffs[a] p_a(z).
    double weighted_value(const Eigen::VectorXd& z, const Eigen::VectorXd& coeffs) const {
        check_coeffs(coeffs);
        return monomials(z).dot(coeffs);
    }

    /// Gradient of sum_a coeffs[a] p_a at z.
    Eigen::VectorXd weighted_gradient(const Eigen::VectorXd& z, const Eigen::VectorXd& coeffs) const {
        check_coeffs(coeffs);
        return monomial_gradients(z) * coeffs;
    }

    /// Hessian of sum_a coeffs[a] p_a at z (d x d).
    Eigen::MatrixXd weighted_hessian(const Eigen::VectorXd& z, const Eigen::VectorXd& coeffs) const {
        check_point(z);
        check_coeffs(coeffs);
        const Eigen::MatrixXd pw = powers(z);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
        for (std::size_t k = 0; k < indices_.size(); ++k) {
            const double c = coeffs[static_cast<Eigen::Index>(k)];
            if (c == 0.0) continue;
            const auto& e = indices_[k].exponents;
            for (int i = 0; i < dim_; ++i) {
                const int ei = e[static_cast<std::size_t>(i)];
                for (int j = i; j < dim_; ++j) {
                    const int ej = e[static_cast<std::size_t>(j)];
                    double v;
                    if (i == j) {
                        if (ei < 2) continue;
                        v = static_cast<double>(ei) * static_cast<double>(ei - 1) * pw(i, ei - 2);
                        for (int l = 0; l < dim_; ++l) {
                            if (l != i) v *= pw(l, e[static_cast<std::size_t>(l)]);
                        }
                    } else {
                        if (ei == 0 || ej == 0) continue;
                        v = static_cast<double>(ei) * static_cast<double>(ej) * pw(i, ei - 1) * pw(j, ej - 1);
                        for (int l = 0; l < dim_; ++l) {
                            if (l != i && l != j) v *= pw(l, e[static_cast<std::size_t>(l)]);
                        }
                    }
                    h(i, j) += c * v;
                    if (i != j) h(j, i) += c * v;
                }
            }
        }
        return h;
    }

private:
    void append_degree_block(std::vector<int>& exps, int pos, int remaining) {
        if (pos == dim_ - 1) {
            exps[static_cast<std::size_t>(pos)] = remaining;
            indices_.push_back(MultiIndex{exps});
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            exps[static_cast<std::size_t>(pos)] = e;
            append_degree_block(exps, pos + 1, remaining - e);
        }
        exps[static_cast<std::size_t>(pos)] = 0;
    }

    void check_point(const Eigen::VectorXd& z) const {
        if (z.size() != dim_) throw std::invalid_argument("PolyBasis: point dimension mismatch");
    }

    void check_coeffs(const Eigen::VectorXd& coeffs) const {
        if (coeffs.size() != static_cast<Eigen::Index>(size())) {
            throw std::invalid_argument("PolyBasis: coefficient length mismatch");
        }
    }

    // pw(i, k) = z_i^k built by repeated multiplication; exact on integer inputs.
    Eigen::MatrixXd powers(const Eigen::VectorXd& z) const {
        Eigen::MatrixXd pw(dim_, max_degree_ + 1);
        for (int i = 0; i < dim_; ++i) {
            pw(i, 0) = 1.0;
            for (int k = 1; k <= max_degree_; ++k) pw(i, k) = pw(i, k - 1) * z[i];
        }
        return pw;
    }

    int dim_;
    int max_degree_;
    std::vector<MultiIndex> indices_;
};

inline PolyBasis enumerate_basis(int dim, int max_degree) { return PolyBasis(dim, max_degree); }

}  // namespace takens
