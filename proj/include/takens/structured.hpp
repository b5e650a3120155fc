#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "takens/multiindex.hpp"

namespace takens {

enum class MatrixKind {
    vandermonde,
    hermite_incomplete,
    hermite_full,
    circulant,
    difference,
    compressed,
};

inline const char* to_string(MatrixKind k) {
    switch (k) {
        case MatrixKind::vandermonde: return "vandermonde";
        case MatrixKind::hermite_incomplete: return "hermite_incomplete";
        case MatrixKind::hermite_full: return "hermite_full";
        case MatrixKind::circulant: return "circulant";
        case MatrixKind::difference: return "difference";
        case MatrixKind::compressed: return "compressed";
    }
    return "unknown";
}

struct StructuredMatrix {
    MatrixKind kind = MatrixKind::compressed;
    Eigen::MatrixXd entries;

    Eigen::Index rows() const { return entries.rows(); }
    Eigen::Index cols() const { return entries.cols(); }
};

/// SVD-backed rank certificate: the count of singular values above
/// rel_tolerance times the largest one, plus the full spectrum.
struct RankCertificate {
    Eigen::Index numerical_rank = 0;
    Eigen::VectorXd singular_values;
    double rel_tolerance = 0.0;
};

inline constexpr double kDefaultRankTolerance = 1e-10;

inline RankCertificate numerical_rank(const Eigen::MatrixXd& m,
                                      double rel_tolerance = kDefaultRankTolerance) {
    if (!(rel_tolerance > 0.0 && rel_tolerance < 1.0)) {
        throw std::invalid_argument("numerical_rank: rel_tolerance must lie in (0, 1)");
    }
    if (!m.allFinite()) throw std::invalid_argument("numerical_rank: non-finite entries");
    RankCertificate cert;
    cert.rel_tolerance = rel_tolerance;
    if (m.rows() == 0 || m.cols() == 0) {
        cert.singular_values = Eigen::VectorXd();
        return cert;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    cert.singular_values = svd.singularValues();
    const double top = cert.singular_values.size() > 0 ? cert.singular_values[0] : 0.0;
    if (top > 0.0) {
        for (Eigen::Index i = 0; i < cert.singular_values.size(); ++i) {
            if (cert.singular_values[i] > rel_tolerance * top) ++cert.numerical_rank;
        }
    }
    return cert;
}

inline RankCertificate numerical_rank(const StructuredMatrix& m,
                                      double rel_tolerance = kDefaultRankTolerance) {
    return numerical_rank(m.entries, rel_tolerance);
}

/// The r-th largest singular value (1-based).
inline double singular_value(const Eigen::MatrixXd& m, Eigen::Index r) {
    if (r < 1 || r > std::min(m.rows(), m.cols())) {
        throw std::invalid_argument("singular_value: index out of range");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()[r - 1];
}

/// Multivariate Vandermonde matrix: row i holds all monomial values at points[i].
inline StructuredMatrix vandermonde(const PolyBasis& basis,
                                    std::span<const Eigen::VectorXd> points) {
    if (points.empty()) throw std::invalid_argument("vandermonde: need at least one point");
    StructuredMatrix out;
    out.kind = MatrixKind::vandermonde;
    out.entries.resize(static_cast<Eigen::Index>(points.size()),
                       static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        basis.monomials_into(points[i], out.entries.row(static_cast<Eigen::Index>(i)));
    }
    return out;
}

/// Incomplete Hermite matrix: the gradient blocks of all monomials, stacked
/// point by point. Shape (#points * d) x |basis|.
inline StructuredMatrix hermite_incomplete(const PolyBasis& basis,
                                           std::span<const Eigen::VectorXd> points) {
    if (points.empty()) throw std::invalid_argument("hermite_incomplete: need at least one point");
    const Eigen::Index d = basis.dim();
    StructuredMatrix out;
    out.kind = MatrixKind::hermite_incomplete;
    out.entries.resize(static_cast<Eigen::Index>(points.size()) * d,
                       static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        out.entries.middleRows(static_cast<Eigen::Index>(i) * d, d) =
            basis.monomial_gradients(points[i]);
    }
    return out;
}

/// Full Hermite matrix: the values block stacked above the gradients block.
inline StructuredMatrix hermite_full(const PolyBasis& basis,
                                     std::span<const Eigen::VectorXd> points) {
    if (points.empty()) throw std::invalid_argument("hermite_full: need at least one point");
    const StructuredMatrix values = vandermonde(basis, points);
    const StructuredMatrix grads = hermite_incomplete(basis, points);
    StructuredMatrix out;
    out.kind = MatrixKind::hermite_full;
    out.entries.resize(values.rows() + grads.rows(), values.cols());
    out.entries.topRows(values.rows()) = values.entries;
    out.entries.bottomRows(grads.rows()) = grads.entries;
    return out;
}

/// Circulant matrix: row k is the first row rotated right k-1 positions.
inline StructuredMatrix circulant(const Eigen::VectorXd& first_row, Eigen::Index nrows) {
    if (first_row.size() == 0) throw std::invalid_argument("circulant: empty first row");
    if (nrows < 1) throw std::invalid_argument("circulant: need at least one row");
    const Eigen::Index n = first_row.size();
    StructuredMatrix out;
    out.kind = MatrixKind::circulant;
    out.entries.resize(nrows, n);
    for (Eigen::Index k = 0; k < nrows; ++k) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out.entries(k, j) = first_row[(j - k % n + n) % n];
        }
    }
    return out;
}

/// Circulant with first row 1, 0^{j1}, -1, 0^{j2} (the rank-lemma family).
inline StructuredMatrix circulant_plus_minus(Eigen::Index j1, Eigen::Index j2, Eigen::Index nrows) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(2 + j1 + j2);
    row[0] = 1.0;
    row[1 + j1] = -1.0;
    return circulant(row, nrows);
}

/// Vandermonde in the characteristic multipliers: entry (i, j) = lambda_j^i.
inline StructuredMatrix multiplier_vandermonde(std::span<const double> multipliers,
                                               Eigen::Index nrows) {
    if (nrows > static_cast<Eigen::Index>(multipliers.size())) {
        throw std::invalid_argument("multiplier_vandermonde: more rows than multipliers");
    }
    StructuredMatrix out;
    out.kind = MatrixKind::vandermonde;
    out.entries.resize(nrows, static_cast<Eigen::Index>(multipliers.size()));
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        double p = 1.0;
        for (Eigen::Index i = 0; i < nrows; ++i) {
            out.entries(i, j) = p;
            p *= multipliers[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

}  // namespace takens
