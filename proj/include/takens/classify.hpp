#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "takens/delay.hpp"
#include "takens/fixed_points.hpp"
#include "takens/structured.hpp"
#include "takens/system.hpp"

namespace takens {

/// The rank-analysis cases for a pair of delay orbits.
enum class CaseTag {
    distinct_periodic_orbits,  // 1.1: both periodic, different orbits
    same_periodic_orbit,       // 1.2: both periodic, one orbit
    generic,                   // 2.1: 2D distinct points
    overlapping_orbits,        // 2.2: y_1 on the orbit of x_1, neither periodic
    one_periodic,              // 2.3: exactly one of the points periodic
};

inline const char* to_string(CaseTag tag) {
    switch (tag) {
        case CaseTag::distinct_periodic_orbits: return "1.1";
        case CaseTag::same_periodic_orbit: return "1.2";
        case CaseTag::generic: return "2.1";
        case CaseTag::overlapping_orbits: return "2.2";
        case CaseTag::one_periodic: return "2.3";
    }
    return "?";
}

/// Compressed difference matrix J_c, compressed Vandermonde V_c, and the rank
/// certificate of their product for one pair of starting points.
struct CaseReport {
    CaseTag tag = CaseTag::generic;
    StructuredMatrix compressed_J;
    StructuredMatrix compressed_V;
    StructuredMatrix product;
    RankCertificate product_rank;
    int period_x = 0;      // 0 when not periodic with period < 2D
    int period_y = 0;
    int overlap_index = 0;  // j when y_1 = x_j (or x_1 = y_j after a swap)
    bool swapped = false;   // arguments exchanged to reach a canonical case
};

namespace detail {

/// Smallest period p in [1, 2D-1] with x_{p+1} = x_1, or 0.
inline int detect_period(const std::vector<Eigen::VectorXd>& orbit, double tol, int D) {
    for (int p = 1; p <= 2 * D - 1; ++p) {
        if ((orbit[static_cast<std::size_t>(p)] - orbit[0]).norm() <= tol) return p;
    }
    return 0;
}

/// Smallest j in [2, D] with target = orbit[j - 1], or 0.
inline int detect_overlap(const std::vector<Eigen::VectorXd>& orbit,
                          const Eigen::VectorXd& target, double tol, int D) {
    for (int j = 2; j <= D; ++j) {
        if ((orbit[static_cast<std::size_t>(j - 1)] - target).norm() <= tol) return j;
    }
    return 0;
}

/// D x p block whose row k has `value` at column (k-1 + shift) mod p.
inline Eigen::MatrixXd rotation_block(int D, int p, int shift, double value) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(D, p);
    for (int k = 0; k < D; ++k) m(k, (k + shift) % p) = value;
    return m;
}

inline std::vector<Eigen::VectorXd> first_points(const std::vector<Eigen::VectorXd>& orbit,
                                                 int count) {
    return {orbit.begin(), orbit.begin() + count};
}

}  // namespace detail

/// Classifies the pair (x_1, y_1) into the case decomposition used to bound
/// the rank of the difference sensitivity matrix, and certifies that rank.
///
/// Periodicity is detected by iterating to 2D - 1 steps within the tolerance;
/// when known fixed points are supplied, starting points within the tolerance
/// of one are snapped onto it first.
inline CaseReport classify_pair(const System& system, const Eigen::VectorXd& x1_in,
                                const Eigen::VectorXd& y1_in, const PolyBasis& basis,
                                const DelayConfig& config, double tol, const Ball& bound,
                                const FixedPointSet* fixed_point_info = nullptr) {
    const int D = config.D;
    Eigen::VectorXd x1 = x1_in;
    Eigen::VectorXd y1 = y1_in;
    if (fixed_point_info) {
        for (const auto& fp : fixed_point_info->points) {
            if ((x1 - fp.point).norm() <= tol) x1 = fp.point;
            if ((y1 - fp.point).norm() <= tol) y1 = fp.point;
        }
    }
    if ((x1 - y1).norm() <= tol) {
        throw std::invalid_argument("classify_pair: x1 and y1 coincide");
    }
    const std::vector<Eigen::VectorXd> x_orbit = iterate(system, x1, 2 * D, bound);
    const std::vector<Eigen::VectorXd> y_orbit = iterate(system, y1, 2 * D, bound);

    CaseReport report;
    report.period_x = detail::detect_period(x_orbit, tol, D);
    report.period_y = detail::detect_period(y_orbit, tol, D);

    std::vector<Eigen::VectorXd> nodes;
    if (report.period_x > 0 && report.period_y > 0) {
        // Same orbit when y_1 appears among x_2, ..., x_p.
        int offset = 0;
        for (int i = 2; i <= report.period_x; ++i) {
            if ((x_orbit[static_cast<std::size_t>(i - 1)] - y1).norm() <= tol) {
                offset = i;
                break;
            }
        }
        if (offset > 0) {
            report.tag = CaseTag::same_periodic_orbit;
            report.overlap_index = offset;
            const int p = report.period_x;
            report.compressed_J.kind = MatrixKind::circulant;
            report.compressed_J.entries = detail::rotation_block(D, p, 0, 1.0) +
                                          detail::rotation_block(D, p, offset - 1, -1.0);
            nodes = detail::first_points(x_orbit, p);
        } else {
            report.tag = CaseTag::distinct_periodic_orbits;
            const int p = std::min(report.period_x, D);
            const int q = std::min(report.period_y, D);
            report.compressed_J.kind = MatrixKind::difference;
            report.compressed_J.entries.resize(D, p + q);
            report.compressed_J.entries.leftCols(p) = detail::rotation_block(D, p, 0, 1.0);
            report.compressed_J.entries.rightCols(q) = detail::rotation_block(D, q, 0, -1.0);
            nodes = detail::first_points(x_orbit, p);
            const std::vector<Eigen::VectorXd> ynodes = detail::first_points(y_orbit, q);
            nodes.insert(nodes.end(), ynodes.begin(), ynodes.end());
        }
    } else {
        int j = detail::detect_overlap(x_orbit, y1, tol, D);
        bool swapped = false;
        if (j == 0) {
            j = detail::detect_overlap(y_orbit, x1, tol, D);
            swapped = (j != 0);
        }
        if (j > 0) {
            report.tag = CaseTag::overlapping_orbits;
            report.overlap_index = j;
            report.swapped = swapped;
            const std::vector<Eigen::VectorXd>& base = swapped ? y_orbit : x_orbit;
            // First row 1, 0^{j-2}, -1, 0^{D-1}; the -1 never wraps.
            Eigen::VectorXd first_row = Eigen::VectorXd::Zero(D + j - 1);
            first_row[0] = 1.0;
            first_row[j - 1] = -1.0;
            report.compressed_J = circulant(first_row, D);
            if (swapped) report.compressed_J.entries = -report.compressed_J.entries;
            nodes = detail::first_points(base, D + j - 1);
        } else if (report.period_x > 0 || report.period_y > 0) {
            report.tag = CaseTag::one_periodic;
            report.swapped = (report.period_y > 0);
            const std::vector<Eigen::VectorXd>& periodic = report.swapped ? y_orbit : x_orbit;
            const std::vector<Eigen::VectorXd>& free = report.swapped ? x_orbit : y_orbit;
            const int period = report.swapped ? report.period_y : report.period_x;
            const int p = std::min(period, D);
            const double sign = report.swapped ? -1.0 : 1.0;
            report.compressed_J.kind = MatrixKind::difference;
            report.compressed_J.entries.resize(D, p + D);
            report.compressed_J.entries.leftCols(p) = detail::rotation_block(D, p, 0, sign);
            report.compressed_J.entries.rightCols(D) = detail::rotation_block(D, D, 0, -sign);
            nodes = detail::first_points(periodic, p);
            const std::vector<Eigen::VectorXd> fnodes = detail::first_points(free, D);
            nodes.insert(nodes.end(), fnodes.begin(), fnodes.end());
        } else {
            report.tag = CaseTag::generic;
            report.compressed_J.kind = MatrixKind::difference;
            report.compressed_J.entries.resize(D, 2 * D);
            report.compressed_J.entries.leftCols(D) = Eigen::MatrixXd::Identity(D, D);
            report.compressed_J.entries.rightCols(D) = -Eigen::MatrixXd::Identity(D, D);
            nodes = detail::first_points(x_orbit, D);
            const std::vector<Eigen::VectorXd> ynodes = detail::first_points(y_orbit, D);
            nodes.insert(nodes.end(), ynodes.begin(), ynodes.end());
        }
    }

    report.compressed_V = vandermonde(basis, nodes);
    report.product.kind = MatrixKind::compressed;
    report.product.entries = report.compressed_J.entries * report.compressed_V.entries;
    report.product_rank = numerical_rank(report.product);
    return report;
}

inline CaseReport classify_pair(const System& system, const Eigen::VectorXd& x1,
                                const Eigen::VectorXd& y1, const PolyBasis& basis,
                                const DelayConfig& config, double tol = 1e-9,
                                const FixedPointSet* fixed_point_info = nullptr) {
    return classify_pair(system, x1, y1, basis, config, tol, Ball::unbounded(system.dim()),
                         fixed_point_info);
}

}  // namespace takens
