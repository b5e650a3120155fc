#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "takens/structured.hpp"
#include "takens/util.hpp"

namespace takens {

/// Inputs of the transfer-of-volume bounds.
struct BoundInput {
    Eigen::Index D_alpha = 0;  // parameter-space dimension
    Eigen::Index r = 0;        // number of singular values bounded below
    double sigma = 0.0;        // lower bound on those singular values
    double L = 0.0;            // Lipschitz / remainder constant
    double epsilon = 0.0;      // ball scale
    double a = 0.0;            // coefficient-ball radius

    void validate() const {
        if (D_alpha < 1) throw std::invalid_argument("BoundInput: D_alpha must be positive");
        if (r < 0 || r > D_alpha) throw std::invalid_argument("BoundInput: need 0 <= r <= D_alpha");
        if (!(sigma > 0.0) || !(L > 0.0) || !(epsilon > 0.0) || !(a > 0.0)) {
            throw std::invalid_argument("BoundInput: sigma, L, epsilon, a must be positive");
        }
    }
};

/// A probability bound clamped to [0, 1], with its log kept alongside because
/// the D_alpha! factor overflows doubles long before realistic sizes.
struct BoundValue {
    double probability = 1.0;
    double log_probability = 0.0;
    double log_measure = std::numeric_limits<double>::quiet_NaN();
};

/// Linear transfer of volume: the probability of |A c + g0| <= L eps relative
/// to |c| <= a is at most D_alpha! L^r eps^r / (sigma^r a^r). The companion
/// measure bound is 2^D_alpha L^r eps^r a^(D_alpha - r) / sigma^r.
inline BoundValue bound_linear(const BoundInput& in) {
    in.validate();
    const double r = static_cast<double>(in.r);
    BoundValue out;
    out.log_probability = std::lgamma(static_cast<double>(in.D_alpha) + 1.0) +
                          r * (std::log(in.L) + std::log(in.epsilon) - std::log(in.sigma) -
                               std::log(in.a));
    out.log_measure = static_cast<double>(in.D_alpha) * std::log(2.0) +
                      r * (std::log(in.L) + std::log(in.epsilon) - std::log(in.sigma)) +
                      (static_cast<double>(in.D_alpha) - r) * std::log(in.a);
    out.probability = std::min(1.0, std::exp(out.log_probability));
    return out;
}

/// Nonlinear transfer of volume: the probability of |g(c)| <= L eps relative
/// to |c| <= eps^(1/2) is at most D_alpha! 2^r L^r eps^(r/2) / sigma^r,
/// provided eps^(1/2) <= a.
inline BoundValue bound_nonlinear(const BoundInput& in) {
    in.validate();
    if (std::sqrt(in.epsilon) > in.a) {
        throw std::invalid_argument("bound_nonlinear: requires epsilon^(1/2) <= a");
    }
    const double r = static_cast<double>(in.r);
    BoundValue out;
    out.log_probability = std::lgamma(static_cast<double>(in.D_alpha) + 1.0) +
                          r * std::log(2.0) + r * std::log(in.L) +
                          0.5 * r * std::log(in.epsilon) - r * std::log(in.sigma);
    out.probability = std::min(1.0, std::exp(out.log_probability));
    return out;
}

/// An epsilon-cover of a finite point cloud whose centers belong to the cloud.
struct CoverResult {
    std::vector<Eigen::Index> centers;     // row indices into the cloud
    double epsilon = 0.0;
    std::vector<Eigen::Index> assignment;  // point -> covering center (row index)
};

/// Greedy farthest-point cover. The traversal order is a function of the
/// cloud alone, so cover sizes are monotone in epsilon; ties break to the
/// lowest point index.
inline CoverResult greedy_cover(const Eigen::MatrixXd& points, double epsilon) {
    if (points.rows() == 0) throw std::invalid_argument("greedy_cover: empty cloud");
    if (!(epsilon > 0.0)) throw std::invalid_argument("greedy_cover: epsilon must be positive");
    const Eigen::Index n = points.rows();
    CoverResult cover;
    cover.epsilon = epsilon;
    cover.assignment.assign(static_cast<std::size_t>(n), 0);
    std::vector<double> dist(static_cast<std::size_t>(n),
                             std::numeric_limits<double>::infinity());
    Eigen::Index next = 0;
    for (;;) {
        cover.centers.push_back(next);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = (points.row(i) - points.row(next)).norm();
            if (d < dist[static_cast<std::size_t>(i)]) {
                dist[static_cast<std::size_t>(i)] = d;
                cover.assignment[static_cast<std::size_t>(i)] = next;
            }
        }
        double worst = -1.0;
        Eigen::Index arg = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (dist[static_cast<std::size_t>(i)] > worst) {
                worst = dist[static_cast<std::size_t>(i)];
                arg = i;
            }
        }
        if (worst <= epsilon) break;
        next = arg;
    }
    return cover;
}

/// Box-counting dimension fit: occupied-cell counts against 1/epsilon in log
/// space.
struct BoxDimEstimate {
    double dimension = 0.0;
    double C_K = 1.0;
    std::vector<double> scales;
    std::vector<Eigen::Index> counts;
    double fit_residual = 0.0;
    bool degenerate = false;  // all counts equal; slope is meaningless
};

/// Number of occupied cells of an axis-aligned grid of mesh eps anchored at
/// the cloud's min corner.
inline Eigen::Index occupied_box_count(const Eigen::MatrixXd& points, double eps) {
    if (points.rows() == 0) throw std::invalid_argument("occupied_box_count: empty cloud");
    if (!(eps > 0.0)) throw std::invalid_argument("occupied_box_count: mesh must be positive");
    const Eigen::RowVectorXd anchor = points.colwise().minCoeff();
    std::vector<std::vector<long long>> cells;
    cells.reserve(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        std::vector<long long> key(static_cast<std::size_t>(points.cols()));
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
            key[static_cast<std::size_t>(j)] =
                static_cast<long long>(std::floor((points(i, j) - anchor[j]) / eps));
        }
        cells.push_back(std::move(key));
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    return static_cast<Eigen::Index>(cells.size());
}

inline BoxDimEstimate box_dimension(const Eigen::MatrixXd& points,
                                    std::span<const double> scale_ladder) {
    if (scale_ladder.size() < 4) {
        throw std::invalid_argument("box_dimension: need at least four scales");
    }
    for (std::size_t i = 1; i < scale_ladder.size(); ++i) {
        if (!(scale_ladder[i] < scale_ladder[i - 1])) {
            throw std::invalid_argument("box_dimension: scales must decrease");
        }
    }
    BoxDimEstimate est;
    est.scales.assign(scale_ladder.begin(), scale_ladder.end());
    for (const double eps : scale_ladder) {
        est.counts.push_back(occupied_box_count(points, eps));
    }
    bool all_equal = true;
    for (const auto c : est.counts) all_equal = all_equal && (c == est.counts.front());
    if (all_equal) {
        est.degenerate = true;
        est.dimension = 0.0;
        est.C_K = static_cast<double>(est.counts.front());
        return est;
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < est.scales.size(); ++i) {
        lx.push_back(std::log(1.0 / est.scales[i]));
        ly.push_back(std::log(static_cast<double>(est.counts[i])));
    }
    const LineFit fit = fit_line(lx, ly);
    est.dimension = std::max(0.0, fit.slope);
    est.C_K = std::exp(fit.intercept);
    est.fit_residual = fit.residual_rms;
    return est;
}

inline constexpr double kLipschitzSafetyFactor = 1.5;

/// Largest sampled difference quotient times a safety factor. Sampled ratios
/// under-estimate the true supremum; the factor is recorded with every report.
inline double lipschitz_estimate(std::span<const Eigen::VectorXd> inputs,
                                 std::span<const Eigen::VectorXd> outputs) {
    if (inputs.size() != outputs.size() || inputs.size() < 2) {
        throw std::invalid_argument("lipschitz_estimate: need at least two samples");
    }
    double best = -1.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t j = i + 1; j < inputs.size(); ++j) {
            const double dx = (inputs[i] - inputs[j]).norm();
            if (dx == 0.0) continue;
            best = std::max(best, (outputs[i] - outputs[j]).norm() / dx);
        }
    }
    if (best < 0.0) throw std::invalid_argument("lipschitz_estimate: all inputs coincide");
    return kLipschitzSafetyFactor * best;
}

/// Quadratic-remainder constant: max |remainder| / |c|^2 over a coefficient
/// ladder, times the same safety factor.
inline double quadratic_remainder_constant(std::span<const Eigen::VectorXd> coefficients,
                                           std::span<const Eigen::VectorXd> remainders) {
    if (coefficients.size() != remainders.size() || coefficients.empty()) {
        throw std::invalid_argument("quadratic_remainder_constant: need matching samples");
    }
    double best = 0.0;
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        const double c2 = coefficients[i].squaredNorm();
        if (c2 == 0.0) continue;
        best = std::max(best, remainders[i].norm() / c2);
    }
    return kLipschitzSafetyFactor * best;
}

/// Minimum of the r-th singular value of a built matrix over cover centers.
struct SigmaDeltaResult {
    double sigma = std::numeric_limits<double>::infinity();
    Eigen::Index argmin_center = -1;
};

inline SigmaDeltaResult sigma_delta_min(
    const CoverResult& cover, const Eigen::MatrixXd& points,
    const std::function<StructuredMatrix(const Eigen::VectorXd&)>& matrix_builder,
    Eigen::Index r) {
    if (cover.centers.empty()) throw std::invalid_argument("sigma_delta_min: empty cover");
    SigmaDeltaResult result;
    for (const Eigen::Index center : cover.centers) {
        StructuredMatrix m;
        try {
            m = matrix_builder(points.row(center).transpose());
        } catch (const std::exception& e) {
            throw std::runtime_error("sigma_delta_min: builder failed at center " +
                                     std::to_string(center) + ": " + e.what());
        }
        const double s = singular_value(m.entries, r);
        if (s < result.sigma) {
            result.sigma = s;
            result.argmin_center = center;
        }
    }
    return result;
}

/// Cover growth law: the set is covered by C_K / eps^exponent balls.
struct CoverLaw {
    double C_K = 1.0;
    double exponent = 0.0;
};

/// Total probability bound: cover count times the per-ball transfer bound.
/// The epsilon exponent margin (r - exponent, or r/2 - exponent in the
/// nonlinear case) is positive exactly when the bound vanishes as eps -> 0.
class AssembledBound {
public:
    AssembledBound(CoverLaw law, BoundInput per_ball, bool nonlinear)
        : law_(law), per_ball_(per_ball), nonlinear_(nonlinear) {
        if (law.exponent < 0.0) {
            throw std::invalid_argument("AssembledBound: exponent must be non-negative");
        }
        BoundInput check = per_ball_;
        check.epsilon = 1.0;  // supplied per evaluation
        check.validate();
    }

    const CoverLaw& law() const { return law_; }
    const BoundInput& per_ball() const { return per_ball_; }
    bool nonlinear() const { return nonlinear_; }

    double margin() const {
        const double r = static_cast<double>(per_ball_.r);
        return (nonlinear_ ? r / 2.0 : r) - law_.exponent;
    }

    /// log of the assembled bound: margin() * log(eps) + log_offset().
    double log_evaluate(double epsilon) const { return margin() * std::log(epsilon) + log_offset(); }

    /// Clamped probability bound. Outside the hypothesis range of the
    /// nonlinear lemma (eps^(1/2) > a) only the trivial bound 1 is available.
    double evaluate(double epsilon) const {
        if (nonlinear_ && std::sqrt(epsilon) > per_ball_.a) return 1.0;
        return std::min(1.0, std::exp(log_evaluate(epsilon)));
    }

    /// The epsilon below which the total bound drops under 1. Infinity when it
    /// is below 1 for every admissible epsilon; NaN when the margin is not
    /// positive. Often underflows double range at realistic D_alpha; use the
    /// log form for reporting.
    double crossover_epsilon() const {
        const double m = margin();
        if (!(m > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        const double offset = log_offset();
        if (offset <= 0.0) return std::numeric_limits<double>::infinity();
        return std::exp(-offset / m);
    }

    /// log10 of the crossover epsilon; representable even when the crossover
    /// itself underflows.
    double log10_crossover_epsilon() const {
        const double m = margin();
        if (!(m > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        const double offset = log_offset();
        if (offset <= 0.0) return std::numeric_limits<double>::infinity();
        return -offset / m / std::log(10.0);
    }

private:
    // The epsilon-free part of the log bound.
    double log_offset() const {
        const double r = static_cast<double>(per_ball_.r);
        double offset = std::log(law_.C_K) +
                        std::lgamma(static_cast<double>(per_ball_.D_alpha) + 1.0) +
                        r * (std::log(per_ball_.L) - std::log(per_ball_.sigma));
        if (nonlinear_) {
            offset += r * std::log(2.0);
        } else {
            offset -= r * std::log(per_ball_.a);
        }
        return offset;
    }

    CoverLaw law_;
    BoundInput per_ball_;
    bool nonlinear_;
};

inline AssembledBound assemble_bound(const CoverLaw& law, const BoundInput& per_ball,
                                     bool nonlinear) {
    return AssembledBound(law, per_ball, nonlinear);
}

}  // namespace takens
