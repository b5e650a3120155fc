#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "takens/config.hpp"
#include "takens/delay.hpp"
#include "takens/experiment.hpp"
#include "takens/fixed_points.hpp"
#include "takens/perturbed.hpp"
#include "takens/prevalence.hpp"
#include "takens/rng.hpp"
#include "takens/system.hpp"

namespace takens {

/// Difference sensitivity matrix of the pair (x_1, phi^{k-1}(x_1)): row j is
/// V_{j-1} - V_{j+k-2} with V_0 = 0, built from the extended V recursion.
inline StructuredMatrix overlap_sensitivity_matrix(const System& system, const PolyBasis& basis,
                                                   const Eigen::VectorXd& x1, int D, int k,
                                                   const Ball& bound) {
    const StructuredMatrix v = sensitivity_V_extended(system, basis, x1, D + k - 2, bound);
    StructuredMatrix out;
    out.kind = MatrixKind::compressed;
    out.entries.resize(D, v.cols());
    out.entries.row(0) = -v.entries.row(k - 2);
    for (int j = 2; j <= D; ++j) {
        out.entries.row(j - 1) = v.entries.row(j - 2) - v.entries.row(j + k - 3);
    }
    return out;
}

/// Difference sensitivity matrix of the pair (tracked fixed point, x_1).
/// The fixed-point delay coordinates all respond with the same tracking row
/// pi_1 (I - Psi)^{-1} e_1 p(Sigma_j); rows 2..D subtract the V rows of x_1.
inline StructuredMatrix fixed_point_sensitivity_matrix(const System& system,
                                                       const PolyBasis& basis,
                                                       const Eigen::VectorXd& sigma_point,
                                                       const Eigen::VectorXd& x1, int D,
                                                       const Ball& bound) {
    const StructuredMatrix v = sensitivity_V(system, basis, x1, DelayConfig{D}, bound);
    const int d = system.dim();
    const Eigen::MatrixXd shifted = Eigen::MatrixXd::Identity(d, d) - system.jacobian(sigma_point);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(shifted);
    if (!lu.isInvertible()) {
        throw std::runtime_error("fixed_point_sensitivity_matrix: unit multiplier at fixed point");
    }
    const double gain = lu.solve(Eigen::VectorXd::Unit(d, 0))[0];
    const Eigen::RowVectorXd tracking_row = gain * basis.monomials(sigma_point);
    StructuredMatrix out;
    out.kind = MatrixKind::compressed;
    out.entries.resize(D, v.cols());
    out.entries.row(0) = tracking_row;
    for (int j = 2; j <= D; ++j) {
        out.entries.row(j - 1) = tracking_row - v.entries.row(j - 2);
    }
    return out;
}

/// Difference sensitivity matrix of a separated pair: V(x_1) - V(y_1).
inline StructuredMatrix pair_sensitivity_matrix(const System& system, const PolyBasis& basis,
                                                const Eigen::VectorXd& x1,
                                                const Eigen::VectorXd& y1, int D,
                                                const Ball& bound) {
    StructuredMatrix out;
    out.kind = MatrixKind::compressed;
    out.entries = sensitivity_V(system, basis, x1, DelayConfig{D}, bound).entries -
                  sensitivity_V(system, basis, y1, DelayConfig{D}, bound).entries;
    return out;
}

struct BoundCase {
    std::string name;
    int sub_index = 0;  // overlap step k or fixed-point number j, 0 otherwise
    Eigen::Index rank = 0;
    double exponent_formula = 0.0;
    double exponent_measured = 0.0;
    double C_K = 1.0;
    double L = 0.0;
    double sigma_delta = 0.0;
    Eigen::Index cover_size = 0;
    double margin_formula = 0.0;
    double margin_measured = 0.0;
    double crossover_epsilon = 0.0;
    double log10_crossover_epsilon = 0.0;
    std::vector<double> bound_at_ladder;
};

struct BoundsReport {
    ExperimentConfig config;
    Eigen::Index D_alpha = 0;
    double L = 0.0;
    double lipschitz_L = 0.0;
    double remainder_L = 0.0;
    BoxDimEstimate cloud_dimension;
    std::vector<BoundCase> cases;
    MarginTable margins;
};

namespace detail {

inline Eigen::MatrixXd filter_rows(const Eigen::MatrixXd& cloud,
                                   const std::vector<Eigen::VectorXd>& centers,
                                   double min_distance) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
        if (away_from_all(cloud.row(i).transpose(), centers, min_distance)) keep.push_back(i);
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), cloud.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = cloud.row(keep[i]);
    }
    return out;
}

/// Per-case evaluation: cover the admissible cloud, minimize the target
/// singular value over centers and re-centering coefficients, fit the cover
/// law, and assemble the probability bound.
struct CaseEvaluator {
    const ExperimentConfig& cfg;
    const System& base;
    const PolyBasis& basis;
    const Ball& kplus;
    const std::vector<Eigen::VectorXd>& c_samples;
    double L;
    Eigen::Index D_alpha;

    BoundCase evaluate(const std::string& name, int sub_index, const Eigen::MatrixXd& cloud,
                       Eigen::Index rank, double exponent_formula, double margin_formula,
                       const std::function<StructuredMatrix(const System&, const Eigen::VectorXd&)>&
                           builder) const {
        BoundCase out;
        out.name = name;
        out.sub_index = sub_index;
        out.rank = rank;
        out.exponent_formula = exponent_formula;
        out.margin_formula = margin_formula;
        out.L = L;

        const CoverResult cover = greedy_cover(cloud, cfg.resolved_cover_epsilon());
        out.cover_size = static_cast<Eigen::Index>(cover.centers.size());

        double sigma = std::numeric_limits<double>::infinity();
        for (const auto& c : c_samples) {
            const PerturbedSystem centered(base, basis, c, cfg.a1 * (1.0 + 1e-9));
            const auto result = sigma_delta_min(
                cover, cloud,
                [&](const Eigen::VectorXd& point) { return builder(centered.system(), point); },
                rank);
            sigma = std::min(sigma, result.sigma);
        }
        out.sigma_delta = sigma;

        // Measured cover law over the configured ladder.
        const BoxDimEstimate law = box_dimension(cloud, cfg.scale_ladder);
        out.C_K = law.C_K;
        out.exponent_measured = law.dimension;
        out.margin_measured = static_cast<double>(rank) / 2.0 - law.dimension;

        const AssembledBound bound = assemble_bound(
            CoverLaw{law.C_K, exponent_formula},
            BoundInput{D_alpha, rank, sigma, L, cfg.scale_ladder.front(), cfg.a1}, true);
        out.crossover_epsilon = bound.crossover_epsilon();
        out.log10_crossover_epsilon = bound.log10_crossover_epsilon();
        for (const double eps : cfg.scale_ladder) {
            out.bound_at_ladder.push_back(bound.evaluate(eps));
        }
        return out;
    }
};

}  // namespace detail

/// Evaluates the assembled probability bounds for the injectivity and
/// immersivity case families with measured C_K, L, and sigma_delta.
inline BoundsReport run_bounds(const ExperimentConfig& cfg) {
    cfg.validate();
    BoundsReport report;
    report.config = cfg;
    const System base = builtin_system(cfg.system);
    const int d = base.dim();
    const int D = cfg.embedding_dimension;
    const PolyBasis basis(d, cfg.resolved_basis_degree());
    report.D_alpha = static_cast<Eigen::Index>(basis.size());
    report.margins = margin_table(d, D);
    const Ball kplus{cfg.k_center, cfg.resolved_kplus_radius()};
    const Eigen::MatrixXd cloud = sample_k_cloud(cfg, base);
    report.cloud_dimension = box_dimension(cloud, cfg.scale_ladder);

    FixedPointOptions fp_opt;
    fp_opt.n_seeds = cfg.fixed_point_seeds;
    const FixedPointSet fps = find_fixed_points(base, Ball{cfg.k_center, cfg.k_radius}, fp_opt);
    std::vector<Eigen::VectorXd> fp_points;
    for (const auto& fp : fps.points) fp_points.push_back(fp.point);

    // Re-centering coefficients: 0 plus samples on the sphere of radius a1.
    std::vector<Eigen::VectorXd> c_samples;
    c_samples.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size())));
    {
        RngStream rng(cfg.master_seed, "bounds-center", 0);
        for (int i = 1; i < cfg.sigma_c_samples; ++i) {
            c_samples.push_back(rng.uniform_sphere(static_cast<int>(basis.size()), cfg.a1));
        }
    }

    // Lipschitz constant of the delay map over sampled cloud points, and the
    // quadratic remainder constant along sampled directions; the assembled
    // bounds use one L for both roles.
    {
        RngStream rng(cfg.master_seed, "bounds-L", 0);
        std::vector<Eigen::VectorXd> inputs, outputs;
        const int n_lip = std::min<int>(200, static_cast<int>(cloud.rows()));
        for (int i = 0; i < n_lip; ++i) {
            const Eigen::VectorXd x = cloud.row(i % cloud.rows()).transpose();
            try {
                outputs.push_back(delay_map(base, x, DelayConfig{D}, kplus));
                inputs.push_back(x);
            } catch (const std::exception&) {
              // escaped sample: skip
            }
        }
        report.lipschitz_L = lipschitz_estimate(inputs, outputs);

        std::vector<Eigen::VectorXd> cs, rems;
        for (int i = 0; i < 10; ++i) {
            const Eigen::VectorXd x =
                cloud.row(static_cast<Eigen::Index>(rng.uniform_index(
                              static_cast<std::uint64_t>(cloud.rows()))))
                    .transpose();
            const Eigen::VectorXd dir = rng.uniform_sphere(static_cast<int>(basis.size()));
            Eigen::VectorXd f0, linear;
            try {
                f0 = delay_map(base, x, DelayConfig{D}, kplus);
                const StructuredMatrix v = sensitivity_V(base, basis, x, DelayConfig{D}, kplus);
                linear = Eigen::VectorXd::Zero(D);
                linear.tail(D - 1) = v.entries * dir;
            } catch (const std::exception&) {
                continue;
            }
            for (const double scale : {1.0, 0.5, 0.25}) {
                const double t = cfg.a1 * scale;
                try {
                    const PerturbedSystem perturbed(base, basis, t * dir, cfg.a1 * (1.0 + 1e-9));
                    const Eigen::VectorXd ft = delay_map(perturbed.system(), x, DelayConfig{D},
                                                         kplus);
                    cs.push_back(t * dir);
                    rems.push_back(ft - f0 - t * linear);
                } catch (const std::exception&) {
                  // escaped sample: skip
                }
            }
        }
        report.remainder_L =
            cs.empty() ? 0.0 : quadratic_remainder_constant(cs, rems);
        report.L = std::max(report.lipschitz_L, report.remainder_L);
    }

    const detail::CaseEvaluator eval{cfg,   base,       basis,         kplus,
                                     c_samples, report.L, report.D_alpha};

    // Fixed-point-to-point sets, one per fixed point.
    const Eigen::MatrixXd k1_cloud = detail::filter_rows(cloud, fp_points, 2.0 * cfg.delta);
    if (k1_cloud.rows() > 0) {
        for (std::size_t j = 0; j < fp_points.size(); ++j) {
            const Eigen::VectorXd sigma_point = fp_points[j];
            report.cases.push_back(eval.evaluate(
                "fixed_point", static_cast<int>(j + 1), k1_cloud, D - 1,
                static_cast<double>(d), report.margins.fixed_point_nonlinear,
                [&, sigma_point](const System& sys, const Eigen::VectorXd& x) {
                    return fixed_point_sensitivity_matrix(sys, basis, sigma_point, x, D, kplus);
                }));
        }

        // Orbit-overlap sets for every step k = 2..D.
        for (int k = 2; k <= D; ++k) {
            report.cases.push_back(eval.evaluate(
                "overlap", k, k1_cloud, D, static_cast<double>(d),
                report.margins.overlap_nonlinear,
                [&, k](const System& sys, const Eigen::VectorXd& x) {
                    return overlap_sensitivity_matrix(sys, basis, x, D, k, kplus);
                }));
        }
    }

    // Separated-pair set in the product space.
    {
        RngStream rng(cfg.master_seed, "bounds-pairs", 0);
        Eigen::MatrixXd pair_cloud(cfg.pair_cloud_size, 2 * d);
        Eigen::Index kept = 0;
        long long attempts = 0;
        while (kept < cfg.pair_cloud_size && attempts < 200LL * cfg.pair_cloud_size) {
            ++attempts;
            const Eigen::VectorXd x =
                cloud.row(static_cast<Eigen::Index>(rng.uniform_index(
                              static_cast<std::uint64_t>(cloud.rows()))))
                    .transpose();
            const Eigen::VectorXd y =
                cloud.row(static_cast<Eigen::Index>(rng.uniform_index(
                              static_cast<std::uint64_t>(cloud.rows()))))
                    .transpose();
            if ((x - y).norm() < cfg.delta) continue;
            if (!detail::away_from_all(x, fp_points, 2.0 * cfg.delta)) continue;
            if (!detail::away_from_all(y, fp_points, 2.0 * cfg.delta)) continue;
            bool admissible = true;
            try {
                const auto ox = iterate(base, x, D, kplus);
                const auto oy = iterate(base, y, D, kplus);
                for (int k = 2; k <= D && admissible; ++k) {
                    admissible =
                        (x - oy[static_cast<std::size_t>(k - 1)]).norm() >= cfg.delta &&
                        (y - ox[static_cast<std::size_t>(k - 1)]).norm() >= cfg.delta;
                }
            } catch (const std::exception&) {
                continue;
            }
            if (!admissible) continue;
            pair_cloud.row(kept).head(d) = x.transpose();
            pair_cloud.row(kept).tail(d) = y.transpose();
            ++kept;
        }
        if (kept > 8) {
            pair_cloud.conservativeResize(kept, Eigen::NoChange);
            report.cases.push_back(eval.evaluate(
                "pair", 0, pair_cloud, D - 1, 2.0 * d, report.margins.pairs_nonlinear,
                [&](const System& sys, const Eigen::VectorXd& xy) {
                    return pair_sensitivity_matrix(sys, basis, xy.head(d), xy.tail(d), D, kplus);
                }));
        }
    }

    // Immersivity set: unit tangent pairs (x, v).
    if (k1_cloud.rows() > 0) {
        RngStream rng(cfg.master_seed, "bounds-tangent", 0);
        const Eigen::Index n_xv = std::min<Eigen::Index>(k1_cloud.rows(), cfg.pair_cloud_size);
        Eigen::MatrixXd xv_cloud(n_xv, 2 * d);
        for (Eigen::Index i = 0; i < n_xv; ++i) {
            xv_cloud.row(i).head(d) = k1_cloud.row(i);
            xv_cloud.row(i).tail(d) = rng.uniform_sphere(d).transpose();
        }
        report.cases.push_back(eval.evaluate(
            "tangent", 0, xv_cloud, D - 1, 2.0 * d - 1.0, report.margins.tangent_nonlinear,
            [&](const System& sys, const Eigen::VectorXd& xv) {
                return sensitivity_H(sys, basis, xv.head(d), xv.tail(d).normalized(),
                                     DelayConfig{D}, kplus);
            }));
    }

    return report;
}

/// Exact threshold checks of the epsilon-exponent margins: each bound family
/// must turn positive exactly at its embedding-dimension threshold.
struct MarginThresholdCheck {
    int d = 0;
    bool pairs_linear_ok = false;      // D = 2d + 1
    bool overlap_ok = false;           // D = 2d + 1
    bool fixed_point_ok = false;       // D = 2d + 2
    bool tangent_ok = false;           // D = 4d
    bool pairs_nonlinear_ok = false;   // D = 4d + 2

    bool all_ok() const {
        return pairs_linear_ok && overlap_ok && fixed_point_ok && tangent_ok &&
               pairs_nonlinear_ok;
    }
};

inline MarginThresholdCheck check_margin_thresholds(int d) {
    MarginThresholdCheck check;
    check.d = d;
    const auto at = [d](int D) { return margin_table(d, D); };
    check.pairs_linear_ok =
        at(2 * d + 1).pairs_linear > 0.0 && at(2 * d).pairs_linear <= 0.0;
    check.overlap_ok =
        at(2 * d + 1).overlap_nonlinear > 0.0 && at(2 * d).overlap_nonlinear <= 0.0;
    check.fixed_point_ok = at(2 * d + 2).fixed_point_nonlinear > 0.0 &&
                           at(2 * d + 1).fixed_point_nonlinear <= 0.0;
    check.tangent_ok = at(4 * d).tangent_nonlinear > 0.0 &&
                       at(4 * d - 1).tangent_nonlinear <= 0.0;
    check.pairs_nonlinear_ok = at(4 * d + 2).pairs_nonlinear > 0.0 &&
                               at(4 * d + 1).pairs_nonlinear <= 0.0;
    return check;
}

}  // namespace takens
