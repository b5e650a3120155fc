#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "takens/classify.hpp"
#include "takens/config.hpp"
#include "takens/delay.hpp"
#include "takens/fixed_points.hpp"
#include "takens/parallel.hpp"
#include "takens/perturbed.hpp"
#include "takens/prevalence.hpp"
#include "takens/rng.hpp"
#include "takens/system.hpp"
#include "takens/util.hpp"

namespace takens {

/// Sample cloud for the working region K: a strided attractor orbit for the
/// named chaotic systems, uniform ball samples for the synthetic ones.
inline Eigen::MatrixXd sample_k_cloud(const ExperimentConfig& cfg, const System& system) {
    const int d = system.dim();
    if (cfg.k_center.size() != d) {
        throw std::invalid_argument("config: k_center dimension does not match the system");
    }
    const Ball region{cfg.k_center, cfg.k_radius};
    Eigen::MatrixXd cloud(cfg.cloud_size, d);
    const bool attractor = (cfg.system == "henon" || cfg.system == "ikeda");
    if (attractor) {
        Eigen::VectorXd x = cfg.k_center + Eigen::VectorXd::Constant(d, 0.1);
        for (int k = 0; k < cfg.attractor_burn_in; ++k) {
            x = system.map(x);
            if (!x.allFinite()) throw std::runtime_error("sample_k_cloud: orbit diverged");
        }
        int kept = 0;
        long long steps = 0;
        const long long budget =
            static_cast<long long>(cfg.cloud_size) * cfg.attractor_stride * 100 + 100000;
        while (kept < cfg.cloud_size) {
            for (int s = 0; s < cfg.attractor_stride; ++s) x = system.map(x);
            steps += cfg.attractor_stride;
            if (!x.allFinite() || steps > budget) {
                throw std::runtime_error("sample_k_cloud: attractor orbit does not fill K");
            }
            if (region.contains(x)) cloud.row(kept++) = x.transpose();
        }
    } else {
        RngStream rng(cfg.master_seed, "cloud", 0);
        for (int i = 0; i < cfg.cloud_size; ++i) {
            cloud.row(i) = (cfg.k_center + rng.uniform_ball(d, cfg.k_radius)).transpose();
        }
    }
    return cloud;
}

/// Largest radius in {1e-2, 1e-3, 1e-4} for which 1000 sampled orbits of
/// length D stay inside K+ under 50 coefficient draws on the sphere.
inline double auto_select_a0(const ExperimentConfig& cfg, const System& system,
                             const PolyBasis& basis, const Eigen::MatrixXd& cloud) {
    const Ball kplus{cfg.k_center, cfg.resolved_kplus_radius()};
    const int D = cfg.embedding_dimension;
    const int n_orbits = std::min<int>(1000, static_cast<int>(cloud.rows()));
    for (const double a : {1e-2, 1e-3, 1e-4}) {
        bool ok = true;
        for (int t = 0; t < 50 && ok; ++t) {
            RngStream rng(cfg.master_seed, "a0-coeff", static_cast<std::uint64_t>(t));
            const Eigen::VectorXd c = rng.uniform_sphere(static_cast<int>(basis.size()), a);
            const PerturbedSystem perturbed(system, basis, c, a * (1.0 + 1e-9));
            for (int p = 0; p < n_orbits && ok; ++p) {
                const Eigen::VectorXd x =
                    cloud.row((static_cast<Eigen::Index>(p) * 97) % cloud.rows()).transpose();
                try {
                    (void)iterate(perturbed.system(), x, D, kplus);
                } catch (const std::exception&) {
                    ok = false;
                }
            }
        }
        if (ok) return a;
    }
    throw std::runtime_error("auto_select_a0: orbits escape K+ even at radius 1e-4");
}

/// The epsilon-exponent margins of the assembled bounds for given d and D.
/// A positive margin means the corresponding probability bound vanishes as
/// the cover scale shrinks.
struct MarginTable {
    int d = 0;
    int D = 0;
    double pairs_linear = 0.0;      // observation-perturbation pairs: D - 2d
    double overlap_nonlinear = 0.0; // orbit-overlap sets: D/2 - d
    double fixed_point_nonlinear = 0.0;  // fixed-point-to-point sets: (D-1)/2 - d
    double pairs_nonlinear = 0.0;   // map-perturbation pairs: (D-1)/2 - 2d
    double tangent_nonlinear = 0.0; // immersivity sets: (D-1)/2 - (2d-1)
};

inline MarginTable margin_table(int d, int D) {
    MarginTable t;
    t.d = d;
    t.D = D;
    t.pairs_linear = static_cast<double>(D) - 2.0 * d;
    t.overlap_nonlinear = D / 2.0 - d;
    t.fixed_point_nonlinear = (D - 1) / 2.0 - d;
    t.pairs_nonlinear = (D - 1) / 2.0 - 2.0 * d;
    t.tangent_nonlinear = (D - 1) / 2.0 - (2.0 * d - 1.0);
    return t;
}

enum class PairKind { generic, overlap, fixed_point };

inline const char* to_string(PairKind k) {
    switch (k) {
        case PairKind::generic: return "generic";
        case PairKind::overlap: return "overlap";
        case PairKind::fixed_point: return "fixed_point";
    }
    return "?";
}

struct PairSample {
    PairKind kind = PairKind::generic;
    int index = 0;  // overlap step k, or fixed point number j
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    double g_norm = 0.0;
};

struct DrawResult {
    int draw = 0;
    double c_norm = 0.0;
    int pairs_generic = 0;
    int pairs_overlap = 0;
    int pairs_fixed = 0;
    int audit_violations = 0;
    int escapes = 0;
    bool sampling_exhausted = false;
    double min_g = std::numeric_limits<double>::infinity();
    PairKind min_g_kind = PairKind::generic;
    int min_g_index = 0;
    Eigen::VectorXd witness_x;
    Eigen::VectorXd witness_y;
    double min_sigma = std::numeric_limits<double>::infinity();
    Eigen::VectorXd witness_point;
    bool injective = false;
    bool immersive = false;
    bool tracking_ok = true;
    double max_tracking_shift = 0.0;
};

struct EmbedVerifyResult {
    ExperimentConfig config;
    double a0 = 0.0;
    FixedPointSet fixed_points;
    std::vector<DrawResult> draws;
    int injective_passes = 0;   // over random draws (the zero control excluded)
    int immersive_passes = 0;
    int random_draws = 0;
    bool control_failed_immersivity = false;  // meaningful with the zero control
    MarginTable margins;
    std::string report_csv;

    bool suite_passed() const {
        for (const auto& d : draws) {
            if (d.audit_violations > 0 || d.sampling_exhausted) return false;
        }
        if (random_draws > 0) {
            const int need = (random_draws * 99 + 99) / 100;
            if (injective_passes < need || immersive_passes < need) return false;
        }
        if (config.include_zero_control && !control_failed_immersivity) return false;
        return true;
    }
};

namespace detail {

inline constexpr double kInjectivityFloor = 1e-12;
inline constexpr double kImmersivityFloor = 1e-10;

inline bool away_from_all(const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& points,
                          double minimum) {
    for (const auto& p : points) {
        if ((x - p).norm() < minimum) return false;
    }
    return true;
}

struct DrawContext {
    const ExperimentConfig* cfg;
    const System* base;
    const PolyBasis* basis;
    const Eigen::MatrixXd* cloud;
    const FixedPointSet* fixed_points;
    double a0;
    Ball kplus;
};

/// One Monte Carlo draw: perturb, track fixed points, sample the audited pair
/// classes and the immersivity points, and reduce to the two minima.
inline DrawResult run_draw(const DrawContext& ctx, int draw) {
    const ExperimentConfig& cfg = *ctx.cfg;
    const int D = cfg.embedding_dimension;
    const int d = ctx.base->dim();
    const double delta = cfg.delta;
    DrawResult result;
    result.draw = draw;

    RngStream coeff_stream(cfg.master_seed, "coeff", static_cast<std::uint64_t>(draw));
    Eigen::VectorXd c;
    if (cfg.include_zero_control && draw == 0) {
        c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ctx.basis->size()));
    } else {
        c = coeff_stream.uniform_ball(static_cast<int>(ctx.basis->size()), ctx.a0);
    }
    result.c_norm = c.norm();
    const PerturbedSystem perturbed(*ctx.base, *ctx.basis, c, ctx.a0 * (1.0 + 1e-9));
    const System& sys = perturbed.system();

    // Track the fixed points under the perturbation.
    std::vector<Eigen::VectorXd> tracked;
    for (const auto& fp : ctx.fixed_points->points) {
        try {
            const Eigen::VectorXd moved = refine_fixed_point(sys, fp.point);
            result.max_tracking_shift =
                std::max(result.max_tracking_shift, (moved - fp.point).norm());
            tracked.push_back(moved);
        } catch (const std::exception&) {
            result.tracking_ok = false;
            tracked.push_back(fp.point);
        }
    }
    if (result.max_tracking_shift >= delta) result.tracking_ok = false;

    const Eigen::MatrixXd& cloud = *ctx.cloud;
    const auto pick = [&](RngStream& rng) {
        return cloud.row(static_cast<Eigen::Index>(rng.uniform_index(
                             static_cast<std::uint64_t>(cloud.rows()))))
            .transpose()
            .eval();
    };

    std::vector<PairSample> pairs;
    pairs.reserve(static_cast<std::size_t>(cfg.n_pairs));
    const int n_planted = static_cast<int>(std::lround(cfg.n_pairs * cfg.pair_overlap_fraction));
    const int n_fixed = tracked.empty() ? 0 : std::max(1, n_planted / 5);
    const int n_overlap = n_planted - n_fixed;
    const int n_generic = cfg.n_pairs - n_planted;
    const long long attempt_budget = 200LL * cfg.n_pairs + 10000;
    long long attempts = 0;

    RngStream pair_stream(cfg.master_seed, "pairs", static_cast<std::uint64_t>(draw));

    // Separated generic pairs: the four admissibility conditions.
    while (result.pairs_generic < n_generic) {
        if (++attempts > attempt_budget) {
            result.sampling_exhausted = true;
            break;
        }
        const Eigen::VectorXd x = pick(pair_stream);
        const Eigen::VectorXd y = pick(pair_stream);
        if ((x - y).norm() < delta) continue;
        if (!away_from_all(x, tracked, 3.0 * delta)) continue;
        if (!away_from_all(y, tracked, 3.0 * delta)) continue;
        std::vector<Eigen::VectorXd> ox, oy;
        try {
            ox = iterate(sys, x, D, ctx.kplus);
            oy = iterate(sys, y, D, ctx.kplus);
        } catch (const std::exception&) {
            ++result.escapes;
            continue;
        }
        bool admissible = true;
        for (int k = 2; k <= D && admissible; ++k) {
            admissible = (x - oy[static_cast<std::size_t>(k - 1)]).norm() >= 2.0 * delta &&
                         (y - ox[static_cast<std::size_t>(k - 1)]).norm() >= 2.0 * delta;
        }
        if (!admissible) continue;
        double g2 = 0.0;
        for (int j = 0; j < D; ++j) {
            const double diff =
                ox[static_cast<std::size_t>(j)][0] - oy[static_cast<std::size_t>(j)][0];
            g2 += diff * diff;
        }
        pairs.push_back({PairKind::generic, 0, x, y, std::sqrt(g2)});
        ++result.pairs_generic;
    }

    // Planted orbit-overlap pairs: y_1 = phi_c^{k-1}(x_1), k = 2..D.
    int overlap_k = 2;
    while (!result.sampling_exhausted && result.pairs_overlap < n_overlap) {
        if (++attempts > attempt_budget) {
            result.sampling_exhausted = true;
            break;
        }
        const Eigen::VectorXd x = pick(pair_stream);
        if (!away_from_all(x, tracked, 3.0 * delta)) continue;
        std::vector<Eigen::VectorXd> orbit;
        try {
            orbit = iterate(sys, x, D + overlap_k - 1, ctx.kplus);
        } catch (const std::exception&) {
            ++result.escapes;
            continue;
        }
        const Eigen::VectorXd y = orbit[static_cast<std::size_t>(overlap_k - 1)];
        if ((x - y).norm() <= 1e-9) continue;  // landed on a short periodic orbit
        double g2 = 0.0;
        for (int j = 0; j < D; ++j) {
            const double diff = orbit[static_cast<std::size_t>(j)][0] -
                                orbit[static_cast<std::size_t>(j + overlap_k - 1)][0];
            g2 += diff * diff;
        }
        pairs.push_back({PairKind::overlap, overlap_k, x, y, std::sqrt(g2)});
        ++result.pairs_overlap;
        overlap_k = (overlap_k == D) ? 2 : overlap_k + 1;
    }

    // Fixed-point-to-point pairs.
    int fp_index = 0;
    while (!result.sampling_exhausted && result.pairs_fixed < n_fixed && !tracked.empty()) {
        if (++attempts > attempt_budget) {
            result.sampling_exhausted = true;
            break;
        }
        const Eigen::VectorXd& xi = tracked[static_cast<std::size_t>(fp_index)];
        const Eigen::VectorXd x = pick(pair_stream);
        if (!away_from_all(x, tracked, 3.0 * delta)) continue;
        Eigen::VectorXd g;
        try {
            g = delay_difference(sys, xi, x, DelayConfig{D}, ctx.kplus);
        } catch (const std::exception&) {
            ++result.escapes;
            continue;
        }
        pairs.push_back({PairKind::fixed_point, fp_index + 1, xi, x, g.norm()});
        ++result.pairs_fixed;
        fp_index = (fp_index + 1) % static_cast<int>(tracked.size());
    }

    // Reduce to the minimum with its witness.
    for (const auto& p : pairs) {
        if (p.g_norm < result.min_g) {
            result.min_g = p.g_norm;
            result.min_g_kind = p.kind;
            result.min_g_index = p.index;
            result.witness_x = p.x;
            result.witness_y = p.y;
        }
    }

    // Audit pass: every recorded pair must satisfy its admissibility
    // conditions when re-checked from scratch.
    for (const auto& p : pairs) {
        bool ok = true;
        if (p.kind == PairKind::generic) {
            ok = (p.x - p.y).norm() >= delta && away_from_all(p.x, tracked, 3.0 * delta) &&
                 away_from_all(p.y, tracked, 3.0 * delta);
            if (ok) {
                const auto ox = iterate(sys, p.x, D, ctx.kplus);
                const auto oy = iterate(sys, p.y, D, ctx.kplus);
                for (int k = 2; k <= D && ok; ++k) {
                    ok = (p.x - oy[static_cast<std::size_t>(k - 1)]).norm() >= 2.0 * delta &&
                         (p.y - ox[static_cast<std::size_t>(k - 1)]).norm() >= 2.0 * delta;
                }
            }
        } else if (p.kind == PairKind::overlap) {
            ok = away_from_all(p.x, tracked, 3.0 * delta);
            if (ok) {
                Eigen::VectorXd z = p.x;
                for (int k = 1; k < p.index; ++k) z = sys.map(z);
                ok = (z - p.y).norm() <= 1e-12;
            }
        } else {
            ok = away_from_all(p.y, tracked, 3.0 * delta) &&
                 (sys.map(p.x) - p.x).norm() <= 1e-8;
        }
        if (!ok) ++result.audit_violations;
    }

    // Immersivity: the smallest d-th singular value of the delay Jacobian
    // over points off the fixed points.
    RngStream point_stream(cfg.master_seed, "points", static_cast<std::uint64_t>(draw));
    int points_done = 0;
    long long point_attempts = 0;
    while (points_done < cfg.n_points) {
        if (++point_attempts > attempt_budget) {
            result.sampling_exhausted = true;
            break;
        }
        const Eigen::VectorXd x = pick(point_stream);
        if (!away_from_all(x, tracked, 3.0 * delta)) continue;
        Eigen::MatrixXd jac;
        try {
            jac = delay_jacobian(sys, x, DelayConfig{D}, ctx.kplus);
        } catch (const std::exception&) {
            ++result.escapes;
            continue;
        }
        const double sigma = singular_value(jac, d);
        if (sigma < result.min_sigma) {
            result.min_sigma = sigma;
            result.witness_point = x;
        }
        ++points_done;
    }

    result.injective = !result.sampling_exhausted && result.min_g > kInjectivityFloor;
    result.immersive = !result.sampling_exhausted && result.min_sigma > kImmersivityFloor;
    return result;
}

inline std::string vector_to_string(const Eigen::VectorXd& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += " ";
        s += format_double(v[i]);
    }
    return s;
}

}  // namespace detail

/// Recomputes the pair separation of a recorded witness under the draw's
/// coefficients; used to validate that reported minima are reproducible.
inline double reevaluate_pair_witness(const ExperimentConfig& cfg, const System& base,
                                      const PolyBasis& basis, double a0, int draw,
                                      const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    RngStream coeff_stream(cfg.master_seed, "coeff", static_cast<std::uint64_t>(draw));
    Eigen::VectorXd c;
    if (cfg.include_zero_control && draw == 0) {
        c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    } else {
        c = coeff_stream.uniform_ball(static_cast<int>(basis.size()), a0);
    }
    const PerturbedSystem perturbed(base, basis, c, a0 * (1.0 + 1e-9));
    const Ball kplus{cfg.k_center, cfg.resolved_kplus_radius()};
    return delay_difference(perturbed.system(), x, y, DelayConfig{cfg.embedding_dimension}, kplus)
        .norm();
}

/// Recomputes the delay-Jacobian singular value at a recorded immersivity
/// witness under the draw's coefficients.
inline double reevaluate_point_witness(const ExperimentConfig& cfg, const System& base,
                                       const PolyBasis& basis, double a0, int draw,
                                       const Eigen::VectorXd& point) {
    RngStream coeff_stream(cfg.master_seed, "coeff", static_cast<std::uint64_t>(draw));
    Eigen::VectorXd c;
    if (cfg.include_zero_control && draw == 0) {
        c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    } else {
        c = coeff_stream.uniform_ball(static_cast<int>(basis.size()), a0);
    }
    const PerturbedSystem perturbed(base, basis, c, a0 * (1.0 + 1e-9));
    const Ball kplus{cfg.k_center, cfg.resolved_kplus_radius()};
    const Eigen::MatrixXd jac =
        delay_jacobian(perturbed.system(), point, DelayConfig{cfg.embedding_dimension}, kplus);
    return singular_value(jac, base.dim());
}

inline EmbedVerifyResult run_embed_verify(const ExperimentConfig& cfg) {
    cfg.validate();
    EmbedVerifyResult result;
    result.config = cfg;
    const System base = builtin_system(cfg.system);
    const int d = base.dim();
    const PolyBasis basis(d, cfg.resolved_basis_degree());
    const Eigen::MatrixXd cloud = sample_k_cloud(cfg, base);

    FixedPointOptions fp_opt;
    fp_opt.n_seeds = cfg.fixed_point_seeds;
    result.fixed_points = find_fixed_points(base, Ball{cfg.k_center, cfg.k_radius}, fp_opt);
    if (result.fixed_points.points.size() >= 2 &&
        !(cfg.delta < result.fixed_points.min_separation / 3.0)) {
        throw std::invalid_argument("config: delta must be below a third of the fixed-point gap");
    }

    result.a0 = cfg.a0 > 0.0 ? cfg.a0 : auto_select_a0(cfg, base, basis, cloud);
    result.margins = margin_table(d, cfg.embedding_dimension);

    detail::DrawContext ctx{&cfg,
                            &base,
                            &basis,
                            &cloud,
                            &result.fixed_points,
                            result.a0,
                            Ball{cfg.k_center, cfg.resolved_kplus_radius()}};
    result.draws.resize(static_cast<std::size_t>(cfg.n_coeff_draws));
    parallel_for(static_cast<std::size_t>(cfg.n_coeff_draws), cfg.threads,
                 [&](std::size_t i) {
                     result.draws[i] = detail::run_draw(ctx, static_cast<int>(i));
                 });

    for (const auto& dr : result.draws) {
        const bool control = cfg.include_zero_control && dr.draw == 0;
        if (control) {
            result.control_failed_immersivity = !dr.immersive;
            continue;
        }
        ++result.random_draws;
        if (dr.injective) ++result.injective_passes;
        if (dr.immersive) ++result.immersive_passes;
    }

    // Deterministic report: one row per draw, no timing columns.
    std::string csv;
    csv += "# takens embed-verify report schema_version=" + std::to_string(kSchemaVersion) + "\n";
    csv += "draw,seed,c_norm,pairs_generic,pairs_overlap,pairs_fixed,audit_violations,escapes,"
           "min_G,min_G_kind,min_sigma,injective,immersive,tracking_ok,witness_pair,"
           "witness_point\n";
    for (const auto& dr : result.draws) {
        std::string kind = to_string(dr.min_g_kind);
        if (dr.min_g_kind != PairKind::generic) {
            kind += "_" + std::to_string(dr.min_g_index);
        }
        csv += std::to_string(dr.draw) + "," + std::to_string(cfg.master_seed) + "," +
               format_double(dr.c_norm) + "," +
               std::to_string(dr.pairs_generic) + "," + std::to_string(dr.pairs_overlap) + "," +
               std::to_string(dr.pairs_fixed) + "," + std::to_string(dr.audit_violations) + "," +
               std::to_string(dr.escapes) + "," + format_double(dr.min_g) + "," + kind + "," +
               format_double(dr.min_sigma) + "," + (dr.injective ? "1" : "0") + "," +
               (dr.immersive ? "1" : "0") + "," + (dr.tracking_ok ? "1" : "0") + ",\"" +
               detail::vector_to_string(dr.witness_x) + "|" +
               detail::vector_to_string(dr.witness_y) + "\",\"" +
               detail::vector_to_string(dr.witness_point) + "\"\n";
    }
    result.report_csv = csv;
    return result;
}

}  // namespace takens
