#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "takens/bounds.hpp"
#include "takens/config.hpp"
#include "takens/experiment.hpp"
#include "takens/fixed_points.hpp"
#include "takens/ranksuite.hpp"

namespace takens {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

inline std::string output_path(const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline ordered_json json_vector(const Eigen::VectorXd& v) {
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline double elapsed_ms(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace detail

/// rank-suite: every rank-lemma check; the report file depends only on the
/// master seed.
inline int cmd_rank_suite(const ExperimentConfig& cfg, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const RankSuiteReport report = run_rank_suite(cfg);
    detail::write_text_file(detail::output_path(cfg, "rank_suite.txt"), report.text);
    log << report.text;
    log << "rank-suite: " << (report.checks - report.failures) << "/" << report.checks
        << " checks passed in " << detail::elapsed_ms(start) << " ms\n";
    return report.failures == 0 ? 0 : 1;
}

inline ordered_json embed_verify_summary(const EmbedVerifyResult& result, double runtime_ms) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "embed-verify";
    j["config"] = result.config.echo();
    j["a0"] = result.a0;
    j["fixed_points"] = ordered_json::array();
    for (const auto& fp : result.fixed_points.points) {
        ordered_json e;
        e["point"] = detail::json_vector(fp.point);
        ordered_json mults = ordered_json::array();
        for (Eigen::Index i = 0; i < fp.multipliers.size(); ++i) {
            mults.push_back({fp.multipliers[i].real(), fp.multipliers[i].imag()});
        }
        e["multipliers"] = mults;
        e["hyperbolic"] = fp.hyperbolic;
        j["fixed_points"].push_back(e);
    }
    j["fixed_point_min_separation"] = result.fixed_points.min_separation;
    j["margins"] = {{"pairs_linear", result.margins.pairs_linear},
                    {"overlap_nonlinear", result.margins.overlap_nonlinear},
                    {"fixed_point_nonlinear", result.margins.fixed_point_nonlinear},
                    {"pairs_nonlinear", result.margins.pairs_nonlinear},
                    {"tangent_nonlinear", result.margins.tangent_nonlinear}};
    j["random_draws"] = result.random_draws;
    j["injective_passes"] = result.injective_passes;
    j["immersive_passes"] = result.immersive_passes;
    if (result.random_draws > 0) {
        const auto wi = wilson_interval(
            static_cast<std::uint64_t>(result.random_draws - result.injective_passes),
            static_cast<std::uint64_t>(result.random_draws));
        j["injectivity_failure_rate_wilson95"] = {wi.lower, wi.upper};
        const auto wm = wilson_interval(
            static_cast<std::uint64_t>(result.random_draws - result.immersive_passes),
            static_cast<std::uint64_t>(result.random_draws));
        j["immersivity_failure_rate_wilson95"] = {wm.lower, wm.upper};
    }
    if (result.config.include_zero_control) {
        j["control_failed_immersivity"] = result.control_failed_immersivity;
    }
    double global_min_g = std::numeric_limits<double>::infinity();
    double global_min_sigma = std::numeric_limits<double>::infinity();
    int arg_g = -1, arg_sigma = -1;
    for (const auto& d : result.draws) {
        if (d.min_g < global_min_g) {
            global_min_g = d.min_g;
            arg_g = d.draw;
        }
        if (d.min_sigma < global_min_sigma) {
            global_min_sigma = d.min_sigma;
            arg_sigma = d.draw;
        }
    }
    j["global_min_G"] = global_min_g;
    j["global_min_G_draw"] = arg_g;
    j["global_min_sigma"] = global_min_sigma;
    j["global_min_sigma_draw"] = arg_sigma;
    if (arg_g >= 0) {
        const auto& d = result.draws[static_cast<std::size_t>(arg_g)];
        j["global_min_G_witness"] = {{"x", detail::json_vector(d.witness_x)},
                                     {"y", detail::json_vector(d.witness_y)},
                                     {"kind", to_string(d.min_g_kind)},
                                     {"index", d.min_g_index}};
    }
    j["suite_passed"] = result.suite_passed();
    j["runtime_ms"] = runtime_ms;
    return j;
}

/// embed-verify: the Monte Carlo injectivity/immersivity experiment.
inline int cmd_embed_verify(const ExperimentConfig& cfg, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const EmbedVerifyResult result = run_embed_verify(cfg);
    detail::write_text_file(detail::output_path(cfg, "report.csv"), result.report_csv);
    const ordered_json summary = embed_verify_summary(result, detail::elapsed_ms(start));
    detail::write_text_file(detail::output_path(cfg, "summary.json"), summary.dump(2) + "\n");
    log << "embed-verify: a0=" << format_double(result.a0) << ", draws=" << cfg.n_coeff_draws
        << ", injective " << result.injective_passes << "/" << result.random_draws
        << ", immersive " << result.immersive_passes << "/" << result.random_draws << "\n";
    if (cfg.include_zero_control) {
        log << "embed-verify: zero-coefficient control "
            << (result.control_failed_immersivity ? "failed immersivity as expected"
                                                  : "UNEXPECTEDLY passed immersivity")
            << "\n";
    }
    log << "embed-verify: report " << detail::output_path(cfg, "report.csv") << " ("
        << detail::elapsed_ms(start) << " ms)\n";
    return result.suite_passed() ? 0 : 1;
}

/// sweep: embed-verify across embedding dimensions next to the bound margins.
inline int cmd_sweep(const ExperimentConfig& cfg, std::vector<int> d_list, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const System base = builtin_system(cfg.system);
    const int d = base.dim();
    if (d_list.empty()) {
        for (int D = 2 * d + 1; D <= 4 * d + 2; ++D) d_list.push_back(D);
    }
    std::string csv;
    csv += "# takens sweep report schema_version=" + std::to_string(kSchemaVersion) + "\n";
    csv += "D,margin_pairs_linear,margin_overlap,margin_fixed_point,margin_pairs_nonlinear,"
           "margin_tangent,injective_failures,immersive_failures,escapes,audit_violations\n";
    bool all_passed = true;
    log << "  D  pairs_lin  overlap  fixed_pt  pairs_nl  tangent  inj_fail  imm_fail\n";
    for (const int D : d_list) {
        ExperimentConfig step = cfg;
        step.embedding_dimension = D;
        step.basis_degree = 0;  // track 2D - 1
        const EmbedVerifyResult result = run_embed_verify(step);
        all_passed = all_passed && result.suite_passed();
        const MarginTable m = result.margins;
        int escapes = 0, audits = 0;
        for (const auto& dr : result.draws) {
            escapes += dr.escapes;
            audits += dr.audit_violations;
        }
        const int inj_fail = result.random_draws - result.injective_passes;
        const int imm_fail = result.random_draws - result.immersive_passes;
        csv += std::to_string(D) + "," + format_double(m.pairs_linear) + "," +
               format_double(m.overlap_nonlinear) + "," +
               format_double(m.fixed_point_nonlinear) + "," +
               format_double(m.pairs_nonlinear) + "," + format_double(m.tangent_nonlinear) +
               "," + std::to_string(inj_fail) + "," + std::to_string(imm_fail) + "," +
               std::to_string(escapes) + "," + std::to_string(audits) + "\n";
        char row[160];
        std::snprintf(row, sizeof(row), "%3d  %9.1f  %7.1f  %8.1f  %8.1f  %7.1f  %8d  %8d\n", D,
                      m.pairs_linear, m.overlap_nonlinear, m.fixed_point_nonlinear,
                      m.pairs_nonlinear, m.tangent_nonlinear, inj_fail, imm_fail);
        log << row;
    }
    detail::write_text_file(detail::output_path(cfg, "sweep.csv"), csv);
    log << "sweep: wrote " << detail::output_path(cfg, "sweep.csv") << " ("
        << detail::elapsed_ms(start) << " ms)\n";
    return all_passed ? 0 : 1;
}

/// bounds: assembled probability bounds with measured constants, plus the
/// exact margin-threshold table.
inline int cmd_bounds(const ExperimentConfig& cfg, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const BoundsReport report = run_bounds(cfg);

    std::string csv;
    csv += "# takens bounds report schema_version=" + std::to_string(kSchemaVersion) +
           " D_alpha=" + std::to_string(report.D_alpha) +
           " lipschitz_safety_factor=" + format_double(kLipschitzSafetyFactor) + " a1=" +
           format_double(cfg.a1) + "\n";
    csv += "case,sub_index,rank,exponent_formula,exponent_measured,C_K,L,sigma_delta,cover_size,"
           "margin_formula,margin_measured,crossover_epsilon,log10_crossover_epsilon";
    for (const double eps : cfg.scale_ladder) csv += ",bound_at_" + format_double(eps);
    csv += "\n";
    for (const auto& c : report.cases) {
        csv += c.name + "," + std::to_string(c.sub_index) + "," + std::to_string(c.rank) + "," +
               format_double(c.exponent_formula) + "," + format_double(c.exponent_measured) +
               "," + format_double(c.C_K) + "," + format_double(c.L) + "," +
               format_double(c.sigma_delta) + "," + std::to_string(c.cover_size) + "," +
               format_double(c.margin_formula) + "," + format_double(c.margin_measured) + "," +
               format_double(c.crossover_epsilon) + "," +
               format_double(c.log10_crossover_epsilon);
        for (const double v : c.bound_at_ladder) csv += "," + format_double(v);
        csv += "\n";
    }
    detail::write_text_file(detail::output_path(cfg, "bounds.csv"), csv);

    bool thresholds_ok = true;
    std::string table;
    table += "# takens margin thresholds schema_version=" + std::to_string(kSchemaVersion) + "\n";
    table += "d,threshold_pairs_linear_2d+1,threshold_overlap_2d+1,threshold_fixed_point_2d+2,"
             "threshold_tangent_4d,threshold_pairs_nonlinear_4d+2\n";
    for (const int dd : {1, 2, 3}) {
        const MarginThresholdCheck check = check_margin_thresholds(dd);
        thresholds_ok = thresholds_ok && check.all_ok();
        table += std::to_string(dd) + "," + (check.pairs_linear_ok ? "1" : "0") + "," +
                 (check.overlap_ok ? "1" : "0") + "," + (check.fixed_point_ok ? "1" : "0") + "," +
                 (check.tangent_ok ? "1" : "0") + "," + (check.pairs_nonlinear_ok ? "1" : "0") +
                 "\n";
    }
    detail::write_text_file(detail::output_path(cfg, "margin_thresholds.csv"), table);

    log << "bounds: D_alpha=" << report.D_alpha << ", L=" << format_double(report.L)
        << " (lipschitz " << format_double(report.lipschitz_L) << ", remainder "
        << format_double(report.remainder_L) << ")\n";
    for (const auto& c : report.cases) {
        log << "  " << c.name;
        if (c.sub_index > 0) log << "[" << c.sub_index << "]";
        log << ": sigma_delta=" << format_double(c.sigma_delta)
            << " margin=" << format_double(c.margin_formula)
            << " log10_crossover_eps=" << format_double(c.log10_crossover_epsilon) << "\n";
    }
    log << "bounds: margin thresholds " << (thresholds_ok ? "hold" : "VIOLATED")
        << " for d in {1,2,3} (" << detail::elapsed_ms(start) << " ms)\n";
    return thresholds_ok ? 0 : 1;
}

/// fixed-points: the fixed-point census with multipliers, separations, the
/// periodic-orbit scan, and the first-order tracking slope.
inline int cmd_fixed_points(const ExperimentConfig& cfg, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const System base = builtin_system(cfg.system);
    const Ball region{cfg.k_center, cfg.k_radius};
    FixedPointOptions opt;
    opt.n_seeds = cfg.fixed_point_seeds;
    const FixedPointSet fps = find_fixed_points(base, region, opt);

    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "fixed-points";
    j["system"] = cfg.system;
    j["count"] = fps.points.size();
    j["min_separation"] = fps.min_separation;
    j["points"] = ordered_json::array();
    double min_pi1_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fps.points.size(); ++i) {
        const auto& fp = fps.points[i];
        ordered_json e;
        e["point"] = detail::json_vector(fp.point);
        ordered_json mults = ordered_json::array();
        for (Eigen::Index k = 0; k < fp.multipliers.size(); ++k) {
            mults.push_back({fp.multipliers[k].real(), fp.multipliers[k].imag()});
        }
        e["multipliers"] = mults;
        e["hyperbolic"] = fp.hyperbolic;
        j["points"].push_back(e);
        for (std::size_t l = i + 1; l < fps.points.size(); ++l) {
            min_pi1_gap = std::min(min_pi1_gap,
                                   std::abs(fp.point[0] - fps.points[l].point[0]));
        }
        log << "fixed point " << (i + 1) << ": (";
        for (Eigen::Index k = 0; k < fp.point.size(); ++k) {
            log << (k ? ", " : "") << format_double(fp.point[k]);
        }
        log << ")" << (fp.hyperbolic ? " hyperbolic" : " NOT hyperbolic") << "\n";
    }
    j["min_first_coordinate_gap"] =
        std::isfinite(min_pi1_gap) ? min_pi1_gap : 0.0;
    log << "separation Delta=" << format_double(fps.min_separation)
        << ", first-coordinate gap=" << format_double(min_pi1_gap) << "\n";

    // Immersivity of the delay map at each fixed point, sampled over the
    // re-centering coefficient ball of radius a1.
    if (!fps.points.empty()) {
        const PolyBasis basis(base.dim(), cfg.resolved_basis_degree());
        RngStream rng(cfg.master_seed, "fp-immersivity", 0);
        const Ball kplus{cfg.k_center, cfg.resolved_kplus_radius()};
        j["fixed_point_immersivity"] = ordered_json::array();
        for (std::size_t i = 0; i < fps.points.size(); ++i) {
            double min_sigma = std::numeric_limits<double>::infinity();
            for (int s = 0; s < std::max(1, cfg.sigma_c_samples); ++s) {
                Eigen::VectorXd c =
                    s == 0 ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()))
                           : rng.uniform_sphere(static_cast<int>(basis.size()), cfg.a1).eval();
                const PerturbedSystem perturbed(base, basis, c, cfg.a1 * (1.0 + 1e-9));
                const Eigen::VectorXd moved =
                    refine_fixed_point(perturbed.system(), fps.points[i].point);
                const Eigen::MatrixXd jac = delay_jacobian(
                    perturbed.system(), moved, DelayConfig{cfg.embedding_dimension}, kplus);
                min_sigma = std::min(min_sigma, singular_value(jac, base.dim()));
            }
            j["fixed_point_immersivity"].push_back(min_sigma);
            log << "fixed point " << (i + 1)
                << ": min delay-Jacobian sigma_d over sampled coefficients = "
                << format_double(min_sigma) << "\n";
        }
    }

    const int max_period = 2 * cfg.embedding_dimension - 1;
    const auto periodic = periodic_orbit_scan(base, region, max_period, opt);
    j["periodic_scan_max_period"] = max_period;
    j["periodic_orbits_found"] = ordered_json::array();
    for (const auto& p : periodic) {
        j["periodic_orbits_found"].push_back(
            {{"point", detail::json_vector(p.point)}, {"period", p.period}});
    }
    log << "periodic scan up to period " << max_period << ": " << periodic.size()
        << " non-fixed periodic points found\n";

    // First-order tracking slope at the first fixed point.
    bool slope_ok = true;
    if (!fps.points.empty()) {
        const Eigen::VectorXd z0 = fps.points.front().point;
        const PolyBasis basis(base.dim(), 3);
        RngStream rng(cfg.master_seed, "tracking-slope", 0);
        const Eigen::VectorXd dir = rng.uniform_sphere(static_cast<int>(basis.size()));
        std::vector<double> ts{1e-2, 1e-3, 1e-4, 1e-5};
        std::vector<double> lx, ly;
        for (const double t : ts) {
            const PerturbedSystem perturbed(base, basis, t * dir, 1.0);
            const Eigen::VectorXd truth = refine_fixed_point(perturbed.system(), z0);
            const Eigen::VectorXd predicted = track_fixed_point(base, z0, basis, t * dir);
            lx.push_back(std::log(t));
            ly.push_back(std::log(std::max((truth - predicted).norm(), 1e-300)));
        }
        const double slope = fit_line(lx, ly).slope;
        slope_ok = std::abs(slope - 2.0) <= 0.15;
        j["tracking_slope"] = slope;
        log << "first-order tracking slope: " << format_double(slope) << "\n";
    }

    const bool ok = fps.all_hyperbolic() && slope_ok &&
                    (fps.points.size() < 2 || min_pi1_gap > 0.0);
    j["suite_passed"] = ok;
    j["runtime_ms"] = detail::elapsed_ms(start);
    detail::write_text_file(detail::output_path(cfg, "fixed_points.json"), j.dump(2) + "\n");
    log << "fixed-points: wrote " << detail::output_path(cfg, "fixed_points.json") << " ("
        << detail::elapsed_ms(start) << " ms)\n";
    return ok ? 0 : 1;
}

}  // namespace takens
