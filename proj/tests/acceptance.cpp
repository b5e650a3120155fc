// Acceptance suite: one check per release criterion, one line per result.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "takens/bounds.hpp"
#include "takens/commands.hpp"
#include "takens/config.hpp"
#include "takens/delay.hpp"
#include "takens/experiment.hpp"
#include "takens/fixed_points.hpp"
#include "takens/parallel.hpp"
#include "takens/prevalence.hpp"
#include "takens/ranksuite.hpp"
#include "takens/rng.hpp"
#include "takens/structured.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool passed = false;
    std::string detail;
};

double ms_since(const Clock::time_point& start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// 1. The 6x8 circulant with first row (1,0,0,0,-1,0,0,0) has rank exactly 4.
Outcome criterion_counterexample(double& budget_ms) {
    budget_ms = 1.0;
    Eigen::VectorXd first(8);
    first << 1, 0, 0, 0, -1, 0, 0, 0;
    const takens::StructuredMatrix m = takens::circulant(first, 6);
    (void)takens::numerical_rank(m);  // warm up before the timed call
    const auto start = Clock::now();
    const auto rank = takens::numerical_rank(m).numerical_rank;
    const double elapsed = ms_since(start);
    return {rank == 4 && elapsed < budget_ms,
            "rank=" + std::to_string(rank) + " expected=4, svd " +
                takens::format_double(elapsed) + " ms"};
}

// 2. Circulant rank law, exhaustively for all column counts up to 12.
Outcome criterion_circulant_exhaustive(double& budget_ms) {
    budget_ms = 5000.0;
    int cases = 0;
    int failures = 0;
    for (int cols = 2; cols <= 12; ++cols) {
        for (int j1 = 0; j1 <= cols - 2; ++j1) {
            for (int m = 1; m <= (cols + 1) / 2; ++m) {
                ++cases;
                const auto c = takens::circulant_plus_minus(j1, cols - 2 - j1, m);
                if (takens::numerical_rank(c).numerical_rank != m) ++failures;
            }
        }
    }
    return {failures == 0,
            std::to_string(cases) + " cases, " + std::to_string(failures) + " failures"};
}

// 3. Randomized rank suites at the degree thresholds, 99% pass floor.
Outcome criterion_rank_suites(double& budget_ms) {
    budget_ms = 60000.0;
    takens::ExperimentConfig cfg;
    cfg.master_seed = 20240915;
    const takens::RankSuiteReport report = takens::run_rank_suite(cfg);
    return {report.failures == 0, std::to_string(report.checks - report.failures) + "/" +
                                      std::to_string(report.checks) + " suite checks passed"};
}

// 4. Taylor remainder slopes 2.0 +- 0.15 on Henon and Ikeda; exactly-linear
// flag on the linear/constants control.
Outcome criterion_taylor_orders(double& budget_ms) {
    budget_ms = 10000.0;
    const std::vector<double> ladder{1e-2, 1e-3, 1e-4, 1e-5};
    const takens::DelayConfig cfg{4};
    std::string detail;
    bool ok = true;

    takens::RngStream rng(4242, "acceptance-taylor", 0);
    for (const char* name : {"henon", "ikeda"}) {
        const takens::System sys = takens::builtin_system(name);
        Eigen::VectorXd x(2);
        x << 0.1, 0.1;
        for (int k = 0; k < 300; ++k) x = sys.map(x);
        const takens::PolyBasis basis(2, 3);
        const Eigen::VectorXd dir = rng.uniform_sphere(static_cast<int>(basis.size()));
        const Eigen::VectorXd v1 = rng.uniform_sphere(2);
        const takens::Ball bound = takens::Ball::unbounded(2);

        const auto f_fit = takens::taylor_remainder_order(sys, basis, x, cfg, dir, ladder, bound);
        const auto h_fit =
            takens::taylor_remainder_order_tangent(sys, basis, x, v1, cfg, dir, ladder, bound);

        const auto fps = takens::find_fixed_points(
            sys, takens::Ball{Eigen::Vector2d(0.5, -0.5), 3.0});
        double track_slope = 0.0;
        if (!fps.points.empty()) {
            const Eigen::VectorXd z0 = fps.points.front().point;
            std::vector<double> lx, ly;
            for (const double t : ladder) {
                const takens::PerturbedSystem perturbed(sys, basis, t * dir, 1.0);
                const Eigen::VectorXd truth =
                    takens::refine_fixed_point(perturbed.system(), z0);
                const Eigen::VectorXd predicted =
                    takens::track_fixed_point(sys, z0, basis, t * dir);
                lx.push_back(std::log(t));
                ly.push_back(std::log(std::max((truth - predicted).norm(), 1e-300)));
            }
            track_slope = takens::fit_line(lx, ly).slope;
        }
        const bool sys_ok = !f_fit.exactly_linear && std::abs(f_fit.slope - 2.0) <= 0.15 &&
                            !h_fit.exactly_linear && std::abs(h_fit.slope - 2.0) <= 0.15 &&
                            !fps.points.empty() && std::abs(track_slope - 2.0) <= 0.15;
        ok = ok && sys_ok;
        detail += std::string(name) + " slopes F/V=" + takens::format_double(f_fit.slope) +
                  " dF/H=" + takens::format_double(h_fit.slope) +
                  " tracking=" + takens::format_double(track_slope) + "; ";
    }

    // Linear system with a constants-only basis has no quadratic term.
    const takens::System lin = takens::builtin_system("linear_diag(0.5,0.3333333333333333)");
    const takens::PolyBasis constants(2, 0);
    Eigen::VectorXd x0(2);
    x0 << 0.3, 0.4;
    Eigen::VectorXd c1(1);
    c1 << 1.0;
    const auto flat = takens::taylor_remainder_order(lin, constants, x0, cfg, c1, ladder,
                                                     takens::Ball::unbounded(2));
    ok = ok && flat.exactly_linear;
    detail += std::string("linear control exactly-linear=") + (flat.exactly_linear ? "yes" : "NO");
    return {ok, detail};
}

// 5. Transfer-of-volume bounds are sound against Monte Carlo frequencies:
// 50 matrices x 6 scales x 1e5 coefficient samples, zero violations allowed.
Outcome criterion_mc_soundness(double& budget_ms) {
    budget_ms = 300000.0;
    constexpr int n_matrices = 50;
    constexpr int n_samples = 100000;
    constexpr Eigen::Index rows = 4;
    constexpr Eigen::Index cols = 10;
    constexpr double ball_radius = 0.8;
    constexpr double L = 1.0;
    std::vector<int> linear_violations(n_matrices, 0);
    std::vector<int> nonlinear_violations(n_matrices, 0);

    takens::parallel_for(n_matrices, 0, [&](std::size_t m) {
        takens::RngStream rng(97531, "acceptance-mc", static_cast<std::uint64_t>(m));
        Eigen::MatrixXd a(rows, cols);
        for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.normal();
        const Eigen::VectorXd g0 = 0.1 * rng.normal_vector(static_cast<int>(rows));
        const Eigen::VectorXd qdir = rng.uniform_sphere(static_cast<int>(rows));
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
        const double sigma = svd.singularValues()[rows - 1];

        for (int e = 0; e < 6; ++e) {
            // Linear lemma at scales tied to the smallest retained singular
            // value; the coarsest scales clamp to the trivial bound.
            const double eps_lin = (sigma * ball_radius / L) * std::pow(2.0, -(e + 1));
            int hits = 0;
            for (int s = 0; s < n_samples; ++s) {
                const Eigen::VectorXd c = rng.uniform_ball(static_cast<int>(cols), ball_radius);
                if ((a * c + g0).norm() <= L * eps_lin) ++hits;
            }
            const double freq = static_cast<double>(hits) / n_samples;
            const double bound =
                takens::bound_linear({cols, rows, sigma, L, eps_lin, ball_radius}).probability;
            if (freq > bound) ++linear_violations[m];

            // Nonlinear lemma: samples live in the ball of radius sqrt(eps).
            const double eps_nl = 0.25 * std::pow(2.0, -e);
            const double radius = std::sqrt(eps_nl);
            hits = 0;
            for (int s = 0; s < n_samples; ++s) {
                const Eigen::VectorXd c = rng.uniform_ball(static_cast<int>(cols), radius);
                const Eigen::VectorXd g = a * c + (0.9 * L * c.squaredNorm()) * qdir;
                if (g.norm() <= L * eps_nl) ++hits;
            }
            const double nfreq = static_cast<double>(hits) / n_samples;
            const double nbound =
                takens::bound_nonlinear({cols, rows, sigma, L, eps_nl, 1.0}).probability;
            if (nfreq > nbound) ++nonlinear_violations[m];
        }
    });

    int total = 0;
    for (int m = 0; m < n_matrices; ++m) {
        total += linear_violations[static_cast<std::size_t>(m)] +
                 nonlinear_violations[static_cast<std::size_t>(m)];
    }
    return {total == 0, std::to_string(n_matrices) + " matrices x 6 scales x " +
                            std::to_string(n_samples) + " samples per lemma, " +
                            std::to_string(total) + " bound violations"};
}

// 6. Box-counting dimension of reference clouds.
Outcome criterion_box_dimension(double& budget_ms) {
    budget_ms = 30000.0;
    takens::RngStream rng(864213, "acceptance-boxdim", 0);
    const std::vector<double> scales{0.25, 0.125, 0.0625, 0.03125, 0.015625};

    Eigen::MatrixXd square(10000, 2);
    for (Eigen::Index i = 0; i < square.size(); ++i) square(i) = rng.uniform();
    const double d_square = takens::box_dimension(square, scales).dimension;

    Eigen::MatrixXd segment(10000, 2);
    for (Eigen::Index i = 0; i < segment.rows(); ++i) {
        segment(i, 0) = rng.uniform();
        segment(i, 1) = 0.0;
    }
    const double d_segment = takens::box_dimension(segment, scales).dimension;

    Eigen::MatrixXd point = Eigen::MatrixXd::Zero(100, 2);
    const auto d_point = takens::box_dimension(point, scales);

    const bool ok = std::abs(d_square - 2.0) <= 0.2 && std::abs(d_segment - 1.0) <= 0.1 &&
                    d_point.dimension == 0.0 && d_point.degenerate;
    return {ok, "square=" + takens::format_double(d_square) +
                    " segment=" + takens::format_double(d_segment) +
                    " point=" + takens::format_double(d_point.dimension)};
}

// 7. The prevalence experiment at the theorem's dimension D = 4d + 2, with
// the planted linear control.
Outcome criterion_prevalence(double& budget_ms) {
    budget_ms = 600000.0;
    takens::ExperimentConfig cfg;
    cfg.system = "henon";
    cfg.k_radius = 1.35;
    cfg.kplus_radius = 2.7;
    cfg.embedding_dimension = 10;
    cfg.delta = 0.01;
    cfg.a0 = 0.0;  // auto-selected
    cfg.n_points = 1000;
    cfg.n_pairs = 20000;
    cfg.n_coeff_draws = 100;
    cfg.cloud_size = 4000;
    cfg.master_seed = 12345;
    const auto result = takens::run_embed_verify(cfg);

    int audit_violations = 0;
    bool pair_counts_ok = true;
    for (const auto& d : result.draws) {
        audit_violations += d.audit_violations;
        pair_counts_ok = pair_counts_ok &&
                         (d.pairs_generic + d.pairs_overlap + d.pairs_fixed >= 20000) &&
                         d.pairs_overlap > 0;
    }

    // Control: the unperturbed diagonal map must fail the immersivity proxy.
    takens::ExperimentConfig control;
    control.system = "linear_diag(0.5,0.3333333333333333)";
    control.k_radius = 1.0;
    control.kplus_radius = 2.0;
    control.embedding_dimension = 10;
    control.delta = 0.01;
    control.a0 = 1e-3;
    control.n_points = 200;
    control.n_pairs = 1000;
    control.n_coeff_draws = 3;
    control.cloud_size = 1000;
    control.include_zero_control = true;
    control.master_seed = 777;
    const auto control_result = takens::run_embed_verify(control);

    const bool ok = result.injective_passes >= 99 && result.immersive_passes >= 99 &&
                    result.random_draws == 100 && audit_violations == 0 && pair_counts_ok &&
                    control_result.control_failed_immersivity;
    return {ok, "injective " + std::to_string(result.injective_passes) + "/100, immersive " +
                    std::to_string(result.immersive_passes) + "/100, audit violations " +
                    std::to_string(audit_violations) + ", a0=" +
                    takens::format_double(result.a0) + ", control failed immersivity: " +
                    (control_result.control_failed_immersivity ? "yes" : "NO")};
}

// 8. The margin table turns positive exactly at the documented thresholds.
Outcome criterion_margin_table(double& budget_ms) {
    budget_ms = 1000.0;
    bool ok = true;
    std::string detail;
    for (const int d : {1, 2, 3}) {
        const auto check = takens::check_margin_thresholds(d);
        ok = ok && check.all_ok();
        detail += "d=" + std::to_string(d) + (check.all_ok() ? " ok; " : " VIOLATED; ");
    }
    return {ok, detail + "thresholds 2d+1 / 2d+2 / 4d / 4d+2"};
}

// 9. Identical seeds with different worker counts give byte-identical
// reports.
Outcome criterion_determinism(double& budget_ms) {
    budget_ms = 600000.0;
    takens::ExperimentConfig cfg;
    cfg.system = "henon";
    cfg.k_radius = 1.35;
    cfg.kplus_radius = 2.7;
    cfg.embedding_dimension = 10;
    cfg.delta = 0.01;
    cfg.a0 = 1e-3;
    cfg.n_points = 200;
    cfg.n_pairs = 2000;
    cfg.n_coeff_draws = 6;
    cfg.cloud_size = 1500;
    cfg.master_seed = 424242;
    cfg.threads = 1;
    const auto serial = takens::run_embed_verify(cfg);
    cfg.threads = 4;
    const auto parallel = takens::run_embed_verify(cfg);
    const bool ok = !serial.report_csv.empty() && serial.report_csv == parallel.report_csv;
    return {ok, ok ? "report.csv byte-identical across 1 and 4 worker threads"
                   : "reports differ between thread counts"};
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* label;
        Outcome (*fn)(double&);
    };
    const std::vector<Entry> criteria{
        {1, "circulant counterexample rank", criterion_counterexample},
        {2, "circulant rank law exhaustive", criterion_circulant_exhaustive},
        {3, "randomized rank suites", criterion_rank_suites},
        {4, "Taylor remainder orders", criterion_taylor_orders},
        {5, "transfer-bound Monte Carlo soundness", criterion_mc_soundness},
        {6, "box-dimension estimator", criterion_box_dimension},
        {7, "prevalence experiment", criterion_prevalence},
        {8, "bound-margin thresholds", criterion_margin_table},
        {9, "deterministic parallel reports", criterion_determinism},
    };

    int failures = 0;
    for (const auto& entry : criteria) {
        double budget_ms = 0.0;
        const auto start = Clock::now();
        Outcome outcome;
        try {
            outcome = entry.fn(budget_ms);
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = ms_since(start);
        const bool in_budget = budget_ms <= 0.0 || elapsed <= budget_ms;
        const bool passed = outcome.passed && in_budget;
        if (!passed) ++failures;
        std::printf("[%s] criterion %d: %s — %s (%.1f ms%s)\n", passed ? "PASS" : "FAIL",
                    entry.id, entry.label, outcome.detail.c_str(), elapsed,
                    in_budget ? "" : ", OVER BUDGET");
        std::fflush(stdout);
    }
    if (failures == 0) {
        std::printf("acceptance: all %zu criteria passed\n", criteria.size());
    } else {
        std::printf("acceptance: %d criteria FAILED\n", failures);
    }
    return failures;
}
