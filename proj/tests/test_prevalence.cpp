#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "takens/prevalence.hpp"
#include "takens/rng.hpp"

using takens::assemble_bound;
using takens::bound_linear;
using takens::bound_nonlinear;
using takens::BoundInput;
using takens::box_dimension;
using takens::CoverLaw;
using takens::CoverResult;
using takens::greedy_cover;
using takens::sigma_delta_min;
using takens::StructuredMatrix;

TEST_CASE("linear transfer bound values", "[prevalence]") {
    BoundInput in{2, 1, 1.0, 1.0, 0.1, 1.0};
    CHECK(bound_linear(in).probability == Catch::Approx(0.2));

    in.r = 0;
    CHECK(bound_linear(in).probability == 1.0);

    // Halving epsilon scales the bound by 2^-r.
    BoundInput big{10, 4, 0.7, 2.0, 1e-3, 0.5};
    BoundInput half = big;
    half.epsilon /= 2.0;
    CHECK(std::exp(bound_linear(half).log_probability - bound_linear(big).log_probability) ==
          Catch::Approx(std::pow(2.0, -4)));

    BoundInput bad = big;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(bound_linear(bad), std::invalid_argument);
}

TEST_CASE("nonlinear transfer bound values", "[prevalence]") {
    BoundInput in{2, 2, 1.0, 1.0, 0.01, 1.0};
    CHECK(bound_nonlinear(in).probability == Catch::Approx(0.08));

    in.r = 0;
    CHECK(bound_nonlinear(in).probability == 1.0);

    // Against the linear bound at a = sqrt(eps), the ratio is exactly 2^r.
    BoundInput nl{7, 3, 0.4, 1.3, 0.04, 1.0};
    BoundInput lin = nl;
    lin.a = std::sqrt(nl.epsilon);
    CHECK(std::exp(bound_nonlinear(nl).log_probability - bound_linear(lin).log_probability) ==
          Catch::Approx(8.0));

    BoundInput violated{2, 1, 1.0, 1.0, 0.5, 0.1};  // sqrt(0.5) > 0.1
    CHECK_THROWS_AS(bound_nonlinear(violated), std::invalid_argument);
}

TEST_CASE("linear bound is sound against Monte Carlo frequencies", "[prevalence][mc]") {
    takens::RngStream rng(90, "mc-linear", 0);
    const Eigen::Index D = 4;
    const Eigen::Index n_alpha = 10;
    const int n_matrices = 10;
    const int n_samples = 20000;
    const double a = 0.8;
    const double L = 1.0;
    int violations = 0;
    for (int m = 0; m < n_matrices; ++m) {
        Eigen::MatrixXd A(D, n_alpha);
        for (Eigen::Index i = 0; i < A.size(); ++i) A(i) = rng.normal();
        const Eigen::VectorXd g0 = 0.1 * rng.normal_vector(static_cast<int>(D));
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
        const double sigma = svd.singularValues()[D - 1];
        for (int e = 0; e < 6; ++e) {
            const double eps = 0.5 * std::pow(2.0, -e);
            int hits = 0;
            for (int s = 0; s < n_samples; ++s) {
                const Eigen::VectorXd c = rng.uniform_ball(static_cast<int>(n_alpha), a);
                if ((A * c + g0).norm() <= L * eps) ++hits;
            }
            const double frequency = static_cast<double>(hits) / n_samples;
            const double bound =
                bound_linear(BoundInput{n_alpha, D, sigma, L, eps, a}).probability;
            if (frequency > bound) ++violations;
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("nonlinear bound is sound against Monte Carlo frequencies", "[prevalence][mc]") {
    takens::RngStream rng(91, "mc-nonlinear", 0);
    const Eigen::Index D = 4;
    const Eigen::Index n_alpha = 10;
    const int n_matrices = 10;
    const int n_samples = 20000;
    const double L = 1.0;
    int violations = 0;
    for (int m = 0; m < n_matrices; ++m) {
        Eigen::MatrixXd A(D, n_alpha);
        for (Eigen::Index i = 0; i < A.size(); ++i) A(i) = rng.normal();
        // Quadratic part with |q(c)| <= L |c|^2 by construction.
        Eigen::VectorXd qdir = rng.uniform_sphere(static_cast<int>(D));
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
        const double sigma = svd.singularValues()[D - 1];
        for (int e = 0; e < 6; ++e) {
            const double eps = 0.25 * std::pow(2.0, -e);
            const double radius = std::sqrt(eps);
            int hits = 0;
            for (int s = 0; s < n_samples; ++s) {
                const Eigen::VectorXd c = rng.uniform_ball(static_cast<int>(n_alpha), radius);
                const Eigen::VectorXd g = A * c + 0.9 * L * c.squaredNorm() * qdir;
                if (g.norm() <= L * eps) ++hits;
            }
            const double frequency = static_cast<double>(hits) / n_samples;
            const double bound =
                bound_nonlinear(BoundInput{n_alpha, D, sigma, L, eps, 1.0}).probability;
            if (frequency > bound) ++violations;
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("greedy covers", "[prevalence]") {
    // Line of 11 points spaced 0.1 apart at radius 0.05: every point covers
    // only itself.
    Eigen::MatrixXd line(11, 1);
    for (int i = 0; i <= 10; ++i) line(i, 0) = 0.1 * i;
    const CoverResult cover = greedy_cover(line, 0.05);
    CHECK(cover.centers.size() == 11);
    CHECK(oracles::cover_is_valid(line, cover.centers, 0.05));

    // Radius beyond the diameter: a single center suffices.
    CHECK(greedy_cover(line, 2.0).centers.size() == 1);

    // All points within eps of the first point.
    Eigen::MatrixXd tight(5, 2);
    takens::RngStream rng(92, "cover", 0);
    for (int i = 0; i < 5; ++i) {
        tight(i, 0) = 1e-3 * rng.uniform();
        tight(i, 1) = 1e-3 * rng.uniform();
    }
    const CoverResult one = greedy_cover(tight, 0.01);
    CHECK(one.centers.size() == 1);
    CHECK(one.centers[0] == 0);

    // Assignments point to a center within eps; centers are cloud indices.
    Eigen::MatrixXd cloud(200, 2);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) cloud(i) = rng.uniform(-1.0, 1.0);
    const double eps = 0.3;
    const CoverResult c = greedy_cover(cloud, eps);
    CHECK(oracles::cover_is_valid(cloud, c.centers, eps));
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
        const Eigen::Index assigned = c.assignment[static_cast<std::size_t>(i)];
        CHECK((cloud.row(i) - cloud.row(assigned)).norm() <= eps);
        CHECK(std::find(c.centers.begin(), c.centers.end(), assigned) != c.centers.end());
    }
}

TEST_CASE("cover counts are monotone in the radius", "[prevalence]") {
    takens::RngStream rng(93, "cover-mono", 0);
    Eigen::MatrixXd cloud(500, 2);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) cloud(i) = rng.uniform(-1.0, 1.0);
    std::size_t previous = 0;
    for (const double eps : {0.05, 0.1, 0.2, 0.4, 0.8}) {
        const std::size_t count = greedy_cover(cloud, eps).centers.size();
        if (previous > 0) CHECK(count <= previous);
        previous = count;
    }
}

TEST_CASE("box dimension of reference clouds", "[prevalence]") {
    takens::RngStream rng(94, "boxdim", 0);
    const std::vector<double> scales{0.25, 0.125, 0.0625, 0.03125, 0.015625};

    Eigen::MatrixXd square(10000, 2);
    for (Eigen::Index i = 0; i < square.size(); ++i) square(i) = rng.uniform();
    const auto sq = box_dimension(square, scales);
    CHECK_FALSE(sq.degenerate);
    CHECK(sq.dimension == Catch::Approx(2.0).margin(0.2));
    CHECK(sq.C_K > 0.0);

    Eigen::MatrixXd segment(10000, 2);
    for (Eigen::Index i = 0; i < segment.rows(); ++i) {
        segment(i, 0) = rng.uniform();
        segment(i, 1) = 0.0;
    }
    CHECK(box_dimension(segment, scales).dimension == Catch::Approx(1.0).margin(0.1));

    Eigen::MatrixXd point = Eigen::MatrixXd::Zero(50, 2);
    const auto pt = box_dimension(point, scales);
    CHECK(pt.degenerate);
    CHECK(pt.dimension == 0.0);

    CHECK_THROWS_AS(box_dimension(square, std::vector<double>{0.5, 0.25, 0.125}),
                    std::invalid_argument);
}

TEST_CASE("lipschitz estimates", "[prevalence]") {
    takens::RngStream rng(95, "lipschitz", 0);
    Eigen::MatrixXd A(2, 2);
    A << 1.0, 0.4, -0.3, 0.8;
    const double spectral = takens::singular_value(A, 1);
    std::vector<Eigen::VectorXd> inputs, outputs, doubled;
    for (int i = 0; i < 200; ++i) {
        inputs.push_back(rng.uniform_ball(2, 1.0));
        outputs.push_back(A * inputs.back());
        doubled.push_back(2.0 * outputs.back());
    }
    const double est = takens::lipschitz_estimate(inputs, outputs);
    CHECK(est <= 1.5 * spectral * (1.0 + 1e-12));
    CHECK(est >= 0.9 * 1.5 * spectral);

    // Homogeneity: doubling the outputs doubles the estimate.
    CHECK(takens::lipschitz_estimate(inputs, doubled) == Catch::Approx(2.0 * est));

    // Constant map.
    std::vector<Eigen::VectorXd> constant(inputs.size(), Eigen::VectorXd::Zero(2));
    CHECK(takens::lipschitz_estimate(inputs, constant) == 0.0);

    // All inputs duplicated: no usable difference quotient.
    std::vector<Eigen::VectorXd> same(3, Eigen::VectorXd::Zero(2));
    CHECK_THROWS_AS(takens::lipschitz_estimate(same, same), std::invalid_argument);
}

TEST_CASE("quadratic remainder constant", "[prevalence]") {
    std::vector<Eigen::VectorXd> cs, rs;
    for (const double t : {1e-1, 1e-2, 1e-3}) {
        cs.push_back(Eigen::VectorXd::Constant(3, t));
        rs.push_back(Eigen::VectorXd::Constant(2, 0.7 * 3.0 * t * t));
    }
    const double est = takens::quadratic_remainder_constant(cs, rs);
    const double truth = 0.7 * std::sqrt(2.0);
    CHECK(est == Catch::Approx(1.5 * truth));
}

TEST_CASE("sigma_delta over covers", "[prevalence]") {
    takens::RngStream rng(96, "sigma-delta", 0);
    Eigen::MatrixXd cloud(60, 2);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) cloud(i) = rng.uniform(-1.0, 1.0);
    const CoverResult cover = greedy_cover(cloud, 0.4);

    // Identity builder: every singular value is 1.
    auto identity_builder = [](const Eigen::VectorXd&) {
        StructuredMatrix m;
        m.entries = Eigen::MatrixXd::Identity(3, 3);
        return m;
    };
    const auto id = sigma_delta_min(cover, cloud, identity_builder, 3);
    CHECK(id.sigma == 1.0);
    CHECK(id.argmin_center == cover.centers[0]);

    // A builder keyed to the point, checked against direct minimization.
    auto builder = [](const Eigen::VectorXd& x) {
        StructuredMatrix m;
        m.entries = Eigen::MatrixXd::Zero(2, 2);
        m.entries(0, 0) = 1.0 + x[0] * x[0];
        m.entries(1, 1) = 0.5 + x[1] * x[1];
        return m;
    };
    const auto got = sigma_delta_min(cover, cloud, builder, 2);
    double expect = std::numeric_limits<double>::infinity();
    Eigen::Index arg = -1;
    for (const Eigen::Index c : cover.centers) {
        const double s = takens::singular_value(builder(cloud.row(c).transpose()).entries, 2);
        if (s < expect) {
            expect = s;
            arg = c;
        }
    }
    CHECK(got.sigma == expect);
    CHECK(got.argmin_center == arg);

    // Single-center cover reports that center's singular value.
    const CoverResult single = greedy_cover(cloud, 10.0);
    REQUIRE(single.centers.size() == 1);
    const auto one = sigma_delta_min(single, cloud, builder, 1);
    CHECK(one.argmin_center == single.centers[0]);

    // Builder failures carry the center identity.
    auto failing = [](const Eigen::VectorXd&) -> StructuredMatrix {
        throw std::runtime_error("boom");
    };
    CHECK_THROWS_WITH(sigma_delta_min(cover, cloud, failing, 1),
                      Catch::Matchers::ContainsSubstring("center"));
}

TEST_CASE("assembled bounds reproduce the exponent thresholds", "[prevalence]") {
    // Placeholder sigma/L/C_K: the margin depends only on r and the exponent.
    auto margin = [](double p, Eigen::Index r, bool nonlinear) {
        return assemble_bound(CoverLaw{1.0, p}, BoundInput{100, r, 1.0, 1.0, 0.5, 1.0}, nonlinear)
            .margin();
    };
    for (const int d : {1, 2, 3}) {
        // Injectivity via pair covers, linear case: positive from D = 2d + 1.
        CHECK(margin(2.0 * d, 2 * d + 1, false) > 0.0);
        CHECK(margin(2.0 * d, 2 * d, false) == 0.0);
        // Fixed-point-to-point sets: positive from D = 2d + 2.
        CHECK(margin(static_cast<double>(d), (2 * d + 2) - 1, true) > 0.0);
        CHECK(margin(static_cast<double>(d), (2 * d + 1) - 1, true) == 0.0);
        // Orbit-overlap sets: positive from D = 2d + 1 with r = D.
        CHECK(margin(static_cast<double>(d), 2 * d + 1, true) > 0.0);
        CHECK(margin(static_cast<double>(d), 2 * d, true) == 0.0);
        // Pair sets, nonlinear: positive from D = 4d + 2.
        CHECK(margin(2.0 * d, (4 * d + 2) - 1, true) > 0.0);
        CHECK(margin(2.0 * d, (4 * d + 1) - 1, true) == 0.0);
        // Immersivity: positive from D = 4d.
        CHECK(margin(2.0 * d - 1.0, (4 * d) - 1, true) > 0.0);
        CHECK(margin(2.0 * d - 1.0, (4 * d - 1) - 1, true) == 0.0);
    }
}

TEST_CASE("assembled bounds clamp and vanish with epsilon", "[prevalence]") {
    const BoundInput per_ball{50, 9, 0.3, 2.0, 0.5, 1.0};
    const auto bound = assemble_bound(CoverLaw{3.0, 4.0}, per_ball, true);
    CHECK(bound.margin() == Catch::Approx(0.5));
    CHECK(bound.evaluate(1.0) == 1.0);

    // Decreasing epsilon ladder: the log bound decreases and eventually the
    // clamped bound drops below 1 at the predicted crossover.
    const double crossover = bound.crossover_epsilon();
    REQUIRE(std::isfinite(crossover));
    CHECK(bound.evaluate(crossover * 0.99) < 1.0);
    CHECK(bound.log10_crossover_epsilon() == Catch::Approx(std::log10(crossover)));
    double previous = std::numeric_limits<double>::infinity();
    for (double eps = 0.25; eps > 1e-12; eps *= 0.25) {
        const double lv = bound.log_evaluate(eps);
        CHECK(lv < previous);
        previous = lv;
    }
    CHECK(bound.evaluate(1e-240) < 1e-30);

    // Non-positive margin: no crossover exists.
    const auto flat = assemble_bound(CoverLaw{3.0, 5.0}, per_ball, true);
    CHECK(std::isnan(flat.crossover_epsilon()));
}
