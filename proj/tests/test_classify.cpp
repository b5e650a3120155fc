#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "takens/classify.hpp"
#include "takens/fixed_points.hpp"
#include "takens/system.hpp"

using takens::Ball;
using takens::builtin_system;
using takens::CaseReport;
using takens::CaseTag;
using takens::classify_pair;
using takens::DelayConfig;
using takens::PolyBasis;
using takens::System;

namespace {

Eigen::VectorXd attractor_point(const System& sys, int offset) {
    Eigen::VectorXd x(2);
    x << 0.1, 0.1;
    for (int k = 0; k < 300 + offset; ++k) x = sys.map(x);
    return x;
}

}  // namespace

TEST_CASE("coinciding arguments are rejected", "[classify]") {
    const System henon = builtin_system("henon");
    const DelayConfig cfg{4};
    const PolyBasis basis = takens::default_delay_basis(2, cfg);
    const Eigen::VectorXd x = attractor_point(henon, 0);
    CHECK_THROWS_AS(classify_pair(henon, x, x, basis, cfg), std::invalid_argument);
}

TEST_CASE("two fixed points on distinct orbits", "[classify]") {
    const System henon = builtin_system("henon");
    const DelayConfig cfg{4};
    const PolyBasis basis = takens::default_delay_basis(2, cfg);
    const auto fps = oracles::henon_fixed_points();
    const CaseReport report = classify_pair(henon, fps[0], fps[1], basis, cfg);
    CHECK(report.tag == CaseTag::distinct_periodic_orbits);
    CHECK(std::string(to_string(report.tag)) == "1.1");
    CHECK(report.period_x == 1);
    CHECK(report.period_y == 1);
    CHECK(report.compressed_J.rows() == 4);
    CHECK(report.compressed_J.cols() == 2);
    CHECK(report.product_rank.numerical_rank >= 1);
}

TEST_CASE("same periodic orbit", "[classify]") {
    // Rotation by 2 pi / 3: every point lies on a period-3 orbit.
    const System rot = builtin_system("rotation_scale(2.0943951023931953,1.0)");
    const DelayConfig cfg{4};
    const PolyBasis basis = takens::default_delay_basis(2, cfg);
    Eigen::VectorXd x1(2);
    x1 << 0.8, 0.1;
    const Eigen::VectorXd y1 = rot.map(x1);
    const CaseReport report = classify_pair(rot, x1, y1, basis, cfg);
    CHECK(report.tag == CaseTag::same_periodic_orbit);
    CHECK(report.period_x == 3);
    CHECK(report.overlap_index == 2);
    CHECK(report.compressed_J.cols() == 3);
    // Only rank greater than 1 is guaranteed on a shared periodic orbit.
    CHECK(report.product_rank.numerical_rank > 1);
}

TEST_CASE("generic pairs have full product rank", "[classify]") {
    const System henon = builtin_system("henon");
    const DelayConfig cfg{4};
    const PolyBasis basis = takens::default_delay_basis(2, cfg);
    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::VectorXd x1 = attractor_point(henon, 37 * rep);
        const Eigen::VectorXd y1 = attractor_point(henon, 37 * rep + 211);
        const CaseReport report = classify_pair(henon, x1, y1, basis, cfg);
        REQUIRE(report.tag == CaseTag::generic);
        CHECK(report.compressed_J.rows() == 4);
        CHECK(report.compressed_J.cols() == 8);
        CHECK(report.product_rank.numerical_rank == 4);
    }
}

TEST_CASE("overlapping orbits compress to the shifted circulant", "[classify]") {
    const System henon = builtin_system("henon");
    const DelayConfig cfg{5};
    const PolyBasis basis = takens::default_delay_basis(2, cfg);
    const Eigen::VectorXd x1 = attractor_point(henon, 11);
    const Eigen::VectorXd y1 = henon.map(henon.map(x1));  // y1 = x3
    const CaseReport report = classify_pair(henon, x1, y1, basis, cfg);
    CHECK(report.tag == CaseTag::overlapping_orbits);
    CHECK(report.overlap_index == 3);
    REQUIRE(report.compressed_J.rows() == 5);
    REQUIRE(report.compressed_J.cols() == 5 + 3 - 1);
    // First row 1, 0, -1, 0^{D-1}.
    CHECK(report.compressed_J.entries(0, 0) == 1.0);
    CHECK(report.compressed_J.entries(0, 1) == 0.0);
    CHECK(report.compressed_J.entries(0, 2) == -1.0);
    CHECK(report.compressed_J.entries.row(0).tail(4).norm() == 0.0);
    CHECK(report.product_rank.numerical_rank == 5);

    // Swapping the arguments lands in the same case.
    const CaseReport swapped = classify_pair(henon, y1, x1, basis, cfg);
    CHECK(swapped.tag == CaseTag::overlapping_orbits);
    CHECK(swapped.swapped);
    CHECK(swapped.overlap_index == 3);
    CHECK(swapped.product_rank.numerical_rank == 5);
}

TEST_CASE("one periodic point", "[classify]") {
    const System henon = builtin_system("henon");
    const DelayConfig cfg{4};
    const PolyBasis basis = takens::default_delay_basis(2, cfg);
    const Eigen::VectorXd fixed = oracles::henon_fixed_points()[0];
    const Eigen::VectorXd generic = attractor_point(henon, 3);
    const CaseReport report = classify_pair(henon, fixed, generic, basis, cfg);
    CHECK(report.tag == CaseTag::one_periodic);
    CHECK(report.period_x == 1);
    CHECK(report.period_y == 0);
    CHECK(report.compressed_J.cols() == 1 + 4);
    CHECK(report.product_rank.numerical_rank == 4);

    const CaseReport swapped = classify_pair(henon, generic, fixed, basis, cfg);
    CHECK(swapped.tag == CaseTag::one_periodic);
    CHECK(swapped.swapped);
    CHECK(swapped.product_rank.numerical_rank == 4);
}

TEST_CASE("known fixed points snap nearly-periodic inputs", "[classify]") {
    const System henon = builtin_system("henon");
    const DelayConfig cfg{4};
    const PolyBasis basis = takens::default_delay_basis(2, cfg);
    const auto fps =
        takens::find_fixed_points(henon, takens::Ball{Eigen::VectorXd::Zero(2), 2.0});
    REQUIRE(fps.points.size() == 2);
    const Eigen::VectorXd near_fixed =
        fps.points[0].point + Eigen::Vector2d(1e-8, -1e-8);
    const Eigen::VectorXd generic = attractor_point(henon, 9);

    // Without the hint the perturbed point drifts and reads as generic.
    const CaseReport raw = classify_pair(henon, near_fixed, generic, basis, cfg, 1e-9);
    CHECK(raw.tag == CaseTag::generic);

    // With the hint and a matching tolerance it lands in the periodic case.
    const CaseReport snapped =
        classify_pair(henon, near_fixed, generic, basis, cfg, 1e-7, &fps);
    CHECK(snapped.tag == CaseTag::one_periodic);
    CHECK(snapped.period_x == 1);
}

TEST_CASE("classification is total and swap-stable on random pairs", "[classify]") {
    const System henon = builtin_system("henon");
    const DelayConfig cfg{3};
    const PolyBasis basis = takens::default_delay_basis(2, cfg);
    takens::RngStream rng(81, "classify-total", 0);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::VectorXd x1 = attractor_point(henon, static_cast<int>(rng.uniform_index(500)));
        const Eigen::VectorXd y1 = attractor_point(henon, static_cast<int>(rng.uniform_index(500)));
        if ((x1 - y1).norm() <= 1e-9) continue;
        const CaseReport a = classify_pair(henon, x1, y1, basis, cfg);
        const CaseReport b = classify_pair(henon, y1, x1, basis, cfg);
        CHECK(a.tag == b.tag);
        CHECK(a.product_rank.numerical_rank == b.product_rank.numerical_rank);
    }
}
