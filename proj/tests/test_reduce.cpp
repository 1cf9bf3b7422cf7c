#include <doctest.h>

#include <Eigen/Dense>

#include "embgeom/reduce.hpp"
#include "embgeom/rng.hpp"
#include "oracles.hpp"

using namespace embgeom;

namespace {

Eigen::MatrixXd random_matrix(int n, int d, std::uint64_t seed) {
    RandomStream rng(seed);
    Eigen::MatrixXd m(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
    return m;
}

}  // namespace

TEST_CASE("planar cloud in five dimensions reduces to two components") {
    RandomStream rng(7);
    Eigen::VectorXd u(5), v(5);
    u << 1, 0, 2, -1, 0.5;
    v << 0, 1, -1, 0.5, 2;
    Eigen::MatrixXd pts(100, 5);
    for (int i = 0; i < 100; ++i) pts.row(i) = (rng.normal() * u + rng.normal() * v).transpose();

    const auto space = fit_pca(pts, 0.9);
    CHECK(space.r == 2);
    CHECK(space.explained >= 0.999);
    CHECK((space.components.transpose() * space.components - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-10);
}

TEST_CASE("threshold 1.0 selects the full rank of the centered data") {
    const auto pts = random_matrix(50, 4, 13);
    const auto space = fit_pca(pts, 1.0);
    CHECK(space.r == 4);
    CHECK(space.explained == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("projection semantics") {
    const auto pts = random_matrix(40, 6, 21);
    const auto space = fit_pca(pts, 0.99);

    SUBCASE("the mean projects to the origin") {
        const Eigen::MatrixXd z = project(space, space.mean.transpose());
        CHECK(z.norm() < 1e-12);
    }
    SUBCASE("mean plus a component projects to a coordinate unit") {
        const Eigen::MatrixXd x = (space.mean + space.components.col(0)).transpose();
        const Eigen::MatrixXd z = project(space, x);
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(space.r);
        e1[0] = 1.0;
        CHECK((z.row(0).transpose() - e1).norm() < 1e-10);
    }
    SUBCASE("dimension mismatch throws") {
        CHECK_THROWS(project(space, random_matrix(3, 5, 1)));
        CHECK_THROWS(reconstruct(space, random_matrix(3, space.r + 1, 1)));
    }
}

TEST_CASE("exact-rank data round-trips through project and reconstruct") {
    // points lie in a 3-dimensional affine subspace of R^7
    RandomStream rng(31);
    Eigen::MatrixXd basis = random_matrix(3, 7, 32);
    Eigen::VectorXd offset = random_matrix(1, 7, 33).row(0).transpose();
    Eigen::MatrixXd pts(60, 7);
    for (int i = 0; i < 60; ++i) {
        Eigen::VectorXd coeff(3);
        for (int j = 0; j < 3; ++j) coeff[j] = rng.normal();
        pts.row(i) = (offset + basis.transpose() * coeff).transpose();
    }
    const auto space = fit_pca(pts, 1.0);
    CHECK(space.r == 3);
    const Eigen::MatrixXd rec = reconstruct(space, project(space, pts));
    CHECK((rec - pts).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("reconstruct then project is the identity on reduced space") {
    const auto pts = random_matrix(30, 5, 44);
    const auto space = fit_pca(pts, 0.8);
    const Eigen::MatrixXd z = random_matrix(10, space.r, 45);
    const Eigen::MatrixXd z2 = project(space, reconstruct(space, z));
    CHECK((z2 - z).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("reconstruction residual equals the discarded component mass") {
    const auto pts = random_matrix(80, 6, 55);
    const auto full = fit_pca(pts, 1.0);  // all components
    const auto partial = fit_pca(pts, 0.7);
    REQUIRE(partial.r < full.r);

    const Eigen::VectorXd x = pts.row(3).transpose();
    const Eigen::MatrixXd rec = reconstruct(partial, project(partial, x.transpose()));
    const double residual = (rec.row(0).transpose() - x).norm();

    double discarded = 0.0;
    for (int k = partial.r; k < full.r; ++k) {
        const double coeff = full.components.col(k).dot(x - full.mean);
        discarded += coeff * coeff;
    }
    CHECK(residual == doctest::Approx(std::sqrt(discarded)).epsilon(1e-8));
}

TEST_CASE("reconstruction error is non-increasing in r") {
    const auto pts = random_matrix(60, 8, 66);
    const auto full = fit_pca(pts, 1.0);
    double previous = std::numeric_limits<double>::infinity();
    for (int r = 1; r <= full.r; ++r) {
        ReducedSpace truncated = full;
        truncated.r = r;
        truncated.components = full.components.leftCols(r);
        const Eigen::MatrixXd rec = reconstruct(truncated, project(truncated, pts));
        const double err = (rec - pts).norm();
        CHECK(err <= previous + 1e-12);
        previous = err;
    }
}

TEST_CASE("selected dimension is monotone in the threshold") {
    const auto pts = random_matrix(100, 10, 77);
    int previous = 0;
    for (double threshold : {0.3, 0.5, 0.7, 0.9, 0.99, 1.0}) {
        const auto space = fit_pca(pts, threshold);
        CHECK(space.r >= previous);
        CHECK(space.explained >= threshold - 1e-12);
        previous = space.r;
    }
}

TEST_CASE("gram route matches the covariance route when N < d") {
    // 18 points in 64 dimensions exercises the gram decomposition
    const auto pts = random_matrix(18, 64, 88);
    const auto space = fit_pca(pts, 0.9);
    CHECK(space.r >= 1);
    CHECK(space.r <= 17);
    CHECK((space.components.transpose() * space.components -
           Eigen::MatrixXd::Identity(space.r, space.r)).norm() < 1e-10);
    // projecting the data and reconstructing must capture >= 90% of variance
    const Eigen::MatrixXd rec = reconstruct(space, project(space, pts));
    const Eigen::MatrixXd centered = pts.rowwise() - pts.colwise().mean();
    const double captured = 1.0 - (rec - pts).squaredNorm() / centered.squaredNorm();
    CHECK(captured >= 0.9 - 1e-9);
}

TEST_CASE("fit_pca error cases") {
    CHECK_THROWS(fit_pca(random_matrix(1, 4, 1), 0.9));                      // N < 2
    CHECK_THROWS(fit_pca(Eigen::MatrixXd::Constant(10, 3, 2.5), 0.9));      // zero variance
    CHECK_THROWS(fit_pca(random_matrix(5, 3, 2), 0.0));                     // bad threshold
    CHECK_THROWS(fit_pca(random_matrix(5, 3, 2), 1.5));
}

TEST_CASE("fit is deterministic and the sign convention is canonical") {
    const auto pts = random_matrix(40, 6, 99);
    const auto a = fit_pca(pts, 0.9);
    const auto b = fit_pca(pts, 0.9);
    CHECK((a.components.array() == b.components.array()).all());
    CHECK((a.mean.array() == b.mean.array()).all());
    for (int c = 0; c < a.r; ++c) {
        Eigen::Index at = 0;
        a.components.col(c).cwiseAbs().maxCoeff(&at);
        CHECK(a.components(at, c) > 0.0);
    }
}
