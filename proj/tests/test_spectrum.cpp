#include <doctest.h>

#include <cmath>

#include "shrinkspec/spectrum.hpp"

using namespace shrinkspec;

TEST_CASE("circle spectrum matches the fourier values m^2 / 2") {
    const auto mesh = make_sphere(1, 6);  // 512 segments
    const auto ops = assemble_surface_forms(mesh);
    const auto res = spectrum_k(ops, 4);
    CHECK(std::abs(res.eigenvalues(0) - 0.5) <= 5e-4);
    CHECK(std::abs(res.eigenvalues(1) - 0.5) <= 5e-4);
    CHECK(std::abs(res.eigenvalues(2) - 2.0) <= 5e-3);
    CHECK(std::abs(res.eigenvalues(3) - 2.0) <= 5e-3);
    const auto clusters = cluster_multiplicities(res.eigenvalues, 1e-4);
    REQUIRE(clusters.size() == 2);
    CHECK(clusters[0] == 2);
    CHECK(clusters[1] == 2);
    for (int i = 0; i < res.count(); ++i) {
        CHECK(res.residuals(i) <= 1e-8);
        CHECK(res.mean_violations(i) <= 1e-10);
        CHECK(res.norm_violations(i) <= 1e-10);
    }
    CHECK(std::is_sorted(res.eigenvalues.begin(), res.eigenvalues.end()));
}

TEST_CASE("lanczos path agrees with the dense oracle") {
    const auto ops = assemble_surface_forms(make_sphere(1, 6));
    SolverOptions dense_opts;  // 512 dofs stays on the dense path
    const auto dense = spectrum_k(ops, 4, dense_opts);
    SolverOptions iter_opts;
    iter_opts.dense_threshold = 0;
    const auto iter = spectrum_k(ops, 4, iter_opts);
    for (int i = 0; i < 4; ++i)
        CHECK(iter.eigenvalues(i) == doctest::Approx(dense.eigenvalues(i)).epsilon(1e-9));
}

TEST_CASE("sphere spectrum: l(l+1)/4 with multiplicity 3") {
    const auto ops = assemble_surface_forms(make_sphere(2, 3));  // 642 vertices
    const auto res = spectrum_k(ops, 3);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(res.eigenvalues(i) - 0.5) <= 1e-2);
    CHECK(cluster_multiplicities(res.eigenvalues, 1e-2).front() == 3);
}

TEST_CASE("plane segment reproduces the hermite spectrum m / 2") {
    const auto ops = assemble_surface_forms(make_plane(1, 8.0, 5));  // 512 intervals
    const auto res = spectrum_k(ops, 3);
    CHECK(std::abs(res.eigenvalues(0) - 0.5) <= 1e-2);
    CHECK(std::abs(res.eigenvalues(1) - 1.0) <= 1e-2);
    CHECK(std::abs(res.eigenvalues(2) - 1.5) <= 1e-2);
}

TEST_CASE("unconstrained diagnostic finds the constant kernel") {
    const auto ops = assemble_surface_forms(make_sphere(1, 5));
    SolverOptions opts;
    opts.unconstrained = true;
    const auto res = spectrum_k(ops, 2, opts);
    CHECK(std::abs(res.eigenvalues(0)) <= 1e-10);
    const Eigen::VectorXd f0 = res.eigenvectors.col(0);
    CHECK((f0 - f0.mean() * Eigen::VectorXd::Ones(f0.size())).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("rayleigh quotient consistency") {
    const auto ops = assemble_surface_forms(make_sphere(1, 6));
    const auto res = first_eigenpair(ops);
    CHECK(std::abs(rayleigh_quotient(ops, res.eigenvectors.col(0)) - res.eigenvalues(0)) <= 1e-10);
    CHECK(std::abs(rayleigh_quotient(ops, Eigen::VectorXd::Ones(ops.size()))) <= 1e-12);
    CHECK_THROWS(rayleigh_quotient(ops, Eigen::VectorXd::Zero(ops.size())));
}

TEST_CASE("mean-zero projection") {
    const auto mesh = make_sphere(1, 5);
    const auto ops = assemble_surface_forms(mesh);
    const int n = ops.size();
    SUBCASE("a mean-zero vector is unchanged and the map is idempotent") {
        Eigen::VectorXd f(n);
        for (int v = 0; v < n; ++v) f(v) = std::sin(2.0 * M_PI * v / n);
        const Eigen::VectorXd p1 = mean_zero_project(ops, f);
        CHECK(std::abs(ops.m.dot(p1)) <= 1e-12);
        CHECK((mean_zero_project(ops, p1) - p1).cwiseAbs().maxCoeff() <= 1e-13);
    }
    SUBCASE("constants project to zero") {
        const Eigen::VectorXd c = 3.7 * Eigen::VectorXd::Ones(n);
        CHECK(mean_zero_project(ops, c).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("subtracted constant vanishes once the cutoff covers the mesh") {
        // mesh extent is sqrt(2); for j >= 2 the plateau covers everything
        Eigen::VectorXd g(n);
        for (int v = 0; v < n; ++v) g(v) = mesh.vertices(v, 0);
        const Eigen::VectorXd gz = mean_zero_project(ops, g);
        const auto rows = truncation_study(mesh, ops, gz, {1, 2, 4});
        CHECK(std::abs(rows[2].subtracted_mean) <= 1e-14);
    }
}

TEST_CASE("truncation study on the cylinder") {
    const auto mesh = make_cylinder(1, 2, 8.0, 1);
    const auto ops = assemble_surface_forms(mesh);
    const auto eig = first_eigenpair(ops);
    const Eigen::VectorXd g = eig.eigenvectors.col(0);
    const auto rows = truncation_study(mesh, ops, g, {2, 4, 6, 8, 12});
    for (const auto& row : rows) CHECK(row.quotient >= 0.25);
    // j = 12 > mesh extent sqrt(2 + 64): eta identically 1
    CHECK(rows.back().quotient ==
          doctest::Approx(rayleigh_quotient(ops, g)).epsilon(1e-12));
    // quotients settle towards the untruncated value
    const double target = rayleigh_quotient(ops, g);
    CHECK(std::abs(rows[3].quotient - target) <= 1e-6);
    double prev = std::abs(rows[0].quotient - target);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double gap = std::abs(rows[i].quotient - target);
        CHECK(gap <= prev + 1e-12);
        prev = gap;
    }
}

TEST_CASE("theorem gate: lambda_1 >= 1/4 across the canonical fleet") {
    std::vector<ShrinkerMesh> fleet = {make_sphere(1, 4), make_sphere(1, 6), make_sphere(2, 2),
                                       make_sphere(2, 3), make_plane(1, 8.0, 4),
                                       make_plane(2, 8.0, 3), make_cylinder(1, 2, 8.0, 1)};
    for (const auto& mesh : fleet) {
        REQUIRE(residual_clean(mesh));
        const auto eig = first_eigenpair(assemble_surface_forms(mesh));
        CHECK(eig.eigenvalues(0) >= 0.25);
    }
}

TEST_CASE("lambda_1 error shrinks by about 4x per refinement") {
    std::vector<double> lams;
    for (int refine : {3, 4, 5, 6})
        lams.push_back(first_eigenpair(assemble_surface_forms(make_sphere(1, refine)))
                           .eigenvalues(0));
    const double d1 = std::abs(lams[0] - lams[1]);
    const double d2 = std::abs(lams[1] - lams[2]);
    const double d3 = std::abs(lams[2] - lams[3]);
    CHECK(d1 / d2 > 3.0);
    CHECK(d1 / d2 < 5.0);
    CHECK(d2 / d3 > 3.0);
    CHECK(d2 / d3 < 5.0);
}

TEST_CASE("adding a constant does not move the projected quotient") {
    const auto ops = assemble_surface_forms(make_sphere(1, 5));
    const int n = ops.size();
    Eigen::VectorXd f(n);
    for (int v = 0; v < n; ++v) f(v) = std::cos(4.0 * M_PI * v / n) + 0.1 * std::sin(2.0 * M_PI * v / n);
    const Eigen::VectorXd base = mean_zero_project(ops, f);
    const Eigen::VectorXd shifted = mean_zero_project(ops, f + 5.0 * Eigen::VectorXd::Ones(n));
    CHECK(std::abs(rayleigh_quotient(ops, base) - rayleigh_quotient(ops, shifted)) <= 1e-10);
}

TEST_CASE("lambda_1 is invariant under rotations of the mesh") {
    const auto mesh = make_sphere(2, 2);
    const double lam = first_eigenpair(assemble_surface_forms(mesh)).eigenvalues(0);
    Eigen::Matrix3d Q =
        Eigen::AngleAxisd(0.4, Eigen::Vector3d(1.0, 1.0, 1.0).normalized()).toRotationMatrix();
    ShrinkerMesh rotated = mesh;
    rotated.vertices = mesh.vertices * Q.transpose();
    rotated.normals = mesh.normals * Q.transpose();
    const double lam_rot = first_eigenpair(assemble_surface_forms(rotated)).eigenvalues(0);
    CHECK(std::abs(lam - lam_rot) <= 1e-10);
}

TEST_CASE("invalid eigensolver inputs are rejected") {
    const auto ops = assemble_surface_forms(make_sphere(1, 3));
    CHECK_THROWS_AS(spectrum_k(ops, 0), std::invalid_argument);
    CHECK_THROWS_AS(spectrum_k(ops, ops.size()), std::invalid_argument);
}
