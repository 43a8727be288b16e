#include <doctest.h>

#include <cmath>

#include "shrinkspec/spectrum.hpp"
#include "shrinkspec/weighted_forms.hpp"

using namespace shrinkspec;

namespace {

double symmetry_defect(const Eigen::SparseMatrix<double>& A) {
    const Eigen::SparseMatrix<double> D = Eigen::SparseMatrix<double>(A.transpose()) - A;
    double mx = 0.0, scale = 0.0;
    for (int k = 0; k < D.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(D, k); it; ++it)
            mx = std::max(mx, std::abs(it.value()));
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
            scale = std::max(scale, std::abs(it.value()));
    return mx / std::max(scale, 1e-300);
}

// midpoint-rule oracle for the Gaussian volume of R^d truncated at R
double gaussian_volume_oracle(int d, double R) {
    const int N = 20000;
    double total = 0.0;
    for (int i = 0; i < N; ++i) {
        const double r = R * (i + 0.5) / N;
        const double shell = (d == 2) ? 2.0 * M_PI * r : 4.0 * M_PI * r * r;
        total += shell * std::exp(-r * r / 4.0) * (R / N);
    }
    return total;
}

}  // namespace

TEST_CASE("gaussian weight basics") {
    GaussianWeight rho;
    CHECK(rho(Eigen::Vector2d(0, 0)) == 1.0);
    CHECK(rho(Eigen::Vector2d(1, 1)) < rho(Eigen::Vector2d(0.5, 0.5)));
    CHECK(rho(Eigen::Vector3d(9, 0, 0)) > 0.0);
}

TEST_CASE("circle mass diagonal equals weight times local arc thirds") {
    const auto mesh = make_sphere(1, 4);  // 128 segments
    const auto ops = assemble_surface_forms(mesh);
    const double w = std::exp(-0.5);
    const double chord = (mesh.vertices.row(1) - mesh.vertices.row(0)).norm();
    for (int v = 0; v < mesh.num_vertices(); ++v)
        CHECK(ops.M.coeff(v, v) == doctest::Approx(w * 2.0 * chord / 3.0).epsilon(1e-3));
}

TEST_CASE("constants are annihilated by the stiffness form") {
    for (const auto& mesh : {make_sphere(1, 5), make_sphere(2, 2), make_plane(2, 8.0, 2)}) {
        const auto ops = assemble_surface_forms(mesh);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(ops.size());
        CHECK(std::abs(ones.dot(ops.K * ones)) <= 1e-12 * ops.K.coeffs().cwiseAbs().sum());
        CHECK((ops.K * ones).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("circle weighted length matches the closed form") {
    const auto ops = assemble_surface_forms(make_sphere(1, 6));  // 512 segments
    const double exact = 2.0 * std::sqrt(2.0) * M_PI * std::exp(-0.5);
    CHECK(std::abs(ops.m.sum() - exact) / exact <= 1e-4);
    CHECK(ops.m.sum() == doctest::Approx(5.3895).epsilon(1e-4));
}

TEST_CASE("m equals M applied to the constant vector") {
    const auto ops = assemble_surface_forms(make_sphere(2, 2));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(ops.size());
    CHECK((ops.m - ops.M * ones).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("operator symmetry and definiteness") {
    for (const auto& mesh : {make_sphere(1, 4), make_sphere(2, 2), make_cylinder(1, 2, 4.0, 0)}) {
        const auto ops = assemble_surface_forms(mesh);
        CHECK(symmetry_defect(ops.K) <= 1e-14);
        CHECK(symmetry_defect(ops.M) <= 1e-14);
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(ops.M);
        REQUIRE(ldlt.info() == Eigen::Success);
        CHECK(ldlt.vectorD().minCoeff() > 0.0);  // M positive definite
        Eigen::SparseMatrix<double> Kreg = ops.K;
        CHECK(Eigen::VectorXd(ops.K.diagonal()).minCoeff() >= 0.0);
    }
}

TEST_CASE("ambient disc forms: constant energy and gaussian volume") {
    const auto surf = make_sphere(1, 4);
    const auto amb = build_ambient_mesh(surf, 6.0);
    const auto ops = assemble_ambient_forms(amb, DomainTag::AmbientBoth);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(ops.size());
    CHECK(std::abs(ones.dot(ops.K * ones)) <= 1e-10);
    const double oracle = gaussian_volume_oracle(2, 6.0);  // ~ 4 pi
    CHECK(std::abs(ops.m.sum() - oracle) / oracle <= 1e-3);
    CHECK(std::abs(ops.m.sum() - 4.0 * M_PI) / (4.0 * M_PI) <= 1e-3);
    // region split adds up
    const auto in = assemble_ambient_forms(amb, DomainTag::AmbientOmega);
    const auto out = assemble_ambient_forms(amb, DomainTag::AmbientTilde);
    CHECK(std::abs(in.m.sum() + out.m.sum() - ops.m.sum()) <= 1e-12);
}

TEST_CASE("ambient ball forms reach the 3d gaussian volume") {
    const auto surf = make_sphere(2, 2);
    const auto amb = build_ambient_mesh(surf, 6.0);
    const auto ops = assemble_ambient_forms(amb, DomainTag::AmbientBoth);
    const double oracle = gaussian_volume_oracle(3, 6.0);  // ~ (4 pi)^{3/2}
    CHECK(std::abs(oracle - std::pow(4.0 * M_PI, 1.5)) / oracle <= 1e-3);
    CHECK(std::abs(ops.m.sum() - oracle) / oracle <= 1e-2);
}

TEST_CASE("weighted areas of the canonical shrinkers") {
    CHECK(weighted_area(make_sphere(1, 6)) ==
          doctest::Approx(2.0 * std::sqrt(2.0) * M_PI * std::exp(-0.5)).epsilon(1e-4));
    CHECK(weighted_area(make_sphere(2, 4)) ==
          doctest::Approx(16.0 * M_PI * std::exp(-1.0)).epsilon(1e-3));
    CHECK(weighted_area(make_plane(2, 8.0, 4)) ==
          doctest::Approx(4.0 * M_PI * (1.0 - std::exp(-16.0))).epsilon(1e-3));
}

TEST_CASE("area growth ratios") {
    SUBCASE("plane: ratio is pi for every radius") {
        const auto mesh = make_plane(2, 8.0, 4);
        for (const auto& [r, ratio] : area_growth_ratio(mesh, {1.0, 2.0, 4.0, 6.0, 8.0}))
            CHECK(ratio == doctest::Approx(M_PI).epsilon(2e-3));
    }
    SUBCASE("circle: full circle gives 2 pi sqrt(2) / r beyond r = 2") {
        const auto mesh = make_sphere(1, 6);
        double prev = 1e30;
        for (const auto& [r, ratio] : area_growth_ratio(mesh, {2.0, 3.0, 5.0, 8.0})) {
            CHECK(ratio == doctest::Approx(2.0 * M_PI * std::sqrt(2.0) / r).epsilon(1e-4));
            CHECK(ratio < prev);
            prev = ratio;
        }
    }
    SUBCASE("cylinder: ratio bounded by the clipped lateral-area constant") {
        const auto mesh = make_cylinder(1, 2, 8.0, 2);
        for (const auto& [r, ratio] : area_growth_ratio(mesh, {2.0, 3.0, 5.0, 8.0})) {
            // analytic clipped lateral area: 2 pi sqrt(2) * 2 min(L, sqrt(r^2-2))
            const double exact =
                2.0 * M_PI * std::sqrt(2.0) * 2.0 * std::min(8.0, std::sqrt(r * r - 2.0)) /
                (r * r);
            CHECK(ratio == doctest::Approx(exact).epsilon(5e-3));
            CHECK(ratio <= 4.0 * M_PI);  // sup over r of the analytic ratio
        }
    }
    SUBCASE("nonpositive radius rejected") {
        CHECK_THROWS_AS(clipped_area(make_sphere(1, 3), -1.0), std::invalid_argument);
    }
}

TEST_CASE("clipped triangle area agrees with a grid oracle") {
    Eigen::MatrixXd X(3, 3);
    X << 0.4, 0.1, 0.3, 2.0, 0.5, 0.4, 0.7, 1.9, -0.2;
    const double r = 1.5;
    // oracle: dense barycentric sampling
    const int G = 400;
    int inside = 0, total = 0;
    for (int i = 0; i < G; ++i)
        for (int j = 0; j < G - i; ++j) {
            const double l1 = (i + 0.5) / G, l2 = (j + 0.5) / G;
            const Eigen::Vector3d p = (1 - l1 - l2) * X.row(0).transpose() +
                                      l1 * X.row(1).transpose() + l2 * X.row(2).transpose();
            ++total;
            if (p.norm() <= r) ++inside;
        }
    Eigen::Matrix3d E;
    E.row(0) = X.row(1) - X.row(0);
    E.row(1) = X.row(2) - X.row(0);
    const double full = 0.5 * (X.row(1) - X.row(0))
                                  .transpose()
                                  .head<3>()
                                  .cross((X.row(2) - X.row(0)).transpose().head<3>())
                                  .norm();
    const double oracle = full * inside / double(total);
    const double exact = clipdetail::clipped_simplex_measure(X, r);
    CHECK(exact == doctest::Approx(oracle).epsilon(5e-3));
}

TEST_CASE("cutoff family invariants") {
    const CutoffFamily eta(3);
    SUBCASE("plateau and support") {
        CHECK(eta.value(Eigen::Vector2d(1.5, 0.0)) == 1.0);  // |x| = j/2
        CHECK(eta.value(Eigen::Vector2d(9.0, 0.0)) == 0.0);  // |x| = 3j
        CHECK(eta.value(Eigen::Vector2d(3.0, 0.0)) == 1.0);  // |x| = j
        CHECK(eta.value(Eigen::Vector2d(6.0, 0.0)) == 0.0);  // |x| = 2j
    }
    SUBCASE("value at 1.5j matches the quintic profile") {
        const double t = 2.25, s = (t - 1.0) / 3.0;
        const double expected = 1.0 - s * s * s * (6.0 * s * s - 15.0 * s + 10.0);
        CHECK(eta.value(Eigen::Vector2d(4.5, 0.0)) == doctest::Approx(expected).epsilon(1e-15));
    }
    SUBCASE("radial derivative is never positive") {
        for (double x = 0.05; x < 10.0; x += 0.05) {
            const Eigen::Vector2d p(x, 0.3 * x);
            CHECK(p.dot(eta.gradient(p)) <= 0.0);
            CHECK(eta.value(p) >= 0.0);
            CHECK(eta.value(p) <= 1.0);
        }
    }
    SUBCASE("per-simplex tangential gradients satisfy the sign condition") {
        const auto mesh = make_cylinder(1, 2, 8.0, 1);
        const auto vals = cutoff_values(3, mesh);
        for (int s = 0; s < mesh.num_simplices(); ++s) {
            Eigen::Vector3d xc = Eigen::Vector3d::Zero();
            for (int i = 0; i < 3; ++i) xc += mesh.vertices.row(mesh.simplices(s, i)).transpose();
            xc /= 3.0;
            CHECK(xc.dot(vals.grad_eta.row(s).transpose()) <= 1e-14);
        }
        for (int v = 0; v < mesh.num_vertices(); ++v) {
            CHECK(vals.eta[v] >= 0.0);
            CHECK(vals.eta[v] <= 1.0);
        }
    }
}

TEST_CASE("rotating the mesh leaves the forms unchanged") {
    const auto mesh = make_sphere(2, 2);
    const auto ops = assemble_surface_forms(mesh);
    Eigen::Matrix3d Q =
        Eigen::AngleAxisd(1.1, Eigen::Vector3d(0.3, -1.0, 0.8).normalized()).toRotationMatrix();
    ShrinkerMesh rotated = mesh;
    rotated.vertices = mesh.vertices * Q.transpose();
    rotated.normals = mesh.normals * Q.transpose();
    const auto rops = assemble_surface_forms(rotated);
    CHECK((Eigen::MatrixXd(ops.K) - Eigen::MatrixXd(rops.K)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((Eigen::MatrixXd(ops.M) - Eigen::MatrixXd(rops.M)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((ops.m - rops.m).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("weighted mass never exceeds the unweighted mass") {
    const auto mesh = make_sphere(1, 4);
    const auto ops = assemble_surface_forms(mesh);
    // independent unweighted diagonal: sum of adjacent thirds
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        double unweighted = 0.0;
        for (int s = 0; s < mesh.num_simplices(); ++s)
            for (int i = 0; i < 2; ++i)
                if (mesh.simplices(s, i) == v)
                    unweighted += (mesh.vertices.row(mesh.simplices(s, 0)) -
                                   mesh.vertices.row(mesh.simplices(s, 1)))
                                      .norm() /
                                  3.0;
        CHECK(ops.M.coeff(v, v) <= unweighted + 1e-15);
    }
}

TEST_CASE("galerkin consistency: cos theta quotient converges to 1/2 at order 2") {
    std::vector<double> errs;
    for (int refine : {3, 4, 5}) {
        const auto mesh = make_sphere(1, refine);
        const auto ops = assemble_surface_forms(mesh);
        Eigen::VectorXd f(mesh.num_vertices());
        for (int v = 0; v < mesh.num_vertices(); ++v)
            f(v) = mesh.vertices(v, 0) / mesh.vertices.row(v).norm();
        errs.push_back(std::abs(rayleigh_quotient(ops, f) - 0.5));
    }
    CHECK(errs[0] / errs[1] > 3.0);
    CHECK(errs[1] / errs[2] > 3.0);
    CHECK(errs[2] <= 1e-4);
}

TEST_CASE("degenerate inputs are rejected") {
    ShrinkerMesh bad = make_sphere(1, 3);
    bad.vertices.row(1) = bad.vertices.row(0);
    CHECK_THROWS(assemble_surface_forms(bad));
    CHECK_THROWS_AS(assemble_surface_forms(make_sphere(1, 3), 0), std::invalid_argument);
}
