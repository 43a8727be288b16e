#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "shrinkspec/ambient.hpp"
#include "shrinkspec/geometry.hpp"
#include "shrinkspec/quadrature.hpp"

namespace shrinkspec {

// The Gaussian density rho(x) = exp(-|x|^2 / 4) weighting every integral.
struct GaussianWeight {
    template <typename Derived>
    double operator()(const Eigen::MatrixBase<Derived>& x) const {
        return std::exp(-x.squaredNorm() / 4.0);
    }
};

enum class DomainTag { Surface, AmbientOmega, AmbientTilde, AmbientBoth };

// Weighted P1 nodal forms on a simplicial mesh:
//   K_ij = int rho <grad phi_i, grad phi_j>
//   M_ij = int rho phi_i phi_j
//   m_i  = int rho phi_i
// K annihilates constants; m equals M * 1.
struct WeightedOperatorSet {
    Eigen::SparseMatrix<double> K;
    Eigen::SparseMatrix<double> M;
    Eigen::VectorXd m;
    DomainTag domain_tag = DomainTag::Surface;

    int size() const { return static_cast<int>(m.size()); }
    double weighted_volume() const { return m.sum(); }
};

namespace femdetail {

// P1 gradients and measure of a d-simplex embedded in R^D (d <= D).
// Row i of `grads` is grad phi_{i+1}; grad phi_0 = -sum of rows.
struct ElementGeometry {
    Eigen::MatrixXd grads;  // d x D
    double volume = 0.0;
};

inline ElementGeometry element_geometry(const Eigen::MatrixXd& X) {
    const int d = static_cast<int>(X.rows()) - 1;
    const int D = static_cast<int>(X.cols());
    Eigen::MatrixXd E(d, D);
    for (int i = 0; i < d; ++i) E.row(i) = X.row(i + 1) - X.row(0);
    const Eigen::MatrixXd G = E * E.transpose();
    const double det = G.determinant();
    if (det <= 0.0) throw std::runtime_error("assembly: degenerate simplex");
    ElementGeometry eg;
    eg.grads = G.llt().solve(E);
    double fact = 1.0;
    for (int i = 2; i <= d; ++i) fact *= i;
    eg.volume = std::sqrt(det) / fact;
    return eg;
}

inline WeightedOperatorSet assemble(const Eigen::MatrixXd& vertices,
                                    const Eigen::MatrixXi& elements,
                                    const std::vector<int>& element_ids, int quad_order,
                                    DomainTag tag) {
    if (quad_order < 1) throw std::invalid_argument("assembly: quad_order must be >= 1");
    const int nv = static_cast<int>(vertices.rows());
    const int d = static_cast<int>(elements.cols()) - 1;
    const SimplexRule& rule = simplex_rule(d, quad_order);
    const GaussianWeight rho;

    std::vector<Eigen::Triplet<double>> tk, tm;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(nv);
    Eigen::MatrixXd X(d + 1, vertices.cols());
    for (int e : element_ids) {
        for (int i = 0; i <= d; ++i) X.row(i) = vertices.row(elements(e, i));
        const ElementGeometry eg = element_geometry(X);
        Eigen::MatrixXd grads(d + 1, vertices.cols());
        grads.row(0) = -eg.grads.colwise().sum();
        grads.bottomRows(d) = eg.grads;

        double wrho = 0.0;                                       // int_e rho / vol
        Eigen::MatrixXd Me = Eigen::MatrixXd::Zero(d + 1, d + 1);
        Eigen::VectorXd me = Eigen::VectorXd::Zero(d + 1);
        for (int q = 0; q < rule.points.rows(); ++q) {
            const Eigen::VectorXd xq = X.transpose() * rule.points.row(q).transpose();
            const double w = rule.weights(q) * rho(xq);
            wrho += w;
            for (int i = 0; i <= d; ++i) {
                me(i) += w * rule.points(q, i);
                for (int j = 0; j <= d; ++j)
                    Me(i, j) += w * rule.points(q, i) * rule.points(q, j);
            }
        }
        for (int i = 0; i <= d; ++i) {
            const int gi = elements(e, i);
            m(gi) += eg.volume * me(i);
            for (int j = 0; j <= d; ++j) {
                const int gj = elements(e, j);
                tk.emplace_back(gi, gj, eg.volume * wrho * grads.row(i).dot(grads.row(j)));
                tm.emplace_back(gi, gj, eg.volume * Me(i, j));
            }
        }
    }
    WeightedOperatorSet ops;
    ops.domain_tag = tag;
    ops.K.resize(nv, nv);
    ops.M.resize(nv, nv);
    ops.K.setFromTriplets(tk.begin(), tk.end());
    ops.M.setFromTriplets(tm.begin(), tm.end());
    ops.m = std::move(m);
    return ops;
}

}  // namespace femdetail

inline WeightedOperatorSet assemble_surface_forms(const ShrinkerMesh& mesh, int quad_order = 4) {
    std::vector<int> ids(mesh.num_simplices());
    for (int i = 0; i < mesh.num_simplices(); ++i) ids[i] = i;
    return femdetail::assemble(mesh.vertices, mesh.simplices, ids, quad_order,
                               DomainTag::Surface);
}

inline WeightedOperatorSet assemble_ambient_forms(const AmbientMesh& mesh, DomainTag region,
                                                  int quad_order = 4) {
    std::vector<int> ids;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const bool in_omega = mesh.region[c] == Region::Omega;
        switch (region) {
            case DomainTag::AmbientOmega:
                if (in_omega) ids.push_back(c);
                break;
            case DomainTag::AmbientTilde:
                if (!in_omega) ids.push_back(c);
                break;
            case DomainTag::AmbientBoth:
                ids.push_back(c);
                break;
            default:
                throw std::invalid_argument("assemble_ambient_forms: bad region tag");
        }
    }
    return femdetail::assemble(mesh.vertices, mesh.cells, ids, quad_order, region);
}

inline double weighted_area(const ShrinkerMesh& mesh, int quad_order = 4) {
    return assemble_surface_forms(mesh, quad_order).weighted_volume();
}

// --- exact clipped areas -------------------------------------------------

namespace clipdetail {

// Signed area of (polygon intersect disc of radius r centered at origin),
// accumulated edge by edge: interior pieces contribute triangle areas with
// the center, exterior pieces contribute circular sectors.
inline double polygon_disc_area(const std::vector<Eigen::Vector2d>& poly, double r) {
    const int n = static_cast<int>(poly.size());
    double area = 0.0;
    auto sector = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        const double ang = std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
        return 0.5 * r * r * ang;
    };
    auto triangle = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return 0.5 * (a.x() * b.y() - a.y() * b.x());
    };
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d a = poly[i];
        const Eigen::Vector2d b = poly[(i + 1) % n];
        const Eigen::Vector2d d = b - a;
        // circle crossings: |a + t d|^2 = r^2
        std::vector<double> ts = {0.0, 1.0};
        const double A = d.squaredNorm();
        const double B = 2.0 * a.dot(d);
        const double C = a.squaredNorm() - r * r;
        const double disc = B * B - 4.0 * A * C;
        if (disc > 0.0 && A > 0.0) {
            const double s = std::sqrt(disc);
            for (double t : {(-B - s) / (2.0 * A), (-B + s) / (2.0 * A)})
                if (t > 0.0 && t < 1.0) ts.push_back(t);
        }
        std::sort(ts.begin(), ts.end());
        for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
            const Eigen::Vector2d p = a + ts[k] * d;
            const Eigen::Vector2d q = a + ts[k + 1] * d;
            const Eigen::Vector2d mid = a + 0.5 * (ts[k] + ts[k + 1]) * d;
            if (mid.norm() <= r)
                area += triangle(p, q);
            else
                area += sector(p, q);
        }
    }
    return std::abs(area);
}

// Measure of (simplex intersect ball B_r(0)) for segments and triangles.
inline double clipped_simplex_measure(const Eigen::MatrixXd& X, double r) {
    const int d = static_cast<int>(X.rows()) - 1;
    if (d == 1) {
        const Eigen::VectorXd a = X.row(0), dd = (X.row(1) - X.row(0)).transpose();
        const double A = dd.squaredNorm();
        const double B = 2.0 * a.dot(dd);
        const double C = a.squaredNorm() - r * r;
        const double disc = B * B - 4.0 * A * C;
        if (disc <= 0.0) return 0.0;
        const double s = std::sqrt(disc);
        const double t0 = std::clamp((-B - s) / (2.0 * A), 0.0, 1.0);
        const double t1 = std::clamp((-B + s) / (2.0 * A), 0.0, 1.0);
        return (t1 - t0) * std::sqrt(A);
    }
    if (d == 2) {
        // the ball cuts the triangle's plane in a disc around the foot point
        const Eigen::VectorXd p0 = X.row(0);
        Eigen::MatrixXd E(2, X.cols());
        E.row(0) = X.row(1) - X.row(0);
        E.row(1) = X.row(2) - X.row(0);
        Eigen::MatrixXd B = E.transpose();  // D x 2 basis
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
        Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(X.cols(), 2);
        // foot of the origin on the plane
        const Eigen::VectorXd rel = -p0;
        const Eigen::Vector2d foot2 = Q.transpose() * rel;
        const Eigen::VectorXd foot = p0 + Q * foot2;
        const double dist2 = foot.squaredNorm();
        if (dist2 >= r * r) return 0.0;
        const double re = std::sqrt(r * r - dist2);
        std::vector<Eigen::Vector2d> poly;
        for (int i = 0; i < 3; ++i) {
            const Eigen::VectorXd xi = X.row(i).transpose();
            poly.emplace_back(Q.transpose() * (xi - foot));
        }
        return polygon_disc_area(poly, re);
    }
    throw std::invalid_argument("clipped_simplex_measure: unsupported dimension");
}

}  // namespace clipdetail

// Unweighted area of M intersected with B_r(0).
inline double clipped_area(const ShrinkerMesh& mesh, double r) {
    if (r <= 0.0) throw std::invalid_argument("clipped_area: r must be > 0");
    double area = 0.0;
    Eigen::MatrixXd X(mesh.dim_n + 1, mesh.ambient_dim());
    for (int s = 0; s < mesh.num_simplices(); ++s) {
        for (int i = 0; i <= mesh.dim_n; ++i) X.row(i) = mesh.vertices.row(mesh.simplices(s, i));
        area += clipdetail::clipped_simplex_measure(X, r);
    }
    return area;
}

// Rows (r, area(M cap B_r) / r^n), the polynomial area-growth diagnostic.
inline std::vector<std::pair<double, double>> area_growth_ratio(
    const ShrinkerMesh& mesh, const std::vector<double>& radii) {
    std::vector<std::pair<double, double>> out;
    out.reserve(radii.size());
    for (double r : radii)
        out.emplace_back(r, clipped_area(mesh, r) / std::pow(r, mesh.dim_n));
    return out;
}

// --- cutoff family -------------------------------------------------------

// eta_j(x) = beta(|x|^2 / j^2) with a fixed C^2 profile: beta = 1 on [0,1],
// a decreasing quintic in s = (t-1)/3 on [1,4], 0 beyond.
struct CutoffFamily {
    int j;

    explicit CutoffFamily(int scale) : j(scale) {
        if (scale < 1) throw std::invalid_argument("CutoffFamily: j must be >= 1");
    }

    static double beta(double t) {
        if (t <= 1.0) return 1.0;
        if (t >= 4.0) return 0.0;
        const double s = (t - 1.0) / 3.0;
        return 1.0 - s * s * s * (6.0 * s * s - 15.0 * s + 10.0);
    }
    static double beta_prime(double t) {
        if (t <= 1.0 || t >= 4.0) return 0.0;
        const double s = (t - 1.0) / 3.0;
        return -10.0 * s * s * (1.0 - s) * (1.0 - s);
    }

    template <typename Derived>
    double value(const Eigen::MatrixBase<Derived>& x) const {
        return beta(x.squaredNorm() / (double(j) * j));
    }
    template <typename Derived>
    Eigen::VectorXd gradient(const Eigen::MatrixBase<Derived>& x) const {
        const double jj = double(j) * j;
        return beta_prime(x.squaredNorm() / jj) * (2.0 / jj) * x;
    }
};

struct CutoffValues {
    Eigen::VectorXd eta;        // per vertex
    Eigen::MatrixXd grad_eta;   // per simplex, tangential on surfaces
};

// Vertex values of eta_j and per-simplex gradients; on a surface the
// gradient is projected onto the simplex plane (grad^M eta_j).
inline CutoffValues cutoff_values(int j, const ShrinkerMesh& mesh) {
    const CutoffFamily eta(j);
    CutoffValues out;
    out.eta.resize(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v)
        out.eta[v] = eta.value(mesh.vertices.row(v).transpose());
    out.grad_eta.resize(mesh.num_simplices(), mesh.ambient_dim());
    Eigen::MatrixXd X(mesh.dim_n + 1, mesh.ambient_dim());
    for (int s = 0; s < mesh.num_simplices(); ++s) {
        for (int i = 0; i <= mesh.dim_n; ++i) X.row(i) = mesh.vertices.row(mesh.simplices(s, i));
        // analytic gradient at the centroid, projected onto the simplex plane;
        // this keeps <x, grad eta_j> <= 0 exact (it equals
        // 2 j^-2 |x^tan|^2 beta' <= 0)
        const Eigen::VectorXd xc = X.colwise().mean().transpose();
        Eigen::MatrixXd E(mesh.dim_n, mesh.ambient_dim());
        for (int i = 0; i < mesh.dim_n; ++i) E.row(i) = X.row(i + 1) - X.row(0);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(E.transpose());
        const Eigen::MatrixXd Q =
            qr.householderQ() * Eigen::MatrixXd::Identity(mesh.ambient_dim(), mesh.dim_n);
        out.grad_eta.row(s) = (Q * (Q.transpose() * eta.gradient(xc))).transpose();
    }
    return out;
}

}  // namespace shrinkspec
