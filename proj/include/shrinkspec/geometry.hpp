#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shrinkspec {

// Simplicial hypersurface in R^{n+1} with per-vertex unit normals.
// The orientation convention is fixed once: nu points outward from the
// enclosed region Omega, and H = 1/2 <x,nu> is positive on the round sphere.
struct ShrinkerMesh {
    int dim_n = 0;                 // intrinsic dimension n
    Eigen::MatrixXd vertices;      // V x (n+1)
    Eigen::MatrixXi simplices;     // S x (n+1)
    Eigen::MatrixXd normals;       // V x (n+1), unit
    std::string kind = "custom";   // sphere | cylinder | plane | custom
    std::optional<double> truncation_radius;

    int num_vertices() const { return static_cast<int>(vertices.rows()); }
    int num_simplices() const { return static_cast<int>(simplices.rows()); }
    int ambient_dim() const { return dim_n + 1; }
};

// Exact parameters of the canonical profiles. The radii are pinned by the
// shrinker equation: a sphere of radius r has H = n/r and 1/2 <x,nu> = r/2,
// so r = sqrt(2n); the cylinder sphere factor has radius sqrt(2k).
struct ProfileGeometry {
    std::string kind;
    double sphere_radius = 0.0;    // sqrt(2n) for spheres
    int cylinder_k = 0;            // sphere factor dimension
    double cylinder_radius = 0.0;  // sqrt(2k)
    double half_length = 0.0;      // axial half-length for cylinders
    double disc_radius = 0.0;      // for planes

    static ProfileGeometry sphere(int n) {
        ProfileGeometry p;
        p.kind = "sphere";
        p.sphere_radius = std::sqrt(2.0 * n);
        return p;
    }
    static ProfileGeometry cylinder(int k, double L) {
        ProfileGeometry p;
        p.kind = "cylinder";
        p.cylinder_k = k;
        p.cylinder_radius = std::sqrt(2.0 * k);
        p.half_length = L;
        return p;
    }
    static ProfileGeometry plane(double R) {
        ProfileGeometry p;
        p.kind = "plane";
        p.disc_radius = R;
        return p;
    }
};

namespace meshdetail {

// n-volume of a simplex with vertex rows X ((d+1) x D), via the Gram matrix.
inline double simplex_volume(const Eigen::MatrixXd& X) {
    const int d = static_cast<int>(X.rows()) - 1;
    Eigen::MatrixXd E(d, X.cols());
    for (int i = 0; i < d; ++i) E.row(i) = X.row(i + 1) - X.row(0);
    const Eigen::MatrixXd G = E * E.transpose();
    double det = G.determinant();
    if (det <= 0.0) return 0.0;
    double fact = 1.0;
    for (int i = 2; i <= d; ++i) fact *= i;
    return std::sqrt(det) / fact;
}

}  // namespace meshdetail

inline double max_edge_length(const ShrinkerMesh& mesh) {
    double h = 0.0;
    for (int s = 0; s < mesh.num_simplices(); ++s) {
        const int k = static_cast<int>(mesh.simplices.cols());
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j)
                h = std::max(h, (mesh.vertices.row(mesh.simplices(s, i)) -
                                 mesh.vertices.row(mesh.simplices(s, j)))
                                    .norm());
    }
    return h;
}

// Vertices on the truncation boundary of a noncompact profile (cylinder rims,
// disc rim, segment endpoints). Closed surfaces have none. Detected as
// vertices incident to a facet shared by exactly one simplex.
inline std::vector<bool> boundary_vertices(const ShrinkerMesh& mesh) {
    std::vector<bool> on_boundary(mesh.num_vertices(), false);
    if (mesh.dim_n == 1) {
        std::vector<int> degree(mesh.num_vertices(), 0);
        for (int s = 0; s < mesh.num_simplices(); ++s) {
            ++degree[mesh.simplices(s, 0)];
            ++degree[mesh.simplices(s, 1)];
        }
        for (int v = 0; v < mesh.num_vertices(); ++v)
            if (degree[v] < 2) on_boundary[v] = true;
    } else {
        std::map<std::pair<int, int>, int> edge_count;
        for (int s = 0; s < mesh.num_simplices(); ++s) {
            for (int e = 0; e < 3; ++e) {
                int a = mesh.simplices(s, e);
                int b = mesh.simplices(s, (e + 1) % 3);
                if (a > b) std::swap(a, b);
                ++edge_count[{a, b}];
            }
        }
        for (const auto& [edge, cnt] : edge_count) {
            if (cnt == 1) {
                on_boundary[edge.first] = true;
                on_boundary[edge.second] = true;
            }
        }
    }
    return on_boundary;
}

// x^tan = x - <x,nu> nu.
inline Eigen::VectorXd tangential_part(const Eigen::VectorXd& x, const Eigen::VectorXd& nu) {
    return x - x.dot(nu) * nu;
}

// --- canonical mesh generators -------------------------------------------

// Circle S^1(sqrt(2)) as a regular polygon with 8 * 2^refine segments, or
// the icosphere S^2(2). Normals point outward from the enclosed region.
inline ShrinkerMesh make_sphere(int n, int refine) {
    if (refine < 0) throw std::invalid_argument("refine must be >= 0");
    ShrinkerMesh mesh;
    mesh.dim_n = n;
    mesh.kind = "sphere";
    if (n == 1) {
        const int N = 8 << refine;
        const double r = std::sqrt(2.0);
        mesh.vertices.resize(N, 2);
        mesh.normals.resize(N, 2);
        mesh.simplices.resize(N, 2);
        for (int i = 0; i < N; ++i) {
            const double th = 2.0 * M_PI * i / N;
            mesh.vertices.row(i) << r * std::cos(th), r * std::sin(th);
            mesh.normals.row(i) << std::cos(th), std::sin(th);
            mesh.simplices.row(i) << i, (i + 1) % N;
        }
    } else if (n == 2) {
        // icosahedron subdivided `refine` times, projected to radius 2
        const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
        std::vector<Eigen::Vector3d> verts = {
            {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
            {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
            {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
        std::vector<std::array<int, 3>> faces = {
            {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
            {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
            {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
            {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
        const double radius = 2.0;
        for (auto& v : verts) v = radius * v.normalized();
        for (int level = 0; level < refine; ++level) {
            std::map<std::pair<int, int>, int> midpoint;
            auto mid = [&](int a, int b) {
                auto key = std::minmax(a, b);
                auto it = midpoint.find(key);
                if (it != midpoint.end()) return it->second;
                Eigen::Vector3d m = radius * (verts[a] + verts[b]).normalized();
                verts.push_back(m);
                int idx = static_cast<int>(verts.size()) - 1;
                midpoint[key] = idx;
                return idx;
            };
            std::vector<std::array<int, 3>> next;
            next.reserve(faces.size() * 4);
            for (const auto& f : faces) {
                const int ab = mid(f[0], f[1]);
                const int bc = mid(f[1], f[2]);
                const int ca = mid(f[2], f[0]);
                next.push_back({f[0], ab, ca});
                next.push_back({f[1], bc, ab});
                next.push_back({f[2], ca, bc});
                next.push_back({ab, bc, ca});
            }
            faces = std::move(next);
        }
        mesh.vertices.resize(static_cast<int>(verts.size()), 3);
        mesh.normals.resize(static_cast<int>(verts.size()), 3);
        for (int i = 0; i < static_cast<int>(verts.size()); ++i) {
            mesh.vertices.row(i) = verts[i];
            mesh.normals.row(i) = verts[i].normalized();
        }
        mesh.simplices.resize(static_cast<int>(faces.size()), 3);
        for (int i = 0; i < static_cast<int>(faces.size()); ++i)
            mesh.simplices.row(i) << faces[i][0], faces[i][1], faces[i][2];
    } else {
        throw std::invalid_argument("make_sphere: only n = 1 and n = 2 are supported");
    }
    return mesh;
}

// Cylinder S^1(sqrt(2)) x [-L, L] in R^3. Normals are radial (outward from
// the enclosed solid cylinder).
inline ShrinkerMesh make_cylinder(int k, int n, double half_length, int refine) {
    if (!(k == 1 && n == 2))
        throw std::invalid_argument("make_cylinder: only k = 1, n = 2 is supported");
    if (half_length <= 0.0) throw std::invalid_argument("make_cylinder: half_length must be > 0");
    if (refine < 0) throw std::invalid_argument("refine must be >= 0");
    const double r = std::sqrt(2.0);
    const int n_theta = 16 << refine;
    const double target = 2.0 * M_PI * r / n_theta;  // circumferential spacing
    const int n_z = std::max(2, static_cast<int>(std::ceil(2.0 * half_length / target)));
    ShrinkerMesh mesh;
    mesh.dim_n = 2;
    mesh.kind = "cylinder";
    mesh.truncation_radius = std::sqrt(2.0 + half_length * half_length);
    const int nv = n_theta * (n_z + 1);
    mesh.vertices.resize(nv, 3);
    mesh.normals.resize(nv, 3);
    for (int j = 0; j <= n_z; ++j) {
        const double z = -half_length + 2.0 * half_length * j / n_z;
        for (int i = 0; i < n_theta; ++i) {
            const double th = 2.0 * M_PI * i / n_theta;
            const int v = j * n_theta + i;
            mesh.vertices.row(v) << r * std::cos(th), r * std::sin(th), z;
            mesh.normals.row(v) << std::cos(th), std::sin(th), 0.0;
        }
    }
    mesh.simplices.resize(2 * n_theta * n_z, 3);
    int s = 0;
    for (int j = 0; j < n_z; ++j) {
        for (int i = 0; i < n_theta; ++i) {
            const int a = j * n_theta + i;
            const int b = j * n_theta + (i + 1) % n_theta;
            const int c = (j + 1) * n_theta + i;
            const int d = (j + 1) * n_theta + (i + 1) % n_theta;
            // outward orientation: counterclockwise seen from outside
            mesh.simplices.row(s++) << a, b, d;
            mesh.simplices.row(s++) << a, d, c;
        }
    }
    return mesh;
}

// Flat shrinker through the origin: segment [-R, R] on the x-axis (n = 1)
// or a triangulated disc of radius R in the plane x_3 = 0 (n = 2).
inline ShrinkerMesh make_plane(int n, double disc_radius, int refine) {
    if (disc_radius <= 0.0) throw std::invalid_argument("make_plane: radius must be > 0");
    if (refine < 0) throw std::invalid_argument("refine must be >= 0");
    ShrinkerMesh mesh;
    mesh.dim_n = n;
    mesh.kind = "plane";
    mesh.truncation_radius = disc_radius;
    if (n == 1) {
        const int N = 16 << refine;  // intervals
        mesh.vertices.resize(N + 1, 2);
        mesh.normals.resize(N + 1, 2);
        mesh.simplices.resize(N, 2);
        for (int i = 0; i <= N; ++i) {
            mesh.vertices.row(i) << -disc_radius + 2.0 * disc_radius * i / N, 0.0;
            mesh.normals.row(i) << 0.0, 1.0;
        }
        for (int i = 0; i < N; ++i) mesh.simplices.row(i) << i, i + 1;
    } else if (n == 2) {
        // concentric rings with a constant angular count
        const int A = 16 << refine;          // angular segments
        const int K = std::max(2, A / 6);    // rings, roughly isotropic spacing
        std::vector<Eigen::Vector3d> verts;
        verts.emplace_back(0.0, 0.0, 0.0);
        for (int kk = 1; kk <= K; ++kk) {
            const double rr = disc_radius * kk / K;
            for (int i = 0; i < A; ++i) {
                const double th = 2.0 * M_PI * i / A;
                verts.emplace_back(rr * std::cos(th), rr * std::sin(th), 0.0);
            }
        }
        std::vector<std::array<int, 3>> faces;
        auto ring = [&](int kk, int i) { return 1 + (kk - 1) * A + (i % A); };
        for (int i = 0; i < A; ++i) faces.push_back({0, ring(1, i), ring(1, i + 1)});
        for (int kk = 1; kk < K; ++kk) {
            for (int i = 0; i < A; ++i) {
                const int a = ring(kk, i), b = ring(kk, i + 1);
                const int c = ring(kk + 1, i), d = ring(kk + 1, i + 1);
                faces.push_back({a, d, b});
                faces.push_back({a, c, d});
            }
        }
        mesh.vertices.resize(static_cast<int>(verts.size()), 3);
        mesh.normals.resize(static_cast<int>(verts.size()), 3);
        for (int i = 0; i < static_cast<int>(verts.size()); ++i) {
            mesh.vertices.row(i) = verts[i];
            mesh.normals.row(i) << 0.0, 0.0, 1.0;
        }
        mesh.simplices.resize(static_cast<int>(faces.size()), 3);
        for (int i = 0; i < static_cast<int>(faces.size()); ++i)
            mesh.simplices.row(i) << faces[i][0], faces[i][1], faces[i][2];
    } else {
        throw std::invalid_argument("make_plane: only n = 1 and n = 2 are supported");
    }
    return mesh;
}

// --- discrete mean curvature and the shrinker residual -------------------

// Per-vertex H_discrete - 1/2 <x,nu>. Boundary vertices of truncated meshes
// carry no reliable curvature estimate and report 0; use boundary_vertices()
// to mask them.
inline Eigen::VectorXd shrinker_residual(const ShrinkerMesh& mesh) {
    const int V = mesh.num_vertices();
    Eigen::VectorXd res = Eigen::VectorXd::Zero(V);
    const auto on_boundary = boundary_vertices(mesh);
    if (mesh.dim_n == 1) {
        // turning-angle curvature: H = -<(T2 - T1)/ell, nu>
        std::vector<std::array<int, 2>> nbr(V, {-1, -1});
        for (int s = 0; s < mesh.num_simplices(); ++s) {
            const int a = mesh.simplices(s, 0), b = mesh.simplices(s, 1);
            nbr[b][0] = a;  // predecessor of b
            nbr[a][1] = b;  // successor of a
        }
        for (int v = 0; v < V; ++v) {
            if (on_boundary[v] || nbr[v][0] < 0 || nbr[v][1] < 0) continue;
            const Eigen::Vector2d xp = mesh.vertices.row(nbr[v][0]);
            const Eigen::Vector2d x = mesh.vertices.row(v);
            const Eigen::Vector2d xn = mesh.vertices.row(nbr[v][1]);
            const Eigen::Vector2d e1 = x - xp, e2 = xn - x;
            const Eigen::Vector2d t1 = e1.normalized(), t2 = e2.normalized();
            const double ell = 0.5 * (e1.norm() + e2.norm());
            const Eigen::Vector2d nu = mesh.normals.row(v);
            const double H = -((t2 - t1) / ell).dot(nu);
            res[v] = H - 0.5 * mesh.vertices.row(v).dot(mesh.normals.row(v));
        }
    } else if (mesh.dim_n == 2) {
        // cotangent mean curvature: H = -<(1/A_i) sum_j w_ij (x_j - x_i), nu_i>
        Eigen::VectorXd area = Eigen::VectorXd::Zero(V);
        Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(V, 3);
        for (int s = 0; s < mesh.num_simplices(); ++s) {
            const int i0 = mesh.simplices(s, 0), i1 = mesh.simplices(s, 1), i2 = mesh.simplices(s, 2);
            const Eigen::Vector3d p0 = mesh.vertices.row(i0);
            const Eigen::Vector3d p1 = mesh.vertices.row(i1);
            const Eigen::Vector3d p2 = mesh.vertices.row(i2);
            const double A = 0.5 * ((p1 - p0).cross(p2 - p0)).norm();
            if (A <= 0.0) throw std::runtime_error("shrinker_residual: degenerate triangle");
            // mixed Voronoi area (Meyer et al.): needed for pointwise accuracy
            // at irregular-valence vertices
            const std::array<int, 3> idx = {i0, i1, i2};
            const std::array<Eigen::Vector3d, 3> p = {p0, p1, p2};
            std::array<double, 3> cota;
            bool obtuse = false;
            int obtuse_at = -1;
            for (int k = 0; k < 3; ++k) {
                const Eigen::Vector3d u = p[(k + 1) % 3] - p[k];
                const Eigen::Vector3d w = p[(k + 2) % 3] - p[k];
                const double d = u.dot(w);
                cota[k] = d / u.cross(w).norm();
                if (d < 0.0) {
                    obtuse = true;
                    obtuse_at = k;
                }
            }
            if (!obtuse) {
                for (int k = 0; k < 3; ++k) {
                    const double l2a = (p[(k + 1) % 3] - p[k]).squaredNorm();
                    const double l2b = (p[(k + 2) % 3] - p[k]).squaredNorm();
                    area[idx[k]] += (l2a * cota[(k + 2) % 3] + l2b * cota[(k + 1) % 3]) / 8.0;
                }
            } else {
                for (int k = 0; k < 3; ++k)
                    area[idx[k]] += (k == obtuse_at) ? A / 2.0 : A / 4.0;
            }
            auto accumulate = [&](int a, int b, int opp) {
                const Eigen::Vector3d pa = mesh.vertices.row(a);
                const Eigen::Vector3d pb = mesh.vertices.row(b);
                const Eigen::Vector3d po = mesh.vertices.row(opp);
                const Eigen::Vector3d u = pa - po, w = pb - po;
                const double cot = u.dot(w) / u.cross(w).norm();
                lap.row(a) += 0.5 * cot * (pb - pa).transpose();
                lap.row(b) += 0.5 * cot * (pa - pb).transpose();
            };
            accumulate(i0, i1, i2);
            accumulate(i1, i2, i0);
            accumulate(i2, i0, i1);
        }
        for (int v = 0; v < V; ++v) {
            if (on_boundary[v]) continue;
            const Eigen::Vector3d L = lap.row(v) / area[v];
            const double H = -L.dot(mesh.normals.row(v));
            res[v] = H - 0.5 * mesh.vertices.row(v).dot(mesh.normals.row(v));
        }
    } else {
        throw std::invalid_argument("shrinker_residual: only n = 1, 2 are supported");
    }
    return res;
}

// Discretization-consistency gate for canonical kinds: the continuum surface
// solves the shrinker equation exactly, so the discrete residual must be
// bounded by C h.
inline constexpr double kResidualGateConstant = 0.5;

inline bool residual_clean(const ShrinkerMesh& mesh) {
    if (mesh.kind == "custom") return false;
    const double h = max_edge_length(mesh);
    return shrinker_residual(mesh).cwiseAbs().maxCoeff() <= kResidualGateConstant * h;
}

// Mesh validity: nondegenerate simplices, unit normals.
inline void validate_mesh(const ShrinkerMesh& mesh) {
    if (mesh.vertices.cols() != mesh.dim_n + 1)
        throw std::invalid_argument("mesh: vertex dimension must be n + 1");
    if (mesh.simplices.cols() != mesh.dim_n + 1)
        throw std::invalid_argument("mesh: simplices must have n + 1 vertices");
    for (int s = 0; s < mesh.num_simplices(); ++s) {
        Eigen::MatrixXd X(mesh.dim_n + 1, mesh.dim_n + 1);
        for (int i = 0; i <= mesh.dim_n; ++i) X.row(i) = mesh.vertices.row(mesh.simplices(s, i));
        if (meshdetail::simplex_volume(X) <= 0.0)
            throw std::invalid_argument("mesh: degenerate simplex " + std::to_string(s));
    }
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (std::abs(mesh.normals.row(v).norm() - 1.0) > 1e-12)
            throw std::invalid_argument("mesh: non-unit normal at vertex " + std::to_string(v));
    }
}

// Flip the global orientation (swaps the roles of Omega and Omega-tilde).
inline ShrinkerMesh flip_orientation(const ShrinkerMesh& mesh) {
    ShrinkerMesh flipped = mesh;
    flipped.normals = -mesh.normals;
    for (int s = 0; s < mesh.num_simplices(); ++s)
        std::swap(flipped.simplices(s, 0), flipped.simplices(s, 1));
    return flipped;
}

}  // namespace shrinkspec
