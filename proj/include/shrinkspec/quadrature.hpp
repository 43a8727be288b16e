#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace shrinkspec {

// Quadrature rule on the reference d-simplex, stored as barycentric
// coordinates with weights summing to 1 (scale by the simplex measure).
struct SimplexRule {
    Eigen::MatrixXd points;   // q x (d+1) barycentric coordinates
    Eigen::VectorXd weights;  // q, sums to 1
};

namespace detail {

inline SimplexRule segment_rule() {
    // 3-point Gauss-Legendre mapped to [0,1], exact through degree 5.
    const double s = std::sqrt(3.0 / 5.0);
    Eigen::Vector3d t((1.0 - s) / 2.0, 0.5, (1.0 + s) / 2.0);
    SimplexRule r;
    r.points.resize(3, 2);
    for (int q = 0; q < 3; ++q) {
        r.points(q, 0) = 1.0 - t[q];
        r.points(q, 1) = t[q];
    }
    r.weights.resize(3);
    r.weights << 5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0;
    return r;
}

inline SimplexRule triangle_rule() {
    // Dunavant 6-point rule, exact through degree 4.
    const double a = 0.445948490915965;
    const double b = 0.091576213509771;
    const double wa = 0.223381589678011;
    const double wb = 0.109951743655322;
    SimplexRule r;
    r.points.resize(6, 3);
    r.weights.resize(6);
    int row = 0;
    auto add = [&](double p, double w) {
        const double c[3] = {p, p, 1.0 - 2.0 * p};
        for (int k = 0; k < 3; ++k) {
            r.points(row, 0) = c[k % 3];
            r.points(row, 1) = c[(k + 1) % 3];
            r.points(row, 2) = c[(k + 2) % 3];
            r.weights(row) = w;
            ++row;
        }
    };
    add(a, wa);
    add(b, wb);
    return r;
}

inline SimplexRule tetra_rule() {
    // Keast 14-point rule, exact through degree 5.
    const double b1 = 0.0927352503108912;
    const double b2 = 0.3108859192633005;
    const double f = 0.0455037041256497;
    SimplexRule r;
    r.points.resize(14, 4);
    r.weights.resize(14);
    int row = 0;
    auto add_perm3 = [&](double b, double w) {
        // points (b,b,b,1-3b) and permutations
        for (int hole = 0; hole < 4; ++hole) {
            for (int k = 0; k < 4; ++k) r.points(row, k) = (k == hole) ? 1.0 - 3.0 * b : b;
            r.weights(row) = w;
            ++row;
        }
    };
    add_perm3(b1, 0.0734930431163619);
    add_perm3(b2, 0.1126879257180162);
    // points (f,f,g,g) with g = 1/2 - f, 6 permutations
    const double g = 0.5 - f;
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            for (int k = 0; k < 4; ++k) r.points(row, k) = g;
            r.points(row, i) = f;
            r.points(row, j) = f;
            r.weights(row) = 0.0425460207770812;
            ++row;
        }
    }
    return r;
}

}  // namespace detail

// Rule for d-simplices integrating polynomials of degree >= `order`.
// The stored rules cover order <= 4 (segments/tets are degree-5 exact).
inline const SimplexRule& simplex_rule(int dim, int order = 4) {
    if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
    if (order > 5 || (dim == 2 && order > 4))
        throw std::invalid_argument("quadrature order not available");
    static const SimplexRule seg = detail::segment_rule();
    static const SimplexRule tri = detail::triangle_rule();
    static const SimplexRule tet = detail::tetra_rule();
    switch (dim) {
        case 1: return seg;
        case 2: return tri;
        case 3: return tet;
        default: throw std::invalid_argument("unsupported simplex dimension");
    }
}

}  // namespace shrinkspec
