#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "shrinkspec/geometry.hpp"

namespace shrinkspec {

enum class Region { Omega, OmegaTilde };

// Conforming simplicial mesh of the ball B_R(0), split by a surface into the
// two components Omega (the side the surface normal points away from) and
// OmegaTilde. Interface vertices are shared with the surface mesh.
struct AmbientMesh {
    int dim = 0;                      // n + 1
    Eigen::MatrixXd vertices;         // V x dim
    Eigen::MatrixXi cells;            // C x (dim + 1)
    std::vector<Region> region;       // per cell
    std::vector<int> interface_map;   // surface vertex -> ambient vertex
    std::vector<int> outer_boundary;  // ambient vertices with |x| = R
    double ball_radius = 0.0;

    int num_vertices() const { return static_cast<int>(vertices.rows()); }
    int num_cells() const { return static_cast<int>(cells.rows()); }
};

namespace meshdetail {

inline void orient_cell(Eigen::MatrixXd const& V, Eigen::MatrixXi& cells, int c) {
    const int d = static_cast<int>(cells.cols()) - 1;
    Eigen::MatrixXd E(d, d);
    for (int i = 0; i < d; ++i)
        E.row(i) = V.row(cells(c, i + 1)) - V.row(cells(c, 0));
    if (E.determinant() < 0.0) std::swap(cells(c, 0), cells(c, 1));
}

}  // namespace meshdetail

// --- circle in a disc ----------------------------------------------------

inline AmbientMesh build_ambient_disc(const ShrinkerMesh& surface, double R) {
    const int N = surface.num_vertices();
    const double rs = surface.vertices.row(0).norm();
    if (rs >= R) throw std::invalid_argument("build_ambient_mesh: surface does not fit in B_R");
    const double h = 2.0 * M_PI * rs / N;
    const int K_in = std::max(2, static_cast<int>(std::lround(rs / h)));
    const int K_out = std::max(1, static_cast<int>(std::lround((R - rs) / h)));

    AmbientMesh amb;
    amb.dim = 2;
    amb.ball_radius = R;
    std::vector<Eigen::Vector2d> verts;
    // ring radii from center outward; ring index -> first vertex id (or center)
    std::vector<double> radii;
    for (int k = K_in - 1; k >= 1; --k) radii.push_back(rs * (1.0 - double(k) / K_in));
    radii.push_back(rs);  // interface ring
    for (int k = 1; k <= K_out; ++k) radii.push_back(rs + (R - rs) * double(k) / K_out);
    const int interface_ring = K_in - 1;

    const int center = 0;
    verts.emplace_back(0.0, 0.0);
    std::vector<int> ring_start(radii.size());
    for (std::size_t rix = 0; rix < radii.size(); ++rix) {
        ring_start[rix] = static_cast<int>(verts.size());
        for (int i = 0; i < N; ++i) {
            const double th = 2.0 * M_PI * i / N;
            verts.emplace_back(radii[rix] * std::cos(th), radii[rix] * std::sin(th));
        }
    }
    amb.vertices.resize(static_cast<int>(verts.size()), 2);
    for (int i = 0; i < static_cast<int>(verts.size()); ++i) amb.vertices.row(i) = verts[i];

    amb.interface_map.resize(N);
    for (int i = 0; i < N; ++i) amb.interface_map[i] = ring_start[interface_ring] + i;
    for (int i = 0; i < N; ++i) amb.outer_boundary.push_back(ring_start.back() + i);

    std::vector<std::array<int, 3>> cells;
    std::vector<Region> region;
    auto rv = [&](int rix, int i) { return ring_start[rix] + (i % N); };
    // center fan (innermost ring)
    for (int i = 0; i < N; ++i) {
        cells.push_back({center, rv(0, i), rv(0, i + 1)});
        region.push_back(Region::Omega);
    }
    for (std::size_t rix = 0; rix + 1 < radii.size(); ++rix) {
        const Region reg = (static_cast<int>(rix) < interface_ring) ? Region::Omega : Region::OmegaTilde;
        for (int i = 0; i < N; ++i) {
            const int a = rv(rix, i), b = rv(rix, i + 1);
            const int c = rv(rix + 1, i), d = rv(rix + 1, i + 1);
            cells.push_back({a, d, b});
            region.push_back(reg);
            cells.push_back({a, c, d});
            region.push_back(reg);
        }
    }
    amb.cells.resize(static_cast<int>(cells.size()), 3);
    for (int c = 0; c < static_cast<int>(cells.size()); ++c)
        amb.cells.row(c) << cells[c][0], cells[c][1], cells[c][2];
    amb.region = std::move(region);
    for (int c = 0; c < amb.num_cells(); ++c) meshdetail::orient_cell(amb.vertices, amb.cells, c);
    return amb;
}

// --- segment in a disc (flat n = 1 shrinker) -----------------------------

inline AmbientMesh build_ambient_halfdiscs(const ShrinkerMesh& surface, double R) {
    const int Nv = surface.num_vertices();
    const double xl = surface.vertices(0, 0), xr = surface.vertices(Nv - 1, 0);
    if (std::abs(std::abs(xl) - R) > 1e-12 || std::abs(std::abs(xr) - R) > 1e-12)
        throw std::invalid_argument(
            "build_ambient_mesh: segment endpoints must lie on the ball boundary");
    const int K = std::max(2, (Nv - 1) / 2);  // vertical layers per half

    AmbientMesh amb;
    amb.dim = 2;
    amb.ball_radius = R;
    std::vector<Eigen::Vector2d> verts;
    for (int i = 0; i < Nv; ++i)
        verts.emplace_back(surface.vertices(i, 0), surface.vertices(i, 1));
    amb.interface_map.resize(Nv);
    for (int i = 0; i < Nv; ++i) amb.interface_map[i] = i;

    // grid(i, k, side): vertex over interior segment vertex i at layer k,
    // side +1 above, -1 below; layer K lies on the circle
    auto column_height = [&](int i) {
        const double x = surface.vertices(i, 0);
        return std::sqrt(std::max(0.0, R * R - x * x));
    };
    std::map<std::array<int, 3>, int> grid;
    for (int side : {+1, -1}) {
        for (int i = 1; i + 1 < Nv; ++i) {
            const double x = surface.vertices(i, 0);
            const double H = column_height(i);
            for (int k = 1; k <= K; ++k) {
                verts.emplace_back(x, side * H * double(k) / K);
                grid[{i, k, side}] = static_cast<int>(verts.size()) - 1;
            }
        }
    }
    auto gv = [&](int i, int k, int side) -> int {
        if (k == 0) return i;  // the segment vertex itself
        return grid.at({i, k, side});
    };
    amb.vertices.resize(static_cast<int>(verts.size()), 2);
    for (int i = 0; i < static_cast<int>(verts.size()); ++i) amb.vertices.row(i) = verts[i];

    std::vector<std::array<int, 3>> cells;
    std::vector<Region> region;
    for (int side : {+1, -1}) {
        // surface normal is +e2, so Omega is the lower half
        const Region reg = (side > 0) ? Region::OmegaTilde : Region::Omega;
        for (int i = 1; i + 2 < Nv; ++i) {
            for (int k = 0; k < K; ++k) {
                const int a = gv(i, k, side), b = gv(i + 1, k, side);
                const int c = gv(i, k + 1, side), d = gv(i + 1, k + 1, side);
                cells.push_back({a, b, d});
                region.push_back(reg);
                cells.push_back({a, d, c});
                region.push_back(reg);
            }
        }
        // fans at both endpoints
        for (int k = 0; k < K; ++k) {
            cells.push_back({0, gv(1, k, side), gv(1, k + 1, side)});
            region.push_back(reg);
            cells.push_back({Nv - 1, gv(Nv - 2, k + 1, side), gv(Nv - 2, k, side)});
            region.push_back(reg);
        }
        for (int i = 1; i + 1 < Nv; ++i) amb.outer_boundary.push_back(gv(i, K, side));
    }
    amb.outer_boundary.push_back(0);
    amb.outer_boundary.push_back(Nv - 1);
    amb.cells.resize(static_cast<int>(cells.size()), 3);
    for (int c = 0; c < static_cast<int>(cells.size()); ++c)
        amb.cells.row(c) << cells[c][0], cells[c][1], cells[c][2];
    amb.region = std::move(region);
    for (int c = 0; c < amb.num_cells(); ++c) meshdetail::orient_cell(amb.vertices, amb.cells, c);
    return amb;
}

// --- sphere in a ball ----------------------------------------------------

namespace meshdetail {

// Split the prism between corresponding triangles of two radial layers into
// three tetrahedra. The diagonal of every quad face is chosen from the
// ordering of the bottom global indices, which neighboring prisms agree on,
// so the decomposition is conforming.
inline void split_prism(const std::array<int, 3>& bottom, const std::array<int, 3>& top,
                        std::vector<std::array<int, 4>>& out) {
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return bottom[a] < bottom[b]; });
    const int a0 = bottom[order[0]], a1 = bottom[order[1]], a2 = bottom[order[2]];
    const int b0 = top[order[0]], b1 = top[order[1]], b2 = top[order[2]];
    out.push_back({a0, a1, a2, b0});
    out.push_back({a1, a2, b0, b1});
    out.push_back({a2, b0, b1, b2});
}

}  // namespace meshdetail

inline AmbientMesh build_ambient_ball(const ShrinkerMesh& surface, double R) {
    const int V = surface.num_vertices();
    const int F = surface.num_simplices();
    const double rs = surface.vertices.row(0).norm();
    if (rs >= R) throw std::invalid_argument("build_ambient_mesh: surface does not fit in B_R");
    const double h = max_edge_length(surface);
    // interior layers at spacing h/2: keeps at least four vertices on every
    // radial column even on coarse icospheres
    const int K_in = std::max(4, static_cast<int>(std::lround(2.0 * rs / h)));
    const int K_out = std::max(1, static_cast<int>(std::lround((R - rs) / h)));

    AmbientMesh amb;
    amb.dim = 3;
    amb.ball_radius = R;
    std::vector<double> radii;
    for (int k = K_in - 1; k >= 1; --k) radii.push_back(rs * (1.0 - double(k) / K_in));
    radii.push_back(rs);
    for (int k = 1; k <= K_out; ++k) radii.push_back(rs + (R - rs) * double(k) / K_out);
    const int interface_layer = K_in - 1;
    const int L = static_cast<int>(radii.size());

    amb.vertices.resize(1 + L * V, 3);
    amb.vertices.row(0).setZero();  // center
    for (int l = 0; l < L; ++l) {
        const double scale = radii[l] / rs;
        for (int v = 0; v < V; ++v)
            amb.vertices.row(1 + l * V + v) = scale * surface.vertices.row(v);
    }
    auto lv = [&](int l, int v) { return 1 + l * V + v; };
    amb.interface_map.resize(V);
    for (int v = 0; v < V; ++v) amb.interface_map[v] = lv(interface_layer, v);
    for (int v = 0; v < V; ++v) amb.outer_boundary.push_back(lv(L - 1, v));

    std::vector<std::array<int, 4>> cells;
    std::vector<Region> region;
    // cone from the center to the innermost layer
    for (int f = 0; f < F; ++f) {
        cells.push_back({0, lv(0, surface.simplices(f, 0)), lv(0, surface.simplices(f, 1)),
                         lv(0, surface.simplices(f, 2))});
        region.push_back(Region::Omega);
    }
    for (int l = 0; l + 1 < L; ++l) {
        const Region reg = (l < interface_layer) ? Region::Omega : Region::OmegaTilde;
        for (int f = 0; f < F; ++f) {
            const std::array<int, 3> bottom = {lv(l, surface.simplices(f, 0)),
                                               lv(l, surface.simplices(f, 1)),
                                               lv(l, surface.simplices(f, 2))};
            const std::array<int, 3> top = {lv(l + 1, surface.simplices(f, 0)),
                                            lv(l + 1, surface.simplices(f, 1)),
                                            lv(l + 1, surface.simplices(f, 2))};
            const std::size_t before = cells.size();
            meshdetail::split_prism(bottom, top, cells);
            for (std::size_t c = before; c < cells.size(); ++c) region.push_back(reg);
        }
    }
    amb.cells.resize(static_cast<int>(cells.size()), 4);
    for (int c = 0; c < static_cast<int>(cells.size()); ++c)
        amb.cells.row(c) << cells[c][0], cells[c][1], cells[c][2], cells[c][3];
    amb.region = std::move(region);
    for (int c = 0; c < amb.num_cells(); ++c) meshdetail::orient_cell(amb.vertices, amb.cells, c);
    return amb;
}

// Dispatch on the surface type. Supported pairings: circle or icosphere in a
// ball, and the flat n = 1 segment between half discs.
inline AmbientMesh build_ambient_mesh(const ShrinkerMesh& surface, double ball_radius) {
    if (surface.kind == "sphere" && surface.dim_n == 1)
        return build_ambient_disc(surface, ball_radius);
    if (surface.kind == "sphere" && surface.dim_n == 2)
        return build_ambient_ball(surface, ball_radius);
    if (surface.kind == "plane" && surface.dim_n == 1)
        return build_ambient_halfdiscs(surface, ball_radius);
    throw std::invalid_argument(
        "build_ambient_mesh: unsupported surface kind '" + surface.kind +
        "' for n = " + std::to_string(surface.dim_n));
}

// Every surface simplex must appear as a facet of exactly one Omega cell and
// one OmegaTilde cell (segment interfaces in 2d tolerate boundary-touching
// endpoints, where a facet can bound cells of one region only at the rim).
inline bool check_interface_conformity(const AmbientMesh& amb, const ShrinkerMesh& surface) {
    std::map<std::vector<int>, std::pair<int, int>> facet_count;  // (omega, tilde)
    for (int s = 0; s < surface.num_simplices(); ++s) {
        std::vector<int> key;
        for (int i = 0; i < surface.simplices.cols(); ++i)
            key.push_back(amb.interface_map[surface.simplices(s, i)]);
        std::sort(key.begin(), key.end());
        facet_count[key] = {0, 0};
    }
    const int d = amb.dim;
    for (int c = 0; c < amb.num_cells(); ++c) {
        for (int drop = 0; drop <= d; ++drop) {
            std::vector<int> key;
            for (int i = 0; i <= d; ++i)
                if (i != drop) key.push_back(amb.cells(c, i));
            std::sort(key.begin(), key.end());
            auto it = facet_count.find(key);
            if (it == facet_count.end()) continue;
            if (amb.region[c] == Region::Omega)
                ++it->second.first;
            else
                ++it->second.second;
        }
    }
    for (const auto& [key, cnt] : facet_count)
        if (cnt.first != 1 || cnt.second != 1) return false;
    return true;
}

}  // namespace shrinkspec
