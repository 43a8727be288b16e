#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "shrinkspec/coupled.hpp"
#include "shrinkspec/geometry.hpp"
#include "shrinkspec/weighted_forms.hpp"

namespace shrinkspec {

// Explicit constants for the weighted L2 bound
//   int rho |x|^2 f^2 <= C_grad int rho |grad f|^2 + C_loc int_{B_r0} f^2.
// Derivation: the integrated divergence inequality gives
//   int rho (|x|^2/4 - n) f^2 <= 4 int rho |grad f|^2.
// Split at |x|^2 = 8n, where |x|^2/4 - n >= |x|^2/8. Outside the ball,
//   int rho |x|^2 f^2 / 8 <= 4 int rho |grad f|^2 + n int_{B_r0} f^2
// (the inner deficit is at most n f^2 with rho <= 1); inside the ball,
//   int rho |x|^2 f^2 <= 8n int_{B_r0} f^2. Adding the pieces:
//   C_grad = 32, C_loc = 16n, r0 = sqrt(8n).
// The ambient bound is identical with n+1 in place of n.
inline constexpr double kLemmaGradientConstant = 32.0;
inline double lemma_local_constant(int n) { return 16.0 * n; }
inline double lemma_local_radius(int n) { return std::sqrt(8.0 * n); }

inline std::string mesh_label(const ShrinkerMesh& mesh) {
    return mesh.kind + "_n" + std::to_string(mesh.dim_n);
}

struct VerificationReport {
    std::string name;
    std::string inputs;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    bool fragile = false;
    std::vector<std::pair<double, double>> refinement_trace;  // (h, residual)
    std::map<std::string, double> details;
    std::vector<std::string> notes;
};

inline void finalize_report(VerificationReport& rep) {
    rep.pass = rep.residual <= rep.tolerance;
    rep.fragile = rep.pass && rep.residual > 0.1 * rep.tolerance;
}

inline nlohmann::ordered_json report_to_json(const VerificationReport& rep) {
    nlohmann::ordered_json out;
    out["name"] = rep.name;
    out["inputs"] = rep.inputs;
    out["residual"] = rep.residual;
    out["tolerance"] = rep.tolerance;
    out["pass"] = rep.pass;
    out["fragile"] = rep.fragile;
    out["refinement_trace"] = nlohmann::ordered_json::array();
    for (const auto& [h, r] : rep.refinement_trace)
        out["refinement_trace"].push_back({{"h", h}, {"residual", r}});
    out["details"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : rep.details) out["details"][k] = v;
    out["notes"] = rep.notes;
    return out;
}

inline std::string summary_table(std::vector<VerificationReport> reports) {
    std::sort(reports.begin(), reports.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
    std::ostringstream os;
    os.setf(std::ios::scientific);
    os.precision(3);
    std::size_t width = 4;
    for (const auto& r : reports) width = std::max(width, r.name.size());
    os << std::string(width, ' ') << "  residual    tolerance   status\n";
    for (const auto& r : reports) {
        os << r.name << std::string(width - r.name.size(), ' ') << "  " << r.residual << "   "
           << r.tolerance << "   " << (r.pass ? "pass" : "FAIL")
           << (r.fragile ? " (fragile)" : "") << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// interior identity on analytic weighted-harmonic functions

// An analytic solution of Delta u = <x, grad u> / 2, given by its gradient
// (hand-derived; the checker differentiates it by finite differences).
struct DriftHarmonicFamily {
    int ambient_dim = 1;
    std::string description;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    double singular_radius = 0.0;
};

inline DriftHarmonicFamily constant_family(int dim) {
    DriftHarmonicFamily fam;
    fam.ambient_dim = dim;
    fam.description = "constant";
    fam.gradient = [dim](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(dim); };
    return fam;
}

// u'(x) = e^{x^2/4} on the line: u'' = (x/2) e^{x^2/4} = x u' / 2
inline DriftHarmonicFamily exponential_family() {
    DriftHarmonicFamily fam;
    fam.ambient_dim = 1;
    fam.description = "1d_exponential";
    fam.gradient = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd g(1);
        g(0) = std::exp(0.25 * x(0) * x(0));
        return g;
    };
    return fam;
}

// u'(r) = r^{1-N} e^{r^2/4} in R^N: u'' + (N-1) u'/r = (r/2) u'
inline DriftHarmonicFamily radial_family(int ambient_dim) {
    if (ambient_dim < 2) throw std::invalid_argument("radial_family: dimension must be >= 2");
    DriftHarmonicFamily fam;
    fam.ambient_dim = ambient_dim;
    fam.description = "radial_" + std::to_string(ambient_dim) + "d";
    fam.singular_radius = 0.25;
    fam.gradient = [ambient_dim](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const double r = x.norm();
        return std::pow(r, -double(ambient_dim)) * std::exp(0.25 * r * r) * x;
    };
    return fam;
}

// Pointwise check of
//   div(rho grad(|grad u|^2)) / 2 = rho |D^2 u|^2 + rho |grad u|^2 / 2
// via 4th-order central differences of the analytic gradient.
inline VerificationReport check_interior_bochner(const DriftHarmonicFamily& u,
                                                 const Eigen::MatrixXd& sample_points,
                                                 double fd_step = 1e-3,
                                                 double tolerance = 1e-5) {
    const int d = u.ambient_dim;
    if (sample_points.cols() != d)
        throw std::invalid_argument("check_interior_bochner: point dimension mismatch");
    const double h = fd_step;
    const auto g2 = [&](const Eigen::VectorXd& x) { return u.gradient(x).squaredNorm(); };

    VerificationReport rep;
    rep.name = "interior_bochner_" + u.description;
    rep.inputs = u.description + ", " + std::to_string(sample_points.rows()) +
                 " points, fd_step " + std::to_string(fd_step);
    rep.tolerance = tolerance;
    double worst = 0.0;
    for (int p = 0; p < sample_points.rows(); ++p) {
        const Eigen::VectorXd x = sample_points.row(p).transpose();
        if (u.singular_radius > 0.0 && x.norm() < u.singular_radius + 4.0 * h)
            throw std::domain_error("check_interior_bochner: sample point near the singularity");
        double lap_g = 0.0, x_dot_grad_g = 0.0;
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
            e(i) = h;
            const double gp2 = g2(x + 2 * e), gp1 = g2(x + e), g0 = g2(x), gm1 = g2(x - e),
                         gm2 = g2(x - 2 * e);
            lap_g += (-gp2 + 16.0 * gp1 - 30.0 * g0 + 16.0 * gm1 - gm2) / (12.0 * h * h);
            x_dot_grad_g += x(i) * (-gp2 + 8.0 * gp1 - 8.0 * gm1 + gm2) / (12.0 * h);
            hess.col(i) = (-u.gradient(x + 2 * e) + 8.0 * u.gradient(x + e) -
                           8.0 * u.gradient(x - e) + u.gradient(x - 2 * e)) /
                          (12.0 * h);
        }
        hess = 0.5 * (hess + hess.transpose().eval());
        const double lhs = 0.5 * lap_g - 0.25 * x_dot_grad_g;
        const double rhs = hess.squaredNorm() + 0.5 * g2(x);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    rep.residual = worst;
    finalize_report(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// gradient and Hessian recovery for piecewise-linear ambient fields

namespace recdetail {

// volume-weighted average of element gradients at each vertex of the region
inline Eigen::MatrixXd recovered_gradients(const AmbientMesh& amb, const Eigen::VectorXd& u,
                                           const std::vector<int>& cells) {
    const int d = amb.dim;
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(amb.num_vertices(), d);
    Eigen::VectorXd wsum = Eigen::VectorXd::Zero(amb.num_vertices());
    Eigen::MatrixXd X(d + 1, d);
    for (int c : cells) {
        for (int i = 0; i <= d; ++i) X.row(i) = amb.vertices.row(amb.cells(c, i));
        const auto eg = femdetail::element_geometry(X);
        Eigen::MatrixXd grads(d + 1, d);
        grads.row(0) = -eg.grads.colwise().sum();
        grads.bottomRows(d) = eg.grads;
        Eigen::RowVectorXd gu = Eigen::RowVectorXd::Zero(d);
        for (int i = 0; i <= d; ++i) gu += u(amb.cells(c, i)) * grads.row(i);
        for (int i = 0; i <= d; ++i) {
            grad.row(amb.cells(c, i)) += eg.volume * gu;
            wsum(amb.cells(c, i)) += eg.volume;
        }
    }
    for (int v = 0; v < amb.num_vertices(); ++v)
        if (wsum(v) > 0.0) grad.row(v) /= wsum(v);
    return grad;
}

// Per-vertex Hessian by an affine least-squares fit of the recovered
// gradient over the two-ring neighborhood. Vertices excluded by sample_ok
// (one-sided boundary averages) still get a Hessian but contribute no
// samples.
inline std::vector<Eigen::MatrixXd> recovered_hessians(
    const AmbientMesh& amb, const Eigen::MatrixXd& grad, const std::vector<int>& cells,
    const std::vector<bool>* sample_ok = nullptr) {
    const int d = amb.dim;
    const int nv = amb.num_vertices();
    std::vector<std::vector<int>> ring(nv);
    std::vector<bool> active(nv, false);
    for (int c : cells)
        for (int i = 0; i <= d; ++i) {
            active[amb.cells(c, i)] = true;
            for (int j = 0; j <= d; ++j)
                if (i != j) ring[amb.cells(c, i)].push_back(amb.cells(c, j));
        }
    for (auto& r : ring) {
        std::sort(r.begin(), r.end());
        r.erase(std::unique(r.begin(), r.end()), r.end());
    }
    std::vector<Eigen::MatrixXd> hess(nv, Eigen::MatrixXd::Zero(d, d));
    for (int v = 0; v < nv; ++v) {
        if (!active[v]) continue;
        std::vector<int> patch = ring[v];
        patch.push_back(v);
        for (int w : ring[v]) patch.insert(patch.end(), ring[w].begin(), ring[w].end());
        std::sort(patch.begin(), patch.end());
        patch.erase(std::unique(patch.begin(), patch.end()), patch.end());
        if (sample_ok)
            patch.erase(std::remove_if(patch.begin(), patch.end(),
                                       [&](int w) { return !(*sample_ok)[w]; }),
                        patch.end());
        const int m = static_cast<int>(patch.size());
        if (m < d + 2) continue;
        Eigen::MatrixXd B(m, d + 1);  // affine model g ~ c + J dx
        Eigen::MatrixXd G(m, d);
        for (int i = 0; i < m; ++i) {
            B(i, 0) = 1.0;
            B.row(i).tail(d) = amb.vertices.row(patch[i]) - amb.vertices.row(v);
            G.row(i) = grad.row(patch[i]);
        }
        const Eigen::MatrixXd theta = B.colPivHouseholderQr().solve(G);
        const Eigen::MatrixXd J = theta.bottomRows(d);
        hess[v] = 0.5 * (J + J.transpose());
    }
    return hess;
}

inline std::vector<int> region_cells(const AmbientMesh& amb, Region region) {
    std::vector<int> cells;
    for (int c = 0; c < amb.num_cells(); ++c)
        if (amb.region[c] == region) cells.push_back(c);
    return cells;
}

inline std::vector<int> all_cells(const AmbientMesh& amb) {
    std::vector<int> cells(amb.num_cells());
    for (int c = 0; c < amb.num_cells(); ++c) cells[c] = c;
    return cells;
}

}  // namespace recdetail

// ---------------------------------------------------------------------------
// boundary Hessian identity: (D^2 u)(nu, nu) = -Lap_M f + <x_tan, grad_M f>/2

struct BoundaryHessianCase {
    ShrinkerMesh surface;
    AmbientMesh ambient;
    Eigen::VectorXd field;
};

namespace iddetail {

// Second derivative of u along the inward radial vertex column through x,
// from a one-sided cubic fit. The layered ambient meshes place interior
// vertices exactly on these rays; returns false when the column is missing.
inline bool radial_column_second_derivative(const AmbientMesh& amb, const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& x, double& out) {
    const double r_int = x.norm();
    const Eigen::VectorXd dir = x / r_int;
    std::vector<std::pair<double, double>> column;  // (radius, value)
    for (int v = 0; v < amb.num_vertices(); ++v) {
        const Eigen::VectorXd p = amb.vertices.row(v).transpose();
        const double r = p.dot(dir);
        if (r <= 1e-9 || r > r_int + 1e-9) continue;
        if ((p - r * dir).norm() > 1e-9 * std::max(1.0, r)) continue;
        column.emplace_back(r, u(v));
    }
    std::sort(column.begin(), column.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    if (column.size() < 4) return false;
    Eigen::Matrix4d V;
    Eigen::Vector4d rhs;
    for (int i = 0; i < 4; ++i) {
        const double dr = column[i].first - r_int;
        V.row(i) << 1.0, dr, dr * dr, dr * dr * dr;
        rhs(i) = column[i].second;
    }
    out = 2.0 * V.fullPivLu().solve(rhs)(2);
    return true;
}

inline std::pair<double, double> boundary_hessian_discrepancy(const BoundaryHessianCase& c) {
    const auto sol = drift_harmonic_solve(c.ambient, Region::Omega, c.field);
    const auto cells = recdetail::region_cells(c.ambient, Region::Omega);
    const auto grad = recdetail::recovered_gradients(c.ambient, sol.values, cells);
    std::vector<bool> sample_ok(c.ambient.num_vertices(), true);
    for (int a : c.ambient.interface_map) sample_ok[a] = false;
    const auto hess = recdetail::recovered_hessians(c.ambient, grad, cells, &sample_ok);
    const auto ops = assemble_surface_forms(c.surface);
    const Eigen::VectorXd surface_side = (ops.K * c.field).cwiseQuotient(ops.m);
    double num = 0.0, den = 0.0, total = 0.0;
    for (int v = 0; v < c.surface.num_vertices(); ++v) {
        const int a = c.ambient.interface_map[v];
        const Eigen::VectorXd nu = c.surface.normals.row(v).transpose();
        const Eigen::VectorXd x = c.surface.vertices.row(v).transpose();
        double rec;
        const bool radial = std::abs(std::abs(nu.dot(x)) - x.norm()) <= 1e-9 * x.norm();
        if (!radial || !radial_column_second_derivative(c.ambient, sol.values, x, rec))
            rec = nu.dot(hess[a] * nu);
        num += ops.m(v) * (rec - surface_side(v)) * (rec - surface_side(v));
        den += ops.m(v) * surface_side(v) * surface_side(v);
        total += ops.m(v);
    }
    const double disc = den > 1e-14 * total ? std::sqrt(num / den) : std::sqrt(num / total);
    return {max_edge_length(c.surface), disc};
}

inline void apply_decay_contract(VerificationReport& rep, double min_ratio) {
    for (std::size_t i = 1; i < rep.refinement_trace.size(); ++i) {
        const double prev = rep.refinement_trace[i - 1].second;
        const double cur = rep.refinement_trace[i].second;
        if (cur < 1e-10) continue;  // already at floor accuracy
        const double ratio = prev / cur;
        rep.details["decay_ratio_" + std::to_string(i)] = ratio;
        if (ratio < min_ratio) {
            rep.residual = std::numeric_limits<double>::infinity();
            rep.notes.push_back("decay ratio " + std::to_string(ratio) + " below " +
                                std::to_string(min_ratio) + " at level " + std::to_string(i));
        }
    }
}

}  // namespace iddetail

inline VerificationReport check_boundary_hessian(const std::vector<BoundaryHessianCase>& levels,
                                                 double min_decay_ratio = 1.5,
                                                 double tolerance = 0.2) {
    if (levels.empty()) throw std::invalid_argument("check_boundary_hessian: no cases");
    VerificationReport rep;
    rep.name = "boundary_hessian_" + mesh_label(levels.front().surface);
    rep.inputs = std::to_string(levels.size()) + " refinement levels of " +
                 mesh_label(levels.front().surface);
    rep.tolerance = tolerance;
    for (const auto& c : levels) {
        if (!residual_clean(c.surface))
            throw std::invalid_argument("check_boundary_hessian: surface is not residual-clean");
        rep.refinement_trace.push_back(iddetail::boundary_hessian_discrepancy(c));
    }
    rep.residual = rep.refinement_trace.back().second;
    iddetail::apply_decay_contract(rep, min_decay_ratio);
    finalize_report(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// divergence lemmas

namespace iddetail {

struct LemmaIntegrals {
    double coeff = 0.0;     // int rho (dim - |x|^2/4) eta^2 f^2
    double grad4 = 0.0;     // 4 int rho eta^2 |grad f|^2
    double x2 = 0.0;        // int rho |x|^2 f^2
    double grad = 0.0;      // int rho |grad f|^2
    double local = 0.0;     // int_{B_r0} f^2 (unweighted)
};

inline LemmaIntegrals lemma_integrals(const Eigen::MatrixXd& vertices,
                                      const Eigen::MatrixXi& elements,
                                      const std::vector<int>& ids, const Eigen::VectorXd& f,
                                      int j, int dim_coeff) {
    const int d = static_cast<int>(elements.cols()) - 1;
    const SimplexRule& rule = simplex_rule(d, 4);
    const GaussianWeight rho;
    const CutoffFamily eta(j);
    const double r0 = lemma_local_radius(dim_coeff);
    LemmaIntegrals out;
    Eigen::MatrixXd X(d + 1, vertices.cols());
    for (int e : ids) {
        for (int i = 0; i <= d; ++i) X.row(i) = vertices.row(elements(e, i));
        const auto eg = femdetail::element_geometry(X);
        Eigen::MatrixXd grads(d + 1, vertices.cols());
        grads.row(0) = -eg.grads.colwise().sum();
        grads.bottomRows(d) = eg.grads;
        Eigen::RowVectorXd gf = Eigen::RowVectorXd::Zero(vertices.cols());
        for (int i = 0; i <= d; ++i) gf += f(elements(e, i)) * grads.row(i);
        const double gf2 = gf.squaredNorm();
        for (int q = 0; q < rule.points.rows(); ++q) {
            const Eigen::VectorXd xq = X.transpose() * rule.points.row(q).transpose();
            double fq = 0.0;
            for (int i = 0; i <= d; ++i) fq += rule.points(q, i) * f(elements(e, i));
            const double wq = rule.weights(q) * eg.volume;
            const double rq = rho(xq), eq = eta.value(xq);
            out.coeff += wq * rq * (dim_coeff - 0.25 * xq.squaredNorm()) * eq * eq * fq * fq;
            out.grad4 += 4.0 * wq * rq * eq * eq * gf2;
            out.x2 += wq * rq * xq.squaredNorm() * fq * fq;
            out.grad += wq * rq * gf2;
            if (xq.norm() <= r0) out.local += wq * fq * fq;
        }
    }
    return out;
}

inline VerificationReport lemma_report(const std::string& name, const std::string& inputs,
                                       const LemmaIntegrals& I, int dim_coeff) {
    VerificationReport rep;
    rep.name = name;
    rep.inputs = inputs;
    rep.tolerance = 1e-10;
    const double margin_div = I.coeff + I.grad4;
    const double bound =
        kLemmaGradientConstant * I.grad + lemma_local_constant(dim_coeff) * I.local;
    const double margin_bound = bound - I.x2;
    rep.details["divergence_margin"] = margin_div;
    rep.details["bound_margin"] = margin_bound;
    rep.details["weighted_x2"] = I.x2;
    rep.details["weighted_gradient"] = I.grad;
    rep.details["local_l2"] = I.local;
    rep.details["grad_constant"] = kLemmaGradientConstant;
    rep.details["local_constant"] = lemma_local_constant(dim_coeff);
    rep.details["local_radius"] = lemma_local_radius(dim_coeff);
    rep.residual = std::max(0.0, -std::min(margin_div, margin_bound));
    const double scale = std::max({I.x2, I.grad4, 1e-30});
    finalize_report(rep);
    rep.fragile = std::min(margin_div, margin_bound) < 10.0 * rep.tolerance * scale;
    return rep;
}

}  // namespace iddetail

// int rho (n - |x|^2/4) eta^2 f^2 + 4 int rho eta^2 |grad f|^2 >= 0
// and the weighted L2 bound with the explicit constants above.
inline VerificationReport check_divergence_lemma_surface(const ShrinkerMesh& surface,
                                                         const Eigen::VectorXd& f, int j) {
    if (j < 1) throw std::invalid_argument("check_divergence_lemma_surface: j must be >= 1");
    std::vector<int> ids(surface.num_simplices());
    for (int e = 0; e < surface.num_simplices(); ++e) ids[e] = e;
    const auto I = iddetail::lemma_integrals(surface.vertices, surface.simplices, ids, f, j,
                                             surface.dim_n);
    return iddetail::lemma_report("divergence_lemma_surface_" + mesh_label(surface),
                                  mesh_label(surface) + ", j = " + std::to_string(j), I,
                                  surface.dim_n);
}

// ambient analogue, with n+1 in place of n
inline VerificationReport check_divergence_lemma_ambient(const AmbientMesh& ambient,
                                                         const Eigen::VectorXd& w, int j) {
    if (j < 1) throw std::invalid_argument("check_divergence_lemma_ambient: j must be >= 1");
    const auto ids = recdetail::all_cells(ambient);
    const auto I =
        iddetail::lemma_integrals(ambient.vertices, ambient.cells, ids, w, j, ambient.dim);
    return iddetail::lemma_report("divergence_lemma_ambient",
                                  "ambient dim " + std::to_string(ambient.dim) + ", j = " +
                                      std::to_string(j),
                                  I, ambient.dim);
}

// ---------------------------------------------------------------------------
// the integrated identity behind the eigenvalue bound:
//   (2 mu - 1/2) int rho eta^2 |grad w|^2
//     = 2 alpha int_M rho eta^2 flux^2
//     + 2 int_M rho eta <grad_M eta, grad_M f> flux
//     + int rho eta^2 |D^2 w|^2
//     + int rho eta <grad eta, grad |grad w|^2>
//     - 4 mu int rho eta w <grad eta, grad w>
// with flux the sum of the two one-sided normal derivatives of the
// weighted-harmonic extension.

inline VerificationReport check_key_identity(const CoupledSystem& sys, const ShrinkerMesh& surface,
                                             const AmbientMesh& ambient,
                                             const CoupledSolution& sol, int j,
                                             double tolerance = 0.05) {
    if (sol.f.size() != sys.surface_size() || sol.w.size() != sys.joint_size())
        throw std::invalid_argument("check_key_identity: missing minimizer fields");
    if (sol.f.dot(sys.surface_ops.K * sol.f) < 1e-12)
        throw std::invalid_argument("check_key_identity: constant trace has no eigenvalue");
    const int d = ambient.dim;
    const SimplexRule& rule = simplex_rule(d, 4);
    const GaussianWeight rho;
    const CutoffFamily eta(j);

    // nodal flux from the interface rows of the Schur complement
    const Eigen::VectorXd flux = (sys.schur * sol.f).cwiseQuotient(sys.surface_ops.m);

    double energy_eta = 0.0, t_hess = 0.0, t_grad_eta_hess = 0.0, t_low = 0.0;
    for (Region region : {Region::Omega, Region::OmegaTilde}) {
        const auto cells = recdetail::region_cells(ambient, region);
        const auto grad = recdetail::recovered_gradients(ambient, sol.w, cells);
        const auto hess = recdetail::recovered_hessians(ambient, grad, cells);
        Eigen::VectorXd g2 = Eigen::VectorXd::Zero(ambient.num_vertices());
        Eigen::VectorXd h2 = Eigen::VectorXd::Zero(ambient.num_vertices());
        for (int v = 0; v < ambient.num_vertices(); ++v) {
            g2(v) = grad.row(v).squaredNorm();
            h2(v) = hess[v].squaredNorm();
        }
        Eigen::MatrixXd X(d + 1, d);
        for (int c : cells) {
            for (int i = 0; i <= d; ++i) X.row(i) = ambient.vertices.row(ambient.cells(c, i));
            const auto eg = femdetail::element_geometry(X);
            Eigen::MatrixXd grads(d + 1, d);
            grads.row(0) = -eg.grads.colwise().sum();
            grads.bottomRows(d) = eg.grads;
            Eigen::RowVectorXd gw = Eigen::RowVectorXd::Zero(d);
            Eigen::RowVectorXd gg2 = Eigen::RowVectorXd::Zero(d);
            for (int i = 0; i <= d; ++i) {
                gw += sol.w(ambient.cells(c, i)) * grads.row(i);
                gg2 += g2(ambient.cells(c, i)) * grads.row(i);
            }
            for (int q = 0; q < rule.points.rows(); ++q) {
                const Eigen::VectorXd xq = X.transpose() * rule.points.row(q).transpose();
                double wq = 0.0, h2q = 0.0;
                for (int i = 0; i <= d; ++i) {
                    wq += rule.points(q, i) * sol.w(ambient.cells(c, i));
                    h2q += rule.points(q, i) * h2(ambient.cells(c, i));
                }
                const double qw = rule.weights(q) * eg.volume * rho(xq);
                const double eq = eta.value(xq);
                const Eigen::VectorXd ge = eta.gradient(xq);
                energy_eta += qw * eq * eq * gw.squaredNorm();
                t_hess += qw * eq * eq * h2q;
                t_grad_eta_hess += qw * eq * gg2.dot(ge);
                t_low += -4.0 * sol.mu * qw * eq * wq * gw.dot(ge);
            }
        }
    }

    // surface terms
    const auto cut = cutoff_values(j, surface);
    const SimplexRule& srule = simplex_rule(surface.dim_n, 4);
    double t_flux = 0.0, t_cut = 0.0;
    Eigen::MatrixXd Xs(surface.dim_n + 1, surface.vertices.cols());
    for (int e = 0; e < surface.num_simplices(); ++e) {
        for (int i = 0; i <= surface.dim_n; ++i)
            Xs.row(i) = surface.vertices.row(surface.simplices(e, i));
        const auto eg = femdetail::element_geometry(Xs);
        Eigen::MatrixXd grads(surface.dim_n + 1, surface.vertices.cols());
        grads.row(0) = -eg.grads.colwise().sum();
        grads.bottomRows(surface.dim_n) = eg.grads;
        Eigen::RowVectorXd gf = Eigen::RowVectorXd::Zero(surface.vertices.cols());
        for (int i = 0; i <= surface.dim_n; ++i)
            gf += sol.f(surface.simplices(e, i)) * grads.row(i);
        const double cut_dot = gf.dot(cut.grad_eta.row(e));
        for (int q = 0; q < srule.points.rows(); ++q) {
            const Eigen::VectorXd xq = Xs.transpose() * srule.points.row(q).transpose();
            double fluxq = 0.0;
            for (int i = 0; i <= surface.dim_n; ++i)
                fluxq += srule.points(q, i) * flux(surface.simplices(e, i));
            const double qw = srule.weights(q) * eg.volume * rho(xq);
            const double eq = eta.value(xq);
            t_flux += 2.0 * sys.alpha * qw * eq * eq * fluxq * fluxq;
            t_cut += 2.0 * qw * eq * cut_dot * fluxq;
        }
    }

    const double lhs = (2.0 * sol.mu - 0.5) * energy_eta;
    const double rhs = t_flux + t_cut + t_hess + t_grad_eta_hess + t_low;
    VerificationReport rep;
    rep.name = "key_identity_" + mesh_label(surface);
    rep.inputs = mesh_label(surface) + ", alpha = " + std::to_string(sys.alpha) + ", j = " +
                 std::to_string(j);
    rep.tolerance = tolerance;
    rep.details["lhs"] = lhs;
    rep.details["rhs"] = rhs;
    rep.details["flux_term"] = t_flux;
    rep.details["cutoff_flux_term"] = t_cut;
    rep.details["hessian_term"] = t_hess;
    rep.details["cutoff_hessian_term"] = t_grad_eta_hess;
    rep.details["low_order_term"] = t_low;
    rep.details["weighted_energy"] = energy_eta;
    rep.residual = std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
    if (sol.mu >= 0.25 && rhs < 0.0 && std::abs(rhs) > tolerance * std::abs(lhs))
        rep.notes.push_back("right-hand side negative despite mu >= 1/4");
    finalize_report(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// div_M(x_tan) = n - <x, nu>^2 / 2, checked weakly against hat functions

namespace iddetail {

inline std::pair<double, double> div_xtan_discrepancy(const ShrinkerMesh& surface) {
    const int d = surface.dim_n;
    const int nv = surface.num_vertices();
    Eigen::VectorXd weak = Eigen::VectorXd::Zero(nv);
    Eigen::VectorXd lumped = Eigen::VectorXd::Zero(nv);
    Eigen::MatrixXd X(d + 1, surface.vertices.cols());
    for (int e = 0; e < surface.num_simplices(); ++e) {
        for (int i = 0; i <= d; ++i) X.row(i) = surface.vertices.row(surface.simplices(e, i));
        const auto eg = femdetail::element_geometry(X);
        Eigen::MatrixXd grads(d + 1, surface.vertices.cols());
        grads.row(0) = -eg.grads.colwise().sum();
        grads.bottomRows(d) = eg.grads;
        Eigen::RowVectorXd xt_mean = Eigen::RowVectorXd::Zero(surface.vertices.cols());
        for (int i = 0; i <= d; ++i) {
            const int v = surface.simplices(e, i);
            xt_mean += tangential_part(surface.vertices.row(v).transpose(),
                                       surface.normals.row(v).transpose())
                           .transpose();
        }
        xt_mean /= double(d + 1);
        for (int i = 0; i <= d; ++i) {
            const int v = surface.simplices(e, i);
            weak(v) -= eg.volume * xt_mean.dot(grads.row(i));
            lumped(v) += eg.volume / double(d + 1);
        }
    }
    const auto bdry = boundary_vertices(surface);
    double num = 0.0, den = 0.0;
    for (int v = 0; v < nv; ++v) {
        if (bdry[v]) continue;
        const double xdn = surface.vertices.row(v).dot(surface.normals.row(v));
        const double rhs = surface.dim_n - 0.5 * xdn * xdn;
        const double est = weak(v) / lumped(v);
        num += lumped(v) * (est - rhs) * (est - rhs);
        den += lumped(v);
    }
    return {max_edge_length(surface), std::sqrt(num / den)};
}

}  // namespace iddetail

inline VerificationReport check_div_xtan(const std::vector<ShrinkerMesh>& levels,
                                         double min_decay_ratio = 1.5,
                                         double tolerance = 0.05) {
    if (levels.empty()) throw std::invalid_argument("check_div_xtan: no meshes");
    VerificationReport rep;
    rep.name = "div_xtan_" + mesh_label(levels.front());
    rep.inputs = std::to_string(levels.size()) + " refinement levels of " + mesh_label(levels.front());
    rep.tolerance = tolerance;
    for (const auto& mesh : levels) {
        if (!residual_clean(mesh))
            throw std::invalid_argument("check_div_xtan: surface is not residual-clean");
        rep.refinement_trace.push_back(iddetail::div_xtan_discrepancy(mesh));
    }
    rep.residual = rep.refinement_trace.back().second;
    if (levels.size() > 1) iddetail::apply_decay_contract(rep, min_decay_ratio);
    finalize_report(rep);
    return rep;
}

}  // namespace shrinkspec
