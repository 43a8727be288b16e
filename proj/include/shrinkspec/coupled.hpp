#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <stdexcept>
#include <vector>

#include "shrinkspec/ambient.hpp"
#include "shrinkspec/spectrum.hpp"
#include "shrinkspec/weighted_forms.hpp"

namespace shrinkspec {

// alpha-regularized coupled problem: minimize
//   f' K_M f + alpha w' K_amb w   over  m' f = 0, f' M_M f = 1, w|_M = f.
// Interface DOFs are shared between surface and ambient (trace exact by
// construction). The ambient interior is eliminated by the weighted-harmonic
// Schur complement S, leaving a surface-sized definite pencil
//   (K_M + alpha S) f = mu M_M f.
struct CoupledSystem {
    WeightedOperatorSet surface_ops;
    WeightedOperatorSet ambient_omega;
    WeightedOperatorSet ambient_tilde;
    double alpha = 0.0;
    std::vector<int> interface;           // ambient vertex per surface vertex
    std::vector<int> interior;            // remaining ambient vertices
    Eigen::SparseMatrix<double> combined_K;  // lift(K_M) + alpha K_amb
    Eigen::SparseMatrix<double> combined_B;  // lift(M_M)
    Eigen::VectorXd mean_vector;             // lift(m_M)
    Eigen::MatrixXd schur;                   // alpha-independent interface Schur complement
    Eigen::SparseMatrix<double> ambient_K;   // K_Omega + K_OmegaTilde
    Eigen::SparseMatrix<double> coupling_BI;   // interior x interface block of ambient_K
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> interior_solver;

    int joint_size() const { return static_cast<int>(combined_K.rows()); }
    int surface_size() const { return static_cast<int>(interface.size()); }

    // weighted-harmonic extension of interface data into the ambient interior
    Eigen::VectorXd extend(const Eigen::VectorXd& f) const {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(joint_size());
        for (int i = 0; i < surface_size(); ++i) w(interface[i]) = f(i);
        const Eigen::VectorXd rhs = -(coupling_BI * f);
        const Eigen::VectorXd wb = interior_solver->solve(rhs);
        for (std::size_t i = 0; i < interior.size(); ++i) w(interior[i]) = wb(i);
        return w;
    }

    // ambient Dirichlet energy of the extension of f (both regions)
    double extension_energy(const Eigen::VectorXd& f) const { return f.dot(schur * f); }
};

inline CoupledSystem assemble_coupled(const ShrinkerMesh& surface, const AmbientMesh& ambient,
                                      double alpha, int quad_order = 4) {
    if (alpha <= 0.0)
        throw std::invalid_argument(
            "assemble_coupled: alpha must be > 0 (the ambient block is singular beyond "
            "constants at alpha = 0; study the limit through mu_of_alpha on a decreasing "
            "alpha sequence)");
    if (static_cast<int>(ambient.interface_map.size()) != surface.num_vertices())
        throw std::invalid_argument("assemble_coupled: non-conforming interface");

    CoupledSystem sys;
    sys.alpha = alpha;
    sys.surface_ops = assemble_surface_forms(surface, quad_order);
    sys.ambient_omega = assemble_ambient_forms(ambient, DomainTag::AmbientOmega, quad_order);
    sys.ambient_tilde = assemble_ambient_forms(ambient, DomainTag::AmbientTilde, quad_order);
    sys.interface = ambient.interface_map;
    const int nj = ambient.num_vertices();
    const int ni = surface.num_vertices();

    std::vector<int> interface_pos(nj, -1);
    for (int i = 0; i < ni; ++i) interface_pos[sys.interface[i]] = i;
    for (int v = 0; v < nj; ++v)
        if (interface_pos[v] < 0) sys.interior.push_back(v);
    std::vector<int> interior_pos(nj, -1);
    for (std::size_t i = 0; i < sys.interior.size(); ++i) interior_pos[sys.interior[i]] = static_cast<int>(i);

    sys.ambient_K = sys.ambient_omega.K + sys.ambient_tilde.K;

    // blocks of the ambient stiffness in the interface/interior split
    const int nb = static_cast<int>(sys.interior.size());
    std::vector<Eigen::Triplet<double>> t_bb, t_bi;
    Eigen::MatrixXd A_ii = Eigen::MatrixXd::Zero(ni, ni);
    for (int k = 0; k < sys.ambient_K.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.ambient_K, k); it; ++it) {
            const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
            const bool ri = interface_pos[r] >= 0, ci = interface_pos[c] >= 0;
            if (ri && ci)
                A_ii(interface_pos[r], interface_pos[c]) += it.value();
            else if (!ri && !ci)
                t_bb.emplace_back(interior_pos[r], interior_pos[c], it.value());
            else if (!ri && ci)
                t_bi.emplace_back(interior_pos[r], interface_pos[c], it.value());
        }
    }
    Eigen::SparseMatrix<double> A_bb(nb, nb);
    A_bb.setFromTriplets(t_bb.begin(), t_bb.end());
    sys.coupling_BI.resize(nb, ni);
    sys.coupling_BI.setFromTriplets(t_bi.begin(), t_bi.end());

    sys.interior_solver = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    sys.interior_solver->compute(A_bb);
    if (sys.interior_solver->info() != Eigen::Success)
        throw std::runtime_error("assemble_coupled: interior factorization failed");

    const Eigen::MatrixXd X = sys.interior_solver->solve(Eigen::MatrixXd(sys.coupling_BI));
    sys.schur = A_ii - Eigen::MatrixXd(sys.coupling_BI).transpose() * X;
    sys.schur = 0.5 * (sys.schur + sys.schur.transpose().eval());

    // joint matrices (surface forms lifted onto the shared interface DOFs)
    std::vector<Eigen::Triplet<double>> t_k, t_b;
    for (int k = 0; k < sys.ambient_K.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.ambient_K, k); it; ++it)
            t_k.emplace_back(it.row(), it.col(), alpha * it.value());
    for (int k = 0; k < sys.surface_ops.K.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.surface_ops.K, k); it; ++it)
            t_k.emplace_back(sys.interface[it.row()], sys.interface[it.col()], it.value());
    for (int k = 0; k < sys.surface_ops.M.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.surface_ops.M, k); it; ++it)
            t_b.emplace_back(sys.interface[it.row()], sys.interface[it.col()], it.value());
    sys.combined_K.resize(nj, nj);
    sys.combined_K.setFromTriplets(t_k.begin(), t_k.end());
    sys.combined_B.resize(nj, nj);
    sys.combined_B.setFromTriplets(t_b.begin(), t_b.end());
    sys.mean_vector = Eigen::VectorXd::Zero(nj);
    for (int i = 0; i < ni; ++i) sys.mean_vector(sys.interface[i]) = sys.surface_ops.m(i);
    return sys;
}

struct CoupledSolution {
    double mu = 0.0;
    Eigen::VectorXd f;  // surface trace, m'f = 0, f'Mf = 1
    Eigen::VectorXd w;  // joint ambient vector, w|_M = f
    double ambient_energy = 0.0;  // w' K_amb w
    double residual = 0.0;        // reduced eigenproblem residual
};

inline CoupledSolution mu_of_alpha(const CoupledSystem& sys, const SolverOptions& opts = {}) {
    WeightedOperatorSet reduced;
    reduced.K = (Eigen::MatrixXd(sys.surface_ops.K) + sys.alpha * sys.schur).sparseView();
    reduced.M = sys.surface_ops.M;
    reduced.m = sys.surface_ops.m;
    const EigenResult eig = first_eigenpair(reduced, opts);
    CoupledSolution sol;
    sol.mu = eig.eigenvalues(0);
    sol.f = eig.eigenvectors.col(0);
    sol.w = sys.extend(sol.f);
    sol.ambient_energy = sol.w.dot(sys.ambient_K * sol.w);
    sol.residual = eig.residuals(0);
    return sol;
}

// Weak residual of the Euler-Lagrange system over all joint test vectors,
// after removing the mean-constraint multiplier direction.
inline double euler_lagrange_residual(const CoupledSystem& sys, const Eigen::VectorXd& f,
                                      const Eigen::VectorXd& w, double mu) {
    if (f.size() != sys.surface_size() || w.size() != sys.joint_size())
        throw std::invalid_argument("euler_lagrange_residual: dimension mismatch");
    Eigen::VectorXd r = sys.combined_K * w - mu * (sys.combined_B * w);
    const double theta = sys.mean_vector.dot(r) / sys.mean_vector.squaredNorm();
    r -= theta * sys.mean_vector;
    return r.norm() / (sys.combined_B * w).norm();
}

enum class OuterBC { Natural, FixedValue };

struct DriftHarmonicSolution {
    Region region;
    Eigen::VectorXd values;          // joint-sized, zero off the region
    Eigen::VectorXd boundary_values; // the interface data used
    double energy = 0.0;             // weighted Dirichlet energy
    double interior_residual = 0.0;  // weak residual on free DOFs
};

// Minimizes the weighted Dirichlet energy in one region with the interface
// values pinned to g; the strong form is the drift-harmonic equation.
// The truncation boundary carries either the natural (zero weighted flux)
// condition or a fixed value.
inline DriftHarmonicSolution drift_harmonic_solve(const AmbientMesh& ambient, Region region,
                                                  const Eigen::VectorXd& g,
                                                  OuterBC outer_bc = OuterBC::Natural,
                                                  double outer_value = 0.0, int quad_order = 4) {
    const int nj = ambient.num_vertices();
    const int ni = static_cast<int>(ambient.interface_map.size());
    if (g.size() != ni)
        throw std::invalid_argument("drift_harmonic_solve: boundary data size mismatch");
    const auto ops = assemble_ambient_forms(
        ambient, region == Region::Omega ? DomainTag::AmbientOmega : DomainTag::AmbientTilde,
        quad_order);

    std::vector<int> fixed_pos(nj, -1);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(nj);
    for (int i = 0; i < ni; ++i) {
        fixed_pos[ambient.interface_map[i]] = i;
        full(ambient.interface_map[i]) = g(i);
    }
    std::vector<bool> is_fixed(nj, false);
    for (int i = 0; i < ni; ++i) is_fixed[ambient.interface_map[i]] = true;
    if (outer_bc == OuterBC::FixedValue) {
        for (int v : ambient.outer_boundary)
            if (!is_fixed[v]) {
                is_fixed[v] = true;
                full(v) = outer_value;
            }
    }
    // free DOFs: region vertices (positive diagonal) that are not pinned
    std::vector<int> free_dofs;
    for (int v = 0; v < nj; ++v)
        if (!is_fixed[v] && ops.K.coeff(v, v) > 0.0) free_dofs.push_back(v);
    const int nf = static_cast<int>(free_dofs.size());
    if (nf == 0 && ni == 0)
        throw std::runtime_error("drift_harmonic_solve: region has no interface DOFs");
    std::vector<int> free_pos(nj, -1);
    for (int i = 0; i < nf; ++i) free_pos[free_dofs[i]] = i;

    std::vector<Eigen::Triplet<double>> t_ff;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
    for (int k = 0; k < ops.K.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(ops.K, k); it; ++it) {
            const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
            if (free_pos[r] < 0) continue;
            if (free_pos[c] >= 0)
                t_ff.emplace_back(free_pos[r], free_pos[c], it.value());
            else
                rhs(free_pos[r]) -= it.value() * full(c);
        }
    }
    if (nf > 0) {
        Eigen::SparseMatrix<double> K_ff(nf, nf);
        K_ff.setFromTriplets(t_ff.begin(), t_ff.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(K_ff);
        if (chol.info() != Eigen::Success)
            throw std::runtime_error("drift_harmonic_solve: singular system");
        const Eigen::VectorXd uf = chol.solve(rhs);
        for (int i = 0; i < nf; ++i) full(free_dofs[i]) = uf(i);
    }

    DriftHarmonicSolution sol;
    sol.region = region;
    sol.values = full;
    sol.boundary_values = g;
    sol.energy = full.dot(ops.K * full);
    const Eigen::VectorXd res = ops.K * full;
    double r2 = 0.0;
    for (int v : free_dofs) r2 += res(v) * res(v);
    sol.interior_residual = std::sqrt(r2);
    return sol;
}

struct AlphaSweepRow {
    double alpha;
    double mu;
    double gap;             // mu(alpha) - lambda_1(surface)
    double ambient_energy;  // E_ext of the surface minimizer, alpha-independent
};

// mu(alpha) over a descending alpha list, with the sandwich data
// lambda_1 <= mu(alpha) <= lambda_1 + alpha E_ext.
inline std::vector<AlphaSweepRow> alpha_sweep(const ShrinkerMesh& surface,
                                              const AmbientMesh& ambient,
                                              const std::vector<double>& alphas,
                                              const SolverOptions& opts = {}) {
    for (std::size_t i = 0; i + 1 < alphas.size(); ++i)
        if (alphas[i + 1] >= alphas[i])
            throw std::invalid_argument("alpha_sweep: alphas must be positive descending");
    std::vector<AlphaSweepRow> rows;
    CoupledSystem sys = assemble_coupled(surface, ambient, alphas.front());
    const EigenResult surf = first_eigenpair(sys.surface_ops, opts);
    const double lambda1 = surf.eigenvalues(0);
    const double e_ext = sys.extension_energy(surf.eigenvectors.col(0));
    for (double a : alphas) {
        sys.alpha = a;  // the Schur complement is alpha-independent
        const CoupledSolution sol = mu_of_alpha(sys, opts);
        rows.push_back({a, sol.mu, sol.mu - lambda1, e_ext});
    }
    return rows;
}

}  // namespace shrinkspec
