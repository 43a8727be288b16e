#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "shrinkspec/weighted_forms.hpp"

namespace shrinkspec {

// Eigenpairs of the constrained pencil: minimize f'Kf / f'Mf over m'f = 0.
// The constraint m'f = 0 is M-orthogonality to the constant vector (m = M 1),
// so it is handled as exact deflation of the lambda = 0 constant mode.
struct EigenResult {
    Eigen::VectorXd eigenvalues;       // ascending
    Eigen::MatrixXd eigenvectors;      // columns, f'Mf = 1
    Eigen::VectorXd residuals;         // ||Kf - lambda Mf - theta m|| / ||Mf||
    Eigen::VectorXd mean_violations;   // |m'f|
    Eigen::VectorXd norm_violations;   // |f'Mf - 1|
    int iterations = 0;

    int count() const { return static_cast<int>(eigenvalues.size()); }
};

struct SolverOptions {
    double eigenvalue_tol = 1e-10;
    double residual_tol = 1e-8;
    int dense_threshold = 2000;
    int max_lanczos = 600;
    bool unconstrained = false;  // diagnostic: keep the constant mode
};

inline double rayleigh_quotient(const WeightedOperatorSet& ops, const Eigen::VectorXd& f) {
    const double denom = f.dot(ops.M * f);
    if (denom <= 0.0) throw std::invalid_argument("rayleigh_quotient: zero vector");
    return f.dot(ops.K * f) / denom;
}

// f - (m'f / m'1) 1: subtracts the weighted mean; idempotent.
inline Eigen::VectorXd mean_zero_project(const WeightedOperatorSet& ops,
                                         const Eigen::VectorXd& f) {
    const double total = ops.m.sum();
    if (total <= 0.0) throw std::invalid_argument("mean_zero_project: nonpositive total weight");
    return f - (ops.m.dot(f) / total) * Eigen::VectorXd::Ones(f.size());
}

namespace eigdetail {

inline void finalize(const WeightedOperatorSet& ops, EigenResult& res) {
    const int k = res.count();
    res.residuals.resize(k);
    res.mean_violations.resize(k);
    res.norm_violations.resize(k);
    for (int i = 0; i < k; ++i) {
        Eigen::VectorXd f = res.eigenvectors.col(i);
        const double nrm = std::sqrt(f.dot(ops.M * f));
        f /= nrm;
        // deterministic sign: largest-magnitude entry positive
        int imax = 0;
        f.cwiseAbs().maxCoeff(&imax);
        if (f(imax) < 0.0) f = -f;
        res.eigenvectors.col(i) = f;
        const Eigen::VectorXd r0 = ops.K * f - res.eigenvalues(i) * (ops.M * f);
        const double theta = ops.m.dot(r0) / ops.m.squaredNorm();
        res.residuals(i) = (r0 - theta * ops.m).norm() / (ops.M * f).norm();
        res.mean_violations(i) = std::abs(ops.m.dot(f));
        res.norm_violations(i) = std::abs(f.dot(ops.M * f) - 1.0);
    }
}

inline EigenResult dense_solve(const WeightedOperatorSet& ops, int k, const SolverOptions& opts) {
    const int n = ops.size();
    Eigen::MatrixXd K = Eigen::MatrixXd(ops.K);
    Eigen::MatrixXd M = Eigen::MatrixXd(ops.M);
    Eigen::MatrixXd Z;  // columns span the trial space
    if (opts.unconstrained) {
        Z = Eigen::MatrixXd::Identity(n, n);
    } else {
        // orthonormal complement of m via a Householder reflector
        Eigen::VectorXd v = ops.m;
        v(0) += (v(0) >= 0.0 ? 1.0 : -1.0) * ops.m.norm();
        v.normalize();
        Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n) - 2.0 * v * v.transpose();
        Z = H.rightCols(n - 1);
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
        Z.transpose() * K * Z, Z.transpose() * M * Z);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("dense eigensolver failed to converge");
    EigenResult res;
    res.eigenvalues = es.eigenvalues().head(k);
    res.eigenvectors = Z * es.eigenvectors().leftCols(k);
    res.iterations = 1;
    finalize(ops, res);
    return res;
}

// Generalized Lanczos for the largest eigenvalues of S^{-1} M in the
// S-inner product, S = K + gamma M. The constant vector is an exact
// eigenvector (theta = 1/gamma) and is deflated by keeping the basis
// S-orthogonal to it; smallest pencil eigenvalues are lambda = 1/theta - gamma.
inline EigenResult lanczos_solve(const WeightedOperatorSet& ops, int k,
                                 const SolverOptions& opts) {
    const int n = ops.size();
    const double gamma = 1.0;
    Eigen::SparseMatrix<double> S = ops.K + gamma * ops.M;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(S);
    if (chol.info() != Eigen::Success)
        throw std::runtime_error("lanczos: factorization of K + gamma M failed");

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd S_ones = S * ones;
    const double ones_S = ones.dot(S_ones);

    auto s_dot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& Sb) { return a.dot(Sb); };

    const int m_steps = std::min(n - 1, std::max(4 * k + 30, 60));
    std::vector<Eigen::VectorXd> V;     // S-orthonormal basis
    std::vector<Eigen::VectorXd> SV;    // S * basis
    Eigen::VectorXd alpha(m_steps), beta(m_steps);

    // pseudo-random but deterministic start vector
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = std::sin(0.7 * i + 0.3) + 0.01 * i / double(n);
    if (!opts.unconstrained) v -= (s_dot(v, S_ones) / ones_S) * ones;
    Eigen::VectorXd Sv = S * v;
    v /= std::sqrt(s_dot(v, Sv));
    Sv = S * v;
    V.push_back(v);
    SV.push_back(Sv);

    int steps = 0;
    for (int j = 0; j < m_steps; ++j) {
        Eigen::VectorXd w = chol.solve(ops.M * V[j]);  // A v
        alpha(j) = s_dot(w, SV[j]);
        // full reorthogonalization against the basis and the deflated mode
        for (int rep = 0; rep < 2; ++rep) {
            if (!opts.unconstrained) w -= (s_dot(w, S_ones) / ones_S) * ones;
            for (std::size_t i = 0; i < V.size(); ++i) w -= s_dot(w, SV[i]) * V[i];
        }
        Eigen::VectorXd Sw = S * w;
        const double b = std::sqrt(std::max(0.0, s_dot(w, Sw)));
        beta(j) = b;
        ++steps;
        if (b < 1e-14 || j + 1 == m_steps) break;
        w /= b;
        V.push_back(w);
        SV.push_back(S * w);
    }

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
    for (int j = 0; j < steps; ++j) {
        T(j, j) = alpha(j);
        if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta(j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    if (es.info() != Eigen::Success) throw std::runtime_error("lanczos: tridiagonal solve failed");

    EigenResult res;
    res.eigenvalues.resize(k);
    res.eigenvectors.resize(n, k);
    for (int i = 0; i < k; ++i) {
        const int idx = steps - 1 - i;  // largest theta = smallest lambda
        const double theta = es.eigenvalues()(idx);
        if (theta <= 0.0)
            throw std::runtime_error("lanczos: nonpositive Ritz value; increase max_lanczos");
        res.eigenvalues(i) = 1.0 / theta - gamma;
        Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < steps; ++j) f += es.eigenvectors()(j, idx) * V[j];
        res.eigenvectors.col(i) = f;
    }
    res.iterations = steps;
    finalize(ops, res);
    return res;
}

}  // namespace eigdetail

inline EigenResult spectrum_k(const WeightedOperatorSet& ops, int k,
                              const SolverOptions& opts = {}) {
    if (k < 1 || k >= ops.size()) throw std::invalid_argument("spectrum_k: bad k");
    EigenResult res = (ops.size() <= opts.dense_threshold)
                          ? eigdetail::dense_solve(ops, k, opts)
                          : eigdetail::lanczos_solve(ops, k, opts);
    for (int i = 0; i < res.count(); ++i) {
        if (res.residuals(i) > opts.residual_tol * 100.0)
            throw std::runtime_error("eigensolver residual " + std::to_string(res.residuals(i)) +
                                     " above tolerance after " +
                                     std::to_string(res.iterations) + " iterations");
    }
    return res;
}

inline EigenResult first_eigenpair(const WeightedOperatorSet& ops, const SolverOptions& opts = {}) {
    return spectrum_k(ops, 1, opts);
}

// Eigenvalues within 1e-6 relative of each other form one cluster; analytic
// multiplicities are compared per cluster.
inline std::vector<int> cluster_multiplicities(const Eigen::VectorXd& eigenvalues,
                                               double rel_tol = 1e-6) {
    std::vector<int> sizes;
    for (int i = 0; i < eigenvalues.size(); ++i) {
        if (!sizes.empty() &&
            std::abs(eigenvalues(i) - eigenvalues(i - 1)) <=
                rel_tol * std::max(1.0, std::abs(eigenvalues(i))))
            ++sizes.back();
        else
            sizes.push_back(1);
    }
    return sizes;
}

struct TruncationRow {
    int j;
    double dirichlet_energy;   // energy of eta_j g
    double weighted_l2;        // weighted L2 norm^2 of eta_j g - a_j
    double subtracted_mean;    // a_j
    double quotient;
};

// Rayleigh quotients of the mean-adjusted truncations eta_j g.
inline std::vector<TruncationRow> truncation_study(const ShrinkerMesh& mesh,
                                                   const WeightedOperatorSet& ops,
                                                   const Eigen::VectorXd& g,
                                                   const std::vector<int>& j_values) {
    std::vector<TruncationRow> rows;
    for (int j : j_values) {
        const CutoffFamily eta(j);
        Eigen::VectorXd f(g.size());
        for (int v = 0; v < mesh.num_vertices(); ++v)
            f(v) = eta.value(mesh.vertices.row(v).transpose()) * g(v);
        TruncationRow row;
        row.j = j;
        row.subtracted_mean = ops.m.dot(f) / ops.m.sum();
        const Eigen::VectorXd fc = f - row.subtracted_mean * Eigen::VectorXd::Ones(f.size());
        row.dirichlet_energy = f.dot(ops.K * f);  // grad(f - a) = grad f
        row.weighted_l2 = fc.dot(ops.M * fc);
        row.quotient = row.dirichlet_energy / row.weighted_l2;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace shrinkspec
