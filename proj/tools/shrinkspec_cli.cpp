#include <CLI11.hpp>
#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "shrinkspec/coupled.hpp"
#include "shrinkspec/identities.hpp"
#include "shrinkspec/mesh_io.hpp"
#include "shrinkspec/spectrum.hpp"

using namespace shrinkspec;

namespace {

// exit codes: 0 success, 1 validation error, 2 numerical failure, 3 theorem gate
struct GateViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ShrinkerMesh build_mesh(const std::string& kind, int dim, int refine, double half_length,
                        double radius) {
    if (kind == "sphere" || kind == "circle") return make_sphere(kind == "circle" ? 1 : dim, refine);
    if (kind == "cylinder") return make_cylinder(1, 2, half_length, refine);
    if (kind == "plane") return make_plane(dim, radius, refine);
    throw std::invalid_argument("unknown mesh kind '" + kind + "'");
}

void cmd_mesh(const std::string& kind, int dim, int refine, double half_length, double radius,
              const std::string& out) {
    const ShrinkerMesh mesh = build_mesh(kind, dim, refine, half_length, radius);
    write_mesh(mesh, out);
    const auto res = shrinker_residual(mesh);
    const auto bdry = boundary_vertices(mesh);
    double worst = 0.0;
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (!bdry[v]) worst = std::max(worst, std::abs(res[v]));
    std::cout << "wrote " << out << ": " << mesh.num_vertices() << " vertices, "
              << mesh.num_simplices() << " simplices\n"
              << "max shrinker residual " << worst << " (gate "
              << kResidualGateConstant * max_edge_length(mesh) << ", "
              << (residual_clean(mesh) ? "clean" : "NOT clean") << ")\n";
}

void cmd_spectrum(const std::string& mesh_path, int k, double tol, const std::string& out,
                  const std::string& json_out) {
    const ShrinkerMesh mesh = read_mesh(mesh_path);
    SolverOptions opts;
    opts.residual_tol = tol;
    const auto ops = assemble_surface_forms(mesh);
    const auto eig = spectrum_k(ops, k, opts);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < eig.count(); ++i) {
        rows.push_back({double(i), eig.eigenvalues(i), eig.residuals(i),
                        std::max(eig.mean_violations(i), eig.norm_violations(i))});
        std::cout << i << "  " << eig.eigenvalues(i) << "  (residual " << eig.residuals(i)
                  << ")\n";
    }
    if (!out.empty())
        write_csv(out, {"index", "eigenvalue", "residual", "constraint_violation"}, rows);
    if (!json_out.empty()) {
        nlohmann::ordered_json js;
        js["eigenvalues"] = std::vector<double>(eig.eigenvalues.begin(), eig.eigenvalues.end());
        js["eigenvectors"] = nlohmann::ordered_json::array();
        for (int i = 0; i < eig.count(); ++i) {
            const Eigen::VectorXd f = eig.eigenvectors.col(i);
            js["eigenvectors"].push_back(std::vector<double>(f.begin(), f.end()));
        }
        std::ofstream o(json_out);
        o << js.dump(2) << "\n";
    }
    if (residual_clean(mesh)) {
        if (eig.eigenvalues(0) < 0.25)
            throw GateViolation("lambda_1 = " + std::to_string(eig.eigenvalues(0)) +
                                " violates the 1/4 bound on a residual-clean mesh");
    } else {
        std::cout << "warning: mesh is not residual-clean, 1/4 gate skipped\n";
    }
}

void cmd_coupled(const std::string& mesh_path, double ball_radius, std::vector<double> alphas,
                 const std::string& out) {
    const ShrinkerMesh mesh = read_mesh(mesh_path);
    const AmbientMesh amb = build_ambient_mesh(mesh, ball_radius);
    if (alphas.empty()) alphas = {1.0, 0.1, 0.01, 0.001};
    const auto sweep = alpha_sweep(mesh, amb, alphas);
    std::vector<std::vector<double>> rows;
    std::cout << "alpha        mu           gap          ambient_energy\n";
    for (const auto& r : sweep) {
        rows.push_back({r.alpha, r.mu, r.gap, r.ambient_energy});
        std::cout << r.alpha << "  " << r.mu << "  " << r.gap << "  " << r.ambient_energy
                  << "\n";
    }
    if (!out.empty()) write_csv(out, {"alpha", "mu", "gap", "ambient_energy"}, rows);
    if (residual_clean(mesh)) {
        for (const auto& r : sweep)
            if (r.mu < 0.25)
                throw GateViolation("mu(" + std::to_string(r.alpha) +
                                    ") violates the 1/4 bound");
    } else {
        std::cout << "warning: mesh is not residual-clean, 1/4 gate skipped\n";
    }
}

std::vector<VerificationReport> lemma_suite() {
    std::vector<VerificationReport> reports;
    {
        const auto mesh = make_sphere(1, 6);
        reports.push_back(
            check_divergence_lemma_surface(mesh, Eigen::VectorXd::Ones(mesh.num_vertices()), 8));
    }
    {
        const auto mesh = make_sphere(2, 3);
        reports.push_back(
            check_divergence_lemma_surface(mesh, Eigen::VectorXd::Ones(mesh.num_vertices()), 8));
    }
    {
        const auto mesh = make_plane(2, 8.0, 3);
        reports.push_back(
            check_divergence_lemma_surface(mesh, Eigen::VectorXd::Ones(mesh.num_vertices()), 8));
    }
    {
        const auto mesh = make_plane(1, 8.0, 5);
        Eigen::VectorXd f = mesh.vertices.col(0);
        auto rep = check_divergence_lemma_surface(mesh, f, 8);
        rep.name += "_linear";
        reports.push_back(rep);
    }
    {
        const auto mesh = make_cylinder(1, 2, 8.0, 1);
        const auto eig = first_eigenpair(assemble_surface_forms(mesh));
        reports.push_back(check_divergence_lemma_surface(mesh, eig.eigenvectors.col(0), 4));
    }
    {
        const auto surf = make_sphere(1, 5);
        const auto amb = build_ambient_mesh(surf, 6.0);
        auto r1 =
            check_divergence_lemma_ambient(amb, Eigen::VectorXd::Ones(amb.num_vertices()), 8);
        r1.name += "_constant";
        reports.push_back(r1);
        Eigen::VectorXd bump(amb.num_vertices()), quad(amb.num_vertices());
        for (int v = 0; v < amb.num_vertices(); ++v) {
            const double s = 1.0 - amb.vertices.row(v).squaredNorm();
            bump(v) = s > 0.0 ? s * s : 0.0;
            quad(v) = amb.vertices.row(v).squaredNorm();
        }
        auto r2 = check_divergence_lemma_ambient(amb, bump, 8);
        r2.name += "_bump";
        reports.push_back(r2);
        auto r3 = check_divergence_lemma_ambient(amb, quad, 8);
        r3.name += "_quadratic";
        reports.push_back(r3);
    }
    return reports;
}

std::vector<VerificationReport> reilly_suite() {
    std::vector<VerificationReport> reports;
    {
        Eigen::MatrixXd pts(16, 1);
        for (int i = 0; i < 16; ++i) pts(i, 0) = 0.5 + 1.5 * i / 15.0;
        reports.push_back(check_interior_bochner(exponential_family(), pts, 1e-3, 1e-6));
    }
    for (int dim : {2, 3}) {
        Eigen::MatrixXd pts(12, dim);
        for (int i = 0; i < 12; ++i) {
            Eigen::VectorXd dir(dim);
            for (int a = 0; a < dim; ++a) dir(a) = std::sin(1.7 * i + 0.5 * a + 0.3);
            dir.normalize();
            pts.row(i) = ((1.0 + 2.0 * i / 11.0) * dir).transpose();
        }
        reports.push_back(check_interior_bochner(radial_family(dim), pts));
    }
    {
        std::vector<BoundaryHessianCase> cases;
        for (int refine : {3, 4, 5}) {
            BoundaryHessianCase c;
            c.surface = make_sphere(1, refine);
            c.ambient = build_ambient_mesh(c.surface, 6.0);
            c.field = c.surface.vertices.col(0);
            cases.push_back(std::move(c));
        }
        reports.push_back(check_boundary_hessian(cases));
    }
    {
        const auto surf = make_sphere(1, 5);
        const auto amb = build_ambient_mesh(surf, 6.0);
        const auto sys = assemble_coupled(surf, amb, 0.5);
        const auto sol = mu_of_alpha(sys);
        auto r1 = check_key_identity(sys, surf, amb, sol, 12);
        r1.name += "_wide";
        reports.push_back(r1);
        auto r2 = check_key_identity(sys, surf, amb, sol, 3, 0.1);
        r2.name += "_cutoff";
        reports.push_back(r2);
    }
    reports.push_back(check_div_xtan({make_sphere(2, 2)}));
    reports.push_back(check_div_xtan({make_plane(2, 8.0, 3)}));
    reports.push_back(check_div_xtan({make_cylinder(1, 2, 4.0, 0), make_cylinder(1, 2, 4.0, 1),
                                      make_cylinder(1, 2, 4.0, 2)}));
    return reports;
}

void cmd_verify(const std::string& suite, const std::string& out) {
    std::vector<VerificationReport> reports;
    if (suite == "lemmas" || suite == "all") {
        auto r = lemma_suite();
        reports.insert(reports.end(), r.begin(), r.end());
    }
    if (suite == "reilly" || suite == "all") {
        auto r = reilly_suite();
        reports.insert(reports.end(), r.begin(), r.end());
    }
    if (reports.empty())
        throw std::invalid_argument("unknown suite '" + suite + "' (lemmas, reilly, all)");
    std::sort(reports.begin(), reports.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
    nlohmann::ordered_json js = nlohmann::ordered_json::array();
    for (const auto& r : reports) js.push_back(report_to_json(r));
    if (!out.empty()) {
        std::ofstream o(out);
        if (!o) throw std::runtime_error("cannot open " + out);
        o << js.dump(2) << "\n";
    }
    std::cout << summary_table(reports);
    for (const auto& r : reports)
        if (!r.pass) throw CheckFailure("verification check '" + r.name + "' failed");
}

void cmd_converge(const std::string& study, const std::string& out) {
    std::vector<double> hs, lams;
    const double oracle = 0.5;
    if (study == "circle") {
        for (int refine : {3, 4, 5, 6}) {
            const auto mesh = make_sphere(1, refine);
            hs.push_back(max_edge_length(mesh));
            lams.push_back(first_eigenpair(assemble_surface_forms(mesh)).eigenvalues(0));
        }
    } else if (study == "sphere") {
        for (int refine : {2, 3, 4}) {
            const auto mesh = make_sphere(2, refine);
            hs.push_back(max_edge_length(mesh));
            lams.push_back(first_eigenpair(assemble_surface_forms(mesh)).eigenvalues(0));
        }
    } else if (study == "plane") {
        for (int refine : {3, 4, 5}) {
            const auto mesh = make_plane(1, 8.0, refine);
            hs.push_back(max_edge_length(mesh));
            lams.push_back(first_eigenpair(assemble_surface_forms(mesh)).eigenvalues(0));
        }
    } else {
        throw std::invalid_argument("unknown study '" + study + "' (circle, sphere, plane)");
    }
    std::vector<std::vector<double>> rows;
    std::cout << "h            lambda_1     error        order\n";
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const double err = std::abs(lams[i] - oracle);
        const double prev_err = i > 0 ? std::abs(lams[i - 1] - oracle) : 0.0;
        const double order = i > 0 ? std::log(prev_err / err) / std::log(hs[i - 1] / hs[i])
                                   : std::numeric_limits<double>::quiet_NaN();
        rows.push_back({hs[i], lams[i], err, order});
        std::cout << hs[i] << "  " << lams[i] << "  " << err << "  " << order << "\n";
    }
    if (!out.empty()) write_csv(out, {"h", "lambda_1", "error", "order"}, rows);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weighted spectral toolkit for self-shrinking hypersurfaces"};
    app.require_subcommand(1);
    app.set_config("--config")->description("read defaults from a TOML/INI config file");
    app.allow_config_extras(CLI::config_extras_mode::error);
    int threads = 1;
    bool strict_sequential = false;
    app.add_option("--threads", threads, "cap the number of worker threads")
        ->check(CLI::PositiveNumber);
    app.add_flag("--strict-sequential", strict_sequential,
                 "force sequential assembly for bitwise-reproducible output");
    // global flags may also appear after the subcommand name
    app.fallthrough();

    std::string kind = "sphere", mesh_out = "mesh.json";
    int dim = 1, refine = 4;
    double half_length = 8.0, radius = 8.0;
    auto* mesh_cmd = app.add_subcommand("mesh", "generate a canonical mesh and write it as JSON");
    mesh_cmd->add_option("--kind", kind, "circle, sphere, cylinder or plane");
    mesh_cmd->add_option("--dim", dim, "intrinsic dimension n (sphere and plane)");
    mesh_cmd->add_option("--refine", refine, "refinement level")->check(CLI::NonNegativeNumber);
    mesh_cmd->add_option("--half-length", half_length, "cylinder truncation half-length");
    mesh_cmd->add_option("--radius", radius, "plane truncation radius");
    mesh_cmd->add_option("--out", mesh_out, "output mesh path");

    std::string spec_mesh, spec_out, spec_json;
    int k = 1;
    double tol = 1e-8;
    auto* spec_cmd = app.add_subcommand(
        "spectrum", "lowest constrained eigenvalues; CSV columns index, eigenvalue, residual, "
                    "constraint_violation");
    spec_cmd->add_option("--mesh", spec_mesh, "input mesh JSON")->required();
    spec_cmd->add_option("--k", k, "number of eigenvalues")->check(CLI::PositiveNumber);
    spec_cmd->add_option("--tol", tol, "eigensolver residual tolerance");
    spec_cmd->add_option("--out", spec_out, "output CSV path");
    spec_cmd->add_option("--json", spec_json, "optional JSON output with full eigenvectors");

    std::string coup_mesh, coup_out;
    double ball_radius = 6.0;
    std::vector<double> alphas;
    auto* coup_cmd = app.add_subcommand(
        "coupled", "alpha sweep of the coupled problem; CSV columns alpha, mu, gap, "
                   "ambient_energy");
    coup_cmd->add_option("--mesh", coup_mesh, "input mesh JSON")->required();
    coup_cmd->add_option("--ball-radius", ball_radius, "ambient truncation radius");
    coup_cmd->add_option("--alphas", alphas, "descending alpha list (default 1 0.1 0.01 0.001)");
    coup_cmd->add_option("--out", coup_out, "output CSV path");

    std::string suite = "all", verify_out;
    auto* verify_cmd =
        app.add_subcommand("verify", "run identity and inequality checks, emit JSON reports");
    verify_cmd->add_option("--suite", suite, "lemmas, reilly or all");
    verify_cmd->add_option("--out", verify_out, "output JSON path");

    std::string study = "circle", conv_out;
    auto* conv_cmd = app.add_subcommand(
        "converge", "eigenvalue refinement study; CSV columns h, lambda_1, error, order");
    conv_cmd->add_option("--study", study, "circle, sphere or plane");
    conv_cmd->add_option("--out", conv_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    Eigen::setNbThreads(strict_sequential ? 1 : threads);
    try {
        if (mesh_cmd->parsed()) cmd_mesh(kind, dim, refine, half_length, radius, mesh_out);
        if (spec_cmd->parsed()) cmd_spectrum(spec_mesh, k, tol, spec_out, spec_json);
        if (coup_cmd->parsed()) cmd_coupled(coup_mesh, ball_radius, alphas, coup_out);
        if (verify_cmd->parsed()) cmd_verify(suite, verify_out);
        if (conv_cmd->parsed()) cmd_converge(study, conv_out);
    } catch (const GateViolation& e) {
        std::cerr << "theorem gate: " << e.what() << "\n";
        return 3;
    } catch (const CheckFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
