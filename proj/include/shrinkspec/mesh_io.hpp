#pragma once

#include <Eigen/Sparse>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "shrinkspec/geometry.hpp"

namespace shrinkspec {

// Mesh files are a single JSON document with dim_n, vertices, simplices,
// normals, kind and truncation_radius, plus an optional fields section of
// named nodal vectors. Doubles round-trip exactly (shortest representation
// that reparses to the same bits).
inline nlohmann::ordered_json mesh_to_json(
    const ShrinkerMesh& mesh,
    const std::map<std::string, Eigen::VectorXd>& fields = {}) {
    nlohmann::ordered_json out;
    out["dim_n"] = mesh.dim_n;
    out["kind"] = mesh.kind;
    auto rows = [](const Eigen::MatrixXd& m) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (int r = 0; r < m.rows(); ++r) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            arr.push_back(row);
        }
        return arr;
    };
    out["vertices"] = rows(mesh.vertices);
    nlohmann::ordered_json simp = nlohmann::ordered_json::array();
    for (int r = 0; r < mesh.simplices.rows(); ++r) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (int c = 0; c < mesh.simplices.cols(); ++c) row.push_back(mesh.simplices(r, c));
        simp.push_back(row);
    }
    out["simplices"] = simp;
    out["normals"] = rows(mesh.normals);
    if (mesh.truncation_radius)
        out["truncation_radius"] = *mesh.truncation_radius;
    else
        out["truncation_radius"] = nullptr;
    if (!fields.empty()) {
        nlohmann::ordered_json fs = nlohmann::ordered_json::object();
        for (const auto& [name, values] : fields) {
            if (values.size() != mesh.num_vertices())
                throw std::invalid_argument("mesh_to_json: field '" + name + "' has wrong size");
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (int i = 0; i < values.size(); ++i) arr.push_back(values(i));
            fs[name] = arr;
        }
        out["fields"] = fs;
    }
    return out;
}

inline ShrinkerMesh mesh_from_json(const nlohmann::json& js,
                                   std::map<std::string, Eigen::VectorXd>* fields = nullptr) {
    for (const char* key : {"dim_n", "kind", "vertices", "simplices", "normals"})
        if (!js.contains(key))
            throw std::invalid_argument(std::string("mesh_from_json: missing key '") + key + "'");
    ShrinkerMesh mesh;
    mesh.dim_n = js.at("dim_n").get<int>();
    mesh.kind = js.at("kind").get<std::string>();
    const auto& v = js.at("vertices");
    const auto& s = js.at("simplices");
    const auto& n = js.at("normals");
    if (v.empty() || s.empty()) throw std::invalid_argument("mesh_from_json: empty mesh");
    mesh.vertices.resize(v.size(), v[0].size());
    for (std::size_t r = 0; r < v.size(); ++r)
        for (std::size_t c = 0; c < v[r].size(); ++c) mesh.vertices(r, c) = v[r][c].get<double>();
    mesh.simplices.resize(s.size(), s[0].size());
    for (std::size_t r = 0; r < s.size(); ++r)
        for (std::size_t c = 0; c < s[r].size(); ++c) mesh.simplices(r, c) = s[r][c].get<int>();
    mesh.normals.resize(n.size(), n.empty() ? 0 : n[0].size());
    for (std::size_t r = 0; r < n.size(); ++r)
        for (std::size_t c = 0; c < n[r].size(); ++c) mesh.normals(r, c) = n[r][c].get<double>();
    if (js.contains("truncation_radius") && !js.at("truncation_radius").is_null())
        mesh.truncation_radius = js.at("truncation_radius").get<double>();
    if (fields && js.contains("fields")) {
        for (const auto& [name, arr] : js.at("fields").items()) {
            Eigen::VectorXd values(arr.size());
            for (std::size_t i = 0; i < arr.size(); ++i) values(i) = arr[i].get<double>();
            (*fields)[name] = values;
        }
    }
    validate_mesh(mesh);
    return mesh;
}

inline void write_mesh(const ShrinkerMesh& mesh, const std::string& path,
                       const std::map<std::string, Eigen::VectorXd>& fields = {}) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_mesh: cannot open " + path);
    out << mesh_to_json(mesh, fields).dump(2) << "\n";
}

inline ShrinkerMesh read_mesh(const std::string& path,
                              std::map<std::string, Eigen::VectorXd>* fields = nullptr) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_mesh: cannot open " + path);
    nlohmann::json js;
    in >> js;
    return mesh_from_json(js, fields);
}

// coordinate-format sparse text: one "row col value" line per stored entry
inline void write_sparse_coordinate(const Eigen::SparseMatrix<double>& m,
                                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_sparse_coordinate: cannot open " + path);
    out << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
    out.precision(17);
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            out << it.row() << " " << it.col() << " " << it.value() << "\n";
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out.precision(17);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("write_csv: row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 < row.size() ? "," : "\n");
    }
}

}  // namespace shrinkspec
