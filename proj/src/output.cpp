#include "poroflow/output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace poroflow {

OutputError::OutputError(const std::string& path, const std::string& what)
    : std::runtime_error(path + ": " + what), path_(path) {}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw OutputError(dir, "cannot create directory: " + ec.message());
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OutputError(path, "cannot open for writing");
    return out;
}

void check_written(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw OutputError(path, "write failed");
}

void scalar_block(std::ostream& os, const std::string& name, const std::vector<double>& v) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double x : v) os << format_number(x) << "\n";
}

void vector_block(std::ostream& os, const std::string& name, const std::vector<Vec2>& v) {
    os << "VECTORS " << name << " double\n";
    for (const auto& x : v) os << format_number(x.x) << " " << format_number(x.y) << " 0\n";
}

}  // namespace

void write_vtk(const Mesh& mesh, const FieldState& state, const std::string& path,
               const VtkExtras& extras) {
    auto out = open_out(path);
    out << "# vtk DataFile Version 3.0\nporoflow t=" << format_number(state.time)
        << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.node_count() << " double\n";
    for (const auto& x : mesh.nodes) out << format_number(x.x) << " " << format_number(x.y) << " 0\n";
    out << "CELLS " << mesh.element_count() << " " << 5 * mesh.element_count() << "\n";
    for (const auto& e : mesh.elements) out << "4 " << e[0] << " " << e[1] << " " << e[2] << " " << e[3] << "\n";
    out << "CELL_TYPES " << mesh.element_count() << "\n";
    for (int e = 0; e < mesh.element_count(); ++e) out << "9\n";

    out << "POINT_DATA " << mesh.node_count() << "\n";
    vector_block(out, "u", state.u);
    scalar_block(out, "p", state.p);
    if (!state.s_n.empty()) scalar_block(out, "S_n", state.s_n);
    for (const auto& [name, v] : extras.point_scalars) scalar_block(out, name, v);

    out << "CELL_DATA " << mesh.element_count() << "\n";
    scalar_block(out, "phi", state.phi);
    vector_block(out, "v", state.v);
    for (const auto& [name, v] : extras.cell_scalars) scalar_block(out, name, v);
    check_written(out, path);
}

VtkFile read_vtk(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw OutputError(path, "cannot open for reading");
    VtkFile f;
    std::string line;
    for (int i = 0; i < 4; ++i) std::getline(in, line);
    std::string tok;
    std::map<std::string, VtkArray>* section = nullptr;
    int count = 0;
    auto read_tokens = [&](std::vector<std::string>& dst, int n) {
        for (int i = 0; i < n; ++i) {
            if (!(in >> tok)) throw OutputError(path, "truncated file");
            dst.push_back(tok);
        }
    };
    while (in >> tok) {
        if (tok == "POINTS") {
            in >> f.points >> tok;
            read_tokens(f.point_tokens, 3 * f.points);
        } else if (tok == "CELLS") {
            int size = 0;
            in >> f.cells >> size;
            std::vector<std::string> skip;
            read_tokens(skip, size);
        } else if (tok == "CELL_TYPES") {
            int n = 0;
            in >> n;
            std::vector<std::string> skip;
            read_tokens(skip, n);
        } else if (tok == "POINT_DATA") {
            in >> count;
            section = &f.point_data;
        } else if (tok == "CELL_DATA") {
            in >> count;
            section = &f.cell_data;
        } else if (tok == "SCALARS" || tok == "VECTORS") {
            if (!section) throw OutputError(path, "data array outside a data section");
            std::string name, type;
            in >> name >> type;
            VtkArray arr;
            if (tok == "SCALARS") {
                in >> arr.components;
                std::string lt, table;
                in >> lt >> table;
            } else {
                arr.components = 3;
            }
            read_tokens(arr.tokens, count * arr.components);
            for (const auto& t : arr.tokens) arr.values.push_back(std::stod(t));
            (*section)[name] = std::move(arr);
        } else {
            throw OutputError(path, "unexpected token '" + tok + "'");
        }
    }
    return f;
}

void write_timeseries(const Timeseries& series, const std::string& path) {
    auto out = open_out(path);
    bool first = true;
    for (const auto& c : timeseries_columns) {
        out << (first ? "" : ",") << c;
        first = false;
    }
    for (const auto& c : series.extra_columns) out << "," << c;
    out << "\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    for (const auto& r : series.rows) {
        out << format_number(r.time) << "," << r.scheme << "," << format_number(r.tol) << ","
            << r.outer_iters << "," << r.flow_solves << "," << r.solid_solves << ","
            << format_number(r.residual) << "," << opt(r.error_u) << "," << opt(r.error_p);
        for (std::size_t i = 0; i < series.extra_columns.size(); ++i) {
            out << "," << (i < r.extra.size() ? opt(r.extra[i]) : std::string());
        }
        out << "\n";
    }
    check_written(out, path);
}

void write_table(const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, const std::string& path) {
    auto out = open_out(path);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_number(r[i]);
        out << "\n";
    }
    check_written(out, path);
}

void write_manifest(const Manifest& m, const std::string& path) {
    auto out = open_out(path);
    out << "poroflow run manifest\n";
    out << "version: " << "1.0.0" << "\n";
    out << "scenario: " << m.scenario << "\n";
    out << "status: " << m.status << "\n";
    out << "exit_code: " << m.exit_code << "\n";
    out << "\n[results]\n";
    for (const auto& [k, v] : m.results) out << k << " = " << v << "\n";
    out << "\n[files]\n";
    for (const auto& f : m.files) out << f << "\n";
    out << "\n[resolved configuration]\n" << m.resolved;
    out << "\n[configuration source]\n" << m.config_echo;
    if (!m.config_echo.empty() && m.config_echo.back() != '\n') out << "\n";
    check_written(out, path);
}

}  // namespace poroflow
